"""Good-subgroup identification and constrained super-arm selection.

A group is satisfied by a subset of its members when the group's reward
aggregator, applied to per-arm (estimated or true) second-outcome values,
meets the group threshold; comparison is non-strict. The super-arm solver
picks, under a cardinality budget, the highest index-sum super arm whose
intersection with every touched group is such a *good* subgroup.

For additive super-arm reward and pairwise-disjoint groups the solver is
exact: each group contributes independently, so a per-group table of the
best good subset at each cardinality plus a cardinality knapsack across
groups yields the optimum (alpha = 1). Groups larger than the exhaustive
limit get their tables from a deterministic greedy candidate sweep instead,
which keeps feasibility guarantees but makes the solver approximate there.
Non-additive super-arm rewards fall back to plain greedy (alpha = 1 - 1/e
for monotone submodular rewards).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import InputError, UnsupportedSizeError

EXHAUSTIVE_LIMIT = 20

GROUP_REWARD_KINDS = ("Sum", "DixitStiglitz", "Variance", "NegLeakageSum")


@dataclass(frozen=True)
class GroupRewardModel:
    """Aggregator v_G mapping selected members' second-outcome values to a group reward.

    kinds:
      Sum             -- sum of values (coordinate-wise nondecreasing)
      DixitStiglitz   -- sum over partition cells of (sum of value^3)^(1/3);
                         `partition` maps arm id -> cell key
      Variance        -- population variance of values (not monotone)
      NegLeakageSum   -- minus the sum of values: treats the second outcome
                         as a loss, so satisfaction means total loss below
                         the (negated) threshold; coordinate-wise nonincreasing
    """

    kind: str = "Sum"
    partition: Mapping[int, object] | None = field(default=None, hash=False)

    def __post_init__(self) -> None:
        if self.kind not in GROUP_REWARD_KINDS:
            raise InputError(f"unknown group reward kind {self.kind!r}")
        if self.kind == "DixitStiglitz" and self.partition is None:
            raise InputError("DixitStiglitz requires a partition map")

    @property
    def monotonicity(self) -> int:
        """+1 nondecreasing, -1 nonincreasing, 0 neither (per coordinate)."""
        if self.kind in ("Sum", "DixitStiglitz"):
            return +1
        if self.kind == "NegLeakageSum":
            return -1
        return 0

    def value(self, values: Iterable[float], members: Iterable[int] = ()) -> float:
        vals = [float(v) for v in values]
        if not vals:
            return 0.0
        if self.kind == "Sum":
            return sum(vals)
        if self.kind == "NegLeakageSum":
            return -sum(vals)
        if self.kind == "Variance":
            n = len(vals)
            mean = sum(vals) / n
            return sum((v - mean) ** 2 for v in vals) / n
        cells: dict[object, float] = {}
        part = self.partition
        for m, v in zip(members, vals):
            key = part[m]
            cells[key] = cells.get(key, 0.0) + v * v * v
        total = 0.0
        for c in cells.values():
            total += abs(c) ** (1.0 / 3.0) if c >= 0 else -(abs(c) ** (1.0 / 3.0))
        return total


@dataclass(frozen=True)
class Group:
    """A disjoint set of base arms sharing one satisfaction threshold."""

    id: object
    member_arm_ids: frozenset[int]
    threshold: float
    aggregator: GroupRewardModel = field(default_factory=GroupRewardModel)

    def __post_init__(self) -> None:
        object.__setattr__(self, "member_arm_ids", frozenset(self.member_arm_ids))


@dataclass(frozen=True)
class SuperArmRewardModel:
    """Super-arm reward; only the additive form is built in."""

    kind: str = "Sum"
    cardinality_budget: int = 1

    def __post_init__(self) -> None:
        if self.kind != "Sum":
            raise InputError("only Sum super-arm reward is supported")
        if self.cardinality_budget < 1:
            raise InputError("cardinality budget must be >= 1")


# -- exhaustive subset machinery ---------------------------------------------------


def _subset_value_array(members: list[int], values: np.ndarray, model: GroupRewardModel) -> np.ndarray:
    """Aggregator value for every one of the 2^n subsets (bitmask order)."""
    n = len(members)
    size = 1 << n
    if model.kind in ("Sum", "NegLeakageSum"):
        sums = np.zeros(size)
        for i in range(n):
            half = 1 << i
            sums[half : 2 * half] = sums[:half] + values[i]
        return -sums if model.kind == "NegLeakageSum" else sums
    if model.kind == "Variance":
        sums = np.zeros(size)
        sqs = np.zeros(size)
        for i in range(n):
            half = 1 << i
            sums[half : 2 * half] = sums[:half] + values[i]
            sqs[half : 2 * half] = sqs[:half] + values[i] ** 2
        counts = np.bitwise_count(np.arange(size, dtype=np.uint64)).astype(float)
        counts[0] = 1.0  # avoid 0/0; mask 0 is excluded by callers
        mean = sums / counts
        return sqs / counts - mean * mean
    # DixitStiglitz: per-cell cubic sums, then cube roots
    cells: dict[object, list[int]] = {}
    for i, m in enumerate(members):
        cells.setdefault(model.partition[m], []).append(i)
    total = np.zeros(size)
    for idxs in cells.values():
        in_cell = set(idxs)
        cell_cubes = np.zeros(size)
        for i in range(n):
            half = 1 << i
            add = values[i] ** 3 if i in in_cell else 0.0
            cell_cubes[half : 2 * half] = cell_cubes[:half] + add
        # cells without selected members contribute exactly zero
        total += np.cbrt(cell_cubes)
    return total


def _check_size(group: Group) -> list[int]:
    members = sorted(group.member_arm_ids)
    if len(members) > EXHAUSTIVE_LIMIT:
        raise UnsupportedSizeError(
            f"group {group.id!r} has {len(members)} members; exhaustive subset "
            f"evaluation is capped at {EXHAUSTIVE_LIMIT}"
        )
    return members


def enumerate_good_subgroups(group: Group, estimates: Mapping[int, float]) -> set[frozenset[int]]:
    """All nonempty subsets of the group whose aggregated estimate meets the threshold."""
    members = _check_size(group)
    missing = [m for m in members if m not in estimates]
    if missing:
        raise InputError(f"estimates missing for arms {missing}")
    if not members:
        return set()
    vals = np.array([estimates[m] for m in members], dtype=float)
    subset_vals = _subset_value_array(members, vals, group.aggregator)
    good = set()
    for mask in range(1, 1 << len(members)):
        if subset_vals[mask] >= group.threshold:
            good.add(frozenset(members[i] for i in range(len(members)) if mask >> i & 1))
    return good


def pruned_enumerate_good_subgroups(group: Group, estimates: Mapping[int, float]) -> set[frozenset[int]]:
    """Same output as enumerate_good_subgroups, skipping evaluations that
    inclusion monotonicity already decides (supersets of good sets for
    value-nondecreasing aggregators over nonnegative inputs, subsets of good
    sets for the negated-loss aggregator over nonnegative inputs)."""
    members = _check_size(group)
    n = len(members)
    vals = np.array([estimates[m] for m in members], dtype=float)
    model = group.aggregator
    direction = 0
    if (vals >= 0).all():
        if model.kind in ("Sum", "DixitStiglitz"):
            direction = +1
        elif model.kind == "NegLeakageSum":
            direction = -1
    good_mask = np.zeros(1 << n, dtype=bool)
    masks = range(1, 1 << n) if direction >= 0 else range((1 << n) - 1, 0, -1)
    for mask in masks:
        decided = False
        if direction == +1:
            sub = mask
            while sub:
                low = sub & -sub
                if good_mask[mask ^ low]:
                    good_mask[mask] = True
                    decided = True
                    break
                sub ^= low
        elif direction == -1:
            for i in range(n):
                sup = mask | (1 << i)
                if sup != mask and good_mask[sup]:
                    good_mask[mask] = True
                    decided = True
                    break
        if not decided:
            sel = [i for i in range(n) if mask >> i & 1]
            v = model.value(vals[sel], [members[i] for i in sel])
            good_mask[mask] = v >= group.threshold
    return {
        frozenset(members[i] for i in range(n) if mask >> i & 1)
        for mask in range(1, 1 << n)
        if good_mask[mask]
    }


# -- per-group cardinality tables --------------------------------------------------


def good_subset_table(
    group: Group,
    satisfying_estimates: Mapping[int, float],
    reward_indices: Mapping[int, float],
    max_size: int,
) -> dict[int, tuple[float, frozenset[int]]]:
    """Best reward-index sum over *good* subsets, per subset cardinality.

    Exhaustive (exact) for groups within the enumeration limit; larger
    groups get a deterministic greedy candidate sweep that mixes the
    reward-index ordering with the satisfying-value ordering.
    """
    members = sorted(group.member_arm_ids)
    n = len(members)
    cap = min(n, max_size)
    if n <= EXHAUSTIVE_LIMIT:
        vals = np.array([satisfying_estimates[m] for m in members], dtype=float)
        rews = np.array([reward_indices[m] for m in members], dtype=float)
        subset_vals = _subset_value_array(members, vals, group.aggregator)
        rsums = np.zeros(1 << n)
        for i in range(n):
            half = 1 << i
            rsums[half : 2 * half] = rsums[:half] + rews[i]
        counts = np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(int)
        table: dict[int, tuple[float, int]] = {}
        good = subset_vals >= group.threshold
        good[0] = False
        for mask in np.flatnonzero(good):
            c = counts[mask]
            if c > cap:
                continue
            cur = table.get(c)
            if cur is None or rsums[mask] > cur[0] or (rsums[mask] == cur[0] and mask < cur[1]):
                table[c] = (float(rsums[mask]), int(mask))
        return {
            c: (val, frozenset(members[i] for i in range(n) if mask >> i & 1))
            for c, (val, mask) in table.items()
        }
    return _greedy_subset_table(group, members, satisfying_estimates, reward_indices, cap)


def _greedy_subset_table(group, members, satisfying_estimates, reward_indices, cap):
    model = group.aggregator
    if model.kind == "Variance":
        raise UnsupportedSizeError(
            f"group {group.id!r} exceeds the exhaustive limit and its variance "
            "aggregator admits no greedy table construction"
        )
    by_reward = sorted(members, key=lambda m: (-reward_indices[m], m))
    sat_sign = -1.0 if model.monotonicity < 0 else 1.0
    by_sat = sorted(members, key=lambda m: (-sat_sign * satisfying_estimates[m], m))
    orderings = [by_reward, by_sat]
    if model.kind == "DixitStiglitz":
        # cell-diverse variants: concentrating members in one partition cell
        # dampens the aggregate, so spreading across cells is the candidate
        # that actually reaches thresholds
        for base in (by_reward, by_sat):
            diverse, seen_cells = [], set()
            for m in base:
                cell = model.partition[m]
                if cell not in seen_cells:
                    diverse.append(m)
                    seen_cells.add(cell)
            orderings.append(diverse + [m for m in base if m not in set(diverse)])
    table: dict[int, tuple[float, frozenset[int]]] = {}
    for c in range(1, cap + 1):
        # a handful of prefix mixes per ordering keeps the sweep linear in c
        j_grid = sorted({0, 1, 2, c // 2, c - 1, c} & set(range(c + 1)))
        candidates: set[tuple[int, ...]] = set()
        primary = orderings[0]
        for fill in orderings:
            for j in j_grid:
                chosen = list(fill[:j])
                seen = set(chosen)
                for m in primary:
                    if len(chosen) == c:
                        break
                    if m not in seen:
                        chosen.append(m)
                        seen.add(m)
                if len(chosen) == c:
                    candidates.add(tuple(sorted(chosen)))
        best: tuple[float, tuple[int, ...]] | None = None
        for key in sorted(candidates):
            chosen = list(key)
            v = model.value([satisfying_estimates[m] for m in chosen], chosen)
            if v >= group.threshold:
                r = sum(reward_indices[m] for m in chosen)
                if best is None or r > best[0] or (r == best[0] and key < best[1]):
                    best = (r, key)
        if best is not None:
            table[c] = (best[0], frozenset(best[1]))
    return table


# -- knapsack over disjoint groups -------------------------------------------------


def combine_tables(
    tables: list[tuple[object, dict[int, tuple[float, frozenset[int]]]]],
    budget: int,
) -> list[tuple[float, dict[object, frozenset[int]]] | None]:
    """Max-plus convolution across groups; entry c is the best total at exactly c arms."""
    NEG = float("-inf")
    best: list[float] = [0.0] + [NEG] * budget
    choice: list[dict[object, frozenset[int]]] = [dict() for _ in range(budget + 1)]
    for gid, table in sorted(tables, key=lambda kv: str(kv[0])):
        new_best = [NEG] * (budget + 1)
        new_choice: list[dict[object, frozenset[int]] | None] = [None] * (budget + 1)
        for c_prev in range(budget + 1):
            if best[c_prev] == NEG:
                continue
            # skip the group entirely
            if best[c_prev] > new_best[c_prev]:
                new_best[c_prev] = best[c_prev]
                new_choice[c_prev] = choice[c_prev]
            for c_g, (val, subset) in table.items():
                c_tot = c_prev + c_g
                if c_tot > budget:
                    continue
                cand = best[c_prev] + val
                if cand > new_best[c_tot]:
                    new_best[c_tot] = cand
                    upd = dict(choice[c_prev])
                    upd[gid] = subset
                    new_choice[c_tot] = upd
        best = new_best
        choice = [c if c is not None else dict() for c in new_choice]
    return [None if best[c] == float("-inf") else (best[c], choice[c]) for c in range(budget + 1)]


def _top_k(arm_ids, reward_indices, k):
    ranked = sorted(arm_ids, key=lambda m: (-reward_indices[m], m))
    return set(ranked[: min(k, len(ranked))])


def select_super_arm(
    arm_ids: Iterable[int],
    reward_indices: Mapping[int, float],
    groups: Iterable[Group],
    good_subgroups: Mapping[object, set[frozenset[int]]] | None,
    model: SuperArmRewardModel,
    exactly_k: bool = False,
) -> tuple[set[int], dict]:
    """Constrained argmax of the additive index sum under the budget.

    Any arm outside every group acts as its own always-good singleton.
    When the union of good subgroups is empty the constraint drops and the
    plain top-K selection is returned. The solver fills the largest
    attainable cardinality (so the argmax is invariant under positive
    affine rescaling of all indices) and reports diagnostics: whether the
    fallback fired and whether an exactly-K target was unattainable.
    """
    arm_ids = sorted(arm_ids)
    k = min(model.cardinality_budget, len(arm_ids))
    info = {"fallback_unconstrained": False, "cardinality_shortfall": False}
    if k == 0:
        info["empty_scene"] = True
        return set(), info
    missing = [m for m in arm_ids if m not in reward_indices]
    if missing:
        raise InputError(f"reward indices missing for arms {missing}")
    groups = list(groups)
    if good_subgroups is None or all(not good_subgroups.get(g.id) for g in groups):
        info["fallback_unconstrained"] = True
        return _top_k(arm_ids, reward_indices, k), info

    grouped = set()
    tables: list[tuple[object, dict[int, tuple[float, frozenset[int]]]]] = []
    for g in groups:
        grouped |= g.member_arm_ids
        table: dict[int, tuple[float, frozenset[int]]] = {}
        for subset in good_subgroups.get(g.id, ()):  # only enumerated good subsets are playable
            c = len(subset)
            if c > k:
                continue
            val = sum(reward_indices[m] for m in subset)
            key = tuple(sorted(subset))
            cur = table.get(c)
            if cur is None or val > cur[0] or (val == cur[0] and key < tuple(sorted(cur[1]))):
                table[c] = (val, frozenset(subset))
        tables.append((g.id, table))
    for m in arm_ids:
        if m not in grouped:
            tables.append((f"__free_{m}", {1: (reward_indices[m], frozenset([m]))}))

    combos = combine_tables(tables, k)
    attainable = [c for c in range(k + 1) if combos[c] is not None]
    target = max(attainable)
    if exactly_k and target < k:
        info["cardinality_shortfall"] = True
    _, chosen = combos[target]
    super_arm: set[int] = set()
    for subset in chosen.values():
        super_arm |= subset
    return super_arm, info


def greedy_submodular_max(
    candidates: Iterable[int], set_function: Callable[[set[int]], float], budget: int
) -> set[int]:
    """Standard greedy for monotone submodular maximization under a size budget."""
    remaining = sorted(candidates)
    chosen: set[int] = set()
    current = set_function(chosen)
    while remaining and len(chosen) < budget:
        best_gain, best_m = None, None
        for m in remaining:
            gain = set_function(chosen | {m}) - current
            if best_gain is None or gain > best_gain:
                best_gain, best_m = gain, m
        chosen.add(best_m)
        remaining.remove(best_m)
        current += best_gain
    return chosen
