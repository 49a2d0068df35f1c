"""Kernels for the two-output GP over base-arm contexts.

Single-output families: RBF, Matern (nu in {1.5, 2.5}), Linear, and ExpNorm,
an exponential kernel on the *unsquared* Euclidean norm, ``v *
exp(-||x - x'|| / (2 l^2))``. A pair of outputs is either independent
(block-diagonal matrix kernel, possibly different families per output) or
coupled through an intrinsic-coregionalization matrix built from a shared
base kernel and a cross-correlation coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

VALID_FAMILIES = ("RBF", "Matern", "Linear", "ExpNorm")


@dataclass(frozen=True)
class KernelSpec:
    """One output's covariance function."""

    family: str = "RBF"
    lengthscale: float = 1.0
    variance: float = 1.0
    matern_nu: float = 2.5

    def __post_init__(self) -> None:
        if self.family not in VALID_FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; expected one of {VALID_FAMILIES}")
        if not self.lengthscale > 0:
            raise ValueError("lengthscale must be positive")
        if not self.variance > 0:
            raise ValueError("variance must be positive")
        if self.family == "Matern" and self.matern_nu not in (1.5, 2.5):
            raise ValueError("matern_nu must be 1.5 or 2.5")


@dataclass(frozen=True)
class TwoOutputKernelSpec:
    """Matrix-valued covariance for the two base-arm outcomes.

    With ``cross_correlation == 0`` the 2x2 kernel is diagonal,
    ``diag(k1(x, x'), k2(x, x'))``, and the outputs may use different
    families. A nonzero ``cross_correlation`` rho couples the outputs
    through a shared base kernel: ``k_ij(x, x') = C_ij * k_base(x, x')``
    with ``C = [[v1, rho*sqrt(v1 v2)], [rho*sqrt(v1 v2), v2]]``, which is
    positive semidefinite for rho in [-1, 1]. Both outputs must then share
    family, lengthscale and (for Matern) nu.
    """

    output1: KernelSpec = field(default_factory=KernelSpec)
    output2: KernelSpec = field(default_factory=KernelSpec)
    cross_correlation: float = 0.0

    def __post_init__(self) -> None:
        if not -1.0 <= self.cross_correlation <= 1.0:
            raise ValueError("cross_correlation must lie in [-1, 1]")
        if self.cross_correlation != 0.0:
            same_shape = (
                self.output1.family == self.output2.family
                and self.output1.lengthscale == self.output2.lengthscale
                and (self.output1.family != "Matern" or self.output1.matern_nu == self.output2.matern_nu)
            )
            if not same_shape:
                raise ValueError(
                    "cross-correlated outputs require a shared base kernel "
                    "(same family, lengthscale and matern_nu)"
                )

    @property
    def coregionalization(self) -> np.ndarray:
        v1, v2 = self.output1.variance, self.output2.variance
        off = self.cross_correlation * np.sqrt(v1 * v2)
        return np.array([[v1, off], [off, v2]])

    def output_spec(self, j: int) -> KernelSpec:
        if j not in (0, 1):
            raise ValueError("output index must be 0 or 1")
        return self.output1 if j == 0 else self.output2


def _as_2d(X) -> np.ndarray:
    A = np.asarray(X, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    return A


def _sq_dists(X: np.ndarray, X2: np.ndarray) -> np.ndarray:
    # ||x - x'||^2 via the expanded product; clip negatives from rounding.
    sq = (X * X).sum(axis=1)[:, None] + (X2 * X2).sum(axis=1)[None, :] - 2.0 * X @ X2.T
    return np.maximum(sq, 0.0)


def kernel_matrix(spec: KernelSpec, X, X2=None) -> np.ndarray:
    """Gram matrix k(X, X2) for a single output, shape (n, m)."""
    X = _as_2d(X)
    X2 = X if X2 is None else _as_2d(X2)
    if X.shape[1] != X2.shape[1]:
        raise ValueError(f"context dimension mismatch: {X.shape[1]} vs {X2.shape[1]}")
    if spec.family == "Linear":
        return spec.variance * (X @ X2.T)
    d2 = _sq_dists(X, X2)
    l = spec.lengthscale
    if spec.family == "RBF":
        return spec.variance * np.exp(-0.5 * d2 / (l * l))
    d = np.sqrt(d2)
    if spec.family == "ExpNorm":
        return spec.variance * np.exp(-d / (2.0 * l * l))
    # Matern
    if spec.matern_nu == 1.5:
        z = np.sqrt(3.0) * d / l
        return spec.variance * (1.0 + z) * np.exp(-z)
    z = np.sqrt(5.0) * d / l
    return spec.variance * (1.0 + z + z * z / 3.0) * np.exp(-z)


def kernel_eval(spec: TwoOutputKernelSpec, x, x2) -> np.ndarray:
    """The 2x2 matrix kernel evaluated at a single pair of contexts."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.shape != x2.shape:
        raise ValueError(f"context dimension mismatch: {x.shape} vs {x2.shape}")
    if spec.cross_correlation != 0.0:
        base = KernelSpec(
            family=spec.output1.family,
            lengthscale=spec.output1.lengthscale,
            variance=1.0,
            matern_nu=spec.output1.matern_nu,
        )
        k = kernel_matrix(base, x[None, :], x2[None, :])[0, 0]
        return spec.coregionalization * k
    k11 = kernel_matrix(spec.output1, x[None, :], x2[None, :])[0, 0]
    k22 = kernel_matrix(spec.output2, x[None, :], x2[None, :])[0, 0]
    return np.array([[k11, 0.0], [0.0, k22]])


def output_gram(spec: TwoOutputKernelSpec, X, X2=None, j: int = 0) -> np.ndarray:
    """Single-output Gram k_jj(X, X2), including any coregionalization scale."""
    if spec.cross_correlation == 0.0:
        return kernel_matrix(spec.output_spec(j), X, X2)
    base = KernelSpec(
        family=spec.output1.family,
        lengthscale=spec.output1.lengthscale,
        variance=1.0,
        matern_nu=spec.output1.matern_nu,
    )
    return spec.coregionalization[j, j] * kernel_matrix(base, X, X2)


def output_diag(spec: TwoOutputKernelSpec, X, j: int = 0) -> np.ndarray:
    """Diagonal of the single-output Gram without forming the matrix."""
    X = _as_2d(X)
    if spec.cross_correlation == 0.0:
        ks = spec.output_spec(j)
        if ks.family == "Linear":
            return ks.variance * (X * X).sum(axis=1)
        return np.full(X.shape[0], ks.variance)
    scale = spec.coregionalization[j, j]
    if spec.output1.family == "Linear":
        return scale * (X * X).sum(axis=1)
    return np.full(X.shape[0], scale)


def joint_diag(spec: TwoOutputKernelSpec, X) -> np.ndarray:
    """Diagonal of the interleaved joint Gram, shape (2n,)."""
    X = _as_2d(X)
    out = np.zeros(2 * X.shape[0])
    out[0::2] = output_diag(spec, X, 0)
    out[1::2] = output_diag(spec, X, 1)
    return out


def joint_gram(spec: TwoOutputKernelSpec, X, X2=None) -> np.ndarray:
    """Matrix-kernel Gram over context lists, shape (2n, 2m).

    Rows and columns are interleaved per context: entries (2i + a, 2j + b)
    hold k_ab(x_i, x'_j), matching the stacking of observed outcome pairs.
    """
    X = _as_2d(X)
    X2 = X if X2 is None else _as_2d(X2)
    n, m = X.shape[0], X2.shape[0]
    out = np.zeros((2 * n, 2 * m))
    if spec.cross_correlation != 0.0:
        base = KernelSpec(
            family=spec.output1.family,
            lengthscale=spec.output1.lengthscale,
            variance=1.0,
            matern_nu=spec.output1.matern_nu,
        )
        K = kernel_matrix(base, X, X2)
        C = spec.coregionalization
        for a in range(2):
            for b in range(2):
                out[a::2, b::2] = C[a, b] * K
        return out
    out[0::2, 0::2] = kernel_matrix(spec.output1, X, X2)
    out[1::2, 1::2] = kernel_matrix(spec.output2, X, X2)
    return out
