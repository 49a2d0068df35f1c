"""plot regret|satisfaction|zeta --in <path> [...] --out <image.png>

`--in` takes one or more per-round CSV paths for the curve commands
(optionally labeled as `label=path`), or the sweep directory for `zeta`.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import plot_regret_curves, plot_satisfaction, plot_zeta_tradeoff
from .readers import SchemaError


def _split_inputs(raw: list[str]) -> list[tuple[str, str | None]]:
    out = []
    for item in raw:
        if "=" in item and not Path(item).exists():
            label, path = item.split("=", 1)
            out.append((path, label))
        else:
            out.append((item, None))
    return out


def cli_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="plot", description=__doc__)
    sub = parser.add_subparsers(dest="command")
    for name in ("regret", "satisfaction"):
        p = sub.add_parser(name)
        p.add_argument("--in", dest="inputs", nargs="+", required=True, metavar="CSV")
        p.add_argument("--out", required=True, type=Path)
    p_zeta = sub.add_parser("zeta")
    p_zeta.add_argument("--in", dest="inputs", required=True, metavar="SWEEP_DIR")
    p_zeta.add_argument("--out", required=True, type=Path)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    if args.command is None:
        parser.print_usage()
        return 1
    try:
        if args.command == "regret":
            plot_regret_curves(_split_inputs(args.inputs), args.out)
        elif args.command == "satisfaction":
            plot_satisfaction(_split_inputs(args.inputs), args.out)
        else:
            plot_zeta_tradeoff(args.inputs, args.out)
    except SchemaError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
