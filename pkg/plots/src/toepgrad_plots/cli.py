"""Batch figure rendering: plot --csv <path> --figure <kind> --out <path>."""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toepgrad-plot", description=__doc__)
    parser.add_argument("--csv", required=True, help="benchmark CSV to read")
    parser.add_argument("--figure", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--dump-points", default=None,
                        help="also write the plotted point sets as JSON")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        kind=args.figure,
        csv_path=args.csv,
        out_path=args.out,
        dump_points=args.dump_points,
    )
    try:
        render(spec)
    except (SchemaError, OSError) as exc:
        print(f"toepgrad-plot: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
