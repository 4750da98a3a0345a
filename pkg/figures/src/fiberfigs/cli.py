"""Command-line entry points for the figure scripts.

Each subcommand reads only the documented CSV schemas and writes one image.
Malformed input exits with status 1.
"""

from __future__ import annotations

import argparse
import sys

from . import SchemaError
from .plots import plot_eigenfunction, plot_evolution, plot_loglog, plot_spectrum


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fiberfigs",
        description="Render figures from fiberlaser CSV artifacts.")
    sub = parser.add_subparsers(dest="kind", required=True)

    p = sub.add_parser("spectrum", help="eigenvalues + essential spiral + unit circle")
    p.add_argument("--eigenvalues", required=True, help="eigenvalues.csv")
    p.add_argument("--curve", required=True, help="essential_curve.csv")
    p.add_argument("--out", required=True)
    p.add_argument("--title")

    p = sub.add_parser("evolution", help="per-component power profiles")
    p.add_argument("--in", dest="infile", required=True, help="evolution.csv")
    p.add_argument("--out", required=True)
    p.add_argument("--title")

    p = sub.add_parser("eigenfunction", help="eigenfunction amplitude overlay")
    p.add_argument("--in", dest="infile", required=True, help="eigenfunction CSV")
    p.add_argument("--theory", help="reference eigenfunction CSV to overlay")
    p.add_argument("--out", required=True)
    p.add_argument("--title")

    p = sub.add_parser("loglog", help="error curve with fitted slope")
    p.add_argument("--in", dest="infile", required=True, help="two-column error CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--title")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.kind == "spectrum":
            plot_spectrum(args.eigenvalues, args.curve, args.out, title=args.title)
        elif args.kind == "evolution":
            plot_evolution(args.infile, args.out, title=args.title)
        elif args.kind == "eigenfunction":
            plot_eigenfunction(args.infile, args.out, theory_csv=args.theory,
                               title=args.title)
        else:
            plot_loglog(args.infile, args.out, title=args.title)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
