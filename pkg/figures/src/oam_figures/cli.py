"""Command-line entry point: render figures from simulation output files."""

import argparse
import sys

from .io import SchemaError
from .plots import FigureSpec, plot_chi_scan, plot_kernel

EXIT_OK = 0
EXIT_INPUT = 2


def build_parser():
    parser = argparse.ArgumentParser(
        prog="oam-figures",
        description="Render figures from oam-memory CSV and binary outputs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    scan = sub.add_parser("chi-scan", help="overlap-scan curves from a CSV")
    scan.add_argument("csv", help="scan CSV written by `oam-memory scan-chi`")
    scan.add_argument("--out", required=True, help="output image (.svg/.png)")
    scan.add_argument("--y-column", default=None,
                      help="override the plotted column")
    scan.add_argument("--title", default=None)

    kern = sub.add_parser("kernel", help="|K| heatmap from a binary dump")
    kern.add_argument("base", help="path base of <base>.bin + <base>.json")
    kern.add_argument("--out", required=True, help="output image (.svg/.png)")
    kern.add_argument("--no-overlay", action="store_true",
                      help="skip the leading-mode overlay")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "chi-scan":
            spec = FigureSpec(input_path=args.csv, output_path=args.out,
                              y_column=args.y_column, title=args.title)
            summary = plot_chi_scan(spec)
            print(f"wrote {args.out}: {summary['curves']} curves, "
                  f"{summary['markers']} peak markers, {summary['rows']} rows")
        else:
            summary = plot_kernel(args.base, args.out,
                                  overlay_leading=not args.no_overlay)
            print(f"wrote {args.out}: shape {summary['shape']}")
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
