"""convplot: render convergence graphs from an optimizer trace CSV."""
from __future__ import annotations

import argparse
import sys

from .render import PlotSpec, render_convergence


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convplot",
        description="Plot mean best-error vs FES per function/variant from a trace CSV")
    parser.add_argument("--in", dest="input_csv", required=True)
    parser.add_argument("--out", dest="output_image", required=True,
                        help="output image (png, pdf, svg, ...)")
    parser.add_argument("--functions", help="comma-separated function ids to include")
    parser.add_argument("--variants", help="comma-separated variant names to include")
    scale = parser.add_mutually_exclusive_group()
    scale.add_argument("--logy", dest="log_y", action="store_true", default=True)
    scale.add_argument("--liny", dest="log_y", action="store_false")
    parser.add_argument("--sidecar", help="also write the aggregated means as CSV")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(
        input_csv=args.input_csv,
        output_image=args.output_image,
        functions=[int(s) for s in args.functions.split(",")] if args.functions else None,
        variants=args.variants.split(",") if args.variants else None,
        log_y=args.log_y,
        sidecar_csv=args.sidecar,
    )
    try:
        series = render_convergence(spec)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    panels = len({fid for fid, _ in series})
    print(f"wrote {args.output_image} ({panels} panel(s), "
          f"{len(series)} line(s))")
    if args.sidecar:
        print(f"wrote {args.sidecar}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
