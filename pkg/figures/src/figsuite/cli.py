"""Command line front end: ``figures render-all`` and ``figures render``."""

from __future__ import annotations

import argparse
import sys

from . import KINDS, FigureSpec, render, render_all
from .readers import FigureDataError


def _parse_formats(text: str) -> tuple[str, ...]:
    formats = tuple(part.strip() for part in text.split(",") if part.strip())
    bad = [fmt for fmt in formats if fmt not in ("png", "pdf")]
    if bad:
        raise argparse.ArgumentTypeError(
            f"unsupported format {bad[0]!r} (choose from png, pdf)")
    if not formats:
        raise argparse.ArgumentTypeError("no output formats given")
    return formats


def _parse_labels(text: str) -> list[str]:
    return [part.strip() for part in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render figures from flocking-control run directories.")
    sub = parser.add_subparsers(dest="command")

    p_all = sub.add_parser(
        "render-all",
        help="draw every figure a run or sweep directory supports")
    p_all.add_argument("directory", help="run or sweep output directory")
    p_all.add_argument("--formats", type=_parse_formats, default=("png",),
                       help="comma-separated image formats (png, pdf)")
    p_all.add_argument("--dpi", type=int, default=150)

    p_one = sub.add_parser(
        "render", help="draw a single figure from explicit input tables")
    p_one.add_argument("kind", choices=sorted(KINDS))
    p_one.add_argument("inputs", nargs="+", help="input CSV files")
    p_one.add_argument("-o", "--output", required=True,
                       help="output image path (.png or .pdf)")
    p_one.add_argument("--labels", type=_parse_labels, default=None,
                       help="comma-separated legend labels, one per input")
    p_one.add_argument("--log-scale", dest="log_scale",
                       action=argparse.BooleanOptionalAction, default=None,
                       help="force the value axis to (not) use a log scale")
    p_one.add_argument("--dpi", type=int, default=150)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    if args.command is None:
        parser.print_help()
        return 1

    try:
        if args.command == "render-all":
            written = render_all(args.directory, formats=args.formats,
                                 dpi=args.dpi)
            for path in written:
                print(path)
        else:
            spec = FigureSpec(kind=args.kind, inputs=args.inputs,
                              output=args.output, labels=args.labels,
                              log_scale=args.log_scale, dpi=args.dpi)
            print(render(spec))
    except (FigureDataError, ValueError, OSError) as exc:
        print(f"figures: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
