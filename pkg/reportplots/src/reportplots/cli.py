"""Command-line surface: render --summary PATH --samples PATH --out DIR."""

import argparse
import sys

from .render import RenderError, render


def build_parser():
    parser = argparse.ArgumentParser(
        prog="report-plots",
        description="Render static figures from degenbranch JSON outputs.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="write the four standard figures")
    p.add_argument("--summary", required=True, help="summary.json from a run")
    p.add_argument("--samples", required=True, help="samples.jsonl from the same run")
    p.add_argument("--out", required=True, help="output directory for the figures")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        written = render(args.summary, args.samples, args.out)
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
