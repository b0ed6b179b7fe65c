"""Command-line entry: render <signatures.csv> <out_dir> [--format png|svg]."""

from __future__ import annotations

import argparse
import sys

from citeflow_render.render import SignatureTableError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render",
        description="Render temporal bucket signature CSVs as stacked bar charts.",
    )
    parser.add_argument("signatures", help="combined signatures.csv")
    parser.add_argument("out_dir", help="directory for the images")
    parser.add_argument("--format", choices=("png", "svg"), default="png")
    args = parser.parse_args(argv)
    try:
        written = render(args.signatures, args.out_dir, fmt=args.format)
    except FileNotFoundError as exc:
        print(f"render: {exc}", file=sys.stderr)
        return 2
    except SignatureTableError as exc:
        print(f"render: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
