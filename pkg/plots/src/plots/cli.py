"""Command-line figure renderer: `gpargmax-plots render`."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import KINDS, FigureRequest, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gpargmax-plots", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    rp = sub.add_parser("render", help="render one figure from engine CSV artifacts")
    rp.add_argument("--kind", required=True, choices=KINDS)
    rp.add_argument("--in", dest="inputs", action="append", required=True,
                    metavar="CSV", help="input CSV (repeatable)")
    rp.add_argument("--out", required=True, help="output image (.png or .svg)")
    rp.add_argument("--title", default="")
    rp.add_argument("--xlabel", default="")
    rp.add_argument("--ylabel", default="")
    rp.add_argument("--label", dest="labels", action="append", default=[],
                    help="series label, one per input (defaults to file stems)")
    args = parser.parse_args(argv)

    try:
        req = FigureRequest(
            kind=args.kind,
            inputs=tuple(Path(p) for p in args.inputs),
            output=Path(args.out),
            title=args.title,
            xlabel=args.xlabel,
            ylabel=args.ylabel,
            labels=tuple(args.labels),
        )
        render(req)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
