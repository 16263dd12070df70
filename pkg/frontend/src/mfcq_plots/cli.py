"""Command-line entry: mfcq-plot --spec <json> --out <dir>."""

from __future__ import annotations

import argparse
import sys

from .figures import PlotSpec, render
from .io import SchemaError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mfcq-plot",
                                     description="Render mfcq training-log figures")
    parser.add_argument("--spec", required=True, help="JSON plot specification")
    parser.add_argument("--out", default="figures", help="output directory")
    args = parser.parse_args(argv)
    try:
        spec = PlotSpec.from_file(args.spec)
        written = render(spec, args.out)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
