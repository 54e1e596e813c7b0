#!/usr/bin/env python3
"""Run the bundled three-region study end to end and write the report bundle.

Equivalent to `inertia-market case-study --out <dir>`, kept as a script so
the experiment is greppable and hackable.
"""

import argparse
import sys

from inertia_market.cli import cli_dispatch


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/case_study", help="report directory")
    args = parser.parse_args()
    return cli_dispatch(["case-study", "--out", args.out])


if __name__ == "__main__":
    sys.exit(main())
