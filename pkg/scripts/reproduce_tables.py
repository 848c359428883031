#!/usr/bin/env python3
"""Rebuild the two recorded reference result tables from the raw-metric
fixtures - no synthesis tool and no model endpoints involved.

    python scripts/reproduce_tables.py --out results/tables
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from rtlmorph.harness import evaluate_fixtures  # noqa: E402
from rtlmorph.metrics import render_report  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/tables")
    args = ap.parse_args()

    fixtures_dir = os.path.join(os.path.dirname(__file__), "..", "fixtures")
    reports = evaluate_fixtures(
        [os.path.join(fixtures_dir, "table1_timing_control.json"),
         os.path.join(fixtures_dir, "table2_clock_domain.json")],
        out_dir=args.out)
    for category in sorted(reports):
        print(render_report(reports[category], "markdown"))
    print(f"written to {args.out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
