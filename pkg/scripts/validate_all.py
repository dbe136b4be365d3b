#!/usr/bin/env python3
"""Run every property suite on the builtin control game and summarize.

Usage: python scripts/validate_all.py [--json report.json]
"""

import argparse
import json
import sys
import time
from pathlib import Path

from gnelearn.validate import SUITES, run_suite


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--json", help="also write the aggregate report here")
    args = parser.parse_args()

    reports = {}
    all_ok = True
    for name in sorted(SUITES):
        t0 = time.time()
        report = run_suite(name)
        dt = time.time() - t0
        reports[name] = report
        all_ok &= report["passed"]
        n_ok = sum(c["passed"] for c in report["checks"])
        print(f"{name:16s} {'PASS' if report['passed'] else 'FAIL'} "
              f"({n_ok}/{len(report['checks'])} checks, {dt:.1f}s)")
        for check in report["checks"]:
            if not check["passed"]:
                print(f"    failed: {check}")
    if args.json:
        Path(args.json).write_text(json.dumps(reports, indent=2, sort_keys=True,
                                              default=float) + "\n")
        print(f"wrote {args.json}")
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main())
