#!/usr/bin/env python3
"""Run the verification suites across a (k, lambda) grid and print a summary table.

This is a convenience wrapper around the library suites for interactive use;
the supported entry point with report output and exit-code contracts is
``ale-lab verify``.

Example:
    python3 scripts/run_verify.py --k 1 2 3 --lam 0.5 1.0 2.0 --suite gh
"""

from __future__ import annotations

import argparse
import sys
import time

from ale_lab.suites import SUITE_NAMES, run_suites


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--k", type=int, nargs="+", default=[1],
                        help="cyclic orders to sweep (default: 1)")
    parser.add_argument("--lam", type=float, nargs="+", default=[1.0],
                        help="separation scales to sweep (default: 1.0)")
    parser.add_argument("--suite", choices=list(SUITE_NAMES) + ["all"], default="all",
                        help="which suite to run at each grid point (default: all)")
    parser.add_argument("--tol", type=float, default=1.0,
                        help="global tolerance scale (default: 1.0)")
    parser.add_argument("--verbose", action="store_true",
                        help="print every check line, not just failures")
    args = parser.parse_args(argv)

    names = list(SUITE_NAMES) if args.suite == "all" else [args.suite]
    t0 = time.perf_counter()
    all_passed = True
    for k in args.k:
        for lam in args.lam:
            results = run_suites(names, k=k, lam=lam, tol_scale=args.tol)
            for result in results:
                status = "PASS" if result.passed else "FAIL"
                all_passed = all_passed and result.passed
                print(f"k={k} lam={lam:g} {result.suite}: {status} "
                      f"({len(result.checks)} checks, {result.duration_s:.2f}s)")
                for line in result.lines():
                    if args.verbose or "FAIL" in line:
                        print(f"  {line}")
    total = time.perf_counter() - t0
    print(f"{'PASS' if all_passed else 'FAIL'} in {total:.1f}s")
    return 0 if all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
