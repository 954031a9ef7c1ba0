#!/usr/bin/env python3
"""Solve the six published orbits from their analytic seeds and print a comparison."""
import argparse

from symorbits import shooting
from symorbits.integrate import IntegratorConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rows", default="1,2,3,4,5,6")
    ap.add_argument("--rel-tol", type=float, default=1e-12)
    args = ap.parse_args()
    rows = {int(r) for r in args.rows.split(",")}
    report = shooting.reproduce_table1(IntegratorConfig(rel_tol=args.rel_tol), rows)
    print(f"{'row':>3} {'T0':>6} {'a':>19} {'b':>19} {'error':>9} {'closure':>9} {'kind':>6} {'s':>5}")
    for r in report.rows:
        if not r.ok:
            print(f"{r.row:>3} failed: {r.failure}")
            continue
        rec = r.record
        print(f"{r.row:>3} {rec.T0_label:>6} {rec.a:19.15f} {rec.b:19.15f} {r.error:9.1e} "
              f"{rec.closure_residual:9.1e} {rec.classification:>6} {r.seconds:5.1f}")
    print(f"max error {report.max_error():.2e}; all within 1e-9: {report.all_within(1e-9)}")


if __name__ == "__main__":
    main()
