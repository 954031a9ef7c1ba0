#!/usr/bin/env python3
"""Continue the comet family in T0 and check the radius-period scaling."""
import argparse

import numpy as np

from symorbits import shooting


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--start", type=float, default=2.0, help="first T0 in units of pi")
    ap.add_argument("--stop", type=float, default=5.0, help="last T0 in units of pi")
    ap.add_argument("--step", type=float, default=0.5, help="T0 step in units of pi (multiple of 1/4)")
    ap.add_argument("--warm-start", action="store_true")
    args = ap.parse_args()
    values = np.pi * np.arange(args.start, args.stop + 1e-9, args.step)
    items = shooting.sweep(values, "warm-start" if args.warm_start else "kepler")
    periods, radii = [], []
    for it in items:
        if it.record is None:
            print(f"T0={it.T0 / np.pi:g}pi failed: {it.failure}")
            continue
        rec = it.record
        periods.append(rec.period)
        radii.append(rec.mean_radius)
        print(f"T0={rec.T0_label:>6}  a={rec.a:.12f}  b={rec.b:.12f}  mean radius {rec.mean_radius:.4f}  "
              f"closure {rec.closure_residual:.1e}  {rec.classification}")
    if len(periods) >= 2:
        slope = np.polyfit(np.log(periods), np.log(radii), 1)[0]
        print(f"log-log slope of mean radius against period: {slope:.4f} (Kepler: 2/3)")


if __name__ == "__main__":
    main()
