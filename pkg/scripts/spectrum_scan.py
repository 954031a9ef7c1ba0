#!/usr/bin/env python3
"""Tabulate the smallest Hessian eigenvalue of the circular orbit over exponents and winding numbers."""
import argparse

from symorbits.dynamics import PotentialLaw
from symorbits.variational import nondegeneracy_margin, restricted_invertibility


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alphas", default="1,1.5,2,2.5,3")
    ap.add_argument("--p-max", type=int, default=4)
    ap.add_argument("--m", type=int, default=2)
    ap.add_argument("--l-max", type=int, default=50)
    args = ap.parse_args()
    print(f"{'alpha':>6} {'p':>3} {'margin':>10} {'degenerate':>12} {'margin (m=' + str(args.m) + ')':>14}")
    for alpha in (float(a) for a in args.alphas.split(",")):
        law = PotentialLaw(alpha)
        for p in range(1, args.p_max + 1):
            margin, degenerate = nondegeneracy_margin(p, law, args.l_max)
            restricted = restricted_invertibility(p, args.m, args.l_max, law)
            print(f"{alpha:6g} {p:3d} {margin:10.4g} {str(degenerate):>12} {restricted:14.4g}")


if __name__ == "__main__":
    main()
