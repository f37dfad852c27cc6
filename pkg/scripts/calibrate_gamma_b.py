"""Fit the phonon coupling gamma_b so the two balance roots land on the reference points.

    python3 scripts/calibrate_gamma_b.py [--no-lamb-shift]
"""
import argparse

from ptdqd.ness import calibrate_gamma_b, solve_ness, tune_balance
from ptdqd.params import SetupParams

TARGETS = ((7.760, 0.973), (5.208, 3.036))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--no-lamb-shift", action="store_true")
    ap.add_argument("--n-theta", type=int, default=120)
    args = ap.parse_args()
    p = SetupParams(kappa1=0.002, kappa2=0.002, lamb_shift=not args.no_lamb_shift)
    gb, cost = calibrate_gamma_b(p, TARGETS, n_theta=args.n_theta)
    print(f"gamma_b = {gb:.4f}  (cost {cost:.3e})")
    for r in tune_balance(p.with_(gamma_b=round(gb, 4))):
        ss = solve_ness(p.with_(gamma_b=round(gb, 4), eps=r.eps, tc=r.tc))
        print(f"  eps = {r.eps:.5f}  tc = {r.tc:.5f}  dN = {ss.dn:.4f}  delta = {ss.delta:.5f}")


if __name__ == "__main__":
    main()
