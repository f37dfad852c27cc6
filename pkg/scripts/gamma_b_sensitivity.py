"""Balance roots and inversion as the phonon coupling is varied.

    python3 scripts/gamma_b_sensitivity.py > gamma_b_sensitivity.csv
"""
import sys

import numpy as np

from ptdqd.ness import solve_ness, tune_balance
from ptdqd.params import GAMMA_B_CALIBRATED, SetupParams


def main():
    p = SetupParams(kappa1=0.002, kappa2=0.002)
    grid = list(np.linspace(0.0, 1e-2, 5)) + list(np.linspace(0.05, 0.5, 10)) + [GAMMA_B_CALIBRATED]
    w = sys.stdout
    w.write("gamma_b,root,eps,tc,dn\n")
    for gb in sorted(grid):
        q = p.with_(gamma_b=float(gb))
        for i, r in enumerate(tune_balance(q)):
            dn = solve_ness(q.with_(eps=r.eps, tc=r.tc)).dn
            w.write(f"{gb:.6g},{i},{r.eps:.6f},{r.tc:.6f},{dn:.6f}\n")


if __name__ == "__main__":
    main()
