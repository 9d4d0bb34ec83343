"""Extreme eigenvalues of A_1 - A_2 versus gate time for three ions, with the bisected bound.

    python scripts/bound_scan.py [--out results/bound_scan.csv] [--n-hi 8 16 24]
"""

import argparse
from pathlib import Path

import numpy as np

from gateforge import io
from gateforge.chain import ChainConfig, normal_modes
from gateforge.fourier import PERIOD, find_bound, scan_crossings, three_qubit_bound_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tmin", type=float, default=1.2)
    ap.add_argument("--tmax", type=float, default=2.2)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--n-hi", type=int, nargs="*", default=[], help="fixed truncations to compare (default: factor 2)")
    ap.add_argument("--out", default="results/bound_scan.csv")
    args = ap.parse_args()

    modes = normal_modes(ChainConfig(3))
    taus = np.linspace(args.tmin, args.tmax, args.steps) * PERIOD
    rows = []
    for n_hi in args.n_hi or [None]:
        for robust in (False, True):
            scan = three_qubit_bound_scan(modes, taus, robust=robust, n_hi=n_hi)
            rows += [(t / PERIOD, int(robust), n_hi or 0, lo, hi) for t, lo, hi in scan]
            crossings = scan_crossings(scan)
            if crossings:
                i = int(np.searchsorted(taus, crossings[0]))
                bound = find_bound(modes, taus[i - 1], taus[i], robust, n_hi) / PERIOD
                print(f"robust={robust} n_hi={n_hi or 'auto'}: bound {bound:.4f} periods")
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    io.write_csv(args.out, ["tau_g_periods", "robust", "n_hi", "lambda_min", "lambda_max"], rows)


if __name__ == "__main__":
    main()
