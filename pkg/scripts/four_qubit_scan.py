"""Best robust and non-robust infidelity for four ions across gate times.

    python scripts/four_qubit_scan.py [--tmin 1.65 --tmax 1.9 --steps 11] [--restarts 256]
"""

import argparse
import warnings
from pathlib import Path

import numpy as np

from gateforge import io
from gateforge.chain import ChainConfig
from gateforge.designer import DesignSpec, design
from gateforge.fourier import PERIOD, InfeasibleError


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tmin", type=float, default=1.65)
    ap.add_argument("--tmax", type=float, default=1.9)
    ap.add_argument("--steps", type=int, default=11)
    ap.add_argument("--restarts", type=int, default=256)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results/four_qubit.csv")
    args = ap.parse_args()

    rows = []
    for p in np.linspace(args.tmin, args.tmax, args.steps):
        row = [float(p)]
        for robust in (False, True):
            spec = DesignSpec(ChainConfig(4), p * PERIOD, objective="infidelity", robust=robust, restarts=args.restarts, jobs=args.jobs)
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    row.append(design(spec).infidelity)
            except InfeasibleError:
                row.append(np.nan)
        rows.append(tuple(row))
        print("%.4f  non-robust %.2e  robust %.2e" % tuple(row))
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    io.write_csv(args.out, ["tau_g_periods", "eps", "eps_robust"], rows)


if __name__ == "__main__":
    main()
