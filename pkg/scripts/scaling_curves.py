"""Minimal peak Rabi frequency versus gate time, robust and non-robust.

    python scripts/scaling_curves.py [--ions 2] [--tmin 0.5 --tmax 2.5 --steps 20]
"""

import argparse
import warnings
from pathlib import Path

import numpy as np

from gateforge import io
from gateforge.chain import ChainConfig
from gateforge.designer import DesignSpec, scan_gate_time
from gateforge.fourier import PERIOD


def curves(n_ions, taus, restarts, factor=4.0):
    out = {}
    for robust in (False, True):
        spec = DesignSpec(ChainConfig(n_ions), taus[0], objective="max_rabi", robust=robust, restarts=restarts, truncation_factor=factor)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            out[robust] = scan_gate_time(spec, taus)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ions", type=int, default=2)
    ap.add_argument("--tmin", type=float, default=0.5)
    ap.add_argument("--tmax", type=float, default=2.5)
    ap.add_argument("--steps", type=int, default=20)
    ap.add_argument("--restarts", type=int, default=8)
    ap.add_argument("--out", default="results/scaling.csv")
    args = ap.parse_args()

    taus = np.linspace(args.tmin, args.tmax, args.steps) * PERIOD
    res = curves(args.ions, taus, args.restarts)
    rows = [(t / PERIOD, a[1], b[1], int(a[3]), int(b[3])) for t, a, b in zip(taus, res[False], res[True])]
    for r in rows:
        print("%.4f  non-robust %8.4f  robust %8.4f" % r[:3])
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    io.write_csv(args.out, ["tau_g_periods", "omega_max", "omega_max_robust", "valid", "valid_robust"], rows)


if __name__ == "__main__":
    main()
