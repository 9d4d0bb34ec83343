"""Regenerate the reference designs in fixtures/.

    python scripts/make_fixtures.py [--only fig3 fig5 fig6] [--jobs N]
"""

import argparse
import warnings
from pathlib import Path

import numpy as np

from gateforge import dynamics as dyn
from gateforge import io
from gateforge.chain import ChainConfig, normal_modes
from gateforge.designer import DesignSpec, design
from gateforge.fourier import PERIOD

ROOT = Path(__file__).resolve().parents[1]

CASES = {
    # two ions, ten phase-modulated segments, robust, 0.93 periods
    "fig3": dict(chain=ChainConfig(2), tau_g=0.93 * PERIOD, method="segmented", robust=True, phase_only=True, n_seg=10, restarts=64),
    # three ions, robust Fourier design at 1.75 periods, sampled at mu = 0.93
    "fig5": dict(chain=ChainConfig(3), tau_g=1.75 * PERIOD, method="fourier", objective="max_rabi", robust=True, restarts=64),
    # four ions, robust Fourier design at 1.875 periods, sampled at mu = 5
    "fig6": dict(chain=ChainConfig(4), tau_g=1.875 * PERIOD, method="fourier", objective="max_rabi", robust=True, restarts=256),
}
SAMPLING_MU = {"fig5": 0.93, "fig6": 5.0}


def build(name, jobs=1):
    spec = DesignSpec(**CASES[name], jobs=jobs)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = design(spec)
    modes = normal_modes(spec.chain)
    scan = dyn.phase_scan(res.waveform, modes, spec.target, 64)
    if spec.method == "fourier":
        data = res.waveform.to_dict(mu=SAMPLING_MU[name])
    else:
        data = res.waveform.to_dict()
    data["design"] = spec.to_dict()
    data["summary"] = {
        "max_infidelity": max(e for _, e in scan),
        "mean_infidelity": float(np.mean([e for _, e in scan])),
        "objective_value": res.objective_value,
        "max_displacement": res.max_displacement,
        "converged": res.converged,
        "restart_index": res.restart_index,
        "theta_final": res.report.theta_final.tolist(),
        "warnings": [str(w.message) for w in caught],
    }
    return data


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--only", nargs="+", choices=sorted(CASES), default=sorted(CASES))
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--outdir", default=str(ROOT / "fixtures"))
    args = ap.parse_args()
    for name in args.only:
        data = build(name, args.jobs)
        path = io.write_json(Path(args.outdir) / f"{name}.json", data)
        s = data["summary"]
        print(f"{path}: eps_max={s['max_infidelity']:.3e} max|alpha|={s['max_displacement']:.3f} converged={s['converged']}")


if __name__ == "__main__":
    main()
