"""Infidelity of sampled fixtures versus segment count for each sampling rule.

    python scripts/sampling_error.py [--fixture fixtures/fig6.json] [--out results/sampling.csv]
"""

import argparse
from pathlib import Path

import numpy as np

from gateforge import dynamics as dyn
from gateforge import io
from gateforge.chain import ChainConfig, normal_modes
from gateforge.waveform import resample, waveform_from_dict


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fixture", default="fixtures/fig6.json")
    ap.add_argument("--segments", type=int, nargs="+", default=list(range(40, 201, 20)))
    ap.add_argument("--mu", type=float, help="detuning (default: the fixture's)")
    ap.add_argument("--out", default="results/sampling.csv")
    args = ap.parse_args()

    data = io.read_json(args.fixture)
    wf = waveform_from_dict(data)
    mu = args.mu if args.mu is not None else data.get("mu")
    modes = normal_modes(ChainConfig(data["design"]["n_ions"]))
    target = dyn.GateTarget.global_gate(modes.n_modes)
    rows = []
    for n_seg in args.segments:
        eps = {}
        for method in ("sinc", "midpoint", "left"):
            seg = resample(wf, n_seg, method, mu)
            eps[method] = max(e for _, e in dyn.phase_scan(seg, modes, target, 64))
        rows.append((n_seg, eps["sinc"], eps["midpoint"], eps["left"]))
        print(f"{n_seg:4d}  sinc {eps['sinc']:.3e}  midpoint {eps['midpoint']:.3e}  left {eps['left']:.3e}")
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    io.write_csv(args.out, ["n_seg", "eps_sinc", "eps_midpoint", "eps_left"], rows)
    return np.array(rows)


if __name__ == "__main__":
    main()
