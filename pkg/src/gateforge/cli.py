"""Command-line entry point.

Gate times on the command line are in motional periods (2 pi / nu_0);
files store them in units of 1 / nu_0.

Exit codes: 0 success, 1 verification failed, 2 usage error,
3 infeasible gate time, 4 I/O error.
"""

import argparse
import datetime as _dt
import json
import logging
import sys
import warnings

import numpy as np

from gateforge import designer, dynamics, fourier, io
from gateforge.chain import ChainConfig, modes_from_dict, modes_to_dict, normal_modes
from gateforge.config import SEED_ENV, load_config
from gateforge.waveform import SamplingError, resample, segment_fourier_coeffs, waveform_from_dict

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_IO = 0, 1, 2, 3, 4

log = logging.getLogger("gateforge")


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def _periods(x):
    return float(x) * fourier.PERIOD


def _read_json(path):
    try:
        return io.read_json(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _load_waveform(path):
    data = _read_json(path)
    try:
        return waveform_from_dict(data), data
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _load_modes(args, wf_data=None):
    if getattr(args, "modes", None):
        try:
            return modes_from_dict(_read_json(args.modes))
        except (KeyError, ValueError, TypeError) as exc:
            raise InputError(f"{args.modes}: {exc}") from exc
    n = getattr(args, "ions", None)
    if n is None and wf_data is not None:
        n = wf_data.get("design", {}).get("n_ions")
    if n is None:
        raise UsageError("give --modes or --ions (the waveform carries no chain size)")
    eta = getattr(args, "eta_com", None)
    if eta is None:
        eta = (wf_data or {}).get("design", {}).get("eta_com", args.cfg["eta_com"])
    return normal_modes(_chain(n, eta))


def _chain(n, eta):
    try:
        return ChainConfig(int(n), eta_com=float(eta))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _manifest(args, outputs, inputs=(), extra=None):
    if not outputs:
        return
    cfg = dict(args.cfg)
    cfg.update(extra or {})
    io.write_manifest(outputs[0], args.argv, cfg, args.cfg.get("seed"), inputs, outputs, args.started)


def _emit_json(data, path):
    if path:
        io.write_json(path, data)
    else:
        sys.stdout.write(json.dumps(data, indent=2) + "\n")


# ---------------------------------------------------------------- commands


def cmd_modes(args):
    cfg = _chain(args.ions, args.eta_com if args.eta_com is not None else args.cfg["eta_com"])
    data = modes_to_dict(normal_modes(cfg), cfg)
    _emit_json(data, args.out)
    if args.out:
        _manifest(args, [args.out])
    return EXIT_OK


def _design_spec(args):
    cfg = args.cfg
    chain = _chain(args.ions, args.eta_com if args.eta_com is not None else cfg["eta_com"])
    try:
        target = dynamics.GateTarget.from_name(args.target, chain.n_ions)
        mu_bounds = None
        if args.mu_min is not None or args.mu_max is not None:
            if args.mu_min is None or args.mu_max is None:
                raise UsageError("--mu-min and --mu-max go together")
            mu_bounds = (args.mu_min, args.mu_max)
        tol = designer.Tolerances(
            infidelity=args.tol,
            constraint=cfg["constraint_tol"],
            flatness=cfg["flatness_tol"],
            lamb_dicke=cfg["lamb_dicke_limit"],
            phase_grid=cfg["phase_grid"],
        )
        restarts = args.restarts
        if restarts is None:
            restarts = cfg["restarts_large"] if chain.n_ions >= cfg["large_chain"] else cfg["restarts_small"]
        return designer.DesignSpec(
            chain=chain,
            tau_g=_periods(args.gate_time),
            method=args.method,
            target=target,
            objective=args.objective,
            robust=args.robust,
            restarts=restarts,
            seed=cfg["seed"],
            n_seg=args.segments,
            mu_bounds=mu_bounds,
            omega_bound=args.omega_bound if args.omega_bound is not None else cfg["omega_bound"],
            phase_only=args.phase_only,
            free_durations=not args.equal_durations,
            n_hi=args.n_hi,
            truncation_factor=cfg["truncation_factor"],
            grid_per_period=cfg["grid_per_period"],
            tolerances=tol,
            jobs=args.jobs,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _design_outputs(spec, res):
    wf_data = res.waveform.to_dict(mu=res.mu) if spec.method == "fourier" else res.waveform.to_dict()
    wf_data["design"] = spec.to_dict()
    report = res.to_dict()
    report["spec"] = spec.to_dict()
    return wf_data, report


def cmd_design(args):
    spec = _design_spec(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = designer.design(spec)
    for w in caught:
        log.warning("%s", w.message)
    wf_data, report = _design_outputs(spec, res)
    outputs = []
    _emit_json(wf_data, args.out)
    if args.out:
        outputs.append(args.out)
    if args.report:
        io.write_json(args.report, report)
        outputs.append(args.report)
    _manifest(args, outputs, extra={"spec": spec.to_dict()})
    status = "converged" if res.converged else "NOT converged"
    print(
        f"{status}: eps={res.infidelity:.3e} objective={res.objective_value:.6g} "
        f"max|alpha|={res.max_displacement:.3f} restart={res.restart_index}",
        file=sys.stderr,
    )
    return EXIT_OK if res.converged else EXIT_FAIL


def cmd_bound_scan(args):
    try:
        chain = _chain(args.ions, args.eta_com if args.eta_com is not None else args.cfg["eta_com"])
        modes = normal_modes(chain)
        target = dynamics.GateTarget.from_name(args.target, chain.n_ions)
        if args.steps < 2 or not 0 < args.tmin < args.tmax:
            raise UsageError("need 0 < --tmin < --tmax and --steps >= 2")
        taus = np.linspace(args.tmin, args.tmax, args.steps) * fourier.PERIOD
        factor = args.cfg["truncation_factor"]
        rows = []
        for tau in taus:
            pairs = fourier.bound_matrix_eigs(modes, tau, target, args.robust, args.n_hi, factor, index="all")
            # the first homogeneous combination (A_1 - A_2 for three ions)
            rows.append((tau, *pairs[0]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out_rows = [(t / fourier.PERIOD, lo, hi) for t, lo, hi in rows]
    if args.out:
        io.write_csv(args.out, ["tau_g_periods", "lambda_min", "lambda_max"], out_rows)
        _manifest(args, [args.out])
    else:
        for r in out_rows:
            print(",".join(repr(float(v)) for v in r))
    crossings = [c / fourier.PERIOD for c in fourier.scan_crossings(rows)]
    if crossings:
        lo, hi = _bracket(rows, crossings[0])
        bound = fourier.find_bound(modes, lo, hi, args.robust, args.n_hi, factor, target)
        print(f"bound: {bound / fourier.PERIOD:.4f} periods (grid crossing {crossings[0]:.4f})", file=sys.stderr)
    else:
        print("bound: no definiteness change on this grid", file=sys.stderr)
    return EXIT_OK


def _bracket(rows, crossing_periods):
    c = crossing_periods * fourier.PERIOD
    for (t0, *_), (t1, *_) in zip(rows[:-1], rows[1:]):
        if t0 <= c <= t1:
            return t0, t1
    raise AssertionError("crossing outside scan")


def cmd_sample(args):
    wf, data = _load_waveform(args.wf)
    if data.get("kind") != "fourier":
        raise UsageError("sample needs a Fourier waveform")
    mu = args.mu if args.mu is not None else data.get("mu")
    try:
        seg = resample(wf, args.segments, args.method, mu)
    except SamplingError as exc:
        raise UsageError(str(exc)) from exc
    out = seg.to_dict()
    out["source"] = {"method": args.method, "segments": args.segments, "digest": io.file_digest(args.wf)}
    if "design" in data:
        out["design"] = data["design"]
    m = np.arange(-wf.max_order, wf.max_order + 1)
    err = np.abs(segment_fourier_coeffs(seg, m) - np.array([wf.coefficient(k) for k in m]))
    _emit_json(out, args.out)
    if args.out:
        _manifest(args, [args.out], inputs=[args.wf])
    print(f"max low-order coefficient error: {err.max():.3e}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args):
    wf, data = _load_waveform(args.wf)
    modes = _load_modes(args, data)
    if modes.n_modes != (wf_n := data.get("design", {}).get("n_ions", modes.n_modes)):
        raise UsageError(f"waveform was designed for {wf_n} ions but the chain has {modes.n_modes}")
    try:
        target = dynamics.GateTarget.from_name(args.target, modes.n_modes)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    scan = dynamics.phase_scan(wf, modes, target, args.phase_grid, jobs=args.jobs)
    eps = np.array([e for _, e in scan])
    report = dynamics.gate_report(wf, modes, target, 0.0)
    out = {
        "max_infidelity": float(eps.max()),
        "mean_infidelity": float(eps.mean()),
        "threshold": args.threshold,
        "passed": bool(eps.max() < args.threshold),
        "phase_scan": [[p, e] for p, e in scan],
        "max_displacement": max(dynamics.max_displacement(wf, modes, p) for p in (0.0, np.pi / 4, np.pi / 2)),
        "report": report.to_dict(),
    }
    outputs = []
    _emit_json(out, args.out)
    if args.out:
        outputs.append(args.out)
    if args.trajectories:
        rows = [
            (float(t), m, float(a.real), float(a.imag))
            for m in range(modes.n_modes)
            for t, a in zip(report.times, report.trajectories[m])
        ]
        io.write_csv(args.trajectories, ["t", "mode", "re_alpha", "im_alpha"], rows)
        outputs.append(args.trajectories)
    if args.phases:
        iu, ju = np.triu_indices(modes.n_modes, 1)
        rows = [
            (float(t), int(i), int(j), float(report.phase_evolution[k, i, j]))
            for k, t in enumerate(report.times)
            for i, j in zip(iu, ju)
        ]
        io.write_csv(args.phases, ["t", "i", "j", "theta_ij"], rows)
        outputs.append(args.phases)
    _manifest(args, outputs, inputs=[args.wf] + ([args.modes] if args.modes else []))
    print(f"max eps over {args.phase_grid} phases: {eps.max():.3e}", file=sys.stderr)
    return EXIT_OK if out["passed"] else EXIT_FAIL


def cmd_scan_gate_time(args):
    args.gate_time = args.tmin
    spec = _design_spec(args)
    if args.steps < 1 or not 0 < args.tmin <= args.tmax:
        raise UsageError("need 0 < --tmin <= --tmax and --steps >= 1")
    taus = np.linspace(args.tmin, args.tmax, args.steps) * fourier.PERIOD
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rows = designer.scan_gate_time(spec, taus)
    out_rows = [(t / fourier.PERIOD, obj, eps, int(ok)) for t, obj, eps, ok in rows]
    if args.out:
        io.write_csv(args.out, ["tau_g_periods", "objective", "infidelity", "converged"], out_rows)
        _manifest(args, [args.out], extra={"spec": spec.to_dict()})
    else:
        for r in out_rows:
            print(",".join(repr(float(v)) for v in r))
    return EXIT_OK


def cmd_ellipse(args):
    if args.tau is not None and args.tau <= 0:
        raise UsageError("--tau must be positive")
    tau = args.tau if args.tau is not None else np.pi / args.nu
    rows = []
    summary = []
    for t0 in args.t0:
        pts = dynamics.displacement_ellipse(t0, tau, args.mu, args.nu, args.n_phi)
        phis = -np.pi + 2 * np.pi * (np.arange(args.n_phi) + 1) / args.n_phi
        rows += [(t0, float(p), float(z.real), float(z.imag)) for p, z in zip(phis, pts)]
        resid, _, _ = dynamics.fit_conic(pts)
        major, minor = dynamics.ellipse_semi_axes(t0, tau, args.mu, args.nu)
        summary.append((t0, major, minor, resid))
    if args.out:
        io.write_csv(args.out, ["t0", "phi", "re_dalpha", "im_dalpha"], rows)
        _manifest(args, [args.out])
    else:
        for r in rows:
            print(",".join(repr(float(v)) for v in r))
    for t0, major, minor, resid in summary:
        print(f"t0={t0:g}: semi-axes {major:.12g} {minor:.12g}, conic residual {resid:.2e}", file=sys.stderr)
    return EXIT_OK


# ------------------------------------------------------------------ parser

CSV_HELP = {
    "bound-scan": "CSV columns: tau_g_periods, lambda_min, lambda_max (extreme eigenvalues of the homogeneous phase matrix, A_1 - A_2 for three ions).",
    "scan-gate-time": "CSV columns: tau_g_periods, objective (nan when no feasible design), infidelity (best found), converged (0/1).",
    "verify": "CSV columns: trajectories t, mode, re_alpha, im_alpha; phases t, i, j, theta_ij.",
    "ellipse": "CSV columns: t0, phi, re_dalpha, im_dalpha (unit Rabi frequency segment displacement).",
}


def _common(p):
    p.add_argument("--config", help="flat JSON file overriding built-in defaults")
    p.add_argument("--seed", type=int, help=f"random seed (default: config, or ${SEED_ENV})")
    p.add_argument("--jobs", type=int, default=1, help="worker threads")
    p.add_argument("-v", "--verbose", action="store_true")


def _design_args(p, gate_time=True):
    p.add_argument("--ions", type=int, required=True)
    p.add_argument("--eta-com", type=float)
    if gate_time:
        p.add_argument("--gate-time", type=float, required=True, help="gate time in motional periods")
    p.add_argument("--segments", type=int, default=10)
    p.add_argument("--objective", choices=designer.OBJECTIVES, default=None)
    p.add_argument("--robust", action="store_true", help="robust to the initial motional phase")
    p.add_argument("--restarts", type=int)
    p.add_argument("--target", default="global", choices=["global", "global-alt", "identity"])
    p.add_argument("--mu-min", type=float)
    p.add_argument("--mu-max", type=float)
    p.add_argument("--omega-bound", type=float)
    p.add_argument("--phase-only", action="store_true", help="shared Rabi frequency, phases free")
    p.add_argument("--equal-durations", action="store_true")
    p.add_argument("--n-hi", type=int, help="highest Fourier harmonic (default from truncation factor)")
    p.add_argument("--tol", type=float, help="infidelity tolerance for convergence")


def build_parser():
    ap = argparse.ArgumentParser(prog="gateforge", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("modes", help="axial normal modes of an ion chain")
    p.add_argument("--ions", type=int, required=True)
    p.add_argument("--eta-com", type=float)
    p.add_argument("--out")
    _common(p)
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("design", help="synthesise a waveform")
    p.add_argument("method", choices=designer.METHODS)
    _design_args(p)
    p.add_argument("--out")
    p.add_argument("--report")
    _common(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("bound-scan", help="eigenvalue scan of the gate-time bound", epilog=CSV_HELP["bound-scan"])
    p.add_argument("--ions", type=int, default=3)
    p.add_argument("--eta-com", type=float)
    p.add_argument("--tmin", type=float, default=1.2)
    p.add_argument("--tmax", type=float, default=2.2)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--robust", action="store_true")
    p.add_argument("--n-hi", type=int)
    p.add_argument("--target", default="global", choices=["global", "global-alt"])
    p.add_argument("--out")
    _common(p)
    p.set_defaults(func=cmd_bound_scan)

    p = sub.add_parser("sample", help="discretise a Fourier waveform into segments")
    p.add_argument("--wf", required=True)
    p.add_argument("--segments", type=int, required=True)
    p.add_argument("--method", choices=["sinc", "midpoint", "left"], default="sinc")
    p.add_argument("--mu", type=float, help="detuning (default: stored value, else spectral centroid)")
    p.add_argument("--out")
    _common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify", help="evaluate a waveform over a phase grid", epilog=CSV_HELP["verify"])
    p.add_argument("--wf", required=True)
    p.add_argument("--modes")
    p.add_argument("--ions", type=int)
    p.add_argument("--eta-com", type=float)
    p.add_argument("--target", default="global", choices=["global", "global-alt", "identity"])
    p.add_argument("--phase-grid", type=int, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--out")
    p.add_argument("--trajectories")
    p.add_argument("--phases")
    _common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("scan-gate-time", help="best objective versus gate time", epilog=CSV_HELP["scan-gate-time"])
    p.add_argument("method", choices=designer.METHODS, nargs="?", default="fourier")
    _design_args(p, gate_time=False)
    p.add_argument("--tmin", type=float, required=True)
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--out")
    _common(p)
    p.set_defaults(func=cmd_scan_gate_time)

    p = sub.add_parser("ellipse", help="segment displacement ellipse data", epilog=CSV_HELP["ellipse"])
    p.add_argument("--mu", type=float, default=1.2)
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--tau", type=float, help="segment length in 1/nu_0 (default pi/nu)")
    p.add_argument("--t0", type=float, nargs="+", default=[0.0, 1.0])
    p.add_argument("--n-phi", type=int, default=64)
    p.add_argument("--out")
    _common(p)
    p.set_defaults(func=cmd_ellipse)
    return ap


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    args.argv = ["gateforge", *argv]
    args.started = _now()
    try:
        args.cfg = load_config(args.config, {"seed": args.seed})
        if getattr(args, "phase_grid", "unset") is None:
            args.phase_grid = args.cfg["phase_grid"]
        if getattr(args, "threshold", "unset") is None:
            args.threshold = args.cfg["verify_threshold"]
        if getattr(args, "objective", "unset") is None:
            args.objective = "infidelity" if args.method == "segmented" else "max_rabi"
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        return args.func(args)
    except UsageError as exc:
        print(f"gateforge {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except fourier.InfeasibleError as exc:
        print(f"gateforge {args.command}: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InputError as exc:
        print(f"gateforge {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"gateforge {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # config problems and other bad parameter values
        print(f"gateforge {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
