"""Waveform synthesis by multi-start local optimisation.

Two routes:

* segmented: least squares on the residual vector whose squared norm is the
  infidelity (optionally averaged over three motional phases), with an
  exact Jacobian obtained by automatic differentiation of the closed-form
  dynamics;
* fourier: a constrained program over kernel coordinates with exact
  quadratic phase constraints, first driven to feasibility by least squares
  and then optimised for peak Rabi frequency or pulse area with SLSQP.

Every returned design is re-evaluated with :mod:`gateforge.dynamics`.
"""

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares, minimize

from gateforge import dynamics as dyn
from gateforge import fourier as fr
from gateforge.chain import ChainConfig, normal_modes
from gateforge.config import builtin_defaults, default_restarts
from gateforge.waveform import FourierWaveform, SegmentedWaveform

log = logging.getLogger(__name__)

_DEFAULTS = builtin_defaults()
METHODS = ("segmented", "fourier")
OBJECTIVES = ("infidelity", "max_rabi", "pulse_area")


@dataclass(frozen=True)
class Tolerances:
    infidelity: float | None = None  # None: method default
    constraint: float = _DEFAULTS["constraint_tol"]
    flatness: float = _DEFAULTS["flatness_tol"]
    lamb_dicke: float = _DEFAULTS["lamb_dicke_limit"]
    phase_grid: int = _DEFAULTS["phase_grid"]


@dataclass(frozen=True)
class DesignSpec:
    chain: ChainConfig
    tau_g: float
    method: str = "fourier"
    target: dyn.GateTarget | None = None
    objective: str = "infidelity"
    robust: bool = False
    restarts: int | None = None
    seed: int = _DEFAULTS["seed"]
    # segmented
    n_seg: int = 10
    mu_bounds: tuple | None = None
    omega_bound: float = _DEFAULTS["omega_bound"]
    phase_only: bool = False
    free_durations: bool = True
    initial: SegmentedWaveform | None = None
    # fourier
    n_hi: int | None = None
    truncation_factor: float = _DEFAULTS["truncation_factor"]
    grid_per_period: int = _DEFAULTS["grid_per_period"]
    tolerances: Tolerances = field(default_factory=Tolerances)
    jobs: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if self.tau_g <= 0:
            raise ValueError("tau_g must be positive")
        if self.restarts is not None and self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.method == "segmented" and self.n_seg < 2:
            raise ValueError("segmented designs need n_seg >= 2")
        if self.target is None:
            object.__setattr__(self, "target", dyn.GateTarget.global_gate(self.chain.n_ions))
        if self.target.n_ions != self.chain.n_ions:
            raise ValueError("target size does not match the chain")

    @property
    def n_restarts(self):
        return self.restarts if self.restarts is not None else default_restarts(self.chain.n_ions)

    @property
    def infidelity_tol(self):
        if self.tolerances.infidelity is not None:
            return self.tolerances.infidelity
        return _DEFAULTS["segmented_tol"] if self.method == "segmented" else _DEFAULTS["fourier_tol"]

    def to_dict(self):
        return {
            "n_ions": self.chain.n_ions,
            "eta_com": self.chain.eta_com,
            "tau_g": self.tau_g,
            "method": self.method,
            "objective": self.objective,
            "robust": self.robust,
            "restarts": self.n_restarts,
            "seed": self.seed,
            "n_seg": self.n_seg,
            "mu_bounds": None if self.mu_bounds is None else list(self.mu_bounds),
            "omega_bound": self.omega_bound,
            "phase_only": self.phase_only,
            "free_durations": self.free_durations,
            "n_hi": self.n_hi,
            "truncation_factor": self.truncation_factor,
            "target": self.target.theta_target.tolist(),
        }


@dataclass
class DesignResult:
    waveform: object
    report: dyn.GateReport
    objective_value: float
    infidelity: float  # worst case over the phase grid when robust, else eps(0)
    converged: bool
    restart_index: int
    iterations: int
    constraint_violation: float = 0.0
    max_displacement: float = np.nan
    mu: float | None = None
    restart_infidelities: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "objective_value": self.objective_value,
            "infidelity": self.infidelity,
            "converged": self.converged,
            "restart_index": self.restart_index,
            "iterations": self.iterations,
            "constraint_violation": self.constraint_violation,
            "max_displacement": self.max_displacement,
            "mu": self.mu,
            "report": self.report.to_dict(),
        }


@dataclass
class _Attempt:
    index: int
    params: np.ndarray
    eps: float
    objective: float
    feasible: bool
    iterations: int
    lamb_dicke_ok: bool = True


def _restart_rngs(seed, n):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _run_restarts(fn, spec):
    rngs = _restart_rngs(spec.seed, spec.n_restarts)
    jobs = max(1, int(spec.jobs))
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(fn, range(len(rngs)), rngs))
    return [fn(i, r) for i, r in enumerate(rngs)]


def _winner(attempts):
    """Feasible before infeasible, Lamb-Dicke-valid first, then objective, eps, index."""
    return min(
        attempts,
        key=lambda a: (not a.feasible, not a.lamb_dicke_ok, a.objective if a.feasible else 0.0, a.eps, a.index),
    )


def _lamb_dicke_ok(wf, modes, robust, limit):
    phases = dyn.ROBUST_PHASES if robust else (0.0,)
    return all(dyn.max_displacement(wf, modes, p) < limit for p in phases)


def pulse_area(wf, grid_per_period=_DEFAULTS["grid_per_period"]):
    """``int |f(t)| dt``: exact for segmented waveforms, dense trapezoid for Fourier ones."""
    if isinstance(wf, SegmentedWaveform):
        return float(np.sum(wf.durations * wf.amplitudes))
    if isinstance(wf, FourierWaveform):
        n = max(1, wf.max_order)
        t = np.linspace(0.0, wf.tau_g, grid_per_period * n + 1)
        return float(np.trapezoid(np.abs(wf.evaluate(t)), t))
    raise TypeError(f"unsupported waveform type {type(wf).__name__}")


def max_rabi(wf, grid_per_period=_DEFAULTS["grid_per_period"]):
    if isinstance(wf, SegmentedWaveform):
        return float(np.max(wf.amplitudes))
    n = max(1, wf.max_order)
    t = np.linspace(0.0, wf.tau_g, grid_per_period * n + 1)
    return float(np.max(np.abs(wf.evaluate(t))))


def objective_value(wf, objective, eps, grid_per_period=_DEFAULTS["grid_per_period"]):
    if objective == "max_rabi":
        return max_rabi(wf, grid_per_period)
    if objective == "pulse_area":
        return pulse_area(wf, grid_per_period)
    return eps


def evaluate_design(wf, modes, target, robust, tolerances):
    """Independent check of a waveform; returns (eps, max |alpha|, phases checked)."""
    if robust:
        scan = dyn.phase_scan(wf, modes, target, tolerances.phase_grid)
        values = np.array([e for _, e in scan])
        eps = float(values.max())
        flat = float(values.max() - values.mean())
        phases = dyn.ROBUST_PHASES
    else:
        eps = dyn.infidelity(wf, modes, target, 0.0)
        flat = 0.0
        phases = (0.0,)
    disp = max(dyn.max_displacement(wf, modes, p) for p in phases)
    return eps, flat, disp


def _finish(spec, modes, wf, attempt, constraint_violation=0.0, mu=None, attempts=()):
    tol = spec.tolerances
    eps, flat, disp = evaluate_design(wf, modes, spec.target, spec.robust, tol)
    converged = eps < spec.infidelity_tol and (not spec.robust or flat < tol.flatness)
    if spec.method == "fourier":
        converged = converged and constraint_violation < tol.constraint
    if converged and not disp < tol.lamb_dicke:
        warnings.warn(f"design leaves the Lamb-Dicke regime (max |alpha| = {disp:.3g})", RuntimeWarning, stacklevel=3)
        converged = False
    return DesignResult(
        waveform=wf,
        report=dyn.gate_report(wf, modes, spec.target, 0.0),
        objective_value=objective_value(wf, spec.objective, eps, spec.grid_per_period),
        infidelity=eps,
        converged=bool(converged),
        restart_index=attempt.index,
        iterations=attempt.iterations,
        constraint_violation=float(constraint_violation),
        max_displacement=disp,
        mu=mu,
        restart_infidelities=[a.eps for a in attempts],
    )


# ---------------------------------------------------------------- segmented


def _jax():
    import jax

    jax.config.update("jax_enable_x64", True)
    return jax


class _SegmentedProblem:
    """Parameter layout ``[mu, w_1..w_K?, Omega (1 or K), phi_1..phi_K]``."""

    def __init__(self, spec, modes):
        jax = _jax()
        jnp = jax.numpy
        self.spec = spec
        self.k = k = spec.n_seg
        self.n_amp = 1 if spec.phase_only else k
        self.n_w = k if spec.free_durations else 0
        if spec.mu_bounds is not None:
            self.mu_bounds = tuple(spec.mu_bounds)
        elif modes.n_modes == 2:
            self.mu_bounds = (float(modes.frequencies[0]), float(modes.frequencies[-1]))
        else:
            self.mu_bounds = tuple(_DEFAULTS["mu_bounds_multi"])
        self.w_bounds = tuple(_DEFAULTS["duration_weight_bounds"])
        nus = jnp.asarray(modes.frequencies, dtype=float)
        etas = jnp.asarray(modes.eta_modes, dtype=float)
        pmat = jnp.asarray(fr.pair_matrix(modes))
        tvec = jnp.asarray(spec.target.offdiag())
        phis = dyn.ROBUST_PHASES if spec.robust else (0.0,)
        weight = 1.0 / np.sqrt(len(phis))
        tau = spec.tau_g

        def residual(p):
            mu, widths, amps, phases = self._unpack(jnp, p)
            starts = jnp.cumsum(widths) - widths
            kappa = mu * jnp.ones((k, 1))
            out = []
            for phi0 in phis:
                f = (amps * jnp.exp(-1j * (phases + phi0)))[:, None]
                b, area, carrier = dyn.evolve(jnp, starts, widths, f, kappa, nus)
                alpha = 1j * etas * b
                theta = dyn._PHASE * etas**2 * jnp.imag(area)
                out += [jnp.real(alpha) / 2, jnp.imag(alpha) / 2, pmat @ theta - tvec, jnp.sqrt(3.0) * carrier[None]]
            return weight * jnp.concatenate(out)

        self._tau = tau
        self.residual = jax.jit(residual)
        self.jacobian = jax.jit(jax.jacfwd(residual))

    def _unpack(self, xp, p):
        k = self.k
        mu = p[0]
        i = 1
        if self.n_w:
            w = p[i : i + k]
            widths = self._tau * w / xp.sum(w)
            i += k
        else:
            widths = xp.full(k, self._tau / k)
        amps = p[i : i + self.n_amp] * xp.ones(k)
        i += self.n_amp
        return mu, widths, amps, p[i : i + k]

    def bounds(self):
        lo = [self.mu_bounds[0]] + [self.w_bounds[0]] * self.n_w + [0.0] * self.n_amp + [-np.inf] * self.k
        hi = [self.mu_bounds[1]] + [self.w_bounds[1]] * self.n_w + [self.spec.omega_bound] * self.n_amp + [np.inf] * self.k
        return np.array(lo), np.array(hi)

    def sample(self, rng):
        mu = rng.uniform(*self.mu_bounds)
        w = np.ones(self.n_w)
        amps = rng.uniform(0.0, self.spec.omega_bound, self.n_amp)
        phases = rng.uniform(-np.pi, np.pi, self.k)
        return np.concatenate([[mu], w, amps, phases])

    def from_waveform(self, wf):
        if wf.n_segments != self.k:
            raise ValueError("initial waveform has the wrong number of segments")
        w = wf.durations / np.mean(wf.durations) if self.n_w else np.zeros(0)
        amps = wf.amplitudes[:1] if self.spec.phase_only else wf.amplitudes
        mu = float(np.clip(wf.mu, *self.mu_bounds))
        return np.concatenate([[mu], w, amps, wf.phases + wf.phi0])

    def waveform(self, p):
        mu, widths, amps, phases = self._unpack(np, np.asarray(p))
        return SegmentedWaveform(float(mu), widths, amps, phases)

    def solve(self, x0, max_nfev):
        lo, hi = self.bounds()
        x0 = np.clip(x0, lo, hi)
        interior = (x0 <= lo) | (x0 >= hi)
        span = np.where(np.isfinite(hi - lo), hi - lo, 1.0)
        x0 = np.where(interior & (x0 <= lo), lo + 1e-9 * span, x0)
        x0 = np.where(interior & (x0 >= hi), hi - 1e-9 * span, x0)
        res = least_squares(
            lambda p: np.asarray(self.residual(p)),
            x0,
            jac=lambda p: np.asarray(self.jacobian(p)),
            bounds=(lo, hi),
            method="trf",
            xtol=_DEFAULTS["lsq_tol"],
            ftol=_DEFAULTS["lsq_tol"],
            gtol=_DEFAULTS["lsq_tol"],
            max_nfev=max_nfev,
        )
        return res.x, float(2 * res.cost), int(res.nfev)


def design_segmented(spec):
    """Multi-start least-squares search over ``(mu, tau_k, Omega_k, phi_k)``."""
    if spec.method != "segmented":
        raise ValueError("design_segmented needs method='segmented'")
    modes = normal_modes(spec.chain)
    prob = _SegmentedProblem(spec, modes)
    max_nfev = _DEFAULTS["lsq_max_nfev"]

    tol = spec.infidelity_tol
    limit = spec.tolerances.lamb_dicke

    def attempt(i, x0):
        x, eps, nfev = prob.solve(x0, max_nfev)
        wf = prob.waveform(x)
        feasible = eps < tol
        obj = objective_value(wf, spec.objective, eps, spec.grid_per_period)
        ok = feasible and _lamb_dicke_ok(wf, modes, spec.robust, limit)
        return _Attempt(i, x, eps, obj, feasible, nfev, ok)

    if spec.initial is not None:
        attempts = [attempt(0, prob.from_waveform(spec.initial))]
    else:
        attempts = _run_restarts(lambda i, rng: attempt(i, prob.sample(rng)), spec)
    best = _winner(attempts)
    log.info("segmented: restart %d with eps %.3g", best.index, best.eps)
    return _finish(spec, modes, prob.waveform(best.params), best, attempts=attempts)


# ------------------------------------------------------------------ fourier


def _basis(harmonics, omega, t):
    arg = np.multiply.outer(t, harmonics * omega)
    return np.hstack([np.sin(arg), np.cos(arg)])


class _FourierProblem:
    """Kernel coordinates ``z = x`` (carrier-free) or ``z = [y, x]`` (robust).

    ``Omega^c = K y`` and ``Omega^m = K x``. Equality constraints: projected
    pair phases of ``x`` hit the target; robust designs add per-mode
    ``theta(y) = theta(x)`` and the cross term ``y^T A_m x = 0``.
    """

    def __init__(self, spec, modes):
        self.spec = spec
        self.modes = modes
        tau = spec.tau_g
        self.n_hi = spec.n_hi if spec.n_hi is not None else fr.default_truncation(modes, tau, spec.truncation_factor)
        self.system = fr.build_constraints(modes, tau, 0, self.n_hi)
        self.red = fr.reduce(self.system, robust=spec.robust)
        self.a = self.red.a_mats
        self.l = self.red.dim_kernel
        u = fr.target_projector(modes)
        self.p = fr.pair_matrix(modes)
        self.t = spec.target.offdiag()
        self.g = u.T @ self.p
        self.h = u.T @ self.t
        n_grid = spec.grid_per_period * max(1, self.n_hi) + 1
        self.t_grid = np.linspace(0.0, tau, n_grid)
        self.w_grid = np.full(n_grid, tau / (n_grid - 1))
        self.w_grid[[0, -1]] *= 0.5
        self.s_grid = _basis(self.system.harmonics, 2 * np.pi / tau, self.t_grid) @ self.red.kernel
        self.dim = 2 * self.l if spec.robust else self.l
        lam = np.max(np.abs(np.linalg.eigvalsh(self.a)))
        self.scale = np.sqrt(np.pi / 4 / max(lam, 1e-300))

    def split(self, z):
        if self.spec.robust:
            return z[: self.l], z[self.l :]
        return None, z

    def _theta(self, u, v=None):
        v = u if v is None else v
        return np.einsum("i,mij,j->m", u, self.a, v)

    def constraints(self, z):
        y, x = self.split(z)
        parts = [self.g @ self._theta(x) - self.h]
        if y is not None:
            parts += [self._theta(y) - self._theta(x), self._theta(y, x)]
        return np.concatenate(parts)

    def constraint_jac(self, z):
        y, x = self.split(z)
        ax = np.einsum("mij,j->mi", self.a, x)
        if y is None:
            return self.g @ (2 * ax)
        ay = np.einsum("mij,j->mi", self.a, y)
        zero = np.zeros((self.g.shape[0], self.l))
        return np.vstack(
            [
                np.hstack([zero, self.g @ (2 * ax)]),
                np.hstack([2 * ay, -2 * ax]),
                np.hstack([ax, ay]),
            ]
        )

    def infidelity_residuals(self, z):
        """Pair-phase residuals whose squared norm is eps (robust: mean over three phases)."""
        y, x = self.split(z)
        tx = self.p @ self._theta(x) - self.t
        if y is None:
            return tx
        ty = self.p @ self._theta(y) - self.t
        mid = self.p @ (0.5 * (self._theta(x) + self._theta(y)) - self._theta(y, x)) - self.t
        return np.concatenate([tx, mid, ty]) / np.sqrt(3.0)

    def infidelity_jac(self, z):
        y, x = self.split(z)
        ax = np.einsum("mij,j->mi", self.a, x)
        if y is None:
            return self.p @ (2 * ax)
        ay = np.einsum("mij,j->mi", self.a, y)
        zero = np.zeros((self.p.shape[0], self.l))
        jac = np.vstack(
            [
                np.hstack([zero, 2 * self.p @ ax]),
                np.hstack([self.p @ (ay - ax), self.p @ (ax - ay)]),
                np.hstack([2 * self.p @ ay, zero]),
            ]
        )
        return jac / np.sqrt(3.0)

    def best_effort(self, z):
        """Least squares on the infidelity itself, for restarts that miss feasibility."""
        res = least_squares(
            self.infidelity_residuals,
            z,
            jac=self.infidelity_jac,
            method="trf",
            xtol=_DEFAULTS["lsq_tol"],
            ftol=_DEFAULTS["lsq_tol"],
            gtol=_DEFAULTS["lsq_tol"],
            max_nfev=_DEFAULTS["lsq_max_nfev"] * self.dim,
        )
        return res.x, int(res.nfev)

    def rabi_sq(self, z):
        y, x = self.split(z)
        d = self.s_grid @ x
        out = d**2
        if y is not None:
            out = out + (self.s_grid @ y) ** 2
        return out

    def rabi_sq_jac(self, z):
        y, x = self.split(z)
        jx = 2 * (self.s_grid @ x)[:, None] * self.s_grid
        if y is None:
            return jx
        return np.hstack([2 * (self.s_grid @ y)[:, None] * self.s_grid, jx])

    def area(self, z):
        r = np.sqrt(self.rabi_sq(z) + 1e-18)
        return float(self.w_grid @ r)

    def area_grad(self, z):
        r = np.sqrt(self.rabi_sq(z) + 1e-18)
        return (self.w_grid / (2 * r)) @ self.rabi_sq_jac(z)

    def sample(self, rng):
        return rng.normal(size=self.dim) * self.scale

    def waveform(self, z):
        y, x = self.split(z)
        om_c = None if y is None else self.red.quadratures(y)
        return fr.to_waveform(self.system, om_c, self.red.quadratures(x))

    def feasibility(self, z0):
        res = least_squares(
            self.constraints,
            z0,
            jac=self.constraint_jac,
            method="trf",
            xtol=_DEFAULTS["lsq_tol"],
            ftol=_DEFAULTS["lsq_tol"],
            gtol=_DEFAULTS["lsq_tol"],
            max_nfev=_DEFAULTS["lsq_max_nfev"] * self.dim,
        )
        return res.x, int(res.nfev)

    def polish(self, z, steps=8, start=1e-6):
        """Minimum-norm Gauss-Newton projection onto the constraint surface.

        Runs only close to feasibility and keeps a step only if it lowers the
        worst violation.
        """
        c = self.constraints(z)
        worst = np.max(np.abs(c))
        if worst > start:
            return z
        for _ in range(steps):
            if worst < 1e-14:
                break
            step, *_ = np.linalg.lstsq(self.constraint_jac(z), c, rcond=None)
            c_new = self.constraints(z - step)
            if np.max(np.abs(c_new)) >= worst:
                break
            z, c, worst = z - step, c_new, np.max(np.abs(c_new))
        return z

    def _epigraph_eq_jac(self, v):
        jac = self.constraint_jac(v[:-1])
        return np.hstack([jac, np.zeros((jac.shape[0], 1))])

    def _epigraph_ineq_jac(self, v):
        return np.hstack([-self.rabi_sq_jac(v[:-1]), np.ones((len(self.t_grid), 1))])

    def optimise(self, z, objective):
        """SLSQP from a feasible point; ``max_rabi`` uses the epigraph ``s >= |f(t_i)|^2``."""
        opts = {"ftol": _DEFAULTS["slsqp_ftol"], "maxiter": _DEFAULTS["slsqp_maxiter"]}
        if objective == "max_rabi":
            v0 = np.concatenate([z, [float(np.max(self.rabi_sq(z)))]])
            grad = np.zeros(self.dim + 1)
            grad[-1] = 1.0
            cons = [
                {"type": "eq", "fun": lambda v: self.constraints(v[:-1]), "jac": self._epigraph_eq_jac},
                {"type": "ineq", "fun": lambda v: v[-1] - self.rabi_sq(v[:-1]), "jac": self._epigraph_ineq_jac},
            ]
            res = minimize(lambda v: v[-1], v0, jac=lambda v: grad, constraints=cons, method="SLSQP", options=opts)
            return res.x[:-1], int(res.nit)
        cons = [{"type": "eq", "fun": self.constraints, "jac": self.constraint_jac}]
        res = minimize(self.area, z, jac=self.area_grad, constraints=cons, method="SLSQP", options=opts)
        return res.x, int(res.nit)

    def objective(self, z, objective):
        if objective == "max_rabi":
            return float(np.sqrt(np.max(self.rabi_sq(z))))
        if objective == "pulse_area":
            return self.area(z)
        return float(np.sum(self.constraints(z) ** 2))


def check_feasible(modes, target, tau_g, robust=False, n_hi=None, factor=2.0):
    """Raise :class:`InfeasibleError` if a homogeneous phase condition has a definite matrix."""
    if modes.n_modes == 2:
        # only the pair phase itself: an eigenvalue of the target's sign is needed
        n = n_hi if n_hi is not None else fr.default_truncation(modes, tau_g, factor)
        red = fr.reduce(fr.build_constraints(modes, tau_g, 0, n), robust=robust)
        lam = np.linalg.eigvalsh(np.einsum("m,mij->ij", fr._pair_combination(modes), red.a_mats))
        sign = np.sign(target.offdiag()[0])
        if sign != 0 and np.max(sign * lam) <= 0:
            raise fr.InfeasibleError(f"no eigenvalue of the required sign at {tau_g / fr.PERIOD:.4f} periods")
        return
    if any(fr.is_definite(lo, hi) for lo, hi in fr.bound_matrix_eigs(modes, tau_g, target, robust, n_hi, factor, index="all")):
        bound = _bound_above(modes, target, tau_g, robust, n_hi, factor)
        where = "unknown" if bound is None else f"{bound / fr.PERIOD:.4f}"
        raise fr.InfeasibleError(
            f"phase conditions admit no solution at {tau_g / fr.PERIOD:.4f} periods (bound: {where} periods)",
            bound=bound,
        )


def _bound_above(modes, target, tau_g, robust, n_hi, factor, step=0.05, t_max=4.0):
    def definite(tau):
        pairs = fr.bound_matrix_eigs(modes, tau, target, robust, n_hi, factor, index="all")
        return any(fr.is_definite(lo, hi) for lo, hi in pairs)

    lo = tau_g
    while lo < t_max * fr.PERIOD:
        hi = lo + step * fr.PERIOD
        if not definite(hi):
            while (hi - lo) / fr.PERIOD > _DEFAULTS["bound_tol_periods"]:
                mid = 0.5 * (lo + hi)
                lo, hi = (mid, hi) if definite(mid) else (lo, mid)
            return 0.5 * (lo + hi)
        lo = hi
    return None


def design_fourier(spec):
    """Constrained multi-start design in the Fourier basis."""
    if spec.method != "fourier":
        raise ValueError("design_fourier needs method='fourier'")
    modes = normal_modes(spec.chain)
    check_feasible(modes, spec.target, spec.tau_g, spec.robust, spec.n_hi, spec.truncation_factor)
    prob = _FourierProblem(spec, modes)
    tol = spec.tolerances

    def one(i, rng):
        z, nfev = prob.feasibility(prob.sample(rng))
        z = prob.polish(z)
        viol = float(np.max(np.abs(prob.constraints(z))))
        iters = nfev
        if viol < tol.constraint and spec.objective != "infidelity":
            z2, nit = prob.optimise(z, spec.objective)
            z2 = prob.polish(z2)
            viol2 = float(np.max(np.abs(prob.constraints(z2))))
            iters += nit
            if viol2 < tol.constraint and prob.objective(z2, spec.objective) <= prob.objective(z, spec.objective):
                z, viol = z2, viol2
        feasible = viol < tol.constraint
        if not feasible and spec.robust:
            z, nfev = prob.best_effort(z)
            iters += nfev
        eps = float(np.sum(prob.infidelity_residuals(z) ** 2))
        ok = feasible and _lamb_dicke_ok(prob.waveform(z), modes, spec.robust, tol.lamb_dicke)
        return _Attempt(i, z, eps, prob.objective(z, spec.objective), feasible, iters, ok)

    attempts = _run_restarts(one, spec)
    best = _winner(attempts)
    wf = prob.waveform(best.params)
    viol = float(np.max(np.abs(prob.constraints(best.params))))
    log.info("fourier: restart %d, objective %.6g, violation %.3g", best.index, best.objective, viol)
    return _finish(spec, modes, wf, best, viol, mu=wf.spectral_centroid(), attempts=attempts)


def design(spec):
    return design_segmented(spec) if spec.method == "segmented" else design_fourier(spec)


def scan_gate_time(spec, tau_list):
    """``[(tau_g, objective, eps, converged)]``.

    The objective is reported whenever the gate is reached (eps below
    tolerance), ``nan`` otherwise; ``converged`` also requires the
    Lamb-Dicke check.
    """
    rows = []
    for tau in tau_list:
        s = replace(spec, tau_g=float(tau))
        try:
            res = design(s)
        except fr.InfeasibleError as exc:
            log.info("tau_g=%.6g infeasible: %s", tau, exc)
            rows.append((float(tau), np.nan, np.nan, False))
            continue
        obj = res.objective_value if res.infidelity < s.infidelity_tol else np.nan
        rows.append((float(tau), obj, res.infidelity, res.converged))
    return rows
