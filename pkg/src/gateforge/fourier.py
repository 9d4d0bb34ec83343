"""Fourier-basis constraint matrices, kernel reduction and speed-limit scans.

A gate of duration ``tau_g`` is expanded on harmonics ``n * omega`` with
``omega = 2 pi / tau_g``. Pairing the ``+n`` and ``-n`` coefficients splits the
drive into a carrier quadrature vector ``[ic; rc]`` and a motional quadrature
vector ``[rm; im]`` (sine block first, cosine block second), in which the
carrier phase is linear, each displacement is linear and each geometric phase
is a quadratic form.
"""

from dataclasses import dataclass, field

import numpy as np

from gateforge._integrals import PHASE_SIGN, expint, nested_expint
from gateforge.chain import normal_modes

PERIOD = 2 * np.pi


class InfeasibleError(ValueError):
    """No waveform satisfies the constraints at this gate time/truncation."""

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


@dataclass
class ConstraintSystem:
    tau_g: float
    n_lo: int
    n_hi: int
    frequencies: np.ndarray
    eta_modes: np.ndarray
    vectors: np.ndarray
    t_vec: np.ndarray
    a_vecs: np.ndarray  # (modes, 2H) complex
    theta_mats: np.ndarray  # (modes, 2H, 2H)
    theta_sym: np.ndarray = field(init=False)
    l_mat: np.ndarray = field(init=False)

    def __post_init__(self):
        self.theta_sym = 0.5 * (self.theta_mats + np.swapaxes(self.theta_mats, 1, 2))
        self.l_mat = np.vstack([self.a_vecs.real, self.a_vecs.imag])

    @property
    def harmonics(self):
        return np.arange(self.n_lo, self.n_hi + 1)

    @property
    def size(self):
        return 2 * (self.n_hi - self.n_lo + 1)

    @property
    def structural_zeros(self):
        """Coordinates multiplying ``sin(0)``; always zero by construction."""
        return [int(i) for i in np.flatnonzero(self.harmonics == 0)]

    def carrier_phase(self, omega_c):
        return float(self.t_vec @ omega_c)

    def displacements(self, omega_m):
        return self.a_vecs @ omega_m

    def mode_phases(self, omega_m, other=None):
        other = omega_m if other is None else other
        return np.einsum("i,mij,j->m", omega_m, self.theta_sym, other)


@dataclass
class ReducedSystem:
    system: ConstraintSystem
    kernel: np.ndarray
    a_mats: np.ndarray
    robust: bool = False

    @property
    def dim_kernel(self):
        return self.kernel.shape[1]

    def quadratures(self, x):
        return self.kernel @ x

    def mode_phases(self, x, y=None):
        y = x if y is None else y
        return np.einsum("i,mij,j->m", x, self.a_mats, y)


def _basis_terms(harmonics, omega, nu):
    """Exponential expansion of ``sin(n w t) e^{i nu t}`` and ``cos(n w t) e^{i nu t}``.

    Returns ``(coeffs, rates)`` of shape (2H, 2): row ``r`` of the sine block
    (then the cosine block) equals ``sum_p coeffs[r, p] exp(i rates[r, p] t)``.
    """
    h = len(harmonics)
    rates = np.empty((2 * h, 2))
    rates[:, 0] = nu + np.tile(harmonics, 2) * omega
    rates[:, 1] = nu - np.tile(harmonics, 2) * omega
    coeffs = np.empty((2 * h, 2), dtype=complex)
    coeffs[:h] = [1 / 2j, -1 / 2j]
    coeffs[h:] = [0.5, 0.5]
    # sin(0) is identically zero; both terms cancel exactly
    return coeffs, rates


def build_constraints(modes, tau_g, n_lo, n_hi):
    """Carrier vector ``T``, displacement vectors ``a_m`` and phase matrices ``theta_m``.

    ``n_lo..n_hi`` is the range of paired (non-negative) harmonics. All
    entries are closed-form integrals of exponential products; the phase
    blocks share the orientation used by the dynamics module.
    """
    if not 0 <= n_lo <= n_hi:
        raise ValueError(f"need 0 <= n_lo <= n_hi, got ({n_lo}, {n_hi})")
    if tau_g <= 0:
        raise ValueError("tau_g must be positive")
    omega = 2 * np.pi / tau_g
    harmonics = np.arange(n_lo, n_hi + 1)
    h = len(harmonics)

    t_r = np.where(harmonics == 0, 0.0, (1 - np.cos(harmonics * omega * tau_g)) / np.where(harmonics == 0, 1, harmonics * omega))
    t_i = np.where(harmonics == 0, tau_g, np.sin(harmonics * omega * tau_g) / np.where(harmonics == 0, 1, harmonics * omega))
    t_vec = np.concatenate([t_r, t_i])

    nus = np.asarray(modes.frequencies, dtype=float)
    etas = np.asarray(modes.eta_modes, dtype=float)
    a_vecs = np.empty((len(nus), 2 * h), dtype=complex)
    thetas = np.empty((len(nus), 2 * h, 2 * h))
    for m, (nu, eta) in enumerate(zip(nus, etas)):
        coeffs, rates = _basis_terms(harmonics, omega, nu)
        a_vecs[m] = -1j * eta * np.sum(coeffs * expint(np, rates, tau_g), axis=1)
        # int int_{t2<t1} u(t1) v(t2) sin(nu (t1 - t2)) = Im sum_pq c_p conj(d_q) G(p, q)
        g = nested_expint(np, rates[:, None, :, None], rates[None, :, None, :], tau_g)
        pair = coeffs[:, None, :, None] * np.conj(coeffs)[None, :, None, :] * g
        thetas[m] = 2 * PHASE_SIGN * eta**2 * np.imag(pair.sum(axis=(2, 3)))
    return ConstraintSystem(tau_g, n_lo, n_hi, nus, etas, np.asarray(modes.vectors), t_vec, a_vecs, thetas)


def _null_space(mat, rcond=1e-10):
    if mat.shape[0] == 0:
        return np.eye(mat.shape[1])
    _, s, vt = np.linalg.svd(mat)
    cutoff = rcond * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > cutoff))
    return vt[rank:].T


def linear_constraints(system, robust=False):
    """Rows annihilating admissible quadrature vectors.

    Closure rows (real and imaginary parts of every ``a_m``) plus a unit row
    for each structural zero; ``robust`` adds the carrier row ``T``.
    """
    rows = [system.l_mat]
    for idx in system.structural_zeros:
        unit = np.zeros(system.size)
        unit[idx] = 1.0
        rows.append(unit[None, :])
    if robust:
        rows.append(system.t_vec[None, :] / system.tau_g)
    return np.vstack(rows)


def reduce(system, robust=False, rcond=1e-10):
    """Orthonormal kernel basis ``K`` of the linear constraints and ``A_m = K^T theta_m K``."""
    kernel = _null_space(linear_constraints(system, robust), rcond)
    if kernel.shape[1] == 0:
        raise InfeasibleError(f"closure constraints leave an empty kernel at tau_g={system.tau_g:.6g}")
    a_mats = np.einsum("ik,mij,jl->mkl", kernel, system.theta_sym, kernel)
    a_mats = 0.5 * (a_mats + np.swapaxes(a_mats, 1, 2))
    return ReducedSystem(system, kernel, a_mats, robust)


def default_truncation(modes, tau_g, factor=2.0):
    """Smallest ``n_hi`` with ``n_hi * omega >= factor * max(nu_m)``."""
    omega = 2 * np.pi / tau_g
    return int(np.ceil(factor * np.max(modes.frequencies) / omega - 1e-12))


def _pad(system, vec):
    """Embed a quadrature vector on ``n_lo..n_hi`` into ``0..n_hi``."""
    h = system.n_hi - system.n_lo + 1
    full = np.zeros(2 * (system.n_hi + 1))
    full[system.n_lo : system.n_hi + 1] = vec[:h]
    full[system.n_hi + 1 + system.n_lo :] = vec[h:]
    return full


def to_waveform(system, omega_c, omega_m):
    """FourierWaveform for quadrature vectors defined on the system's harmonics."""
    from gateforge.waveform import from_quadratures

    if omega_c is None:
        omega_c = np.zeros(system.size)
    return from_quadratures(_pad(system, omega_c), _pad(system, omega_m), system.tau_g)


def from_waveform(system, wf):
    """Quadrature vectors of ``wf`` restricted to the system's harmonics."""
    from gateforge.waveform import to_quadratures

    if not np.isclose(wf.tau_g, system.tau_g, rtol=1e-12):
        raise ValueError("waveform and constraint system have different gate times")
    if wf.max_order > system.n_hi:
        raise ValueError("waveform has harmonics beyond the system truncation")
    q = to_quadratures(wf)
    m = wf.max_order
    out = []
    for vec in (q.omega_c, q.omega_m):
        full = np.zeros(2 * (system.n_hi + 1))
        full[: m + 1] = vec[: m + 1]
        full[system.n_hi + 1 : system.n_hi + 2 + m] = vec[m + 1 :]
        lo = system.n_lo
        if np.any(np.abs(full[:lo]) > 0) or np.any(np.abs(full[system.n_hi + 1 : system.n_hi + 1 + lo]) > 0):
            raise ValueError("waveform has harmonics below the system truncation")
        out.append(np.concatenate([full[lo : system.n_hi + 1], full[system.n_hi + 1 + lo :]]))
    return out[0], out[1]


def pair_matrix(modes):
    """Rows ``b_im b_jm`` for every pair ``i < j``: ``Theta_pairs = P @ Theta_modes``."""
    b = np.asarray(modes.vectors)
    iu, ju = np.triu_indices(b.shape[0], 1)
    return b[iu] * b[ju]


def mode_target(modes, target, tol=1e-9):
    """Particular per-mode phases ``theta_p`` realising ``target`` (min-norm).

    Every solution is ``theta_p + c * ones``; ``ones`` spans the kernel of
    the pair matrix by completeness of the mode vectors.
    """
    p = pair_matrix(modes)
    t = target.offdiag()
    theta_p, *_ = np.linalg.lstsq(p, t, rcond=None)
    resid = np.linalg.norm(p @ theta_p - t)
    if resid > tol * max(1.0, np.linalg.norm(t)):
        raise ValueError(f"target phases are not reachable by any set of mode phases (residual {resid:.3g})")
    return theta_p


def target_projector(modes, rcond=1e-10):
    """Orthonormal basis ``U`` of ``range(P)``; ``U^T (P theta - t) = 0`` is non-redundant."""
    p = pair_matrix(modes)
    u, s, _ = np.linalg.svd(p, full_matrices=False)
    rank = int(np.sum(s > rcond * (s[0] if s.size else 0.0)))
    return u[:, :rank]


def homogeneous_combinations(modes, target):
    """Weights ``w`` with ``sum_m w_m Theta_m = 0`` for every admissible mode-phase vector.

    These are orthogonal to ``ones`` and to ``theta_p``. Each row is scaled so
    its largest entry has magnitude one and its first nonzero entry is
    positive; for the three-ion global gate this gives ``(0, 1, -1)``.
    """
    theta_p = mode_target(modes, target)
    n = modes.n_modes
    basis = np.vstack([np.ones(n), theta_p])
    w = _null_space(basis).T
    out = []
    for row in w:
        row = row / np.max(np.abs(row))
        row[np.abs(row) < 1e-12] = 0.0
        if row[np.flatnonzero(row)[0]] < 0:
            row = -row
        out.append(row + 0.0)
    return np.array(out)


def _extreme_eigs(red, weights):
    mat = np.einsum("m,mij->ij", weights, red.a_mats)
    lam = np.linalg.eigvalsh(mat)
    return float(lam[0]), float(lam[-1])


def _pair_combination(modes, i=0, j=1):
    b = np.asarray(modes.vectors)
    return b[i] * b[j]


def two_qubit_optimal(modes, tau_g, n_hi=None, factor=2.0, phase=np.pi / 4):
    """Minimum-norm carrier-free waveform with ``Theta_12 = phase`` and closed loops.

    ``Theta_12 = x^T D x`` with ``D = sum_m b_1m b_2m A_m = (A_0 - A_1) / 2``.
    The least-norm solution lies along the eigenvector of the largest
    positive eigenvalue (only eigenvalues of the target's sign can be used).
    Returns ``(x, norm, waveform)``.
    """
    if modes.n_modes != 2:
        raise ValueError("two_qubit_optimal needs a two-ion chain")
    if n_hi is None:
        n_hi = default_truncation(modes, tau_g, factor)
    system = build_constraints(modes, tau_g, 0, n_hi)
    red = reduce(system)
    lam, vec = np.linalg.eigh(np.einsum("m,mij->ij", _pair_combination(modes), red.a_mats))
    signed = lam * np.sign(phase)
    k = int(np.argmax(signed))
    if signed[k] <= 0:
        raise InfeasibleError(f"no eigenvalue of the required sign at tau_g={tau_g:.6g}")
    v = vec[:, k]
    # deterministic sign: first significant component positive
    v = v * np.sign(v[np.flatnonzero(np.abs(v) > 1e-12)[0]])
    x = v * np.sqrt(phase / lam[k])
    return x, float(np.linalg.norm(x)), to_waveform(system, None, red.quadratures(x))


def bound_matrix_eigs(modes, tau_g, target=None, robust=False, n_hi=None, factor=2.0, n_lo=0, index=None):
    """Extreme eigenvalues of ``sum_m w_m A_m`` for a homogeneous combination ``w``.

    ``index=None`` returns the first combination's pair; an integer selects
    one; ``index="all"`` returns a list over every combination.
    """
    from gateforge.dynamics import GateTarget

    target = target or GateTarget.global_gate(modes.n_modes)
    weights = homogeneous_combinations(modes, target)
    if weights.shape[0] == 0:
        raise ValueError("target leaves no homogeneous phase condition to scan")
    if n_hi is None:
        n_hi = default_truncation(modes, tau_g, factor)
    red = reduce(build_constraints(modes, tau_g, n_lo, n_hi), robust=robust)
    if index == "all":
        return [_extreme_eigs(red, w) for w in weights]
    return _extreme_eigs(red, weights[0 if index is None else index])


def three_qubit_bound_scan(modes, tau_list, robust=False, n_hi=None, factor=2.0, target=None, jobs=1):
    """``[(tau_g, lambda_min, lambda_max)]`` of ``A_1 - A_2`` (global target) over ``tau_list``."""
    if modes.n_modes != 3:
        raise ValueError("three_qubit_bound_scan needs a three-ion chain")

    def one(tau):
        lo, hi = bound_matrix_eigs(modes, tau, target, robust, n_hi, factor)
        return float(tau), lo, hi

    tau_list = [float(t) for t in tau_list]
    if jobs and jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, tau_list))
    return [one(t) for t in tau_list]


def is_definite(lam_min, lam_max, rtol=1e-12):
    scale = max(abs(lam_min), abs(lam_max), 1e-300)
    return lam_min > -rtol * scale or lam_max < rtol * scale


def find_bound(modes, lo, hi, robust=False, n_hi=None, factor=2.0, target=None, tol_periods=1e-4):
    """Bisect the gate time where the bound matrix turns definite.

    ``lo`` must be definite and ``hi`` indefinite (times in units of
    ``1/nu_0``). Returns the crossing in units of ``1/nu_0``.
    """
    def definite(tau):
        return is_definite(*bound_matrix_eigs(modes, tau, target, robust, n_hi, factor))

    if not definite(lo):
        raise InfeasibleError(f"matrix already indefinite at the lower end {lo / PERIOD:.4f} periods")
    if definite(hi):
        raise InfeasibleError(f"matrix still definite at the upper end {hi / PERIOD:.4f} periods")
    while (hi - lo) / PERIOD > tol_periods:
        mid = 0.5 * (lo + hi)
        if definite(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def scan_crossings(rows):
    """Gate times (same units as rows) where definiteness flips, by linear interpolation."""
    out = []
    for (t0, a0, b0), (t1, a1, b1) in zip(rows[:-1], rows[1:]):
        d0, d1 = is_definite(a0, b0), is_definite(a1, b1)
        if d0 == d1:
            continue
        # interpolate the eigenvalue that changes sign
        if np.sign(a0) != np.sign(a1):
            f0, f1 = a0, a1
        else:
            f0, f1 = b0, b1
        out.append(t0 + (t1 - t0) * f0 / (f0 - f1) if f0 != f1 else 0.5 * (t0 + t1))
    return out


def robustness_residuals(omega_c, omega_m, system, theta_modes):
    """Residuals of the phase-robustness conditions (all zero for a robust gate).

    Order: carrier phase of each quadrature, closure (real then imaginary
    parts, per mode) of each quadrature, phase deficits of each quadrature,
    then the cross terms.
    """
    omega_c = np.asarray(omega_c, dtype=float)
    omega_m = np.asarray(omega_m, dtype=float)
    theta_modes = np.asarray(theta_modes, dtype=float)
    ac = system.displacements(omega_c)
    am = system.displacements(omega_m)
    return np.concatenate(
        [
            [system.t_vec @ omega_c, system.t_vec @ omega_m],
            ac.real,
            ac.imag,
            am.real,
            am.imag,
            system.mode_phases(omega_c) - theta_modes,
            system.mode_phases(omega_m) - theta_modes,
            system.mode_phases(omega_c, omega_m),
        ]
    )


def fitted_mode_target(modes, target, theta_modes):
    """``theta_p + c`` with ``c`` the least-squares offset towards ``theta_modes``."""
    theta_p = mode_target(modes, target)
    c = float(np.mean(np.asarray(theta_modes) - theta_p))
    return theta_p + c
