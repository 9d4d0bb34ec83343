"""Equilibrium positions and axial normal modes of a linear ion chain.

All quantities are dimensionless: lengths in units of the characteristic
length ``(e^2 / 4 pi eps0 M nu0^2)^(1/3)``, frequencies in units of the
centre-of-mass frequency ``nu0`` and times in units of ``1/nu0``.
"""

from dataclasses import dataclass

import numpy as np


class ConvergenceError(RuntimeError):
    """Raised when the equilibrium solver fails to reach its tolerance."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class ChainConfig:
    n_ions: int
    nu0: float = 1.0
    eta_com: float = 0.13

    def __post_init__(self):
        if int(self.n_ions) != self.n_ions or self.n_ions < 1:
            raise ValueError(f"n_ions must be a positive integer, got {self.n_ions}")
        if not self.nu0 > 0:
            raise ValueError(f"nu0 must be positive, got {self.nu0}")
        if not 0 <= self.eta_com < 1:
            raise ValueError(f"eta_com must lie in [0, 1), got {self.eta_com}")


@dataclass(frozen=True)
class ModeStructure:
    """Axial modes sorted by ascending frequency.

    ``vectors[j, m]`` is the participation of ion ``j`` in mode ``m`` and
    ``lamb_dicke[j, m] = vectors[j, m] * eta_m``.
    """

    frequencies: np.ndarray
    vectors: np.ndarray
    lamb_dicke: np.ndarray
    positions: np.ndarray
    eta_com: float = 0.13

    @property
    def n_modes(self):
        return len(self.frequencies)

    @property
    def eta_modes(self):
        """Per-mode Lamb-Dicke parameters ``eta_m`` (before b-weighting)."""
        return self.eta_com * np.sqrt(self.frequencies[0] / self.frequencies)


def _forces(u):
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    return -u + np.sum(np.sign(d) / d**2, axis=1)


def _hessian(u):
    d = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(d, np.inf)
    coupling = 2.0 / d**3
    hess = -coupling
    np.fill_diagonal(hess, 1.0 + coupling.sum(axis=1))
    return hess


def equilibrium_positions(config, tol=1e-12, max_iter=200):
    """Stationary points of the harmonic-plus-Coulomb potential.

    Damped Newton iteration from a uniformly spaced guess. Returns positions
    sorted ascending; raises ``ConvergenceError`` if the force residual stays
    above ``tol``.
    """
    n = config.n_ions
    if n == 1:
        return np.zeros(1)
    # spacing roughly matching the central ion separation of long chains
    spacing = 2.0 * n**-0.56 if n > 2 else 2 ** (1 / 3)
    u = spacing * (np.arange(n) - (n - 1) / 2)
    residual = np.max(np.abs(_forces(u)))
    for _ in range(max_iter):
        if residual < tol:
            break
        step = np.linalg.solve(_hessian(u), _forces(u))
        damping = 1.0
        while True:
            trial = u + damping * step
            if np.all(np.diff(trial) > 0):
                trial_res = np.max(np.abs(_forces(trial)))
                if trial_res < residual or damping < 1e-6:
                    break
            elif damping < 1e-6:
                raise ConvergenceError("equilibrium solver lost ion ordering", residual)
            damping /= 2
        u, residual = trial, trial_res
    else:
        if residual >= tol:
            raise ConvergenceError("equilibrium solver did not converge", residual)
    # symmetrise against round-off drift
    u = 0.5 * (u - u[::-1])
    residual = np.max(np.abs(_forces(u)))
    if residual >= tol:
        raise ConvergenceError("equilibrium solver did not converge", residual)
    return u


def _fix_signs(vectors):
    out = vectors.copy()
    for m in range(out.shape[1]):
        nonzero = np.flatnonzero(np.abs(out[:, m]) > 1e-12)
        if nonzero.size and out[nonzero[0], m] < 0:
            out[:, m] = -out[:, m]
    return out


def lamb_dicke_matrix(modes, eta_com):
    """``eta_{j,m} = b_{j,m} * eta_com * sqrt(nu_0 / nu_m)``."""
    scale = eta_com * np.sqrt(modes.frequencies[0] / modes.frequencies)
    return modes.vectors * scale[None, :]


def normal_modes(config):
    u = equilibrium_positions(config)
    evals, evecs = np.linalg.eigh(_hessian(u))
    order = np.argsort(evals)
    freqs = np.sqrt(evals[order]) * config.nu0
    vectors = _fix_signs(evecs[:, order])
    if config.n_ions > 1:
        # the COM mode is exactly uniform; remove O(eps) mixing
        vectors[:, 0] = 1.0 / np.sqrt(config.n_ions)
        freqs[0] = config.nu0
    modes = ModeStructure(freqs, vectors, np.zeros_like(vectors), u, config.eta_com)
    return ModeStructure(freqs, vectors, lamb_dicke_matrix(modes, config.eta_com), u, config.eta_com)


MODES_FORMAT = "gateforge-modes-1"


def modes_to_dict(modes, config=None):
    out = {
        "format": MODES_FORMAT,
        "n_ions": int(modes.vectors.shape[0]),
        "eta_com": float(modes.eta_com),
        "frequencies": modes.frequencies.tolist(),
        "vectors": modes.vectors.tolist(),
        "lamb_dicke": modes.lamb_dicke.tolist(),
        "positions": modes.positions.tolist(),
    }
    if config is not None:
        out["nu0"] = float(config.nu0)
    return out


def modes_from_dict(data):
    if data.get("format") != MODES_FORMAT:
        raise ValueError(f"unsupported modes format {data.get('format')!r}")
    vectors = np.asarray(data["vectors"], dtype=float)
    freqs = np.asarray(data["frequencies"], dtype=float)
    if vectors.shape != (freqs.size, freqs.size):
        raise ValueError("mode vectors must be square and match the frequencies")
    return ModeStructure(
        freqs,
        vectors,
        np.asarray(data["lamb_dicke"], dtype=float),
        np.asarray(data["positions"], dtype=float),
        float(data["eta_com"]),
    )
