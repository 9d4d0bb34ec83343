"""Segmented and Fourier waveform representations and conversions between them.

The blue-sideband drive is the complex function ``f(t) = Omega(t) exp(-i(mu t + phi(t)))``
on ``[0, tau_g]``. A segmented waveform holds piecewise-constant ``Omega``
and ``phi`` at a fixed detuning ``mu``; a Fourier waveform holds the
coefficients of ``f(t) = sum_n Omega_n exp(-i n omega t)``, ``omega = 2 pi / tau_g``.
"""

from dataclasses import dataclass

import numpy as np

from gateforge.io import FORMAT_VERSION


class SamplingError(ValueError):
    pass


def wrap_phase(phi):
    """Map phases into ``(-pi, pi]``."""
    out = np.pi - np.mod(np.pi - np.asarray(phi, dtype=float), 2 * np.pi)
    return out


@dataclass(frozen=True)
class SegmentedWaveform:
    mu: float
    durations: np.ndarray
    amplitudes: np.ndarray
    phases: np.ndarray
    phi0: float = 0.0

    def __post_init__(self):
        durations = np.atleast_1d(np.asarray(self.durations, dtype=float))
        amplitudes = np.atleast_1d(np.asarray(self.amplitudes, dtype=float))
        phases = np.atleast_1d(np.asarray(self.phases, dtype=float))
        if not durations.shape == amplitudes.shape == phases.shape or durations.ndim != 1:
            raise ValueError("durations, amplitudes and phases must be 1-D and equally long")
        if durations.size == 0 or np.any(durations <= 0):
            raise ValueError("segment durations must be strictly positive")
        # negative amplitude == pi phase shift
        flip = amplitudes < 0
        phases = wrap_phase(phases + np.pi * flip)
        amplitudes = np.abs(amplitudes)
        object.__setattr__(self, "durations", durations)
        object.__setattr__(self, "amplitudes", amplitudes)
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "phi0", float(self.phi0))

    @classmethod
    def uniform(cls, mu, tau_g, amplitudes, phases, phi0=0.0):
        amplitudes = np.asarray(amplitudes, dtype=float)
        n = amplitudes.size
        return cls(mu, np.full(n, tau_g / n), amplitudes, phases, phi0)

    @property
    def n_segments(self):
        return self.durations.size

    @property
    def tau_g(self):
        return float(np.sum(self.durations))

    @property
    def boundaries(self):
        return np.concatenate([[0.0], np.cumsum(self.durations)])

    @property
    def segments(self):
        return list(zip(self.durations.tolist(), self.amplitudes.tolist(), self.phases.tolist()))

    def scaled(self, factor):
        return SegmentedWaveform(self.mu, self.durations, factor * self.amplitudes, self.phases, self.phi0)

    def shifted(self, dphi):
        return SegmentedWaveform(self.mu, self.durations, self.amplitudes, self.phases + dphi, self.phi0)

    def evaluate(self, t):
        """Complex drive ``f(t)``; ``t`` may be an array."""
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(self.boundaries, t, side="right") - 1, 0, self.n_segments - 1)
        return self.amplitudes[k] * np.exp(-1j * (self.mu * t + self.phases[k] + self.phi0))

    def to_dict(self):
        return {
            "format": FORMAT_VERSION,
            "kind": "segmented",
            "mu": self.mu,
            "tau_g": self.tau_g,
            "phi0": self.phi0,
            "segments": [list(seg) for seg in self.segments],
        }


@dataclass(frozen=True)
class FourierWaveform:
    """Coefficients ``coeffs[n - n_lo]`` for ``n = n_lo..n_hi``.

    ``Re(Omega_0) = 0`` is enforced so the carrier phase vanishes exactly.
    """

    tau_g: float
    n_lo: int
    n_hi: int
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        if self.n_lo > self.n_hi:
            raise ValueError("n_lo must not exceed n_hi")
        if coeffs.shape != (self.n_hi - self.n_lo + 1,):
            raise ValueError(f"expected {self.n_hi - self.n_lo + 1} coefficients, got {coeffs.shape}")
        if self.tau_g <= 0:
            raise ValueError("tau_g must be positive")
        if self.n_lo <= 0 <= self.n_hi:
            i0 = -self.n_lo
            scale = max(1.0, float(np.max(np.abs(coeffs))))
            if abs(coeffs[i0].real) > 1e-12 * scale:
                raise ValueError("Re(Omega_0) must vanish (carrier-free waveform)")
            coeffs = coeffs.copy()
            coeffs[i0] = 1j * coeffs[i0].imag
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "tau_g", float(self.tau_g))
        object.__setattr__(self, "n_lo", int(self.n_lo))
        object.__setattr__(self, "n_hi", int(self.n_hi))

    @property
    def omega(self):
        return 2 * np.pi / self.tau_g

    @property
    def harmonics(self):
        return np.arange(self.n_lo, self.n_hi + 1)

    @property
    def max_order(self):
        return max(abs(self.n_lo), abs(self.n_hi))

    def coefficient(self, n):
        if self.n_lo <= n <= self.n_hi:
            return complex(self.coeffs[n - self.n_lo])
        return 0j

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        phases = np.exp(-1j * np.multiply.outer(t, self.harmonics * self.omega))
        return phases @ self.coeffs

    def scaled(self, factor):
        return FourierWaveform(self.tau_g, self.n_lo, self.n_hi, factor * self.coeffs)

    def spectral_centroid(self):
        """Detuning minimising the sinc-sampling leakage ``sum |Omega_n|^2 (mu - n w)^2``."""
        weights = np.abs(self.coeffs) ** 2
        if weights.sum() == 0:
            return 0.0
        return float(np.sum(weights * self.harmonics * self.omega) / weights.sum())

    def to_dict(self, mu=None):
        out = {
            "format": FORMAT_VERSION,
            "kind": "fourier",
            "tau_g": self.tau_g,
            "n_lo": self.n_lo,
            "n_hi": self.n_hi,
            "coeffs": [[c.real, c.imag] for c in self.coeffs.tolist()],
        }
        if mu is not None:
            out["mu"] = float(mu)
        return out


@dataclass(frozen=True)
class QuadratureVectors:
    """Carrier ``[ic; rc]`` and motional ``[rm; im]`` blocks for ``n = 0..M``."""

    omega_c: np.ndarray
    omega_m: np.ndarray

    @property
    def order(self):
        return self.omega_c.size // 2 - 1

    def blocks(self):
        h = self.order + 1
        return self.omega_c[:h], self.omega_c[h:], self.omega_m[:h], self.omega_m[h:]

    def evaluate(self, t, tau_g):
        """``f(t) = c(t) + i d(t)`` rebuilt from the sine/cosine expansions."""
        ic, rc, rm, im = self.blocks()
        n = np.arange(self.order + 1)
        arg = np.multiply.outer(np.asarray(t, dtype=float), n * 2 * np.pi / tau_g)
        s, c = np.sin(arg), np.cos(arg)
        return s @ ic + c @ rc + 1j * (s @ rm + c @ im)


def to_quadratures(wf):
    m = wf.max_order
    full = np.array([wf.coefficient(n) for n in range(-m, m + 1)])
    pos, neg = full[m:], full[m::-1]  # Omega_n and Omega_{-n} for n = 0..M
    rc = pos.real + neg.real
    ic = pos.imag - neg.imag
    rm = -pos.real + neg.real
    im = pos.imag + neg.imag
    rc[0], im[0], ic[0], rm[0] = pos[0].real, pos[0].imag, 0.0, 0.0
    return QuadratureVectors(np.concatenate([ic, rc]), np.concatenate([rm, im]))


def from_quadratures(omega_c, omega_m, tau_g):
    omega_c = np.asarray(omega_c, dtype=float)
    omega_m = np.asarray(omega_m, dtype=float)
    if omega_c.shape != omega_m.shape or omega_c.ndim != 1 or omega_c.size % 2 or omega_c.size < 2:
        raise ValueError(f"inconsistent quadrature lengths {omega_c.shape} and {omega_m.shape}")
    h = omega_c.size // 2
    ic, rc = omega_c[:h], omega_c[h:]
    rm, im = omega_m[:h], omega_m[h:]
    scale = max(1.0, float(np.max(np.abs(omega_c))), float(np.max(np.abs(omega_m))))
    if abs(ic[0]) > 1e-12 * scale or abs(rm[0]) > 1e-12 * scale:
        raise ValueError("sin(0) coordinates must be zero")
    pos = 0.5 * ((rc - rm) + 1j * (ic + im))
    neg = 0.5 * ((rc + rm) + 1j * (im - ic))
    pos[0] = rc[0] + 1j * im[0]
    coeffs = np.concatenate([neg[:0:-1], pos])
    m = h - 1
    return FourierWaveform(tau_g, -m, m, coeffs)


def _check_sampling(wf, n_seg):
    if n_seg <= 2 * wf.max_order:
        raise SamplingError(f"need n_seg > 2*M = {2 * wf.max_order}, got {n_seg}")


def sample_sinc(wf, n_seg, mu=None):
    """Piecewise-constant waveform whose Fourier coefficients equal ``wf``'s for ``|m| <= M``.

    Each coefficient is divided by ``sinc((mu - n w) tau_seg / 2)`` before the
    drive is sampled at segment midpoints. ``mu=None`` picks the spectral
    centroid, which minimises the aliased high-order terms.
    """
    _check_sampling(wf, n_seg)
    if mu is None:
        mu = wf.spectral_centroid()
    tau_seg = wf.tau_g / n_seg
    detune = mu - wf.harmonics * wf.omega
    x = detune * tau_seg / 2
    sinc = np.sinc(x / np.pi)
    bad = np.flatnonzero((np.abs(sinc) < 1e-9) & (wf.coeffs != 0))
    if bad.size:
        raise SamplingError(f"sinc correction is singular for harmonic n={int(wf.harmonics[bad[0]])}")
    corrected = np.where(np.abs(sinc) < 1e-9, 0.0, wf.coeffs / np.where(np.abs(sinc) < 1e-9, 1.0, sinc))
    t_mid = (np.arange(n_seg) + 0.5) * tau_seg
    h = np.exp(1j * np.multiply.outer(t_mid, detune)) @ corrected
    return SegmentedWaveform(mu, np.full(n_seg, tau_seg), np.abs(h), -np.angle(h))


def sample_naive(wf, n_seg, mu=None, rule="midpoint"):
    """Pointwise amplitude/phase sampling at each segment's midpoint or left edge."""
    if mu is None:
        mu = wf.spectral_centroid()
    tau_seg = wf.tau_g / n_seg
    offset = {"midpoint": 0.5, "left": 0.0}[rule]
    t = (np.arange(n_seg) + offset) * tau_seg
    h = wf.evaluate(t) * np.exp(1j * mu * t)
    return SegmentedWaveform(mu, np.full(n_seg, tau_seg), np.abs(h), -np.angle(h))


def segment_fourier_coeffs(wf, m):
    """Exact ``(1/tau_g) int_0^tau_g f_seg(t) exp(i m w t) dt`` for a segmented waveform."""
    tau_g = wf.tau_g
    rate = np.atleast_1d(m) * (2 * np.pi / tau_g) - wf.mu
    a = wf.boundaries[:-1]
    h = wf.durations
    x = np.multiply.outer(rate, h) / 2
    seg_int = h * np.exp(1j * (np.multiply.outer(rate, a) + x)) * np.sinc(x / np.pi)
    amp = wf.amplitudes * np.exp(-1j * (wf.phases + wf.phi0))
    out = seg_int @ amp / tau_g
    return out[0] if np.ndim(m) == 0 else out


def resample(wf, n_seg, method="sinc", mu=None):
    if method == "sinc":
        return sample_sinc(wf, n_seg, mu)
    if method in ("midpoint", "left"):
        return sample_naive(wf, n_seg, mu, rule=method)
    raise ValueError(f"unknown sampling method {method!r}")


def waveform_from_dict(data):
    fmt = data.get("format")
    if fmt != FORMAT_VERSION:
        raise ValueError(f"unsupported waveform format {fmt!r}")
    kind = data.get("kind")
    if kind == "segmented":
        segs = np.asarray(data["segments"], dtype=float).reshape(-1, 3)
        return SegmentedWaveform(data["mu"], segs[:, 0], segs[:, 1], segs[:, 2], data.get("phi0", 0.0))
    if kind == "fourier":
        coeffs = np.asarray(data["coeffs"], dtype=float).reshape(-1, 2)
        return FourierWaveform(data["tau_g"], data["n_lo"], data["n_hi"], coeffs[:, 0] + 1j * coeffs[:, 1])
    raise ValueError(f"unknown waveform kind {kind!r}")


def waveform_to_dict(wf, **extra):
    data = wf.to_dict(**extra) if isinstance(wf, FourierWaveform) else wf.to_dict()
    return data
