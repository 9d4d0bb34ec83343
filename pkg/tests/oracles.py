"""Adaptive-quadrature reference values, independent of the closed forms.

Each piece of a waveform is integrated with ``scipy.integrate.quad``; the
double integral for the geometric phase is split into same-piece triangles
(``dblquad``) and cross-piece rectangles, which factorise into products of
single integrals.
"""

import numpy as np
from scipy.integrate import dblquad, quad

from gateforge.waveform import FourierWaveform, SegmentedWaveform

QUAD = dict(epsabs=1e-13, epsrel=1e-12, limit=400)


def pieces(wf):
    """Breakpoints on which ``wf`` is smooth.

    Fourier waveforms are cut into pieces about one period of the highest
    harmonic long, so each piece converges in few subdivisions.
    """
    if isinstance(wf, SegmentedWaveform):
        return wf.boundaries
    if isinstance(wf, FourierWaveform):
        return np.linspace(0.0, wf.tau_g, max(1, wf.max_order) + 1)
    raise TypeError(type(wf).__name__)


def _drive(wf, phi0):
    if isinstance(wf, FourierWaveform):
        rates = -wf.harmonics * wf.omega
        amps = wf.coeffs * np.exp(-1j * phi0)
        return lambda t: complex(amps @ np.exp(1j * rates * t))
    return lambda t: complex(wf.evaluate(t) * np.exp(-1j * phi0))


def motional_drive(wf, phi0=0.0):
    """``s(t) = -Im(f(t) exp(-i phi0))``."""
    f = _drive(wf, phi0)
    return lambda t: -f(t).imag


def carrier_drive(wf, phi0=0.0):
    f = _drive(wf, phi0)
    return lambda t: f(t).real


def _q(fn, a, b):
    return quad(fn, a, b, **QUAD)[0]


def displacement(wf, nu, eta, phi0=0.0):
    s = motional_drive(wf, phi0)
    edges = pieces(wf)
    re = sum(_q(lambda t: s(t) * np.cos(nu * t), a, b) for a, b in zip(edges[:-1], edges[1:]))
    im = sum(_q(lambda t: s(t) * np.sin(nu * t), a, b) for a, b in zip(edges[:-1], edges[1:]))
    return 1j * eta * (re + 1j * im)


def carrier_phase(wf, phi0=0.0):
    c = carrier_drive(wf, phi0)
    edges = pieces(wf)
    return sum(_q(c, a, b) for a, b in zip(edges[:-1], edges[1:]))


def geometric_phase(wf, nu, eta, phi0=0.0):
    """``2 eta^2 int int_{t2<t1} s(t1) s(t2) sin(nu (t1 - t2))``."""
    s = motional_drive(wf, phi0)
    edges = pieces(wf)
    total = 0.0
    cum_c = cum_s = 0.0  # int s cos, int s sin over earlier pieces
    for a, b in zip(edges[:-1], edges[1:]):
        inner, _ = dblquad(
            lambda t2, t1: s(t1) * s(t2) * np.sin(nu * (t1 - t2)),
            a,
            b,
            a,
            lambda t1: t1,
            epsabs=1e-13,
            epsrel=1e-12,
        )
        pc = _q(lambda t: s(t) * np.cos(nu * t), a, b)
        ps = _q(lambda t: s(t) * np.sin(nu * t), a, b)
        # sin(nu (t1 - t2)) = sin(nu t1) cos(nu t2) - cos(nu t1) sin(nu t2)
        total += inner + ps * cum_c - pc * cum_s
        cum_c += pc
        cum_s += ps
    return 2 * eta**2 * total
