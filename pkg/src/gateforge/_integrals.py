"""Closed-form integrals of complex exponentials on ``[0, h]``.

Every waveform in the package is, piece by piece, a finite sum of complex
exponentials, so displacements and geometric phases reduce to the primitives
below. Each takes an array namespace ``xp`` (numpy or jax.numpy) so the same
expressions serve plain evaluation and automatic differentiation.
"""

# frequencies below this are treated as exactly resonant
RESONANCE_TOL = 1e-9

# Orientation of geometric phases:
# Theta = PHASE_SIGN * 2 eta^2 int int_{t2<t1} s(t1) s(t2) sin(nu (t1 - t2)).
# With +1, a positive pi/4 pair phase is reachable at every gate time for two
# ions (detuning above a mode accumulates negative phase).
PHASE_SIGN = 1.0


def _dsinc(xp, x):
    # d/dx [sin(x)/x]; Taylor branch avoids cancellation near 0
    small = xp.abs(x) < 1e-2
    xs = xp.where(small, 1.0, x)
    exact = (xp.cos(xs) - xp.sin(xs) / xs) / xs
    x2 = x * x
    series = x * (-1.0 / 3 + x2 * (1.0 / 30 + x2 * (-1.0 / 840 + x2 / 45360)))
    return xp.where(small, series, exact)


def expint(xp, lam, h):
    """``int_0^h exp(i*lam*u) du``, smooth through ``lam = 0``."""
    x = lam * h / 2
    return h * xp.exp(1j * x) * xp.sinc(x / xp.pi)


def moment1(xp, lam, h):
    """``int_0^h u*exp(i*lam*u) du``."""
    x = lam * h / 2
    return -1j * (h * h / 2) * xp.exp(1j * x) * (1j * xp.sinc(x / xp.pi) + _dsinc(xp, x))


def nested_expint(xp, p, q, h):
    """``int_0^h exp(i*p*u) int_0^u exp(-i*q*v) dv du``.

    Falls back to the ``q = 0`` limit when ``|q| < RESONANCE_TOL``.
    """
    small = xp.abs(q) < RESONANCE_TOL
    q_safe = xp.where(small, 1.0, q)
    general = (expint(xp, p, h) - expint(xp, p - q_safe, h)) / (1j * q_safe)
    return xp.where(small, moment1(xp, p, h), general)
