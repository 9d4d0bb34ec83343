import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from gateforge import dynamics as dyn
from gateforge.waveform import FourierWaveform, SegmentedWaveform
from strategies import random_segmented, segmented_waveforms


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("phi0", [0.0, 0.7])
def test_closed_forms_match_quadrature(seed, phi0):
    rng = np.random.default_rng(seed)
    wf = random_segmented(rng, n_seg=4)
    nu, eta = float(rng.uniform(0.5, 2.5)), 0.13
    assert dyn.displacement(wf, nu, phi0, eta=eta) == pytest.approx(oracles.displacement(wf, nu, eta, phi0), rel=1e-9)
    assert dyn.geometric_phase(wf, nu, phi0, eta=eta) == pytest.approx(oracles.geometric_phase(wf, nu, eta, phi0), rel=1e-9)
    assert dyn.carrier_phase(wf, phi0) == pytest.approx(oracles.carrier_phase(wf, phi0), rel=1e-9, abs=1e-12)


def test_fourier_waveform_matches_quadrature():
    rng = np.random.default_rng(5)
    coeffs = rng.normal(size=7) + 1j * rng.normal(size=7)
    coeffs[3] = 1j * coeffs[3].imag
    wf = FourierWaveform(9.0, -3, 3, coeffs)
    assert dyn.displacement(wf, 1.3, eta=0.1) == pytest.approx(oracles.displacement(wf, 1.3, 0.1), rel=1e-9)
    assert dyn.geometric_phase(wf, 1.3, eta=0.1) == pytest.approx(oracles.geometric_phase(wf, 1.3, 0.1), rel=1e-9)


def test_resonant_segment():
    # mu = nu hits the nested-integral resonance branch
    wf = SegmentedWaveform(1.0, [1.3, 2.0], [1.0, 0.4], [0.2, -1.0])
    assert dyn.geometric_phase(wf, 1.0) == pytest.approx(oracles.geometric_phase(wf, 1.0, 1.0), rel=1e-9)


@given(segmented_waveforms(), st.floats(0.0, 2 * np.pi))
def test_phase_offset_by_pi(wf, phi0):
    a, b = dyn.displacement(wf, 1.1, phi0), dyn.displacement(wf, 1.1, phi0 + np.pi)
    assert b == pytest.approx(-a, abs=1e-10)
    ta, tb = dyn.geometric_phase(wf, 1.1, phi0), dyn.geometric_phase(wf, 1.1, phi0 + np.pi)
    assert tb == pytest.approx(ta, abs=1e-9)


@given(segmented_waveforms(), st.floats(0.1, 3.0))
def test_amplitude_scaling(wf, c):
    scaled = wf.scaled(c)
    assert dyn.displacement(scaled, 1.4) == pytest.approx(c * dyn.displacement(wf, 1.4), abs=1e-10)
    assert dyn.geometric_phase(scaled, 1.4) == pytest.approx(c * c * dyn.geometric_phase(wf, 1.4), abs=1e-9)
    assert dyn.carrier_phase(scaled) == pytest.approx(c * dyn.carrier_phase(wf), abs=1e-10)


@given(segmented_waveforms(), st.floats(0.0, np.pi))
def test_phase_dependence_is_quadratic_form(wf, phi0):
    # s_phi = cos(phi) s_0 + sin(phi) s_{pi/2}, so Theta(phi) is a quadratic form in (cos, sin)
    th = [dyn.geometric_phase(wf, 1.2, p) for p in (0.0, np.pi / 4, np.pi / 2)]
    c, s = np.cos(phi0), np.sin(phi0)
    cross = th[1] - 0.5 * (th[0] + th[2])
    expected = c * c * th[0] + s * s * th[2] + 2 * s * c * cross
    assert dyn.geometric_phase(wf, 1.2, phi0) == pytest.approx(expected, abs=1e-9)


def test_time_resolved_end_matches_final():
    wf = random_segmented(np.random.default_rng(9))
    t = np.array([0.0, wf.tau_g / 3, wf.tau_g])
    alpha = dyn.displacement(wf, 1.6, 0.3, t=t)
    theta = dyn.geometric_phase(wf, 1.6, 0.3, t=t)
    assert alpha[0] == 0 and theta[0] == 0
    assert alpha[-1] == pytest.approx(dyn.displacement(wf, 1.6, 0.3), abs=1e-12)
    assert theta[-1] == pytest.approx(dyn.geometric_phase(wf, 1.6, 0.3), abs=1e-12)
    assert alpha[1] == pytest.approx(oracles.displacement(_truncate(wf, t[1]), 1.6, 1.0, 0.3), rel=1e-9)


def _truncate(wf, t):
    edges = wf.boundaries
    k = np.searchsorted(edges, t) - 1
    durations = np.r_[wf.durations[:k], t - edges[k]]
    return SegmentedWaveform(wf.mu, durations, wf.amplitudes[: k + 1], wf.phases[: k + 1])


def test_time_outside_gate():
    wf = SegmentedWaveform(1.0, [1.0], [1.0], [0.0])
    with pytest.raises(dyn.DomainError):
        dyn.displacement(wf, 1.0, t=2.0)
    with pytest.raises(dyn.DomainError):
        dyn.geometric_phase(wf, 1.0, t=-0.5)


def test_infidelity_terms(modes):
    wf = random_segmented(np.random.default_rng(3))
    m3 = modes[3]
    target = dyn.GateTarget.global_gate(3)
    alpha, theta_m, carrier = dyn.mode_dynamics(wf, m3, 0.2)
    disp, phase, carr = dyn.infidelity_terms(wf, m3, target, 0.2)
    theta = m3.vectors @ np.diag(theta_m) @ m3.vectors.T
    assert disp == pytest.approx(0.25 * np.sum(np.abs(alpha) ** 2))
    assert phase == pytest.approx(sum((theta[i, j] - np.pi / 4) ** 2 for i in range(3) for j in range(i + 1, 3)))
    assert carr == pytest.approx(3 * carrier**2)
    assert dyn.infidelity(wf, m3, target, 0.2) == pytest.approx(disp + phase + carr)


def test_identity_target_of_zero_drive(modes):
    wf = SegmentedWaveform(1.0, [1.0, 1.0], [0.0, 0.0], [0.0, 0.0])
    assert dyn.infidelity(wf, modes[2], dyn.GateTarget.from_name("identity", 2)) == 0.0
    assert dyn.infidelity(wf, modes[2], dyn.GateTarget.global_gate(2)) == pytest.approx((np.pi / 4) ** 2)


def test_targets():
    t = dyn.GateTarget.from_name("global-alt", 3)
    assert t.theta_target[0, 2] == pytest.approx(-3 * np.pi / 4)
    with pytest.raises(ValueError):
        dyn.GateTarget.from_name("nope", 3)


@given(segmented_waveforms(max_seg=3))
def test_phase_scan_is_pi_periodic(wf):
    target = dyn.GateTarget.global_gate(2)
    from gateforge.chain import ChainConfig, normal_modes

    m2 = normal_modes(ChainConfig(2))
    eps = np.array([e for _, e in dyn.phase_scan(wf, m2, target, 8)])
    np.testing.assert_allclose(eps[:4], eps[4:], rtol=1e-9, atol=1e-12)


def test_phase_scan_jobs_identical(modes):
    wf = random_segmented(np.random.default_rng(4))
    target = dyn.GateTarget.global_gate(4)
    assert dyn.phase_scan(wf, modes[4], target, 16, jobs=1) == dyn.phase_scan(wf, modes[4], target, 16, jobs=3)


def test_gate_report_consistency(modes):
    wf = random_segmented(np.random.default_rng(6))
    target = dyn.GateTarget.global_gate(3)
    rep = dyn.gate_report(wf, modes[3], target, 0.5)
    assert rep.infidelity == pytest.approx(dyn.infidelity(wf, modes[3], target, 0.5))
    # time-resolved pair phases end at the final pair phases
    np.testing.assert_allclose(rep.phase_evolution[-1], rep.theta_final, atol=1e-12)
    assert rep.max_displacement == pytest.approx(dyn.max_displacement(wf, modes[3], 0.5))
    assert set(rep.to_dict()) >= {"alpha_final", "theta_final", "phi_carrier", "infidelity"}


@pytest.mark.parametrize("t0", [0.0, 0.37, 2.0])
def test_ellipse(t0):
    nu, mu = 1.0, 1.2
    pts = dyn.displacement_ellipse(t0, np.pi / nu, mu, nu, 48)
    resid, center, axes = dyn.fit_conic(pts)
    assert resid < 1e-10
    assert abs(center) < 1e-10
    np.testing.assert_allclose(axes, dyn.ellipse_semi_axes(t0, np.pi / nu, mu, nu), rtol=1e-8)
    # each point is the displacement of a unit segment with that phase
    phi = -np.pi + 2 * np.pi / 48
    direct = oracles.quad(lambda t: np.sin(mu * t + phi) * np.cos(nu * t), t0, t0 + np.pi)[0]
    assert pts[0].real == pytest.approx(direct, abs=1e-12)
