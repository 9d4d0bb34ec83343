import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from gateforge.waveform import (
    FourierWaveform,
    SamplingError,
    SegmentedWaveform,
    from_quadratures,
    resample,
    sample_naive,
    sample_sinc,
    segment_fourier_coeffs,
    to_quadratures,
    waveform_from_dict,
    waveform_to_dict,
    wrap_phase,
)
from strategies import segmented_waveforms


@st.composite
def fourier_waveforms(draw, max_order=6):
    m = draw(st.integers(0, max_order))
    tau = draw(st.floats(1.0, 20.0))
    parts = st.lists(st.floats(-3.0, 3.0), min_size=2 * m + 1, max_size=2 * m + 1)
    coeffs = np.array(draw(parts)) + 1j * np.array(draw(parts))
    coeffs[m] = 1j * coeffs[m].imag
    return FourierWaveform(tau, -m, m, coeffs)


def test_segmented_validation():
    with pytest.raises(ValueError):
        SegmentedWaveform(1.0, [1.0, -1.0], [1, 1], [0, 0])
    with pytest.raises(ValueError):
        SegmentedWaveform(1.0, [1.0], [1, 1], [0, 0])


def test_negative_amplitude_is_pi_shift():
    a = SegmentedWaveform(1.3, [0.5, 0.7], [-2.0, 1.0], [0.4, 0.1])
    b = SegmentedWaveform(1.3, [0.5, 0.7], [2.0, 1.0], [0.4 + np.pi, 0.1])
    t = np.linspace(0, 1.2, 17)
    np.testing.assert_allclose(a.evaluate(t), b.evaluate(t), atol=1e-14)
    assert np.all(a.amplitudes >= 0)


@given(st.floats(-50, 50))
def test_wrap_phase_range(phi):
    w = wrap_phase(phi)
    assert -np.pi < w <= np.pi
    assert np.isclose(np.exp(1j * w), np.exp(1j * phi), atol=1e-9)


def test_fourier_rejects_carrier_dc():
    with pytest.raises(ValueError):
        FourierWaveform(1.0, -1, 1, [0, 1.0, 0])
    with pytest.raises(ValueError):
        FourierWaveform(1.0, 0, 1, [0j])
    with pytest.raises(ValueError):
        FourierWaveform(-1.0, 0, 0, [0j])


@given(fourier_waveforms())
def test_quadrature_round_trip(wf):
    q = to_quadratures(wf)
    back = from_quadratures(q.omega_c, q.omega_m, wf.tau_g)
    np.testing.assert_allclose(back.coeffs, wf.coeffs, atol=1e-12)
    t = np.linspace(0, wf.tau_g, 23)
    np.testing.assert_allclose(q.evaluate(t, wf.tau_g), wf.evaluate(t), atol=1e-10)


def test_quadratures_reject_sin0():
    with pytest.raises(ValueError):
        from_quadratures([1.0, 0.0], [0.0, 0.0], 1.0)
    with pytest.raises(ValueError):
        from_quadratures([0.0, 0.0, 0.0], [0.0, 0.0, 0.0], 1.0)


@given(segmented_waveforms())
def test_segmented_dict_round_trip(wf):
    back = waveform_from_dict(waveform_to_dict(wf))
    np.testing.assert_array_equal(back.amplitudes, wf.amplitudes)
    np.testing.assert_array_equal(back.phases, wf.phases)
    np.testing.assert_array_equal(back.durations, wf.durations)
    assert back.mu == wf.mu


@given(fourier_waveforms())
def test_fourier_dict_round_trip(wf):
    back = waveform_from_dict(waveform_to_dict(wf, mu=1.5))
    np.testing.assert_array_equal(back.coeffs, wf.coeffs)
    assert (back.n_lo, back.n_hi, back.tau_g) == (wf.n_lo, wf.n_hi, wf.tau_g)


@pytest.mark.parametrize("data", [{"format": "x"}, {"format": "gateforge-wf-1", "kind": "other"}])
def test_bad_dicts(data):
    with pytest.raises(ValueError):
        waveform_from_dict(data)


def test_segment_coefficients_against_quadrature():
    rng = np.random.default_rng(1)
    wf = SegmentedWaveform(1.7, rng.uniform(0.2, 1, 5), rng.uniform(0, 2, 5), rng.uniform(-3, 3, 5))
    w = 2 * np.pi / wf.tau_g
    for m in (-3, 0, 2, 7):
        def part(t, fn):
            return fn(wf.evaluate(t) * np.exp(1j * m * w * t))

        ref = sum(
            quad(part, a, b, args=(fn,), epsabs=1e-14)[0] * unit
            for a, b in zip(wf.boundaries[:-1], wf.boundaries[1:])
            for fn, unit in ((np.real, 1), (np.imag, 1j))
        )
        assert segment_fourier_coeffs(wf, m) == pytest.approx(ref / wf.tau_g, abs=1e-13)


@given(fourier_waveforms(max_order=5), st.integers(0, 30), st.floats(-3.0, 3.0))
def test_sinc_sampling_is_exact_at_low_orders(wf, extra, mu):
    n_seg = 2 * wf.max_order + 1 + extra
    try:
        seg = sample_sinc(wf, n_seg, mu)
    except SamplingError:
        return  # mu landed on a sinc zero
    m = np.arange(-wf.max_order, wf.max_order + 1)
    ref = np.array([wf.coefficient(k) for k in m])
    scale = max(1.0, np.max(np.abs(ref)))
    assert np.max(np.abs(segment_fourier_coeffs(seg, m) - ref)) < 1e-12 * scale
    assert seg.n_segments == n_seg and seg.mu == pytest.approx(mu)


def test_sampling_needs_enough_segments():
    wf = FourierWaveform(5.0, -3, 3, np.r_[np.ones(3), 0, np.ones(3)])
    with pytest.raises(SamplingError):
        sample_sinc(wf, 6)


def test_sinc_singular_detuning():
    tau = 4.0
    wf = FourierWaveform(tau, 1, 1, [1.0])
    n_seg = 4
    # (mu - w) tau_seg / 2 = pi puts the only harmonic on a sinc zero
    mu = 2 * np.pi / tau + 2 * np.pi * n_seg / tau
    with pytest.raises(SamplingError):
        sample_sinc(wf, n_seg, mu)


def test_spectral_centroid_default():
    wf = FourierWaveform(2 * np.pi, 1, 3, [1.0, 0.0, 1.0])
    assert wf.spectral_centroid() == pytest.approx(2.0)
    assert sample_sinc(wf, 20).mu == pytest.approx(2.0)


@pytest.mark.parametrize("rule", ["midpoint", "left"])
def test_naive_sampling_hits_samples(rule):
    wf = FourierWaveform(3.0, -2, 2, [0.5, 1j, 0.3j, -1, 2])
    seg = sample_naive(wf, 12, mu=0.8, rule=rule)
    t = (np.arange(12) + (0.5 if rule == "midpoint" else 0.0)) * 0.25
    np.testing.assert_allclose(seg.evaluate(t + 1e-15), wf.evaluate(t), atol=1e-12)


def test_resample_dispatch():
    wf = FourierWaveform(3.0, 0, 1, [0j, 1.0])
    assert resample(wf, 8, "left", 1.0).n_segments == 8
    with pytest.raises(ValueError):
        resample(wf, 8, "spline")
