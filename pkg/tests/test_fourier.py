import numpy as np
import pytest
from hypothesis import given, strategies as st

from gateforge import dynamics as dyn
from gateforge import fourier as fo
from gateforge.chain import ChainConfig, normal_modes
from gateforge.fourier import PERIOD, InfeasibleError

# three-ion bound at truncation factor 2, from an earlier bisection
BOUND3 = 1.6296


def random_quadratures(rng, system):
    c, m = rng.normal(size=system.size), rng.normal(size=system.size)
    for idx in system.structural_zeros:
        c[idx] = m[idx] = 0.0
        # carrier DC (cos 0) would be a constant spin flip
        c[idx + system.size // 2] = 0.0
    return c, m


@pytest.mark.parametrize("n_ions,n_lo,n_hi", [(2, 0, 4), (3, 1, 6), (4, 0, 5)])
def test_matrices_reproduce_dynamics(modes, n_ions, n_lo, n_hi):
    md = modes[n_ions]
    system = fo.build_constraints(md, 1.7 * PERIOD, n_lo, n_hi)
    c, m = random_quadratures(np.random.default_rng(n_ions), system)
    wf = fo.to_waveform(system, c, m)
    alpha, theta, carrier = dyn.mode_dynamics(wf, md)
    np.testing.assert_allclose(system.displacements(m), alpha, atol=1e-12)
    np.testing.assert_allclose(system.mode_phases(m), theta, rtol=1e-10, atol=1e-13)
    assert system.carrier_phase(c) == pytest.approx(carrier, abs=1e-11)
    back_c, back_m = fo.from_waveform(system, wf)
    np.testing.assert_allclose(back_c, c, atol=1e-12)
    np.testing.assert_allclose(back_m, m, atol=1e-12)


def test_robust_cross_term(modes):
    # Theta(phi0) = cos^2 th(x) + sin^2 th(y) - 2 sin cos x^T th y for f = x_c + i y_m
    md = modes[3]
    system = fo.build_constraints(md, 1.3 * PERIOD, 0, 5)
    c, m = random_quadratures(np.random.default_rng(11), system)
    wf = fo.to_waveform(system, c, m)
    for phi0 in (0.3, 1.1):
        s, co = np.sin(phi0), np.cos(phi0)
        expected = s * s * system.mode_phases(c) + co * co * system.mode_phases(m) - 2 * s * co * system.mode_phases(c, m)
        np.testing.assert_allclose(dyn.mode_dynamics(wf, md, phi0)[1], expected, rtol=1e-10, atol=1e-13)


@pytest.mark.parametrize("robust", [False, True])
def test_kernel_closes_loops(modes, robust):
    system = fo.build_constraints(modes[3], 1.9 * PERIOD, 0, 8)
    red = fo.reduce(system, robust)
    x = np.random.default_rng(0).normal(size=red.dim_kernel)
    q = red.quadratures(x)
    assert np.max(np.abs(system.displacements(q))) < 1e-12
    if robust:
        assert abs(system.carrier_phase(q)) < 1e-12
    np.testing.assert_allclose(red.mode_phases(x), system.mode_phases(q), atol=1e-12)
    np.testing.assert_allclose(red.kernel.T @ red.kernel, np.eye(red.dim_kernel), atol=1e-12)


def test_empty_kernel(modes):
    with pytest.raises(InfeasibleError):
        fo.reduce(fo.build_constraints(modes[4], 2.0, 0, 1))


@pytest.mark.parametrize("args", [(-1, 2), (3, 2)])
def test_bad_truncation(modes, args):
    with pytest.raises(ValueError):
        fo.build_constraints(modes[2], 3.0, *args)


def test_pair_matrix_kernel_is_uniform(modes):
    for md in modes.values():
        p = fo.pair_matrix(md)
        assert np.max(np.abs(p @ np.ones(md.n_modes))) < 1e-12
        u = fo.target_projector(md)
        assert u.shape[1] == md.n_modes - 1


def test_homogeneous_combination_three_ions(modes):
    w = fo.homogeneous_combinations(modes[3], dyn.GateTarget.global_gate(3))
    np.testing.assert_allclose(w, [[0.0, 1.0, -1.0]], atol=1e-12)


def test_unreachable_target(modes):
    t = dyn.GateTarget(np.array([[0, 1.0, 0.2], [1.0, 0, 0.5], [0.2, 0.5, 0]]))
    with pytest.raises(ValueError):
        fo.mode_target(modes[3], t)


@pytest.mark.parametrize("periods", [0.5, 0.93, 1.5, 2.5])
def test_two_qubit_optimum(modes, periods):
    x, norm, wf = fo.two_qubit_optimal(modes[2], periods * PERIOD)
    alpha, theta, _ = dyn.mode_dynamics(wf, modes[2])
    assert np.max(np.abs(alpha)) < 1e-12
    theta12 = dyn.pairwise_phases(modes[2], theta)[0, 1]
    assert theta12 == pytest.approx(np.pi / 4, abs=1e-12)
    assert norm == pytest.approx(np.linalg.norm(x))


def test_two_qubit_norm_falls_with_time(modes):
    norms = [fo.two_qubit_optimal(modes[2], p * PERIOD)[1] for p in (0.5, 0.93, 1.5, 2.5)]
    assert all(a > b for a, b in zip(norms[:-1], norms[1:]))


def test_two_qubit_needs_two_ions(modes):
    with pytest.raises(ValueError):
        fo.two_qubit_optimal(modes[3], 3.0)


@pytest.mark.parametrize("robust", [False, True])
def test_three_ion_bound(modes, robust):
    bound = fo.find_bound(modes[3], 1.5 * PERIOD, 1.8 * PERIOD, robust, n_hi=None, factor=2.0) / PERIOD
    assert bound == pytest.approx(BOUND3, abs=2e-4)
    lo, hi = fo.bound_matrix_eigs(modes[3], 1.5 * PERIOD, robust=robust)
    assert fo.is_definite(lo, hi) and lo > 0


def test_bound_scan_and_crossings(modes):
    taus = np.linspace(1.5, 1.8, 13) * PERIOD
    rows = fo.three_qubit_bound_scan(modes[3], taus)
    assert rows == fo.three_qubit_bound_scan(modes[3], taus, jobs=3)
    crossings = fo.scan_crossings(rows)
    assert len(crossings) == 1
    assert crossings[0] / PERIOD == pytest.approx(BOUND3, abs=0.01)


def test_bound_scan_needs_three_ions(modes):
    with pytest.raises(ValueError):
        fo.three_qubit_bound_scan(modes[2], [3.0])


def test_find_bound_bracket_errors(modes):
    with pytest.raises(InfeasibleError):
        fo.find_bound(modes[3], 1.7 * PERIOD, 1.8 * PERIOD)
    with pytest.raises(InfeasibleError):
        fo.find_bound(modes[3], 1.0 * PERIOD, 1.2 * PERIOD)


@given(st.floats(0.4, 4.0), st.integers(2, 5))
def test_default_truncation(periods, n):
    md = normal_modes(ChainConfig(n))
    tau = periods * PERIOD
    k = fo.default_truncation(md, tau)
    w = 2 * np.pi / tau
    assert k * w >= 2 * md.frequencies[-1] - 1e-9
    assert (k - 1) * w < 2 * md.frequencies[-1]


def test_robustness_residual_layout(modes):
    x, _, wf = fo.two_qubit_optimal(modes[2], 1.5 * PERIOD)
    system = fo.build_constraints(modes[2], 1.5 * PERIOD, 0, wf.max_order)
    _, m = fo.from_waveform(system, wf)
    theta = system.mode_phases(m)
    r = fo.robustness_residuals(np.zeros_like(m), m, system, theta)
    n = modes[2].n_modes
    expected = np.concatenate([[0.0, system.t_vec @ m], np.zeros(4 * n), -theta, np.zeros(2 * n)])
    np.testing.assert_allclose(r, expected, atol=1e-12)
    assert fo.fitted_mode_target(modes[2], dyn.GateTarget.global_gate(2), theta) == pytest.approx(theta)
