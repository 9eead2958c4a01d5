import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import unitary_group

from lossyspdc.core import CFState, Domain, PhysicalParams, build_grid, cf_to_frequency, vacuum
from lossyspdc.homodyne import (TraceRow, build_quadratic_form, cross_correlations, max_variance,
                                mean_photon_number, most_squeezed_mode, pair_conjugate_modes,
                                quadrature_spectrum, stage_classifier, trace_quantities)
from lossyspdc.singlemode import analytic_moments, variance_extrema


def squeezed_state(r, w, dw):
    """Independent squeezed vacua mixed by the unitary ``w``, as frequency-domain densities.

    ``a = w b`` with ``b_k = cosh(r_k) c_k + sinh(r_k) c_k^dag`` acting on vacuum ``c``.
    Its quadrature variances are exactly ``exp(-+2 r_k)/2``.
    """
    g = w.conj() @ np.diag(np.sinh(r) ** 2) @ w.T
    f = w @ np.diag(np.sinh(r) * np.cosh(r)) @ w.T
    return CFState(g / dw, f / dw, Domain.FREQUENCY)


# -- hand cases -------------------------------------------------------------

def test_vacuum_form_is_zero():
    grid = build_grid(8, 8.0)
    mform = build_quadratic_form(vacuum(grid), grid)
    assert not mform.m.any()
    rng = np.random.default_rng(0)
    phi = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    phi /= np.linalg.norm(phi) * math.sqrt(grid.dw)
    assert mform.variance(phi) == 0.5
    modes = quadrature_spectrum(mform, grid)
    assert all(md.variance == pytest.approx(0.5) for md in modes)


@pytest.mark.parametrize("dw", [1.0, 0.3])
def test_single_cell_hand_diagonalization(dw):
    n, m = 0.7, 0.4
    state = CFState(np.array([[n / dw]], dtype=complex), np.array([[m / dw]], dtype=complex), Domain.FREQUENCY)
    mform = build_quadratic_form(state, SimpleNamespace(dw=dw))
    np.testing.assert_allclose(np.linalg.eigvalsh(mform.m), [n - m, n + m])
    lo, hi = quadrature_spectrum(mform)
    assert lo.variance == pytest.approx(0.5 + n - m)
    assert hi.variance == pytest.approx(0.5 + n + m)
    assert lo.conj_variance == pytest.approx(hi.variance)


def test_single_cell_lossless_state():
    mp = analytic_moments(PhysicalParams(), 1.0)
    state = CFState(np.array([[mp.n]], dtype=complex), np.array([[mp.m]]), Domain.FREQUENCY)
    mode = quadrature_spectrum(build_quadratic_form(state, SimpleNamespace(dw=1.0)), k=1)[0]
    assert mode.variance == pytest.approx(math.exp(-2) / 2, rel=1e-12)
    assert mode.uncertainty_product == pytest.approx(0.25, rel=1e-12)


def test_multimode_flat_steady_state():
    """Every time cell in the lossy single-mode steady state: best quadrature is 0.375."""
    grid = build_grid(16, 10.0)
    ss = analytic_moments(PhysicalParams(l_a=1 / 6), 40.0)
    eye = np.eye(16, dtype=complex)
    state = cf_to_frequency(CFState(ss.n * eye / grid.dt, ss.m * eye / grid.dt, Domain.TIME), grid)
    mode = most_squeezed_mode(state, grid)
    assert mode.variance == pytest.approx(0.375, rel=1e-10)
    assert max_variance(build_quadratic_form(state, grid)) == pytest.approx(0.75, rel=1e-10)
    assert mean_photon_number(state, grid) == pytest.approx(16 * 0.0625, rel=1e-12)


def test_rejects_unstructured_or_time_domain():
    grid = build_grid(8, 8.0)
    with pytest.raises(ValueError):
        build_quadratic_form(vacuum(grid, Domain.TIME), grid)
    bad = np.zeros((8, 8), dtype=complex)
    bad[0, 1] = 1.0
    with pytest.raises(ValueError):
        build_quadratic_form(CFState(bad, np.zeros_like(bad), Domain.FREQUENCY), grid)


# -- pure-state oracle --------------------------------------------------------

@given(seed=st.integers(0, 2 ** 32 - 1), dw=st.floats(0.05, 2.0))
def test_pure_state_spectrum(seed, dw):
    rng = np.random.default_rng(seed)
    r = rng.uniform(0.05, 1.2, 4)
    w = unitary_group.rvs(4, random_state=rng)
    state = squeezed_state(r, w, dw)
    mform = build_quadratic_form(state, SimpleNamespace(dw=dw))
    modes = quadrature_spectrum(mform)
    expected = np.sort(np.concatenate([np.exp(-2 * r), np.exp(2 * r)]) / 2)
    np.testing.assert_allclose([md.variance for md in modes], expected, rtol=1e-9)
    for md in modes:
        assert md.uncertainty_product == pytest.approx(0.25, rel=1e-9)
        assert np.linalg.norm(md.phi) ** 2 * dw == pytest.approx(1.0, rel=1e-12)
    cc = cross_correlations(mform, modes)
    off = cc - np.diag(np.diag(cc))
    assert np.abs(off).max() < 1e-10 * np.abs(mform.m).max()


@given(seed=st.integers(0, 2 ** 32 - 1), theta=st.floats(0.0, 2 * math.pi))
def test_phase_rotation_leaves_spectrum(seed, theta):
    rng = np.random.default_rng(seed)
    state = squeezed_state(rng.uniform(0.1, 1.0, 3), unitary_group.rvs(3, random_state=rng), 1.0)
    rotated = CFState(state.g.copy(), state.f * np.exp(2j * theta), Domain.FREQUENCY)
    grid = SimpleNamespace(dw=1.0)
    a = [md.variance for md in quadrature_spectrum(build_quadratic_form(state, grid))]
    b = [md.variance for md in quadrature_spectrum(build_quadratic_form(rotated, grid))]
    np.testing.assert_allclose(a, b, rtol=1e-10)


def test_conjugate_pairing():
    rng = np.random.default_rng(3)
    r = np.array([0.2, 0.5, 0.9])
    state = squeezed_state(r, unitary_group.rvs(3, random_state=rng), 1.0)
    mform = build_quadratic_form(state, SimpleNamespace(dw=1.0))
    modes = quadrature_spectrum(mform)
    groups = pair_conjugate_modes(modes, 1.0)
    assert len(groups) == 3
    for i, j in groups:
        assert j is not None
        assert modes[i].conj_variance == pytest.approx(modes[j].variance, rel=1e-9)


# -- scalars ------------------------------------------------------------------

def test_vacuum_trace_row():
    grid = build_grid(8, 8.0)
    row = trace_quantities(vacuum(grid), grid)
    assert row.as_tuple() == (0.0, 0.0, 0.5, 0.5, 0.25)
    assert mean_photon_number(vacuum(grid, Domain.TIME), grid) == 0.0


def test_k_bounds():
    grid = build_grid(8, 8.0)
    mform = build_quadratic_form(vacuum(grid), grid)
    with pytest.raises(ValueError):
        quadrature_spectrum(mform, grid, k=0)
    with pytest.raises(ValueError):
        quadrature_spectrum(mform, grid, k=17)


# -- stage classifier ---------------------------------------------------------

def single_mode_trace(params, l_total, samples=401):
    rows = []
    for z in np.linspace(0.0, l_total, samples):
        mp = analytic_moments(params, z)
        v_min, v_max = variance_extrema(params, z)
        rows.append(TraceRow(float(z), mp.n, v_min, v_max, v_min * v_max))
    return rows


def test_stages_high_loss_single_mode():
    params = PhysicalParams(l_a=1 / 6)
    rep = stage_classifier(single_mode_trace(params, 2.0), params)
    assert rep.stages == ("nonlinear", "stationary")
    assert rep.linear_onset is None
    assert 1 / 3 <= rep.attenuation_ratio <= 3.0


def test_stages_lossless_is_single_stage():
    rep = stage_classifier(single_mode_trace(PhysicalParams(), 2.0))
    assert rep.stages == ("nonlinear",)
    assert rep.linear_onset is None and rep.plateau_onset is None


def test_stages_short_trace():
    rep = stage_classifier([TraceRow(0.0, 0.0, 0.5, 0.5, 0.25)])
    assert rep.stages == ("nonlinear",)


def test_stages_linear_then_plateau_synthetic():
    """Mode frozen at z0 while photons keep arriving until loss stops them."""
    z = np.linspace(0.0, 5.0, 501)
    v = 0.5 - 0.1 * (1 - np.exp(-z / 0.1))
    c = 0.5 + 0.2 * (1 - np.exp(-z / 0.1))
    n = 1 - np.exp(-z / 1.0)
    rows = [TraceRow(*x) for x in zip(z, n, v, c, v * c)]
    rep = stage_classifier(rows, PhysicalParams(l_ov=0.1, l_a=1.0))
    assert rep.stages == ("nonlinear", "linear", "stationary")
    assert rep.linear_onset == pytest.approx(0.1, rel=1e-2)
    assert rep.plateau_onset == pytest.approx(1.0, rel=2e-2)  # total change is 1 - e^-5, not 1
