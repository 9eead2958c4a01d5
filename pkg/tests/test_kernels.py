import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lossyspdc import kernels

needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba backend disabled")


def _inputs(seed, n):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    f = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    p = rng.random(n)
    return g, f, p


@needs_numba
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.sampled_from([1, 5, 16]))
def test_apply_phase_backends_agree(seed, n):
    g, f, p = _inputs(seed, n)
    e = np.exp(1j * p)
    a, b = g.copy(), f.copy()
    kernels._apply_phase_numpy(a, b, e)
    kernels._apply_phase_numba(g, f, e)
    np.testing.assert_allclose(g, a, rtol=1e-14, atol=1e-14)
    np.testing.assert_allclose(f, b, rtol=1e-14, atol=1e-14)


@needs_numba
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.sampled_from([1, 5, 16]), h=st.floats(1e-4, 0.5))
def test_couple_backends_agree(seed, n, h):
    g, f, p = _inputs(seed, n)
    grow, shrink = np.exp(p * h), np.exp(-p * h)
    src_p, src_m = p * h, 0.5 * p * h
    a, b = g.copy(), f.copy()
    kernels._couple_numpy(a, b, grow, shrink, 0.9, src_p, src_m)
    kernels._couple_numba(g, f, grow, shrink, 0.9, src_p, src_m)
    np.testing.assert_allclose(g, a, rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(f, b, rtol=1e-13, atol=1e-13)


@needs_numba
@given(seed=st.integers(0, 2 ** 32 - 1), band=st.integers(1, 4))
def test_edge_fraction_backends_agree(seed, band):
    _, f, _ = _inputs(seed, 16)
    assert kernels._edge_fraction_numba(f, band) == pytest.approx(kernels._edge_fraction_numpy(f, band),
                                                                   rel=1e-12)


def test_couple_zero_pump_is_pure_decay():
    g, f, _ = _inputs(0, 6)
    a, b = g.copy(), f.copy()
    ones, zeros = np.ones(6), np.zeros(6)
    kernels.couple(a, b, ones, ones, 0.5, zeros, zeros)
    np.testing.assert_allclose(a, 0.5 * g)
    np.testing.assert_allclose(b, 0.5 * f)


def test_edge_fraction_locates_pair_mean_time():
    n = 16
    f = np.zeros((n, n), dtype=complex)
    f[n // 2, n // 2] = 1.0           # centre of the window
    assert kernels.edge_fraction(f, 2) == 0.0
    f[0, 1] = 1.0                     # pair mean time at the left edge
    assert kernels.edge_fraction(f, 2) == pytest.approx(0.5)
    assert kernels.edge_fraction(np.zeros((n, n), dtype=complex), 2) == 0.0


def test_exprel():
    x = np.array([-1.0, -1e-7, 0.0, 1e-7, 2.0])
    expected = np.array([np.expm1(-1.0) / -1.0, 1.0 - 5e-8, 1.0, 1.0 + 5e-8, np.expm1(2.0) / 2.0])
    np.testing.assert_allclose(kernels.exprel(x), expected, rtol=1e-14)
