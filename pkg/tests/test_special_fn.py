import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special
from scipy.integrate import dblquad

from sheetfield.errors import ArgumentError
from sheetfield.special_fn import (bessel_f, bessel_f_array, compute_r0, f, gronwall_sequence,
                                   picard_radius)


def brute_f(y, n=30):
    return math.fsum(y ** k / math.factorial(k) ** 2 for k in range(n))


def test_f_at_zero():
    r = bessel_f(0.0)
    assert r.value == 1.0
    assert r.terms_used >= 1


def test_f_at_one_matches_partial_sums():
    assert bessel_f(1.0).value == pytest.approx(brute_f(1.0), rel=1e-15)
    assert bessel_f(1.0).value == pytest.approx(2.2795853023360673, rel=1e-15)


def test_f_vanishes_near_r0():
    assert abs(f(-1.4458)) < 1e-4


@pytest.mark.parametrize("y", [-30.0, -5.0, -1.0, 0.5, 3.0, 20.0])
def test_f_against_bessel_functions(y):
    s = abs(y)
    ref = special.j0(2 * math.sqrt(s)) if y < 0 else special.i0(2 * math.sqrt(s))
    assert f(y) == pytest.approx(ref, rel=1e-12, abs=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.floats(-40, 40), st.sampled_from([1e-6, 1e-10, 1e-15]))
def test_truncation_bound_below_tolerance(y, tol):
    r = bessel_f(y, tol)
    assert r.terms_used >= 1
    assert 0 <= r.truncation_bound <= tol * max(abs(r.value), 1e-300) or r.truncation_bound == 0


def test_invalid_arguments():
    with pytest.raises(ArgumentError):
        bessel_f(1.0, tol=0)
    with pytest.raises(ArgumentError):
        bessel_f(float("nan"))
    with pytest.raises(OverflowError):
        bessel_f(1e308)


def test_f_increasing_and_dominates_linear():
    ys = np.linspace(0, 5, 100)
    vals = np.array([f(y) for y in ys])
    assert np.all(np.diff(vals) > 0)
    assert np.all(vals >= 1 + ys)


@pytest.mark.parametrize("c", [-1.0, 0.5, 1.0])
def test_goursat_identity(c):
    n = 801
    s = np.linspace(0, 1, n)
    F = bessel_f_array(c * np.multiply.outer(s, s))
    inner = np.trapezoid(np.trapezoid(F, s, axis=1), s)
    assert f(c) == pytest.approx(1 + c * inner, abs=1e-6)


def test_goursat_identity_adaptive():
    val, _ = dblquad(lambda a, s: f(-s * a), 0, 1, 0, 1, epsabs=1e-12)
    assert f(-1.0) == pytest.approx(1 - val, abs=1e-10)


def test_array_version_agrees():
    ys = np.linspace(-50, 50, 41)
    ref = np.array([f(y) for y in ys])
    np.testing.assert_allclose(bessel_f_array(ys), ref, rtol=1e-12, atol=1e-11)
    with pytest.raises(ArgumentError):
        bessel_f_array([101.0])


def test_r0_value_and_bessel_zero():
    r0 = compute_r0(1e-6)
    assert 1.4457 <= r0 <= 1.4459
    j0 = special.jn_zeros(0, 1)[0]
    assert compute_r0(1e-12) == pytest.approx((j0 / 2) ** 2, abs=1e-11)


def test_r0_against_grid_scan():
    ts = np.linspace(1, 2, 100001)
    vals = bessel_f_array(-ts)
    k = np.flatnonzero(np.diff(np.sign(vals)) != 0)[0]
    assert ts[k] <= compute_r0(1e-10) <= ts[k + 1]


def test_r0_bracket_signs():
    assert bessel_f(0.0).value == 1.0
    assert bessel_f(-2.0).value < 0
    with pytest.raises(ArgumentError):
        compute_r0(0)


def test_gronwall_first_terms():
    x = gronwall_sequence(3)
    assert x[:3] == [1.0, 1.0, 0.75]
    assert x[3] == pytest.approx(0.75 - 0.25 + 1 / 36)


def test_gronwall_convolution_identity():
    n_max = 100
    x = gronwall_sequence(n_max)
    j = np.arange(n_max + 1)
    c = (-1.0) ** j * np.exp(-2 * special.gammaln(j + 1))
    conv = np.convolve(c, x)[: n_max + 1]
    assert conv[0] == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(conv[1:])) < 1e-12
    assert all(math.isfinite(v) for v in x)
    with pytest.raises(ArgumentError):
        gronwall_sequence(-1)


def test_gronwall_radius_is_r0():
    x = gronwall_sequence(60)
    assert x[60] ** (1 / 60) == pytest.approx(1 / compute_r0(), rel=0.05)


def test_picard_radius():
    assert picard_radius(1.0) == pytest.approx(1.20241, abs=1e-5)
    assert picard_radius(2.0) == pytest.approx(picard_radius(1.0) / 2, rel=1e-15)
    with pytest.raises(ArgumentError):
        picard_radius(0.0)


@pytest.mark.parametrize("K", [0.5, 1.0, 3.0])
def test_picard_series_summability(K):
    x = np.array(gronwall_sequence(120))
    n = np.arange(x.size)
    inside = (K * 0.9 * picard_radius(K)) ** (2 * n) * x
    outside = (K * 1.1 * picard_radius(K)) ** (2 * n) * x
    assert np.all(inside[21:] / inside[20:-1] < 1)
    assert outside[-1] > outside[60] > 1
