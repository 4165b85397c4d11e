import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special as sp

from quadwell.oracle import bessel_series_mp, pcf_series_mp
from quadwell.special import bessel_j, bessel_jn, bessel_tail_bound, pcf_d, pcf_origin

# extended-precision series values
D_03_17 = 0.5853516157849894
J1_1 = 0.4400505857449335


def test_pcf_integer_orders_reduce_to_hermite_functions():
    z = np.linspace(-8, 8, 161)
    g = np.exp(-z * z / 4)
    assert np.allclose(pcf_d(0.0, z), g, rtol=1e-13, atol=1e-300)
    assert np.allclose(pcf_d(1.0, z), z * g, rtol=1e-13, atol=1e-14)
    assert np.allclose(pcf_d(2.0, z), (z * z - 1) * g, rtol=1e-13, atol=1e-14)


def test_pcf_frozen_series_value():
    assert pcf_d(0.3, 1.7) == pytest.approx(D_03_17, rel=1e-13)
    assert float(pcf_series_mp(0.3, 1.7)) == pytest.approx(D_03_17, rel=1e-15)


def test_pcf_origin_matches_gamma_formula():
    for nu in (-0.4, 0.3, 1.0, 2.7, 7.5):
        v, d = pcf_origin(nu)
        ev = mpmath.sqrt(mpmath.pi) * 2 ** (nu / 2) * mpmath.rgamma((1 - nu) / 2)
        ed = -mpmath.sqrt(mpmath.pi) * 2 ** ((nu + 1) / 2) * mpmath.rgamma(-nu / 2)
        assert v == pytest.approx(float(ev), rel=1e-13, abs=1e-300)
        assert d == pytest.approx(float(ed), rel=1e-13, abs=1e-300)


@pytest.mark.parametrize("nu", [-0.45, 0.12, 0.5, 1.9, 3.3, 6.71, 12.4])
def test_pcf_against_mpmath(nu):
    z = np.array([-6.0, -2.5, -0.3, 0.0, 0.7, 2.0, 4.5, 7.0, 10.0])
    got, der = pcf_d(nu, z, derivative=True)
    for zi, g, d in zip(z, got, der):
        ref = float(mpmath.pcfd(nu, zi))
        dref = float(mpmath.diff(lambda t: mpmath.pcfd(nu, t), zi))
        env = math.exp(-zi * zi / 4) * max(1.0, abs(zi)) ** nu if zi >= 0 else abs(ref) + 1e-300
        assert abs(g - ref) <= 1e-10 * max(env, abs(ref))
        assert abs(d - dref) <= 1e-10 * max(env * max(1.0, abs(zi)), abs(dref))


@settings(max_examples=40, deadline=None)
@given(nu=st.floats(-0.49, 10.0), z=st.floats(0.0, 9.0))
def test_pcf_satisfies_weber_equation(nu, z):
    h = 1e-3
    y = pcf_d(nu, np.array([z - h, z, z + h]))
    d2 = (y[0] - 2 * y[1] + y[2]) / h**2
    resid = d2 - (z * z / 4 - nu - 0.5) * y[1]
    assert abs(resid) <= 1e-5 * (abs(y[1]) + abs(d2) + 1e-300) + 1e-9 * np.max(np.abs(y))


def test_bessel_small_values():
    J = bessel_jn(5, 0.0)
    assert J[0] == 1.0 and np.all(J[1:] == 0.0)
    assert bessel_j(1, 1.0) == pytest.approx(J1_1, rel=1e-14)
    assert float(bessel_series_mp(1, 1.0)) == pytest.approx(J1_1, rel=1e-15)


def test_bessel_normalisation_identity():
    J = bessel_jn(80, 3.2)
    assert J[0] ** 2 + 2 * np.sum(J[1:] ** 2) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("alpha", [-37.0, -3.7, 1e-9, 0.4, 2.0, 19.5, 50.0])
def test_bessel_against_mpmath(alpha):
    J = bessel_jn(200, alpha)
    for n in (0, 1, 2, 7, 30, 60, 120, 200):
        ref = float(mpmath.besselj(n, alpha))
        assert J[n] == pytest.approx(ref, rel=1e-13, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(-50.0, 50.0), n=st.integers(0, 60))
def test_bessel_agrees_with_scipy(alpha, n):
    ref = sp.jv(n, alpha)
    assert bessel_j(n, alpha) == pytest.approx(ref, rel=1e-11, abs=1e-15)


def test_bessel_vectorised_shape_and_parity():
    a = np.linspace(-4, 4, 9).reshape(3, 3)
    J = bessel_jn(10, a)
    assert J.shape == (3, 3, 11)
    n = np.arange(11)
    assert np.allclose(J[0, 0], (-1.0) ** n * J[2, 2], rtol=1e-15, atol=0)


def test_bessel_domain_errors():
    with pytest.raises(ValueError):
        bessel_jn(10, 50.5)
    with pytest.raises(ValueError):
        bessel_jn(201, 1.0)


def test_tail_bound_dominates():
    for a in (0.1, 1.0, 3.0, 10.0):
        for n in (12, 20, 40):
            assert abs(bessel_j(n, a)) <= bessel_tail_bound(n, a)
