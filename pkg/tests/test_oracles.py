import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from conftest import cached_mesh, cached_system
from nodalsym import oracles as orc
from nodalsym.geometry import Wheel

# Frozen from scipy.special.jnp_zeros and cross-checked with mpmath.besseljzero(k, m, 1).
FROZEN_ZEROS = {
    (1, 1): 1.8411837813406593,
    (2, 1): 3.0542369282271404,
    (0, 2): 3.8317059702075125,
    (3, 1): 4.2011889412105285,
    (1, 2): 5.3314427735250325,
}


@pytest.mark.parametrize("km,value", sorted(FROZEN_ZEROS.items()))
def test_frozen_derivative_zeros(km, value):
    assert orc.bessel_deriv_zero(*km) == pytest.approx(value, abs=1e-10)


def test_zeros_agree_with_mpmath():
    for k in range(4):
        for m in range(1, 4):
            # mpmath also counts x = 0 as the first zero of J_0'
            ref = float(mpmath.besseljzero(k, m, derivative=1))
            assert orc.bessel_deriv_zero(k, m) == pytest.approx(ref, abs=1e-10)


def test_j0_at_two():
    # 40-term alternating series in exact rational arithmetic
    from fractions import Fraction
    series = sum(Fraction((-1) ** m, math.factorial(m) ** 2) for m in range(40))
    assert orc.bessel_j(0, 2.0) == pytest.approx(float(series), abs=1e-13)
    assert orc.bessel_j(0, 2.0) == pytest.approx(float(mpmath.besselj(0, 2)), abs=1e-15)
    assert orc.bessel_j(0, 2.0) == pytest.approx(0.22389077914123567, abs=1e-15)


@settings(max_examples=200)
@given(st.integers(0, 8), st.floats(0, 50))
def test_bessel_against_scipy(k, x):
    assert orc.bessel_j(k, x) == pytest.approx(special.jv(k, x), abs=1e-12)


def test_derivative_vanishes_at_zeros():
    for k in range(5):
        for z in orc.bessel_deriv_zeros(k, 30.0):
            if z > 0:
                assert abs(orc.bessel_jp(k, z)) <= 1e-10


def test_interlacing():
    for k in range(1, 5):
        a = orc.bessel_deriv_zeros(k, 40.0)
        b = orc.bessel_deriv_zeros(k + 1, 40.0)
        for i in range(min(len(a), len(b)) - 1):
            assert a[i] < b[i] < a[i + 1]


def test_bracket_not_found():
    with pytest.raises(orc.BracketNotFound):
        orc.bessel_deriv_zero(3, 10, x_max=10.0)
    with pytest.raises(ValueError):
        orc.bessel_deriv_zero(0, 0)


def test_unit_disk_spectrum():
    modes = orc.disk_spectrum(1.0, 6)
    assert modes[0].mu == 0.0
    assert [m.k for m in modes] == [0, 1, 1, 2, 2, 0]
    assert [m.parity for m in modes[1:]] == ["odd", "odd", "even", "even", "even"]
    assert modes[1].mu == pytest.approx(1.8411837813406593**2, rel=1e-12)
    assert modes[5].mu == pytest.approx(3.8317059702075125**2, rel=1e-12)


@given(st.floats(0.1, 10))
def test_disk_spectrum_scaling(radius):
    unit = [m.mu for m in orc.disk_spectrum(1.0, 8)]
    scaled = [m.mu for m in orc.disk_spectrum(radius, 8)]
    assert np.allclose(np.array(scaled) * radius**2, unit, rtol=1e-12)


def test_rectangle_spectrum():
    modes = orc.rectangle_spectrum(2.0, 1.0, 4)
    assert modes[0] == (0.0, "even", 0, 0)
    assert modes[1].mu == pytest.approx(0.6168502750680849, rel=1e-14)
    assert modes[1].parity == "odd" and (modes[1].m, modes[1].n) == (1, 0)
    # (2, 0) and (0, 1) tie at pi^2 / 4
    assert {(md.m, md.n, md.parity) for md in modes[2:]} == {(2, 0, "even"), (0, 1, "odd")}
    assert modes[2].mu == modes[3].mu
    square = orc.rectangle_spectrum(1.0, 1.0, 3)
    assert square[1].mu == square[2].mu == pytest.approx(math.pi**2 / 4)


def test_bound_closed_forms():
    b = orc.step1_upper_bound(1, 2, 3, 0.01)
    assert b.numerator == pytest.approx(216 * 0.01 / (25 * math.pi**2), rel=1e-14)
    assert b.value == pytest.approx(0.022836058584137345, rel=1e-12)
    assert b.hub_level == 1 / math.pi and b.tire_level == 1 / (5 * math.pi)


def test_bound_against_quadrature():
    r1, r2, r3, eps = 1.0, 2.0, 3.0, 0.2
    b = orc.step1_upper_bound(r1, r2, r3, eps)
    hub, tire = math.pi * r1**2, math.pi * (r3**2 - r2**2)

    def phi(r):
        t = (r - r1) / (r2 - r1)
        return (1 - t) / hub - t / tire

    width = 4 * eps
    grad = width * integrate.quad(lambda r: ((1 / hub + 1 / tire) / (r2 - r1)) ** 2 * r, r1, r2)[0]
    mean_num = width * integrate.quad(lambda r: phi(r) * r, r1, r2)[0]
    sq = hub / hub**2 + tire / tire**2 + width * integrate.quad(lambda r: phi(r) ** 2 * r, r1, r2)[0]
    area = Wheel(r1, r2, r3, eps).area()
    assert b.numerator == pytest.approx(grad, rel=1e-12)
    assert b.denominator == pytest.approx(sq - mean_num**2 / area, rel=1e-12)


def test_bound_matches_fem_rayleigh_quotient():
    m, K, M = cached_system("wheel", 0.033)
    b = orc.step1_upper_bound(1, 2, 3, 0.1)
    r = np.linalg.norm(m.vertices, axis=1)
    t = np.clip(r - 1.0, 0.0, 1.0)
    v = np.where(r <= 1, b.hub_level, np.where(r >= 2, -b.tire_level,
                                                (1 - t) * b.hub_level - t * b.tire_level))
    one = np.ones(m.n_vertices)
    mass = one @ (M @ one)
    q = (v @ (K @ v)) / (v @ (M @ v) - (one @ (M @ v)) ** 2 / mass)
    assert q == pytest.approx(b.value, rel=0.03)
    assert cached_mesh("wheel", 0.033).n_boundary_loops == 3


def test_bound_increasing_in_eps():
    eps = np.linspace(0.01, 0.75, 40)
    assert np.all(np.diff(orc.bound_grid(1, 2, 3, eps)) > 0)


def test_bound_argument_checks():
    with pytest.raises(ValueError):
        orc.step1_upper_bound(2, 1, 3, 0.1)
    with pytest.raises(ValueError):
        orc.step1_upper_bound(1, 2, 3, 0.8)
