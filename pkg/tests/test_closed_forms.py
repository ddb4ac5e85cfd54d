import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockinterf import closed_forms as cf
from fockinterf.interferometer import amplitude, standard_circuit

ASINH1 = math.asinh(1.0)
gains = st.floats(0.0, 3.0)
phases = st.floats(-2 * math.pi, 2 * math.pi)


def circuit_amp(kind, *params):
    pattern = (1, 1) if kind != "four_crystal" else (1, 1, 1, 1)
    return amplitude(standard_circuit(kind, params), pattern).value


def test_single_crystal_values():
    assert cf.amp_single_crystal_11(0.0) == 1
    assert abs(cf.amp_single_crystal_11(ASINH1)) < 1e-15
    assert abs(cf.amp_single_crystal_11_gain(2.0)) == 0.0


@pytest.mark.parametrize("r", [0.0, 0.3, ASINH1, 1.7, 4.0])
def test_single_crystal_parametrizations_agree(r):
    g = math.cosh(r) ** 2
    assert abs(cf.amp_single_crystal_11(r) - cf.amp_single_crystal_11_gain(g)) < 1e-14


def test_single_crystal_matches_circuit():
    assert abs(cf.amp_single_crystal_11(1.0) - circuit_amp("single_seeded", 1.0)) < 1e-12


def test_gain_below_one_rejected():
    with pytest.raises(ValueError):
        cf.amp_single_crystal_11_gain(0.5)


@pytest.mark.parametrize("r", [0.01, 0.5, 1.0, 3.0])
def test_two_crystal_cancels_at_pi(r):
    # exp(i pi) is -1 only to rounding, and the denominator amplifies that by cosh^2 r
    tol = 1e-15 * math.cosh(r) ** 2
    assert abs(cf.amp_two_crystal_11_equal(r, math.pi)) < tol
    assert abs(cf.amp_two_crystal_11(r, r, math.pi)) < tol


def test_two_crystal_low_gain():
    a = cf.amp_two_crystal_11(0.01, 0.01, 0.0)
    assert a.real == pytest.approx(-0.02, rel=0.01)


def test_two_crystal_matches_circuit():
    assert abs(cf.amp_two_crystal_11(0.9, 0.4, 1.1) - circuit_amp("two_crystal", 0.9, 0.4, 1.1)) < 1e-10


@settings(max_examples=100, deadline=None)
@given(gains, phases)
def test_two_crystal_equal_form(r, phi):
    assert abs(cf.amp_two_crystal_11(r, r, phi) - cf.amp_two_crystal_11_equal(r, phi)) < 1e-14


@pytest.mark.parametrize("r1,r2,phi", [(0.3, 0.2, 0.5), (0.7, 0.9, 2.0), (1.2, 0.6, math.pi)])
def test_two_crystal_series_converges(r1, r2, phi):
    exact = cf.amp_two_crystal_11(r1, r2, phi)
    errors = [abs(cf.two_crystal_11_series(r1, r2, phi, n) - exact) for n in (5, 20, 80, 400)]
    assert errors[-1] < 1e-13
    assert errors == sorted(errors, reverse=True)


def test_curvature_values():
    assert cf.curvature_two_crystal(0.0) == 0.0
    assert cf.curvature_two_crystal(1e-3) == pytest.approx(2e-6, rel=1e-5)


def test_curvature_against_finite_difference():
    h = 1e-4
    p = lambda phi: abs(cf.amp_two_crystal_11(1.0, 1.0, phi)) ** 2  # noqa: E731
    fd = (p(math.pi + h) - 2 * p(math.pi) + p(math.pi - h)) / h**2
    assert fd == pytest.approx(cf.curvature_two_crystal(1.0), rel=1e-4)


@pytest.mark.parametrize("r", [0.1, 0.3, 1.0, 2.5])
def test_three_crystal_symmetric_value(r):
    a = cf.amp_three_crystal_11(r, r, r, math.pi, math.pi)
    assert abs(a + math.tanh(r) / math.cosh(r)) < 1e-15


@pytest.mark.parametrize("r", [0.05, 0.5, 1.0, 2.0])
def test_three_crystal_equal_null(r):
    v = cf.three_crystal_equal_null_phase(r)
    assert abs(cf.amp_three_crystal_11(r, r, r, v, v)) < 1e-12


@pytest.mark.parametrize("r", [0.2, 1.0])
def test_three_crystal_null_equal_gains(r):
    first, second = cf.three_crystal_null(r, r, r)
    v = cf.three_crystal_equal_null_phase(r)
    assert first.feasible and second.feasible
    assert first.phi1 == pytest.approx(v, abs=1e-12)
    assert first.phi2 == pytest.approx(v, abs=1e-12)
    assert second.phi1 == pytest.approx(2 * math.pi - v, abs=1e-12)


def test_three_crystal_null_small_gain_limit():
    first, _ = cf.three_crystal_null(1e-4, 1e-4, 1e-4)
    assert first.phi1 == pytest.approx(2 * math.pi / 3, abs=1e-7)
    assert first.phi2 == pytest.approx(2 * math.pi / 3, abs=1e-7)


def test_three_crystal_null_asymmetric():
    for sol in cf.three_crystal_null(1.0, 0.5, 0.6):
        assert sol.feasible
        assert 0 <= sol.phi1 < 2 * math.pi and 0 <= sol.phi2 < 2 * math.pi
        assert abs(cf.amp_three_crystal_11(1.0, 0.5, 0.6, sol.phi1, sol.phi2)) < 1e-10


@pytest.mark.parametrize("gains3", [(0.1, 0.1, 2.0), (2.0, 0.1, 0.1)])
def test_three_crystal_null_infeasible(gains3):
    assert not any(sol.feasible for sol in cf.three_crystal_null(*gains3))


def test_three_crystal_null_rejects_zero_gain():
    with pytest.raises(ValueError):
        cf.three_crystal_null(0.0, 0.5, 0.5)


def test_three_crystal_null_phase_drift():
    # leading correction is +r^2/sqrt(3); see the acceptance suite for the sign check
    for r in (0.05, 0.02):
        slope = (cf.three_crystal_equal_null_phase(r) - 2 * math.pi / 3) / r**2
        assert slope == pytest.approx(1 / math.sqrt(3), rel=0.02)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(0.05, 2.0), st.floats(0.05, 2.0))
def test_three_crystal_null_property(r1, r2, r3):
    for sol in cf.three_crystal_null(r1, r2, r3):
        if sol.feasible:
            assert abs(cf.amp_three_crystal_11(r1, r2, r3, sol.phi1, sol.phi2)) < 1e-10


def test_four_crystal_equal_small_gain_at_pi():
    for r in (0.04, 0.02, 0.01):
        assert abs(cf.amp_four_crystal_equal(r, math.pi)) < 12 * r**4


@settings(max_examples=100, deadline=None)
@given(gains, phases)
def test_four_crystal_equal_form(r, phi):
    assert abs(cf.amp_four_crystal_1111(r, r, r, r, phi) - cf.amp_four_crystal_equal(r, phi)) < 1e-13


@settings(max_examples=100, deadline=None)
@given(gains, gains, phases)
def test_four_crystal_rowwise_form(r1, r3, phi):
    full = cf.amp_four_crystal_1111(r1, r1, r3, r3, phi)
    assert abs(full - cf.amp_four_crystal_rowwise(r1, r3, phi)) < 1e-13


@pytest.mark.parametrize("r1", [0.05, 0.3, 0.6, 1.0, 3.0])
def test_four_crystal_pi_null(r1):
    r3 = cf.four_crystal_null_r3(r1)
    assert abs(cf.amp_four_crystal_1111(r1, r1, r3, r3, math.pi)) < 1e-12


def test_four_crystal_null_r3_limits():
    assert cf.four_crystal_null_r3(1e-9) < 1e-8
    assert cf.four_crystal_null_r3(30.0) == pytest.approx(ASINH1 / 2, abs=1e-12)
    assert math.sinh(2 * cf.four_crystal_null_r3(0.6)) == pytest.approx(math.tanh(1.2), rel=1e-15)


def test_four_crystal_equal_gain_has_no_null():
    phi = np.linspace(0, 2 * math.pi, 2001)
    for r in (0.1, 0.5, 0.8, 1.0, 2.0):
        mins = min(abs(cf.amp_four_crystal_equal(r, x)) for x in phi)
        assert mins > 0
    assert min(abs(cf.amp_four_crystal_equal(0.8, x)) for x in phi) > 1e-2


def test_four_crystal_matches_circuit():
    p = (0.7, 0.4, 0.9, 0.3, 1.3)
    assert abs(cf.amp_four_crystal_1111(*p) - circuit_amp("four_crystal", *p)) < 1e-10


def test_phi0_null_boundary_is_infeasible():
    assert cf.four_crystal_phi0_null_r1(0.5, 0.5 + ASINH1) is None
    assert cf.four_crystal_phi0_null_r1(0.2, 0.9) is None


@pytest.mark.parametrize("r3,r4", [(0.2, 1.2), (0.1, 1.1), (1.5, 0.3), (0.9, 1.8)])
def test_phi0_null(r3, r4):
    r1 = cf.four_crystal_phi0_null_r1(r3, r4)
    assert r1 is not None
    assert abs(cf.amp_four_crystal_1111(r1, r1, r3, r4, 0.0)) < 1e-10
    assert cf.four_crystal_phi0_null_r1(r4, r3) == r1


@pytest.mark.parametrize("fn,args", [
    (cf.four_crystal_null_r3, (0.0,)),
    (cf.four_crystal_phi0_null_r1, (0.0, 1.0)),
    (cf.amp_two_crystal_11, (-0.1, 0.1, 0.0)),
])
def test_domain_errors(fn, args):
    with pytest.raises(ValueError):
        fn(*args)


@settings(max_examples=100, deadline=None)
@given(gains, gains, gains, gains, phases, phases)
def test_conjugation_symmetry(r1, r2, r3, r4, phi, phi2):
    pairs = [
        (cf.amp_two_crystal_11(r1, r2, phi), cf.amp_two_crystal_11(r1, r2, -phi)),
        (cf.amp_three_crystal_11(r1, r2, r3, phi, phi2), cf.amp_three_crystal_11(r1, r2, r3, -phi, -phi2)),
        (cf.amp_four_crystal_1111(r1, r2, r3, r4, phi), cf.amp_four_crystal_1111(r1, r2, r3, r4, -phi)),
    ]
    for a, b in pairs:
        assert abs(b - a.conjugate()) <= 1e-14 * max(1.0, abs(a))


@pytest.mark.parametrize("r", [0.005, 0.01, 0.02, 0.05])
def test_two_crystal_low_gain_remainder(r):
    for phi in np.linspace(0, 2 * math.pi, 13):
        rest = abs(cf.amp_two_crystal_11(r, r, phi) + (1 + cmath.exp(1j * phi)) * r)
        assert rest <= 7 * r**3


@pytest.mark.parametrize("r", [0.005, 0.01, 0.02, 0.05])
def test_four_crystal_low_gain_remainder(r):
    for phi in np.linspace(0, 2 * math.pi, 13):
        rest = abs(cf.amp_four_crystal_equal(r, phi) - (1 + cmath.exp(1j * phi)) * r**2)
        assert rest <= 10 * r**4


def test_large_gain_does_not_overflow():
    for fn, args in [
        (cf.amp_two_crystal_11, (400.0, 400.0, 1.0)),
        (cf.amp_three_crystal_11, (400.0, 1.0, 2.0, 0.5, 0.5)),
        (cf.amp_four_crystal_1111, (400.0, 400.0, 400.0, 400.0, 0.3)),
    ]:
        assert cmath.isfinite(fn(*args))
