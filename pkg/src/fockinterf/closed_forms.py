"""Closed-form coincidence amplitudes and null conditions for crystal cascades.

Every expression is written in terms of t = tanh r and s = sech r so that large
squeezing never overflows. All squeezing phases are zero; the interferometer
phases enter as exp(i phi).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

R_CAP = 350.0
ARCSINH_1 = math.asinh(1.0)
_CLAMP_SLACK = 1e-12


def _t(r: float) -> float:
    return math.tanh(r)


def _s(r: float) -> float:
    return 1.0 / math.cosh(min(r, R_CAP))


def _check_r(*rs: float):
    for r in rs:
        if not r >= 0:
            raise ValueError(f"squeezing parameters must be >= 0, got {r}")


def amp_single_crystal_11(r: float) -> complex:
    """<1,1| S(r) |1,1> = (1 - sinh^2 r) / cosh^3 r."""
    _check_r(r)
    t, s = _t(r), _s(r)
    # (1 - sinh^2)/cosh^3 = s^3 - t^2 s
    return complex(s * (s * s - t * t))


def amp_single_crystal_11_gain(g: float) -> complex:
    """The same amplitude in terms of the gain g = cosh^2 r."""
    if g < 1:
        raise ValueError(f"gain must be >= 1, got {g}")
    return complex((2.0 - g) / g**1.5)


def amp_two_crystal_11(r1: float, r2: float, phi: float) -> complex:
    """<1,1| S(r2) Phi_a(phi) S(r1) |0,0>."""
    _check_r(r1, r2)
    t1, t2 = _t(r1), _t(r2)
    e = cmath.exp(1j * phi)
    return -(t2 + e * t1) * _s(r1) * _s(r2) / (1 + e * t1 * t2) ** 2


def amp_two_crystal_11_equal(r: float, phi: float) -> complex:
    """Equal-gain form; carries the explicit (1 + e^{i phi}) factor."""
    _check_r(r)
    t, s = _t(r), _s(r)
    e = cmath.exp(1j * phi)
    return -(1 + e) * s * s * t / (1 + e * t * t) ** 2


def two_crystal_11_series(r1: float, r2: float, phi: float, terms: int) -> complex:
    """Partial sum of the pair-number series for the two-crystal amplitude."""
    _check_r(r1, r2)
    if r2 == 0:
        return amp_two_crystal_11(r1, 0.0, phi)
    t1, t2 = _t(r1), _t(r2)
    x = -cmath.exp(1j * phi) * t1 * t2
    sinh2 = math.sinh(min(r2, R_CAP)) ** 2
    pref = _s(r1) * _s(r2) ** 3 / t2
    total = 0j
    power = 1 + 0j
    for n in range(terms):
        total += power * (n - sinh2)
        power *= x
    return pref * total


def curvature_two_crystal(r: float) -> float:
    """Second phase derivative of P_{1,1} at phi = pi for equal gains."""
    _check_r(r)
    return math.sinh(2 * min(r, R_CAP)) ** 2 / 2


def amp_three_crystal_11(r1: float, r2: float, r3: float, phi1: float, phi2: float) -> complex:
    """<1,1| S(r3) Phi_a(phi2) S(r2) Phi_a(phi1) S(r1) |0,0>."""
    _check_r(r1, r2, r3)
    t1, t2, t3 = _t(r1), _t(r2), _t(r3)
    e1, e2 = cmath.exp(1j * phi1), cmath.exp(1j * phi2)
    num = t3 * (1 + e1 * t1 * t2) + e2 * (t2 + e1 * t1)
    den = (1 + e1 * t1 * t2 + e2 * t2 * t3 + e1 * e2 * t1 * t3) ** 2
    return -_s(r1) * _s(r2) * _s(r3) * num / den


def three_crystal_equal_null_phase(r: float) -> float:
    """Phase 2 arccos(sech r / 2) at which phi1 = phi2 cancels |1,1>."""
    _check_r(r)
    return 2.0 * math.acos(_s(r) / 2.0)


@dataclass(frozen=True)
class ThreeCrystalNull:
    phi1: float
    phi2: float
    feasible: bool


_INFEASIBLE = ThreeCrystalNull(math.nan, math.nan, False)


def _clamp_unit(x: float) -> float | None:
    if -1.0 <= x <= 1.0:
        return x
    if abs(x) <= 1.0 + _CLAMP_SLACK:
        return math.copysign(1.0, x)
    return None


def three_crystal_null(r1: float, r2: float, r3: float) -> tuple[ThreeCrystalNull, ThreeCrystalNull]:
    """Both phase pairs cancelling the three-crystal |1,1> amplitude.

    Infeasible gains (outside the tanh triangle inequality) return two
    entries with ``feasible`` False.
    """
    for r in (r1, r2, r3):
        if not r > 0:
            raise ValueError(f"squeezing parameters must be > 0, got {r}")
    t1, t2, t3 = _t(r1), _t(r2), _t(r3)
    lo = abs(t1 - t2) / (1 - t1 * t2)
    hi = (t1 + t2) / (1 + t1 * t2)
    if not (lo - _CLAMP_SLACK <= t3 <= hi + _CLAMP_SLACK):
        return _INFEASIBLE, _INFEASIBLE
    c = (t3**2 * (1 + t1**2 * t2**2) - t1**2 - t2**2) / (2 * t1 * t2 * (1 - t3**2))
    c = _clamp_unit(c)
    if c is None:
        return _INFEASIBLE, _INFEASIBLE
    base = math.acos(c)
    out = []
    for phi1 in (base, (2 * math.pi - base) % (2 * math.pi)):
        e1 = cmath.exp(1j * phi1)
        phi2 = cmath.phase(-t3 * (1 + t1 * t2 * e1) / (t1 * e1 + t2)) % (2 * math.pi)
        out.append(ThreeCrystalNull(phi1, phi2, True))
    return out[0], out[1]


def amp_four_crystal_1111(r1: float, r2: float, r3: float, r4: float, phi: float) -> complex:
    """<1,1,1,1| S_cd(r4) S_ab(r3) Phi_a(phi) S_bd(r2) S_ac(r1) |0,0,0,0>."""
    _check_r(r1, r2, r3, r4)
    t1, t2, t3, t4 = _t(r1), _t(r2), _t(r3), _t(r4)
    s1, s2, s3, s4 = _s(r1), _s(r2), _s(r3), _s(r4)
    e = cmath.exp(1j * phi)
    # (cosh 2r3 cosh 2r4 - 3) / (cosh^2 r3 cosh^2 r4)
    upper = (1 + t3**2) * (1 + t4**2) - 3 * s3**2 * s4**2
    bracket = e * upper * t1 * t2 - 2 * (1 + e**2 * t1**2 * t2**2) * t3 * t4
    return s1 * s2 * s3 * s4 * bracket / (2 * (e * t1 * t2 * t3 * t4 - 1) ** 3)


def amp_four_crystal_equal(r: float, phi: float) -> complex:
    """All four gains equal to r."""
    _check_r(r)
    t, s = _t(r), _s(r)
    e = cmath.exp(1j * phi)
    # 3 + 4 cosh 2r + cosh 4r, 2(5 - cosh 4r), 8 sinh^4 r, each times sech^4 r
    c2 = (1 + t * t) / (s * s) if s > 0 else math.inf
    c4 = 2 * c2 * c2 - 1
    poly = (3 + 4 * c2 + c4) + 2 * e * (5 - c4) + 8 * e**2 * (t / s) ** 4
    return -(s**8) * t * t * poly / (8 * (e * t**4 - 1) ** 3)


def amp_four_crystal_rowwise(r1: float, r3: float, phi: float) -> complex:
    """Rows with equal gains: r2 = r1 and r4 = r3."""
    _check_r(r1, r3)
    t1, t3 = _t(r1), _t(r3)
    s1, s3 = _s(r1), _s(r3)
    e = cmath.exp(1j * phi)
    # (cosh 4r3 - 5) sech^4 r3 = 2(1 + t3^2)^2 - 6 s3^4
    upper = 2 * (1 + t3**2) ** 2 - 6 * s3**4
    bracket = e * upper * t1**2 - 4 * (1 + e**2 * t1**4) * t3**2
    return s1**2 * s3**2 * bracket / (4 * (e * t1**2 * t3**2 - 1) ** 3)


def four_crystal_null_r3(r1: float) -> float:
    """Row-2 gain r3 = r4 that cancels |1,1,1,1> at phi = pi when r2 = r1.

    The null sits where sinh 2r3 = tanh 2r1, i.e. r3 = arcsinh(tanh 2r1) / 2.
    """
    if not r1 > 0:
        raise ValueError(f"r1 must be > 0, got {r1}")
    return 0.5 * math.asinh(math.tanh(2 * r1))


def four_crystal_phi0_null_r1(r3: float, r4: float) -> float | None:
    """Row-1 gain r1 = r2 that cancels |1,1,1,1> at phi = 0, or None if infeasible.

    A null exists only when |r3 - r4| > arcsinh(1); a denominator within
    rounding of zero counts as the boundary, where r1 diverges.
    """
    if not (r3 > 0 and r4 > 0):
        raise ValueError(f"r3 and r4 must be > 0, got {r3}, {r4}")
    denom = math.cosh(2 * (r3 - r4)) - 3.0
    if denom <= _CLAMP_SLACK or abs(r3 - r4) <= ARCSINH_1:
        return None
    x = 2 * math.sinh(2 * r3) * math.sinh(2 * r4) / denom
    return 0.5 * math.asinh(math.sqrt(x))
