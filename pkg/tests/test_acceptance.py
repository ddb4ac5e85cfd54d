"""End-to-end acceptance checks, one summary line per criterion.

Each test gathers its measured quantities first, reports them with the
tolerance and runtime, then asserts. Lines prefixed with ``S`` are
supplementary checks that pin down the behaviour the numbered ones probe.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from fockinterf import closed_forms as cf
from fockinterf.cli import main
from fockinterf.engine import TwoModeSqueezer, apply_squeezer, squeeze_pair_coefficients
from fockinterf.figures import FIGURES
from fockinterf.fock_state import SparseFockState, TruncationPolicy, norm
from fockinterf.interferometer import amplitude, standard_circuit
from fockinterf.validation import oracle_suite, series_suite
from fockinterf.zeros import curvature_at, refine_null

ASINH1 = math.asinh(1.0)
GOLDEN = Path(__file__).parent / "golden"


class Criterion:
    """Collects (label, value, limit) parts and a runtime budget."""

    def __init__(self, tag, title, budget=None):
        self.tag, self.title, self.budget = tag, title, budget
        self.parts = []
        self.start = time.perf_counter()

    def below(self, label, value, limit):
        self.parts.append((f"{label} = {value:.3g} < {limit:g}", value < limit))

    def above(self, label, value, limit):
        self.parts.append((f"{label} = {value:.3g} > {limit:g}", value > limit))

    def within(self, label, value, target, tol):
        ok = abs(value - target) <= tol
        self.parts.append((f"{label} = {value:.6g} vs {target:.6g} +- {tol:g}", ok))

    def check(self, label, ok):
        self.parts.append((label, bool(ok)))

    def finish(self, report):
        seconds = time.perf_counter() - self.start
        parts = list(self.parts)
        if self.budget is not None:
            parts.append((f"runtime {seconds:.1f} s < {self.budget:g} s", seconds < self.budget))
        ok = all(flag for _, flag in parts)
        detail = "; ".join(f"{text}{'' if flag else ' [FAIL]'}" for text, flag in parts)
        report(f"{'PASS' if ok else 'FAIL'} {self.tag} {self.title}: {detail}")
        assert ok, detail


def engine_amp(kind, *params):
    circuit = standard_circuit(kind, params)
    return amplitude(circuit, (1,) * circuit.mode_count).value


def two_crystal_prob(r):
    return lambda phi: abs(engine_amp("two_crystal", r, r, phi)) ** 2


def test_criterion_1_single_crystal_null(report):
    c = Criterion("1", "single-crystal null", budget=1)
    coeffs = {(a, b): v for a, b, v in squeeze_pair_coefficients(1, 1, ASINH1, 0.0).entries()}
    c.below("|<1,1|S|1,1>| pair kernel", abs(coeffs[(1, 1)]), 1e-10)
    c.below("|<1,1|S|1,1>| circuit", abs(engine_amp("single_seeded", ASINH1)), 1e-10)
    c.below("|(2-g)/g^1.5| at g=2", abs(cf.amp_single_crystal_11_gain(2.0)), 1e-10)
    c.finish(report)


def test_criterion_2_frustrated_pair_creation(report):
    c = Criterion("2", "frustrated pair creation", budget=5)
    for r in (0.1, 1.0, 2.0):
        c.below(f"P(pi) r={r}", abs(engine_amp("two_crystal", r, r, math.pi)) ** 2, 1e-20)
    r = 0.01
    worst = 0.0
    for phi in np.linspace(0, 2 * math.pi, 73):
        model = 4 * r**2 * math.cos(phi / 2) ** 2
        if model > 1e-20:  # the grid point at pi is covered by the line above
            worst = max(worst, abs(abs(engine_amp("two_crystal", r, r, phi)) ** 2 - model) / model)
    c.below("max rel dev from 4r^2cos^2(phi/2) at r=0.01", worst, 0.01)
    c.finish(report)


def test_criterion_3_curvature_scaling(report):
    c = Criterion("3", "curvature scaling", budget=10)
    h = 1e-4
    for r in (0.5, 1.0, 1.5):
        fd = curvature_at(two_crystal_prob(r), math.pi, h)
        exact = cf.curvature_two_crystal(r)
        c.below(f"rel dev r={r}", abs(fd - exact) / exact, 1e-3)
    rs = np.linspace(1.0, 2.0, 11)
    logs = [math.log(curvature_at(two_crystal_prob(r), math.pi, h)) for r in rs]
    slope = np.polyfit(rs, logs, 1)[0]
    c.within("fitted exponent of C over r in [1, 2]", slope, 4.0, 0.1)
    c.finish(report)


def _engine_null_phase(r):
    """Equal-phase null of the equal-gain three-crystal circuit located on the engine."""
    obj = lambda phi: amplitude(standard_circuit("three_crystal", [r, r, r, phi, phi]), (1, 1))  # noqa: E731
    centre = 2 * math.pi / 3
    res = refine_null(obj, (centre - 0.05, centre + 0.05))
    assert res.found
    return res.param


def test_criterion_4_three_crystal_identities(report):
    c = Criterion("4", "three-crystal identities", budget=10)
    for r in (0.3, 1.0):
        dev = abs(engine_amp("three_crystal", r, r, r, math.pi, math.pi) + math.tanh(r) / math.cosh(r))
        c.below(f"|A(pi,pi) + sech r tanh r| r={r}", dev, 1e-10)
    for gains in ((1.0, 0.5, 0.6), (1.0, 1.0, 1.0)):
        worst = max(abs(engine_amp("three_crystal", *gains, s.phi1, s.phi2))
                    for s in cf.three_crystal_null(*gains))
        c.below(f"null residual {gains}", worst, 1e-9)
    r = 0.05
    slope = (_engine_null_phase(r) - 2 * math.pi / 3) / r**2
    c.within("(theta(r) - 2pi/3)/r^2 at r=0.05", slope, -1 / math.sqrt(3), 0.02 / math.sqrt(3))
    c.finish(report)


def test_supplement_4_three_crystal_drift_sign(report):
    c = Criterion("S4", "three-crystal null drift with positive sign", budget=10)
    r = 0.05
    slope = (_engine_null_phase(r) - 2 * math.pi / 3) / r**2
    c.within("(theta(r) - 2pi/3)/r^2 at r=0.05", slope, 1 / math.sqrt(3), 0.02 / math.sqrt(3))
    closed = (cf.three_crystal_equal_null_phase(r) - 2 * math.pi / 3) / r**2
    c.below("|engine slope - closed-form slope|", abs(slope - closed), 1e-4)
    c.finish(report)


def _four_crystal_catalog(c):
    grid = (0.3, 0.8, 1.2)
    worst = 0.0
    for r1 in grid:
        for r3 in grid:
            for phi in (0.0, math.pi / 2, math.pi):
                p = (r1, r1, r3, r3, phi)
                worst = max(worst, abs(engine_amp("four_crystal", *p) - cf.amp_four_crystal_1111(*p)))
    c.below("max |engine - closed form| on 3x3x3 grid", worst, 1e-9)


def _equal_gain_floor(c):
    for r in (0.3, 0.8):
        obj = lambda phi, r=r: amplitude(standard_circuit("four_crystal", [r] * 4 + [phi]), (1, 1, 1, 1))  # noqa: E731
        res = refine_null(obj, (0.0, 2 * math.pi))
        c.check(f"no null found at equal r={r}", not res.found)
        c.above(f"min |A| over phi at r={r}", res.residual, 1e-4)


def test_criterion_5_four_crystal_catalog(report):
    c = Criterion("5", "four-crystal catalog", budget=60)
    _four_crystal_catalog(c)
    for r1 in (0.3, 0.6, 1.0):
        r3 = math.asinh(math.tanh(2 * r1))
        c.below(f"|A| at r3 = arcsinh(tanh 2r1), r1={r1}", abs(engine_amp("four_crystal", r1, r1, r3, r3, math.pi)), 1e-9)
    _equal_gain_floor(c)
    c.finish(report)


def test_supplement_5_four_crystal_null_half_angle(report):
    c = Criterion("S5", "four-crystal pi null at sinh 2r3 = tanh 2r1", budget=60)
    for r1 in (0.3, 0.6, 1.0):
        r3 = 0.5 * math.asinh(math.tanh(2 * r1))
        c.below(f"|A| at r3 = arcsinh(tanh 2r1)/2, r1={r1}", abs(engine_amp("four_crystal", r1, r1, r3, r3, math.pi)), 1e-9)
    c.finish(report)


def test_criterion_6_phi0_four_crystal_null(report, capsys):
    c = Criterion("6", "phi=0 four-crystal null", budget=30)
    for r3, r4 in ((0.2, 1.2), (0.1, 1.1)):
        r1 = cf.four_crystal_phi0_null_r1(r3, r4)
        c.below(f"|A| at predicted r1 for ({r3}, {r4})", abs(engine_amp("four_crystal", r1, r1, r3, r4, 0.0)), 1e-9)
    for r3, r4 in ((0.2, 0.9), (0.5, 1.0), (1.0, 0.3), (0.4, 0.4), (0.3, 1.18)):
        capsys.readouterr()
        code = main(["zeros", "--solve", "four_crystal_phi0", str(r3), str(r4)])
        out = capsys.readouterr().out
        c.check(f"solver reports infeasible for ({r3}, {r4})", code == 0 and out.startswith("infeasible")
                and cf.four_crystal_phi0_null_r1(r3, r4) is None)
    c.finish(report)


def test_criterion_7_oracle_equivalence(report):
    c = Criterion("7", "oracle equivalence at n_max=40", budget=120)
    (check,) = oracle_suite(40)
    c.below(f"max coefficient deviation ({check.points} pts, worst at {check.worst_at})", check.max_deviation, 1e-8)
    c.finish(report)


def test_supplement_7_oracle_wider_basis(report):
    c = Criterion("S7", "oracle equivalence at n_max=80", budget=120)
    (check,) = oracle_suite(80)
    c.below(f"max coefficient deviation ({check.points} pts)", check.max_deviation, 1e-8)
    c.finish(report)


def test_criterion_8_series_equivalence(report):
    c = Criterion("8", "series-expansion equivalence", budget=60)
    for check in series_suite():
        c.below(f"max state deviation {check.name} ({check.points} pts)", check.max_deviation, 1e-10)
    c.finish(report)


def _inputs():
    kets = [SparseFockState.basis((p, q)) for p in range(4) for q in range(4)]
    mixed = SparseFockState.from_terms({(0, 0): 0.6, (2, 1): 0.48j, (3, 3): -0.64})
    return kets + [mixed]


def test_criterion_9_unitarity_and_round_trip(report):
    c = Criterion("9", "unitarity and round trip")
    # wide enough that the mass cut at r = 1.2 sits far below 1e-10
    policy = TruncationPolicy(photon_cap=260, k_max=261)
    drift_excess, trip, trip_tail = -math.inf, 0.0, 0.0
    for r in (0.2, 0.6, 1.0, 1.2):
        for theta in (0.0, 0.7, 2.5):
            for state in _inputs():
                there = apply_squeezer(state, TwoModeSqueezer(0, 1, r, theta), policy)
                back = apply_squeezer(there, TwoModeSqueezer(0, 1, r, theta + math.pi), policy)
                for before, after in ((state, there), (there, back)):
                    extra = after.tail_error - before.tail_error
                    drift_excess = max(drift_excess, abs(norm(after) - norm(before)) - extra)
                trip = max(trip, back.max_deviation(state))
                trip_tail = max(trip_tail, back.tail_error)
    c.below("max(|norm drift| - tail bound) per squeezer", drift_excess, 1e-12)
    c.below(f"max round-trip deviation, r <= 1.2 (tail bound {trip_tail:.1g})", trip, 1e-10)
    c.finish(report)


def test_figures_reproduce_golden_files(report, figure_output):
    c = Criterion("F", "figure sweeps reproduce committed CSVs")
    for name in sorted(FIGURES):
        text, seconds = figure_output(name)
        c.check(f"{name} byte-identical", text.encode() == (GOLDEN / f"{name}.csv").read_bytes())
        c.below(f"{name} runtime s", seconds, 60)
    c.finish(report)
