"""Cross-check matrices between the independent evaluation paths.

Each suite returns :class:`Check` records holding the largest deviation seen
so callers can compare against any tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import closed_forms as cf
from . import series
from .engine import squeeze_pair_coefficients
from .fock_state import TruncationPolicy
from .interferometer import amplitude, default_policy, run, standard_circuit
from .oracle import oracle_squeeze

GRID_R = (0.05, 0.3, 0.8, 1.2)
GRID_PHI = (0.0, math.pi / 3, math.pi, 5 * math.pi / 3)
ORACLE_R = (0.2, 0.6, 1.0, 1.2)
ORACLE_THETA = (0.0, 0.7)
ORACLE_MAX_INPUT = 3
ORACLE_N_MAX = 40
SUITES = ("oracle", "closedform", "series")


@dataclass(frozen=True)
class Check:
    name: str
    max_deviation: float
    worst_at: tuple
    points: int

    def passed(self, tol: float) -> bool:
        return self.max_deviation <= tol


class _Worst:
    def __init__(self, name):
        self.name, self.dev, self.at, self.count = name, 0.0, (), 0

    def add(self, dev, at):
        self.count += 1
        if not dev <= self.dev:
            self.dev, self.at = float(dev), at

    def check(self) -> Check:
        return Check(self.name, self.dev, self.at, self.count)


def oracle_suite(n_max: int = ORACLE_N_MAX) -> list[Check]:
    """Engine pair coefficients against the truncated matrix exponential.

    Inputs |p,q> with p, q <= 3 are compared on output kets whose occupations
    stay within n_max / 4, away from the basis edge.
    """
    worst = _Worst(f"oracle n_max={n_max}")
    limit = n_max // 4
    policy = TruncationPolicy(photon_cap=n_max, k_max=n_max + 1)
    for r in ORACLE_R:
        for theta in ORACLE_THETA:
            for p in range(ORACLE_MAX_INPUT + 1):
                for q in range(ORACLE_MAX_INPUT + 1):
                    exp = squeeze_pair_coefficients(p, q, r, theta, policy)
                    engine = {(a, b): c for a, b, c in exp.entries()}
                    for a, b, c in oracle_squeeze(p, q, r, theta, n_max):
                        if max(a, b) <= limit:
                            worst.add(abs(engine.get((a, b), 0j) - c), (p, q, r, theta, a, b))
    return [worst.check()]


def closedform_suite() -> list[Check]:
    """Circuit amplitudes against the closed forms on the standard grid."""
    two, three, four = _Worst("two_crystal"), _Worst("three_crystal"), _Worst("four_crystal")
    for ra in GRID_R:
        for phi in GRID_PHI:
            for rb in GRID_R:
                p = (ra, rb, phi)
                a = amplitude(standard_circuit("two_crystal", p), (1, 1))
                two.add(abs(a.value - cf.amp_two_crystal_11(*p)), p)
                p = (ra, ra, rb, rb, phi)
                a = amplitude(standard_circuit("four_crystal", p), (1, 1, 1, 1))
                four.add(abs(a.value - cf.amp_four_crystal_1111(*p)), p)
            for phi2 in GRID_PHI:
                for p in ((ra, ra, ra, phi, phi2), (1.0, 0.5, 0.6, phi, phi2)):
                    a = amplitude(standard_circuit("three_crystal", p), (1, 1))
                    three.add(abs(a.value - cf.amp_three_crystal_11(*p)), p)
    return [two.check(), three.check(), four.check()]


def series_suite() -> list[Check]:
    """Full output states of the series expansions against circuit runs.

    Both sides use the circuit's default policy so that they truncate alike.
    """
    setups = (
        ("two_crystal", series.two_crystal_series_state, lambda r, phi: (r, r, phi)),
        ("three_crystal", series.three_crystal_series_state, lambda r, phi: (r, r, r, phi, phi)),
        ("four_crystal", series.four_crystal_series_state, lambda r, phi: (r, r, r, r, phi)),
    )
    checks = []
    for kind, fn, params in setups:
        worst = _Worst(kind)
        for r in GRID_R:
            for phi in GRID_PHI:
                p = params(r, phi)
                circuit = standard_circuit(kind, p)
                policy = default_policy(circuit)
                worst.add(run(circuit, policy).max_deviation(fn(*p, policy)), p)
        checks.append(worst.check())
    return checks


def run_suite(name: str, **kwargs) -> list[Check]:
    if name == "oracle":
        return oracle_suite(**kwargs)
    if name == "closedform":
        return closedform_suite()
    if name == "series":
        return series_suite()
    raise ValueError(f"unknown suite {name!r}; expected one of {', '.join(SUITES)}")
