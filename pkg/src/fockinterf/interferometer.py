"""Circuits of squeezers and phase shifters, and the named crystal cascades."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

from .engine import PhaseShifter, TwoModeSqueezer, apply_phase, apply_squeezer, project_squeezer
from .fock_state import DEFAULT_POLICY, SparseFockState, TruncationPolicy, _as_pattern

Element = Union[TwoModeSqueezer, PhaseShifter]

STANDARD_KINDS = {
    "single_seeded": ("r",),
    "two_crystal": ("r1", "r2", "phi"),
    "three_crystal": ("r1", "r2", "r3", "phi1", "phi2"),
    "four_crystal": ("r1", "r2", "r3", "r4", "phi"),
}

# photon caps that keep sparse states tractable; raised for strong squeezing
TWO_MODE_CAP = 40
MULTI_MODE_CAP = 24
MAX_TWO_MODE_CAP = 1200
MAX_MULTI_MODE_CAP = 40
# amplitude queries propagate only the charge sector of the target pattern
MAX_FILTERED_CAP = 320
DEFAULT_TARGET_TAIL = 1e-12


@dataclass(frozen=True)
class Circuit:
    mode_count: int
    elements: tuple[Element, ...] = ()
    input: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        pattern = (0,) * self.mode_count if self.input is None else self.input
        object.__setattr__(self, "input", _as_pattern(pattern, self.mode_count))
        for el in self.elements:
            modes = (el.mode_a, el.mode_b) if isinstance(el, TwoModeSqueezer) else (el.mode,)
            if max(modes) >= self.mode_count:
                raise ValueError(f"{el} addresses a mode outside 0..{self.mode_count - 1}")

    @property
    def max_r(self) -> float:
        return max((el.r for el in self.elements if isinstance(el, TwoModeSqueezer)), default=0.0)


@dataclass(frozen=True)
class AmplitudeResult:
    value: complex
    error_bound: float

    @property
    def probability(self) -> float:
        return abs(self.value) ** 2


def default_policy(circuit: Circuit, target_tail: float = DEFAULT_TARGET_TAIL) -> TruncationPolicy:
    """Starting truncation policy for ``circuit``.

    The photon cap starts at 40 for two-mode circuits and 24 for larger ones,
    and is raised so that a squeezed vacuum of the strongest single squeezer
    loses less than ``target_tail`` of l2 mass, within per-mode-count ceilings.
    """
    two_mode = circuit.mode_count <= 2
    cap = TWO_MODE_CAP if two_mode else MULTI_MODE_CAP
    ceiling = MAX_TWO_MODE_CAP if two_mode else MAX_MULTI_MODE_CAP
    t = math.tanh(circuit.max_r)
    if 0 < t < 1:
        needed = math.ceil(math.log(target_tail) / math.log(t)) + max(circuit.input)
        cap = min(max(cap, needed), ceiling)
    return replace(DEFAULT_POLICY, photon_cap=cap, k_max=cap + 1)


def _charges(mode_count: int, squeezers: Sequence[TwoModeSqueezer]) -> np.ndarray:
    """Signed mode weights whose sums every squeezer in ``squeezers`` conserves.

    A two-mode squeezer adds photons to both of its modes at once, so for each
    bipartite component of the squeezer graph the occupation difference
    between its two colour classes is invariant. Components with an odd cycle
    carry no such charge and are left out.
    """
    parent = list(range(mode_count))
    parity = [0] * mode_count
    odd = set()

    def find(m):
        if parent[m] == m:
            return m, 0
        root, par = find(parent[m])
        parent[m], parity[m] = root, parity[m] ^ par
        return root, parity[m]

    for sq in squeezers:
        (ra, pa), (rb, pb) = find(sq.mode_a), find(sq.mode_b)
        if ra == rb:
            if pa == pb:
                odd.add(ra)
            continue
        parent[rb], parity[rb] = ra, pa ^ pb ^ 1
        if rb in odd:
            odd.add(ra)
    rows = {}
    for m in range(mode_count):
        root, par = find(m)
        if root in odd:
            continue
        rows.setdefault(root, np.zeros(mode_count, np.int64))[m] = 1 - 2 * par
    return np.array(list(rows.values()), np.int64).reshape(-1, mode_count)


def _restrict(state: SparseFockState, weights: np.ndarray, target: np.ndarray) -> SparseFockState:
    if len(state) == 0 or weights.size == 0:
        return state
    keep = np.all(state.occupations @ weights.T == target, axis=1)
    if keep.all():
        return state
    return SparseFockState(
        state.occupations[keep], state.amplitudes[keep], state.mode_count,
        state.tail_error, _checked=True,
    )


def _propagate(
    circuit: Circuit, policy: TruncationPolicy, pattern: tuple[int, ...] | None = None
) -> SparseFockState:
    """Run the circuit.

    With ``pattern`` given, terms that the remaining elements can no longer
    bring to ``pattern`` are discarded as they appear, and a squeezer whose
    modes no later squeezer touches is applied as a projection onto the
    pattern's occupations of those modes.
    """
    elements = circuit.elements
    state = SparseFockState.basis(circuit.input)
    if pattern is None:
        for el in elements:
            if isinstance(el, TwoModeSqueezer):
                state = apply_squeezer(state, el, policy)
            else:
                state = apply_phase(state, el)
        return state
    target = np.array(pattern, np.int64)
    later_modes = [set() for _ in range(len(elements) + 1)]
    for i in range(len(elements) - 1, -1, -1):
        later_modes[i] = set(later_modes[i + 1])
        el = elements[i]
        if isinstance(el, TwoModeSqueezer):
            later_modes[i].update((el.mode_a, el.mode_b))

    def restrict(st, i):
        later = [el for el in elements[i:] if isinstance(el, TwoModeSqueezer)]
        weights = _charges(circuit.mode_count, later)
        st = _restrict(st, weights, weights @ target)
        # modes no later squeezer touches must already match the pattern
        fixed = [m for m in range(circuit.mode_count) if m not in later_modes[i]]
        if fixed and len(st):
            keep = np.all(st.occupations[:, fixed] == target[fixed], axis=1)
            if not keep.all():
                st = SparseFockState(st.occupations[keep], st.amplitudes[keep], st.mode_count,
                                     st.tail_error, _checked=True)
        return st

    state = restrict(state, 0)
    for i, el in enumerate(elements):
        if isinstance(el, TwoModeSqueezer):
            if el.mode_a in later_modes[i + 1] or el.mode_b in later_modes[i + 1]:
                state = apply_squeezer(state, el, policy)
            else:
                state = project_squeezer(state, el, int(target[el.mode_a]), int(target[el.mode_b]), policy)
            state = restrict(state, i + 1)
        else:
            state = apply_phase(state, el)
    return state


def _ceiling(circuit: Circuit, filtered: bool) -> int:
    if circuit.mode_count <= 2:
        return MAX_TWO_MODE_CAP
    return MAX_FILTERED_CAP if filtered else MAX_MULTI_MODE_CAP


def _adaptive(circuit, policy, target_tail, evaluate, filtered=False):
    """Call ``evaluate(policy)`` with doubling caps until its bound meets the
    target, the ceiling is reached, or a doubling fails to halve the bound."""
    if policy is not None:
        return evaluate(policy)
    policy = default_policy(circuit, target_tail)
    ceiling = _ceiling(circuit, filtered)
    previous = math.inf
    while True:
        result = evaluate(policy)
        if result.tail_error <= target_tail or policy.photon_cap >= ceiling:
            return result
        # a bound that stops shrinking is held up by rounding, not the cap
        if result.tail_error > 0.5 * previous:
            return result
        previous = result.tail_error
        cap = min(2 * policy.photon_cap, ceiling)
        policy = replace(policy, photon_cap=cap, k_max=cap + 1)


def run(
    circuit: Circuit,
    policy: TruncationPolicy | None = None,
    target_tail: float = DEFAULT_TARGET_TAIL,
) -> SparseFockState:
    """Propagate the circuit input through its elements in order.

    With an explicit ``policy`` the circuit is run once. Without one, the run
    starts from :func:`default_policy` and the photon cap is doubled until the
    accumulated tail bound drops below ``target_tail`` or the cap ceiling is
    reached; cascaded squeezers can populate far higher occupations than any
    single one of them.
    """
    return _adaptive(circuit, policy, target_tail, lambda pol: _propagate(circuit, pol))


def amplitude(
    circuit: Circuit,
    pattern: Sequence[int],
    policy: TruncationPolicy | None = None,
    target_tail: float = DEFAULT_TARGET_TAIL,
) -> AmplitudeResult:
    """Amplitude of ``pattern`` at the circuit output with its truncation bound.

    Only the part of the state that can still reach ``pattern`` is propagated,
    and squeezers that no later squeezer overlaps are applied as projections
    onto ``pattern``, adding no truncation of their own. The bound covers the
    error of the returned amplitude, not of the discarded sectors.
    """
    pattern = _as_pattern(pattern, circuit.mode_count)
    state = _adaptive(circuit, policy, target_tail,
                      lambda pol: _propagate(circuit, pol, pattern), filtered=True)
    return AmplitudeResult(state.amplitude_of(pattern), state.tail_error)


def standard_circuit(kind: str, params: Sequence[float]) -> Circuit:
    """The crystal cascades of the single-, two-, three- and four-crystal setups.

    Parameters by kind: single_seeded (r); two_crystal (r1, r2, phi);
    three_crystal (r1, r2, r3, phi1, phi2); four_crystal (r1, r2, r3, r4, phi).
    The four-crystal modes are (a, b, c, d) = (0, 1, 2, 3).
    """
    if kind not in STANDARD_KINDS:
        raise ValueError(f"unknown circuit kind {kind!r}; expected one of {sorted(STANDARD_KINDS)}")
    names = STANDARD_KINDS[kind]
    if len(params) != len(names):
        raise ValueError(f"{kind} takes {len(names)} parameters ({', '.join(names)}), got {len(params)}")
    p = [float(x) for x in params]
    if kind == "single_seeded":
        return Circuit(2, (TwoModeSqueezer(0, 1, p[0]),), input=(1, 1))
    if kind == "two_crystal":
        r1, r2, phi = p
        return Circuit(2, (TwoModeSqueezer(0, 1, r1), PhaseShifter(0, phi), TwoModeSqueezer(0, 1, r2)))
    if kind == "three_crystal":
        r1, r2, r3, phi1, phi2 = p
        return Circuit(2, (
            TwoModeSqueezer(0, 1, r1), PhaseShifter(0, phi1),
            TwoModeSqueezer(0, 1, r2), PhaseShifter(0, phi2),
            TwoModeSqueezer(0, 1, r3),
        ))
    r1, r2, r3, r4, phi = p
    return Circuit(4, (
        TwoModeSqueezer(0, 2, r1),
        TwoModeSqueezer(1, 3, r2),
        PhaseShifter(0, phi),
        TwoModeSqueezer(0, 1, r3),
        TwoModeSqueezer(2, 3, r4),
    ))


def detection_pattern(circuit: Circuit) -> tuple[int, ...]:
    """One photon in every output mode, the coincidence the setups look for."""
    return (1,) * circuit.mode_count
