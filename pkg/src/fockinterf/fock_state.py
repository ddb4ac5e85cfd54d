"""Sparse multimode photon-number states.

A :class:`SparseFockState` stores its occupation vectors as rows of an integer
array kept in lexicographic order (mode 0 most significant), together with the
matching complex amplitudes and a scalar upper bound on the l2 mass that was
dropped while building it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

MAX_MODES = 8


@dataclass(frozen=True)
class TruncationPolicy:
    """Cutoffs bounding the infinite photon-number sums.

    term_floor
        Magnitude below which a k-series term may end the series once the
        series is past its peak.
    k_max
        Hard cap on the number of k-series terms per input pair.
    photon_cap
        Largest occupation kept in any single mode.
    prune_floor
        Amplitudes smaller than this are removed after every squeezer.
    """

    term_floor: float = 1e-14
    k_max: int = 64
    photon_cap: int = 40
    prune_floor: float = 1e-14

    def __post_init__(self):
        if not (self.term_floor > 0 and self.prune_floor > 0):
            raise ValueError("term_floor and prune_floor must be strictly positive")
        if int(self.k_max) != self.k_max or self.k_max < 1:
            raise ValueError(f"k_max must be an integer >= 1, got {self.k_max!r}")
        if int(self.photon_cap) != self.photon_cap or self.photon_cap < 1:
            raise ValueError(f"photon_cap must be an integer >= 1, got {self.photon_cap!r}")


DEFAULT_POLICY = TruncationPolicy()


def _as_pattern(pattern: Sequence[int], mode_count: int | None = None) -> tuple[int, ...]:
    counts = tuple(int(c) for c in pattern)
    if any(c < 0 for c in counts):
        raise ValueError(f"occupations must be non-negative, got {counts}")
    if mode_count is not None and len(counts) != mode_count:
        raise ValueError(
            f"pattern has {len(counts)} modes but the state has {mode_count}"
        )
    return counts


def combine_terms(occupations: np.ndarray, amplitudes: np.ndarray):
    """Merge duplicate rows, summing their amplitudes in input order.

    Returns the unique rows in lexicographic order and the summed amplitudes.
    """
    occupations = np.asarray(occupations, dtype=np.int64)
    amplitudes = np.asarray(amplitudes, dtype=np.complex128)
    if occupations.shape[0] == 0:
        return occupations.reshape(0, occupations.shape[1]), amplitudes.reshape(0)
    modes = occupations.shape[1]
    base = int(occupations.max()) + 1
    if base ** modes < 2**62:
        keys = np.zeros(occupations.shape[0], dtype=np.int64)
        for col in range(modes):
            keys = keys * base + occupations[:, col]
        uniq, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
        rows = occupations[first]
    else:
        rows, inverse = np.unique(occupations, axis=0, return_inverse=True)
        uniq = rows
    inverse = inverse.reshape(-1)
    n = len(uniq)
    re = np.bincount(inverse, weights=amplitudes.real, minlength=n)
    im = np.bincount(inverse, weights=amplitudes.imag, minlength=n)
    return rows, re + 1j * im


@dataclass(frozen=True, eq=False)
class SparseFockState:
    """Immutable map from occupation vectors to complex amplitudes."""

    occupations: np.ndarray
    amplitudes: np.ndarray
    mode_count: int
    tail_error: float = 0.0
    _checked: bool = field(default=False, repr=False)

    def __post_init__(self):
        if not 1 <= self.mode_count <= MAX_MODES:
            raise ValueError(f"mode_count must be in [1, {MAX_MODES}], got {self.mode_count}")
        occ = np.asarray(self.occupations, dtype=np.int64).reshape(-1, self.mode_count)
        amp = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if occ.shape[0] != amp.shape[0]:
            raise ValueError("occupations and amplitudes differ in length")
        if not self._checked:
            if occ.size and occ.min() < 0:
                raise ValueError("occupations must be non-negative")
            occ, amp = combine_terms(occ, amp)
        if not np.all(np.isfinite(amp)):
            raise FloatingPointError("non-finite amplitude in state")
        if not (self.tail_error >= 0 and np.isfinite(self.tail_error)):
            raise ValueError(f"tail_error must be finite and >= 0, got {self.tail_error}")
        occ.flags.writeable = False
        amp.flags.writeable = False
        object.__setattr__(self, "occupations", occ)
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "tail_error", float(self.tail_error))

    @classmethod
    def from_terms(
        cls,
        terms: Mapping[Sequence[int], complex],
        mode_count: int | None = None,
        tail_error: float = 0.0,
    ) -> "SparseFockState":
        keys = [tuple(k) for k in terms]
        if mode_count is None:
            if not keys:
                raise ValueError("mode_count is required for an empty state")
            mode_count = len(keys[0])
        occ = np.array([_as_pattern(k, mode_count) for k in keys], dtype=np.int64)
        amp = np.array([complex(terms[k]) for k in terms], dtype=np.complex128)
        return cls(occ.reshape(-1, mode_count), amp, mode_count, tail_error)

    @classmethod
    def basis(cls, pattern: Sequence[int]) -> "SparseFockState":
        """The number state ``|pattern>`` with unit amplitude."""
        counts = _as_pattern(pattern)
        return cls(np.array([counts], dtype=np.int64), np.ones(1, complex), len(counts))

    @classmethod
    def vacuum(cls, mode_count: int) -> "SparseFockState":
        return cls.basis((0,) * mode_count)

    @classmethod
    def empty(cls, mode_count: int) -> "SparseFockState":
        return cls(np.zeros((0, mode_count), np.int64), np.zeros(0, complex), mode_count)

    def __len__(self) -> int:
        return self.amplitudes.shape[0]

    def __iter__(self):
        return iter(self.terms.items())

    @cached_property
    def terms(self) -> dict[tuple[int, ...], complex]:
        return {
            tuple(int(c) for c in row): complex(a)
            for row, a in zip(self.occupations, self.amplitudes)
        }

    def norm(self) -> float:
        return norm(self)

    def amplitude_of(self, pattern: Sequence[int]) -> complex:
        return amplitude_of(self, pattern)

    def with_tail(self, extra: float) -> "SparseFockState":
        return SparseFockState(
            self.occupations, self.amplitudes, self.mode_count,
            self.tail_error + extra, _checked=True,
        )

    def max_deviation(self, other: "SparseFockState") -> float:
        """Largest |amplitude difference| over the union of both supports."""
        if other.mode_count != self.mode_count:
            raise ValueError("states have different mode counts")
        occ = np.concatenate([self.occupations, other.occupations])
        amp = np.concatenate([self.amplitudes, -other.amplitudes])
        _, diff = combine_terms(occ, amp)
        return float(np.max(np.abs(diff))) if diff.size else 0.0


def norm(state: SparseFockState) -> float:
    """l2 norm of the stored amplitudes."""
    if len(state) == 0:
        return 0.0
    return float(np.sqrt(np.sum(state.amplitudes.real**2 + state.amplitudes.imag**2)))


def amplitude_of(state: SparseFockState, pattern: Sequence[int]) -> complex:
    """Stored amplitude of ``pattern``, or exactly zero when absent."""
    key = _as_pattern(pattern, state.mode_count)
    return state.terms.get(key, 0j)


def prune(state: SparseFockState, floor: float) -> SparseFockState:
    """Drop terms with ``|amplitude| < floor``; their l2 mass joins tail_error."""
    if floor < 0:
        raise ValueError(f"floor must be >= 0, got {floor}")
    if floor == 0 or len(state) == 0:
        return state
    mag = np.abs(state.amplitudes)
    keep = mag >= floor
    if keep.all():
        return state
    removed = float(np.sqrt(np.sum(mag[~keep] ** 2)))
    return SparseFockState(
        state.occupations[keep], state.amplitudes[keep], state.mode_count,
        state.tail_error + removed, _checked=True,
    )

