"""Nested-sum expansions of the multi-crystal output states.

These evaluate the pair-number series of each setup directly, term by term,
with every squeezer written as its normal-ordered double sum

    S(r)|p,q> = sum_n sum_k t^n (-t)^k / c^{p+q-2n+1}
                * sqrt(C(p,n) C(q,n) C(p-n+k,k) C(q-n+k,k)) |p-n+k, q-n+k>

and the phase shifters as factors exp(i phi n). Inner sums over a crystal's
indices are accumulated per intermediate ket before the next crystal is
applied, which is the same nested sum reordered. This path shares no kernel
code with :mod:`fockinterf.engine` and exists to cross-check it; it is plain
double-precision summation and loses accuracy once the alternating n-sums
cancel heavily (large gain together with high occupation).
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .engine import ConvergenceError
from .fock_state import DEFAULT_POLICY, SparseFockState, TruncationPolicy, combine_terms

_DEFICIT_SLOP = 1e-13
# float summation is trusted while sum|terms| / |sum| stays below this
_CANCEL_LIMIT = 64.0


def _vacuum_series(r: float, policy: TruncationPolicy):
    """Indices k and coefficients (-tanh r)^k / cosh r of the squeezed vacuum."""
    if r == 0:
        return np.zeros(1, np.int64), np.ones(1), 0.0
    t = math.tanh(r)
    k = np.arange(policy.photon_cap + 1)
    coef = (-t) ** k / math.cosh(r)
    # terms decay monotonically; stop at the first one below the floor
    small = np.flatnonzero(np.abs(coef) < policy.term_floor)
    stop = int(small[0]) if small.size else k.size
    if stop > policy.k_max + 1:
        raise ConvergenceError(f"squeezed-vacuum series at r={r} exceeds k_max", t ** policy.k_max)
    k, coef = k[:stop], coef[:stop]
    # l2 mass of the omitted terms: sum_{k >= stop} t^{2k} / cosh^2 r = t^{2 stop}
    return k, coef, t**stop


def _exact_sum(p: int, q: int, j: int, lo: int, y: Fraction) -> Fraction:
    """sum_{n >= lo} (-y)^{n - lo} C(p, n) C(q+j, q-n), exactly."""
    num, den = y.numerator, y.denominator
    coeffs = []
    cp, cq = math.comb(p, lo), math.comb(q + j, q - lo)
    for n in range(lo, min(p, q) + 1):
        coeffs.append(cp * cq)
        cp = cp * (p - n) // (n + 1)
        cq = cq * (q - n) // (j + n + 1) if q > n else 0
    deg = len(coeffs) - 1
    # homogeneous Horner scheme in (-num, den)
    acc, power = coeffs[deg], 1
    for b in reversed(coeffs[:deg]):
        power *= den
        acc = acc * -num + b * power
    return Fraction(acc, den**deg)


def _log_comb(n, k):
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


@lru_cache(maxsize=16384)
def _crystal(p: int, q: int, r: float, cap: int, term_floor: float, k_max: int):
    """Output offsets j and amplitudes of S(r)|p,q> on |p+j, q+j>.

    For each offset the inner sum over the annihilated pairs n is collected
    into a polynomial in y = sinh^2 r with integer coefficients,

        <p+j, q+j|S|p,q> = (-t)^j / c^{p+q+1} sqrt(q! (p+j)! / (p! (q+j)!))
                           * sum_n (-y)^n C(p, n) C(q+j, q-n),

    summed in floating point where its terms do not cancel badly and in exact
    rational arithmetic elsewhere. Offsets stop at the photon cap, at k_max, or
    once the largest term is past its peak and below term_floor.
    """
    t = math.tanh(r)
    y = math.sinh(r) ** 2
    m = min(p, q)
    j_full = cap - max(p, q)
    j_hi = min(j_full, k_max)
    if j_hi < -m:
        return np.zeros(0, np.int64), np.zeros(0)
    j = np.arange(-m, j_hi + 1)[:, None]
    n = np.arange(m + 1)[None, :]
    valid = n >= -j
    with np.errstate(invalid="ignore"):
        log_b = np.where(valid, _log_comb(p, n) + _log_comb(q + j, np.where(valid, q - n, 0)), -np.inf)
    lo = np.maximum(0, -j[:, 0])
    log_pref = (
        -(p + q + 1) * math.log(math.cosh(r)) + j[:, 0] * math.log(t)
        + 0.5 * (gammaln(q + 1.0) + gammaln(p + j[:, 0] + 1.0) - gammaln(p + 1.0) - gammaln(q + j[:, 0] + 1.0))
        + lo * math.log(y)
    )
    # terms relative to y^lo so that no power of y underflows
    shift = (n - lo[:, None]) * math.log(y)
    log_terms = log_b + shift
    scale = np.max(log_terms, axis=1)
    terms = np.exp(log_terms - scale[:, None]) * np.where((n - lo[:, None]) % 2, -1.0, 1.0)
    terms[~valid] = 0.0
    total = terms.sum(axis=1)
    bulk = np.abs(terms).sum(axis=1)
    values = (-1.0) ** (j[:, 0] + lo) * total * np.exp(log_pref + scale)
    bad = np.flatnonzero(bulk > _CANCEL_LIMIT * np.abs(total))
    if bad.size:
        y_exact = Fraction(y)
        for i in bad:
            jj = int(j[i, 0])
            exact = _exact_sum(p, q, jj, int(lo[i]), y_exact)
            mag = math.exp(log_pref[i] + _log_fraction(abs(exact))) if exact else 0.0
            values[i] = (-1.0) ** (jj + int(lo[i])) * math.copysign(mag, exact)
    # stop once the largest term of the k-series is past its peak and negligible
    largest = np.exp(log_pref + scale)
    ratio = t * np.sqrt((p + j[:, 0] + 1.0) * (q + j[:, 0] + 1.0)) / (j[:, 0] + m + 1.0)
    done = np.flatnonzero((j[:, 0] >= 0) & (ratio < 1) & (largest < term_floor))
    if done.size:
        stop = int(done[0]) + 1
    else:
        stop = j.shape[0]
        if j_hi < j_full:
            raise ConvergenceError(f"k-series for |{p},{q}> at r={r} not converged within k_max", math.inf)
    return j[:stop, 0].astype(np.int64), values[:stop]


def _log_fraction(x: Fraction) -> float:
    return math.log(x.numerator) - math.log(x.denominator)


def _squeeze_terms(state: SparseFockState, a: int, b: int, r: float, policy) -> SparseFockState:
    if r == 0 or len(state) == 0:
        return state
    pairs, inverse = np.unique(state.occupations[:, [a, b]], axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    rows, vals = [], []
    for g, (p, q) in enumerate(pairs):
        js, coef = _crystal(int(p), int(q), float(r), int(policy.photon_cap),
                            float(policy.term_floor), int(policy.k_max))
        idx = np.flatnonzero(inverse == g)
        weights = state.amplitudes[idx]
        block = np.repeat(state.occupations[idx], js.size, axis=0)
        shift = np.tile(js, idx.size)
        block[:, a] += shift
        block[:, b] += shift
        rows.append(block)
        vals.append((weights[:, None] * coef[None, :]).ravel())
    occ, amp = combine_terms(np.concatenate(rows), np.concatenate(vals))
    mass_in = float(np.sum(np.abs(state.amplitudes) ** 2))
    deficit = mass_in - float(np.sum(np.abs(amp) ** 2))
    step = math.sqrt(max(deficit, 0.0) + _DEFICIT_SLOP * mass_in)
    keep = amp != 0
    return SparseFockState(occ[keep], amp[keep], state.mode_count, state.tail_error + step, _checked=True)


def _phase(state: SparseFockState, mode: int, phi: float) -> SparseFockState:
    amps = state.amplitudes * np.exp(1j * phi * state.occupations[:, mode])
    return SparseFockState(state.occupations, amps, state.mode_count, state.tail_error, _checked=True)


def _pair_vacuum(mode_count: int, a: int, b: int, r: float, policy) -> SparseFockState:
    k, coef, tail = _vacuum_series(r, policy)
    occ = np.zeros((k.size, mode_count), np.int64)
    occ[:, a] = k
    occ[:, b] = k
    return SparseFockState(occ, coef.astype(complex), mode_count, tail)


def _check(*rs):
    for r in rs:
        if not r >= 0:
            raise ValueError(f"squeezing parameters must be >= 0, got {r}")


def two_crystal_series_state(
    r1: float, r2: float, phi: float, policy: TruncationPolicy = DEFAULT_POLICY
) -> SparseFockState:
    """S_ab(r2) Phi_a(phi) S_ab(r1)|0,0> from its pair-number series."""
    _check(r1, r2)
    state = _pair_vacuum(2, 0, 1, r1, policy)
    state = _phase(state, 0, phi)
    return _squeeze_terms(state, 0, 1, r2, policy)


def three_crystal_series_state(
    r1: float, r2: float, r3: float, phi1: float, phi2: float,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> SparseFockState:
    """S_ab(r3) Phi_a(phi2) S_ab(r2) Phi_a(phi1) S_ab(r1)|0,0> from its series."""
    _check(r1, r2, r3)
    state = _pair_vacuum(2, 0, 1, r1, policy)
    state = _phase(state, 0, phi1)
    state = _squeeze_terms(state, 0, 1, r2, policy)
    state = _phase(state, 0, phi2)
    return _squeeze_terms(state, 0, 1, r3, policy)


def four_crystal_series_state(
    r1: float, r2: float, r3: float, r4: float, phi: float,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> SparseFockState:
    """S_cd(r4) S_ab(r3) Phi_a(phi) S_bd(r2) S_ac(r1)|0,0,0,0> from its series.

    The first two crystals give the product sum over |k1, k2, k1, k2>; the
    last two act on disjoint pairs, each with inner index limited by
    min(k1, k2).
    """
    _check(r1, r2, r3, r4)
    k1, c1, tail1 = _vacuum_series(r1, policy)
    k2, c2, tail2 = _vacuum_series(r2, policy)
    K1, K2 = np.meshgrid(k1, k2, indexing="ij")
    occ = np.stack([K1.ravel(), K2.ravel(), K1.ravel(), K2.ravel()], axis=1)
    amp = np.outer(c1, c2).ravel() * np.exp(1j * phi * K1.ravel())
    # the two vacuum series are independent: the omitted mass is bounded by
    # the sum of their separate l2 tails
    state = SparseFockState(occ, amp, 4, tail1 + tail2)
    state = _squeeze_terms(state, 0, 1, r3, policy)
    return _squeeze_terms(state, 2, 3, r4, policy)
