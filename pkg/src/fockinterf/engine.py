"""Fock-basis action of two-mode squeezers and phase shifters.

The squeezer S(zeta) = exp(zeta* a b - zeta a^dag b^dag), zeta = r e^{i theta},
is applied through its normal-ordered factorisation. On a number state the
result is the double sum

    S|p,q> = sum_k sum_{n<=min(p,q)} (e^{-i theta} t)^n (-e^{i theta} t)^k
             / c^{p+q-2n+1} * sqrt(C(p,n) C(q,n) C(p-n+k,k) C(q-n+k,k))
             |p-n+k, q-n+k>

with t = tanh r and c = cosh r. Magnitudes are assembled in the log domain so
that high occupations neither overflow nor underflow.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

from .fock_state import DEFAULT_POLICY, SparseFockState, TruncationPolicy, combine_terms, prune

TANH_LIMIT = 1.0 - 1e-12
# floor added under the square root of the unitarity deficit 1 - sum|c|^2
_UNITARY_SLOP = 1e-14
# direct summation is used while y p q stays below this (n-terms then shrink
# geometrically) or, for few pairs, while the summed |terms| stay this small
_DIRECT_RATIO = 0.25
_DIRECT_MAX_PAIRS = 16
_DIRECT_GROWTH = 16.0
# e-folds of contamination removed by the downward recurrence
_MILLER_DIGITS = 40.0
_RESCALE = 1e150
# rounding allowance on the recurrence tail estimate
_CHAIN_SLOP = 1e-15
# rounding allowance on a state's squared-norm deficit
_DEFICIT_SLOP = 1e-13


class ConvergenceError(ArithmeticError):
    """The k-series could not be certified within the policy limits."""

    def __init__(self, message: str, tail_bound: float = math.inf):
        super().__init__(message)
        self.tail_bound = tail_bound


@dataclass(frozen=True)
class TwoModeSqueezer:
    mode_a: int
    mode_b: int
    r: float
    theta: float = 0.0

    def __post_init__(self):
        if self.mode_a == self.mode_b:
            raise ValueError("a two-mode squeezer needs two distinct modes")
        if min(self.mode_a, self.mode_b) < 0:
            raise ValueError("mode indices must be non-negative")
        if not self.r >= 0:
            raise ValueError(f"squeezing magnitude must be >= 0, got {self.r}")


@dataclass(frozen=True)
class PhaseShifter:
    mode: int
    phi: float

    def __post_init__(self):
        if self.mode < 0:
            raise ValueError("mode index must be non-negative")


class PairExpansion(NamedTuple):
    """Coefficients of S|p,q> restricted to the photon cap.

    Entry ``i`` is the amplitude of ``|p_out[i], q_out[i]>``; ``tail`` bounds
    the l2 norm of everything not returned.
    """

    p_out: np.ndarray
    q_out: np.ndarray
    amps: np.ndarray
    tail: float

    def entries(self):
        return [(int(a), int(b), complex(c)) for a, b, c in zip(self.p_out, self.q_out, self.amps)]


def _log_binom(n, k):
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def _log_cosh(r: float) -> float:
    return r + math.log1p(math.exp(-2.0 * r)) - math.log(2.0)


def _finish(j0, amps, tail):
    nz = np.flatnonzero(amps != 0)
    if nz.size:
        amps = amps[nz[0]:nz[-1] + 1]
        j0 += int(nz[0])
    else:
        amps = amps[:0]
    amps = np.ascontiguousarray(amps)
    amps.flags.writeable = False
    return j0, amps, float(tail)


def _unitary_tail(amps) -> float:
    captured = float(np.sum(np.abs(amps) ** 2))
    return math.sqrt(max(1.0 - captured, 0.0) + _UNITARY_SLOP)


@lru_cache(maxsize=8192)
def _pair_table(p, q, r, theta, term_floor, k_max, cap):
    """(first output offset j0, amplitudes per offset, tail bound).

    Output offset j maps |p,q> to |p+j, q+j>; offsets run from j0 upward.
    """
    if max(p, q) > cap:
        raise ValueError(f"input occupation ({p}, {q}) exceeds photon cap {cap}")
    if r == 0.0:
        amps = np.ones(1, complex)
        amps.flags.writeable = False
        return 0, amps, 0.0
    t = math.tanh(r)
    if t >= TANH_LIMIT:
        raise ConvergenceError(f"tanh r = {t!r} too close to 1 for the k-series to converge")
    y = math.sinh(r) ** 2
    m = min(p, q)
    if y * p * q <= _DIRECT_RATIO or m <= _DIRECT_MAX_PAIRS:
        table = _direct_table(p, q, r, theta, term_floor, k_max, cap)
        if table is not None:
            return table
    return _chain_table(p, q, r, theta, term_floor, k_max, cap)


def _direct_table(p, q, r, theta, term_floor, k_max, cap):
    """Sum the double series term by term.

    Returns None when the alternating n-sum would cancel too much for double
    precision and ``y p q`` does not guarantee geometric decay of the n-terms.
    """
    m = min(p, q)
    spread = abs(p - q)
    t = math.tanh(r)
    log_t = math.log(t)
    log_c = _log_cosh(r)

    by_cap = cap - spread
    k_limit = min(k_max, by_cap)
    n = np.arange(m + 1, dtype=float)[:, None]
    k = np.arange(k_limit + 1, dtype=float)[None, :]
    big_p = p - n
    big_q = q - n
    log_mag = (
        (n + k) * log_t
        - (p + q - 2 * n + 1) * log_c
        + 0.5 * (_log_binom(p, n) + _log_binom(q, n)
                 + _log_binom(big_p + k, k) + _log_binom(big_q + k, k))
    )
    mag = np.exp(log_mag)
    # ratio |c(n, k+1)| / |c(n, k)|, non-increasing in k
    ratio = t * np.sqrt((big_p + k + 1) * (big_q + k + 1)) / (k + 1)

    past_peak = np.all(ratio < 1.0, axis=0)
    small = np.max(mag, axis=0) < term_floor
    hits = np.flatnonzero(past_peak & small)
    if hits.size:
        k_stop = int(hits[0])
        rho = ratio[:, k_stop]
        beyond = float(np.sum(mag[:, k_stop] / (1.0 - rho)))
    else:
        k_stop = k_limit + 1
        rho = ratio[:, k_limit]
        if np.all(rho < 1.0):
            beyond = float(np.sum(mag[:, k_limit] * rho / (1.0 - rho)))
        else:
            beyond = math.inf
        if k_limit < by_cap:
            raise ConvergenceError(
                f"k-series for |{p},{q}> at r={r} not converged within k_max={k_max}",
                tail_bound=beyond,
            )

    kk = np.arange(k_stop)[None, :]
    nn = np.arange(m + 1)[:, None]
    in_cap = kk <= cap - max(p, q) + nn
    kept = mag[:, :k_stop] * in_cap
    dropped = float(np.sum(mag[:, :k_stop][~in_cap]))

    # regroup by output offset j = k - n
    j0 = -m
    width = k_stop + m
    grid = np.zeros((m + 1, max(width, 0)))
    if width > 0:
        rows = np.broadcast_to(nn, (m + 1, k_stop))
        grid[rows, kk - nn - j0] = kept * np.where(kk % 2, -1.0, 1.0)
    # cancellation check: sum of |terms| against the machine-precision budget
    if not math.sinh(r) ** 2 * p * q <= _DIRECT_RATIO:
        if width > 0 and np.max(np.abs(grid).sum(axis=0)) > _DIRECT_GROWTH:
            return None
    amps = grid.sum(axis=0) * np.exp(1j * theta * (j0 + np.arange(max(width, 0))))

    tail = min(dropped + beyond, _unitary_tail(amps))
    return _finish(j0, amps, tail)


def _chain_column(p, q, r, top):
    """Real coefficients <p+j, q+j| S(r) |p, q> for j = -m..top, and the l2 mass above top.

    S K0 S^dag with K0 = (a^dag a + b^dag b + 1)/2 is tridiagonal along the
    chain |p+j, q+j>, and the wanted column is its eigenvector of eigenvalue
    (p+q+1)/2. The three-term recurrence is run upward from the exact lowest
    entry and downward from far above the cap, and the two pieces are joined
    where both are accurate. Returns None for the mass above top when it was
    not resolved.
    """
    m = min(p, q)
    k0 = (p + q + 1) / 2
    ch = math.cosh(2 * r)
    sh = math.sinh(2 * r) / 2
    log_t = math.log(math.tanh(r))
    lead = (
        m * log_t - (p + q - 2 * m + 1) * _log_cosh(r)
        + 0.5 * float(_log_binom(p, m) + _log_binom(q, m))
    )
    size = top + m + 1
    js = np.arange(-m, top + 1, dtype=float)
    up = np.sqrt((p + js + 1) * (q + js + 1))
    down = np.sqrt((p + js) * (q + js))
    diag = k0 - ch * (k0 + js)
    # oscillatory band of the recurrence, where neither solution dominates
    with np.errstate(divide="ignore", invalid="ignore"):
        g = diag * diag / (4 * sh * sh * down * up)
    g[0] = math.inf
    band = np.flatnonzero(g < 1.0)

    above = None
    if band.size and band[-1] >= size - 1:
        split = size - 1
    else:
        margin = int(math.ceil(_MILLER_DIGITS / -log_t)) + 20
        n_back = size + 2 * margin
        jb = np.arange(-m, -m + n_back + 1, dtype=float)
        up_b = np.sqrt((p + jb + 1) * (q + jb + 1)).tolist()
        diag_b = (k0 - ch * (k0 + jb)).tolist()
        b = [0.0] * (n_back + 1)
        b[n_back - 1] = 1.0
        for i in range(n_back - 1, 0, -1):
            x = (diag_b[i] * b[i] - sh * up_b[i] * b[i + 1]) / (sh * up_b[i - 1])
            if abs(x) > _RESCALE:
                for z in range(i, n_back + 1):
                    b[z] /= _RESCALE
                x /= _RESCALE
            b[i - 1] = x
        b = np.array(b)
        if band.size:
            split = int(band[np.argmax(np.abs(b[band]))])
        else:
            split = int(np.argmin(g))
        keep_b = b[: size + margin]

    f = [0.0] * (split + 1)
    logs = [0.0] * (split + 1)
    diag_l, up_l, down_l = diag.tolist(), up.tolist(), down.tolist()
    prev, cur, shift = 0.0, 1.0, 0.0
    f[0] = 1.0
    for i in range(split):
        x = (diag_l[i] * cur - sh * down_l[i] * prev) / (sh * up_l[i])
        prev, cur = cur, x
        if abs(x) > _RESCALE:
            prev /= _RESCALE
            cur /= _RESCALE
            shift += math.log(_RESCALE)
        f[i + 1] = cur
        logs[i + 1] = shift
    f = np.array(f)
    out = np.zeros(size)
    with np.errstate(under="ignore", divide="ignore"):
        out[: split + 1] = np.sign(f) * np.exp(np.log(np.abs(f)) + np.array(logs) + lead)
    if split < size - 1:
        scale = out[split] / keep_b[split]
        out[split:] = keep_b[split:size] * scale
        rest = keep_b[size:] * scale
        # geometric remainder past the resolved stretch
        ratio = abs(rest[-1] / rest[-2]) if rest[-2] != 0 else 0.0
        ratio = min(max(ratio, math.exp(log_t)) * 1.01, 0.999999)
        above = float(np.linalg.norm(rest)) + abs(rest[-1]) * ratio / (1 - ratio)
    return out, above


@lru_cache(maxsize=65536)
def _low_column(p, q, r):
    """Real coefficients <p+j, q+j| S(r) |p, q> for j = -m..0.

    Below the input level the wanted solution of the chain recurrence grows
    upward from its exact lowest entry, so the forward recurrence alone is
    stable there.
    """
    m = min(p, q)
    if r == 0.0:
        out = np.zeros(m + 1)
        out[-1] = 1.0
        return out
    t = math.tanh(r)
    if t * t * (p + 1) * (q + 1) < 1e-18:
        # the next order is below rounding, and the recurrence would divide by ~r
        c = math.cosh(r)
        out = np.array([t**i * math.sqrt(math.comb(p, i) * math.comb(q, i)) / c ** (p + q - 2 * i + 1)
                        for i in range(m, -1, -1)])
        out.flags.writeable = False
        return out
    k0 = (p + q + 1) / 2
    ch = math.cosh(2 * r)
    sh = math.sinh(2 * r) / 2
    lead = (
        m * math.log(math.tanh(r)) - (p + q - 2 * m + 1) * _log_cosh(r)
        + 0.5 * float(_log_binom(p, m) + _log_binom(q, m))
    )
    f = [1.0] * (m + 1)
    logs = [0.0] * (m + 1)
    prev, cur, shift = 0.0, 1.0, 0.0
    for i in range(m):
        j = i - m
        down = math.sqrt((p + j) * (q + j))
        up = math.sqrt((p + j + 1) * (q + j + 1))
        x = ((k0 - ch * (k0 + j)) * cur - sh * down * prev) / (sh * up)
        prev, cur = cur, x
        if abs(x) > _RESCALE:
            prev /= _RESCALE
            cur /= _RESCALE
            shift += math.log(_RESCALE)
        f[i + 1] = cur
        logs[i + 1] = shift
    f = np.array(f)
    with np.errstate(under="ignore", divide="ignore"):
        out = np.sign(f) * np.exp(np.log(np.abs(f)) + np.array(logs) + lead)
    out.flags.writeable = False
    return out


def _chain_table(p, q, r, theta, term_floor, k_max, cap):
    m = min(p, q)
    top = cap - max(p, q)
    limit = min(top, k_max)
    values, above = _chain_column(p, q, r, limit)
    amps = values * np.exp(1j * theta * np.arange(-m, limit + 1))
    unitary = _unitary_tail(amps)
    tail = unitary if above is None else min(above + _CHAIN_SLOP, unitary)
    if limit < top and tail > term_floor:
        raise ConvergenceError(
            f"coefficients of |{p},{q}> at r={r} not converged within k_max={k_max}",
            tail_bound=tail,
        )
    return _finish(-m, amps, tail)


def squeeze_pair_coefficients(
    p: int, q: int, r: float, theta: float = 0.0, policy: TruncationPolicy = DEFAULT_POLICY
) -> PairExpansion:
    """Coefficients <p', q'| S(r e^{i theta}) |p, q> within the policy cutoffs."""
    if p < 0 or q < 0:
        raise ValueError("occupations must be non-negative")
    if not r >= 0:
        raise ValueError(f"r must be >= 0, got {r}")
    j0, amps, tail = _pair_table(
        int(p), int(q), float(r), float(theta),
        policy.term_floor, int(policy.k_max), int(policy.photon_cap),
    )
    j = j0 + np.arange(amps.size)
    return PairExpansion(p + j, q + j, amps.copy(), tail)


def _check_modes(state: SparseFockState, *modes: int):
    for mode in modes:
        if mode >= state.mode_count:
            raise ValueError(f"mode {mode} out of range for a {state.mode_count}-mode state")


def apply_squeezer(
    state: SparseFockState, sq: TwoModeSqueezer, policy: TruncationPolicy = DEFAULT_POLICY
) -> SparseFockState:
    """Apply a two-mode squeezer to every term of ``state``.

    Spectator modes are carried through unchanged. The returned tail_error adds
    the smaller of the input-weighted per-pair tail bounds and the norm deficit
    of the output, plus the pruned mass.
    """
    _check_modes(state, sq.mode_a, sq.mode_b)
    if sq.r == 0.0 or len(state) == 0:
        return state
    a, b = sq.mode_a, sq.mode_b
    occ, amp = state.occupations, state.amplitudes
    cap = int(policy.photon_cap)
    if occ.max() > cap:
        raise ValueError(f"state occupation {occ.max()} exceeds photon cap {cap}")

    # terms sharing spectators and p - q lie on one chain; index outputs by
    # (chain, q') so duplicates can be summed without sorting the raw rows
    chains = occ.copy()
    chains[:, a] -= chains[:, b]
    chains[:, b] = 0
    chains, chain_id = np.unique(chains, axis=0, return_inverse=True)
    chain_id = chain_id.reshape(-1)
    width = cap + 1

    pairs, inverse = np.unique(occ[:, [a, b]], axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    starts = np.empty(len(pairs), np.int64)
    lengths = np.empty(len(pairs), np.int64)
    taus = np.empty(len(pairs))
    tables = []
    offset = 0
    for g, (p, q) in enumerate(pairs):
        j0, table, taus[g] = _pair_table(
            int(p), int(q), float(sq.r), float(sq.theta),
            policy.term_floor, int(policy.k_max), cap,
        )
        tables.append(table)
        starts[g] = j0
        lengths[g] = table.size
        offset += table.size
    tail = state.tail_error + float(np.sum(taus[inverse] * np.abs(amp)))
    if offset == 0:
        return SparseFockState.empty(state.mode_count).with_tail(tail)
    flat_tables = np.concatenate(tables)
    table_at = np.concatenate([[0], np.cumsum(lengths)[:-1]])

    # one output entry per (input term, table entry), in input order
    per_row = lengths[inverse]
    row = np.repeat(np.arange(len(amp)), per_row)
    k = np.arange(row.size) - np.repeat(np.cumsum(per_row) - per_row, per_row)
    g = inverse[row]
    vals = amp[row] * flat_tables[table_at[g] + k]
    q_out = occ[row, b] + starts[g] + k
    flat = chain_id[row] * width + q_out
    size = len(chains) * width
    if size <= max(1 << 22, 4 * flat.size):
        slots = np.arange(size)
        re = np.bincount(flat, weights=vals.real, minlength=size)
        im = np.bincount(flat, weights=vals.imag, minlength=size)
    else:
        slots, flat = np.unique(flat, return_inverse=True)
        re = np.bincount(flat.reshape(-1), weights=vals.real, minlength=slots.size)
        im = np.bincount(flat.reshape(-1), weights=vals.imag, minlength=slots.size)
    vals = re + 1j * im
    hit = np.flatnonzero(vals != 0)
    slots, vals = slots[hit], vals[hit]
    rows = chains[slots // width]
    rows[:, b] = slots % width
    rows[:, a] += rows[:, b]
    lex = np.lexsort(rows.T[::-1])
    rows, vals = rows[lex], vals[lex]

    # S is unitary, so the dropped mass is also the norm deficit; that bound
    # sees cancellations between inputs that the weighted sum cannot
    mass_in = float(np.sum(np.abs(amp) ** 2))
    deficit = mass_in - float(np.sum(np.abs(vals) ** 2))
    step = tail - state.tail_error
    step = min(step, math.sqrt(max(deficit, 0.0) + _DEFICIT_SLOP * mass_in))
    tail = state.tail_error + step
    result = SparseFockState(rows, vals, state.mode_count, tail, _checked=True)
    return prune(result, policy.prune_floor)


def project_squeezer(
    state: SparseFockState,
    sq: TwoModeSqueezer,
    target_a: int,
    target_b: int,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> SparseFockState:
    """The part of S|state> with ``target_a``, ``target_b`` photons in the squeezed modes.

    Only one output coefficient per input pair is needed, so nothing is
    truncated except coefficients past the end of a truncated series, whose
    per-pair tails are added to tail_error.
    """
    _check_modes(state, sq.mode_a, sq.mode_b)
    a, b = sq.mode_a, sq.mode_b
    if min(target_a, target_b) < 0:
        raise ValueError("target occupations must be non-negative")
    occ, amp = state.occupations, state.amplitudes
    keep = (occ[:, a] - occ[:, b]) == (target_a - target_b) if len(state) else np.zeros(0, bool)
    occ, amp = occ[keep], amp[keep]
    if sq.r == 0.0:
        hit = occ[:, a] == target_a
        occ, amp = occ[hit], amp[hit]
    if len(amp) == 0:
        return SparseFockState.empty(state.mode_count).with_tail(state.tail_error)
    cap = max(int(policy.photon_cap), target_a, target_b)
    pairs, inverse = np.unique(occ[:, [a, b]], axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    coeff = np.zeros(len(pairs), complex)
    missing = np.zeros(len(pairs))
    r, theta = float(sq.r), float(sq.theta)
    low = []
    for g, (p, q) in enumerate(pairs.tolist()):
        j = target_a - p
        if r == 0.0:
            coeff[g] = 1.0
        elif j <= 0:
            low.append(g)
            coeff[g] = _low_column(p, q, r)[j + min(p, q)]
        else:
            j0, table, pair_tail = _pair_table(p, q, r, theta, policy.term_floor, int(policy.k_max), cap)
            if j - j0 < table.size:
                coeff[g] = table[j - j0]
            else:
                missing[g] = pair_tail
    if low and theta != 0.0:
        coeff[low] *= np.exp(1j * theta * (target_a - pairs[low, 0]))
    tail = state.tail_error + float(np.sum(missing[inverse] * np.abs(amp)))
    rows = occ.copy()
    rows[:, a], rows[:, b] = target_a, target_b
    rows, vals = combine_terms(rows, amp * coeff[inverse])
    nonzero = vals != 0
    return SparseFockState(rows[nonzero], vals[nonzero], state.mode_count, tail, _checked=True)


def apply_phase(state: SparseFockState, ph: PhaseShifter) -> SparseFockState:
    """Multiply each amplitude by exp(i phi n), n the occupation of ``ph.mode``."""
    _check_modes(state, ph.mode)
    if ph.phi == 0.0 or len(state) == 0:
        return state
    n = state.occupations[:, ph.mode]
    amps = state.amplitudes * np.exp(1j * ph.phi * n)
    return SparseFockState(state.occupations, amps, state.mode_count, state.tail_error, _checked=True)


def squeezed_vacuum(
    r: float, theta: float = 0.0, policy: TruncationPolicy = DEFAULT_POLICY
) -> SparseFockState:
    """Two-mode squeezed vacuum S(r e^{i theta})|0,0>."""
    return apply_squeezer(SparseFockState.vacuum(2), TwoModeSqueezer(0, 1, r, theta), policy)
