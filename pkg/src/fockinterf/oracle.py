"""Brute-force two-mode squeezing by exponentiating the truncated generator.

The generator G = zeta* a b - zeta a^dag b^dag is built as a matrix on the
basis |p, q> with p, q <= n_max. Both ladder products are truncated the same
way, so G is exactly anti-Hermitian and exp(G) exactly unitary; the truncation
only distorts coefficients near the cutoff.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

# scaled operator norm targeted before the series is summed
SCALED_NORM = 0.5
SERIES_TOL = 1e-18
MAX_SERIES_TERMS = 60


class OracleConvergenceError(ArithmeticError):
    """The truncated exponential series did not reach the requested tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class TruncatedBasis:
    """Flat indexing of the two-mode kets |p, q> with p, q <= n_max."""

    n_max: int

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max!r}")

    @property
    def size(self) -> int:
        return (self.n_max + 1) ** 2

    def index(self, p: int, q: int) -> int:
        if not (0 <= p <= self.n_max and 0 <= q <= self.n_max):
            raise IndexError(f"|{p},{q}> lies outside the basis with n_max={self.n_max}")
        return p * (self.n_max + 1) + q

    def pair(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.size:
            raise IndexError(f"index {index} outside 0..{self.size - 1}")
        return divmod(index, self.n_max + 1)

    def ket(self, p: int, q: int) -> np.ndarray:
        v = np.zeros(self.size, complex)
        v[self.index(p, q)] = 1.0
        return v


def _generator_sparse(n_max: int, r: float, theta: float) -> sp.csr_matrix:
    basis = TruncatedBasis(n_max)
    zeta = r * cmath.exp(1j * theta)
    p, q = np.divmod(np.arange(basis.size), n_max + 1)
    # a b lowers both modes: <p-1, q-1| a b |p, q> = sqrt(p q)
    lower = (p > 0) & (q > 0)
    src = np.flatnonzero(lower)
    dst = src - (n_max + 2)
    amp = np.sqrt(p[lower] * q[lower].astype(float))
    rows = np.concatenate([dst, src])
    cols = np.concatenate([src, dst])
    # the raising block is the adjoint of the lowering block within the basis
    vals = np.concatenate([np.conj(zeta) * amp, -zeta * amp])
    return sp.csr_matrix((vals, (rows, cols)), shape=(basis.size, basis.size))


def build_generator(n_max: int, r: float, theta: float = 0.0) -> np.ndarray:
    """Dense matrix of zeta* a b - zeta a^dag b^dag on the (n_max+1)^2 basis."""
    return _generator_sparse(n_max, r, theta).toarray()


def _one_norm(G) -> float:
    if sp.issparse(G):
        return float(abs(G).sum(axis=0).max()) if G.nnz else 0.0
    return float(np.abs(G).sum(axis=0).max()) if G.size else 0.0


def _scaling(G) -> int:
    norm = _one_norm(G)
    if norm <= SCALED_NORM:
        return 0
    return int(math.ceil(math.log2(norm / SCALED_NORM)))


def expm(G: np.ndarray, tol: float = SERIES_TOL) -> np.ndarray:
    """Dense exp(G) by scaling and squaring around a truncated Taylor series."""
    G = np.asarray(G, dtype=complex)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {G.shape}")
    s = _scaling(G)
    A = G / 2.0**s
    result = np.eye(G.shape[0], dtype=complex)
    term = np.eye(G.shape[0], dtype=complex)
    for k in range(1, MAX_SERIES_TERMS + 1):
        term = term @ A / k
        result += term
        if _one_norm(term) < tol:
            break
    else:
        raise OracleConvergenceError("exponential series did not converge", _one_norm(term))
    for _ in range(s):
        result = result @ result
    return result


def expm_apply(G, v: np.ndarray, tol: float = SERIES_TOL) -> np.ndarray:
    """exp(G) v without forming exp(G).

    G is scaled by 2^-s so its 1-norm is at most 0.5, and the Taylor series of
    exp(G / 2^s) is applied to the vector 2^s times. Each series stops once a
    term falls below ``tol`` times the current vector norm.
    """
    v = np.asarray(v, dtype=complex)
    if G.shape[0] != G.shape[1] or G.shape[1] != v.shape[0]:
        raise ValueError(f"shape mismatch: operator {G.shape}, vector {v.shape}")
    if not sp.issparse(G):
        G = sp.csr_matrix(np.asarray(G, dtype=complex))
    s = _scaling(G)
    A = G / 2.0**s
    out = v.copy()
    for _ in range(2**s):
        scale = np.linalg.norm(out)
        if scale == 0:
            return out
        term = out
        acc = out.copy()
        for k in range(1, MAX_SERIES_TERMS + 1):
            term = A @ term / k
            acc += term
            if np.linalg.norm(term) < tol * scale:
                break
        else:
            raise OracleConvergenceError(
                "exponential series did not converge", float(np.linalg.norm(term) / scale)
            )
        out = acc
    return out


def oracle_squeeze(p: int, q: int, r: float, theta: float = 0.0, n_max: int = 40):
    """Coefficients of exp(G)|p, q> on the chain |p+j, q+j> inside the basis.

    Returns a list of (p', q', amplitude) sorted by p'. Entries within a few
    units of n_max carry truncation-edge error and should not be compared.
    """
    if p < 0 or q < 0:
        raise ValueError("occupations must be non-negative")
    if 2 * max(p, q) > n_max:
        raise ValueError(f"|{p},{q}> needs n_max >= {2 * max(p, q)} for headroom, got {n_max}")
    basis = TruncatedBasis(n_max)
    G = _generator_sparse(n_max, r, theta)
    out = expm_apply(G, basis.ket(p, q))
    entries = []
    for j in range(-min(p, q), n_max - max(p, q) + 1):
        entries.append((p + j, q + j, complex(out[basis.index(p + j, q + j)])))
    return entries
