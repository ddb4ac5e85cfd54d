"""Scans, null refinement and curvature for coincidence amplitudes.

Objectives are callables of one or two real parameters returning either a
complex amplitude or an :class:`~fockinterf.interferometer.AmplitudeResult`.
Nulls are located on |A|^2, which is smooth where |A| has a kink.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .interferometer import AmplitudeResult

NULL_TOL = 1e-9
COARSE_SAMPLES = 41
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_MAX_ITER = 200


class ScanError(RuntimeError):
    """An objective failed at a grid point; ``coordinates`` names the point."""

    def __init__(self, coordinates: dict, cause: BaseException):
        where = ", ".join(f"{k}={v!r}" for k, v in coordinates.items())
        super().__init__(f"objective failed at {where}: {cause}")
        self.coordinates = coordinates
        self.cause = cause


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not self.name:
            raise ValueError("axis name must be non-empty")
        if len(vals) < 2:
            raise ValueError(f"axis {self.name!r} needs at least 2 samples, got {len(vals)}")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"axis {self.name!r} has non-finite samples")

    @classmethod
    def linspace(cls, name: str, lower: float, upper: float, count: int) -> "Axis":
        if int(count) != count or count < 2:
            raise ValueError(f"sample count for {name!r} must be an integer >= 2, got {count!r}")
        if not (math.isfinite(lower) and math.isfinite(upper)):
            raise ValueError(f"bounds for {name!r} must be finite, got {lower}, {upper}")
        if not lower < upper:
            raise ValueError(f"lower bound {lower} must be below upper bound {upper} for {name!r}")
        return cls(name, tuple(np.linspace(lower, upper, int(count))))


@dataclass(frozen=True)
class SweepGrid:
    """Product grid over one or more named axes, outer axis first."""

    axes: tuple[Axis, ...]

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if not self.axes:
            raise ValueError("a grid needs at least one axis")
        names = [ax.name for ax in self.axes]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate axis names in {names}")

    @classmethod
    def linear(cls, *specs: tuple[str, float, float, int]) -> "SweepGrid":
        """Grid from (name, lower, upper, count) tuples."""
        return cls(tuple(Axis.linspace(*spec) for spec in specs))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(ax.name for ax in self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(ax.values) for ax in self.axes)

    def __len__(self) -> int:
        return math.prod(self.shape)

    def points(self) -> Iterable[tuple[float, ...]]:
        """Grid points in lexicographic order (last axis varies fastest)."""
        return itertools.product(*(ax.values for ax in self.axes))


@dataclass(frozen=True)
class ScanRow:
    params: tuple[float, ...]
    value: complex
    error_bound: float

    @property
    def magnitude(self) -> float:
        return abs(self.value)

    @property
    def probability(self) -> float:
        return abs(self.value) ** 2


def _as_result(out) -> AmplitudeResult:
    if isinstance(out, AmplitudeResult):
        return out
    return AmplitudeResult(complex(out), 0.0)


def _evaluate_point(objective, names, point):
    try:
        return _as_result(objective(*point))
    except Exception as exc:
        raise ScanError(dict(zip(names, point)), exc) from exc


def scan(objective: Callable, grid: SweepGrid, executor=None) -> list[ScanRow]:
    """Evaluate ``objective(*point)`` over the grid.

    Rows come back in grid order whether or not an ``executor`` (anything
    with an order-preserving ``map``) spreads the work.
    """
    points = list(grid.points())
    names = grid.names
    if executor is None:
        results = [_evaluate_point(objective, names, pt) for pt in points]
    else:
        results = list(executor.map(_evaluate_point, itertools.repeat(objective),
                                    itertools.repeat(names), points))
    return [ScanRow(pt, res.value, res.error_bound) for pt, res in zip(points, results)]


@dataclass(frozen=True)
class NullResult:
    """Outcome of a null search: ``found`` is True when |A| < tolerance."""

    param: float
    residual: float
    found: bool
    evaluations: int


def _golden_min(f, lo, hi, xtol, counter):
    """Golden-section search for a minimum of ``f`` on [lo, hi]."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    counter[0] += 2
    for _ in range(_MAX_ITER):
        if b - a <= xtol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
        counter[0] += 1
    return (c, fc) if fc <= fd else (d, fd)


def _parabola_vertex(x0, f0, x1, f1, x2, f2):
    den = (x1 - x0) * (f1 - f2) - (x1 - x2) * (f1 - f0)
    if den == 0:
        return None
    num = (x1 - x0) ** 2 * (f1 - f2) - (x1 - x2) ** 2 * (f1 - f0)
    return x1 - 0.5 * num / den


def _bisect_real(g, lo, hi, glo, xtol, counter):
    for _ in range(_MAX_ITER):
        if hi - lo <= xtol:
            break
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        counter[0] += 1
        if gm == 0:
            return mid
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def refine_null(
    objective: Callable[[float], object],
    bracket: Sequence[float],
    tol: float = NULL_TOL,
    real: bool = False,
    samples: int = COARSE_SAMPLES,
    xtol: float = 1e-13,
) -> NullResult:
    """Locate a zero of a one-parameter amplitude inside ``bracket``.

    The bracket is sampled at ``samples`` evenly spaced points, the smallest
    |A|^2 sample is bracketed by its neighbours and narrowed by golden-section
    search, and a parabola through the final points polishes the estimate. With ``real`` set the amplitude is taken to
    be real and a sign change of its real part, if one brackets the minimum,
    is bisected instead. When no null exists the smallest |A| found is
    returned with ``found`` False.
    """
    lo, hi = (float(v) for v in bracket)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError(f"bracket must be a finite interval with lower < upper, got {bracket}")
    counter = [0]

    def amp(x):
        return _as_result(objective(x)).value

    def power(x):
        return abs(amp(x)) ** 2

    if int(samples) != samples or samples < 3:
        raise ValueError(f"samples must be an integer >= 3, got {samples!r}")
    count = int(samples)
    xs = np.linspace(lo, hi, count)
    vals = [amp(x) for x in xs]
    counter[0] += count
    mags = np.abs(vals)
    i = int(np.argmin(mags))
    best_x, best = float(xs[i]), float(mags[i])
    left, right = float(xs[max(i - 1, 0)]), float(xs[min(i + 1, count - 1)])

    if real:
        re = np.real(vals)
        for k in (i - 1, i):
            if 0 <= k < count - 1 and re[k] * re[k + 1] <= 0:
                if re[k] == 0:
                    x = float(xs[k])
                elif re[k + 1] == 0:
                    x = float(xs[k + 1])
                else:
                    x = _bisect_real(lambda t: amp(t).real, float(xs[k]), float(xs[k + 1]),
                                     re[k], xtol, counter)
                r = abs(amp(x))
                counter[0] += 1
                if r < best:
                    best_x, best = x, r
                break

    if best >= tol or not real:
        x, fx = _golden_min(power, left, right, xtol, counter)
        if math.sqrt(fx) < best:
            best_x, best = x, math.sqrt(fx)
        h = max(xtol, 1e-7 * max(1.0, abs(best_x)))
        if left <= best_x - h and best_x + h <= right:
            f0, f1, f2 = power(best_x - h), power(best_x), power(best_x + h)
            counter[0] += 3
            v = _parabola_vertex(best_x - h, f0, best_x, f1, best_x + h, f2)
            if v is not None and left <= v <= right:
                r = abs(amp(v))
                counter[0] += 1
                if r < best:
                    best_x, best = v, r
    return NullResult(best_x, best, best < tol, counter[0])


def curvature_at(objective: Callable[[float], float], param0: float, step: float) -> float:
    """Central second difference (f(x+h) - 2 f(x) + f(x-h)) / h^2."""
    if not step > 0:
        raise ValueError(f"step must be > 0, got {step}")
    f = lambda x: float(objective(x))  # noqa: E731
    return (f(param0 + step) - 2.0 * f(param0) + f(param0 - step)) / step**2
