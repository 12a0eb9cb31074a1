"""Tail diagnostics: Hill estimator, scale-ratio curves, dominated-variation check.

All verdicts are deterministic functions of the supplied grid and tolerances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateSampleError, DomainError, ParameterError

CONVERGENT = "CONVERGENT"
CONVERGENT_TO_ZERO = "CONVERGENT_TO_ZERO"
OSCILLATING = "OSCILLATING"
IN_D = "IN_D"
NOT_IN_D = "NOT_IN_D"


@dataclass(frozen=True)
class TailIndexEstimate:
    alpha: float
    k: int
    n: int

    @property
    def se(self) -> float:
        return self.alpha / math.sqrt(self.k)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "k": self.k, "n": self.n, "se": self.se}


def _positive_sorted(samples) -> np.ndarray:
    arr = np.asarray(samples, dtype=float).ravel()
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise DomainError("samples must be finite and non-empty")
    if np.any(arr <= 0):
        raise DomainError("Hill estimation needs strictly positive samples")
    return np.sort(arr)[::-1]


def _hill_sorted(desc: np.ndarray, k: int) -> TailIndexEstimate:
    n = desc.size
    if not (10 <= k <= n // 2):
        raise ParameterError(f"k must satisfy 10 <= k <= n/2, got k={k}, n={n}")
    # ratio first, then log: exact invariance under power-of-two rescaling
    total = float(np.sum(np.log(desc[:k] / desc[k])))
    if total <= 0.0:
        raise DegenerateSampleError("top order statistics are tied; the Hill sum is zero")
    return TailIndexEstimate(k / total, int(k), int(n))


def hill_estimator(samples, k: int) -> TailIndexEstimate:
    """``k / sum_{i <= k} log(X_(i) / X_(k+1))`` over the descending order statistics."""
    return _hill_sorted(_positive_sorted(samples), int(k))


def hill_plot(samples, ks: Sequence[int]) -> list[TailIndexEstimate]:
    """Hill estimates over a sweep of ``k`` (sorting once)."""
    desc = _positive_sorted(samples)
    return [_hill_sorted(desc, int(k)) for k in ks]


def empirical_tail(samples) -> Callable:
    """Right-continuous empirical tail ``#{Z > x} / n``."""
    ordered = np.sort(np.asarray(samples, dtype=float).ravel())
    n = ordered.size

    def tail(x):
        return (n - np.searchsorted(ordered, np.asarray(x, dtype=float), side="right")) / n

    return tail


@dataclass
class TailRatioResult:
    y: float
    x: np.ndarray
    ratio: np.ndarray
    amplitude: float
    limit: float
    verdict: str
    window: tuple[float, float]
    tolerance: float
    alpha_hat: float | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def regularly_varying(self) -> bool:
        return self.verdict == CONVERGENT

    def rows(self):
        for x, r in zip(self.x, self.ratio):
            yield (float(x), float(r))

    def to_dict(self) -> dict:
        return {"y": self.y, "verdict": self.verdict, "amplitude": self.amplitude,
                "limit": self.limit, "alpha_hat": self.alpha_hat,
                "window": list(self.window), "tolerance": self.tolerance,
                "regularly_varying": self.regularly_varying, "warnings": self.warnings}


def _as_tail(tail):
    if callable(tail):
        return tail, False
    return empirical_tail(tail), True


def _check_grid(x_grid) -> np.ndarray:
    xs = np.asarray(x_grid, dtype=float)
    if xs.ndim != 1 or xs.size < 2:
        raise ParameterError("x grid needs at least two points")
    if np.any(np.diff(xs) <= 0):
        raise ParameterError("x grid must be strictly increasing")
    return xs


def tail_ratio_diagnostic(tail, y: float, x_grid: Sequence[float], *, tol: float = 0.01,
                          window: tuple[float, float] | None = None) -> TailRatioResult:
    """Curve ``r(x) = tail(x y) / tail(x)`` and a regular-variation verdict.

    ``tail`` is a callable or a sample (empirical tail).  The oscillation
    amplitude is ``max r - min r`` over ``window``, by default the last decade
    of the grid.  Below ``tol`` the curve counts as convergent; a limit below
    ``tol`` is reported as convergence to zero, i.e. rapid (not regular)
    variation.
    """
    if not y > 0:
        raise DomainError("scale y must be positive")
    fn, empirical = _as_tail(tail)
    xs = _check_grid(x_grid)
    num = np.array([float(fn(x * y)) for x in xs])
    den = np.array([float(fn(x)) for x in xs])
    warnings = []
    usable = (den > 0) & (num > 0) if empirical else den > 0
    if not np.all(usable):
        cut = int(np.argmin(usable))
        warnings.append(f"tail reaches 0 on the grid; truncated at x={xs[cut]:g}")
        xs, num, den = xs[:cut], num[:cut], den[:cut]
        if xs.size < 2:
            raise DomainError("tail is zero on almost the whole grid")
    ratio = num / den
    if window is None:
        window = (xs[-1] / 10.0, xs[-1])
    sel = (xs >= window[0]) & (xs <= window[1])
    if not np.any(sel):
        raise ParameterError(f"window {window} contains no grid points")
    seg = ratio[sel]
    amplitude = float(seg.max() - seg.min())
    limit = float(ratio[sel][-1])
    alpha_hat = None
    if amplitude <= tol:
        if limit <= tol:
            verdict = CONVERGENT_TO_ZERO
        else:
            verdict = CONVERGENT
            alpha_hat = -math.log(limit) / math.log(y) if y != 1 else None
    else:
        verdict = OSCILLATING
    return TailRatioResult(float(y), xs, ratio, amplitude, limit, verdict,
                           (float(window[0]), float(window[1])), float(tol), alpha_hat, warnings)


@dataclass
class DominatedVariationResult:
    y: float
    x: np.ndarray
    ratio: np.ndarray
    sup: float
    sup_previous_decade: float
    sup_last_decade: float
    verdict: str
    growth_tol: float

    def rows(self):
        for x, r in zip(self.x, self.ratio):
            yield (float(x), float(r))

    def to_dict(self) -> dict:
        return {"y": self.y, "sup": self.sup, "sup_previous_decade": self.sup_previous_decade,
                "sup_last_decade": self.sup_last_decade, "verdict": self.verdict,
                "growth_tol": self.growth_tol}


def dominated_variation_check(tail, y: float, x_grid: Sequence[float], *,
                              growth_tol: float = 0.05) -> DominatedVariationResult:
    """Estimate ``sup tail(x y) / tail(x)`` for ``0 < y < 1`` over the last two grid decades.

    The verdict is IN_D when the maximum over the last decade does not exceed
    the maximum over the decade before by more than the factor ``1 + growth_tol``.
    """
    if not 0 < y < 1:
        raise DomainError("y must lie in (0, 1)")
    fn, _ = _as_tail(tail)
    xs = _check_grid(x_grid)
    if xs[-1] / xs[0] < 100:
        raise ParameterError("x grid must span at least two decades")
    num = np.array([float(fn(x * y)) for x in xs])
    den = np.array([float(fn(x)) for x in xs])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.inf)
    top = xs[-1]
    last = ratio[xs >= top / 10.0]
    prev = ratio[(xs >= top / 100.0) & (xs < top / 10.0)]
    if prev.size == 0:
        raise ParameterError("no grid points in the second-to-last decade")
    s_last, s_prev = float(last.max()), float(prev.max())
    bounded = math.isfinite(s_last) and s_last <= (1.0 + growth_tol) * s_prev
    return DominatedVariationResult(float(y), xs, ratio, max(s_last, s_prev), s_prev, s_last,
                                    IN_D if bounded else NOT_IN_D, float(growth_tol))
