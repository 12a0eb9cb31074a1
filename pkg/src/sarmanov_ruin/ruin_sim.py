"""Discounted loss process ``S_n = sum_i X_i Y_1 ... Y_i`` and its ruin probabilities.

Monte Carlo estimates run through :mod:`.montecarlo`: every chunk draws the
pairs of step 1 for all its paths, then step 2, and so on.  Paths of
different horizons therefore share their first steps exactly (coupling), and
a one-step ruin run draws the same pairs as a product-tail run.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import montecarlo as mc
from .dist import UnivariateLaw
from .errors import (DivergentMomentError, DomainError, ModelValidationError, ParameterError,
                     SingularRatioError, TruncationError)
from .mellin import twisted_mellin
from .sarmanov import SarmanovModel, product_tail, sample_pairs, twist, validate

Z99 = 2.576


@dataclass(frozen=True)
class PathState:
    step: int
    discount: float
    partial_sum: float
    running_max: float


@dataclass(frozen=True)
class RuinEstimate:
    x: float
    horizon: int | str
    p_hat: float
    se: float
    N: int
    hits: int
    depth: int | None = None
    truncation_bound: float | None = None
    truncation_method: str | None = None

    @property
    def ci(self) -> tuple[float, float]:
        half = Z99 * self.se
        return (self.p_hat - half, self.p_hat + half)

    @classmethod
    def from_counts(cls, x, horizon, hits, N, **extra):
        p = float(hits) / N
        return cls(float(x), horizon, p, math.sqrt(p * (1.0 - p) / N), int(N), int(hits), **extra)

    def to_dict(self) -> dict:
        lo, hi = self.ci
        return {
            "x": self.x, "horizon": self.horizon, "p_hat": self.p_hat, "se": self.se,
            "ci_low": lo, "ci_high": hi, "N": self.N, "hits": self.hits,
            "depth": self.depth, "truncation_bound": self.truncation_bound,
            "truncation_method": self.truncation_method,
        }


def _require_valid(model: SarmanovModel) -> None:
    report = validate(model)
    if not report.ok:
        raise ModelValidationError(f"invalid Sarmanov model, failed checks: {report.failed}")


def _count_above(values: np.ndarray, xs: np.ndarray) -> np.ndarray:
    ordered = np.sort(values)
    return ordered.size - np.searchsorted(ordered, xs, side="right")


# --- path simulation ---------------------------------------------------------------------


def simulate_paths(model: SarmanovModel, n: int, rng: np.random.Generator, count: int):
    """``count`` coupled paths of length ``n``; returns ``(discount, partial_sum)`` of shape (count, n)."""
    if n < 1:
        raise ParameterError("horizon n must be >= 1")
    disc = np.ones(count)
    total = np.zeros(count)
    discounts = np.empty((count, n))
    sums = np.empty((count, n))
    for i in range(n):
        x, y = sample_pairs(model, rng, count)
        disc = disc * y
        total = total + x * disc
        discounts[:, i] = disc
        sums[:, i] = total
    return discounts, sums


def simulate_path(model: SarmanovModel, n: int, rng: np.random.Generator) -> list[PathState]:
    """One path of the recursion ``P_i = P_{i-1} Y_i``, ``S_i = S_{i-1} + X_i P_i``."""
    _require_valid(model)
    discounts, sums = simulate_paths(model, n, rng, 1)
    running = np.maximum.accumulate(sums[0])
    return [PathState(i + 1, float(discounts[0, i]), float(sums[0, i]), float(running[i]))
            for i in range(n)]


def _ruin_chunk(rng, m, model, xs, horizons):
    hmax = max(horizons)
    disc = np.ones(m)
    total = np.zeros(m)
    peak = np.zeros(m)
    counts = np.zeros((len(horizons), len(xs)), dtype=np.int64)
    nonneg = model.F.support[0] >= 0
    for step in range(1, hmax + 1):
        x, y = sample_pairs(model, rng, m)
        disc = disc * y
        total = total + x * disc
        peak = total if step == 1 else np.maximum(peak, total)
        for h_idx, h in enumerate(horizons):
            if h == step:
                if nonneg and not np.array_equal(peak, total):
                    raise AssertionError("running maximum differs from S_n for nonnegative losses")
                counts[h_idx] = _count_above(peak, xs)
    return counts


def _product_chunk(rng, m, model, xs, independent):
    if independent:
        y = twist(model).sample(rng, m)
        x = model.F.sample(rng, m)
    else:
        x, y = sample_pairs(model, rng, m)
    return _count_above(x * y, xs)


def _grid(xs) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(xs, dtype=float))
    if arr.size == 0:
        raise ParameterError("threshold grid is empty")
    if not np.all(np.isfinite(arr)):
        raise DomainError("thresholds must be finite")
    return arr


def ruin_curve(model: SarmanovModel, xs: Sequence[float], horizons: Sequence[int], N: int, seed: int, *,
               chunk_size: int = mc.DEFAULT_CHUNK, workers: int = 1) -> list[RuinEstimate]:
    """Finite-horizon estimates on a threshold grid and several horizons from one set of paths."""
    _require_valid(model)
    xs = _grid(xs)
    horizons = sorted({int(h) for h in horizons})
    if horizons[0] < 1:
        raise ParameterError("horizons must be >= 1")
    counts = mc.merge_counts(mc.run_chunks(_ruin_chunk, N, seed, args=(model, xs, horizons),
                                           chunk_size=chunk_size, workers=workers))
    return [RuinEstimate.from_counts(x, h, counts[hi, xi], N)
            for hi, h in enumerate(horizons) for xi, x in enumerate(xs)]


def estimate_finite_ruin(model: SarmanovModel, x: float, n: int, N: int, seed: int, *,
                         chunk_size: int = mc.DEFAULT_CHUNK, workers: int = 1) -> RuinEstimate:
    """``Psi(x, n) = P[max_{k <= n} S_k > x]`` by plain Monte Carlo."""
    if N < 1000:
        raise ParameterError("N must be at least 1000")
    return ruin_curve(model, [x], [n], N, seed, chunk_size=chunk_size, workers=workers)[0]


def estimate_product_tail(model: SarmanovModel, xs: Sequence[float], N: int, seed: int, *,
                          independent: bool = False, chunk_size: int = mc.DEFAULT_CHUNK,
                          workers: int = 1) -> list[RuinEstimate]:
    """``P[XY > x]`` for the dependent pair, or for ``X* Y*_theta`` when ``independent``.

    The twisted run uses its own stream so both estimates are independent.
    """
    _require_valid(model)
    xs = _grid(xs)
    stream = mc.STREAM_TWISTED if independent else mc.STREAM_PAIRS
    counts = mc.merge_counts(mc.run_chunks(_product_chunk, N, seed, args=(model, xs, independent),
                                           stream=stream, chunk_size=chunk_size, workers=workers))
    return [RuinEstimate.from_counts(x, 1, c, N) for x, c in zip(xs, counts)]


# --- infinite horizon -------------------------------------------------------------------


def _real_moment(law: UnivariateLaw, s: float) -> float:
    return law.fractional_moment(complex(s)).value.real


def _pair_moment(model: SarmanovModel, g: float) -> float:
    """``E[(XY)^g]`` under the Sarmanov law."""
    ex = _real_moment(model.F, g)
    ey = _real_moment(model.G, g)
    if model.theta == 0.0:
        return ex * ey
    kx = model.kernel1.moment(model.F, g).real
    ky = model.kernel2.moment(model.G, g).real
    return ex * ey + model.theta * kx * ky


@dataclass(frozen=True)
class TruncationPlan:
    depth: int
    bound: float
    method: str
    order: float
    ratio: float


def truncation_depth(model: SarmanovModel, x: float, eps: float, max_depth: int = 10_000) -> TruncationPlan:
    """Smallest depth ``m`` whose Markov bound on the neglected tail sum is below ``eps``.

    First-moment bound: ``E[sum_{i > m} X_i Y_1...Y_i] / x = E[XY] E[Y]^m / ((1 - E[Y]) x)``.
    When ``E[Y] >= 1`` or ``E[X] = inf`` the same bound is used with ``(.)^g``
    for the ``g < 1`` giving the smallest depth (``t -> t^g`` is subadditive).
    """
    if not (x > 0 and eps > 0):
        raise DomainError("x and eps must be positive")
    orders = [1.0] + [round(g, 2) for g in np.arange(0.95, 0.0, -0.05)]
    best = None
    for g in orders:
        try:
            ratio = _real_moment(model.G, g)
            mean = _pair_moment(model, g)
        except DivergentMomentError:
            continue
        if not (ratio < 1.0 and math.isfinite(mean)):
            continue
        scale = mean / ((1.0 - ratio) * x ** g)
        if scale < eps:
            depth = 1
        elif ratio <= 0.0:
            depth = 1
        else:
            depth = max(1, math.ceil(math.log(eps / scale) / math.log(ratio)))
            if scale * ratio ** depth >= eps:
                depth += 1
        if depth > max_depth:
            continue
        plan = TruncationPlan(depth, scale * ratio ** depth,
                              "first-moment Markov" if g == 1.0 else f"order-{g:g} Markov", g, ratio)
        if g == 1.0:
            return plan
        if best is None or plan.depth < best.depth:
            best = plan
    if best is None:
        raise TruncationError(
            "no moment order g in (0, 1] has E[Y^g] < 1 with E[(XY)^g] finite; "
            "the infinite-horizon sum cannot be truncated with a Markov bound")
    return best


def estimate_infinite_ruin(model: SarmanovModel, x: float, N: int, eps_trunc: float, seed: int, *,
                           chunk_size: int = mc.DEFAULT_CHUNK, workers: int = 1) -> RuinEstimate:
    """``Psi(x) = P[sup_n S_n > x]`` estimated by ``P[S_m > x]`` at the truncation depth ``m``."""
    plan = truncation_depth(model, x, eps_trunc)
    est = ruin_curve(model, [x], [plan.depth], N, seed, chunk_size=chunk_size, workers=workers)[0]
    return RuinEstimate(est.x, "inf", est.p_hat, est.se, est.N, est.hits, plan.depth, plan.bound,
                        plan.method)


# --- asymptotic constants ------------------------------------------------------------------


def asymptotic_constant_product(model: SarmanovModel, alpha: float) -> float:
    """``E[Y^a] + theta d1 E[phi2(Y) Y^a]``, the limit of ``P[XY > x] / F_bar(x)``."""
    return twisted_mellin(model, alpha, 0.0).value.real


def _alpha_moment(model: SarmanovModel, alpha: float) -> float:
    return _real_moment(model.G, alpha)


def asymptotic_constant_finite(model: SarmanovModel, alpha: float, n: int) -> float:
    """``(1 - m^n) / (1 - m) * C`` with ``m = E[Y^a]``; ``m = 1`` is rejected."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    m = _alpha_moment(model, alpha)
    if m == 1.0:
        raise SingularRatioError("E[Y^alpha] = 1: the (1 - m) denominator vanishes")
    return (1.0 - m ** n) / (1.0 - m) * asymptotic_constant_product(model, alpha)


def asymptotic_constant_infinite(model: SarmanovModel, alpha: float) -> float:
    """``C / (1 - E[Y^a])``; requires ``E[Y^a] < 1``."""
    m = _alpha_moment(model, alpha)
    if m == 1.0:
        raise SingularRatioError("E[Y^alpha] = 1: the (1 - m) denominator vanishes")
    if m > 1.0:
        raise DivergentMomentError(f"E[Y^alpha] = {m:.6g} > 1: the geometric series diverges")
    return asymptotic_constant_product(model, alpha) / (1.0 - m)


# --- joint-tail and H-tilde diagnostics -----------------------------------------------------


@dataclass(frozen=True)
class NegligibilityRow:
    x: float
    N: int
    single_hits: int
    joint_hits: int

    @property
    def p_single(self) -> float:
        return self.single_hits / self.N

    @property
    def p_joint(self) -> float:
        return self.joint_hits / self.N

    @property
    def ratio(self) -> float:
        return self.joint_hits / self.single_hits if self.single_hits else math.nan

    @property
    def ratio_se(self) -> float:
        if not self.single_hits:
            return math.nan
        r = self.ratio
        return math.sqrt(r * (1.0 - r) / self.single_hits)

    @property
    def ci(self) -> tuple[float, float]:
        return (self.ratio - Z99 * self.ratio_se, self.ratio + Z99 * self.ratio_se)

    def to_dict(self) -> dict:
        lo, hi = self.ci
        return {"x": self.x, "N": self.N, "single_hits": self.single_hits,
                "joint_hits": self.joint_hits, "p_single": self.p_single,
                "p_joint": self.p_joint, "ratio": self.ratio, "ratio_se": self.ratio_se,
                "ci_low": lo, "ci_high": hi}


def _joint_chunk(rng, m, model, xs):
    x1, y1 = sample_pairs(model, rng, m)
    x2, y2 = sample_pairs(model, rng, m)
    one = x1 * y1
    two = x2 * y2 * y1
    return np.stack([_count_above(one, xs), _count_above(np.minimum(one, two), xs)])


def joint_tail_negligibility(model: SarmanovModel, xs: Sequence[float], N: int, seed: int, *,
                             chunk_size: int = mc.DEFAULT_CHUNK, workers: int = 1) -> list[NegligibilityRow]:
    """MC ratio ``P[X1 Y1 > x, X2 Y2 Y1 > x] / P[X1 Y1 > x]`` on a threshold grid."""
    _require_valid(model)
    xs = _grid(xs)
    counts = mc.merge_counts(mc.run_chunks(_joint_chunk, N, seed, args=(model, xs),
                                           chunk_size=chunk_size, workers=workers))
    return [NegligibilityRow(float(x), int(N), int(counts[0, i]), int(counts[1, i]))
            for i, x in enumerate(xs)]


@dataclass
class HtildeReport:
    v: np.ndarray
    htilde: np.ndarray
    integral: float
    finite: bool
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"v": self.v.tolist(), "htilde": self.htilde.tolist(), "integral": self.integral,
                "finite": self.finite, "notes": self.notes}


def htilde_integrability_check(model: SarmanovModel, v_grid: Sequence[float], x_grid: Sequence[float],
                               tail: Callable[[float], float] | None = None) -> HtildeReport:
    """``H(v) = sup_x Hbar(x / v) / Hbar(x)`` on the grids and ``integral of H dG``.

    ``Hbar`` defaults to the exact dependent product tail ``P[XY > x]``.
    Between grid points ``H`` is interpolated linearly in ``log v``; outside
    the grid it is held at the end values, which is noted when ``G`` puts
    mass there.
    """
    v = np.asarray(v_grid, dtype=float)
    xg = np.asarray(x_grid, dtype=float)
    if np.any(v <= 0) or np.any(xg <= 0):
        raise DomainError("v and x grids must be positive")
    if tail is None:
        def tail(t):
            return product_tail(model, t)
    cache: dict[float, float] = {}

    def hbar(t):
        if t not in cache:
            cache[t] = float(tail(t))
        return cache[t]

    values = []
    for vv in v:
        ratios = [hbar(x / vv) / hbar(x) for x in xg if hbar(x) > 0]
        values.append(max(ratios) if ratios else math.inf)
    values = np.array(values)
    notes = []
    lo, hi = model.G.support
    if lo < v.min() and float(model.G.cdf(v.min())) > 0:
        notes.append("G has mass below the v grid; H held at its first value there")
    if hi > v.max() and float(model.G.tail(v.max())) > 0:
        notes.append("G has mass above the v grid; H held at its last value there")
    if not np.all(np.isfinite(values)):
        return HtildeReport(v, values, math.inf, False, notes + ["H is infinite on the grid"])
    logv = np.log(v)

    def interp(y):
        return float(np.interp(math.log(y), logv, values)) if y > 0 else float(values[0])

    integral = model.G.expect(interp, points=list(v))
    finite = math.isfinite(integral) and integral < 1e12
    if not finite:
        notes.append("integral blows up")
    return HtildeReport(v, values, float(integral), finite, notes)
