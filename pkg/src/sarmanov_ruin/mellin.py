"""Mellin transforms along vertical lines, non-vanishing scans and product tails.

``E[Y^(alpha + i beta)]`` is the characteristic function of ``log Y`` shifted
by the exponential tilt ``alpha``; its zeros on the line decide whether the
tail of ``X`` can be recovered from the tail of ``XY``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .dist import AtomMixture, ComplexMoment, Uniform01, UnivariateLaw, point_mass
from .errors import DivergentMomentError, DomainError, ParameterError
from .sarmanov import SarmanovModel

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def twisted_mellin(model: SarmanovModel, alpha: float, beta: float) -> ComplexMoment:
    """``E[Y^s] + theta d1 E[phi2(Y) Y^s]`` at ``s = alpha + i beta``.

    Uses the closed-form kernel moments where the kernel's reference law
    allows it; the result equals the fractional moment of ``twist(model)``.
    """
    s = complex(alpha, beta)
    base = model.G.fractional_moment(s)
    coef = model.theta * model.d1
    if coef == 0.0:
        return ComplexMoment(base.value, base.abserr, base.method)
    extra = model.kernel2.moment(model.G, s)
    return ComplexMoment(base.value + coef * extra, base.abserr, "kernel-moment")


def geometric_mellin_sum(G: UnivariateLaw, alpha: float, beta: float, n) -> complex:
    """``sum_{k < n} z^k`` with ``z = E[Y^(alpha + i beta)]``; ``n = inf`` gives ``1 / (1 - z)``."""
    z = G.fractional_moment(complex(alpha, beta)).value
    if n is None or (isinstance(n, float) and math.isinf(n)):
        if abs(z) >= 1.0:
            raise DivergentMomentError(f"|E[Y^s]| = {abs(z):.6g} >= 1, the series diverges")
        return 1.0 / (1.0 - z)
    n = int(n)
    if n < 1:
        raise ParameterError("n must be >= 1")
    total, term = 0j, 1 + 0j
    for _ in range(n):
        total += term
        term *= z
    return complex(total)


def law_transform(law: UnivariateLaw, alpha: float) -> Callable[[float], complex]:
    """``beta -> E[Y^(alpha + i beta)]`` for one law."""
    return lambda beta: law.fractional_moment(complex(alpha, beta)).value


def model_transform(model: SarmanovModel, alpha: float) -> Callable[[float], complex]:
    """``beta -> twisted_mellin(model, alpha, beta)``."""
    return lambda beta: twisted_mellin(model, alpha, beta).value


@dataclass
class MellinScanResult:
    alpha: float
    beta_max: float
    beta: np.ndarray
    values: np.ndarray
    zeros: list[tuple[float, float]]
    threshold: float
    refined: list[tuple[float, float]] = field(default_factory=list)

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def min_modulus(self) -> float:
        return float(self.modulus.min())

    @property
    def argmin_beta(self) -> float:
        return float(self.beta[int(np.argmin(self.modulus))])

    def rows(self):
        for b, v in zip(self.beta, self.values):
            yield (float(b), float(v.real), float(v.imag), float(abs(v)))

    def summary(self) -> dict:
        zeros = [{"beta": b, "modulus": m} for b, m in self.zeros]
        return {
            "alpha": self.alpha,
            "beta_max": self.beta_max,
            "grid_points": int(self.beta.size),
            "min_modulus": self.min_modulus,
            "argmin_beta": self.argmin_beta,
            "zero_threshold": self.threshold,
            "zeros": zeros,
            "verdict": "zeros: none (grid-relative)" if not zeros
            else f"zeros: {len(zeros)} found",
        }


def _golden_min(fn, a, b, tol, max_iter=300):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fn(d)
    return (c, fc) if fc < fd else (d, fd)


def _scan_grid(beta_max: float, resolution: int) -> np.ndarray:
    lin = np.linspace(0.0, beta_max, resolution)
    logs = np.geomspace(beta_max * 1e-4, beta_max, max(resolution // 10, 2))
    pos = np.unique(np.concatenate([lin, logs]))
    return np.concatenate([-pos[:0:-1], pos])


def scan_nonvanishing(transform: Callable[[float], complex], alpha: float,
                      beta_max: float | None = None, resolution: int = 2001, *,
                      zero_threshold: float = 1e-10, refine_tol: float = 1e-13) -> MellinScanResult:
    """Scan ``|transform(beta)|`` on a symmetric grid over ``[-beta_max, beta_max]``.

    Interior local minima are refined by golden-section search until the
    bracket is shorter than ``refine_tol`` (relative to ``max(1, |beta|)``);
    a refined minimum below ``zero_threshold`` is reported as a zero.  Zeros
    outside the scanned window are not detected, so the verdict is relative
    to the grid.
    """
    if beta_max is None:
        beta_max = 100.0 / alpha
    if not (beta_max > 0 and math.isfinite(beta_max)):
        raise DomainError("beta_max must be a positive finite number")
    if resolution < 3:
        raise ParameterError("resolution must be at least 3")
    grid = _scan_grid(float(beta_max), int(resolution))
    vals = np.array([complex(transform(float(b))) for b in grid])
    mods = np.abs(vals)

    refined = []
    for i in range(1, grid.size - 1):
        if mods[i] <= mods[i - 1] and mods[i] <= mods[i + 1] and (mods[i] < mods[i - 1] or mods[i] < mods[i + 1]):
            lo, hi = grid[i - 1], grid[i + 1]
            tol = refine_tol * max(1.0, abs(grid[i]))
            b, m = _golden_min(lambda t: abs(complex(transform(t))), lo, hi, tol)
            refined.append((float(b), float(m)))

    if refined:
        extra_b = np.array([b for b, _ in refined])
        extra_v = np.array([complex(transform(b)) for b in extra_b])
        order = np.argsort(np.concatenate([grid, extra_b]), kind="stable")
        grid = np.concatenate([grid, extra_b])[order]
        vals = np.concatenate([vals, extra_v])[order]
    zeros = [(b, m) for b, m in refined if m < zero_threshold]
    return MellinScanResult(float(alpha), float(beta_max), grid, vals, zeros,
                            float(zero_threshold), refined)


# --- product laws and multiplicative convolution -----------------------------------


class UniformProduct(UnivariateLaw):
    """Product of ``k`` independent Uniform(0, 1) variables (``-log`` is Gamma(k, 1))."""

    family = "UniformProduct"
    moment_strip = (-1.0, math.inf)

    def __init__(self, k: int):
        if k < 1:
            raise ParameterError("k must be >= 1")
        self.k = int(k)

    @property
    def params(self):
        return {"k": self.k}

    @property
    def support(self):
        return (0.0, 1.0)

    def _tail(self, x):
        with np.errstate(divide="ignore"):
            t = -np.log(np.clip(x, 1e-300, 1.0))
        return np.where(x <= 0, 1.0, np.where(x >= 1, 0.0, special.gammainc(self.k, t)))

    def _pdf(self, x):
        safe = np.clip(x, 1e-300, 1.0)
        dens = np.exp((self.k - 1) * np.log(-np.log(safe) + 0.0) - special.gammaln(self.k)) \
            if self.k > 1 else np.ones_like(safe)
        return np.where((x > 0) & (x < 1), dens, 0.0)

    def _ppf(self, p):
        return np.exp(-special.gammainccinv(self.k, np.asarray(p, dtype=float)))

    def _moment(self, s):
        return (1.0 / (s + 1.0)) ** self.k

    def _log_range(self):
        lo = -float(special.gammainccinv(self.k, 1e-16))
        return lo, 0.0


class ProductLaw(UnivariateLaw):
    """Law of ``A * B`` for independent nonnegative ``A`` and ``B``."""

    family = "ProductLaw"

    def __init__(self, first: UnivariateLaw, second: UnivariateLaw):
        self.first = first
        self.second = second
        lo = max(first.moment_strip[0], second.moment_strip[0])
        hi = min(first.moment_strip[1], second.moment_strip[1])
        self.moment_strip = (lo, hi)

    @property
    def params(self):
        return {"first": self.first.to_dict(), "second": self.second.to_dict()}

    @property
    def support(self):
        a, b = self.first.support, self.second.support
        return (a[0] * b[0], a[1] * b[1])

    def _points(self, x):
        pts = [x / loc for loc, _ in self.second.atoms() if loc > 0]
        lo = self.second.support[0]
        if lo > 0:
            pts.append(x / lo)
        return pts

    def _tail_scalar(self, x):
        if x < 0:
            return 1.0
        return self.first.expect(lambda a: float(self.second.tail(x / a)) if a > 0 else 0.0,
                                 points=self._points(x))

    def _tail(self, x):
        flat = np.atleast_1d(x)
        out = np.array([self._tail_scalar(float(v)) for v in flat.ravel()])
        return out.reshape(np.shape(x))

    def _pdf(self, x):
        def scalar(v):
            if v <= 0:
                return 0.0
            return self.first.expect(lambda a: float(self.second.pdf(v / a)) / a if a > 0 else 0.0,
                                     points=self._points(v))

        flat = np.atleast_1d(x)
        return np.array([scalar(float(v)) for v in flat.ravel()]).reshape(np.shape(x))

    def _has_density(self):
        return self.first._has_density() or self.second._has_density()

    def atoms(self):
        if self._has_density():
            return []
        return AtomMixture([(a * b, wa * wb) for a, wa in self.first.atoms()
                            for b, wb in self.second.atoms()]).atoms()

    def fractional_moment(self, s):
        s = complex(s)
        one = self.first.fractional_moment(s)
        two = self.second.fractional_moment(s)
        return ComplexMoment(one.value * two.value, one.abserr + two.abserr, "product")


def iid_product(G: UnivariateLaw, k: int) -> UnivariateLaw:
    """Law of ``Y_1 ... Y_k`` for i.i.d. ``Y_j ~ G`` (point mass at 1 when ``k = 0``)."""
    if k < 0:
        raise ParameterError("k must be >= 0")
    if k == 0:
        return point_mass(1.0)
    if k == 1:
        return G
    if isinstance(G, Uniform01):
        return UniformProduct(k)
    if not G._has_density():
        atoms = [(1.0, 1.0)]
        for _ in range(k):
            atoms = AtomMixture([(a * b, wa * wb) for a, wa in atoms for b, wb in G.atoms()]).atoms()
        return AtomMixture(atoms)
    law = G
    for _ in range(k - 1):
        law = ProductLaw(law, G)
    return law


class FiniteMeasure:
    """Nonnegative combination ``sum_k w_k law_k`` of laws (total mass need not be 1)."""

    def __init__(self, components: Sequence[tuple[float, UnivariateLaw]]):
        if any(w < 0 for w, _ in components):
            raise ParameterError("component weights must be nonnegative")
        self.components = [(float(w), law) for w, law in components]

    @property
    def total_mass(self) -> float:
        return sum(w for w, _ in self.components)

    def tail(self, x):
        return sum(w * law.tail(x) for w, law in self.components)

    def fractional_moment(self, s) -> complex:
        return sum(w * law.fractional_moment(s).value for w, law in self.components)


def discount_measure(G: UnivariateLaw, n: int) -> FiniteMeasure:
    """``sum_{k=1}^{n} law(Y_1 ... Y_{k-1})``, the measure pairing with one-step losses."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    return FiniteMeasure([(1.0, iid_product(G, k)) for k in range(n)])


def mult_convolution_tail(nu: UnivariateLaw, rho, x: float) -> float:
    """``integral of nu_bar(x / u) rho(du)``: the tail at ``x`` of ``nu`` convolved with ``rho``.

    ``rho`` is a law or a :class:`FiniteMeasure`.  Atoms are summed exactly and
    continuous parts integrated on the log scale.
    """
    if not (math.isfinite(x) and x > 0):
        raise DomainError(f"x must be positive and finite, got {x}")
    if isinstance(rho, FiniteMeasure):
        return float(sum(w * mult_convolution_tail(nu, law, x) for w, law in rho.components))
    pts = [x / loc for loc, _ in nu.atoms() if loc > 0]
    if nu.support[0] > 0:
        pts.append(x / nu.support[0])
    lower = getattr(nu, "lower", None)
    if lower:
        pts.append(x / lower)
    return rho.expect(lambda u: float(nu.tail(x / u)) if u > 0 else 0.0, points=pts)
