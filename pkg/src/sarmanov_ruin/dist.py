"""Univariate laws with exact tails, quantiles, samplers and complex moments.

Every law lives on the real line but all families shipped here are supported
on ``[0, inf)``.  Tails are right-continuous, ``tail(x) = P[Z > x]``; the
quantile is the left-continuous generalized inverse of the CDF.  Laws are
immutable after construction and carry no random state: sampling takes an
explicit :class:`numpy.random.Generator`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .errors import DivergentMomentError, DomainError, ParameterError

# quantile levels bounding the quadrature range of unbounded laws
_QUAD_EPS = 1e-15

_FAMILIES: dict[str, type] = {}


def register_family(cls):
    """Class decorator adding ``cls`` to the JSON family registry."""
    _FAMILIES[cls.family] = cls
    return cls


@dataclass(frozen=True)
class ComplexMoment:
    """Value of ``E[Z^s]`` (or a weighted variant) with an absolute error estimate."""

    value: complex
    abserr: float = 0.0
    method: str = "closed-form"

    @property
    def modulus(self) -> float:
        return abs(self.value)

    def to_dict(self) -> dict:
        return {
            "re": self.value.real,
            "im": self.value.imag,
            "modulus": abs(self.value),
            "abserr": self.abserr,
            "method": self.method,
        }


def _as_float_array(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return arr


def _out(arr, like):
    if np.ndim(like) == 0:
        return float(arr)
    return arr


def _bisect_vec(fn, lo, hi, iters=80):
    """Vectorized bisection for an increasing ``fn`` with fn(lo) <= 0 <= fn(hi)."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pos = fn(mid) >= 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
    return hi


def mellin_quad(weight: Callable[[float], float], s: complex, t_lo: float, t_hi: float,
                points: Sequence[float] = ()) -> tuple[complex, float]:
    """Integrate ``y**s * weight(y)`` over ``[exp(t_lo), exp(t_hi)]`` on the log scale.

    The oscillating factor ``exp(i*Im(s)*t)`` is handled by splitting the range at
    its half-periods so every piece is integrated without sign changes from the
    oscillation.  Extra breakpoints (kinks/jumps of ``weight``) go in ``points``
    as values of ``y``.
    """
    s = complex(s)
    sigma, beta = s.real, s.imag
    if t_hi <= t_lo:
        return 0j, 0.0
    cuts = {t_lo, t_hi}
    if beta != 0.0:
        step = math.pi / abs(beta)
        k0 = math.ceil(t_lo / step)
        k1 = math.floor(t_hi / step)
        cuts.update(k * step for k in range(k0, k1 + 1))
    for y in points:
        if y > 0:
            t = math.log(y)
            if t_lo < t < t_hi:
                cuts.add(t)
    edges = sorted(cuts)

    def re_part(t):
        return math.exp((sigma + 1.0) * t) * weight(math.exp(t)) * math.cos(beta * t)

    def im_part(t):
        return math.exp((sigma + 1.0) * t) * weight(math.exp(t)) * math.sin(beta * t)

    total = 0j
    err = 0.0
    # the tolerances sit at machine precision, so QUADPACK's round-off notice is
    # expected; the returned error estimate carries the information instead
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(edges[:-1], edges[1:]):
            if b - a <= 0:
                continue
            r, er = integrate.quad(re_part, a, b, epsabs=1e-16, epsrel=1e-13, limit=200)
            total += r
            err += er
            if beta != 0.0:
                i, ei = integrate.quad(im_part, a, b, epsabs=1e-16, epsrel=1e-13, limit=200)
                total += 1j * i
                err += ei
    return total, err


class UnivariateLaw:
    """Base class for a distribution on the real line.

    Subclasses implement ``_tail`` and ``_ppf`` on float arrays.  Continuous laws
    also implement ``_pdf``; atomic mass is exposed by :meth:`atoms`.
    """

    family = ""
    #: open interval of real parts ``Re(s)`` for which ``E[Z^s]`` is finite
    moment_strip: tuple[float, float] = (-math.inf, math.inf)

    # --- evaluation -----------------------------------------------------------------
    def tail(self, x):
        """``P[Z > x]``; raises :class:`DomainError` for NaN or infinite ``x``."""
        arr = _as_float_array(x)
        return _out(np.clip(self._tail(arr), 0.0, 1.0), x)

    def cdf(self, x):
        arr = _as_float_array(x)
        return _out(1.0 - np.clip(self._tail(arr), 0.0, 1.0), x)

    def mid_cdf(self, x):
        """``P[Z < x] + P[Z = x] / 2``; equals the CDF wherever there is no atom."""
        arr = _as_float_array(x)
        val = 1.0 - np.clip(self._tail(arr), 0.0, 1.0) - 0.5 * self._atom_mass(arr)
        return _out(val, x)

    def pdf(self, x):
        arr = _as_float_array(x)
        return _out(self._pdf(arr), x)

    def quantile(self, p):
        """Left-continuous generalized inverse of the CDF for ``p`` in (0, 1)."""
        arr = np.asarray(p, dtype=float)
        if not np.all((arr > 0.0) & (arr < 1.0)):
            raise DomainError(f"quantile level must lie in (0, 1), got {p!r}")
        return _out(self._ppf(arr), p)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """``n`` i.i.d. draws; inversion by default."""
        if n < 1:
            raise DomainError("sample size must be >= 1")
        return self._ppf(rng.random(n))

    # --- structure --------------------------------------------------------------------
    def atoms(self) -> list[tuple[float, float]]:
        """Atom locations and masses, sorted by location."""
        return []

    def _atom_mass(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros_like(x, dtype=float)
        for loc, mass in self.atoms():
            out = out + np.where(x == loc, mass, 0.0)
        return out

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def in_support(self, x: float) -> bool:
        lo, hi = self.support
        return lo <= x <= hi

    def _pdf(self, x):
        raise NotImplementedError(f"{self.family} has no density")

    def _tail(self, x):
        raise NotImplementedError

    def _ppf(self, p):
        raise NotImplementedError

    # --- moments --------------------------------------------------------------------
    def _check_strip(self, s: complex) -> None:
        lo, hi = self.moment_strip
        if not (lo < s.real < hi):
            raise DivergentMomentError(
                f"E[Z^s] diverges for Re(s)={s.real:g} outside ({lo:g}, {hi:g}) for {self.family}")

    def fractional_moment(self, s) -> ComplexMoment:
        """``E[Z^s]`` for complex ``s`` inside the moment strip."""
        s = complex(s)
        self._check_strip(s)
        closed = self._moment(s)
        if closed is not None:
            return ComplexMoment(complex(closed))
        return self._quad_moment(s)

    def _moment(self, s: complex):
        return None

    def _log_range(self) -> tuple[float, float]:
        lo, hi = self.support
        y_lo = lo if lo > 0 else float(self._ppf(np.array(_QUAD_EPS)))
        y_hi = hi if math.isfinite(hi) else float(self._ppf(np.array(1.0 - _QUAD_EPS)))
        return math.log(max(y_lo, 1e-300)), math.log(y_hi)

    def _moment_log_range(self, s: complex) -> tuple[float, float]:
        """Log-scale integration range for ``E[Z^s]``.

        Near the edge of the moment strip the integrand decays slowly, so the
        quantile-based range is widened until the neglected power tail is
        below about ``exp(-37)``.
        """
        t_lo, t_hi = self._log_range()
        lo, hi = self.moment_strip
        if math.isinf(self.support[1]) and math.isfinite(hi):
            t_hi = max(t_hi, min(700.0, 37.0 / (hi - s.real)))
        if self.support[0] <= 0 and math.isfinite(lo):
            t_lo = min(t_lo, max(-700.0, -37.0 / (s.real - lo)))
        return t_lo, t_hi

    def _quad_moment(self, s: complex, lower: float | None = None) -> ComplexMoment:
        """Quadrature of ``E[Z^s 1{Z > lower}]`` over the continuous part."""
        t_lo, t_hi = self._moment_log_range(s)
        if lower is not None and lower > 0:
            t_lo = max(t_lo, math.log(lower))
        val, err = mellin_quad(lambda y: float(self._pdf(np.array(y))), s, t_lo, t_hi)
        val += sum(w * loc ** s for loc, w in self.atoms() if loc > 0 and (lower is None or loc > lower))
        return ComplexMoment(val, err, "quadrature")

    def upper_moment(self, s, lower: float) -> complex:
        """``E[Z^s 1{Z > lower}]``."""
        s = complex(s)
        self._check_strip(s)
        closed = self._upper_moment(s, lower)
        if closed is not None:
            return complex(closed)
        return self._quad_moment(s, lower).value

    def _upper_moment(self, s: complex, lower: float):
        return None

    def partial_expect(self, func: Callable, lower: float | None = None,
                       points: Sequence[float] = ()) -> float:
        """``E[func(Z) 1{Z > lower}]`` by quadrature plus exact atom sums."""
        total = sum(w * float(func(loc)) for loc, w in self.atoms()
                    if lower is None or loc > lower)
        if self._has_density():
            t_lo, t_hi = self._log_range()
            if lower is not None and lower > 0:
                t_lo = max(t_lo, math.log(lower))
            val, _ = mellin_quad(lambda y: float(func(y)) * float(self._pdf(np.array(y))),
                                 0.0, t_lo, t_hi, points)
            total += val.real
        return float(total)

    def expect(self, func: Callable, points: Sequence[float] = ()) -> float:
        return self.partial_expect(func, None, points)

    def _has_density(self) -> bool:
        return True

    # --- serialization ----------------------------------------------------------------
    @property
    def params(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"family": self.family, "params": self.params}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}({args})"


@register_family
class Pareto(UnivariateLaw):
    """Pareto law ``P[Z > x] = (x / xm)^(-alpha)`` for ``x >= xm``."""

    family = "Pareto"

    def __init__(self, alpha: float, xm: float = 1.0):
        if not (alpha > 0 and xm > 0):
            raise ParameterError("Pareto needs alpha > 0 and xm > 0")
        self.alpha = float(alpha)
        self.xm = float(xm)
        self.moment_strip = (-math.inf, self.alpha)

    @property
    def params(self):
        return {"alpha": self.alpha, "xm": self.xm}

    @property
    def support(self):
        return (self.xm, math.inf)

    def _tail(self, x):
        with np.errstate(divide="ignore"):
            return np.where(x < self.xm, 1.0, (np.maximum(x, self.xm) / self.xm) ** -self.alpha)

    def _ppf(self, p):
        return self.xm * (1.0 - p) ** (-1.0 / self.alpha)

    def _pdf(self, x):
        safe = np.maximum(x, self.xm)
        return np.where(x < self.xm, 0.0, self.alpha * self.xm ** self.alpha * safe ** (-self.alpha - 1.0))

    def _moment(self, s):
        return self.alpha * self.xm ** s / (self.alpha - s)

    def _upper_moment(self, s, lower):
        lower = max(lower, self.xm)
        return self.alpha * self.xm ** self.alpha * lower ** (s - self.alpha) / (self.alpha - s)


@register_family
class Uniform01(UnivariateLaw):
    """Uniform law on (0, 1)."""

    family = "Uniform01"
    moment_strip = (-1.0, math.inf)

    @property
    def params(self):
        return {}

    @property
    def support(self):
        return (0.0, 1.0)

    def _tail(self, x):
        return np.clip(1.0 - x, 0.0, 1.0)

    def _ppf(self, p):
        return np.asarray(p, dtype=float)

    def _pdf(self, x):
        return np.where((x > 0) & (x < 1), 1.0, 0.0)

    def _moment(self, s):
        return 1.0 / (s + 1.0)

    def _upper_moment(self, s, lower):
        lower = min(max(lower, 0.0), 1.0)
        return (1.0 - lower ** (s + 1.0)) / (s + 1.0)

    def _log_range(self):
        return math.log(_QUAD_EPS), 0.0


@register_family
class LogNormal(UnivariateLaw):
    """Log-normal law; lighter than any power tail, so not dominatedly varying."""

    family = "LogNormal"

    def __init__(self, mu: float = 0.0, sigma: float = 1.0):
        if not sigma > 0:
            raise ParameterError("LogNormal needs sigma > 0")
        self.mu = float(mu)
        self.sigma = float(sigma)

    @property
    def params(self):
        return {"mu": self.mu, "sigma": self.sigma}

    @property
    def support(self):
        return (0.0, math.inf)

    def _tail(self, x):
        with np.errstate(divide="ignore"):
            z = (np.log(np.maximum(x, 1e-300)) - self.mu) / self.sigma
        return np.where(x <= 0, 1.0, special.ndtr(-z))

    def _ppf(self, p):
        return np.exp(self.mu + self.sigma * special.ndtri(p))

    def _pdf(self, x):
        safe = np.maximum(x, 1e-300)
        z = (np.log(safe) - self.mu) / self.sigma
        return np.where(x <= 0, 0.0, np.exp(-0.5 * z * z) / (safe * self.sigma * math.sqrt(2 * math.pi)))

    def _moment(self, s):
        return np.exp(s * self.mu + 0.5 * s * s * self.sigma ** 2)


@register_family
class OscillatingPareto(UnivariateLaw):
    """Pareto(alpha, 1) density modulated by ``1 + a cos(b0 log x) + b sin(b0 log x)``.

    The modulated density has mass ``1 + alpha (a alpha + b b0) / (alpha^2 + b0^2)``
    rather than one, so it is divided by that constant.  The tail is computed
    from the antiderivative of ``x^(-alpha-1+i b0)`` and oscillates in ``log x``
    with period ``2 pi / b0``: it is dominatedly but not regularly varying.
    """

    family = "OscillatingPareto"

    def __init__(self, alpha: float, beta0: float, a: float, b: float):
        if not alpha > 0:
            raise ParameterError("alpha must be positive")
        if beta0 == 0:
            raise ParameterError("beta0 must be nonzero")
        if not (a > 0 and b > 0 and a + b <= 1):
            raise ParameterError(f"need a > 0, b > 0, a + b <= 1; got a={a}, b={b}")
        self.alpha = float(alpha)
        self.beta0 = float(beta0)
        self.a = float(a)
        self.b = float(b)
        self.moment_strip = (-math.inf, self.alpha)
        # coefficient of x^(-alpha + i beta0) in the unnormalized tail
        self._osc = (self.a - 1j * self.b) * self.alpha / (self.alpha - 1j * self.beta0)
        self.mass = 1.0 + self._osc.real

    @property
    def params(self):
        return {"alpha": self.alpha, "beta0": self.beta0, "a": self.a, "b": self.b}

    @property
    def support(self):
        return (1.0, math.inf)

    def modulation(self, x):
        """The density multiplier ``g(x)`` (before normalization)."""
        lx = np.log(np.asarray(x, dtype=float))
        return 1.0 + self.a * np.cos(self.beta0 * lx) + self.b * np.sin(self.beta0 * lx)

    def _tail(self, x):
        safe = np.maximum(x, 1.0)
        lx = np.log(safe)
        osc = (self._osc * np.exp(1j * self.beta0 * lx)).real
        return np.where(x < 1.0, 1.0, safe ** -self.alpha * (1.0 + osc) / self.mass)

    def _pdf(self, x):
        safe = np.maximum(x, 1.0)
        dens = self.modulation(safe) * self.alpha * safe ** (-self.alpha - 1.0) / self.mass
        return np.where(x < 1.0, 0.0, dens)

    def _ppf(self, p):
        p = np.asarray(p, dtype=float)
        target = np.log1p(-p)
        amp = abs(self._osc)
        t_lo = np.maximum(0.0, (math.log((1 - amp) / self.mass) - target) / self.alpha) - 1e-9
        t_hi = (math.log((1 + amp) / self.mass) - target) / self.alpha + 1e-9
        t_lo = np.maximum(t_lo, 0.0)

        def f(t):
            return target - np.log(self._tail(np.exp(t)))

        t = _bisect_vec(f, t_lo, np.maximum(t_hi, t_lo), iters=90)
        return np.where(p <= 0, 1.0, np.exp(t))

    def sample(self, rng, n):
        """Rejection against Pareto(alpha, 1) with acceptance ``g(x) / (1 + a + b)``."""
        if n < 1:
            raise DomainError("sample size must be >= 1")
        out = np.empty(n)
        pending = np.arange(n)
        ceiling = 1.0 + self.a + self.b
        while pending.size:
            prop = (1.0 - rng.random(pending.size)) ** (-1.0 / self.alpha)
            accept = rng.random(pending.size) * ceiling <= self.modulation(prop)
            out[pending[accept]] = prop[accept]
            pending = pending[~accept]
        return out

    def _power_integral(self, e, lower):
        # integral over (lower, inf) of alpha * x^(e - alpha - 1) dx, lower >= 1
        return self.alpha * np.exp((e - self.alpha) * math.log(lower)) / (self.alpha - e)

    def _upper_moment(self, s, lower):
        lower = max(lower, 1.0)
        ib = 1j * self.beta0
        plus = self._power_integral(s + ib, lower)
        minus = self._power_integral(s - ib, lower)
        val = (self._power_integral(s, lower) + 0.5 * self.a * (plus + minus)
               + self.b / 2j * (plus - minus))
        return val / self.mass

    def _moment(self, s):
        return self._upper_moment(s, 1.0)


@register_family
class AtomMixture(UnivariateLaw):
    """Finitely many atoms plus an optional continuous law conditioned above ``lower``.

    The continuous component carries the mass left over by the atoms.  With no
    atoms this is the conditional law of ``continuous`` given ``Z > lower``.
    """

    family = "AtomMixture"

    def __init__(self, atoms: Sequence[tuple[float, float]] = (),
                 continuous: UnivariateLaw | None = None, lower: float | None = None):
        pairs = sorted((float(loc), float(w)) for loc, w in atoms)
        if any(w < 0 or not math.isfinite(loc) for loc, w in pairs):
            raise ParameterError("atom weights must be nonnegative and locations finite")
        pairs = [(loc, w) for loc, w in pairs if w > 0]
        merged: list[tuple[float, float]] = []
        for loc, w in pairs:
            if merged and merged[-1][0] == loc:
                merged[-1] = (loc, merged[-1][1] + w)
            else:
                merged.append((loc, w))
        total = sum(w for _, w in merged)
        if continuous is None:
            if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-12):
                raise ParameterError(f"atom weights sum to {total}, expected 1")
            merged = [(loc, w / total) for loc, w in merged]
            total = 1.0
        elif total > 1.0 + 1e-12:
            raise ParameterError("atom weights exceed 1")
        self._atoms = merged
        self.continuous = continuous
        self.lower = None if lower is None else float(lower)
        self.cont_weight = 0.0 if continuous is None else max(0.0, 1.0 - total)
        if continuous is not None and self.cont_weight > 0:
            lo, hi = continuous.moment_strip
            if lower is not None and lower > 0:
                lo = -math.inf
            self.moment_strip = (lo, hi)
        if continuous is not None:
            self._cont_norm = 1.0 if self.lower is None else float(continuous.tail(self.lower))
            if self._cont_norm <= 0:
                raise ParameterError("continuous part has no mass above lower")

    @property
    def params(self):
        return {
            "atoms": [[loc, w] for loc, w in self._atoms],
            "continuous": None if self.continuous is None else self.continuous.to_dict(),
            "lower": self.lower,
        }

    def atoms(self):
        out = list(self._atoms)
        if self.continuous is not None:
            for loc, m in self.continuous.atoms():
                if self.lower is None or loc > self.lower:
                    out.append((loc, self.cont_weight * m / self._cont_norm))
        return sorted(out)

    @property
    def support(self):
        los = [loc for loc, _ in self._atoms]
        his = [loc for loc, _ in self._atoms]
        if self.continuous is not None and self.cont_weight > 0:
            clo, chi = self.continuous.support
            los.append(clo if self.lower is None else max(clo, self.lower))
            his.append(chi)
        return (min(los), max(his))

    def in_support(self, x):
        if any(x == loc for loc, _ in self._atoms):
            return True
        if self.continuous is None or self.cont_weight == 0:
            return False
        clo, chi = self.continuous.support
        lo = clo if self.lower is None else max(clo, self.lower)
        return lo <= x <= chi

    def _cont_tail(self, x):
        if self.lower is None:
            return self.continuous._tail(x)
        return self.continuous._tail(np.maximum(x, self.lower)) / self._cont_norm

    def _tail(self, x):
        out = np.zeros_like(x, dtype=float)
        for loc, w in self._atoms:
            out = out + np.where(x < loc, w, 0.0)
        if self.continuous is not None and self.cont_weight > 0:
            out = out + self.cont_weight * self._cont_tail(x)
        return out

    def _pdf(self, x):
        if self.continuous is None:
            return np.zeros_like(x, dtype=float)
        dens = self.cont_weight * self.continuous._pdf(x) / self._cont_norm
        if self.lower is not None:
            dens = np.where(x > self.lower, dens, 0.0)
        return dens

    def _has_density(self):
        return self.continuous is not None and self.cont_weight > 0

    def _log_range(self):
        t_lo, t_hi = self.continuous._log_range()
        if self.lower is not None and self.lower > 0:
            t_lo = max(t_lo, math.log(self.lower))
        return t_lo, t_hi

    def _quantile_scalar(self, p: float) -> float:
        atoms_cum = 0.0
        for loc, w in self._atoms + [(math.inf, 0.0)]:
            if self.continuous is not None and self.cont_weight > 0:
                below = self.cont_weight * (
                    1.0 - float(self._cont_tail(np.array(loc))) if math.isfinite(loc) else 1.0)
            else:
                below = 0.0
            if p <= atoms_cum + below:
                # inside the continuous stretch just left of ``loc``
                cond_tail = 1.0 - (p - atoms_cum) / self.cont_weight
                z = float(self.continuous._ppf(np.array(1.0 - cond_tail * self._cont_norm)))
                return z if self.lower is None else max(z, self.lower)
            if p <= atoms_cum + below + w:
                return loc
            atoms_cum += w
        return self.support[1]

    def _ppf(self, p):
        p = np.asarray(p, dtype=float)
        flat = np.array([self._quantile_scalar(float(v)) for v in p.ravel()])
        return flat.reshape(p.shape)

    def sample(self, rng, n):
        if n < 1:
            raise DomainError("sample size must be >= 1")
        locs = np.array([loc for loc, _ in self._atoms] + [np.nan])
        weights = np.array([w for _, w in self._atoms] + [self.cont_weight])
        edges = np.cumsum(weights)
        edges[-1] = max(edges[-1], 1.0)
        idx = np.searchsorted(edges, rng.random(n), side="right")
        idx = np.minimum(idx, len(weights) - 1)
        out = locs[idx]
        cont = np.flatnonzero(idx == len(weights) - 1)
        if cont.size and self.continuous is not None:
            out[cont] = self._sample_continuous(rng, cont.size)
        return out

    def _sample_continuous(self, rng, m):
        if self.lower is None:
            return self.continuous.sample(rng, m)
        if self._cont_norm >= 0.1:
            vals = np.empty(m)
            pending = np.arange(m)
            while pending.size:
                draw = self.continuous.sample(rng, pending.size)
                ok = draw > self.lower
                vals[pending[ok]] = draw[ok]
                pending = pending[~ok]
            return vals
        u = rng.random(m)
        return self.continuous._ppf(1.0 - (1.0 - u) * self._cont_norm)

    def _moment(self, s):
        val = sum(w * loc ** s for loc, w in self._atoms)
        if self.continuous is not None and self.cont_weight > 0:
            lower = self.lower if self.lower is not None else -math.inf
            if self.lower is None:
                part = self.continuous.fractional_moment(s).value
            else:
                part = self.continuous.upper_moment(s, lower)
            val += self.cont_weight * part / self._cont_norm
        return val

    def fractional_moment(self, s):
        s = complex(s)
        if self.continuous is not None and self.cont_weight > 0:
            self.continuous._check_strip(s)
        if s.real <= 0 and any(loc == 0 for loc, _ in self._atoms):
            raise DivergentMomentError("atom at zero with Re(s) <= 0")
        return ComplexMoment(complex(self._moment(s)), 0.0, "atoms+component")

    def _upper_moment(self, s, lower):
        val = sum(w * loc ** s for loc, w in self._atoms if loc > lower)
        if self.continuous is not None and self.cont_weight > 0:
            eff = lower if self.lower is None else max(lower, self.lower)
            val += self.cont_weight * self.continuous.upper_moment(s, eff) / self._cont_norm
        return val


@register_family
class TwoAtom(AtomMixture):
    """Two atoms: ``y1`` with probability ``p1`` and ``y2`` with ``1 - p1``."""

    family = "TwoAtom"

    def __init__(self, y1: float, p1: float, y2: float):
        if not (0 < p1 < 1):
            raise ParameterError("p1 must lie in (0, 1)")
        if y1 == y2:
            raise ParameterError("atoms must be distinct")
        self.y1, self.p1, self.y2 = float(y1), float(p1), float(y2)
        super().__init__([(self.y1, self.p1), (self.y2, 1.0 - self.p1)])

    @property
    def params(self):
        return {"y1": self.y1, "p1": self.p1, "y2": self.y2}

    def _moment(self, s):
        return self.p1 * self.y1 ** s + (1.0 - self.p1) * self.y2 ** s


def point_mass(loc: float) -> AtomMixture:
    """Degenerate law at ``loc``."""
    return AtomMixture([(loc, 1.0)])


@register_family
class FlattenedLaw(AtomMixture):
    """``base`` with its mass on ``(-inf, c]`` moved to an atom at 1.

    The tail equals ``base.tail`` above ``c``, the constant ``base.tail(c)`` on
    ``[1, c]`` and 1 below 1.
    """

    family = "FlattenedLaw"

    def __init__(self, base: UnivariateLaw, c: float):
        if not c > 1:
            raise DomainError(f"flattening cut must exceed 1, got {c}")
        top = float(base.tail(c))
        if not top < 1.0:
            raise DomainError(f"base tail at c={c} is {top}, need < 1")
        self.base = base
        self.c = float(c)
        super().__init__([(1.0, 1.0 - top)], base, self.c)

    @property
    def params(self):
        return {"base": self.base.to_dict(), "c": self.c}

    def _tail(self, x):
        flat = np.where(x < 1.0, 1.0, self._cont_norm)
        return np.where(x > self.c, self.base._tail(np.maximum(x, self.c)), flat)


def law_from_dict(spec: dict) -> UnivariateLaw:
    """Build a law from ``{"family": ..., "params": {...}}``."""
    if not isinstance(spec, dict) or "family" not in spec:
        raise ParameterError(f"law spec must be an object with a 'family' key: {spec!r}")
    family = spec["family"]
    params = dict(spec.get("params") or {})
    if family not in _FAMILIES:
        raise ParameterError(f"unknown law family {family!r}; known: {sorted(_FAMILIES)}")
    cls = _FAMILIES[family]
    if hasattr(cls, "from_params"):
        return cls.from_params(params)
    if family == "AtomMixture":
        cont = params.get("continuous")
        return AtomMixture([tuple(a) for a in params.get("atoms", [])],
                           None if cont is None else law_from_dict(cont), params.get("lower"))
    if family == "FlattenedLaw":
        return FlattenedLaw(law_from_dict(params["base"]), params["c"])
    try:
        return cls(**params)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for {family}: {exc}") from None
