"""Bivariate Sarmanov laws ``(1 + theta phi1(x) phi2(y)) F(dx) G(dy)``.

Kernels are polynomials in the (mid-)distribution function of a reference law,
which keeps them bounded with exactly computable bounds, limits and tail
integrals.  The FGM family is the degree-one case ``1 - 2 F``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy import special

from .dist import (AtomMixture, ComplexMoment, Pareto, Uniform01, UnivariateLaw,
                   _bisect_vec, law_from_dict, mellin_quad, register_family)
from .errors import DomainError, ModelValidationError, ParameterError


class PolynomialKernel:
    """``phi(x) = sum_k coeffs[k] * L(x)**k`` with ``L`` the reference law's (mid-)CDF.

    With ``midpoint=True`` the level at an atom is the midpoint of the CDF jump,
    so ``E[phi(Z)] = integral of p over [0, 1]`` holds for atomic laws too.
    """

    def __init__(self, coeffs: Sequence[float], reference: UnivariateLaw, midpoint: bool = True):
        if len(coeffs) == 0:
            raise ParameterError("kernel needs at least one coefficient")
        self.coeffs = tuple(float(c) for c in coeffs)
        self.reference = reference
        self.midpoint = bool(midpoint)
        self.poly = Polynomial(self.coeffs)
        self._anti = self.poly.integ()
        crit = [r.real for r in self.poly.deriv().roots() if abs(r.imag) < 1e-12 and 0 < r.real < 1] \
            if len(self.coeffs) > 2 else []
        vals = self.poly(np.array([0.0, 1.0] + crit))
        self.value_range = (float(vals.min()), float(vals.max()))

    @property
    def bound(self) -> float:
        """``sup |phi|`` over every attainable level in [0, 1]."""
        return max(abs(self.value_range[0]), abs(self.value_range[1]))

    @property
    def limit(self) -> float:
        """``lim phi(x)`` as ``x -> inf``."""
        return float(self.poly(1.0))

    def level(self, x):
        return self.reference.mid_cdf(x) if self.midpoint else self.reference.cdf(x)

    def __call__(self, x):
        lev = self.level(x)
        out = self.poly(np.asarray(lev))
        return float(out) if np.ndim(x) == 0 else out

    def _atom_levels(self, law):
        out = []
        for loc, w in law.atoms():
            top = float(law.cdf(loc))
            out.append((loc, w, top, top - 0.5 * w if self.midpoint else top))
        return out

    def tail_integral(self, law: UnivariateLaw, x: float) -> float:
        """``integral of phi over (x, inf)`` against ``law``.

        Exact (polynomial antiderivative) when ``law`` is the reference law,
        quadrature otherwise.
        """
        if law is not self.reference:
            return law.partial_expect(self, x, points=self.breakpoints())
        anti = self._anti
        val = anti(1.0) - anti(float(law.cdf(x)))
        for loc, w, top, lev in self._atom_levels(law):
            if loc > x:
                val -= (anti(top) - anti(top - w)) - w * self.poly(lev)
        return float(val)

    def breakpoints(self) -> list[float]:
        pts = [loc for loc, _ in self.reference.atoms()]
        lower = getattr(self.reference, "lower", None)
        if lower is not None:
            pts.append(lower)
        lo = self.reference.support[0]
        if lo > 0:
            pts.append(lo)
        return pts

    def moment(self, law: UnivariateLaw, s) -> complex:
        """``E[phi(Z) Z^s]`` under ``law``."""
        s = complex(s)
        if law is self.reference:
            if isinstance(law, Uniform01):
                return complex(sum(c / (k + s + 1.0) for k, c in enumerate(self.coeffs)))
            if isinstance(law, Pareto):
                law._check_strip(s)
                b = 1.0 - s / law.alpha
                total = sum(c * np.exp(special.loggamma(k + 1.0) + special.loggamma(b)
                                       - special.loggamma(k + 1.0 + b))
                            for k, c in enumerate(self.coeffs))
                return complex(law.xm ** s * total)
            if not law._has_density():
                return complex(sum(w * self.poly(lev) * loc ** s
                                   for loc, w, _, lev in self._atom_levels(law)))
        law._check_strip(s)
        total = sum(w * float(self(loc)) * loc ** s for loc, w in law.atoms() if loc > 0)
        if law._has_density():
            t_lo, t_hi = law._moment_log_range(s)
            val, _ = mellin_quad(lambda y: float(self(y)) * float(law._pdf(np.array(y))),
                                 s, t_lo, t_hi, self.breakpoints())
            total += val
        return complex(total)

    def to_dict(self) -> dict:
        return {"type": "polynomial", "coeffs": list(self.coeffs), "midpoint": self.midpoint}

    def __repr__(self):
        return f"PolynomialKernel({list(self.coeffs)}, midpoint={self.midpoint})"


def fgm_kernel(law: UnivariateLaw) -> PolynomialKernel:
    return PolynomialKernel([1.0, -2.0], law)


def fgm_kernels(F: UnivariateLaw, G: UnivariateLaw):
    """FGM kernels ``1 - 2F`` and ``1 - 2G`` with bounds ``b1 = b2 = 1`` and limit ``d1 = -1``."""
    k1, k2 = fgm_kernel(F), fgm_kernel(G)
    return k1, k2, k1.bound, k2.bound, k1.limit


@dataclass(frozen=True)
class SarmanovModel:
    """Marginals ``F`` (insurance risk) and ``G`` (financial risk), kernels and ``theta``."""

    F: UnivariateLaw
    G: UnivariateLaw
    kernel1: PolynomialKernel
    kernel2: PolynomialKernel
    theta: float
    kernel_name: str = field(default="polynomial", compare=False)

    @classmethod
    def fgm(cls, F, G, theta):
        k1, k2, *_ = fgm_kernels(F, G)
        return cls(F, G, k1, k2, float(theta), "fgm")

    @classmethod
    def polynomial(cls, F, G, coeffs1, coeffs2, theta):
        return cls(F, G, PolynomialKernel(coeffs1, F), PolynomialKernel(coeffs2, G), float(theta))

    @property
    def b1(self) -> float:
        return self.kernel1.bound

    @property
    def b2(self) -> float:
        return self.kernel2.bound

    @property
    def d1(self) -> float:
        return self.kernel1.limit

    @property
    def envelope(self) -> float:
        """Rejection envelope constant ``1 + |theta| b1 b2``."""
        return 1.0 + abs(self.theta) * self.b1 * self.b2

    def factor(self, x, y):
        return 1.0 + self.theta * self.kernel1(x) * self.kernel2(y)

    def to_dict(self) -> dict:
        if self.kernel_name == "fgm":
            kernel = "fgm"
        else:
            kernel = {"phi1": list(self.kernel1.coeffs), "phi2": list(self.kernel2.coeffs)}
        return {"F": self.F.to_dict(), "G": self.G.to_dict(), "kernel": kernel, "theta": self.theta}

    @classmethod
    def from_dict(cls, spec: dict) -> "SarmanovModel":
        try:
            F = law_from_dict(spec["F"])
            G = law_from_dict(spec["G"])
            theta = float(spec.get("theta", 0.0))
        except KeyError as exc:
            raise ParameterError(f"model spec missing key {exc}") from None
        kernel = spec.get("kernel", "fgm")
        if kernel == "fgm":
            return cls.fgm(F, G, theta)
        if isinstance(kernel, dict) and "phi1" in kernel and "phi2" in kernel:
            return cls.polynomial(F, G, kernel["phi1"], kernel["phi2"], theta)
        raise ParameterError(f"kernel must be 'fgm' or {{'phi1': [...], 'phi2': [...]}}, got {kernel!r}")


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    slack: float
    required: bool = True
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks if c.required)

    @property
    def failed(self) -> list[str]:
        return [c.name for c in self.checks if c.required and not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "valid": self.ok,
            "failed": self.failed,
            "checks": [
                {"name": c.name, "passed": c.passed, "slack": c.slack,
                 "required": c.required, "detail": c.detail}
                for c in self.checks
            ],
        }


def _probe_points(law: UnivariateLaw, n: int = 401) -> np.ndarray:
    lv = special.expit(np.linspace(-27.0, 27.0, n))
    pts = [np.atleast_1d(law.quantile(lv))]
    lo, hi = law.support
    pts.append(np.array([lo] + ([hi] if math.isfinite(hi) else [])))
    pts.append(np.array([loc for loc, _ in law.atoms()]))
    return np.unique(np.concatenate(pts))


def _kernel_values(kernel: PolynomialKernel, law: UnivariateLaw) -> np.ndarray:
    vals = kernel(_probe_points(law))
    if not math.isfinite(law.support[1]):
        vals = np.append(vals, kernel.limit)
    return vals


def validate(model: SarmanovModel, tol: float = 1e-9) -> ValidationReport:
    """Check the Sarmanov constraints; failures are reported, never raised."""
    F, G, k1, k2 = model.F, model.G, model.kernel1, model.kernel2
    checks = []
    for label, kern, law in (("kernel1_centered", k1, F), ("kernel2_centered", k2, G)):
        mean = law.expect(kern, points=kern.breakpoints())
        checks.append(Check(label, abs(mean) <= tol, tol - abs(mean), detail=f"E[phi]={mean:.3e}"))

    v1 = _kernel_values(k1, F)
    v2 = _kernel_values(k2, G)
    grid_min = float(np.min(1.0 + model.theta * np.outer(v1, v2)))
    checks.append(Check("nonnegativity", grid_min >= -1e-12, grid_min,
                        detail=f"min of 1 + theta phi1 phi2 over grid = {grid_min:.6g}"))
    for label, vals, b in (("kernel1_bound", v1, model.b1), ("kernel2_bound", v2, model.b2)):
        top = float(np.max(np.abs(vals)))
        checks.append(Check(label, top <= b + 1e-12, b - top, detail=f"max|phi|={top:.6g}, b={b:.6g}"))

    hi_f = F.support[1]
    # past a bounded support the kernel already sits at its limit
    far = float(F.quantile(1.0 - 1e-10)) if not math.isfinite(hi_f) else 2.0 * abs(hi_f) + 1.0
    gap = abs(float(k1(far)) - model.d1)
    checks.append(Check("d1_limit", gap <= 1e-6, 1e-6 - gap,
                        detail=f"phi1({far:.4g})={float(k1(far)):.10g}, d1={model.d1:.10g}"))

    g_lo = G.support[0]
    zero_atom = any(loc <= 0 for loc, _ in G.atoms())
    checks.append(Check("G_positive_support", g_lo >= 0 and not zero_atom, g_lo,
                        detail=f"support of G starts at {g_lo:g}"))

    coef = model.theta * model.d1
    lo, hi = k2.value_range
    mult_min = 1.0 + min(coef * lo, coef * hi)
    checks.append(Check("twist_admissible", mult_min >= 0, mult_min, required=False,
                        detail="1 + theta d1 phi2 >= 0 (needed for the twisted law only)"))
    return ValidationReport(tuple(checks))


def require_valid(model: SarmanovModel) -> None:
    report = validate(model)
    if not report.ok:
        raise ModelValidationError(f"invalid Sarmanov model, failed checks: {report.failed}")


def joint_density_factor(model: SarmanovModel, x: float, y: float) -> float:
    """``1 + theta phi1(x) phi2(y)``; both points must lie in the marginal supports."""
    if not (math.isfinite(x) and model.F.in_support(x)):
        raise DomainError(f"x={x} outside the support of F")
    if not (math.isfinite(y) and model.G.in_support(y)):
        raise DomainError(f"y={y} outside the support of G")
    return float(model.factor(x, y))


def sample_pairs(model: SarmanovModel, rng: np.random.Generator, n: int, *,
                 return_proposals: bool = False):
    """Draw ``n`` pairs: ``Y ~ G``, then ``X | Y`` by rejection against ``F``.

    The conditional density of ``X`` given ``Y = y`` is ``1 + theta phi1(x) phi2(y)``
    relative to ``F``; proposals from ``F`` are accepted with probability
    ``(1 + theta phi1 phi2) / (1 + |theta| b1 b2)``.
    """
    y = model.G.sample(rng, n)
    if model.theta == 0.0:
        x = model.F.sample(rng, n)
        return (x, y, n) if return_proposals else (x, y)
    env = model.envelope
    slope = model.theta * model.kernel2(y)
    x = np.empty(n)
    pending = np.arange(n)
    proposals = 0
    while pending.size:
        prop = model.F.sample(rng, pending.size)
        proposals += pending.size
        accept = rng.random(pending.size) * env <= 1.0 + slope[pending] * model.kernel1(prop)
        x[pending[accept]] = prop[accept]
        pending = pending[~accept]
    return (x, y, proposals) if return_proposals else (x, y)


def sample_pair(model: SarmanovModel, rng: np.random.Generator) -> tuple[float, float]:
    x, y = sample_pairs(model, rng, 1)
    return float(x[0]), float(y[0])


@register_family
class TwistedLaw(UnivariateLaw):
    """``G`` reweighted by ``1 + coefficient * phi2(y)`` (mass one since ``E[phi2] = 0``)."""

    family = "TwistedLaw"

    def __init__(self, base: UnivariateLaw, coefficient: float, kernel: PolynomialKernel):
        lo, hi = kernel.value_range
        worst = 1.0 + min(coefficient * lo, coefficient * hi)
        if worst < -1e-15:
            raise ParameterError(
                f"twisting multiplier 1 + {coefficient:g} phi2 reaches {worst:g} < 0")
        self.base = base
        self.coefficient = float(coefficient)
        self.kernel = kernel
        self.moment_strip = base.moment_strip
        self._ceiling = 1.0 + abs(self.coefficient) * kernel.bound
        self._atomic = None
        if not base._has_density():
            self._atomic = AtomMixture([(loc, w * self.multiplier(loc)) for loc, w in base.atoms()])

    @classmethod
    def from_params(cls, params):
        base = law_from_dict(params["base"])
        kp = params.get("kernel", {"coeffs": [1.0, -2.0], "midpoint": True})
        kernel = PolynomialKernel(kp["coeffs"], base, kp.get("midpoint", True))
        return cls(base, params["coefficient"], kernel)

    @property
    def params(self):
        return {"base": self.base.to_dict(), "coefficient": self.coefficient,
                "kernel": self.kernel.to_dict()}

    @property
    def support(self):
        return self.base.support

    def in_support(self, x):
        return self.base.in_support(x)

    def multiplier(self, y):
        return 1.0 + self.coefficient * self.kernel(y)

    def atoms(self):
        return [(loc, w * float(self.multiplier(loc))) for loc, w in self.base.atoms()]

    def _has_density(self):
        return self.base._has_density()

    def _log_range(self):
        return self.base._log_range()

    def _tail(self, x):
        flat = np.atleast_1d(x)
        extra = np.array([self.kernel.tail_integral(self.base, float(v)) for v in flat.ravel()])
        out = self.base._tail(flat) + self.coefficient * extra.reshape(flat.shape)
        return out.reshape(np.shape(x))

    def _pdf(self, x):
        return self.base._pdf(x) * self.multiplier(x)

    def _ppf(self, p):
        if self._atomic is not None:
            return self._atomic._ppf(p)
        p = np.asarray(p, dtype=float)
        lo = np.full(p.shape, self.base.support[0])
        top_level = 1.0 - (1.0 - p) / self._ceiling
        hi = self.base._ppf(np.clip(top_level, 0.0, 1.0 - 1e-16))
        if math.isfinite(self.base.support[1]):
            hi = np.minimum(hi, self.base.support[1])

        def f(x):
            return (1.0 - self._tail(x)) - p

        return _bisect_vec(f, lo, hi, iters=100)

    def sample(self, rng, n):
        """Rejection against the base law."""
        if n < 1:
            raise DomainError("sample size must be >= 1")
        out = np.empty(n)
        pending = np.arange(n)
        while pending.size:
            prop = self.base.sample(rng, pending.size)
            accept = rng.random(pending.size) * self._ceiling <= self.multiplier(prop)
            out[pending[accept]] = prop[accept]
            pending = pending[~accept]
        return out

    def fractional_moment(self, s):
        """Weighted quadrature of ``y^s (1 + c phi2(y)) G(dy)`` plus exact atom sums."""
        s = complex(s)
        self._check_strip(s)
        total = sum(w * loc ** s for loc, w in self.atoms() if loc > 0)
        err = 0.0
        if self._has_density():
            t_lo, t_hi = self._moment_log_range(s)
            val, err = mellin_quad(lambda y: float(self._pdf(np.array(y))), s, t_lo, t_hi,
                                   self.kernel.breakpoints())
            total += val
        return ComplexMoment(complex(total), err, "weighted-quadrature")


def twist(model: SarmanovModel) -> UnivariateLaw:
    """Law of ``Y*_theta``: ``(1 + theta d1 phi2(y)) G(dy)``; ``G`` itself when ``theta d1 = 0``."""
    coef = model.theta * model.d1
    if coef == 0.0:
        return model.G
    return TwistedLaw(model.G, coef, model.kernel2)


def conditional_tail(model: SarmanovModel, x: float, y: float) -> float:
    """``P[X > x | Y = y] = F̄(x) + theta phi2(y) * integral of phi1 over (x, inf)``."""
    return float(model.F.tail(x)) + model.theta * float(model.kernel2(y)) * \
        model.kernel1.tail_integral(model.F, x)


def product_tail(model: SarmanovModel, x: float) -> float:
    """Exact ``P[XY > x]`` for the dependent pair, by quadrature over ``G``."""
    if not x > 0:
        raise DomainError("x must be positive")

    def given(v):
        if v <= 0:
            return 0.0
        return conditional_tail(model, x / v, v)

    pts = [x / loc for loc, _ in model.F.atoms() if loc > 0]
    if model.F.support[0] > 0:
        pts.append(x / model.F.support[0])
    return model.G.expect(given, points=pts)
