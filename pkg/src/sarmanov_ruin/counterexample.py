"""A financial risk with a Mellin zero defeats the inverse problem.

Pipeline: a two-atom law ``G`` whose (twisted) Mellin transform vanishes at
``alpha + i beta0``; an oscillating law ``F~`` that is not regularly varying;
its flattening ``F1`` below a cut ``c``; and a final ``F`` obtained from
``F1`` so the first Sarmanov kernel is centered.  ``F`` is not regularly
varying, yet the tail of ``F (x) G_theta`` is.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

from .dist import AtomMixture, FlattenedLaw, OscillatingPareto, TwoAtom, UnivariateLaw
from .errors import DomainError, HypothesisError, ParameterError
from .mellin import mult_convolution_tail, twisted_mellin
from .sarmanov import PolynomialKernel, SarmanovModel, fgm_kernel, twist
from .tail_stats import tail_ratio_diagnostic

ROOT_FOUND = "root-found"
POSITIVE_ATOM = "positive-atom"
NEGATIVE_ATOM = "negative-atom"

DEFAULTS = {"alpha": 2.0, "beta0": math.pi, "a": 0.5, "b": 0.3, "theta": 0.0}


def build_vanishing_mellin_law(alpha: float, beta0: float, theta: float = 0.0,
                               d1: float = -1.0) -> TwoAtom:
    """Two atoms at 1 and ``exp(pi / beta0)`` whose twisted transform vanishes at ``alpha + i beta0``.

    With ``theta = 0`` the weight is explicit, ``p1 = y2^a / (1 + y2^a)``.
    Otherwise the FGM twist multiplies the atom weights by ``1 + theta d1 (1 - p1)``
    and ``1 - theta d1 p1`` and ``p1`` is found by a root search.
    """
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    if beta0 == 0 or not math.isfinite(beta0):
        raise DomainError("beta0 must be finite and nonzero")
    y2 = math.exp(math.pi / abs(beta0))
    weight = y2 ** alpha
    coef = theta * d1
    if coef == 0.0:
        return TwoAtom(1.0, weight / (1.0 + weight), y2)
    if abs(coef) > 1.0:
        raise ParameterError(f"|theta d1| = {abs(coef):g} > 1 makes the twisted weights negative")

    def gap(p):
        return p * (1.0 + coef * (1.0 - p)) - (1.0 - p) * (1.0 - coef * p) * weight

    p1 = optimize.brentq(gap, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return TwoAtom(1.0, p1, y2)


def build_oscillating_law(alpha: float, beta0: float, a: float, b: float) -> OscillatingPareto:
    return OscillatingPareto(alpha, beta0, a, b)


def flatten_below(law: UnivariateLaw, c: float) -> FlattenedLaw:
    """Move the mass of ``law`` on ``(-inf, c]`` to an atom at 1."""
    return FlattenedLaw(law, c)


def default_cut(law: UnivariateLaw, level: float = 0.9) -> float:
    """Smallest point of ``1 + k / 1000`` (k >= 1) where the tail of ``law`` is at most ``level``."""
    grid = 1.0 + np.arange(1, 1_000_001) / 1000.0
    below = np.flatnonzero(np.asarray(law.tail(grid)) <= level)
    if below.size == 0:
        raise HypothesisError(f"tail never drops to {level} below x = {grid[-1]:g}")
    return float(grid[below[0]])


@dataclass(frozen=True)
class CenteringResult:
    law: UnivariateLaw
    case: str
    kernel: PolynomialKernel
    c0: float
    location: float
    atom_weight: float | None = None
    kernel_value: float | None = None


def _support_probe(law: UnivariateLaw, n: int = 4001) -> np.ndarray:
    levels = 1.0 - np.geomspace(1.0, 1e-12, n)[1:]
    pts = np.concatenate([[loc for loc, _ in law.atoms()], np.atleast_1d(law.quantile(levels))])
    return np.unique(pts)


def center_kernel(law: UnivariateLaw, kernel: PolynomialKernel, *, value_tol: float = 1e-10,
                  x_tol: float = 1e-8) -> CenteringResult:
    """Modify ``law`` (the flattened law) so that ``integral of kernel dF = 0``.

    ``phi_hat(x)`` is the integral of the kernel over ``(x, inf)``.  If it
    changes sign above 1, ``F`` is ``law`` conditioned above the root.
    Otherwise the mass of ``law`` on ``(1, inf)`` is kept and an atom is added
    where the kernel has the sign opposite to ``c0 = phi_hat(1)``, with
    weight ``|c0| / |kernel(atom)|``, and the result is renormalized.
    """
    lo = law.support[0]
    total = kernel.tail_integral(law, lo - 1.0)
    if abs(total) <= 1e-13:
        return CenteringResult(law, ROOT_FOUND, kernel, total, lo)

    probe = _support_probe(law)
    vals = kernel(probe)
    if vals.min() >= 0 or vals.max() <= 0:
        raise HypothesisError("the kernel has one sign on the support; it cannot be centered")

    xs = probe[probe > 1.0]
    hat = np.array([kernel.tail_integral(law, float(x)) for x in xs])
    significant = np.abs(hat) > value_tol
    pos, neg = np.any(significant & (hat > 0)), np.any(significant & (hat < 0))

    if pos and neg:
        i = int(np.flatnonzero(np.sign(hat[:-1]) * np.sign(hat[1:]) < 0)[0])
        a_x, b_x = float(xs[i]), float(xs[i + 1])
        f_a = kernel.tail_integral(law, a_x)
        for _ in range(400):
            mid = 0.5 * (a_x + b_x)
            f_mid = kernel.tail_integral(law, mid)
            if abs(f_mid) < value_tol and b_x - a_x < x_tol * max(1.0, mid):
                break
            if (f_mid > 0) == (f_a > 0):
                a_x, f_a = mid, f_mid
            else:
                b_x = mid
        x0 = 0.5 * (a_x + b_x)
        return CenteringResult(AtomMixture([], law, lower=x0), ROOT_FOUND, kernel,
                               kernel.tail_integral(law, x0), x0)

    c0 = kernel.tail_integral(law, 1.0)
    if c0 == 0.0:
        return CenteringResult(AtomMixture([], law, lower=1.0), ROOT_FOUND, kernel, 0.0, 1.0)
    want = -np.sign(c0)
    cand = np.where(np.sign(vals) == want, np.abs(vals), -np.inf)
    j = int(np.argmax(cand))  # first maximum: ties go to the smallest location
    loc, kval = float(probe[j]), float(vals[j])
    mass = abs(c0) / abs(kval)
    norm = float(law.tail(1.0)) + mass
    final = AtomMixture([(loc, mass / norm)], law, lower=1.0)
    case = POSITIVE_ATOM if c0 > 0 else NEGATIVE_ATOM
    return CenteringResult(final, case, kernel, float(c0), loc, mass / norm, kval)


@dataclass
class CounterexampleBundle:
    alpha: float
    beta0: float
    a: float
    b: float
    theta: float
    c: float
    G: UnivariateLaw
    G_theta: UnivariateLaw
    F_tilde: OscillatingPareto
    F1: FlattenedLaw
    F: UnivariateLaw
    centering: CenteringResult
    model: SarmanovModel

    @property
    def case(self) -> str:
        return self.centering.case

    def mellin_zero_modulus(self) -> float:
        return abs(twisted_mellin(self.model, self.alpha, self.beta0).value)

    def centering_residual(self) -> float:
        """``integral of kernel1 dF`` by quadrature on the final law (independent of the exact tail sums)."""
        k = self.centering.kernel
        return self.F.expect(k, points=k.breakpoints() + [self.c])

    def to_dict(self) -> dict:
        cen = self.centering
        return {
            "parameters": {"alpha": self.alpha, "beta0": self.beta0, "a": self.a, "b": self.b,
                           "theta": self.theta, "c": self.c},
            "case": cen.case,
            "centering": {"c0": cen.c0, "location": cen.location, "atom_weight": cen.atom_weight,
                          "kernel_value": cen.kernel_value,
                          "kernel_coeffs": list(cen.kernel.coeffs)},
            "G": self.G.to_dict(),
            "G_theta_is_G": self.G_theta is self.G,
            "F_tilde": self.F_tilde.to_dict(),
            "F_tilde_tail_at_c": float(self.F_tilde.tail(self.c)),
            "diagnostics": {"mellin_zero_modulus": self.mellin_zero_modulus(),
                            "centering_residual": self.centering_residual()},
        }


def build_counterexample(alpha: float = 2.0, beta0: float = math.pi, a: float = 0.5, b: float = 0.3,
                         theta: float = 0.0, c: float | None = None,
                         kernel_coeffs: Sequence[float] = (1.0, -2.0)) -> CounterexampleBundle:
    """Run the whole construction; the first kernel is ``p(F1(x))`` with ``p`` from ``kernel_coeffs``."""
    F_tilde = build_oscillating_law(alpha, beta0, a, b)
    if c is None:
        c = default_cut(F_tilde)
    F1 = flatten_below(F_tilde, c)
    kernel1 = PolynomialKernel(kernel_coeffs, F1, midpoint=False)
    G = build_vanishing_mellin_law(alpha, beta0, theta, kernel1.limit)
    centering = center_kernel(F1, kernel1)
    model = SarmanovModel(centering.law, G, kernel1, fgm_kernel(G), float(theta))
    return CounterexampleBundle(float(alpha), float(beta0), float(a), float(b), float(theta), float(c),
                                G, twist(model), F_tilde, F1, centering.law, centering, model)


@dataclass
class Demonstration:
    alpha: float
    x: np.ndarray
    product_tail: np.ndarray
    product_tail_2x: np.ndarray
    F_tail: np.ndarray
    F_tail_2x: np.ndarray
    kappa: float
    target: float
    product_verdict: dict
    F_verdict: dict

    @property
    def scaled(self) -> np.ndarray:
        return self.x ** self.alpha * self.product_tail

    def rows(self):
        for i, x in enumerate(self.x):
            yield (float(x), float(self.product_tail[i]), float(self.product_tail_2x[i]),
                   float(self.product_tail_2x[i] / self.product_tail[i]),
                   float(self.F_tail[i]), float(self.F_tail_2x[i]),
                   float(self.F_tail_2x[i] / self.F_tail[i]),
                   float(self.scaled[i] / self.target))

    header = ("x", "product_tail", "product_tail_2x", "product_ratio", "F_tail", "F_tail_2x",
              "F_ratio", "scaled_product_over_limit")

    def summary(self) -> dict:
        return {"product": self.product_verdict, "F": self.F_verdict, "kappa": self.kappa,
                "limit_constant": self.target,
                "scaled_product_over_limit_at_top": float(self.scaled[-1] / self.target)}


def demonstrate(bundle: CounterexampleBundle, x_grid: Sequence[float] | None = None,
                tol: float = 0.01) -> Demonstration:
    """Compare the scale-2 tail ratios of ``F`` and of ``F (x) G_theta`` with one statistic.

    The product ratio should settle at ``2^-alpha``; the ratio of ``F`` keeps
    oscillating.  ``x^alpha`` times the product tail is reported against
    ``kappa * E[Y*^alpha]``, where ``kappa`` is the eventual ratio of the tail
    of ``F`` to the unmodulated Pareto tail.
    """
    xs = np.geomspace(10.0, 1e4, 241) if x_grid is None else np.asarray(x_grid, dtype=float)
    F, Gt = bundle.F, bundle.G_theta

    def conv(x):
        return mult_convolution_tail(F, Gt, float(x))

    prod = np.array([conv(x) for x in xs])
    prod2 = np.array([conv(2 * x) for x in xs])
    ft = np.asarray(F.tail(xs))
    ft2 = np.asarray(F.tail(2 * xs))
    probe = 10.0 * max(bundle.c, bundle.centering.location, 1.0)
    kappa = float(F.tail(probe) / bundle.F_tilde.tail(probe)) / bundle.F_tilde.mass
    target = kappa * Gt.fractional_moment(complex(bundle.alpha)).value.real
    cache = dict(zip(np.concatenate([xs, 2 * xs]).tolist(), np.concatenate([prod, prod2]).tolist()))
    pv = tail_ratio_diagnostic(lambda x: cache[x] if x in cache else conv(x), 2.0, xs, tol=tol)
    fv = tail_ratio_diagnostic(F.tail, 2.0, xs, tol=tol)
    return Demonstration(bundle.alpha, xs, prod, prod2, ft, ft2, kappa, target, pv.to_dict(), fv.to_dict())
