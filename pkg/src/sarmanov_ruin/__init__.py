"""Simulation and numerical checks for insurance/financial risk products under Sarmanov dependence."""

__version__ = "0.1.0"

from .dist import (AtomMixture, ComplexMoment, FlattenedLaw, LogNormal, OscillatingPareto, Pareto,
                   TwoAtom, Uniform01, UnivariateLaw, law_from_dict, point_mass)
from .sarmanov import (PolynomialKernel, SarmanovModel, TwistedLaw, fgm_kernels,
                       joint_density_factor, product_tail, sample_pair, sample_pairs, twist,
                       validate)

__all__ = [
    "AtomMixture", "ComplexMoment", "FlattenedLaw", "LogNormal", "OscillatingPareto", "Pareto",
    "TwoAtom", "Uniform01", "UnivariateLaw", "law_from_dict", "point_mass",
    "PolynomialKernel", "SarmanovModel", "TwistedLaw", "fgm_kernels", "joint_density_factor",
    "product_tail", "sample_pair", "sample_pairs", "twist", "validate",
]
