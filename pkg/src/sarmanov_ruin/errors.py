"""Exception hierarchy shared by all modules."""


class SarmanovRuinError(Exception):
    """Base class for errors raised by this package."""


class DomainError(SarmanovRuinError, ValueError):
    """Argument outside the domain of an operation (NaN, out of support, ...)."""


class ParameterError(SarmanovRuinError, ValueError):
    """Invalid construction parameters for a law, kernel or model."""


class DivergentMomentError(SarmanovRuinError, ArithmeticError):
    """Requested moment lies outside the finite-moment strip."""


class DegenerateSampleError(SarmanovRuinError, ValueError):
    """Sample too degenerate for the estimator (e.g. all top order statistics tied)."""


class ModelValidationError(SarmanovRuinError, ValueError):
    """A Sarmanov model failed validation where a valid model is required."""


class TruncationError(SarmanovRuinError, RuntimeError):
    """Infinite-horizon truncation cannot be justified by any moment bound."""


class SingularRatioError(SarmanovRuinError, ZeroDivisionError):
    """Geometric constant with E[Y^alpha] == 1 (the (1 - m) denominator vanishes)."""


class HypothesisError(SarmanovRuinError, ValueError):
    """Construction hypotheses of the counterexample are violated."""
