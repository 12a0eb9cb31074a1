import math

import numpy as np
import pytest

from sarmanov_ruin import OscillatingPareto, Pareto
from sarmanov_ruin.errors import DegenerateSampleError, DomainError, ParameterError
from sarmanov_ruin.tail_stats import (CONVERGENT, CONVERGENT_TO_ZERO, IN_D, NOT_IN_D, OSCILLATING,
                                      dominated_variation_check, empirical_tail, hill_estimator,
                                      hill_plot, tail_ratio_diagnostic)


class TestHill:
    def test_exact_quantiles(self):
        # deterministic "sample": Pareto(2) quantiles at (i - 1/2) / n
        n = 100_000
        p = (np.arange(n) + 0.5) / n
        sample = (1 - p) ** -0.5
        est = hill_estimator(sample, 1000)
        assert est.alpha == pytest.approx(2.0, rel=0.01)
        assert est.se == pytest.approx(est.alpha / math.sqrt(1000))

    def test_pure_pareto_sample(self):
        x = Pareto(2.0).sample(np.random.default_rng(12), 100_000)
        assert abs(hill_estimator(x, 1000).alpha - 2.0) < 0.2

    def test_scale_invariance(self):
        x = Pareto(3.0).sample(np.random.default_rng(1), 5_000)
        a = hill_estimator(x, 200).alpha
        assert hill_estimator(4.0 * x, 200).alpha == a

    def test_k_bounds(self):
        x = np.arange(1.0, 101.0)
        with pytest.raises(ParameterError):
            hill_estimator(x, 9)
        with pytest.raises(ParameterError):
            hill_estimator(x, 51)

    def test_ties(self):
        with pytest.raises(DegenerateSampleError):
            hill_estimator(np.ones(100), 20)

    @pytest.mark.parametrize("bad", [[1.0, -2.0] * 50, [1.0, math.nan] * 50, []])
    def test_bad_samples(self, bad):
        with pytest.raises(DomainError):
            hill_estimator(bad, 10)

    def test_plot(self):
        x = Pareto(2.0).sample(np.random.default_rng(2), 10_000)
        ks = [10, 100, 1000]
        plot = hill_plot(x, ks)
        assert [e.k for e in plot] == ks
        assert plot[1].alpha == hill_estimator(x, 100).alpha


def test_empirical_tail():
    tail = empirical_tail([1.0, 2.0, 2.0, 3.0])
    assert list(tail([0.5, 1.0, 2.0, 3.0])) == [1.0, 0.75, 0.25, 0.0]


class TestTailRatio:
    def test_pareto_convergent(self):
        res = tail_ratio_diagnostic(Pareto(2.0).tail, 2.0, np.geomspace(10, 1e4, 50))
        assert res.verdict == CONVERGENT and res.regularly_varying
        assert res.limit == pytest.approx(0.25)
        assert res.alpha_hat == pytest.approx(2.0)

    def test_light_tail_to_zero(self):
        res = tail_ratio_diagnostic(lambda x: math.exp(-x), 2.0, np.linspace(5, 50, 40))
        assert res.verdict == CONVERGENT_TO_ZERO
        assert not res.regularly_varying

    def test_oscillating(self):
        law = OscillatingPareto(2.0, math.pi, 0.5, 0.3)
        res = tail_ratio_diagnostic(law.tail, 2.0, np.geomspace(1e2, 1e4, 241))
        assert res.verdict == OSCILLATING
        assert res.amplitude >= 0.02

    def test_window(self):
        law = OscillatingPareto(2.0, math.pi, 0.5, 0.3)
        xs = np.geomspace(10, 1e4, 241)
        full = tail_ratio_diagnostic(law.tail, 2.0, xs, window=(1e2, 1e4))
        assert full.window == (100.0, 1e4)
        with pytest.raises(ParameterError):
            tail_ratio_diagnostic(law.tail, 2.0, xs, window=(2e4, 3e4))

    def test_empirical_truncation_warning(self):
        sample = Pareto(2.0).sample(np.random.default_rng(3), 1000)
        res = tail_ratio_diagnostic(sample, 2.0, np.geomspace(1, 1e4, 30))
        assert res.warnings and "truncated" in res.warnings[0]
        assert res.x[-1] < 1e4

    def test_bad_scale(self):
        with pytest.raises(DomainError):
            tail_ratio_diagnostic(Pareto(2.0).tail, 0.0, [1.0, 2.0])

    def test_bad_grid(self):
        with pytest.raises(ParameterError):
            tail_ratio_diagnostic(Pareto(2.0).tail, 2.0, [3.0, 2.0])


class TestDominatedVariation:
    def test_pareto_in_d(self):
        res = dominated_variation_check(Pareto(2.0).tail, 0.5, np.geomspace(1, 1e4, 100))
        assert res.verdict == IN_D
        assert res.sup == pytest.approx(4.0)

    def test_oscillating_in_d(self):
        law = OscillatingPareto(2.0, math.pi, 0.5, 0.3)
        assert dominated_variation_check(law.tail, 0.5, np.geomspace(10, 1e4, 241)).verdict == IN_D

    def test_lognormal_style_not_in_d(self):
        # tail exp(-(log x)^2): the ratio at y = 1/2 grows without bound
        res = dominated_variation_check(lambda x: math.exp(-math.log(x) ** 2), 0.5,
                                        np.geomspace(2, 2e3, 60))
        assert res.verdict == NOT_IN_D

    def test_domain(self):
        with pytest.raises(DomainError):
            dominated_variation_check(Pareto(2.0).tail, 1.5, np.geomspace(1, 1e3, 10))
        with pytest.raises(ParameterError):
            dominated_variation_check(Pareto(2.0).tail, 0.5, [1.0, 10.0])
