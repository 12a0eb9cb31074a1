import json
import math
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

from sarmanov_ruin import Pareto, SarmanovModel, TwoAtom, Uniform01, point_mass
from sarmanov_ruin.errors import (DivergentMomentError, ModelValidationError, ParameterError,
                                  SingularRatioError, TruncationError)
from sarmanov_ruin.montecarlo import chunk_rng
from sarmanov_ruin.ruin_sim import (RuinEstimate, asymptotic_constant_finite,
                                    asymptotic_constant_infinite, asymptotic_constant_product,
                                    estimate_finite_ruin, estimate_infinite_ruin,
                                    estimate_product_tail, htilde_integrability_check,
                                    joint_tail_negligibility, ruin_curve, simulate_path,
                                    truncation_depth)

GOLDEN = Path(__file__).parent / "data" / "golden_path.json"


def test_golden_path_bit_exact(fgm_half):
    data = json.loads(GOLDEN.read_text())
    path = simulate_path(fgm_half, data["n"], chunk_rng(data["seed"], data["chunk"], data["stream"]))
    got = [{"step": p.step, "discount": p.discount.hex(), "partial_sum": p.partial_sum.hex(),
            "running_max": p.running_max.hex()} for p in path]
    assert got == data["path"]


def test_path_recursion(fgm_half):
    path = simulate_path(fgm_half, 8, np.random.default_rng(11))
    prev_disc, prev_sum = 1.0, 0.0
    for st in path:
        assert 0 < st.discount < prev_disc
        assert st.partial_sum >= prev_sum
        # nonnegative losses: the running maximum is the current sum
        assert st.running_max == st.partial_sum
        prev_disc, prev_sum = st.discount, st.partial_sum


def test_invalid_model_rejected(pareto2, uniform):
    bad = SarmanovModel.fgm(pareto2, uniform, 1.5)
    with pytest.raises(ModelValidationError):
        simulate_path(bad, 3, np.random.default_rng(0))
    with pytest.raises(ModelValidationError):
        estimate_finite_ruin(bad, 10.0, 2, 10_000, 1)


def test_estimate_from_counts():
    est = RuinEstimate.from_counts(5.0, 3, 250, 10_000)
    assert est.p_hat == 0.025 and isinstance(est.p_hat, float)
    assert est.se == pytest.approx(math.sqrt(0.025 * 0.975 / 10_000))
    lo, hi = est.ci
    assert hi - lo == pytest.approx(2 * 2.576 * est.se)


def test_small_N_rejected(fgm_half):
    with pytest.raises(ParameterError):
        estimate_finite_ruin(fgm_half, 10.0, 2, 999, 1)


class TestCoupling:
    def test_monotone_in_horizon_and_threshold(self, fgm_half):
        xs = [2.0, 5.0, 10.0]
        est = ruin_curve(fgm_half, xs, [1, 3, 5], 200_000, 7, chunk_size=50_000)
        hits = np.array([e.hits for e in est]).reshape(3, 3)
        assert np.all(np.diff(hits, axis=0) >= 0)
        assert np.all(np.diff(hits, axis=1) <= 0)

    def test_one_step_equals_product_tail(self, fgm_half):
        xs = [3.0, 8.0]
        ruin = ruin_curve(fgm_half, xs, [1], 120_000, 3, chunk_size=40_000)
        prod = estimate_product_tail(fgm_half, xs, 120_000, 3, chunk_size=40_000)
        assert [r.hits for r in ruin] == [p.hits for p in prod]

    def test_horizon_curve_matches_single(self, fgm_half):
        curve = ruin_curve(fgm_half, [10.0], [2, 4], 60_000, 9, chunk_size=20_000)
        single = estimate_finite_ruin(fgm_half, 10.0, 4, 60_000, 9, chunk_size=20_000)
        assert curve[1].hits == single.hits


def test_independent_product_tail(independent):
    est = estimate_product_tail(independent, [2.0, 5.0], 400_000, 5)
    for e in est:
        exact = e.x ** -2 / 3
        assert abs(e.p_hat - exact) < 4 * math.sqrt(exact * (1 - exact) / e.N)


def test_twisted_product_tail_uses_separate_stream(fgm_half):
    dep = estimate_product_tail(fgm_half, [2.0], 100_000, 5)
    ind = estimate_product_tail(fgm_half, [2.0], 100_000, 5, independent=True)
    assert dep[0].hits != ind[0].hits
    # exact at x = 2: dependent 5/48 - 1/240, twisted independent 5/48
    for e, exact in ((dep[0], 5 / 48 - 1 / 240), (ind[0], 5 / 48)):
        assert abs(e.p_hat - exact) < 4 * e.se


class TestConstants:
    def test_product(self, fgm_half, independent):
        assert asymptotic_constant_product(fgm_half, 2.0) == pytest.approx(5 / 12, abs=1e-14)
        assert asymptotic_constant_product(independent, 2.0) == pytest.approx(1 / 3, abs=1e-14)

    def test_finite(self, fgm_half):
        assert asymptotic_constant_finite(fgm_half, 2.0, 5) == pytest.approx((1 - 3 ** -5) * 1.5 * 5 / 12)
        assert asymptotic_constant_finite(fgm_half, 2.0, 1) == pytest.approx(5 / 12)

    def test_infinite(self, fgm_half):
        assert asymptotic_constant_infinite(fgm_half, 2.0) == pytest.approx(0.625)

    def test_singular(self, pareto2):
        model = SarmanovModel.fgm(pareto2, point_mass(1.0), 0.0)
        with pytest.raises(SingularRatioError):
            asymptotic_constant_finite(model, 2.0, 3)
        with pytest.raises(SingularRatioError):
            asymptotic_constant_infinite(model, 2.0)

    def test_divergent(self, pareto2):
        model = SarmanovModel.fgm(pareto2, TwoAtom(1.0, 0.5, 2.0), 0.0)
        with pytest.raises(DivergentMomentError):
            asymptotic_constant_infinite(model, 2.0)
        # finite horizons stay well defined
        assert asymptotic_constant_finite(model, 2.0, 2) == pytest.approx(2.5 + 2.5 ** 2)


def _markov_depth_oracle(mean_xy, mean_y, x, eps):
    m = 1
    while mean_xy * mean_y ** m / ((1 - mean_y) * x) >= eps:
        m += 1
    return m


class TestTruncation:
    def test_depth_fgm(self, fgm_half, pareto2):
        # E[XY] = E[X] E[Y] + theta E[X phi1(X)] E[Y phi2(Y)] by direct quadrature
        ex_phi = integrate.quad(lambda t: t * (1 - 2 * (1 - t ** -2)) * 2 * t ** -3, 1, np.inf)[0]
        ey_phi = integrate.quad(lambda y: y * (1 - 2 * y), 0, 1)[0]
        mean_xy = 2.0 * 0.5 + 0.5 * ex_phi * ey_phi
        assert mean_xy == pytest.approx(19 / 18)
        plan = truncation_depth(fgm_half, 50.0, 1e-4)
        assert plan.depth == _markov_depth_oracle(mean_xy, 0.5, 50.0, 1e-4) == 9
        assert plan.method == "first-moment Markov"
        assert plan.bound < 1e-4

    def test_depth_independent(self, independent):
        assert truncation_depth(independent, 50.0, 1e-4).depth == _markov_depth_oracle(1.0, 0.5, 50.0, 1e-4)

    def test_depth_grows_as_eps_shrinks(self, fgm_half):
        depths = [truncation_depth(fgm_half, 50.0, e).depth for e in (1e-2, 1e-4, 1e-6)]
        assert depths == sorted(depths) and depths[0] < depths[-1]

    def test_fractional_fallback(self, uniform):
        heavy = SarmanovModel.fgm(Pareto(0.8), uniform, 0.3)
        plan = truncation_depth(heavy, 50.0, 1e-3)
        assert plan.order < 0.8 and plan.method.startswith("order-")
        assert plan.bound < 1e-3

    def test_no_contraction(self, pareto2):
        model = SarmanovModel.fgm(pareto2, TwoAtom(1.0, 0.5, 2.0), 0.0)
        with pytest.raises(TruncationError):
            truncation_depth(model, 50.0, 1e-4)

    def test_infinite_estimate_reports_plan(self, fgm_half):
        est = estimate_infinite_ruin(fgm_half, 10.0, 20_000, 1e-3, 4)
        assert est.horizon == "inf"
        plan = truncation_depth(fgm_half, 10.0, 1e-3)
        assert est.depth == plan.depth and est.truncation_bound == plan.bound
        assert est.to_dict()["truncation_method"] == "first-moment Markov"


def test_negligibility_structure(fgm_half):
    rows = joint_tail_negligibility(fgm_half, [5.0, 20.0], 200_000, 6, chunk_size=100_000)
    for r in rows:
        assert 0 <= r.joint_hits <= r.single_hits
        assert r.ci[0] <= r.ratio <= r.ci[1]
    assert rows[1].ratio < rows[0].ratio


def test_negligibility_independent_oracle(independent):
    # given U1 = u the two events are independent; integrate their product over u
    x = 5.0

    def inner(u):
        a = min(1.0, (u / x) ** 2)
        b = integrate.quad(lambda w: min(1.0, (u * w / x) ** 2), 0, 1)[0]
        return a * b

    exact = integrate.quad(inner, 0, 1, limit=200)[0]
    rows = joint_tail_negligibility(independent, [x], 400_000, 8)
    r = rows[0]
    assert abs(r.p_joint - exact) < 4 * math.sqrt(exact / r.N)


class TestHtilde:
    def test_independent_power(self, independent):
        v = np.geomspace(1e-3, 1.0, 200)
        rep = htilde_integrability_check(independent, v, np.geomspace(1, 100, 5),
                                         tail=lambda t: t ** -2 / 3 if t >= 1 else 1 - t + t / 3)
        np.testing.assert_allclose(rep.htilde, v ** 2, rtol=1e-12)
        assert rep.finite
        assert rep.integral == pytest.approx(1 / 3, abs=2e-3)
        assert any("below" in n for n in rep.notes)

    def test_default_tail(self, fgm_half):
        rep = htilde_integrability_check(fgm_half, [0.5, 1.0], [2.0, 4.0])
        assert rep.htilde[1] == pytest.approx(1.0)
        assert rep.htilde[0] < 1.0


class TestTrivialExamples:
    def test_zero_threshold(self, fgm_half):
        assert estimate_finite_ruin(fgm_half, 0.0, 2, 5_000, 1).p_hat == 1.0

    def test_deterministic_perpetuity(self):
        # X = 1, Y = 1/2: S_n = 1 - 2^-n increases to 1
        model = SarmanovModel.fgm(point_mass(1.0), point_mass(0.5), 0.0)
        below = estimate_infinite_ruin(model, 0.99, 2_000, 1e-4, 1)
        above = estimate_infinite_ruin(model, 1.01, 2_000, 1e-4, 1)
        assert below.p_hat == 1.0 and above.p_hat == 0.0

    def test_rare_event_degenerate(self, independent):
        est = estimate_finite_ruin(independent, 1e3, 3, 10_000, 2)
        assert est.hits <= 1
        assert est.ci[0] <= est.p_hat <= est.ci[1]

    def test_independence_infinite_constant(self, independent):
        assert asymptotic_constant_infinite(independent, 2.0) == pytest.approx(0.5)

    def test_spec_markov_form(self):
        # E[X] m1^(m+1) / ((1 - m1) x) < eps with E[X] = 2, m1 = 1/2, x = 50
        m = 1
        while 2.0 * 0.5 ** (m + 1) / (0.5 * 50.0) >= 1e-4:
            m += 1
        assert m == 9
