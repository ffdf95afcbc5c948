import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coverhart import (
    BayesAct,
    Empirical,
    FinitePMF,
    GaussianR,
    GaussianRd,
    InvalidParameter,
    MixtureGaussR,
    OptimizerConfig,
    RealLine,
    RiskEstimate,
    SpaceMismatch,
    SphereUniform,
    TwoPoint,
    cover_hart_report,
    estimate_alpha,
    estimate_beta,
    geodesic,
    lp_power,
    misclassification,
    point_mass,
    power_distance,
)
from coverhart.risk import bound_status, closed_form_beta

from oracles import abs_moment_quad, brute_grid_min, enumerate_bayes_risk, enumerate_pair_risk

PMF = (0.5, 0.3, 0.2)


def _mis(i, j):
    return float(i != j)


class TestDiscrete:
    def test_oracle_values(self):
        k = misclassification(3)
        beta_oracle = enumerate_pair_risk(PMF, _mis)
        act_oracle, alpha_oracle = enumerate_bayes_risk(PMF, _mis, [0, 1, 2])
        rep = cover_hart_report(k, FinitePMF(PMF), 1000, seed=0)
        assert rep.beta.value == pytest.approx(beta_oracle, abs=1e-15)
        assert rep.alpha.value == pytest.approx(alpha_oracle, abs=1e-15)
        assert rep.bayes_act == act_oracle == 0
        assert rep.ratio == pytest.approx(1.24, abs=1e-14)
        assert rep.bound_status == "satisfied"

    def test_monte_carlo_agrees(self):
        k = misclassification(3)
        mc = estimate_beta(k, FinitePMF(PMF), 10**5, seed=3, method="monte_carlo")
        assert abs(mc.value - 0.62) <= 4 * mc.std_error
        _, a = estimate_alpha(k, FinitePMF(PMF), 10**5, seed=3, method="monte_carlo")
        assert abs(a.value - 0.5) <= 4 * a.std_error

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6))
    def test_random_pmfs_match_enumeration(self, raw):
        w = tuple(np.asarray(raw) / sum(raw))
        k = misclassification(len(w))
        rep = cover_hart_report(k, FinitePMF(w), 10, seed=0)
        assert rep.beta.value == pytest.approx(enumerate_pair_risk(w, _mis), abs=1e-12)
        assert rep.alpha.value == pytest.approx(1 - max(w), abs=1e-12)
        assert rep.bound_status == "satisfied"


class TestGaussian:
    @pytest.mark.parametrize("q", [0.5, 1.0, 1.5, 2.0])
    def test_closed_form_beta_matches_quadrature(self, q):
        k = power_distance(q)
        oracle = abs_moment_quad(0.0, math.sqrt(2) * 1.7, q)
        assert closed_form_beta(k, GaussianR(0.4, 1.7)) == pytest.approx(oracle, rel=1e-9)

    @pytest.mark.parametrize("q", [0.5, 1.0, 2.0])
    def test_mc_beta_within_4se(self, q):
        k = power_distance(q)
        exact = estimate_beta(k, GaussianR(), 10, seed=1)
        mc = estimate_beta(k, GaussianR(), 10**5, seed=1, method="monte_carlo")
        assert exact.method == "closed_form"
        assert abs(mc.value - exact.value) <= 4 * mc.std_error

    def test_chi_moment_matches_mc(self):
        k = lp_power(3, 2.0, 1.0)
        dist = GaussianRd((0.0, 0.0, 0.0), 1.0)
        exact = closed_form_beta(k, dist)
        mc = estimate_beta(k, dist, 10**5, seed=2, method="monte_carlo")
        assert abs(mc.value - exact) <= 4 * mc.std_error

    def test_sphere_uniform_beta(self):
        k = geodesic(3)
        mc = estimate_beta(k, SphereUniform(3), 10**5, seed=2, method="monte_carlo")
        assert abs(mc.value - math.pi / 2) <= 4 * mc.std_error

    def test_squared_error_alpha_is_variance(self):
        act, a = estimate_alpha(power_distance(2.0), GaussianR(0.5, 1.0), 20_000, seed=4)
        assert act == pytest.approx(0.5, abs=0.05)
        assert abs(a.value - 1.0) <= 4 * a.std_error + 0.02


def test_sharpness_two_point():
    k = power_distance(3.0)
    dist = TwoPoint(0.0, 1.0, 0.5)
    x, v = brute_grid_min(lambda a: 0.5 * abs(a) ** 3 + 0.5 * abs(1 - a) ** 3, -1, 2)
    rep = cover_hart_report(k, dist, 1000, seed=0)
    assert rep.alpha.value == pytest.approx(v, abs=1e-9)
    assert rep.bayes_act == pytest.approx(x, abs=1e-4)
    assert rep.ratio == pytest.approx(4.0, rel=1e-6)
    assert rep.bound_status == "violated"
    assert not rep.certified


def test_point_mass_report():
    rep = cover_hart_report(power_distance(1.0), point_mass(2.5, RealLine()), 100, seed=0)
    assert rep.alpha.value == 0.0 and rep.beta.value == 0.0
    assert rep.ratio is None
    assert rep.bound_status == "satisfied"


def test_bayes_act_is_local_minimum():
    k = power_distance(1.0)
    est = BayesAct(k).fit(np.linspace(-1, 3, 2001) ** 3)
    spread = np.ptp(est.points_)
    step = 10 * 1e-6 * spread
    for delta in (-step, step):
        assert est.objective(est.bayes_act_ + delta) >= est.risk_ - 1e-12


def test_bayes_act_sklearn_api():
    est = BayesAct(misclassification(3))
    params = est.get_params()
    assert set(params) == {"kernel", "config"}
    est.fit([0, 1, 1, 2, 1])
    assert est.bayes_act_ == 1
    np.testing.assert_array_equal(est.predict(np.zeros((4, 1))), [1, 1, 1, 1])
    with pytest.raises(InvalidParameter):
        est.fit([0, 1], sample_weight=[-1.0, 2.0])


def test_bayes_act_unfitted():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        BayesAct(power_distance(1.0)).predict([0.0])


def test_determinism():
    k = power_distance(1.0)
    dist = MixtureGaussR(((0.4, -1.0, 0.5), (0.6, 2.0, 1.0)))
    a = cover_hart_report(k, dist, 5000, seed=11).to_dict()
    b = cover_hart_report(k, dist, 5000, seed=11).to_dict()
    assert a == b


LOWER_BOUND_CASES = [
    (power_distance(1.0), GaussianR(0.0, 2.0)),
    (power_distance(0.5), MixtureGaussR(((0.5, -2.0, 0.3), (0.5, 2.0, 0.3)))),
    (power_distance(2.0), TwoPoint(-1.0, 4.0, 0.3)),
    (lp_power(2, 1.0, 1.0), GaussianRd((1.0, -1.0), 1.0)),
    (geodesic(3), SphereUniform(3)),
    (misclassification(5), FinitePMF((0.1, 0.2, 0.3, 0.2, 0.2))),
]


@pytest.mark.parametrize("kernel, dist", LOWER_BOUND_CASES, ids=lambda x: getattr(x, "name", getattr(x, "kind", "")))
def test_bounds_hold_for_certified_pairs(kernel, dist):
    rep = cover_hart_report(kernel, dist, 4000, 5, OptimizerConfig(restarts=3, coord_grid_points=33))
    se = math.hypot(rep.alpha.std_error, rep.beta.std_error)
    assert rep.beta.value >= rep.alpha.value - 3 * se - 1e-12
    assert rep.bound_status == "satisfied"


def test_empirical_support_is_exact():
    pts = np.array([0.0, 1.0, 4.0])
    rep = cover_hart_report(power_distance(1.0), Empirical(pts, RealLine()), 10, seed=0)
    assert rep.alpha.method == "closed_form"
    assert rep.alpha.value == pytest.approx(4 / 3)
    assert rep.beta.value == pytest.approx((1 + 4 + 3) * 2 / 9)


def test_space_mismatch():
    with pytest.raises(SpaceMismatch):
        cover_hart_report(geodesic(3), GaussianR(), 10, seed=0)


def test_risk_estimate_invariants():
    with pytest.raises(InvalidParameter):
        RiskEstimate(1.0, 0.1, 0, "closed_form")
    with pytest.raises(InvalidParameter):
        RiskEstimate(1.0, -0.1, 10, "monte_carlo")
    est = RiskEstimate.from_values(np.array([1.0, 2.0, 3.0]))
    assert est.std_error == pytest.approx(1 / math.sqrt(3))


def test_bound_status_classification():
    assert bound_status(1.0, 1.5, 0.0) == "satisfied"
    assert bound_status(1.0, 2.05, 0.1) == "satisfied"
    assert bound_status(1.0, 2.5, 0.1) == "violated"
    assert bound_status(1.0, math.nan, 0.1) == "inconclusive"


def test_optimizer_config_round_trip():
    cfg = OptimizerConfig(grid_points=33, restarts=2)
    assert OptimizerConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(InvalidParameter):
        OptimizerConfig.from_dict({"grid": 3})
