import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coverhart import (
    INF,
    ConeCombination,
    DiscreteLabels,
    Geodesic,
    InvalidParameter,
    KernelSpec,
    LpPower,
    Misclassification,
    PowerDistance,
    RealLine,
    RealVector,
    SpaceMismatch,
    Sphere,
    cone_combine,
    evaluate,
    geodesic,
    lp_power,
    make_kernel,
    misclassification,
    power_distance,
)
from coverhart.kernels import kernel_from_dict, negdef_region, spec_from_dict
from coverhart.membership import sample_points

CATALOGUE = [
    misclassification(5),
    power_distance(0.5),
    power_distance(1.0),
    power_distance(2.0),
    power_distance(3.0),
    lp_power(2, 3.0, 1.0),
    lp_power(2, INF, 0.5),
    lp_power(2, 0.5, 0.5),
    lp_power(3, 1.5, 1.0),
    lp_power(4, 2.0, 2.0),
    lp_power(3, 3.0, 1.0),
    geodesic(2),
    geodesic(3),
    cone_combine([(0.3, power_distance(1.0)), (2.0, power_distance(2.0))]),
]


class TestCertification:
    @pytest.mark.parametrize(
        "kernel, negdef",
        [
            (lp_power(3, 1.5, 1.0), True),
            (lp_power(2, 3.0, 1.0), True),
            (power_distance(3.0), False),
            (lp_power(2, INF, 1.0), True),
            (lp_power(2, INF, 1.5), False),
            (lp_power(2, 1.5, 1.5), True),
            (lp_power(2, 1.5, 1.6), False),
            (lp_power(3, 3.0, 1.0), False),
            (lp_power(5, 2.0, 2.0), True),
            (lp_power(3, 0.5, 0.5), True),
            (lp_power(3, 0.5, 0.6), False),
            (misclassification(4), True),
            (geodesic(2), True),
        ],
    )
    def test_table_regions(self, kernel, negdef):
        assert kernel.certified_negdef is negdef

    def test_boundary_q2(self):
        assert power_distance(2.0).certified_negdef
        assert not power_distance(2.0 + 1e-9).certified_negdef

    def test_predicate_is_pure(self):
        space, fam = RealVector(2, 3.0), LpPower(3.0, 1.0)
        assert negdef_region(space, fam) == negdef_region(RealVector(2, 3.0), LpPower(3.0, 1.0))

    @pytest.mark.parametrize(
        "kernel, metric",
        [
            (misclassification(3), True),
            (geodesic(3), True),
            (power_distance(1.0), True),
            (power_distance(0.5), True),
            (power_distance(2.0), False),
            (lp_power(3, 1.5, 1.0), True),
            (lp_power(3, 0.5, 0.5), False),
            (lp_power(2, INF, 1.0), True),
        ],
    )
    def test_metric_flag(self, kernel, metric):
        assert kernel.certified_metric is metric

    def test_cone_flags_are_conjunctions(self):
        good = cone_combine([(1.0, power_distance(1.0)), (1.0, power_distance(2.0))])
        assert good.certified_negdef and not good.certified_metric
        bad = cone_combine([(1.0, power_distance(1.0)), (1.0, power_distance(3.0))])
        assert not bad.certified_negdef

    def test_out_of_region_is_constructed(self):
        k = power_distance(3.0)
        assert evaluate(k, 0.0, 2.0) == 8.0


class TestErrors:
    def test_geodesic_on_line(self):
        with pytest.raises(SpaceMismatch):
            make_kernel(KernelSpec(RealLine(), Geodesic()))

    def test_misclassification_on_sphere(self):
        with pytest.raises(SpaceMismatch):
            make_kernel(KernelSpec(Sphere(3), Misclassification()))

    @pytest.mark.parametrize("q", [0.0, -1.0, math.inf, math.nan])
    def test_bad_q(self, q):
        with pytest.raises(InvalidParameter, match="q"):
            power_distance(q)

    def test_negative_weight(self):
        with pytest.raises(InvalidParameter, match="weight"):
            cone_combine([(-0.5, power_distance(1.0))])

    def test_all_zero_weights(self):
        with pytest.raises(InvalidParameter):
            cone_combine([(0.0, power_distance(1.0))])

    def test_mixed_spaces(self):
        with pytest.raises(SpaceMismatch):
            cone_combine([(1.0, power_distance(1.0)), (1.0, misclassification(2))])

    def test_kernel_p_must_match_space(self):
        with pytest.raises(SpaceMismatch):
            make_kernel(KernelSpec(RealVector(3, 2.0), LpPower(1.0, 1.0)))

    def test_point_outside_space(self):
        with pytest.raises(SpaceMismatch):
            evaluate(misclassification(3), 0, 3)
        with pytest.raises(SpaceMismatch):
            evaluate(geodesic(3), [1.0, 1.0, 0.0], [1.0, 0.0, 0.0])
        with pytest.raises(SpaceMismatch):
            evaluate(lp_power(3, 1.0, 1.0), [1.0, 1.0], [1.0, 0.0])


class TestEvaluate:
    def test_misclassification_identity(self):
        assert evaluate(misclassification(3), 1, 1) == 0.0
        assert evaluate(misclassification(3), 1, 2) == 1.0

    def test_squared_error(self):
        assert evaluate(power_distance(2.0), 1.0, 3.0) == 4.0

    def test_antipodal_geodesic(self):
        assert evaluate(geodesic(3), [1.0, 0, 0], [-1.0, 0, 0]) == math.pi

    def test_orthogonal_geodesic(self):
        assert evaluate(geodesic(3), [1.0, 0, 0], [0, 1.0, 0]) == pytest.approx(math.pi / 2, abs=1e-15)

    def test_quasi_norm(self):
        # ||(1,1)||_0.5 = (1 + 1)^2 = 4, then 4^0.5
        assert evaluate(lp_power(2, 0.5, 0.5), [0.0, 0.0], [1.0, 1.0]) == 2.0

    def test_max_norm(self):
        assert evaluate(lp_power(3, INF, 1.0), [0.0, 0.0, 0.0], [1.0, -3.0, 2.0]) == 3.0

    def test_geodesic_accuracy_near_identity(self):
        t = 1e-9
        y = [1.0, 0.0, 0.0]
        y2 = [math.cos(t), math.sin(t), 0.0]
        assert evaluate(geodesic(3), y, y2) == pytest.approx(t, rel=1e-6)

    def test_geodesic_accuracy_near_antipode(self):
        t = 1e-9
        y = [1.0, 0.0, 0.0]
        y2 = [-math.cos(t), math.sin(t), 0.0]
        assert evaluate(geodesic(3), y, y2) == pytest.approx(math.pi - t, abs=1e-12)


@pytest.mark.parametrize("kernel", CATALOGUE, ids=lambda k: k.name)
def test_axioms_on_random_pairs(kernel):
    a = sample_points(kernel.space, 1000, seed=1)
    b = sample_points(kernel.space, 1000, seed=2)
    ab = kernel.pairwise(a, b)
    ba = kernel.pairwise(b, a)
    assert np.all(ab >= 0)
    assert np.all(np.isfinite(ab))
    np.testing.assert_array_equal(ab, ba)
    np.testing.assert_array_equal(kernel.pairwise(a, a), 0.0)


def test_geodesic_range():
    k = geodesic(4)
    vals = k.pairwise(sample_points(k.space, 2000, 3), sample_points(k.space, 2000, 4))
    assert vals.min() >= 0 and vals.max() <= math.pi


class TestCone:
    def test_single_term_identity(self):
        base = lp_power(3, 1.5, 1.0)
        k = cone_combine([(1.0, base)])
        a, b = sample_points(base.space, 200, 5), sample_points(base.space, 200, 6)
        np.testing.assert_array_equal(k.pairwise(a, b), base.pairwise(a, b))

    def test_identical_halves(self):
        m = misclassification(4)
        k = cone_combine([(0.5, m), (0.5, m)])
        a, b = sample_points(m.space, 200, 5), sample_points(m.space, 200, 6)
        np.testing.assert_array_equal(k.pairwise(a, b), m.pairwise(a, b))

    @given(
        c1=st.floats(0, 100, allow_nan=False),
        c2=st.floats(0, 100, allow_nan=False),
    )
    def test_linearity_at_zero_two(self, c1, c2):
        if c1 == 0 and c2 == 0:
            return
        k = cone_combine([(c1, power_distance(1.0)), (c2, power_distance(2.0))])
        assert evaluate(k, 0.0, 2.0) == pytest.approx(2 * c1 + 4 * c2, rel=1e-12)

    @settings(max_examples=50)
    @given(
        weights=st.lists(st.floats(0.01, 10), min_size=1, max_size=4),
        y=st.floats(-1e3, 1e3),
        y2=st.floats(-1e3, 1e3),
    )
    def test_weighted_sum(self, weights, y, y2):
        parts = [power_distance(q) for q in (0.5, 1.0, 1.5, 2.0)][: len(weights)]
        k = cone_combine(list(zip(weights, parts)))
        expected = sum(w * evaluate(p, y, y2) for w, p in zip(weights, parts))
        assert evaluate(k, y, y2) == pytest.approx(expected, rel=1e-12, abs=1e-300)


class TestJson:
    def test_round_trip(self):
        k = cone_combine([(0.5, lp_power(2, INF, 1.0)), (1.5, lp_power(2, 1.0, 1.0))])
        text = json.dumps(k.spec.to_dict())
        k2 = kernel_from_dict(json.loads(text))
        assert k2.spec == k.spec
        assert k2.certified_negdef == k.certified_negdef

    def test_spec_example_shape(self):
        k = kernel_from_dict({"space": {"kind": "real_vector", "d": 3}, "family": "lp_power", "p": 1.5, "q": 1.0})
        assert k.space == RealVector(3, 1.5)
        assert k.certified_negdef

    def test_unknown_field(self):
        with pytest.raises(InvalidParameter, match="qq"):
            spec_from_dict({"space": {"kind": "real_line"}, "family": "power_distance", "q": 1, "qq": 2})

    def test_cone_terms_inherit_space(self):
        k = kernel_from_dict({
            "space": {"kind": "real_line"},
            "family": "cone",
            "terms": [
                {"weight": 1, "kernel": {"family": "power_distance", "q": 1}},
                {"weight": 2, "kernel": {"family": "power_distance", "q": 2}},
            ],
        })
        assert isinstance(k.spec.family, ConeCombination)
        assert evaluate(k, 0.0, 2.0) == 10.0


def test_discrete_space_validation():
    with pytest.raises(InvalidParameter):
        DiscreteLabels(0)
    with pytest.raises(InvalidParameter):
        RealVector(1, 2.0)
    with pytest.raises(InvalidParameter):
        RealVector(2, -1.0)
    with pytest.raises(InvalidParameter):
        RealVector(2, 0.0)
    assert RealVector(2, "inf").p == INF


def test_kernels_are_immutable():
    k = power_distance(1.0)
    with pytest.raises(Exception):
        k.certified_negdef = False
    assert isinstance(k.spec.family, PowerDistance)
