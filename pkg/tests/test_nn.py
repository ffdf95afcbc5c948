import numpy as np
import pytest

from coverhart import (
    GaussianRegression,
    InvalidParameter,
    NoisyLabel,
    OneNearestNeighbor,
    SpaceMismatch,
    SyntheticTask,
    UncertifiedKernel,
    misclassification,
    power_distance,
    run_nn_experiment,
)
from coverhart.nn import task_from_dict


class TestOneNearestNeighbor:
    def test_tie_goes_to_lower_index(self):
        nn = OneNearestNeighbor().fit([2.0, 0.0], [20, 0])
        assert nn.predict([1.0])[0] == 20
        nn = OneNearestNeighbor().fit([0.0, 2.0], [0, 20])
        assert nn.predict([1.0])[0] == 0

    def test_duplicate_covariates(self):
        nn = OneNearestNeighbor().fit([1.0, 1.0, 1.0], [5, 6, 7])
        assert list(nn.predict([0.0, 1.0, 9.0])) == [5, 5, 5]

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        x = np.round(rng.random(300), 2)
        y = np.arange(300)
        q = np.round(rng.random(500), 3)
        brute = np.array([np.lexsort((y, np.abs(x - t)))[0] for t in q])
        np.testing.assert_array_equal(OneNearestNeighbor().fit(x, y).predict(q), brute)

    def test_column_input(self):
        nn = OneNearestNeighbor().fit(np.array([[0.0], [1.0]]), [0, 1])
        assert list(nn.predict(np.array([[0.2], [0.9]]))) == [0, 1]

    def test_sklearn_params(self):
        assert OneNearestNeighbor().get_params() == {}


def test_noiseless_labels():
    rep = run_nn_experiment(SyntheticTask(NoisyLabel(0.0)), misclassification(2), 1000, 10_000, seed=1)
    assert rep.bayes_risk_hat.value == 0.0
    assert rep.ratio is None
    assert rep.nn_risk_hat.value <= 0.01


def test_constant_noise_near_asymptote():
    rep = run_nn_experiment(SyntheticTask(NoisyLabel(0.1)), misclassification(2), 10_000, 50_000, seed=2)
    assert abs(rep.bayes_risk_hat.value - 0.1) < 0.01
    assert abs(rep.nn_risk_hat.value - 0.18) < 0.015
    assert rep.bound_status == "satisfied"


def test_regression():
    task = SyntheticTask(GaussianRegression("sin2pi", 0.3))
    rep = run_nn_experiment(task, power_distance(2.0), 10_000, 50_000, seed=3, allowance=0.15)
    assert abs(rep.bayes_risk_hat.value - 0.09) < 0.005
    assert rep.ratio <= 2.15
    assert rep.bound_status == "satisfied"


def test_risk_non_increasing_in_training_size():
    task = SyntheticTask(NoisyLabel(0.1))
    means, ses = [], []
    for n_train in (100, 1000, 10_000):
        risks = [
            run_nn_experiment(task, misclassification(2), n_train, 2000, seed=s).nn_risk_hat.value
            for s in range(50)
        ]
        means.append(np.mean(risks))
        ses.append(np.std(risks, ddof=1) / np.sqrt(len(risks)))
    for i in range(2):
        assert means[i + 1] <= means[i] + 2 * np.hypot(ses[i], ses[i + 1])


def test_deterministic_replay():
    task = SyntheticTask(GaussianRegression("linear", 0.5))
    a = run_nn_experiment(task, power_distance(1.0), 500, 500, seed=9).to_dict()
    b = run_nn_experiment(task, power_distance(1.0), 500, 500, seed=9).to_dict()
    assert a == b


def test_callable_noise():
    task = SyntheticTask(NoisyLabel(lambda x: 0.4 * x))
    rep = run_nn_experiment(task, misclassification(2), 2000, 5000, seed=4)
    assert rep.bayes_risk_hat.value == pytest.approx(0.2, abs=0.02)


def test_errors():
    with pytest.raises(UncertifiedKernel):
        run_nn_experiment(SyntheticTask(GaussianRegression()), power_distance(3.0), 10, 10, seed=0)
    with pytest.raises(SpaceMismatch):
        run_nn_experiment(SyntheticTask(NoisyLabel(0.1)), power_distance(1.0), 10, 10, seed=0)
    with pytest.raises(InvalidParameter):
        NoisyLabel(0.7)
    with pytest.raises(InvalidParameter):
        task_from_dict({"kind": "noisy_label", "flip": 0.1})


def test_task_round_trip():
    task = SyntheticTask(GaussianRegression("sin2pi", 0.3))
    assert task_from_dict(task.to_dict()) == task
