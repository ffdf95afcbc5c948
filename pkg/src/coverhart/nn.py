"""1-nearest-neighbor versus Bayes predictor on synthetic supervised tasks.

Conditionally on the covariate, the 1-NN rule predicts with one draw from
(approximately) the same conditional law, so its risk is asymptotically
bounded by twice the Bayes risk.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ._rng import blocked_draw, check_count, check_seed
from .exceptions import InvalidParameter, SpaceMismatch, UncertifiedKernel
from .kernels import LossKernel
from .risk import RATIO_GUARD, SATISFIED, VIOLATED, RiskEstimate
from .spaces import DiscreteLabels, RealLine

_TRAIN_X, _TRAIN_NOISE, _TEST_X, _TEST_NOISE = 40, 41, 42, 43

MEAN_FUNCTIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sin2pi": lambda x: np.sin(2.0 * np.pi * x),
    "linear": lambda x: x,
    "zero": lambda x: np.zeros_like(x),
}


def _covariates(X) -> np.ndarray:
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single covariate column, got shape {X.shape}")
        X = X[:, 0]
    return X


class OneNearestNeighbor(BaseEstimator):
    """1-NN rule for one-dimensional covariates.

    Neighbors are found by binary search in the sorted training covariates;
    equidistant neighbors are resolved in favor of the lower training index.
    """

    def fit(self, X, y):
        X, y = check_X_y(np.asarray(X).reshape(len(X), -1), y, dtype=float, y_numeric=False)
        x = _covariates(X)
        order = np.argsort(x, kind="stable")
        self.x_sorted_ = x[order]
        self.y_sorted_ = np.asarray(y)[order]
        self.index_sorted_ = order
        self.n_features_in_ = 1
        return self

    def kneighbors_index(self, X) -> np.ndarray:
        """Training index of the nearest neighbor of each row of ``X``."""
        check_is_fitted(self, "x_sorted_")
        x = _covariates(X)
        xs, n = self.x_sorted_, len(self.x_sorted_)
        pos = np.searchsorted(xs, x, side="left")
        right = np.minimum(pos, n - 1)
        left = np.maximum(pos - 1, 0)
        # first member of the left run of equal covariates has the lowest index
        left = np.searchsorted(xs, xs[left], side="left")
        d_left = np.abs(x - xs[left])
        d_right = np.abs(xs[right] - x)
        idx = self.index_sorted_
        take_left = (pos > 0) & (
            (pos == n) | (d_left < d_right) | ((d_left == d_right) & (idx[left] < idx[right]))
        )
        return np.where(take_left, left, right)

    def predict(self, X):
        return self.y_sorted_[self.kneighbors_index(X)]


@dataclass(frozen=True)
class NoisyLabel:
    """Binary label ``1(x >= boundary)`` flipped with probability ``flip_prob(x)``."""

    flip_prob: Union[float, Callable[[np.ndarray], np.ndarray]] = 0.1
    boundary: float = 0.5

    def __post_init__(self):
        if not callable(self.flip_prob):
            p = float(self.flip_prob)
            if not 0 <= p <= 0.5:
                raise InvalidParameter(f"flip_prob: must lie in [0, 0.5], got {p}")
            object.__setattr__(self, "flip_prob", p)

    def flip(self, x: np.ndarray) -> np.ndarray:
        if callable(self.flip_prob):
            p = np.broadcast_to(np.asarray(self.flip_prob(x), dtype=float), x.shape)
            if np.any((p < 0) | (p > 0.5)):
                raise InvalidParameter("flip_prob: values must lie in [0, 0.5]")
            return p
        return np.full(x.shape, self.flip_prob)

    def bayes(self, x):
        return (x >= self.boundary).astype(np.int64)

    def labels(self, x, u):
        """Labels from covariates ``x`` and uniforms ``u``."""
        return self.bayes(x) ^ (u < self.flip(x)).astype(np.int64)

    def to_dict(self):
        if callable(self.flip_prob):
            raise InvalidParameter("flip_prob: callables cannot be serialized")
        return {"kind": "noisy_label", "flip_prob": self.flip_prob, "boundary": self.boundary}


@dataclass(frozen=True)
class GaussianRegression:
    """``y = m(x) + sigma * eps``; ``mean`` is a callable or a registered name."""

    mean: Union[str, Callable[[np.ndarray], np.ndarray]] = "sin2pi"
    sigma: float = 0.3

    def __post_init__(self):
        if isinstance(self.mean, str) and self.mean not in MEAN_FUNCTIONS:
            raise InvalidParameter(f"mean: unknown mean function {self.mean!r}")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise InvalidParameter(f"sigma: must be finite and >= 0, got {self.sigma!r}")

    def bayes(self, x):
        m = MEAN_FUNCTIONS[self.mean] if isinstance(self.mean, str) else self.mean
        return np.asarray(m(x), dtype=float)

    def labels(self, x, z):
        """Responses from covariates ``x`` and standard normals ``z``."""
        return self.bayes(x) + self.sigma * z

    def to_dict(self):
        if not isinstance(self.mean, str):
            raise InvalidParameter("mean: only named mean functions can be serialized")
        return {"kind": "gaussian_regression", "mean": self.mean, "sigma": self.sigma}


@dataclass(frozen=True)
class SyntheticTask:
    """Covariates uniform on ``[0, 1]`` with a known conditional law."""

    law: Union[NoisyLabel, GaussianRegression]

    def draw(self, n: int, seed: int, x_stream: int, noise_stream: int):
        x = blocked_draw(lambda rng, m: rng.random(m), n, seed, (x_stream,))
        if isinstance(self.law, NoisyLabel):
            noise = blocked_draw(lambda rng, m: rng.random(m), n, seed, (noise_stream,))
        else:
            noise = blocked_draw(lambda rng, m: rng.standard_normal(m), n, seed, (noise_stream,))
        return x, self.law.labels(x, noise)

    def bayes_predict(self, x):
        return self.law.bayes(np.asarray(x, dtype=float))

    def check_loss(self, loss: LossKernel):
        if isinstance(self.law, NoisyLabel):
            if not (isinstance(loss.space, DiscreteLabels) and loss.space.label_count >= 2):
                raise SpaceMismatch("noisy_label tasks need a loss on at least 2 labels")
        elif not isinstance(loss.space, RealLine):
            raise SpaceMismatch("gaussian_regression tasks need a loss on the real line")

    def to_dict(self):
        return self.law.to_dict()


@dataclass(frozen=True)
class NNReport:
    n_train: int
    n_test: int
    loss: str
    bayes_risk_hat: RiskEstimate
    nn_risk_hat: RiskEstimate
    ratio: Optional[float]
    bound_status: str
    paired_se: float
    allowance: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "n_train": self.n_train,
            "n_test": self.n_test,
            "loss": self.loss,
            "bayes_risk_hat": self.bayes_risk_hat.to_dict(),
            "nn_risk_hat": self.nn_risk_hat.to_dict(),
            "ratio": self.ratio,
            "bound_status": self.bound_status,
            "paired_se": self.paired_se,
            "allowance": self.allowance,
            "seed": self.seed,
        }


def run_nn_experiment(
    task: SyntheticTask,
    loss: LossKernel,
    n_train: int,
    n_test: int,
    seed: int,
    *,
    allowance: float = 0.0,
    ratio_guard: float = RATIO_GUARD,
) -> NNReport:
    """Risk of the 1-NN rule and of the Bayes predictor on one shared test set.

    The bound check is ``nn <= 2 * bayes + 3 * SE + allowance`` where ``SE``
    is the standard error of the paired per-point difference and
    ``allowance`` absorbs finite-training-sample bias.
    """
    if not (loss.certified_negdef or loss.certified_metric):
        raise UncertifiedKernel(f"{loss.name} is not a certified Cover-Hart loss")
    task.check_loss(loss)
    n_train, n_test = check_count("n_train", n_train), check_count("n_test", n_test)
    seed = check_seed(seed)
    x_tr, y_tr = task.draw(n_train, seed, _TRAIN_X, _TRAIN_NOISE)
    x_te, y_te = task.draw(n_test, seed, _TEST_X, _TEST_NOISE)

    nn_pred = OneNearestNeighbor().fit(x_tr, y_tr).predict(x_te)
    bayes_pred = task.bayes_predict(x_te)
    nn_loss = loss.pairwise(nn_pred, y_te)
    bayes_loss = loss.pairwise(bayes_pred, y_te)

    nn_risk = RiskEstimate.from_values(nn_loss)
    bayes_risk = RiskEstimate.from_values(bayes_loss)
    diff = nn_loss - 2.0 * bayes_loss
    paired_se = float(diff.std(ddof=1) / math.sqrt(n_test)) if n_test > 1 else 0.0
    ok = nn_risk.value <= 2.0 * bayes_risk.value + 3.0 * paired_se + allowance
    ratio = nn_risk.value / bayes_risk.value if bayes_risk.value > ratio_guard else None
    return NNReport(
        n_train=n_train,
        n_test=n_test,
        loss=loss.name,
        bayes_risk_hat=bayes_risk,
        nn_risk_hat=nn_risk,
        ratio=ratio,
        bound_status=SATISFIED if ok else VIOLATED,
        paired_se=paired_se,
        allowance=float(allowance),
        seed=seed,
    )


def task_from_dict(obj: dict) -> SyntheticTask:
    if not isinstance(obj, dict):
        raise InvalidParameter(f"task: expected an object, got {obj!r}")
    kind = obj.get("kind")
    keys = {"noisy_label": {"flip_prob", "boundary"}, "gaussian_regression": {"mean", "sigma"}}
    if kind not in keys:
        raise InvalidParameter(f"task.kind: unknown task {kind!r}")
    unknown = set(obj) - keys[kind] - {"kind"}
    if unknown:
        raise InvalidParameter(f"task: unknown field(s) {sorted(unknown)}")
    args = {k: v for k, v in obj.items() if k != "kind"}
    if kind == "noisy_label":
        return SyntheticTask(NoisyLabel(**args))
    return SyntheticTask(GaussianRegression(**args))
