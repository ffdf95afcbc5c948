"""Kernel scores, score divergences and the probabilistic Cover-Hart identity.

For a negative definite kernel ``L`` the kernel score

    S(P, y) = E_P L(Y, y) - 1/2 E_P L(Y, Y')

is proper. The misclassification kernel gives (half) the Brier score and
``|y - y'|`` gives the CRPS. Forecasting with a single draw ``delta_Y``
costs exactly twice the optimal expected score.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._rng import check_count, check_seed
from .distributions import Distribution, sample
from .exceptions import InvalidParameter, SpaceMismatch, UncertifiedKernel
from .kernels import LossKernel, misclassification, power_distance
from .risk import RATIO_GUARD, RiskEstimate, combined_se

# Substream tags; disjoint from the ones used in :mod:`coverhart.risk`.
_SCORE_Y, _SCORE_Y2 = 10, 11
_DIV_Y, _DIV_Y2, _DIV_Z, _DIV_Z2 = 20, 21, 22, 23
_CHP_A, _CHP_OBS, _CHP_B, _CHP_C, _CHP_Y, _CHP_Y2 = 30, 31, 32, 33, 34, 35

# Exact computations are compared up to this relative rounding slack.
_ROUNDING = 1e-12

HOLDS, VIOLATED, INCONCLUSIVE = "holds", "violated", "inconclusive"


@dataclass(frozen=True)
class ScoringRule:
    """Kernel score built on ``base_kernel``.

    Uncertified kernels are refused unless ``allow_uncertified`` is set, in
    which case results are flagged as unguaranteed.
    """

    base_kernel: LossKernel
    allow_uncertified: bool = False

    def __post_init__(self):
        if not isinstance(self.base_kernel, LossKernel):
            raise InvalidParameter(f"base_kernel: expected a LossKernel, got {self.base_kernel!r}")
        if not self.base_kernel.certified_negdef and not self.allow_uncertified:
            raise UncertifiedKernel(
                f"{self.base_kernel.name} is not certified negative definite; "
                "pass allow_uncertified=True for counterexample studies"
            )

    @property
    def guaranteed(self) -> bool:
        return self.base_kernel.certified_negdef

    @property
    def space(self):
        return self.base_kernel.space


def brier_rule(labels: int) -> ScoringRule:
    """Kernel score of the misclassification loss (half the Brier score)."""
    return ScoringRule(misclassification(labels))


def crps_rule() -> ScoringRule:
    """Continuous ranked probability score on the real line."""
    return ScoringRule(power_distance(1.0))


def _check(rule: ScoringRule, *dists: Distribution):
    if not isinstance(rule, ScoringRule):
        raise InvalidParameter(f"rule: expected a ScoringRule, got {rule!r}")
    for d in dists:
        if not rule.space.accepts(d.space):
            raise SpaceMismatch(f"distribution on {d.space!r} does not fit {rule.space!r}")


def _cross(k: LossKernel, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return k.pairwise(a[:, None, ...], b[None, :, ...])


def kernel_score(
    rule: ScoringRule, forecast: Distribution, y, n: int, seed: int, *, stream: Sequence[int] = ()
) -> RiskEstimate:
    """``S(forecast, y)``; exact for finite-support forecasts, Monte Carlo otherwise."""
    _check(rule, forecast)
    n, seed = check_count("n", n), check_seed(seed)
    k = rule.base_kernel
    y = k.space.check_point(y, "y")
    sup = forecast.support()
    if sup is not None:
        pts, w = sup
        value = float(w @ k.pairwise(pts, y)) - 0.5 * float(w @ k.matrix(pts) @ w)
        return RiskEstimate.exact(value)
    stream = tuple(stream)
    a = sample(forecast, n, seed, stream=stream + (_SCORE_Y,))
    b = sample(forecast, n, seed, stream=stream + (_SCORE_Y2,))
    return RiskEstimate.from_values(k.pairwise(a, y) - 0.5 * k.pairwise(a, b))


def divergence(
    rule: ScoringRule,
    p: Distribution,
    q: Distribution,
    n: int,
    seed: int,
    *,
    stream: Sequence[int] = (),
) -> RiskEstimate:
    """Score divergence ``E_P S(Q, Y') - E_P S(P, Y')``.

    Equals ``E L(Z, Y') - 1/2 E L(Y, Y') - 1/2 E L(Z, Z')`` with ``Y, Y' ~ P``
    and ``Z, Z' ~ Q``; nonnegative whenever the kernel is negative definite.
    """
    _check(rule, p, q)
    n, seed = check_count("n", n), check_seed(seed)
    k = rule.base_kernel
    sp, sq = p.support(), q.support()
    if sp is not None and sq is not None:
        (yp, wp), (yq, wq) = sp, sq
        cross = float(wq @ _cross(k, yq, yp) @ wp)
        self_p = float(wp @ k.matrix(yp) @ wp)
        self_q = float(wq @ k.matrix(yq) @ wq)
        return RiskEstimate.exact(cross - 0.5 * self_p - 0.5 * self_q)
    stream = tuple(stream)
    y = sample(p, n, seed, stream=stream + (_DIV_Y,))
    y2 = sample(p, n, seed, stream=stream + (_DIV_Y2,))
    z = sample(q, n, seed, stream=stream + (_DIV_Z,))
    z2 = sample(q, n, seed, stream=stream + (_DIV_Z2,))
    return RiskEstimate.from_values(k.pairwise(z, y) - 0.5 * k.pairwise(y, y2) - 0.5 * k.pairwise(z, z2))


@dataclass(frozen=True)
class ProprietyEntry:
    challenger: Distribution
    divergence: RiskEstimate
    passed: bool

    def to_dict(self) -> dict:
        return {
            "challenger": self.challenger.to_dict(),
            "divergence": self.divergence.to_dict(),
            "verdict": "pass" if self.passed else "fail",
        }


def _nonnegative(est: RiskEstimate) -> bool:
    return est.value >= -3.0 * est.std_error - _ROUNDING * max(1.0, abs(est.value))


def check_propriety(
    rule: ScoringRule, p: Distribution, challengers: Sequence[Distribution], n: int, seed: int
) -> list[ProprietyEntry]:
    """Divergence of ``p`` to each challenger; a challenger passes when the
    divergence is at least ``-3`` standard errors. All must pass for the rule
    to be judged proper on this set."""
    challengers = list(challengers)
    if not challengers:
        raise InvalidParameter("challengers: need at least one challenger")
    out = []
    for j, q in enumerate(challengers):
        est = divergence(rule, p, q, n, seed, stream=(1000 + j,))
        out.append(ProprietyEntry(q, est, _nonnegative(est)))
    return out


@dataclass(frozen=True)
class ScoreReport:
    alpha: RiskEstimate
    beta: RiskEstimate
    ratio: Optional[float]
    equality_status: str
    epsilon: float
    guaranteed: bool
    seed: int
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha.to_dict(),
            "beta": self.beta.to_dict(),
            "ratio": self.ratio,
            "equality_status": self.equality_status,
            "epsilon": self.epsilon,
            "guaranteed": self.guaranteed,
            "seed": self.seed,
            "n_samples": self.n_samples,
        }


def chp_report(
    rule: ScoringRule, dist: Distribution, n: int, seed: int, *, ratio_guard: float = RATIO_GUARD
) -> ScoreReport:
    """Optimal expected score ``alpha = E S(P, Y')`` versus the single-draw
    score ``beta = E S(delta_Y, Y')``, checking ``beta == 2 alpha``.

    The two sides come from independent estimators; the identity is tested,
    not assumed.
    """
    _check(rule, dist)
    n, seed = check_count("n", n), check_seed(seed)
    k = rule.base_kernel
    sup = dist.support()
    if sup is not None:
        pts, w = sup
        L = k.matrix(pts)
        beta = RiskEstimate.exact(float(w @ L @ w))
        # E_P S(P, Y') = sum_j w_j (sum_i w_i L_ij) - 1/2 w' L w
        expected_loss = float(w @ (L @ w))
        alpha = RiskEstimate.exact(expected_loss - 0.5 * float(w @ L @ w))
    else:
        a = sample(dist, n, seed, stream=(_CHP_A,))
        obs = sample(dist, n, seed, stream=(_CHP_OBS,))
        b = sample(dist, n, seed, stream=(_CHP_B,))
        c = sample(dist, n, seed, stream=(_CHP_C,))
        alpha = RiskEstimate.from_values(k.pairwise(a, obs) - 0.5 * k.pairwise(b, c))
        y = sample(dist, n, seed, stream=(_CHP_Y,))
        y2 = sample(dist, n, seed, stream=(_CHP_Y2,))
        beta = RiskEstimate.from_values(k.pairwise(y, y2))
    eps = 3.0 * combined_se(beta, alpha, scales=[1.0, 2.0]) + _ROUNDING * max(
        1.0, abs(alpha.value), abs(beta.value)
    )
    gap = beta.value - 2.0 * alpha.value
    if not all(math.isfinite(v) for v in (alpha.value, beta.value, eps)):
        status = INCONCLUSIVE
    else:
        status = HOLDS if abs(gap) <= eps else VIOLATED
    ratio = beta.value / alpha.value if alpha.value > ratio_guard else None
    return ScoreReport(alpha, beta, ratio, status, eps, rule.guaranteed, seed, n)
