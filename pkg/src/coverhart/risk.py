"""Bayes risk, single-draw risk and the Cover-Hart report.

``alpha`` is the Bayes risk ``inf_y E L(y, Y')`` and ``beta`` the risk of
predicting with one independent draw, ``E L(Y, Y')``. Members of the
Cover-Hart class satisfy ``alpha <= beta <= 2 * alpha`` for every law.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._rng import check_count, check_seed
from .distributions import Distribution, GaussianR, GaussianRd, SphereUniform, sample
from .exceptions import InvalidParameter, SpaceMismatch
from .kernels import ConeCombination, Geodesic, LossKernel, LpPower, PowerDistance
from .optimize import coordinate_descent, minimize_1d, tangent_pattern_search
from .spaces import DiscreteLabels, RealLine, RealVector, Sphere

# Substream tags under a common seed; alpha and beta never share draws.
BETA_Y_STREAM = 0
BETA_Y2_STREAM = 1
ALPHA_STREAM = 2

RATIO_GUARD = 1e-10
CLOSED_FORM = "closed_form"
MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class RiskEstimate:
    value: float
    std_error: float
    n_samples: int
    method: str

    def __post_init__(self):
        if self.method not in (CLOSED_FORM, MONTE_CARLO):
            raise InvalidParameter(f"method: unknown estimate method {self.method!r}")
        if self.method == CLOSED_FORM and self.std_error != 0:
            raise InvalidParameter("std_error: closed-form estimates carry no standard error")
        if self.std_error < 0:
            raise InvalidParameter("std_error: must be nonnegative")

    @classmethod
    def exact(cls, value: float) -> "RiskEstimate":
        return cls(float(value), 0.0, 0, CLOSED_FORM)

    @classmethod
    def from_values(cls, values: np.ndarray) -> "RiskEstimate":
        """Sample mean with its standard error."""
        n = len(values)
        se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(float(values.mean()), se, n, MONTE_CARLO)

    def to_dict(self) -> dict:
        return asdict(self)


def combined_se(*estimates: RiskEstimate, scales=None) -> float:
    """Standard error of ``sum(scale_i * est_i)`` for independent estimates."""
    scales = scales or [1.0] * len(estimates)
    return math.sqrt(sum((s * e.std_error) ** 2 for s, e in zip(scales, estimates)))


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs for the Bayes-act search.

    ``x_tol=None`` means ``1e-6`` times the sample spread.
    """

    grid_points: int = 257
    x_tol: Optional[float] = None
    restarts: int = 8
    coord_grid_points: int = 65
    max_sweeps: int = 25
    sweep_tol: float = 1e-10
    sphere_candidates: int = 512

    def __post_init__(self):
        for name in ("grid_points", "restarts", "coord_grid_points", "max_sweeps", "sphere_candidates"):
            check_count(name, getattr(self, name))
        if self.grid_points < 3 or self.coord_grid_points < 3:
            raise InvalidParameter("grid_points: need at least 3 grid nodes")
        if self.x_tol is not None and not (self.x_tol > 0 and math.isfinite(self.x_tol)):
            raise InvalidParameter(f"x_tol: must be positive, got {self.x_tol!r}")
        if not self.sweep_tol >= 0:
            raise InvalidParameter("sweep_tol: must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "OptimizerConfig":
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidParameter(f"optimizer: unknown field(s) {sorted(unknown)}")
        return cls(**obj)


class BayesAct(BaseEstimator):
    """Minimizer of the expected loss ``y -> sum_i w_i L(y, Y_i)``.

    Fit on draws (or atoms with ``sample_weight``) from the target law; the
    objective is then a fixed deterministic function of ``y`` (common random
    numbers), and :meth:`predict` returns the act for every input row.

    Parameters
    ----------
    kernel : LossKernel
    config : OptimizerConfig, optional
    """

    def __init__(self, kernel: LossKernel, config: Optional[OptimizerConfig] = None):
        self.kernel = kernel
        self.config = config

    def _objective(self, y) -> float:
        vals = self.kernel.pairwise(y, self.points_)
        if self.weights_ is None:
            return float(vals.mean())
        return float(vals @ self.weights_)

    def objective(self, y) -> float:
        """Expected loss of act ``y`` under the fitted points."""
        check_is_fitted(self, "bayes_act_")
        return self._objective(self.kernel.space.check_point(y, "y"))

    def fit(self, Y, sample_weight=None):
        cfg = self.config or OptimizerConfig()
        space = self.kernel.space
        pts = space.check_points(Y, "Y")
        if len(pts) == 0:
            raise InvalidParameter("Y: need at least one point")
        if sample_weight is not None:
            w = np.asarray(sample_weight, dtype=float)
            if w.shape != (len(pts),) or np.any(w < 0) or not w.sum() > 0:
                raise InvalidParameter("sample_weight: expected nonnegative weights, one per point")
            w = w / w.sum()
        else:
            w = None
        self.points_, self.weights_ = pts, w

        if isinstance(space, DiscreteLabels):
            act, risk = self._fit_discrete(space)
        elif isinstance(space, RealLine):
            act, risk = self._fit_line(pts, w, cfg)
        elif isinstance(space, RealVector):
            act, risk = self._fit_vector(pts, w, cfg)
        elif isinstance(space, Sphere):
            act, risk = self._fit_sphere(pts, w, cfg)
        else:  # pragma: no cover - all spaces handled above
            raise SpaceMismatch(f"no Bayes-act search for {space!r}")
        self.bayes_act_ = act
        self.risk_ = risk
        return self

    def predict(self, X):
        check_is_fitted(self, "bayes_act_")
        n = len(X)
        act = np.asarray(self.bayes_act_)
        return np.repeat(act[None, ...], n, axis=0)

    def _fit_discrete(self, space):
        vals = [self._objective(np.int64(k)) for k in range(space.label_count)]
        k = int(np.argmin(vals))
        return k, float(vals[k])

    def _fit_line(self, pts, w, cfg):
        lo, hi = float(pts.min()), float(pts.max())
        spread = hi - lo
        if spread == 0:
            return lo, self._objective(lo)
        x_tol = cfg.x_tol if cfg.x_tol is not None else 1e-6 * spread
        atoms = pts if w is not None else ()
        x, v = minimize_1d(
            self._objective, lo - spread, hi + spread, cfg.grid_points, x_tol, candidates=atoms
        )
        return x, v

    def _fit_vector(self, pts, w, cfg):
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        spread = hi - lo
        if not np.any(spread > 0):
            return pts[0].copy(), self._objective(pts[0])
        x_tol = np.full_like(spread, cfg.x_tol) if cfg.x_tol is not None else np.full_like(spread, 1e-6 * spread.max())
        levels = [0.5] + list(np.linspace(0.05, 0.95, cfg.restarts - 1)) if cfg.restarts > 1 else [0.5]
        best = None
        for level in levels:
            start = _weighted_quantile(pts, w, level)
            x, v = coordinate_descent(
                self._objective, start, lo - spread, hi + spread,
                cfg.coord_grid_points, x_tol, cfg.max_sweeps, cfg.sweep_tol,
            )
            if best is None or v < best[1]:
                best = (x, v)
        if w is not None:
            for p in pts:
                v = self._objective(p)
                if v < best[1]:
                    best = (p.copy(), v)
        return best

    def _fit_sphere(self, pts, w, cfg):
        pool = pts if w is not None else pts[: cfg.sphere_candidates]
        vals = [self._objective(c) for c in pool]
        i = int(np.argmin(vals))
        x_tol = cfg.x_tol if cfg.x_tol is not None else 1e-6
        y, v = tangent_pattern_search(self._objective, pool[i], 0.25, x_tol)
        if vals[i] <= v:
            return pool[i].copy(), float(vals[i])
        return y, v


def _weighted_quantile(pts: np.ndarray, w, level: float) -> np.ndarray:
    if w is None:
        return np.quantile(pts, level, axis=0)
    out = np.empty(pts.shape[1])
    for j in range(pts.shape[1]):
        order = np.argsort(pts[:, j], kind="stable")
        cum = np.cumsum(w[order])
        out[j] = pts[order[min(np.searchsorted(cum, level), len(order) - 1)], j]
    return out


def _check_pair(k: LossKernel, dist: Distribution):
    if not isinstance(k, LossKernel):
        raise InvalidParameter(f"kernel: expected a LossKernel, got {k!r}")
    if not k.space.accepts(dist.space):
        raise SpaceMismatch(f"distribution on {dist.space!r} does not fit kernel space {k.space!r}")


def _abs_normal_moment(q: float) -> float:
    """``E|Z|**q`` for a standard normal ``Z``."""
    return 2.0 ** (q / 2.0) * math.exp(math.lgamma((q + 1.0) / 2.0)) / math.sqrt(math.pi)


def closed_form_beta(k: LossKernel, dist: Distribution) -> Optional[float]:
    """Exact ``E L(Y, Y')`` where one is known, else ``None``."""
    sup = dist.support()
    if sup is not None:
        pts, w = sup
        return float(w @ k.matrix(pts) @ w)
    fam = k.spec.family
    if isinstance(fam, ConeCombination):
        parts = [closed_form_beta(child, dist) for _, child in k._parts]
        if any(p is None for p in parts):
            return None
        return float(sum(wt * p for (wt, _), p in zip(k._parts, parts)))
    if isinstance(fam, PowerDistance) and isinstance(dist, GaussianR):
        # Y - Y' ~ N(0, 2 sd^2)
        return (math.sqrt(2.0) * dist.sd) ** fam.q * _abs_normal_moment(fam.q)
    if isinstance(fam, LpPower) and fam.p == 2 and isinstance(dist, GaussianRd):
        # ||Y - Y'||_2 = sqrt(2) sd * chi_d
        d, q = len(dist.mean), fam.q
        chi_moment = 2.0 ** (q / 2.0) * math.exp(math.lgamma((d + q) / 2.0) - math.lgamma(d / 2.0))
        return (math.sqrt(2.0) * dist.sd) ** q * chi_moment
    if isinstance(fam, Geodesic) and isinstance(dist, SphereUniform):
        return math.pi / 2.0
    return None


def estimate_beta(
    k: LossKernel, dist: Distribution, n: int, seed: int, *, method: str = "auto", n_jobs: int = 1
) -> RiskEstimate:
    """Single-draw risk ``E L(Y, Y')``.

    ``method="auto"`` uses a closed form when one exists; ``"monte_carlo"``
    forces ``n`` independent pairs.
    """
    _check_pair(k, dist)
    n = check_count("n", n)
    seed = check_seed(seed)
    if method not in ("auto", MONTE_CARLO):
        raise InvalidParameter(f"method: expected 'auto' or 'monte_carlo', got {method!r}")
    if method == "auto":
        value = closed_form_beta(k, dist)
        if value is not None:
            return RiskEstimate.exact(value)
    y = sample(dist, n, seed, stream=(BETA_Y_STREAM,), n_jobs=n_jobs)
    y2 = sample(dist, n, seed, stream=(BETA_Y2_STREAM,), n_jobs=n_jobs)
    return RiskEstimate.from_values(k.pairwise(y, y2))


def estimate_alpha(
    k: LossKernel,
    dist: Distribution,
    n: int,
    seed: int,
    opt: Optional[OptimizerConfig] = None,
    *,
    method: str = "auto",
    n_jobs: int = 1,
):
    """Bayes act and Bayes risk ``inf_y E L(y, Y')``.

    Laws with a small finite support are integrated exactly; everything else
    uses one fixed sample of size ``n`` for every candidate act. Returns
    ``(bayes_act, RiskEstimate)``.
    """
    _check_pair(k, dist)
    n = check_count("n", n)
    seed = check_seed(seed)
    if method not in ("auto", MONTE_CARLO):
        raise InvalidParameter(f"method: expected 'auto' or 'monte_carlo', got {method!r}")
    sup = dist.support()
    if sup is not None and len(sup[1]) == 1:
        act = sup[0][0]
        return act, RiskEstimate.exact(0.0)
    est = BayesAct(k, opt)
    if method == "auto" and sup is not None:
        est.fit(sup[0], sample_weight=sup[1])
        return est.bayes_act_, RiskEstimate.exact(est.risk_)
    pts = sample(dist, n, seed, stream=(ALPHA_STREAM,), n_jobs=n_jobs)
    est.fit(pts)
    return est.bayes_act_, RiskEstimate.from_values(k.pairwise(est.bayes_act_, pts))


SATISFIED, VIOLATED, INCONCLUSIVE = "satisfied", "violated", "inconclusive"


@dataclass(frozen=True)
class CoverHartReport:
    alpha: RiskEstimate
    beta: RiskEstimate
    bayes_act: object
    ratio: Optional[float]
    bound_status: str
    epsilon: float
    certified: bool
    seed: int
    n_samples: int
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha.to_dict(),
            "beta": self.beta.to_dict(),
            "bayes_act": _jsonable_point(self.bayes_act),
            "ratio": self.ratio,
            "bound_status": self.bound_status,
            "epsilon": self.epsilon,
            "certified": self.certified,
            "seed": self.seed,
            "n_samples": self.n_samples,
            "optimizer": self.optimizer.to_dict(),
        }


def _jsonable_point(y):
    arr = np.asarray(y)
    if arr.ndim == 0:
        return arr.item()
    return arr.tolist()


def bound_status(alpha: float, beta: float, eps: float) -> str:
    """Classify ``alpha <= beta <= 2 alpha`` up to slack ``eps``."""
    if not all(math.isfinite(v) for v in (alpha, beta, eps)):
        return INCONCLUSIVE
    if alpha - eps <= beta <= 2.0 * alpha + eps:
        return SATISFIED
    return VIOLATED


def cover_hart_report(
    k: LossKernel,
    dist: Distribution,
    n: int,
    seed: int,
    opt: Optional[OptimizerConfig] = None,
    *,
    ratio_guard: float = RATIO_GUARD,
    alpha_method: str = "auto",
    beta_method: str = "auto",
    n_jobs: int = 1,
) -> CoverHartReport:
    """Estimate alpha and beta on disjoint substreams and check the bound.

    The slack is three combined standard errors plus ``ratio_guard`` times
    the scale of the risks, so exact (closed-form) inputs are judged up to
    rounding. A ``violated`` status on an uncertified kernel is an expected
    outcome, not an error.
    """
    opt = opt or OptimizerConfig()
    act, alpha = estimate_alpha(k, dist, n, seed, opt, method=alpha_method, n_jobs=n_jobs)
    beta = estimate_beta(k, dist, n, seed, method=beta_method, n_jobs=n_jobs)
    eps = 3.0 * combined_se(alpha, beta) + ratio_guard * max(1.0, abs(alpha.value), abs(beta.value))
    ratio = beta.value / alpha.value if alpha.value > ratio_guard else None
    return CoverHartReport(
        alpha=alpha,
        beta=beta,
        bayes_act=act,
        ratio=ratio,
        bound_status=bound_status(alpha.value, beta.value, eps),
        epsilon=eps,
        certified=k.certified_negdef or k.certified_metric,
        seed=check_seed(seed),
        n_samples=int(n),
        optimizer=opt,
    )
