"""Numerical membership certificates: metric axioms and negative definiteness.

A ``pass`` verdict means "not falsified on these points"; it is evidence,
never a proof.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._rng import block_generator, check_count, check_seed
from .exceptions import InvalidParameter, TooManyPoints
from .kernels import LossKernel
from .spaces import DiscreteLabels, RealLine, RealVector, SampleSpace, Sphere

MAX_METRIC_POINTS = 512
MAX_NEGDEF_POINTS = 256
PASS, FAIL = "pass", "fail"


def _point_list(points) -> list:
    return np.asarray(points).tolist()


@dataclass(frozen=True)
class MetricCertificate:
    points_tested: int
    verdict: str
    worst_triangle_slack: float
    witness: Optional[tuple]
    tolerance: float
    violation: Optional[str] = None  # "triangle", "symmetry" or "self_distance"

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        return {
            "points_tested": self.points_tested,
            "verdict": self.verdict,
            "label": "not falsified" if self.passed else "falsified",
            "worst_triangle_slack": self.worst_triangle_slack,
            "witness": None if self.witness is None else [_point_list(p) for p in self.witness],
            "violation": self.violation,
            "tolerance": self.tolerance,
        }


@dataclass(frozen=True)
class NegDefCertificate:
    points_tested: int
    verdict: str
    max_centered_eigenvalue: float
    witness_coefficients: Optional[np.ndarray]
    tolerance: float
    points: Optional[np.ndarray] = None

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def quadratic_form(self, k: LossKernel) -> float:
        """Recompute ``sum_ij a_i a_j L(y_i, y_j)`` from the stored witness."""
        if self.witness_coefficients is None:
            raise InvalidParameter("witness: pass certificates carry no witness")
        a = self.witness_coefficients
        return float(a @ k.matrix(self.points) @ a)

    def to_dict(self) -> dict:
        return {
            "points_tested": self.points_tested,
            "verdict": self.verdict,
            "label": "not falsified" if self.passed else "falsified",
            "max_centered_eigenvalue": self.max_centered_eigenvalue,
            "witness_coefficients": None
            if self.witness_coefficients is None
            else self.witness_coefficients.tolist(),
            "witness_points": None if self.witness_coefficients is None else _point_list(self.points),
            "tolerance": self.tolerance,
        }


def default_metric_tolerance(L: np.ndarray) -> float:
    return 1e-10 * max(1.0, float(np.abs(L).max()))


def default_negdef_tolerance(L: np.ndarray) -> float:
    return 1e-8 * len(L) * float(np.abs(L).max())


def _prepare(k: LossKernel, points, limit: int, minimum: int):
    pts = k.space.check_points(points)
    if len(pts) < minimum:
        raise InvalidParameter(f"points: need at least {minimum} point(s), got {len(pts)}")
    if len(pts) > limit:
        raise TooManyPoints(f"points: at most {limit} allowed, got {len(pts)}")
    return pts, k.matrix(pts)


def check_metric(k: LossKernel, points, tolerance: Optional[float] = None) -> MetricCertificate:
    """Exhaustive scan of self-distance, symmetry and every ordered triangle."""
    pts, L = _prepare(k, points, MAX_METRIC_POINTS, 1)
    n = len(pts)
    tol = default_metric_tolerance(L) if tolerance is None else float(tolerance)
    if tol < 0:
        raise InvalidParameter("tolerance: must be nonnegative")

    # slack[j, i, l] = L[i, j] + L[j, l] - L[i, l]  (j is the middle point)
    worst, arg = np.inf, None
    for j in range(n):
        slack = L[:, j][:, None] + L[j, :][None, :] - L
        idx = int(np.argmin(slack))
        if slack.flat[idx] < worst:
            worst = float(slack.flat[idx])
            arg = (idx // n, j, idx % n)

    self_dev = np.abs(np.diag(L))
    sym_dev = np.abs(L - L.T)
    violation, witness = None, None
    if worst < -tol:
        violation = "triangle"
        witness = tuple(pts[i] for i in arg)
    elif self_dev.max() > tol:
        i = int(np.argmax(self_dev))
        violation = "self_distance"
        witness = (pts[i], pts[i], pts[i])
    elif sym_dev.max() > tol:
        i, l = np.unravel_index(int(np.argmax(sym_dev)), sym_dev.shape)
        violation = "symmetry"
        witness = (pts[i], pts[l], pts[i])
    return MetricCertificate(
        points_tested=n,
        verdict=FAIL if violation else PASS,
        worst_triangle_slack=worst,
        witness=witness,
        tolerance=tol,
        violation=violation,
    )


def check_negdef(k: LossKernel, points, tolerance: Optional[float] = None) -> NegDefCertificate:
    """Eigenvalue test of the doubly centered loss matrix ``H L H``.

    ``a' L a <= 0`` for every sum-zero ``a`` exactly when ``H L H`` is
    negative semidefinite. On failure the top eigenvector, re-centered, is
    the witness.
    """
    pts, L = _prepare(k, points, MAX_NEGDEF_POINTS, 2)
    n = len(pts)
    tol = default_negdef_tolerance(L) if tolerance is None else float(tolerance)
    if tol < 0:
        raise InvalidParameter("tolerance: must be nonnegative")
    H = np.eye(n) - 1.0 / n
    M = H @ L @ H
    evals, evecs = np.linalg.eigh((M + M.T) / 2.0)
    top = float(evals[-1])
    if top <= tol:
        return NegDefCertificate(n, PASS, top, None, tol, None)
    a = evecs[:, -1] - evecs[:, -1].mean()
    a = a / np.linalg.norm(a)
    pts = np.array(pts, copy=True)
    return NegDefCertificate(n, FAIL, top, a, tol, pts)


def sample_points(space: SampleSpace, n: int, seed: int, stream=()) -> np.ndarray:
    """Random point set for certification: uniform labels, standard Gaussians,
    or normalized Gaussians on the sphere."""
    n = check_count("n", n)
    rng = block_generator(check_seed(seed), tuple(stream), 0)
    if isinstance(space, DiscreteLabels):
        return rng.integers(0, space.label_count, size=n)
    if isinstance(space, RealLine):
        return rng.standard_normal(n)
    if isinstance(space, RealVector):
        return rng.standard_normal((n, space.d))
    if isinstance(space, Sphere):
        z = rng.standard_normal((n, space.d))
        return z / np.linalg.norm(z, axis=1, keepdims=True)
    raise InvalidParameter(f"space: cannot sample points on {space!r}")


def lattice_points(d: int, side: int) -> np.ndarray:
    """Integer grid ``{0, ..., side-1}^d``; a structured probe for R^d kernels.

    Random Gaussian sets rarely expose the failure of l_p norms with p > 2
    in three or more dimensions; this grid does once ``side >= 4``.
    """
    return np.array(list(itertools.product(range(side), repeat=d)), dtype=float)
