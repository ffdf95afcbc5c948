"""Distribution catalogue with block-seeded sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._rng import block_generator, blocked_draw, check_seed
from .exceptions import InvalidParameter
from .spaces import DiscreteLabels, RealLine, RealVector, SampleSpace, Sphere, space_from_dict

WEIGHT_TOL = 1e-12
#: Empirical laws with at most this many atoms are integrated exactly.
EXACT_SUPPORT_LIMIT = 4096


def _weights(name: str, weights) -> tuple[float, ...]:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise InvalidParameter(f"{name}: expected a nonempty list")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise InvalidParameter(f"{name}: must be finite and nonnegative")
    if abs(w.sum() - 1.0) > WEIGHT_TOL:
        raise InvalidParameter(f"{name}: must sum to 1 (got {w.sum()!r})")
    return tuple(float(x) for x in w)


def _finite(name: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
        raise InvalidParameter(f"{name}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise InvalidParameter(f"{name}: must be finite")
    return value


def _sd(name: str, value) -> float:
    value = _finite(name, value)
    if value <= 0:
        raise InvalidParameter(f"{name}: must be positive, got {value}")
    return value


class Distribution:
    """A samplable law on a :class:`SampleSpace`."""

    kind = ""

    @property
    def space(self) -> SampleSpace:
        raise NotImplementedError

    def support(self):
        """``(points, weights)`` for laws integrated exactly, else ``None``."""
        return None

    @property
    def is_point_mass(self) -> bool:
        sup = self.support()
        return sup is not None and len(sup[1]) == 1

    def draw(self, rng: np.random.Generator, m: int) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class FinitePMF(Distribution):
    """Probability vector over labels ``0..len(weights)-1``."""

    weights: tuple
    kind = "finite_pmf"

    def __post_init__(self):
        object.__setattr__(self, "weights", _weights("weights", self.weights))

    @property
    def space(self):
        return DiscreteLabels(len(self.weights))

    def support(self):
        w = np.asarray(self.weights)
        keep = np.flatnonzero(w > 0)
        return keep.astype(np.int64), w[keep]

    def draw(self, rng, m):
        return rng.choice(len(self.weights), size=m, p=np.asarray(self.weights)).astype(np.int64)

    def to_dict(self):
        return {"kind": self.kind, "weights": list(self.weights)}


@dataclass(frozen=True)
class GaussianR(Distribution):
    mean: float = 0.0
    sd: float = 1.0
    kind = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, "mean", _finite("mean", self.mean))
        object.__setattr__(self, "sd", _sd("sd", self.sd))

    @property
    def space(self):
        return RealLine()

    def draw(self, rng, m):
        return self.mean + self.sd * rng.standard_normal(m)

    def to_dict(self):
        return {"kind": self.kind, "mean": self.mean, "sd": self.sd}


@dataclass(frozen=True)
class GaussianRd(Distribution):
    """Isotropic Gaussian on R^d."""

    mean: tuple
    sd: float = 1.0
    kind = "gaussian_rd"

    def __post_init__(self):
        mean = tuple(_finite("mean", x) for x in self.mean)
        if len(mean) < 2:
            raise InvalidParameter("mean: gaussian_rd needs dimension >= 2")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sd", _sd("sd", self.sd))

    @property
    def space(self):
        return RealVector(len(self.mean))

    def draw(self, rng, m):
        return np.asarray(self.mean) + self.sd * rng.standard_normal((m, len(self.mean)))

    def to_dict(self):
        return {"kind": self.kind, "mean": list(self.mean), "sd": self.sd}


@dataclass(frozen=True)
class TwoPoint(Distribution):
    """Mass ``prob_a`` at ``a`` and the rest at ``b``."""

    a: float
    b: float
    prob_a: float
    kind = "two_point"

    def __post_init__(self):
        object.__setattr__(self, "a", _finite("a", self.a))
        object.__setattr__(self, "b", _finite("b", self.b))
        p = _finite("prob_a", self.prob_a)
        if not 0 <= p <= 1:
            raise InvalidParameter(f"prob_a: must lie in [0, 1], got {p}")
        object.__setattr__(self, "prob_a", p)

    @property
    def space(self):
        return RealLine()

    def support(self):
        if self.a == self.b or self.prob_a in (0.0, 1.0):
            point = self.a if self.prob_a > 0 else self.b
            return np.array([point]), np.array([1.0])
        return np.array([self.a, self.b]), np.array([self.prob_a, 1.0 - self.prob_a])

    def draw(self, rng, m):
        return np.where(rng.random(m) < self.prob_a, self.a, self.b)

    def to_dict(self):
        return {"kind": self.kind, "a": self.a, "b": self.b, "prob_a": self.prob_a}


@dataclass(frozen=True)
class MixtureGaussR(Distribution):
    """Finite Gaussian mixture on the real line; components are ``(weight, mean, sd)``."""

    components: tuple
    kind = "mixture_gaussian"

    def __post_init__(self):
        comps = [tuple(c) for c in self.components]
        if not comps or any(len(c) != 3 for c in comps):
            raise InvalidParameter("components: expected nonempty (weight, mean, sd) triples")
        w = _weights("components.weight", [c[0] for c in comps])
        comps = tuple(
            (wi, _finite("components.mean", c[1]), _sd("components.sd", c[2]))
            for wi, c in zip(w, comps)
        )
        object.__setattr__(self, "components", comps)

    @property
    def space(self):
        return RealLine()

    def draw(self, rng, m):
        comp = np.asarray(self.components)
        idx = rng.choice(len(comp), size=m, p=comp[:, 0])
        return comp[idx, 1] + comp[idx, 2] * rng.standard_normal(m)

    def to_dict(self):
        return {
            "kind": self.kind,
            "components": [{"weight": w, "mean": mu, "sd": s} for w, mu, s in self.components],
        }


@dataclass(frozen=True)
class SphereUniform(Distribution):
    d: int
    kind = "sphere_uniform"

    def __post_init__(self):
        Sphere(self.d)
        object.__setattr__(self, "d", int(self.d))

    @property
    def space(self):
        return Sphere(self.d)

    def draw(self, rng, m):
        z = rng.standard_normal((m, self.d))
        return z / np.linalg.norm(z, axis=1, keepdims=True)

    def to_dict(self):
        return {"kind": self.kind, "d": self.d}


@dataclass(frozen=True, eq=False)
class Empirical(Distribution):
    """Uniform law over a list of points (repeats allowed).

    A single point gives the Dirac measure at that point.
    """

    points: np.ndarray
    point_space: SampleSpace
    kind = "empirical"

    def __post_init__(self):
        pts = np.array(self.point_space.check_points(self.points), copy=True)
        if len(pts) == 0:
            raise InvalidParameter("points: an empirical law needs at least one point")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def space(self):
        return self.point_space

    def support(self):
        if len(self.points) > EXACT_SUPPORT_LIMIT:
            return None
        uniq, inverse = np.unique(self.points, axis=0, return_inverse=True)
        weights = np.bincount(inverse.reshape(-1), minlength=len(uniq)) / len(self.points)
        return uniq, weights

    def draw(self, rng, m):
        return self.points[rng.integers(0, len(self.points), size=m)]

    def to_dict(self):
        return {"kind": self.kind, "space": self.point_space.to_dict(), "points": self.points.tolist()}


def point_mass(y, space: SampleSpace) -> Empirical:
    """Dirac measure at ``y``."""
    return Empirical(np.asarray(space.check_point(y))[None, ...], space)


def sample(dist: Distribution, n: int, seed: int, *, stream: Sequence[int] = (), n_jobs: int = 1) -> np.ndarray:
    """``n`` i.i.d. draws from ``dist``.

    Output is a pure function of ``(dist, n, seed, stream)``; ``n_jobs``
    fans blocks out over threads without changing a single byte.
    """
    return blocked_draw(dist.draw, n, seed, stream, n_jobs)


_DIST_KEYS = {
    "finite_pmf": {"weights"},
    "gaussian": {"mean", "sd"},
    "gaussian_rd": {"mean", "sd"},
    "two_point": {"a", "b", "prob_a"},
    "mixture_gaussian": {"components"},
    "sphere_uniform": {"d"},
    "empirical": {"points"},
}


def distribution_from_dict(obj: dict, space: SampleSpace | None = None) -> Distribution:
    """Parse the JSON form; ``space`` is needed for empirical laws without one."""
    if not isinstance(obj, dict):
        raise InvalidParameter(f"distribution: expected an object, got {obj!r}")
    kind = obj.get("kind")
    if kind not in _DIST_KEYS:
        raise InvalidParameter(f"distribution.kind: unknown distribution {kind!r}")
    allowed = _DIST_KEYS[kind] | {"kind"} | ({"space"} if kind == "empirical" else set())
    unknown = set(obj) - allowed
    if unknown:
        raise InvalidParameter(f"distribution: unknown field(s) {sorted(unknown)} for {kind!r}")
    missing = _DIST_KEYS[kind] - set(obj)
    if missing:
        raise InvalidParameter(f"distribution: missing field(s) {sorted(missing)} for {kind!r}")
    if kind == "finite_pmf":
        return FinitePMF(obj["weights"])
    if kind == "gaussian":
        return GaussianR(obj["mean"], obj["sd"])
    if kind == "gaussian_rd":
        return GaussianRd(tuple(obj["mean"]), obj["sd"])
    if kind == "two_point":
        return TwoPoint(obj["a"], obj["b"], obj["prob_a"])
    if kind == "mixture_gaussian":
        comps = []
        for i, c in enumerate(obj["components"]):
            if not isinstance(c, dict) or set(c) != {"weight", "mean", "sd"}:
                raise InvalidParameter(f"distribution.components[{i}]: expected weight, mean, sd")
            comps.append((c["weight"], c["mean"], c["sd"]))
        return MixtureGaussR(tuple(comps))
    if kind == "sphere_uniform":
        return SphereUniform(obj["d"])
    if "space" in obj:
        space = space_from_dict(obj["space"])
    if space is None:
        raise InvalidParameter("distribution.space: an empirical law needs a space")
    return Empirical(np.asarray(obj["points"]), space)


def random_distribution(space: SampleSpace, seed: int, stream: Sequence[int] = ()) -> Distribution:
    """A random member of the catalogue on ``space`` (for propriety sweeps).

    Discrete: Dirichlet(1) pmf. Real line: Gaussian, two-point or two-component
    mixture. R^d: isotropic Gaussian. Sphere: empirical law on 8 random points.
    """
    rng = block_generator(check_seed(seed), tuple(stream), 0)
    if isinstance(space, DiscreteLabels):
        w = rng.dirichlet(np.ones(space.label_count))
        return FinitePMF(tuple(w / w.sum()))
    if isinstance(space, RealLine):
        choice = int(rng.integers(0, 3))
        if choice == 0:
            return GaussianR(float(rng.normal()), float(np.exp(0.5 * rng.normal())))
        if choice == 1:
            a, b = rng.normal(size=2) * 2.0
            return TwoPoint(float(a), float(b), float(rng.uniform(0.1, 0.9)))
        w = float(rng.uniform(0.2, 0.8))
        m1, m2 = rng.normal(size=2) * 2.0
        s1, s2 = np.exp(0.5 * rng.normal(size=2))
        return MixtureGaussR(((w, float(m1), float(s1)), (1.0 - w, float(m2), float(s2))))
    if isinstance(space, RealVector):
        return GaussianRd(tuple(rng.normal(size=space.d)), float(np.exp(0.5 * rng.normal())))
    if isinstance(space, Sphere):
        z = rng.standard_normal((8, space.d))
        return Empirical(z / np.linalg.norm(z, axis=1, keepdims=True), space)
    raise InvalidParameter(f"space: no random distributions on {space!r}")
