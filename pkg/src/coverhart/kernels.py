"""Loss-kernel catalogue, negative-definiteness regions and the cone combinator.

Kernels outside their negative-definite region are still built; they just
carry ``certified_negdef=False`` so counterexample studies can use them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .exceptions import InvalidParameter, SpaceMismatch
from .spaces import (
    INF,
    DiscreteLabels,
    RealLine,
    RealVector,
    SampleSpace,
    Sphere,
    _format_p,
    parse_p,
    space_from_dict,
)

# Above this inner product the chord formula replaces arccos (and below its
# negative, the antipodal chord) to avoid cancellation near +-1.
_CHORD_SWITCH = 0.99


def _positive(name: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
        raise InvalidParameter(f"{name}: expected a number, got {value!r}")
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise InvalidParameter(f"{name}: must be a finite positive number, got {value!r}")
    return value


@dataclass(frozen=True)
class Misclassification:
    name = "misclassification"


@dataclass(frozen=True)
class PowerDistance:
    """``|y - y'|**q`` on the real line."""

    q: float
    name = "power_distance"


@dataclass(frozen=True)
class LpPower:
    """``||y - y'||_p**q`` on R^d; ``p`` may be :data:`INF`."""

    p: float
    q: float
    name = "lp_power"


@dataclass(frozen=True)
class Geodesic:
    """Great-circle distance on the unit sphere."""

    name = "geodesic"


@dataclass(frozen=True)
class ConeCombination:
    terms: tuple  # of (weight, KernelSpec)
    name = "cone"


Family = Union[Misclassification, PowerDistance, LpPower, Geodesic, ConeCombination]


@dataclass(frozen=True)
class KernelSpec:
    space: SampleSpace
    family: Family

    def to_dict(self) -> dict:
        fam = self.family
        out: dict = {"space": self.space.to_dict(), "family": fam.name}
        if isinstance(fam, PowerDistance):
            out["q"] = fam.q
        elif isinstance(fam, LpPower):
            out["p"] = _format_p(fam.p)
            out["q"] = fam.q
        elif isinstance(fam, ConeCombination):
            out["terms"] = [{"weight": w, "kernel": s.to_dict()} for w, s in fam.terms]
        return out


_KERNEL_KEYS = {
    "misclassification": set(),
    "power_distance": {"q"},
    "lp_power": {"p", "q"},
    "geodesic": set(),
    "cone": {"terms"},
}


def spec_from_dict(obj: dict, space: SampleSpace | None = None) -> KernelSpec:
    """Parse the JSON form of a kernel spec.

    ``space`` supplies a default for nested cone terms that omit their own.
    Unknown keys raise :class:`InvalidParameter` naming the key.
    """
    if not isinstance(obj, dict):
        raise InvalidParameter(f"kernel: expected an object, got {obj!r}")
    family = obj.get("family")
    if family not in _KERNEL_KEYS:
        raise InvalidParameter(f"kernel.family: unknown family {family!r}")
    unknown = set(obj) - _KERNEL_KEYS[family] - {"space", "family"}
    if unknown:
        raise InvalidParameter(f"kernel: unknown field(s) {sorted(unknown)} for family {family!r}")
    missing = _KERNEL_KEYS[family] - set(obj)
    if missing:
        raise InvalidParameter(f"kernel: missing field(s) {sorted(missing)} for family {family!r}")

    if "space" in obj:
        space_obj = dict(obj["space"])
        # a real_vector space without p inherits the kernel's exponent
        if family == "lp_power" and space_obj.get("kind") == "real_vector" and "p" not in space_obj:
            space_obj["p"] = obj["p"]
        space = space_from_dict(space_obj)
    elif space is None:
        raise InvalidParameter("kernel.space: missing")
    elif family == "lp_power" and isinstance(space, RealVector):
        space = RealVector(space.d, parse_p(obj["p"]))

    if family == "misclassification":
        fam = Misclassification()
    elif family == "power_distance":
        fam = PowerDistance(obj["q"])
    elif family == "lp_power":
        fam = LpPower(parse_p(obj["p"]), obj["q"])
    elif family == "geodesic":
        fam = Geodesic()
    else:
        terms = []
        for i, term in enumerate(obj["terms"]):
            if not isinstance(term, dict) or set(term) != {"weight", "kernel"}:
                raise InvalidParameter(f"kernel.terms[{i}]: expected {{'weight', 'kernel'}}")
            terms.append((term["weight"], spec_from_dict(term["kernel"], space)))
        fam = ConeCombination(tuple(terms))
    return KernelSpec(space, fam)


def negdef_region(space: SampleSpace, family: Family) -> bool:
    """Whether ``(space, family)`` lies in the catalogue's negative-definite region.

    Pure function of the parameters; cone combinations are certified iff all
    terms are.
    """
    if isinstance(family, Misclassification):
        return isinstance(space, DiscreteLabels)
    if isinstance(family, Geodesic):
        return isinstance(space, Sphere)
    if isinstance(family, PowerDistance):
        return isinstance(space, RealLine) and 0 < family.q <= 2
    if isinstance(family, LpPower):
        if not isinstance(space, RealVector):
            return False
        p, q = family.p, family.q
        low = 0 < p <= 2 and 0 < q <= p
        if space.d == 2:
            return low or (p > 2 and 0 < q <= 1)
        return low
    if isinstance(family, ConeCombination):
        return all(negdef_region(s.space, s.family) for _, s in family.terms)
    return False


def metric_region(space: SampleSpace, family: Family) -> bool:
    if isinstance(family, (Misclassification, Geodesic)):
        return True
    if isinstance(family, PowerDistance):
        return family.q <= 1
    if isinstance(family, LpPower):
        return family.q <= 1 and family.p >= 1
    if isinstance(family, ConeCombination):
        return all(metric_region(s.space, s.family) for _, s in family.terms)
    return False


@dataclass(frozen=True)
class LossKernel:
    """A loss ``L(y, y')`` on a declared space with certification flags.

    Build with :func:`make_kernel`; calling the kernel evaluates it on a
    single pair of points.
    """

    spec: KernelSpec
    certified_negdef: bool
    certified_metric: bool
    _parts: tuple = field(default=(), repr=False, compare=False)

    @property
    def space(self) -> SampleSpace:
        return self.spec.space

    @property
    def name(self) -> str:
        fam = self.spec.family
        if isinstance(fam, PowerDistance):
            return f"power_distance(q={fam.q:g})"
        if isinstance(fam, LpPower):
            return f"lp_power(p={_format_p(fam.p)}, q={fam.q:g})"
        if isinstance(fam, ConeCombination):
            inner = " + ".join(f"{w:g}*{k.name}" for w, k in self._parts)
            return f"cone({inner})"
        return fam.name

    def __call__(self, y, y2) -> float:
        return evaluate(self, y, y2)

    def pairwise(self, a, b) -> np.ndarray:
        """Elementwise losses between batches ``a`` and ``b`` (broadcasting)."""
        return self._raw(a, b)

    def matrix(self, points) -> np.ndarray:
        """Full ``n x n`` loss matrix over a batch of points."""
        pts = self.space.check_points(points)
        return self._raw(pts[:, None, ...], pts[None, :, ...])

    def _raw(self, a, b) -> np.ndarray:
        fam = self.spec.family
        if isinstance(fam, Misclassification):
            return np.not_equal(a, b).astype(float)
        if isinstance(fam, PowerDistance):
            diff = np.subtract(a, b, dtype=float)
            if fam.q == 1:
                return np.abs(diff)
            if fam.q == 2:
                return diff * diff
            return np.abs(diff) ** fam.q
        if isinstance(fam, LpPower):
            absdiff = np.abs(np.subtract(a, b, dtype=float))
            p, q = fam.p, fam.q
            if p == INF:
                norm = absdiff.max(axis=-1)
            elif p == 1:
                norm = absdiff.sum(axis=-1)
            elif p == 2:
                norm = np.sqrt((absdiff * absdiff).sum(axis=-1))
            else:
                norm = (absdiff ** p).sum(axis=-1) ** (1.0 / p)
            return norm if q == 1 else norm ** q
        if isinstance(fam, Geodesic):
            a = np.asarray(a, dtype=float)
            b = np.asarray(b, dtype=float)
            inner = (a * b).sum(axis=-1)
            chord = np.sqrt(((a - b) ** 2).sum(axis=-1))
            antichord = np.sqrt(((a + b) ** 2).sum(axis=-1))
            with np.errstate(invalid="ignore"):
                out = np.arccos(np.clip(inner, -1.0, 1.0))
                near = inner > _CHORD_SWITCH
                far = inner < -_CHORD_SWITCH
                out = np.where(near, 2.0 * np.arcsin(np.minimum(chord / 2.0, 1.0)), out)
                out = np.where(
                    far, math.pi - 2.0 * np.arcsin(np.minimum(antichord / 2.0, 1.0)), out
                )
            return out
        total = None
        for w, k in self._parts:
            term = w * k._raw(a, b)
            total = term if total is None else total + term
        return total


def make_kernel(spec: KernelSpec) -> LossKernel:
    """Validate ``spec`` and attach its certification flags."""
    space, fam = spec.space, spec.family
    if not isinstance(space, SampleSpace):
        raise InvalidParameter(f"space: expected a SampleSpace, got {space!r}")
    parts: tuple = ()
    if isinstance(fam, Misclassification):
        if not isinstance(space, DiscreteLabels):
            raise SpaceMismatch("misclassification loss needs a discrete label space")
    elif isinstance(fam, PowerDistance):
        if not isinstance(space, RealLine):
            raise SpaceMismatch("power_distance needs the real line")
        fam = PowerDistance(_positive("q", fam.q))
    elif isinstance(fam, LpPower):
        if not isinstance(space, RealVector):
            raise SpaceMismatch("lp_power needs a real_vector space")
        p = parse_p(fam.p)
        if p != INF:
            p = _positive("p", p)
        fam = LpPower(p, _positive("q", fam.q))
        if fam.p != space.p:
            raise SpaceMismatch(f"lp_power p={_format_p(fam.p)} differs from space p={_format_p(space.p)}")
    elif isinstance(fam, Geodesic):
        if not isinstance(space, Sphere):
            raise SpaceMismatch("geodesic distance needs a sphere")
    elif isinstance(fam, ConeCombination):
        if not fam.terms:
            raise InvalidParameter("terms: a cone combination needs at least one term")
        built = []
        for i, (w, child) in enumerate(fam.terms):
            if isinstance(w, bool) or not isinstance(w, (int, float, np.floating, np.integer)):
                raise InvalidParameter(f"terms[{i}].weight: expected a number, got {w!r}")
            w = float(w)
            if not (w >= 0 and math.isfinite(w)):
                raise InvalidParameter(f"terms[{i}].weight: must be finite and >= 0, got {w!r}")
            if not child.space.same_domain(space):
                raise SpaceMismatch(f"terms[{i}]: kernel space differs from the combination's space")
            built.append((w, make_kernel(child)))
        if not any(w > 0 for w, _ in built):
            raise InvalidParameter("terms: at least one weight must be positive")
        parts = tuple(built)
        fam = ConeCombination(tuple((w, k.spec) for w, k in built))
    else:
        raise InvalidParameter(f"family: unknown kernel family {fam!r}")

    spec = KernelSpec(space, fam)
    if parts:
        negdef = all(k.certified_negdef for _, k in parts)
        metric = all(k.certified_metric for _, k in parts)
    else:
        negdef = negdef_region(space, fam)
        metric = metric_region(space, fam)
    return LossKernel(spec, negdef, metric, parts)


def evaluate(k: LossKernel, y, y2) -> float:
    """Exact loss between two single points of ``k``'s space."""
    a = k.space.check_point(y, "y")
    b = k.space.check_point(y2, "y2")
    return float(k._raw(a, b))


def cone_combine(terms: Sequence[tuple[float, LossKernel]]) -> LossKernel:
    """Nonnegative combination ``sum_i c_i L_i`` of kernels on one space."""
    terms = list(terms)
    if not terms:
        raise InvalidParameter("terms: a cone combination needs at least one term")
    space = terms[0][1].space
    for i, (_, k) in enumerate(terms):
        if not isinstance(k, LossKernel):
            raise InvalidParameter(f"terms[{i}]: expected a LossKernel, got {k!r}")
    return make_kernel(KernelSpec(space, ConeCombination(tuple((w, k.spec) for w, k in terms))))


def kernel_from_dict(obj: dict) -> LossKernel:
    return make_kernel(spec_from_dict(obj))


# Convenience constructors used throughout tests and the CLI.

def misclassification(labels: int) -> LossKernel:
    return make_kernel(KernelSpec(DiscreteLabels(labels), Misclassification()))


def power_distance(q: float) -> LossKernel:
    return make_kernel(KernelSpec(RealLine(), PowerDistance(q)))


def lp_power(d: int, p: float, q: float) -> LossKernel:
    return make_kernel(KernelSpec(RealVector(d, p), LpPower(p, q)))


def geodesic(d: int) -> LossKernel:
    return make_kernel(KernelSpec(Sphere(d), Geodesic()))
