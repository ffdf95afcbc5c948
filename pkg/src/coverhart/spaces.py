"""Sample spaces and point validation.

Points are plain numpy values: integer labels for :class:`DiscreteLabels`,
floats for :class:`RealLine`, and 1-D float arrays of length ``d`` for
:class:`RealVector` and :class:`Sphere`. Batches of points are arrays with
one extra leading axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidParameter, SpaceMismatch

#: Extended-real sentinel for the max-norm exponent.
INF = math.inf

UNIT_NORM_TOL = 1e-12


def _format_p(p: float) -> float | str:
    return "inf" if p == INF else float(p)


def parse_p(value) -> float:
    """Read an exponent that may be the string ``"inf"``."""
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "+inf"):
            return INF
        raise InvalidParameter(f"p: cannot parse {value!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidParameter(f"p: expected a number or 'inf', got {value!r}")
    return float(value)


class SampleSpace:
    """Base class for the domain a loss kernel lives on."""

    kind: str = ""
    #: Whether a single point is a vector (trailing axis) or a scalar.
    vector_valued: bool = False

    @property
    def dim(self) -> int:
        return 1

    def same_domain(self, other: "SampleSpace") -> bool:
        """True when both spaces have the same underlying point set.

        The norm exponent of :class:`RealVector` is metadata for the kernel
        and is ignored here.
        """
        return type(self) is type(other) and self.dim == other.dim

    def accepts(self, other: "SampleSpace") -> bool:
        """True when every point of ``other`` is a point of ``self``."""
        return self.same_domain(other)

    def check_points(self, points, name: str = "points") -> np.ndarray:
        raise NotImplementedError

    def check_point(self, point, name: str = "point"):
        arr = self.check_points(np.asarray(point)[None, ...], name)
        return arr[0]

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=True)
class DiscreteLabels(SampleSpace):
    """Labels ``0, 1, ..., label_count - 1``."""

    label_count: int
    kind = "discrete"

    def __post_init__(self):
        if isinstance(self.label_count, bool) or int(self.label_count) != self.label_count:
            raise InvalidParameter(f"labels: expected an integer, got {self.label_count!r}")
        if self.label_count < 1:
            raise InvalidParameter(f"labels: must be positive, got {self.label_count}")
        object.__setattr__(self, "label_count", int(self.label_count))

    @property
    def dim(self) -> int:
        return self.label_count

    def accepts(self, other: SampleSpace) -> bool:
        return isinstance(other, DiscreteLabels) and other.label_count <= self.label_count

    def check_points(self, points, name="points"):
        arr = np.asarray(points)
        if arr.ndim != 1:
            raise SpaceMismatch(f"{name}: discrete labels must be a 1-D array")
        if arr.size and not np.issubdtype(arr.dtype, np.integer):
            if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
                raise SpaceMismatch(f"{name}: labels must be integers")
        arr = arr.astype(np.int64)
        if arr.size and (arr.min() < 0 or arr.max() >= self.label_count):
            raise SpaceMismatch(f"{name}: labels must lie in [0, {self.label_count})")
        return arr

    def to_dict(self):
        return {"kind": self.kind, "labels": self.label_count}


@dataclass(frozen=True, eq=True)
class RealLine(SampleSpace):
    kind = "real_line"

    def check_points(self, points, name="points"):
        arr = np.asarray(points, dtype=float)
        if arr.ndim != 1:
            raise SpaceMismatch(f"{name}: real-line points must be a 1-D array")
        if not np.all(np.isfinite(arr)):
            raise SpaceMismatch(f"{name}: points must be finite")
        return arr

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True, eq=True)
class RealVector(SampleSpace):
    """``d``-dimensional real space, ``d >= 2``, under the l_p (quasi-)norm."""

    d: int
    p: float = 2.0
    kind = "real_vector"
    vector_valued = True

    def __post_init__(self):
        if isinstance(self.d, bool) or int(self.d) != self.d or self.d < 2:
            raise InvalidParameter(f"d: expected an integer >= 2, got {self.d!r}")
        p = parse_p(self.p)
        if not p > 0:
            raise InvalidParameter(f"p: must be positive, got {self.p!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "p", p)

    @property
    def dim(self) -> int:
        return self.d

    def check_points(self, points, name="points"):
        arr = np.asarray(points, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != self.d:
            raise SpaceMismatch(f"{name}: expected shape (n, {self.d}), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise SpaceMismatch(f"{name}: points must be finite")
        return arr

    def to_dict(self):
        return {"kind": self.kind, "d": self.d, "p": _format_p(self.p)}


@dataclass(frozen=True, eq=True)
class Sphere(SampleSpace):
    """Unit sphere in ``d``-dimensional Euclidean space."""

    d: int
    kind = "sphere"
    vector_valued = True

    def __post_init__(self):
        if isinstance(self.d, bool) or int(self.d) != self.d or self.d < 2:
            raise InvalidParameter(f"d: expected an integer >= 2, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))

    @property
    def dim(self) -> int:
        return self.d

    def check_points(self, points, name="points"):
        arr = np.asarray(points, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != self.d:
            raise SpaceMismatch(f"{name}: expected shape (n, {self.d}), got {arr.shape}")
        norms = np.linalg.norm(arr, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
            raise SpaceMismatch(f"{name}: sphere points must have unit Euclidean norm")
        return arr

    def to_dict(self):
        return {"kind": self.kind, "d": self.d}


def space_from_dict(obj: dict) -> SampleSpace:
    kind = obj.get("kind")
    if kind == "discrete":
        return DiscreteLabels(obj["labels"])
    if kind == "real_line":
        return RealLine()
    if kind == "real_vector":
        return RealVector(obj["d"], parse_p(obj.get("p", 2.0)))
    if kind == "sphere":
        return Sphere(obj["d"])
    raise InvalidParameter(f"space.kind: unknown space {kind!r}")
