"""Derivative-free minimizers used for the Bayes-act search.

All routines are deterministic: same objective, same answer.
"""
from __future__ import annotations

import math
from typing import Callable, Iterable

import numpy as np

from .exceptions import OptimizerDiverged

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _checked(f: Callable[[float], float]) -> Callable[[float], float]:
    def g(x):
        v = float(f(x))
        if not math.isfinite(v):
            raise OptimizerDiverged(f"objective is non-finite ({v}) at {x!r}")
        return v

    return g


def golden_section(f, lo: float, hi: float, x_tol: float, max_iter: int = 200):
    """Minimize a unimodal ``f`` on ``[lo, hi]`` to bracket width ``x_tol``.

    Returns ``(x, f(x))`` for the better interior point of the final bracket.
    """
    f = _checked(f)
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= x_tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def minimize_1d(
    f,
    lo: float,
    hi: float,
    grid_points: int,
    x_tol: float,
    candidates: Iterable[float] = (),
):
    """Coarse grid scan, then golden-section refinement around the best node.

    ``candidates`` are extra abscissae (e.g. atoms of a discrete law, where
    nonconvex losses put their minima) compared against the refined point.
    Returns ``(x, f(x))``.
    """
    f = _checked(f)
    grid = np.linspace(lo, hi, max(int(grid_points), 3))
    vals = np.array([f(x) for x in grid])
    i = int(np.argmin(vals))
    best_x, best_v = float(grid[i]), float(vals[i])
    left = grid[max(i - 1, 0)]
    right = grid[min(i + 1, len(grid) - 1)]
    if right - left > x_tol:
        x, v = golden_section(f, left, right, x_tol)
        if v < best_v:
            best_x, best_v = x, v
    for x in candidates:
        v = f(float(x))
        if v < best_v:
            best_x, best_v = float(x), v
    return best_x, best_v


def coordinate_descent(
    f,
    x0: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    grid_points: int,
    x_tol: np.ndarray,
    max_sweeps: int = 25,
    rel_tol: float = 1e-10,
):
    """Cyclic coordinate descent; each coordinate solved by :func:`minimize_1d`.

    Stops when a full sweep improves the objective by less than
    ``rel_tol * (1 + |f|)``. Returns ``(x, f(x))``.
    """
    x = np.array(x0, dtype=float)
    fx = float(f(x))
    if not math.isfinite(fx):
        raise OptimizerDiverged(f"objective is non-finite at the start point {x!r}")
    for _ in range(max_sweeps):
        before = fx
        for j in range(len(x)):
            def along(t, j=j):
                z = x.copy()
                z[j] = t
                return f(z)

            # current coordinate value is always a candidate, so no sweep worsens f
            t, v = minimize_1d(along, lo[j], hi[j], grid_points, x_tol[j], candidates=(x[j],))
            if v < fx:
                x[j], fx = t, v
        if before - fx <= rel_tol * (1.0 + abs(fx)):
            break
    return x, fx


def tangent_pattern_search(f, y0: np.ndarray, step: float, x_tol: float, max_iter: int = 10_000):
    """Local search on the unit sphere along geodesics in the tangent plane at ``y0``.

    Tries +-``step`` along each tangent basis direction, moves on improvement,
    halves the step otherwise, and stops once it falls below ``x_tol``.
    """
    y = np.asarray(y0, dtype=float)
    fy = float(f(y))
    d = len(y)
    h = float(step)
    for _ in range(max_iter):
        if h < x_tol:
            break
        # tangent basis: orthonormal complement of y
        q, _ = np.linalg.qr(np.column_stack([y, np.eye(d)]))
        basis = q[:, 1:d].T
        moved = False
        for v in basis:
            for sgn in (1.0, -1.0):
                z = math.cos(h) * y + math.sin(h) * sgn * v
                z = z / np.linalg.norm(z)
                fz = float(f(z))
                if not math.isfinite(fz):
                    raise OptimizerDiverged(f"objective is non-finite at {z!r}")
                if fz < fy:
                    y, fy, moved = z, fz, True
                    break
            if moved:
                break
        if not moved:
            h /= 2.0
    return y, fy
