"""Exact Euclidean projections onto boxes, the nonnegative orthant, and shrunk boxes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box {x : lower <= x <= upper} with finite bounds."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float)).copy()
        up = np.atleast_1d(np.asarray(self.upper, dtype=float)).copy()
        if lo.ndim != 1 or lo.shape != up.shape:
            raise ValueError("box bounds must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(up))):
            raise ValueError("box bounds must be finite")
        if np.any(lo > up):
            raise ValueError("box is empty: lower > upper")
        lo.setflags(write=False)
        up.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(size, self.dim) if size else self.dim)


def project_box(box: Box, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != box.dim:
        raise ValueError(f"point dimension {x.shape[-1]} != box dimension {box.dim}")
    return np.clip(x, box.lower, box.upper)


def project_nonneg(x) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=float), 0.0)


def default_shrink_center(box: Box) -> np.ndarray:
    """Origin if the box contains it, else the box midpoint."""
    zero = np.zeros(box.dim)
    return zero if box.contains(zero) else box.center


def shrink(box: Box, rho: float, center=None) -> Box:
    """Scale the box toward ``center`` by a factor (1 - rho)."""
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"shrink factor rho must lie in [0, 1), got {rho}")
    c = default_shrink_center(box) if center is None else np.asarray(center, dtype=float)
    if not box.contains(c):
        raise ValueError("shrink center must lie inside the box")
    scale = 1.0 - rho
    return Box(c + scale * (box.lower - c), c + scale * (box.upper - c))


@dataclass(frozen=True, eq=False)
class ShrunkBox:
    """A box shrunk toward a center point by a factor (1 - rho)."""

    base: Box
    rho: float
    center: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        object.__setattr__(self, "center", c)
        shrunk = shrink(self.base, self.rho, c)  # validates rho and center
        if np.any(shrunk.lower < self.base.lower) or np.any(shrunk.upper > self.base.upper):
            raise ValueError("shrunk set escapes the base box")
        object.__setattr__(self, "box", shrunk)

    def project(self, x) -> np.ndarray:
        return project_box(self.box, x)
