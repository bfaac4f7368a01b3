"""Closed-form proximal steps for a separable term restricted to a box."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Box:
    """Componentwise bounds ``lower <= x <= upper``; infinite bounds allowed."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=np.float64).reshape(-1)
        hi = np.asarray(self.upper, dtype=np.float64).reshape(-1)
        if lo.shape != hi.shape:
            raise ValueError("box bounds must have equal length")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("box bounds must not be NaN")
        if np.any(lo > hi):
            raise ValueError("box lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def uniform(cls, n: int, lower: float, upper: float) -> "Box":
        return cls(np.full(n, float(lower)), np.full(n, float(upper)))

    @classmethod
    def free(cls, n: int) -> "Box":
        return cls.uniform(n, -np.inf, np.inf)

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


def project_box(box: Box, x: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``box`` (componentwise clamp)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != box.lower.shape:
        raise ValueError(f"vector length {x.shape[0]} does not match box size {box.n}")
    return np.minimum(np.maximum(x, box.lower), box.upper)


def soft_threshold(y: np.ndarray, t: float) -> np.ndarray:
    return np.sign(y) * np.maximum(np.abs(y) - t, 0.0)


@dataclass(frozen=True)
class ProximablePart:
    """``g(x) = lam * ||x||_1`` (``lam = 0`` gives the zero function) over ``box``.

    The regularization weight lives here; solvers pass only the step scale
    ``theta`` and the product ``theta * lam`` is formed in :func:`prox_step`.
    """

    box: Box
    lam: float = 0.0
    variant: str = field(init=False)

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError("lam must be nonnegative")
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "variant", "scaled_l1" if self.lam > 0 else "zero")

    @classmethod
    def scaled_l1(cls, lam: float, box: Box) -> "ProximablePart":
        return cls(box=box, lam=lam)

    @classmethod
    def zero(cls, box: Box) -> "ProximablePart":
        return cls(box=box, lam=0.0)

    @property
    def n(self) -> int:
        return self.box.n

    def value(self, x: np.ndarray) -> float:
        """``g(x)``, ``inf`` outside the box."""
        if not self.box.contains(x):
            return float("inf")
        return self.lam * float(np.abs(x).sum())


def prox_step(g: ProximablePart, y: np.ndarray, theta: float) -> np.ndarray:
    """``argmin_{x in box} theta * g(x) + 0.5 * ||x - y||**2``.

    Each coordinate is a 1-D convex problem, so the constrained minimizer is
    the clamp of the soft-thresholded point.
    """
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta}")
    y = np.asarray(y, dtype=np.float64)
    if g.lam > 0:
        y = soft_threshold(y, theta * g.lam)
    return project_box(g.box, y)
