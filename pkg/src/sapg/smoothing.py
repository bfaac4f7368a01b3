"""Smoothing functions for nonsmooth convex losses.

A :class:`SmoothableLoss` bundles a nonsmooth convex function ``c`` with a
family of C^1 convex surrogates ``c~(., mu)``. When the two constants are
known the surrogate obeys

* ``|c~(x, mu1) - c~(x, mu2)| <= kappa * |mu1 - mu2|``
* ``grad c~(., mu)`` is Lipschitz with modulus ``lipschitz_factor / mu``

and hence ``|c~(x, mu) - c(x)| <= kappa * mu``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from .linalg import as_matrix, as_vector, rmatvec, matvec, spectral_norm_sq


@dataclass(frozen=True)
class SmoothingConstants:
    """Envelope constant ``kappa`` and gradient-Lipschitz factor ``L``."""

    kappa: float
    lipschitz_factor: float

    def __post_init__(self):
        if not self.kappa >= 0:
            raise ValueError("kappa must be nonnegative")
        if not self.lipschitz_factor > 0:
            raise ValueError("lipschitz_factor must be positive")


def _check_mu(mu):
    if not np.all(np.asarray(mu) > 0):
        raise ValueError(f"smoothing parameter must be positive, got {mu}")


def smoothed_abs(z, mu) -> Tuple:
    """Huber-type smoothing of ``|z|``.

    Returns ``(value, derivative)``; ``z`` may be a scalar or an array.
    ``|z| > mu`` uses the exact branch, otherwise ``z**2/(2 mu) + mu/2``.
    """
    _check_mu(mu)
    z = np.asarray(z, dtype=np.float64)
    inner = np.abs(z) <= mu
    value = np.where(inner, z * z / (2 * mu) + mu / 2, np.abs(z))
    deriv = np.where(inner, z / mu, np.sign(z))
    if value.ndim == 0:
        return float(value), float(deriv)
    return value, deriv


def smoothed_plus(z, mu) -> Tuple:
    """Smoothing of ``max(z, 0)``: ``(z + mu)**2 / (4 mu)`` on ``|z| <= mu``.

    Returns ``(value, derivative)``.
    """
    _check_mu(mu)
    z = np.asarray(z, dtype=np.float64)
    inner = np.abs(z) <= mu
    value = np.where(inner, (z + mu) ** 2 / (4 * mu), np.maximum(z, 0.0))
    deriv = np.where(inner, (z + mu) / (2 * mu), (z > 0).astype(np.float64))
    if value.ndim == 0:
        return float(value), float(deriv)
    return value, deriv


class SmoothableLoss:
    """Base class for a convex loss with a parametric smooth surrogate.

    Subclasses implement :meth:`exact_value` and :meth:`smooth_value_and_gradient`;
    :meth:`constants` returns ``None`` when ``kappa`` and ``L`` are unknown.
    Solving never needs the constants; diagnostics and the inexact solver do.
    """

    n: int

    def exact_value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def smooth_value_and_gradient(self, x: np.ndarray, mu: float) -> Tuple[float, np.ndarray]:
        raise NotImplementedError

    def smooth_value(self, x: np.ndarray, mu: float) -> float:
        return self.smooth_value_and_gradient(x, mu)[0]

    def smooth_gradient(self, x: np.ndarray, mu: float) -> np.ndarray:
        return self.smooth_value_and_gradient(x, mu)[1]

    def constants(self) -> Optional[SmoothingConstants]:
        return None


class ZeroLoss(SmoothableLoss):
    """``c = 0``; useful for pure prox problems and trivial fixed points."""

    def __init__(self, n: int):
        self.n = int(n)

    def exact_value(self, x):
        return 0.0

    def smooth_value_and_gradient(self, x, mu):
        _check_mu(mu)
        return 0.0, np.zeros(self.n)


class _AffineLoss(SmoothableLoss):
    def __init__(self, A, b, names=("A", "b")):
        self.A = as_matrix(A, names[0])
        self.b = as_vector(b, names[1])
        if self.A.shape[0] != self.b.shape[0]:
            raise ValueError(
                f"dimension mismatch: {names[0]} has {self.A.shape[0]} rows, "
                f"{names[1]} has {self.b.shape[0]} entries"
            )
        self.m, self.n = self.A.shape

    @cached_property
    def _norm_sq(self) -> float:
        return spectral_norm_sq(self.A)


class L1AffineLoss(_AffineLoss):
    """``c(x) = ||A x - b||_1`` smoothed termwise with :func:`smoothed_abs`."""

    def exact_value(self, x):
        return float(np.abs(matvec(self.A, x) - self.b).sum())

    def smooth_value_and_gradient(self, x, mu):
        val, d = smoothed_abs(matvec(self.A, x) - self.b, mu)
        return float(np.sum(val)), rmatvec(self.A, np.atleast_1d(d))

    def constants(self):
        return SmoothingConstants(kappa=self.m / 2, lipschitz_factor=self._norm_sq)


class CensoredAffineLoss(_AffineLoss):
    """``c(x) = ||max(A x, 0) - b||_1`` smoothed as ``sum theta~(phi~(A_i x) - b_i)``."""

    def exact_value(self, x):
        return float(np.abs(np.maximum(matvec(self.A, x), 0.0) - self.b).sum())

    def smooth_value_and_gradient(self, x, mu):
        p, dp = smoothed_plus(matvec(self.A, x), mu)
        val, d = smoothed_abs(np.atleast_1d(p) - self.b, mu)
        return float(np.sum(val)), rmatvec(self.A, np.atleast_1d(d * dp))

    def constants(self):
        # per term: |d/dmu| <= 1/4 + 1/2, second derivative <= 1/mu + 1/(2 mu)
        return SmoothingConstants(kappa=0.75 * self.m, lipschitz_factor=1.5 * self._norm_sq)


class HingePenaltyLoss(_AffineLoss):
    """Exact-penalty loss ``lam * sum max(H_i x - d_i, 0)`` for affine constraints."""

    def __init__(self, lam: float, H, d):
        if not lam > 0:
            raise ValueError("lam must be positive")
        super().__init__(H, d, names=("H", "d"))
        self.lam = float(lam)

    def exact_value(self, x):
        return self.lam * float(np.maximum(matvec(self.A, x) - self.b, 0.0).sum())

    def smooth_value_and_gradient(self, x, mu):
        val, d = smoothed_plus(matvec(self.A, x) - self.b, mu)
        return self.lam * float(np.sum(val)), self.lam * rmatvec(self.A, np.atleast_1d(d))

    def constants(self):
        return SmoothingConstants(
            kappa=self.lam * self.m / 4, lipschitz_factor=self.lam * self._norm_sq / 2
        )


def l1_affine_loss(A, b) -> L1AffineLoss:
    return L1AffineLoss(A, b)


def censored_affine_loss(A, b) -> CensoredAffineLoss:
    return CensoredAffineLoss(A, b)


def hinge_penalty_loss(lam: float, H, d) -> HingePenaltyLoss:
    return HingePenaltyLoss(lam, H, d)
