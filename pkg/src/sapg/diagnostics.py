"""Lyapunov energy and rate quantities computed from a solve trace.

One-based iterate indexing is used throughout: ``x^j`` is the ``j``-th iterate
(``x^0`` the start point) and ``mu_j``, ``gamma_j`` are the values that
produced it. With the solver's trace convention, ``mu_j = trace.mu[j-1]``.

The exact minimizer is unknown for generated instances, so every quantity
is taken relative to a :class:`ReferenceSolution` from a much longer run.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import List

import numpy as np

from .model import CompositeProblem, SolveResult, SolverConfig
from .solver import sapg_solve


@dataclass(frozen=True, eq=False)
class ReferenceSolution:
    x_star: np.ndarray
    f_star: float
    uncertainty: float


@dataclass(frozen=True, eq=False)
class EnergySnapshot:
    k: int
    W: float
    u: np.ndarray
    E: float


def _kappa(prob: CompositeProblem) -> float:
    consts = prob.loss.constants()
    if consts is None:
        raise ValueError("diagnostics need a loss with known smoothing constants")
    return consts.kappa


def w_term(loss, reg, x_k, mu_k, kappa, ref: ReferenceSolution) -> float:
    """Smoothed objective gap ``c~(x_k, mu_k) + g(x_k) + kappa mu_k - f_star``."""
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    return loss.smooth_value(x_k, mu_k) + reg.value(x_k) + kappa * mu_k - ref.f_star


def u_point(x_k, x_prev, k: int, alpha: float) -> np.ndarray:
    if k < 1:
        raise ValueError("k must be at least 1")
    return ((k + alpha - 2) / (alpha - 1)) * x_k - ((k - 1) / (alpha - 1)) * x_prev


def energy(
    prob: CompositeProblem,
    k: int,
    x_k,
    x_prev,
    mu_k: float,
    gamma_k: float,
    cfg: SolverConfig,
    kappa: float,
    ref: ReferenceSolution,
) -> EnergySnapshot:
    """Energy ``E_k``: weighted gap, anchored momentum distance, and a smoothing-decay term."""
    if k < 1:
        raise ValueError("k must be at least 1")
    a, s = cfg.alpha, cfg.sigma
    t = k + a - 2
    W = w_term(prob.loss, prob.reg, x_k, mu_k, kappa, ref)
    u = u_point(x_k, x_prev, k, a)
    decay = 4 * kappa * cfg.gamma0 * cfg.mu0 / (2 * s - 1) * mu_k * t * math.log(t) ** (1 - s)
    E = 2 * gamma_k * mu_k / (a - 1) * t * t * W + (a - 1) * float(np.sum((u - ref.x_star) ** 2)) + decay
    return EnergySnapshot(k=k, W=W, u=u, E=E)


def energy_bound(cfg: SolverConfig, kappa: float, ref: ReferenceSolution) -> float:
    """Upper bound on every ``E_k`` in terms of the start point."""
    a, s, g0, m0 = cfg.alpha, cfg.sigma, cfg.gamma0, cfg.mu0
    return (
        (a - 1) * float(np.sum((ref.x_star - cfg.x0) ** 2))
        + 4 * (a - 1) * kappa * g0 * m0**2
        + 4 * kappa * g0 * m0**2 / (2 * s - 1) * (a - 1) * math.log(a - 1) ** (1 - s)
    )


def energy_series(
    prob: CompositeProblem, result: SolveResult, cfg: SolverConfig, ref: ReferenceSolution
) -> List[EnergySnapshot]:
    """``E_j`` for ``j = 1 .. iterations + 1``; ``result`` must carry iterates."""
    it = result.trace.iterates
    if it is None:
        raise ValueError("solve with keep_iterates=True to compute energies")
    kappa = _kappa(prob)
    tr = result.trace
    return [
        energy(prob, j, it[j], it[j - 1], tr.mu[j - 1], tr.gamma[j - 1], cfg, kappa, ref)
        for j in range(1, len(it))
    ]


def descent_slack(
    snaps: List[EnergySnapshot], result: SolveResult, cfg: SolverConfig
) -> np.ndarray:
    """``E_{k+1} + 2(alpha-3) gamma_{k+1} mu_{k+1} (k+alpha-1) W_k / (alpha-1) - E_k``.

    Entry ``i`` corresponds to ``k = i + 1``; nonpositive values mean the
    descent inequality holds.
    """
    a = cfg.alpha
    tr = result.trace
    out = []
    for i in range(len(snaps) - 1):
        k = snaps[i].k
        gm = tr.gamma[k] * tr.mu[k]
        extra = 2 * (a - 3) * gm / (a - 1) * (k + a - 1) * snaps[i].W
        out.append(snaps[i + 1].E + extra - snaps[i].E)
    return np.asarray(out)


def rate_statistic(f_k: float, k: int, alpha: float, sigma: float, ref: ReferenceSolution) -> float:
    """``(k + alpha - 2) * ln(k + alpha - 1)**(-sigma) * (f_k - f_star)``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return (k + alpha - 2) * math.log(k + alpha - 1) ** (-sigma) * (f_k - ref.f_star)


def rate_series(result: SolveResult, cfg: SolverConfig, ref: ReferenceSolution) -> np.ndarray:
    """Rate statistic for ``j = 1 .. iterations + 1`` (entry ``j - 1``)."""
    f = result.trace.f
    return np.array([
        rate_statistic(f[j - 1], j, cfg.alpha, cfg.sigma, ref) for j in range(1, len(f) + 1)
    ])


def compute_reference(prob: CompositeProblem, cfg: SolverConfig) -> ReferenceSolution:
    """High-accuracy SAPG run: ``eps / 100`` and ``10 * maxiter``.

    ``f_star`` is the best exact objective seen and ``uncertainty`` the
    spread of the objective over the last tenth of the run.
    """
    tight = cfg.replace(eps=cfg.eps / 100, maxiter=10 * cfg.maxiter, extrapolate=True)
    res = sapg_solve(prob, tight)
    f = res.trace.column("f")
    tail = f[-max(1, len(f) // 10):]
    return ReferenceSolution(
        x_star=res.x_final.copy(),
        f_star=float(min(f.min(), prob.objective(res.x_final))),
        uncertainty=float(tail.max() - tail.min()),
    )


DIAGNOSTIC_COLUMNS = ("k", "W", "E", "rate_stat", "step_norm")


def write_diagnostics_csv(
    path, prob: CompositeProblem, result: SolveResult, cfg: SolverConfig, ref: ReferenceSolution
):
    """Write ``k,W,E,rate_stat,step_norm`` rows for ``k = 1 .. iterations + 1``."""
    snaps = energy_series(prob, result, cfg, ref)
    rates = rate_series(result, cfg, ref)
    steps = result.trace.step_norm
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DIAGNOSTIC_COLUMNS)
        for s, r, st in zip(snaps, rates, steps):
            w.writerow([s.k, repr(s.W), repr(s.E), repr(float(r)), repr(st)])
