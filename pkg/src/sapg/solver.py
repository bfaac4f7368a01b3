"""Smoothing (accelerated) proximal gradient solvers.

Three drivers share one loop:

* :func:`sapg_solve` -- extrapolated steps with a warm-started backtracking
  line search on the step scale ``gamma``;
* :func:`spg_solve` -- the same loop without extrapolation;
* :func:`isapg_solve` -- fixed ``gamma = 1/L`` and an additive error on the
  smoothed gradient.

At loop counter ``k`` the smoothing parameter is
``mu_{k+1} = mu0 / ((k + alpha - 1) * ln(k + alpha - 1)**sigma)`` and the loop
stops once the prox-gradient residual and ``mu_{k+1}`` are both at most
``eps``, or when ``k`` passes ``maxiter``. The reported iteration count is
the final value of ``k``.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .model import CompositeProblem, ConfigError, SolveResult, SolveTrace, SolverConfig, validate
from .prox import ProximablePart, project_box, prox_step
from .smoothing import SmoothableLoss, smoothed_abs

ErrorOracle = Callable[[int], np.ndarray]


class BacktrackError(RuntimeError):
    """The descent test kept failing; the loss gradient is not Lipschitz as promised."""


@dataclass(frozen=True)
class BacktrackOutcome:
    accepted_gamma: float
    candidate: np.ndarray
    attempts: int


def mu_schedule(cfg: SolverConfig, k: int) -> float:
    """Smoothing parameter used by iteration ``k`` (i.e. ``mu_{k+1}``)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    t = k + cfg.alpha - 1
    return cfg.mu0 / (t * math.log(t) ** cfg.sigma)


def extrapolate(x_k: np.ndarray, x_prev: np.ndarray, k: int, alpha: float, enabled: bool = True) -> np.ndarray:
    """Momentum point ``x_k + (k-1)/(k+alpha-1) * (x_k - x_prev)``.

    At ``k = 0`` callers pass ``x_prev = x_k`` so the (negative) coefficient
    multiplies a zero displacement.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if not enabled:
        return x_k
    beta = (k - 1) / (k + alpha - 1)
    return x_k + beta * (x_k - x_prev)


def backtrack(
    loss: SmoothableLoss,
    reg: ProximablePart,
    y: np.ndarray,
    mu: float,
    gamma_start: float,
    eta: float,
    max_attempts: int = 100,
) -> BacktrackOutcome:
    """Shrink ``gamma`` by ``eta`` until the quadratic upper bound holds at the prox point.

    Raises
    ------
    BacktrackError
        After ``max_attempts`` failed tests.
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    if not gamma_start > 0:
        raise ValueError("gamma_start must be positive")
    cy, gy = loss.smooth_value_and_gradient(y, mu)
    gamma = gamma_start
    for attempt in range(1, max_attempts + 1):
        step = gamma * mu
        cand = prox_step(reg, y - step * gy, step)
        d = cand - y
        bound = cy + float(gy @ d) + float(d @ d) / (2 * step)
        # relative slack absorbs rounding when both sides agree exactly
        if loss.smooth_value(cand, mu) <= bound + 1e-12 * max(1.0, abs(bound)):
            return BacktrackOutcome(gamma, cand, attempt)
        gamma *= eta
    raise BacktrackError(
        f"descent condition failed {max_attempts} times (last gamma={gamma / eta:.3e}); "
        "smoothed gradient is not Lipschitz with modulus L/mu"
    )


def residual(
    prob: CompositeProblem, x: np.ndarray, mu: float, zeta: float, mode: str = "prox"
) -> float:
    """Fixed-point gap of the prox-gradient map, in the infinity norm.

    ``mode="prox"``: ``||x - prox_{zeta g}(x - zeta grad c~(x, mu))||_inf``.
    ``mode="smoothed"``: the l1 term is smoothed as well and the step is
    projected onto the box.
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    grad = prob.loss.smooth_gradient(x, mu)
    if mode == "prox":
        z = prox_step(prob.reg, x - zeta * grad, zeta)
    elif mode == "smoothed":
        if prob.reg.lam > 0:
            _, dabs = smoothed_abs(x, mu)
            grad = grad + prob.reg.lam * np.atleast_1d(dabs)
        z = project_box(prob.reg.box, x - zeta * grad)
    else:
        raise ValueError(f"unknown residual mode {mode!r}")
    return float(np.max(np.abs(x - z))) if x.size else 0.0


def _start_point(prob: CompositeProblem, cfg: SolverConfig) -> np.ndarray:
    errs = validate(cfg, prob)
    if errs:
        raise ConfigError(errs)
    x0 = cfg.x0
    if not prob.reg.box.contains(x0):
        warnings.warn("x0 is outside the feasible box; projecting it", stacklevel=3)
        x0 = project_box(prob.reg.box, x0)
    return x0.copy()


def _run(
    prob: CompositeProblem,
    cfg: SolverConfig,
    *,
    extrapolated: bool,
    fixed_gamma: Optional[float] = None,
    errs: Optional[ErrorOracle] = None,
    keep_iterates: bool = False,
) -> SolveResult:
    x = _start_point(prob, cfg)
    x_prev = x
    loss, reg = prob.loss, prob.reg
    gamma = cfg.gamma0 if fixed_gamma is None else fixed_gamma
    trace = SolveTrace(iterates=[x.copy()] if keep_iterates else None)
    t0 = time.perf_counter()
    stop_reason = "maxiter"
    k = 0
    for k in range(cfg.maxiter + 1):
        y = extrapolate(x, x_prev, k, cfg.alpha, extrapolated)
        mu = mu_schedule(cfg, k)
        if fixed_gamma is not None or not cfg.backtrack:
            grad = loss.smooth_gradient(y, mu)
            if errs is not None:
                grad = grad + errs(k)
            step = gamma * mu
            x_new = prox_step(reg, y - step * grad, step)
            retries = 0
        else:
            out = backtrack(loss, reg, y, mu, gamma, cfg.eta, cfg.max_backtracks)
            gamma, x_new, retries = out.accepted_gamma, out.candidate, out.attempts - 1
        res = residual(prob, x_new, mu, cfg.zeta, cfg.residual_mode)
        smooth = loss.smooth_value(x_new, mu) + reg.value(x_new)
        trace.append(
            k=k,
            mu=mu,
            gamma=gamma,
            f=prob.objective(x_new),
            f_smooth=smooth,
            residual=res,
            step_norm=float(np.linalg.norm(x_new - x)),
            backtracks=retries,
            time_s=time.perf_counter() - t0,
        )
        if keep_iterates:
            trace.iterates.append(x_new.copy())
        x_prev, x = x, x_new
        if res <= cfg.eps and mu <= cfg.eps:
            stop_reason = "residual_met"
            break
    return SolveResult(x_final=x, iterations=k, stop_reason=stop_reason, trace=trace)


def sapg_solve(prob: CompositeProblem, cfg: SolverConfig, keep_iterates: bool = False) -> SolveResult:
    """Smoothing accelerated proximal gradient; ``cfg.extrapolate=False`` gives SPG."""
    return _run(prob, cfg, extrapolated=cfg.extrapolate, keep_iterates=keep_iterates)


def spg_solve(prob: CompositeProblem, cfg: SolverConfig, keep_iterates: bool = False) -> SolveResult:
    """Smoothing proximal gradient (no extrapolation)."""
    return _run(prob, cfg, extrapolated=False, keep_iterates=keep_iterates)


def isapg_solve(
    prob: CompositeProblem,
    cfg: SolverConfig,
    lipschitz: Optional[float] = None,
    errs: Optional[ErrorOracle] = None,
    keep_iterates: bool = False,
) -> SolveResult:
    """Inexact variant: ``gamma = 1/L`` fixed, gradient perturbed by ``errs(k)``.

    ``lipschitz`` defaults to the loss's ``lipschitz_factor``; a loss without
    known constants is rejected.
    """
    consts = prob.loss.constants()
    if consts is None:
        raise ValueError("isapg_solve needs a loss with known smoothing constants")
    L = consts.lipschitz_factor if lipschitz is None else float(lipschitz)
    if not L > 0:
        raise ValueError("lipschitz must be positive")
    return _run(
        prob, cfg, extrapolated=cfg.extrapolate, fixed_gamma=1.0 / L, errs=errs,
        keep_iterates=keep_iterates,
    )


SOLVERS = {"sapg": sapg_solve, "spg": spg_solve, "isapg": isapg_solve}


def zero_errors(n: int) -> ErrorOracle:
    zero = np.zeros(n)
    return lambda k: zero


def decaying_errors(n: int, delta: float = 1e-2, power: float = 1.1, seed: int = 0) -> ErrorOracle:
    """``eps_k = delta * max(k, 1)**(-power) * u`` for a fixed seeded unit vector ``u``."""
    u = np.random.default_rng(seed).standard_normal(n)
    u /= np.linalg.norm(u)
    return lambda k: (delta * max(k, 1) ** (-power)) * u


def constant_errors(n: int, delta: float = 1e-2, seed: int = 0) -> ErrorOracle:
    return decaying_errors(n, delta=delta, power=0.0, seed=seed)


def weighted_error_terms(cfg: SolverConfig, errs: ErrorOracle, horizon: int) -> np.ndarray:
    """Terms ``mu0 * ln(k + alpha - 1)**(-sigma) * ||eps_k||`` for ``k < horizon``.

    Their series must converge for the inexact method to keep the exact
    method's guarantees.
    """
    return np.array([
        cfg.mu0 * math.log(k + cfg.alpha - 1) ** (-cfg.sigma) * np.linalg.norm(errs(k))
        for k in range(horizon)
    ])


def errors_look_summable(cfg: SolverConfig, errs: ErrorOracle, horizon: int = 10000) -> bool:
    """Heuristic: the weighted terms must decay faster than ``1/k``.

    Compares ``k * term_k`` at ``k = horizon`` with ``k = horizon/10``; a
    non-decreasing product signals a divergent series.
    """
    terms = weighted_error_terms(cfg, errs, horizon)
    hi, lo = horizon - 1, max(1, (horizon - 1) // 10)
    return hi * terms[hi] < lo * terms[lo]
