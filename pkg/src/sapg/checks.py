"""Self-check suites run by ``sapg check``.

Each suite returns a list of :class:`CheckResult`; a suite passes when every
invariant holds on its seeded probes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from .datagen import InstanceSpec, gen_instance, objective_for
from .diagnostics import compute_reference, descent_slack, energy_bound, energy_series
from .linalg import orthonormalize_rows, spectral_norm_sq
from .model import default_config
from .prox import Box, ProximablePart, prox_step
from .smoothing import censored_affine_loss, hinge_penalty_loss, l1_affine_loss
from .solver import sapg_solve


@dataclass
class CheckResult:
    suite: str
    invariant: str
    ok: bool
    detail: str = ""


def _losses(seed: int = 0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((5, 8))
    H = rng.standard_normal((4, 6))
    # the censored loss is not convex in general; benchmark-shaped instances
    # (m = 5n) are dominated by convex terms, tiny ones are not
    C = gen_instance(InstanceSpec(100, 20, 0.3, seed, kind="censored"))
    return {
        "l1": (l1_affine_loss(A, rng.standard_normal(5)), Box.uniform(8, -2.0, 2.0)),
        "censored": (censored_affine_loss(C.A, C.b), Box.uniform(20, 0.0, 1.0)),
        "hinge": (hinge_penalty_loss(2.0, H, rng.standard_normal(4)), Box.uniform(6, -2.0, 2.0)),
    }


def smoothing_suite(probes: int = 200, seed: int = 0, kappa_scale: float = 1.0) -> List[CheckResult]:
    """Envelope, mu-Lipschitz, gradient-Lipschitz and midpoint-convexity probes.

    ``kappa_scale`` rescales the reported kappa; it exists to inject faults.
    """
    rng = np.random.default_rng(seed + 1)
    out = []
    for name, (loss, box) in _losses(seed).items():
        c = loss.constants()
        kappa, L = c.kappa * kappa_scale, c.lipschitz_factor
        worst = {"envelope": 0.0, "mu_lipschitz": 0.0, "gradient_lipschitz": 0.0, "convexity": 0.0}
        for _ in range(probes):
            x = rng.uniform(box.lower, box.upper)
            y = rng.uniform(box.lower, box.upper)
            mu1, mu2 = 10.0 ** rng.uniform(-3, 0, size=2)
            worst["envelope"] = max(worst["envelope"], abs(loss.smooth_value(x, mu1) - loss.exact_value(x)) - kappa * mu1)
            worst["mu_lipschitz"] = max(
                worst["mu_lipschitz"],
                abs(loss.smooth_value(x, mu1) - loss.smooth_value(x, mu2)) - kappa * abs(mu1 - mu2),
            )
            gdiff = np.linalg.norm(loss.smooth_gradient(x, mu1) - loss.smooth_gradient(y, mu1))
            worst["gradient_lipschitz"] = max(worst["gradient_lipschitz"], gdiff - L / mu1 * np.linalg.norm(x - y))
            mid = loss.smooth_value((x + y) / 2, mu1)
            worst["convexity"] = max(
                worst["convexity"], mid - (loss.smooth_value(x, mu1) + loss.smooth_value(y, mu1)) / 2
            )
        for inv, w in worst.items():
            out.append(CheckResult("smoothing", f"{inv}[{name}]", w <= 1e-10, f"worst excess {w:.3e}"))
    return out


def prox_suite(probes: int = 200, seed: int = 0) -> List[CheckResult]:
    """Prox optimality against a 1-D grid search, feasibility, nonexpansiveness."""
    rng = np.random.default_rng(seed + 2)
    worst_gap = -np.inf
    feasible = nonexp = True
    for _ in range(probes):
        lo = rng.uniform(-1, 0.5)
        hi = lo + rng.uniform(0.1, 1.5)
        tl = rng.uniform(0, 0.5)
        y = rng.uniform(-2, 2)
        g = ProximablePart.scaled_l1(tl, Box.uniform(1, lo, hi))
        x = prox_step(g, np.array([y]), 1.0)[0]
        grid = np.linspace(lo, hi, 20001)
        obj = lambda z: tl * np.abs(z) + 0.5 * (z - y) ** 2
        worst_gap = max(worst_gap, obj(x) - obj(grid).min())
        feasible &= lo <= x <= hi
        y2 = rng.uniform(-2, 2)
        x2 = prox_step(g, np.array([y2]), 1.0)[0]
        nonexp &= abs(x - x2) <= abs(y - y2) + 1e-15
    return [
        CheckResult("prox", "grid_optimality", worst_gap <= 1e-8, f"worst gap {worst_gap:.3e}"),
        CheckResult("prox", "feasibility", bool(feasible)),
        CheckResult("prox", "nonexpansive", bool(nonexp)),
    ]


def linalg_suite(seed: int = 0) -> List[CheckResult]:
    rng = np.random.default_rng(seed + 3)
    A = orthonormalize_rows(rng.standard_normal((30, 70)))
    ortho = float(np.abs(A @ A.T - np.eye(30)).max())
    lam = spectral_norm_sq(A)
    return [
        CheckResult("linalg", "orthonormal_rows", ortho <= 1e-10, f"max deviation {ortho:.3e}"),
        CheckResult("linalg", "spectral_norm_orthonormal", abs(lam - 1) <= 1e-8, f"estimate {lam!r}"),
    ]


def energy_suite(seed: int = 0) -> List[CheckResult]:
    """Energy descent and start-point bound on a small seeded SAPG run."""
    prob = objective_for(gen_instance(InstanceSpec(20, 40, 0.2, seed)))
    cfg = default_config(40)
    ref = compute_reference(prob, cfg)
    res = sapg_solve(prob, cfg, keep_iterates=True)
    snaps = energy_series(prob, res, cfg, ref)
    tol = 10 * ref.uncertainty
    slack = descent_slack(snaps, res, cfg)
    bound = energy_bound(cfg, prob.loss.constants().kappa, ref)
    W = min(s.W for s in snaps)
    return [
        CheckResult("energy", "energy_descent", bool(slack.max() <= tol), f"max slack {slack.max():.3e}"),
        CheckResult("energy", "energy_start_bound", snaps[0].E <= bound + tol, f"E1={snaps[0].E:.4g} bound={bound:.4g}"),
        CheckResult("energy", "gap_nonnegative", W >= -ref.uncertainty, f"min W {W:.3e}"),
        CheckResult("energy", "iteration_count", res.iterations == 223, f"iterations {res.iterations}"),
    ]


SUITES: Dict[str, Callable[..., List[CheckResult]]] = {
    "linalg": linalg_suite,
    "smoothing": smoothing_suite,
    "prox": prox_suite,
    "energy": energy_suite,
}


def run_suites(names=None, kappa_scale: float = 1.0) -> List[CheckResult]:
    names = list(SUITES) if not names else list(names)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s): {unknown}; choose from {list(SUITES)}")
    out = []
    for name in names:
        if name == "smoothing":
            out.extend(smoothing_suite(kappa_scale=kappa_scale))
        else:
            out.extend(SUITES[name]())
    return out
