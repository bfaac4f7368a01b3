import csv

import numpy as np
import pytest

from sapg.datagen import InstanceSpec, gen_instance, objective_for
from sapg.diagnostics import (
    ReferenceSolution, compute_reference, descent_slack, energy, energy_bound, energy_series,
    rate_series, rate_statistic, u_point, w_term, write_diagnostics_csv,
)
from sapg.model import CompositeProblem, default_config
from sapg.prox import Box, ProximablePart
from sapg.smoothing import ZeroLoss, l1_affine_loss
from sapg.solver import sapg_solve


def _one_d():
    # min |x - 0.3| + 0.1 |x| over [0, 1]: minimizer 0.3, optimum 0.03
    return CompositeProblem(l1_affine_loss(np.eye(1), [0.3]), ProximablePart.scaled_l1(0.1, Box.uniform(1, 0, 1)))


@pytest.fixture(scope="module")
def run():
    prob = objective_for(gen_instance(InstanceSpec(30, 60, 0.2, seed=3)))
    cfg = default_config(60)
    ref = compute_reference(prob, cfg)
    return prob, cfg, ref, sapg_solve(prob, cfg, keep_iterates=True)


def test_w_vanishes_at_minimizer_as_mu_shrinks():
    prob = _one_d()
    x = np.array([0.3])
    ref = ReferenceSolution(x, prob.objective(x), 0.0)
    kappa = prob.loss.constants().kappa
    # zero residual: the smoothed loss sits at mu / 2 above the exact one
    for mu in 10.0 ** -np.arange(1, 9):
        assert w_term(prob.loss, prob.reg, x, mu, kappa, ref) == pytest.approx((0.5 + kappa) * mu, rel=1e-9)


def test_w_nonnegative_on_trajectory(run):
    prob, cfg, ref, res = run
    snaps = energy_series(prob, res, cfg, ref)
    assert min(s.W for s in snaps) >= -ref.uncertainty


def test_w_double_evaluation(run):
    prob, cfg, ref, res = run
    k = 10
    x, mu = res.trace.iterates[k], res.trace.mu[k - 1]
    z = prob.loss.A @ x - prob.loss.b
    smooth = np.where(np.abs(z) > mu, np.abs(z), z**2 / (2 * mu) + mu / 2).sum()
    kappa = prob.loss.m / 2
    expected = smooth + 0.01 * np.abs(x).sum() + kappa * mu - ref.f_star
    assert w_term(prob.loss, prob.reg, x, mu, kappa, ref) == pytest.approx(expected, abs=1e-12)


def test_u_point_values():
    x1, x0 = np.array([1.0, 2.0]), np.array([-4.0, 9.0])
    assert np.array_equal(u_point(x1, x0, 1, 4.0), x1)
    assert np.allclose(u_point(x1, x1, 7, 4.0), x1)
    x3, x2 = np.array([3.0]), np.array([1.5])
    assert u_point(x3, x2, 3, 4.0)[0] == pytest.approx(5 / 3 * 3.0 - 2 / 3 * 1.5)
    with pytest.raises(ValueError):
        u_point(x1, x0, 0, 4.0)


def test_energy_momentum_term_vanishes_at_reference():
    prob = _one_d()
    cfg = default_config(1)
    xs = np.array([0.3])
    ref = ReferenceSolution(xs, 0.03, 0.0)
    k, mu, gamma, kappa = 5, 0.01, 1.0, 0.5
    snap = energy(prob, k, xs, xs, mu, gamma, cfg, kappa, ref)
    t = k + cfg.alpha - 2
    first = 2 * gamma * mu / (cfg.alpha - 1) * t**2 * snap.W
    decay = 4 * kappa * cfg.gamma0 * cfg.mu0 / (2 * cfg.sigma - 1) * mu * t * np.log(t) ** (1 - cfg.sigma)
    assert snap.E == pytest.approx(first + decay, rel=1e-14)


def test_energy_descent_and_bound(run):
    prob, cfg, ref, res = run
    snaps = energy_series(prob, res, cfg, ref)
    tol = 10 * ref.uncertainty
    E = np.array([s.E for s in snaps])
    assert np.all(np.diff(E) <= tol)
    assert descent_slack(snaps, res, cfg).max() <= tol
    assert E[0] <= energy_bound(cfg, prob.loss.constants().kappa, ref) + tol


def test_energy_needs_iterates(run):
    prob, cfg, ref, _ = run
    with pytest.raises(ValueError, match="keep_iterates"):
        energy_series(prob, sapg_solve(prob, cfg.replace(maxiter=2, eps=0)), cfg, ref)


def test_diagnostics_need_constants():
    prob = CompositeProblem(ZeroLoss(1), ProximablePart.zero(Box.uniform(1, 0, 1)))
    cfg = default_config(1)
    res = sapg_solve(prob, cfg.replace(maxiter=2, eps=0), keep_iterates=True)
    with pytest.raises(ValueError, match="constants"):
        energy_series(prob, res, cfg, ReferenceSolution(np.zeros(1), 0.0, 0.0))


def test_rate_statistic_formula():
    ref = ReferenceSolution(np.zeros(1), 1.0, 0.0)
    assert rate_statistic(1.0, 10, 4.0, 0.75, ref) == 0.0
    vals = [rate_statistic(1.5, k, 4.0, 0.75, ref) for k in (1, 10, 100, 1000)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert vals[1] == pytest.approx(12 * np.log(13) ** -0.75 * 0.5)


def test_rate_statistic_falls_for_one_over_k_gap():
    ref = ReferenceSolution(np.zeros(1), 0.0, 0.0)
    r = [rate_statistic(1.0 / (k + 2), k, 4.0, 0.75, ref) for k in (20, 200, 2000)]
    assert r[0] > r[1] > r[2]


def test_rate_series_without_smoothing_bias():
    # optimum on the box edge with |residual| = 1 > mu: the run lands on it exactly
    prob = CompositeProblem(l1_affine_loss(np.eye(1), [2.0]), ProximablePart.scaled_l1(0.01, Box.uniform(1, 0, 1)))
    cfg = default_config(1)
    ref = compute_reference(prob, cfg)
    assert ref.f_star == pytest.approx(1.01, abs=1e-12)
    r = rate_series(sapg_solve(prob, cfg), cfg, ref)
    assert r.min() >= 0 and r[0] > 0 and r[199] <= r[19]


def test_reference_matches_analytic_optimum():
    prob = _one_d()
    ref = compute_reference(prob, default_config(1))
    assert ref.f_star == pytest.approx(0.03, abs=1e-6)
    assert prob.reg.box.contains(ref.x_star)
    again = compute_reference(prob, default_config(1))
    assert again.f_star == ref.f_star and np.array_equal(again.x_star, ref.x_star)


def test_diagnostics_csv(run, tmp_path):
    prob, cfg, ref, res = run
    path = tmp_path / "diag.csv"
    write_diagnostics_csv(path, prob, res, cfg, ref)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["k", "W", "E", "rate_stat", "step_norm"]
    assert len(rows) - 1 == res.iterations + 1
    assert rows[1][0] == "1"
