"""Subspace identification, Newton steps, step-size adaptation, full solves."""

import dataclasses

import numpy as np
import pytest

from sgsn.baseline import solve_prox_gradient
from sgsn.dual import DualProblem, eval_state
from sgsn.models import SquaredL2Model
from sgsn.operators import DenseOperator, IdentityOperator
from sgsn.rng import Rng
from sgsn.solver import (AdaptiveTau, SolverConfig, accept_newton, adapt_tau,
                         identify_subspace, newton_direction, solve, step_length)

from conftest import one_dim_problem, random_dense_problem


# ------------------------------------------------------- subspace selection


def test_identify_subspace_keeps_strict_exceeders():
    p = DualProblem.build(IdentityOperator(2), np.array([4.0, 1.0]), SquaredL2Model(), 1.0)
    s = eval_state(p, np.zeros(2))
    rows, v = identify_subspace(p, s, 0.5)
    # gradient step from 0 is tau * b = (2, 0.5); threshold sqrt(2*0.5*1) = 1
    np.testing.assert_array_equal(rows, np.array([0]))
    np.testing.assert_array_equal(v, np.array([2.0, 0.0]))


def test_identify_subspace_excludes_threshold_ties():
    p = DualProblem.build(IdentityOperator(2), np.array([2.0, 2.0]), SquaredL2Model(), 1.0)
    s = eval_state(p, np.zeros(2))
    rows, v = identify_subspace(p, s, 0.5)
    assert rows.size == 0
    np.testing.assert_array_equal(v, np.zeros(2))


def test_identify_subspace_empty_at_dead_origin():
    p = DualProblem.build(IdentityOperator(2), np.zeros(2) - 0.0, SquaredL2Model(), 1.0,
                          ell_h=1.0)
    # b = 0: the origin has zero gradient, nothing activates
    s = eval_state(p, np.zeros(2))
    rows, v = identify_subspace(p, s, 0.5)
    assert rows.size == 0 and not v.any()


def test_identify_subspace_feasible_by_construction():
    for seed in range(10):
        p, cfg = random_dense_problem(seed + 50)
        rng = Rng(seed + 1000)
        s = eval_state(p, np.abs(rng.normal(p.m)))
        rows, v = identify_subspace(p, s, cfg.tau)
        theta = np.sqrt(2.0 * cfg.tau * p.mu)
        assert (v[rows] > theta).all()
        assert np.count_nonzero(v) == rows.size


# --------------------------------------------------------- newton direction


def test_newton_direction_hand_example():
    p = DualProblem.build(IdentityOperator(2), np.array([2.5, 1.0]), SquaredL2Model(), 0.1)
    v_state = eval_state(p, np.array([1.0, 1.0]))
    cfg = SolverConfig(mu=0.1, tau=0.25, gamma=1.0 / 3.0)
    d, gamma_k, res = newton_direction(p, v_state, np.array([0], dtype=np.intp), cfg)
    # subspace gradient is (-1.5): gamma_k = 0.5, (1 + 0.5) d = 1.5 -> d = 1
    assert gamma_k == pytest.approx(0.5)
    np.testing.assert_allclose(d, np.array([1.0]))
    assert res.converged


def test_newton_direction_zero_gradient_short_circuits():
    p, _ = one_dim_problem()
    v_state = eval_state(p, np.array([1.0]))  # the exact minimizer: grad h = 0
    cfg = SolverConfig(mu=p.mu, tau=0.5)
    d, gamma_k, res = newton_direction(p, v_state, np.array([0], dtype=np.intp), cfg)
    assert gamma_k == 0.0 and res is None
    np.testing.assert_array_equal(d, np.zeros(1))


def test_newton_direction_meets_forcing_tolerance():
    for seed in range(8):
        p, cfg = random_dense_problem(seed + 77)
        rng = Rng(seed + 2000)
        s = eval_state(p, np.abs(rng.normal(p.m)))
        rows, v = identify_subspace(p, s, cfg.tau)
        if rows.size == 0:
            continue
        v_state = eval_state(p, v)
        d, gamma_k, res = newton_direction(p, v_state, rows, cfg)
        g = v_state.grad_h[rows]
        gnorm = float(np.linalg.norm(g))
        jac = p.model.fstar_jacobian_diag(v_state.neg_at_z)
        hd = p.A.matvec_rows(rows, jac.apply(p.A.rmatvec_rows(rows, d))) + gamma_k * d
        tol = max(1e-8, min(0.1, gnorm / (np.linalg.norm(p.b) or 1.0)))
        assert res.converged
        assert np.linalg.norm(hd + g) <= tol * max(1.0, gnorm) * (1.0 + 1e-12)
        assert gamma_k == pytest.approx(cfg.gamma * gnorm)


# -------------------------------------------------------------- step length


def test_step_length_cases():
    assert step_length(np.array([1.0]), np.array([2.0])) == 1.0
    assert step_length(np.array([1.0, 2.0]), np.array([-2.0, 1.0])) == 0.5
    assert step_length(np.array([4.0]), np.array([-1.0])) == 1.0
    assert step_length(np.array([], dtype=float), np.array([], dtype=float)) == 1.0


def test_step_length_keeps_orthant():
    rng = Rng(17)
    for _ in range(50):
        n = 1 + int(rng.below(6))
        v = 0.1 + rng.folded_normal(n)
        d = 3.0 * rng.normal(n)
        a = step_length(v, d)
        assert 0.0 <= a <= 1.0
        # the solver clips representation dust after stepping
        assert (v + a * d >= -1e-12 * np.maximum(1.0, np.abs(v))).all()


# ---------------------------------------------------------------- accept


def _accept_fixture():
    p = DualProblem.build(IdentityOperator(1), np.array([2.0]), SquaredL2Model(), 0.01)
    cfg = SolverConfig(mu=0.01, tau=0.25)
    v = eval_state(p, np.array([1.0]))
    return p, cfg, v


def test_accept_newton_good_step():
    p, cfg, v = _accept_fixture()
    trial = eval_state(p, np.array([2.0]))  # the exact minimizer of h
    assert accept_newton(v, trial, np.array([0], dtype=np.intp), cfg)


def test_accept_newton_rejects_ascent():
    p, cfg, v = _accept_fixture()
    trial = eval_state(p, np.array([4.0]))
    assert not accept_newton(v, trial, np.array([0], dtype=np.intp), cfg)


def test_accept_newton_rejects_zero_step_off_stationarity():
    p, cfg, v = _accept_fixture()
    assert not accept_newton(v, v, np.array([0], dtype=np.intp), cfg)


def test_accept_newton_zero_step_at_stationarity():
    p = DualProblem.build(IdentityOperator(1), np.array([1.0]), SquaredL2Model(), 0.01)
    cfg = SolverConfig(mu=0.01, tau=0.25)
    v = eval_state(p, np.array([1.0]))  # grad h = 0 here
    assert accept_newton(v, v, np.array([0], dtype=np.intp), cfg)


# ------------------------------------------------------------- adapt_tau


def _steep_problem():
    # ell_h = 10; minimizer of h at z = 1
    return DualProblem.build(DenseOperator(np.array([[np.sqrt(10.0)]])),
                             np.array([10.0]), SquaredL2Model(), 0.01)


def test_adapt_tau_shrinks_past_failing_unit_step():
    p = _steep_problem()
    s = eval_state(p, np.array([1.05]))
    tau, idx, vals, dist_sq, v_state, capped = adapt_tau(p, s, AdaptiveTau())
    # tau = 1 overshoots to 0.55 and increases F; tau = 0.1 steps to 1.0
    assert tau == pytest.approx(0.1)
    np.testing.assert_array_equal(idx, np.array([0]))
    np.testing.assert_allclose(vals, np.array([1.0]))
    assert dist_sq == pytest.approx(0.0025)
    assert not capped
    assert v_state is not None and s.F - v_state.F >= 1e-4 * dist_sq


def test_adapt_tau_capped_fallback():
    p = _steep_problem()
    s = eval_state(p, np.array([1.05]))
    tau, idx, vals, dist_sq, v_state, capped = adapt_tau(p, s, AdaptiveTau(max_power=0))
    assert capped
    assert tau == pytest.approx(1.0 / (2.0 * p.ell_h))
    np.testing.assert_allclose(vals, np.array([1.025]))
    assert v_state is not None


def test_adapt_tau_accepts_jump_to_origin():
    p = DualProblem.build(DenseOperator(np.array([[np.sqrt(10.0)]])),
                          np.array([1.0]), SquaredL2Model(), 0.01)
    s = eval_state(p, np.array([1.0]))
    tau, idx, vals, dist_sq, v_state, capped = adapt_tau(p, s, AdaptiveTau())
    assert tau == 1.0 and idx.size == 0 and dist_sq == pytest.approx(1.0) and not capped


def test_adapt_tau_gentle_curvature_takes_unit_step():
    p = DualProblem.build(DenseOperator(np.array([[0.5]])), np.array([1.0]),
                          SquaredL2Model(), 0.01)
    s = eval_state(p, np.array([1.0]))
    tau, idx, vals, dist_sq, v_state, capped = adapt_tau(p, s, AdaptiveTau())
    assert tau == 1.0 and not capped
    np.testing.assert_allclose(vals, np.array([1.75]))
    assert dist_sq == pytest.approx(0.5625)


def test_adapt_tau_stationary_point():
    p, _ = one_dim_problem()
    s = eval_state(p, np.array([1.0]))
    tau, idx, vals, dist_sq, v_state, capped = adapt_tau(p, s, AdaptiveTau())
    assert dist_sq == 0.0 and v_state is None and not capped
    np.testing.assert_array_equal(vals, np.array([1.0]))


# ------------------------------------------------------------- full solves


def _tight(cfg, **kw):
    strict = dict(vdo_abs_tol=1e-9, vdo_rel_tol=0.0, vdo_change_tol=0.0)
    strict.update(kw)
    return dataclasses.replace(cfg, **strict)


def test_solve_one_dimensional_closed_form():
    p, _ = one_dim_problem()
    cfg = SolverConfig(mu=p.mu, tau=0.5, vdo_abs_tol=1e-9, vdo_rel_tol=0.0,
                       vdo_change_tol=0.0)
    res = solve(p, cfg)
    assert res.status == "converged"
    np.testing.assert_allclose(res.z_star, np.array([1.0]), atol=1e-8)
    assert res.F_star == pytest.approx(-0.45, abs=1e-10)
    np.testing.assert_allclose(res.x_star, np.array([-1.0]), atol=1e-8)
    np.testing.assert_allclose(res.u_star, np.zeros(1), atol=1e-8)
    assert res.vdo_final <= 1e-9


def test_solve_warm_start_at_solution_stops_immediately():
    p, _ = one_dim_problem()
    cfg = SolverConfig(mu=p.mu, tau=0.5, vdo_abs_tol=1e-9, vdo_rel_tol=0.0,
                       vdo_change_tol=0.0)
    res = solve(p, cfg, z0=np.array([1.0]))
    assert res.status == "converged" and res.iterations == 1
    assert res.trace[0].step_kind == "converged" and res.trace[0].vdo == 0.0
    np.testing.assert_array_equal(res.z_star, np.array([1.0]))
    assert res.update_steps == 0


def test_solve_negative_start_is_projected():
    p, _ = one_dim_problem()
    cfg = SolverConfig(mu=p.mu, tau=0.5, vdo_abs_tol=1e-9, vdo_rel_tol=0.0,
                       vdo_change_tol=0.0)
    res = solve(p, cfg, z0=np.array([-3.0]))
    assert res.status == "converged"
    np.testing.assert_allclose(res.z_star, np.array([1.0]), atol=1e-8)


def test_solve_random_problems_reach_tolerance_monotonically():
    for seed in range(12):
        p, cfg = random_dense_problem(seed)
        res = solve(p, cfg)
        assert res.status == "converged", seed
        assert (res.z_star >= 0.0).all()
        f_vals = [r.F for r in res.trace]
        for a, b in zip(f_vals, f_vals[1:]):
            assert b <= a + 1e-12 * max(1.0, abs(a))
        # the reported optimum matches the final trace row
        assert res.F_star == res.trace[-1].F
        assert res.vdo_final == res.trace[-1].vdo


def test_solve_max_iter_zero_evaluates_nothing():
    p, _ = one_dim_problem()
    cfg = SolverConfig(mu=p.mu, tau=0.5, max_iter=0)
    res = solve(p, cfg)
    assert res.status == "max_iter" and res.iterations == 0
    np.testing.assert_array_equal(res.z_star, np.zeros(1))
    assert np.isfinite(res.vdo_final)


def test_solve_beats_gradient_baseline_on_pair_ranking():
    from sgsn.data import gen_example1
    from sgsn.tasks import build_auc_problem

    ds = gen_example1(200, 20, 0.2, 0.0, seed=7)
    x_pos = ds.features[ds.labels == 1]
    x_neg = ds.features[ds.labels == -1]
    p, cfg = build_auc_problem(x_pos, x_neg)
    cfg = dataclasses.replace(cfg, vdo_abs_tol=1e-4, vdo_rel_tol=0.0, vdo_change_tol=0.0)
    res = solve(p, cfg)
    assert res.status == "converged"
    assert res.iterations == 36
    assert res.F_star == pytest.approx(-0.0745014749, abs=1e-9)
    assert res.vdo_final <= 1e-4
    assert res.trace[-2].step_kind == "newton-accepted"
    pg = solve_prox_gradient(p, cfg)
    # the first-order method cannot hit the same target within the budget
    assert pg.status == "max_iter"
    assert pg.vdo_final > 1e-4
    assert all(r.step_kind != "newton-accepted" for r in pg.trace)


def test_escape_probe_leaves_the_origin_trap():
    rng = Rng(11)
    x_pos = rng.normal(4).reshape(2, 2) + 1.0
    x_neg = rng.normal(4).reshape(2, 2) - 1.0
    from sgsn.tasks import build_auc_problem

    p, cfg = build_auc_problem(x_pos, x_neg)
    on = solve(p, _tight(cfg, vdo_abs_tol=1e-8))
    off = solve(p, _tight(cfg, vdo_abs_tol=1e-8, escape_zero_init=False))
    # without the probe the origin is a proximal fixed point: instant "optimum"
    assert off.status == "converged" and off.iterations == 1
    assert np.count_nonzero(off.z_star) == 0 and off.F_star == 0.0
    # the probe finds the strictly better sparse support
    assert on.status == "converged"
    assert np.count_nonzero(on.z_star) == 2
    assert on.F_star == pytest.approx(-0.04715450819208941, abs=1e-12)
    assert on.F_star < off.F_star


# --------------------------------------------------------------- validation


def test_config_mu_must_match_problem():
    p, _ = one_dim_problem()
    with pytest.raises(ValueError):
        solve(p, SolverConfig(mu=p.mu * 2.0, tau=0.5))


def test_fixed_tau_range_is_enforced():
    p, _ = one_dim_problem()  # ell_h = 1
    for bad in (0.0, -0.5, 1.0, 2.0):
        with pytest.raises(ValueError):
            solve(p, SolverConfig(mu=p.mu, tau=bad))
    with pytest.raises(ValueError):
        solve(p, SolverConfig(mu=p.mu, tau=None))  # no step rule at all


def test_negative_max_iter_rejected():
    p, _ = one_dim_problem()
    with pytest.raises(ValueError):
        solve(p, SolverConfig(mu=p.mu, tau=0.5, max_iter=-1))
