"""Subspace gradient semismooth Newton iteration on the sparse dual.

Each outer iteration takes a proximal-gradient step (hard threshold of
``z - tau * grad h(z)``), reads off the surviving support, and tries a
regularized Newton step restricted to that support. The Newton trial is
kept only when it both decreases F sufficiently and shrinks the subspace
gradient; otherwise the proximal-gradient point is kept, so F never
increases. A proximal fixed point is a KKT point of the primal-dual pair
and stops the iteration.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .dual import eval_state, subspace_hessian_apply
from .operators import as_vector, cg_solve


@dataclass(frozen=True)
class AdaptiveTau:
    """Geometric step-size sweep: smallest j >= 0 with tau = base**j whose
    proximal-gradient point achieves F(z) - F(v) >= descent_coef * ||v - z||^2."""

    base: float = 0.1
    descent_coef: float = 1e-4
    max_power: int = 16


@dataclass(frozen=True)
class SolverConfig:
    """Solver parameters.

    ``tau`` is the fixed proximal step size (must satisfy 0 < tau < 1/ell_h);
    it is ignored when ``adaptive_tau`` is set. ``mu`` must match the dual
    problem's sparsity weight. The stopping tests use the violation of dual
    optimality: relative to its first value, change between consecutive
    iterations, and (when positive) an absolute target; a rule with value 0
    is disabled. ``escape_zero_init`` bootstraps the first step with a
    certified-descent step-size probe when the all-zero start is a proximal
    fixed point at the configured tau, which otherwise traps the iteration
    at the origin (the origin is always a dual KKT point).
    """

    mu: float
    tau: float | None = None
    gamma: float = 0.1
    c1: float = 1e-4
    c2: float = 1e8
    max_iter: int = 1000
    vdo_rel_tol: float = 1e-3
    vdo_change_tol: float = 1e-3
    vdo_abs_tol: float = 0.0
    adaptive_tau: AdaptiveTau | None = None
    escape_zero_init: bool = False
    rng_seed: int = 0


@dataclass(frozen=True)
class IterationRecord:
    k: int
    F: float
    vdo: float
    support_size: int
    step_kind: str  # newton-accepted | gradient-fallback | converged
    alpha: float
    cg_iters: int
    wall_ns: int
    tau: float = math.nan
    cg_converged: bool = True


@dataclass(frozen=True)
class SolveResult:
    z_star: np.ndarray
    x_star: np.ndarray
    u_star: np.ndarray
    F_star: float
    vdo_final: float
    trace: list
    status: str  # converged | max_iter | stagnated

    @property
    def iterations(self):
        return len(self.trace)

    @property
    def update_steps(self):
        return sum(1 for r in self.trace if r.step_kind != "converged")


def _pg_point(problem, state, tau):
    theta = math.sqrt(2.0 * tau * problem.mu)
    return kernels.pg_step(state.z, state.grad_h, tau, theta)


def _scatter(m, idx, vals):
    v = np.zeros(m)
    v[idx] = vals
    return v


def identify_subspace(problem, state, tau):
    """Proximal-gradient point and its support at step size ``tau``.

    Returns ``(rows, v)``: the strictly-above-threshold index set and the
    thresholded point (its entries on ``rows`` exceed sqrt(2 tau mu) > 0,
    so ``v`` is feasible by construction; threshold ties are excluded).
    """
    idx, vals, _ = _pg_point(problem, state, tau)
    return idx, _scatter(problem.m, idx, vals)


def newton_direction(problem, v_state, rows, config):
    """Regularized Newton direction on the subspace ``rows``.

    Solves (A_T Q A_T^t + gamma_k I) d = -grad_T h(v) by conjugate gradients
    with gamma_k = gamma * ||grad_T h(v)||. Returns ``(d, gamma_k, cg_result)``;
    a zero subspace gradient short-circuits to d = 0 (stationary on the
    subspace).

    The inner tolerance follows a forcing rule: loose while the subspace
    gradient is still near its starting scale ||b|| = ||grad h(0)|| (any
    partial CG iterate of the SPD system already descends), tightening as
    the gradient shrinks so the local Newton tail stays sharp.
    """
    g = v_state.grad_h[rows]
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        return np.zeros(rows.size), 0.0, None
    gamma_k = config.gamma * gnorm
    jac = problem.model.fstar_jacobian_diag(v_state.neg_at_z)

    def apply(d):
        w = jac.apply(problem.A.rmatvec_rows(rows, d))
        return problem.A.matvec_rows(rows, w) + gamma_k * d

    scale = float(np.linalg.norm(problem.b)) or 1.0
    res = cg_solve(apply, -g, tol=max(1e-8, min(0.1, gnorm / scale)))
    return res.x, gamma_k, res


def step_length(v_vals, d):
    """Largest step in [0, 1] keeping ``v + step * d`` in the nonnegative
    orthant (``v_vals`` strictly positive)."""
    return float(kernels.min_ratio_step(np.asarray(v_vals, dtype=np.float64),
                                        np.asarray(d, dtype=np.float64)))


def accept_newton(v_state, trial_state, rows, config):
    """Acceptance test for the Newton trial: sufficient decrease
    F(v) - F(trial) >= c1 ||trial - v||^2 and subspace-gradient control
    ||grad_T h(trial)|| <= c2 ||trial - v||."""
    diff = trial_state.z[rows] - v_state.z[rows]
    dn_sq = float(np.dot(diff, diff))
    if not (v_state.F - trial_state.F >= config.c1 * dn_sq):
        return False
    g_trial = float(np.linalg.norm(trial_state.grad_h[rows]))
    return g_trial <= config.c2 * math.sqrt(dn_sq)


def adapt_tau(problem, state, rule):
    """Geometric step-size sweep at the current iterate.

    Returns ``(tau, idx, vals, dist_sq, v_state, capped)``. ``v_state`` is
    the evaluated proximal-gradient point (None when it coincides with the
    iterate). When no swept power satisfies the descent test the step falls
    back to tau = 1/(2 ell_h), whose descent is guaranteed, flagged
    ``capped=True``.
    """
    for j in range(rule.max_power + 1):
        tau = rule.base**j
        idx, vals, dist_sq = _pg_point(problem, state, tau)
        if dist_sq == 0.0:
            return tau, idx, vals, dist_sq, None, False
        v_state = eval_state(problem, _scatter(problem.m, idx, vals))
        if state.F - v_state.F >= rule.descent_coef * dist_sq:
            return tau, idx, vals, dist_sq, v_state, False
    tau = 1.0 / (2.0 * problem.ell_h)
    idx, vals, dist_sq = _pg_point(problem, state, tau)
    v_state = None
    if dist_sq > 0.0:
        v_state = eval_state(problem, _scatter(problem.m, idx, vals))
    return tau, idx, vals, dist_sq, v_state, True


def _escape_probe(problem, state, descent_coef, n_grid=256, extend_rounds=4):
    """Step-size probe for the all-zero trap.

    At z = 0 every tau below 2 mu / max(u0)^2 leaves the origin fixed, yet
    the origin is a KKT point of the dual for any data, so a run started
    there would otherwise report instant convergence. The probe scans step
    sizes above the activation knee and returns the proximal-gradient step
    maximizing the certified descent F(0) - F(v) - coef ||v||^2, or None
    when no probed step descends (the origin then stands as the answer).

    Among descending candidates, ones whose primal image x(v) is nonzero
    win: a step that leaves x pinned at zero (possible under a model with a
    flat conjugate region, such as the elastic net) keeps the residual
    u = Ax + b frozen and the run crawls along a VDO plateau. The grid is
    extended upward a few times when no such candidate has appeared yet.
    """
    u0 = -state.grad_h
    pos = u0 > 0.0
    if not pos.any():
        return None
    mu = problem.mu
    best_any = (0.0, None)
    best_live = (0.0, None)
    if float(np.ptp(u0)) == 0.0:
        # uniform u0 (the b = ones tasks): all coordinates activate at one
        # knee, so F along the probe costs one adjoint product in total
        u_val = float(u0[0])
        w = problem.A.rmatvec(u0)
        ub = float(np.dot(u0, problem.b))
        uu = float(np.dot(u0, u0))
        g_all = mu * problem.m

        def scan(taus):
            nonlocal best_any, best_live
            for tau in taus:
                f_v = problem.model.fstar_value(-tau * w) - tau * ub + g_all
                gain = state.F - f_v - descent_coef * tau * tau * uu
                if gain > best_any[0]:
                    best_any = (gain, float(tau))
                if gain > best_live[0] and np.any(problem.model.fstar_grad(-tau * w)):
                    best_live = (gain, float(tau))

        lo = 2.0 * mu / u_val**2 * (1.0 + 1e-9)
        hi = max(1.0, lo * 1e6)
        points = n_grid
    else:
        knees = np.unique(2.0 * mu / u0[pos] ** 2)

        def scan(taus):
            nonlocal best_any, best_live
            for tau in np.unique(taus):
                idx, vals, dist_sq = _pg_point(problem, state, tau)
                if dist_sq == 0.0:
                    continue
                v_state = eval_state(problem, _scatter(problem.m, idx, vals))
                gain = state.F - v_state.F - descent_coef * dist_sq
                if gain > best_any[0]:
                    best_any = (gain, float(tau))
                if gain > best_live[0] and np.any(v_state.x):
                    best_live = (gain, float(tau))

        scan(knees * 1.05)
        lo = float(knees.min()) * 1.05
        hi = max(1.0, float(knees.max()) * 10.0)
        points = 32
    scan(np.geomspace(lo, hi, points))
    for _ in range(extend_rounds):
        if best_live[1] is not None:
            break
        lo, hi = hi, hi * 100.0
        scan(np.geomspace(lo, hi, max(points // 4, 16)))
    live = best_live[1] is not None
    tau = best_live[1] if live else best_any[1]
    if tau is None:
        return None
    idx, vals, dist_sq = _pg_point(problem, state, tau)
    if dist_sq == 0.0:
        return None
    return tau, idx, vals, dist_sq, live


def _validate(problem, config):
    if config.mu != problem.mu:
        raise ValueError(f"config.mu={config.mu} does not match problem.mu={problem.mu}")
    if config.adaptive_tau is None:
        if config.tau is None:
            raise ValueError("config.tau is required when adaptive_tau is off")
        bound = 1.0 / problem.ell_h
        if not (0.0 < config.tau < bound):
            raise ValueError(
                f"tau={config.tau} violates the admissible range (0, 1/ell_h) = (0, {bound})")
    if config.max_iter < 0:
        raise ValueError("max_iter must be nonnegative")


def _run(problem, config, z0, callback, use_newton):
    _validate(problem, config)
    m = problem.m
    z = np.zeros(m) if z0 is None else as_vector(z0, m, "z0").copy()
    np.maximum(z, 0.0, out=z)  # dom g is the nonnegative orthant
    state = eval_state(problem, z)
    trace = []
    status = "max_iter"
    vdo_first = math.nan
    vdo_prev = math.nan
    vdo_final = None
    adaptive_rule = config.adaptive_tau
    coef = adaptive_rule.descent_coef if adaptive_rule else 1e-4

    def emit(rec):
        trace.append(rec)
        if callback is not None:
            callback(rec)

    for k in range(1, config.max_iter + 1):
        t0 = time.perf_counter_ns()
        if adaptive_rule is not None:
            tau_k, idx, vals, dist_sq, v_state, _ = adapt_tau(problem, state, adaptive_rule)
        else:
            tau_k = config.tau
            idx, vals, dist_sq = _pg_point(problem, state, tau_k)
            v_state = None
        if k == 1 and config.escape_zero_init and np.count_nonzero(state.z) == 0:
            stuck = dist_sq == 0.0
            # The step-size sweep can also leave the origin with the primal
            # still pinned at zero, which freezes the residual and stalls the
            # run on a VDO plateau; a live probed step breaks that too.
            dead = (not stuck and adaptive_rule is not None and v_state is not None
                    and not np.any(state.x) and not np.any(v_state.x))
            probe = _escape_probe(problem, state, coef) if stuck or dead else None
            if probe is not None and (stuck or probe[4]):
                tau_k, idx, vals, dist_sq = probe[:4]
                v_state = None
                if adaptive_rule is None:
                    # A fixed step this small cannot activate anything from the
                    # origin, so later iterations keep the step-size search on.
                    adaptive_rule = AdaptiveTau(descent_coef=coef)
        vdo_k = math.sqrt(dist_sq) / tau_k
        if dist_sq == 0.0:
            # proximal fixed point: KKT point of the primal-dual pair
            status = "converged"
            vdo_final = 0.0
            emit(IterationRecord(k, state.F, 0.0, int(idx.size), "converged", 0.0, 0,
                                 time.perf_counter_ns() - t0, tau_k))
            break
        stop = config.vdo_abs_tol > 0.0 and vdo_k <= config.vdo_abs_tol
        if not stop and k >= 2:
            if config.vdo_rel_tol > 0.0 and vdo_k <= config.vdo_rel_tol * vdo_first:
                stop = True
            elif config.vdo_change_tol > 0.0 and abs(vdo_k - vdo_prev) < config.vdo_change_tol:
                stop = True
        if k == 1:
            vdo_first = vdo_k
        vdo_prev = vdo_k
        if stop:
            status = "converged"
            vdo_final = vdo_k
            emit(IterationRecord(k, state.F, vdo_k, int(idx.size), "converged", 0.0, 0,
                                 time.perf_counter_ns() - t0, tau_k))
            break
        if v_state is None:
            v_state = eval_state(problem, _scatter(m, idx, vals))
        step_kind = "gradient-fallback"
        alpha = 0.0
        cg_iters = 0
        cg_ok = True
        next_state = v_state
        if use_newton and idx.size:
            d, _, cg_res = newton_direction(problem, v_state, idx, config)
            if cg_res is not None:
                cg_iters, cg_ok = cg_res.iterations, cg_res.converged
                a = step_length(vals, d)
                trial = v_state.z.copy()
                # exact arithmetic keeps the trial in the orthant; clip float dust
                trial[idx] = np.maximum(vals + a * d, 0.0)
                trial_state = eval_state(problem, trial)
                if accept_newton(v_state, trial_state, idx, config):
                    next_state = trial_state
                    step_kind = "newton-accepted"
                    alpha = a
        if np.array_equal(next_state.z, state.z):
            # no representable progress at this step size
            status = "stagnated"
            vdo_final = vdo_k
            emit(IterationRecord(k, state.F, vdo_k, int(idx.size), step_kind, alpha, cg_iters,
                                 time.perf_counter_ns() - t0, tau_k, cg_ok))
            break
        state = next_state
        emit(IterationRecord(k, state.F, vdo_k, int(idx.size), step_kind, alpha, cg_iters,
                             time.perf_counter_ns() - t0, tau_k, cg_ok))
    if vdo_final is None:
        tau_rep = config.tau if adaptive_rule is None else 1.0 / (2.0 * problem.ell_h)
        _, _, dsq = _pg_point(problem, state, tau_rep)
        vdo_final = math.sqrt(dsq) / tau_rep
    return SolveResult(z_star=state.z, x_star=state.x, u_star=-state.grad_h,
                       F_star=state.F, vdo_final=vdo_final, trace=trace, status=status)


def solve(problem, config, z0=None, callback=None):
    """Run the subspace gradient semismooth Newton iteration.

    Parameters
    ----------
    problem : DualProblem
    config : SolverConfig
    z0 : array or None
        Starting dual point; defaults to the origin. Negative entries are
        projected onto the orthant.
    callback : callable or None
        Invoked with each IterationRecord as it is produced.
    """
    return _run(problem, config, z0, callback, use_newton=True)
