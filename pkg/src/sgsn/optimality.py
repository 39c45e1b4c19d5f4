"""Optimality diagnostics: dual and primal violation measures, KKT checks,
and primal recovery from a dual point.

The dual violation is the set-valued distance dist(z, prox(z - tau grad h))
scaled by 1/tau; threshold ties take the closer branch so the measure is
zero exactly on proximal fixed points. The primal violation mirrors it on
the primal side with the step-function prox at scale xi.
"""

from dataclasses import dataclass

import math

import numpy as np

from ._backend import kernels
from .dual import eval_state
from .operators import as_vector


def dual_violation(problem, z, tau):
    """dist(z, prox_{tau g}(z - tau grad h(z))) / tau with set-valued ties."""
    tau = float(tau)
    if not (tau > 0.0 and math.isfinite(tau)):
        raise ValueError(f"tau must be positive and finite, got {tau}")
    state = eval_state(problem, z)
    u = state.z - tau * state.grad_h
    theta = math.sqrt(2.0 * tau * problem.mu)
    dist_sq = kernels.setdist_sq_threshold(state.z, u, theta)
    return math.sqrt(dist_sq) / tau


def recover_primal(problem, z, model=None):
    """Primal pair (x, u) induced by the dual point ``z``:
    x = grad f*(-A.T z) and u = A x + b."""
    model = problem.model if model is None else model
    z = as_vector(z, problem.m, "z")
    x = model.fstar_grad(-problem.A.rmatvec(z))
    u = problem.A.matvec(x) + problem.b
    return x, u


def suitable_xi(problem, x, z, lam=1.0, active_tol=1e-8):
    """A prox scale under which an exact KKT pair certifies itself.

    The step-prox residual in ``primal_violation`` vanishes only when xi is
    small enough: support coordinates must fall below the prox threshold
    (xi < 2 lam / z_i^2) and off-support strict constraint violations must
    stay above it (xi < u_i^2 / (2 lam)). Off-support positives below
    active_tol * max(1, max u) are treated as numerical noise, not
    violations; residual u on the support is absorbed by the first bound.
    Returns half the tightest bound, capped at 1.
    """
    z = as_vector(z, problem.m, "z")
    u = problem.A.matvec(as_vector(x, problem.n, "x")) + problem.b
    bound = 2.0
    on = z > 0.0
    if on.any():
        bound = min(bound, 2.0 * lam / float(np.max(z[on]) ** 2))
    hot = ~on & (u > active_tol * max(1.0, float(u.max(initial=0.0))))
    if hot.any():
        bound = min(bound, float(np.min(u[hot]) ** 2) / (2.0 * lam))
    return 0.5 * bound


def primal_violation(problem, x, z, xi, lam=1.0, model=None):
    """Violation of primal optimality of the pair (x, z).

    The max of the loss-gradient residual dist(-A.T z, partial f(x)) and the
    scaled step-prox residual dist(A x + b, prox_{xi indicator}(A x + b + xi z)) / xi,
    with set-valued ties taken at the closer branch. ``xi`` and the penalty
    weight ``lam`` are free parameters of the measure.
    """
    model = problem.model if model is None else model
    xi, lam = float(xi), float(lam)
    if not (xi > 0.0 and math.isfinite(xi)):
        raise ValueError(f"xi must be positive and finite, got {xi}")
    x = as_vector(x, problem.n, "x")
    z = as_vector(z, problem.m, "z")
    first = model.primal_subdiff_dist(x, -problem.A.rmatvec(z))
    u = problem.A.matvec(x) + problem.b
    w = u + xi * z
    theta = math.sqrt(2.0 * xi * lam)
    # set-valued prox of the step penalty: w for w <= 0 or w > theta, 0 in
    # the gap, both branches at the tie
    to_w = np.abs(u - w)
    to_zero = np.abs(u)
    in_gap = (w > 0.0) & (w < theta)
    at_tie = w == theta
    per = np.where(in_gap, to_zero, np.where(at_tie, np.minimum(to_zero, to_w), to_w))
    second = float(np.linalg.norm(per)) / xi
    return max(first, second)


def check_primal_kkt(problem, x, u, z, tol=1e-6, model=None):
    """Check the primal-dual first-order conditions at (x, u, z).

    Residuals: (loss stationarity dist(-A.T z, partial f(x)), complementarity
    between z and u with the orthant constraint, linear consistency
    ||A x + b - u||). Complementarity is measured coordinatewise as
    min(|z_i|, |u_i|), the magnitude that must vanish for z to be a
    subgradient of the step penalty at u. Returns ``(ok, residuals)``.
    """
    model = problem.model if model is None else model
    x = as_vector(x, problem.n, "x")
    u = as_vector(u, problem.m, "u")
    z = as_vector(z, problem.m, "z")
    r_loss = model.primal_subdiff_dist(x, -problem.A.rmatvec(z))
    comp = float(np.max(np.minimum(np.abs(z), np.abs(u)), initial=0.0))
    nonneg = float(max(0.0, -z.min(initial=0.0)))
    r_comp = max(comp, nonneg)
    r_lin = float(np.linalg.norm(problem.A.matvec(x) + problem.b - u))
    residuals = (r_loss, r_comp, r_lin)
    return all(r <= tol for r in residuals), residuals


@dataclass(frozen=True)
class OptimalityReport:
    vdo: float
    vpo: float
    kkt_residuals: tuple
    kkt_ok: bool
    tau: float
    xi: float


def optimality_report(problem, z, tau, xi=None, lam=1.0, tol=1e-6):
    """Bundle every diagnostic for the dual point ``z``; ``xi`` defaults to
    a scale valid for this point (see ``suitable_xi``)."""
    x, u = recover_primal(problem, z)
    if xi is None:
        xi = suitable_xi(problem, x, z, lam=lam)
    kkt_ok, res = check_primal_kkt(problem, x, u, z, tol=tol)
    return OptimalityReport(
        vdo=dual_violation(problem, z, tau),
        vpo=primal_violation(problem, x, z, xi, lam=lam),
        kkt_residuals=res,
        kkt_ok=kkt_ok,
        tau=tau,
        xi=xi,
    )
