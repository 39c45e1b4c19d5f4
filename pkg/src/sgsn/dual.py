"""The sparse nonnegative dual objective F(z) = h(z) + g(z).

Here h(z) = f*(-A.T z) - <z, b> is smooth with ell_h-Lipschitz gradient
(ell_h = ||A||_F^2 / sigma_f) and g(z) = mu ||z||_0 + indicator(z >= 0).
A state caches every quantity the solver reuses: the conjugate argument,
the recovered primal point x = grad f*(-A.T z), and grad h(z) = -(A x + b).
"""

from dataclasses import dataclass

import numpy as np

from .models import ConjugateModel
from .operators import LinearMap, as_vector


@dataclass(frozen=True)
class DualProblem:
    """Immutable problem description shared by every solver component."""

    A: LinearMap
    b: np.ndarray
    model: ConjugateModel
    mu: float
    ell_h: float

    @classmethod
    def build(cls, A, b, model, mu, ell_h=None):
        m, _ = A.shape
        b = as_vector(b, m, "b")
        mu = float(mu)
        if not (mu > 0.0 and np.isfinite(mu)):
            raise ValueError(f"mu must be positive and finite, got {mu}")
        if ell_h is None:
            ell_h = A.frob_sq() / model.sigma_f
        ell_h = float(ell_h)
        if not (ell_h > 0.0 and np.isfinite(ell_h)):
            raise ValueError(f"ell_h must be positive and finite, got {ell_h} (degenerate operator?)")
        return cls(A=A, b=b, model=model, mu=mu, ell_h=ell_h)

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]


@dataclass
class DualState:
    """All cached quantities at one dual point."""

    z: np.ndarray
    neg_at_z: np.ndarray  # -A.T z, the conjugate argument
    x: np.ndarray  # grad f*(-A.T z), the recovered primal point
    grad_h: np.ndarray  # -(A x + b)
    h_val: float
    g_val: float
    feasible: bool

    @property
    def F(self):
        return self.h_val + self.g_val if self.feasible else np.inf


def eval_state(problem, z):
    """Evaluate the dual objective and its gradient caches at ``z``.

    A ``z`` with negative entries is outside dom g; the returned state is
    flagged infeasible and reports F = +inf (used only by defensive checks,
    the solver keeps its iterates in the nonnegative orthant).
    """
    z = as_vector(z, problem.m, "z")
    feasible = bool((z >= 0.0).all())
    neg_at_z = -problem.A.rmatvec(z)
    x = problem.model.fstar_grad(neg_at_z)
    grad_h = -(problem.A.matvec(x) + problem.b)
    h_val = problem.model.fstar_value(neg_at_z) - float(np.dot(z, problem.b))
    g_val = problem.mu * int(np.count_nonzero(z))
    if not (np.isfinite(h_val) and np.isfinite(grad_h).all()):
        raise FloatingPointError("non-finite dual objective: the iterate left the numeric range")
    return DualState(z=z, neg_at_z=neg_at_z, x=x, grad_h=grad_h, h_val=h_val,
                     g_val=g_val, feasible=feasible)


def F_value(problem, state):
    """Objective value of a cached state (+inf when infeasible)."""
    return state.F


def subspace_hessian_apply(problem, state, rows, gamma, d):
    """Apply the regularized subspace Newton matrix to ``d``.

    Computes (A_T Q A_T^t + gamma I) d where T = ``rows`` and Q is the
    Jacobian diagonal of grad f* at the state's conjugate argument; the
    product is assembled from row-restricted operator products so the cost
    stays linear in |T| for structured operators.
    """
    q = problem.model.fstar_jacobian_diag(state.neg_at_z)
    w = q.apply(problem.A.rmatvec_rows(rows, d))
    return problem.A.matvec_rows(rows, w) + gamma * d
