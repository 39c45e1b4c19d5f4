"""Strongly convex loss models, described through their convex conjugates.

The dual objective only ever needs f*, its gradient, a diagonal element of
its generalized Jacobian, and the distance to the primal subdifferential,
so that is the whole interface.
"""

from abc import ABC, abstractmethod

import numpy as np

from ._backend import kernels
from .operators import DiagonalMap


class ConjugateModel(ABC):
    """Conjugate-side view of a strongly convex function f."""

    #: strong convexity modulus of f
    sigma_f = 1.0

    @abstractmethod
    def f_value(self, x):
        """f(x)."""

    @abstractmethod
    def fstar_value(self, v):
        """f*(v)."""

    @abstractmethod
    def fstar_grad(self, v):
        """The gradient of f* (single-valued since f is strongly convex)."""

    @abstractmethod
    def fstar_jacobian_diag(self, v):
        """A diagonal element of the generalized Jacobian of grad f* at ``v``."""

    @abstractmethod
    def primal_subdiff_dist(self, x, s):
        """Euclidean distance from ``s`` to the subdifferential of f at ``x``."""


class SquaredL2Model(ConjugateModel):
    """f(x) = 0.5 ||x||^2; self-conjugate, grad f* is the identity."""

    def f_value(self, x):
        return 0.5 * float(np.dot(x, x))

    def fstar_value(self, v):
        return 0.5 * float(np.dot(v, v))

    def fstar_grad(self, v):
        return np.asarray(v, dtype=np.float64).copy()

    def fstar_jacobian_diag(self, v):
        return DiagonalMap(np.ones(len(v)))

    def primal_subdiff_dist(self, x, s):
        return float(np.linalg.norm(np.asarray(s, dtype=np.float64) - x))


class ElasticNetModel(ConjugateModel):
    """f(x) = 0.5 ||x||^2 + lambda1 ||x||_1.

    f* sums the shrunk quadratics 0.5 * max(|v_i| - lambda1, 0)^2, so grad f*
    is the soft-threshold map and the Jacobian diagonal is the dead-zone
    indicator (0 on the boundary |v_i| = lambda1, the canonical selection).
    """

    def __init__(self, lambda1):
        lambda1 = float(lambda1)
        if not (lambda1 > 0.0 and np.isfinite(lambda1)):
            raise ValueError(f"lambda1 must be positive and finite, got {lambda1}")
        self.lambda1 = lambda1

    def f_value(self, x):
        x = np.asarray(x, dtype=np.float64)
        return 0.5 * float(np.dot(x, x)) + self.lambda1 * float(np.abs(x).sum())

    def fstar_value(self, v):
        return float(kernels.shrink_quad_value(np.asarray(v, dtype=np.float64), self.lambda1))

    def fstar_grad(self, v):
        return kernels.soft_threshold(np.asarray(v, dtype=np.float64), self.lambda1)

    def fstar_jacobian_diag(self, v):
        return DiagonalMap(kernels.shrink_jac_diag(np.asarray(v, dtype=np.float64), self.lambda1))

    def primal_subdiff_dist(self, x, s):
        x = np.asarray(x, dtype=np.float64)
        s = np.asarray(s, dtype=np.float64)
        on = x != 0.0
        r = np.where(on, s - x - self.lambda1 * np.sign(x), 0.0)
        # off-support coordinates: distance from s_i to [-lambda1, lambda1]
        r_off = np.maximum(np.abs(s) - self.lambda1, 0.0)
        r = np.where(on, r, r_off)
        return float(np.linalg.norm(r))
