"""Shared helpers for the test suite."""

import numpy as np
import pytest

from sgsn import DenseOperator, DualProblem, Rng, SolverConfig, SquaredL2Model
from sgsn.models import ElasticNetModel


def random_dense_problem(seed, m=None, n=None, model=None):
    """Small dense dual instance with an admissible fixed step size.

    n >= m keeps A^t injective (almost surely), so the smooth part is
    coercive and the dual optimum is attained; m > n can make the dual
    unbounded below along orthant directions in the null space of A^t.
    """
    rng = Rng(seed)
    m = 2 + int(rng.below(6)) if m is None else m
    n = m + int(rng.below(6)) if n is None else n
    A = DenseOperator(rng.normal(m * n).reshape(m, n))
    b = rng.normal(m)
    model = SquaredL2Model() if model is None else model
    ell_h = A.frob_sq() / model.sigma_f
    tau = 0.5 / ell_h
    mu = 0.1 * tau
    problem = DualProblem.build(A, b, model, mu)
    config = SolverConfig(mu=mu, tau=tau, max_iter=500,
                          vdo_abs_tol=1e-9, vdo_rel_tol=0.0, vdo_change_tol=0.0)
    return problem, config


def one_dim_problem(mu=0.05):
    """m = n = 1, A = (1), b = (1), squared-l2 loss.

    The dual objective is F(z) = 0.5 z^2 - z + mu [z != 0] on z >= 0, whose
    global minimizer is z* = 1 for mu < 0.5, with x* = -1 and u* = 0.
    """
    A = DenseOperator(np.array([[1.0]]))
    problem = DualProblem.build(A, np.array([1.0]), SquaredL2Model(), mu)
    config = SolverConfig(mu=mu, tau=0.5, max_iter=200,
                          vdo_abs_tol=1e-10, vdo_rel_tol=0.0, vdo_change_tol=0.0)
    return problem, config


@pytest.fixture
def tmp_csv(tmp_path):
    return str(tmp_path / "out.csv")


def elastic_net(lambda1=1.0):
    return ElasticNetModel(lambda1)
