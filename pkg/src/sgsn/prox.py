"""Proximal calculus of g(z) = mu ||z||_0 + indicator(z >= 0).

The prox is a coordinatewise hard threshold at sqrt(2 tau mu). At a tie
the prox is set-valued ({0, u_i}); all canonical outputs here select 0 and
report the tie indices so callers needing the full set can branch.
"""

import numpy as np

from ._backend import kernels


def _check_params(tau, mu):
    tau, mu = float(tau), float(mu)
    if not (tau > 0.0 and np.isfinite(tau)):
        raise ValueError(f"tau must be positive and finite, got {tau}")
    if not (mu > 0.0 and np.isfinite(mu)):
        raise ValueError(f"mu must be positive and finite, got {mu}")
    return tau, mu


def prox_sparse_nonneg(u, tau, mu):
    """Prox of tau*g at ``u``: zero below the threshold, identity above.

    Returns ``(p, ties)`` with the canonical selection (ties map to 0) and
    the indices where ``u_i`` equals the threshold exactly.
    """
    tau, mu = _check_params(tau, mu)
    u = np.ascontiguousarray(u, dtype=np.float64)
    return kernels.threshold_prox(u, np.sqrt(2.0 * tau * mu))


def prox_step_indicator(w, xi, lam):
    """Prox of xi * lam * step-function penalty at ``w``.

    Nonpositive entries and entries strictly above sqrt(2 xi lam) are fixed
    points; the gap maps to 0. Ties are reported, canonical selection 0.
    """
    xi, lam = _check_params(xi, lam)
    w = np.ascontiguousarray(w, dtype=np.float64)
    return kernels.indicator_prox(w, np.sqrt(2.0 * xi * lam))


def is_subgradient_sparse(z, v):
    """True iff ``v`` is a subgradient of g at ``z``: z must be nonnegative
    and v must vanish on the support of z (free off the support)."""
    z = np.asarray(z, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if (z < 0.0).any():
        return False
    return bool((v[z > 0.0] == 0.0).all())


def is_subgradient_indicator(u, v):
    """True iff ``v`` is a subgradient of the step-function penalty at ``u``:
    v_i >= 0 where u_i = 0 and v_i = 0 where u_i != 0."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    at_zero = u == 0.0
    return bool((v[at_zero] >= 0.0).all() and (v[~at_zero] == 0.0).all())


def prox_step_bounds(z, u, mu):
    """The two step-size bounds under which the subgradient pair (z, u)
    stays a fixed point of the prox.

    Returns ``(tau1, tau2)``: tau1 = min over the support of z_i^2 / (2 mu)
    (+inf for z = 0), tau2 = min over {u_i > 0} of 2 mu / u_i^2 (+inf when
    u <= 0).
    """
    _, mu = _check_params(1.0, mu)
    z = np.asarray(z, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    zpos = z[z > 0.0]
    tau1 = float(np.min(zpos**2) / (2.0 * mu)) if zpos.size else np.inf
    upos = u[u > 0.0]
    tau2 = float(np.min(2.0 * mu / upos**2)) if upos.size else np.inf
    return tau1, tau2


def in_prox_fixed_set(z, u, tau, mu):
    """True iff ``z`` belongs to the set-valued prox of tau*g at ``z + tau*u``
    (ties admitted), the coordinatewise fixed-point characterization."""
    tau, mu = _check_params(tau, mu)
    z = np.asarray(z, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if (z < 0.0).any():
        return False
    w = z + tau * u
    theta = np.sqrt(2.0 * tau * mu)
    ok_zero = (z == 0.0) & (w <= theta)
    ok_keep = (z > 0.0) & (w >= theta) & (w == z)
    return bool((ok_zero | ok_keep).all())
