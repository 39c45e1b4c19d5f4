"""Pure NumPy fallback for the compiled kernels in ``_kernels.pyx``.

Both backends must agree elementwise (strict thresholds, tie reporting,
integer RNG words); only the order of floating-point reductions may differ.
The test suite exercises the two side by side.
"""

import math

import numpy as np

_MASK = (1 << 64) - 1


def threshold_prox(u, theta):
    """Hard-threshold ``u`` at ``theta``: keep entries strictly above, zero the rest.

    Returns ``(out, ties)`` where ``ties`` holds the indices with ``u[i] == theta``
    exactly (the set-valued points; the canonical output zeroes them).
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    out = np.where(u > theta, u, 0.0)
    ties = np.nonzero(u == theta)[0].astype(np.int64)
    return out, ties


def indicator_prox(w, theta):
    """Prox of the scaled step-function penalty: pass nonpositive entries and
    entries strictly above ``theta`` through, zero the gap ``(0, theta]``.

    Ties ``w[i] == theta`` are reported; the canonical output maps them to 0.
    """
    w = np.ascontiguousarray(w, dtype=np.float64)
    out = np.where((w <= 0.0) | (w > theta), w, 0.0)
    ties = np.nonzero(w == theta)[0].astype(np.int64)
    return out, ties


def pg_step(z, grad, tau, theta):
    """Fused proximal-gradient step ``u = z - tau*grad`` with hard threshold.

    Returns ``(idx, vals, dist_sq)``: the surviving indices (``u > theta``
    strictly), their values, and the squared distance from ``z`` to the
    thresholded point.
    """
    u = z - tau * grad
    keep = u > theta
    idx = np.nonzero(keep)[0].astype(np.int64)
    vals = u[idx]
    d_on = z[idx] - vals
    z_off = z[~keep]
    dist_sq = float(np.dot(d_on, d_on) + np.dot(z_off, z_off))
    return idx, vals, dist_sq


def min_ratio_step(v, d):
    """Largest step in [0, 1] keeping ``v + step*d`` nonnegative for ``v > 0``."""
    neg = d < 0.0
    if not neg.any():
        return 1.0
    return float(min(1.0, np.min(-v[neg] / d[neg])))


def soft_threshold(v, lam):
    """Shrink ``v`` toward zero by ``lam``; the dead zone ``|v| <= lam`` maps to 0."""
    return np.where(v > lam, v - lam, np.where(v < -lam, v + lam, 0.0))


def shrink_quad_value(v, lam):
    """Sum of the shrunk quadratics ``0.5*max(|v_i|-lam, 0)^2``."""
    t = np.maximum(np.abs(v) - lam, 0.0)
    return float(0.5 * np.dot(t, t))


def shrink_jac_diag(v, lam):
    """Diagonal of the shrink operator's generalized Jacobian: 1 outside the
    dead zone (strictly), 0 inside and at the boundary."""
    return (np.abs(v) > lam).astype(np.float64)


def setdist_sq_threshold(z, u, theta):
    """Squared distance from ``z`` to the set-valued hard threshold of ``u``
    (points at ``u == theta`` may map to 0 or to ``u``; take the closer)."""
    to_zero = z * z
    to_u = (z - u) ** 2
    per = np.where(u < theta, to_zero, np.where(u > theta, to_u, np.minimum(to_zero, to_u)))
    return float(per.sum())


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & _MASK


def xoshiro_fill(state, out):
    """Fill ``out`` (uint64) from the xoshiro256** stream, advancing ``state``."""
    s0, s1, s2, s3 = (int(state[i]) for i in range(4))
    n = out.shape[0]
    for i in range(n):
        out[i] = (_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3


def box_muller(bits_a, bits_b):
    """Map two uint64 arrays to a pair of standard-normal arrays.

    ``u1 = (bits_a >> 11 + 1) * 2^-53`` lies in (0, 1] so the log is finite;
    ``u2 = (bits_b >> 11) * 2^-53`` lies in [0, 1).
    """
    scale = 2.0 ** -53
    u1 = ((bits_a >> np.uint64(11)).astype(np.float64) + 1.0) * scale
    u2 = (bits_b >> np.uint64(11)).astype(np.float64) * scale
    r = np.sqrt(-2.0 * np.log(u1))
    ang = (2.0 * math.pi) * u2
    return r * np.cos(ang), r * np.sin(ang)
