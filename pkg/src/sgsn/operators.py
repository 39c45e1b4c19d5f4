"""Matrix-free linear operators and a conjugate-gradient solver.

Everything downstream touches the constraint matrix through this interface,
so the solver never materializes the (possibly huge) m-by-n matrix.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np


def as_vector(x, n, name="vector"):
    """Validate and return ``x`` as a finite contiguous float64 vector of length ``n``."""
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != n:
        raise ValueError(f"{name}: expected shape ({n},), got {np.shape(x)}")
    if not np.isfinite(v).all():
        raise ValueError(f"{name}: non-finite entries")
    return v


def as_index_set(rows, m):
    """Validate ``rows`` as a strictly increasing int64 index set into range(m)."""
    idx = np.ascontiguousarray(rows, dtype=np.int64)
    if idx.ndim != 1:
        raise ValueError("index set must be one-dimensional")
    if idx.size:
        if idx[0] < 0 or idx[-1] >= m:
            raise ValueError(f"index set out of range for m={m}")
        if idx.size > 1 and not (np.diff(idx) > 0).all():
            raise ValueError("index set must be strictly increasing and duplicate-free")
    return idx


class LinearMap(ABC):
    """Real m-by-n linear operator exposed through products only.

    Subclasses provide the forward and adjoint products; row-restricted
    products default to the full product plus gather/scatter, and structured
    operators override them with cheaper paths.
    """

    @property
    @abstractmethod
    def shape(self):
        """(m, n) pair."""

    @abstractmethod
    def matvec(self, x):
        """A @ x for x of length n."""

    @abstractmethod
    def rmatvec(self, z):
        """A.T @ z for z of length m."""

    def matvec_rows(self, rows, x):
        """Rows ``rows`` of A @ x."""
        return self.matvec(x)[rows]

    def rmatvec_rows(self, rows, zr):
        """A.T @ ztilde where ztilde scatters ``zr`` onto ``rows`` and is zero elsewhere."""
        m = self.shape[0]
        z = np.zeros(m)
        z[rows] = zr
        return self.rmatvec(z)

    def row_sqnorms(self):
        """Squared Euclidean norm of every row, as an m-vector."""
        m, n = self.shape
        out = np.empty(m)
        e = np.zeros(m)
        for i in range(m):
            e[i] = 1.0
            r = self.rmatvec(e)
            out[i] = float(np.dot(r, r))
            e[i] = 0.0
        return out

    def frob_sq(self):
        """Squared Frobenius norm."""
        return float(self.row_sqnorms().sum())


class DenseOperator(LinearMap):
    """LinearMap view of an explicit dense matrix."""

    def __init__(self, a):
        a = np.ascontiguousarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError(f"expected a 2-D array, got ndim={a.ndim}")
        if not np.isfinite(a).all():
            raise ValueError("matrix has non-finite entries")
        self.a = a

    @property
    def shape(self):
        return self.a.shape

    def matvec(self, x):
        return self.a @ as_vector(x, self.a.shape[1], "x")

    def rmatvec(self, z):
        return self.a.T @ as_vector(z, self.a.shape[0], "z")

    def matvec_rows(self, rows, x):
        idx = as_index_set(rows, self.a.shape[0])
        return self.a[idx] @ as_vector(x, self.a.shape[1], "x")

    def rmatvec_rows(self, rows, zr):
        idx = as_index_set(rows, self.a.shape[0])
        zr = as_vector(zr, idx.size, "zr")
        return self.a[idx].T @ zr

    def row_sqnorms(self):
        return np.einsum("ij,ij->i", self.a, self.a)

    def frob_sq(self):
        return float(np.dot(self.a.ravel(), self.a.ravel()))


class IdentityOperator(LinearMap):
    """The n-by-n identity."""

    def __init__(self, n):
        self.n = int(n)

    @property
    def shape(self):
        return (self.n, self.n)

    def matvec(self, x):
        return as_vector(x, self.n, "x").copy()

    def rmatvec(self, z):
        return as_vector(z, self.n, "z").copy()

    def matvec_rows(self, rows, x):
        return as_vector(x, self.n, "x")[as_index_set(rows, self.n)]

    def rmatvec_rows(self, rows, zr):
        idx = as_index_set(rows, self.n)
        out = np.zeros(self.n)
        out[idx] = as_vector(zr, idx.size, "zr")
        return out

    def row_sqnorms(self):
        return np.ones(self.n)

    def frob_sq(self):
        return float(self.n)


@dataclass(frozen=True)
class DiagonalMap:
    """Diagonal operator holding the generalized Jacobian element used by the
    subspace Newton system."""

    diag: np.ndarray

    def apply(self, x):
        return self.diag * x


@dataclass(frozen=True)
class CgResult:
    x: np.ndarray
    residual: float
    iterations: int
    converged: bool


def cg_solve(apply_op, rhs, tol=1e-8, max_iter=None, stall_window=40):
    """Conjugate gradients for a symmetric positive definite ``apply_op``.

    Stops when the true residual satisfies
    ``||apply_op(x) - rhs|| <= tol * max(1, ||rhs||)``; the recurrence
    residual is cross-checked against the true one before declaring success.
    On severely ill-conditioned systems the residual can land on a roundoff
    plateau above the target; if it fails to improve by at least 0.1% within
    ``stall_window`` consecutive iterations, the best iterate seen so far is
    returned instead of grinding until ``max_iter`` (default
    ``2*len(rhs) + 20``). Either early exit is flagged ``converged=False``
    unless the returned iterate happens to meet the target.
    """
    b = np.ascontiguousarray(rhs, dtype=np.float64)
    n = b.shape[0]
    if max_iter is None:
        max_iter = 2 * n + 20
    target = tol * max(1.0, float(np.linalg.norm(b)))
    x = np.zeros(n)
    r = b.copy()
    p = r.copy()
    rs = float(np.dot(r, r))
    best_rs, best_x = rs, x
    mark_rs, mark_it = rs, 0
    it = 0
    while it < max_iter:
        if np.sqrt(rs) <= target:
            true_r = b - apply_op(x)
            rs = float(np.dot(true_r, true_r))
            if np.sqrt(rs) <= target:
                return CgResult(x, float(np.sqrt(rs)), it, True)
            r = true_r
            p = r.copy()
        if it - mark_it >= stall_window:
            true_r = b - apply_op(best_x)
            res = float(np.linalg.norm(true_r))
            return CgResult(best_x, res, it, res <= target)
        ap = apply_op(p)
        denom = float(np.dot(p, ap))
        if not np.isfinite(denom) or denom <= 0.0:
            # loss of positive definiteness: report what we have
            return CgResult(x, float(np.sqrt(rs)), it, False)
        alpha = rs / denom
        x = x + alpha * p
        r = r - alpha * ap
        rs_new = float(np.dot(r, r))
        p = r + (rs_new / rs) * p
        rs = rs_new
        it += 1
        if rs < best_rs:
            best_rs, best_x = rs, x
        if rs < mark_rs * (1.0 - 2e-3):
            mark_rs, mark_it = rs, it
    true_r = b - apply_op(best_x)
    res = float(np.linalg.norm(true_r))
    return CgResult(best_x, res, it, res <= target)
