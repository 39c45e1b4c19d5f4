"""Application builders: AUC maximization and sparse multi-label classification.

Both tasks instantiate the same dual template. The constraint operators are
matrix-free: the AUC operator encodes all positive-negative sample pairs
(row (i, j) is x-_j - x+_i) without materializing the q+ * q- rows, and the
multi-label operator is block diagonal over labels with rows -y_i^(k) c_i.
"""

from dataclasses import dataclass

import numpy as np

from .dual import DualProblem
from .models import ElasticNetModel, SquaredL2Model
from .operators import LinearMap, as_index_set, as_vector
from .solver import AdaptiveTau, SolverConfig


def _as_matrix(a, name):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{name}: expected a nonempty 2-D array, got shape {np.shape(a)}")
    if not np.isfinite(a).all():
        raise ValueError(f"{name}: non-finite entries")
    return a


class AucPairOperator(LinearMap):
    """Pairwise difference operator for AUC maximization.

    Row (i, j) equals x-_j - x+_i, laid out row-major with the negative-class
    index j fastest. Products reduce to class-wise matrix products, so
    nothing of size q+ * q- is ever formed except vectors.
    """

    def __init__(self, x_pos, x_neg):
        self.x_pos = _as_matrix(x_pos, "x_pos")
        self.x_neg = _as_matrix(x_neg, "x_neg")
        if self.x_pos.shape[1] != self.x_neg.shape[1]:
            raise ValueError("x_pos and x_neg must have the same number of features")
        self.q_pos = self.x_pos.shape[0]
        self.q_neg = self.x_neg.shape[0]

    @property
    def shape(self):
        return (self.q_pos * self.q_neg, self.x_pos.shape[1])

    def matvec(self, x):
        x = as_vector(x, self.shape[1], "x")
        s_pos = self.x_pos @ x
        s_neg = self.x_neg @ x
        return (s_neg[None, :] - s_pos[:, None]).ravel()

    def rmatvec(self, z):
        z = as_vector(z, self.shape[0], "z")
        zm = z.reshape(self.q_pos, self.q_neg)
        return self.x_neg.T @ zm.sum(axis=0) - self.x_pos.T @ zm.sum(axis=1)

    def matvec_rows(self, rows, x):
        idx = as_index_set(rows, self.shape[0])
        x = as_vector(x, self.shape[1], "x")
        i = idx // self.q_neg
        j = idx - i * self.q_neg
        return (self.x_neg @ x)[j] - (self.x_pos @ x)[i]

    def rmatvec_rows(self, rows, zr):
        idx = as_index_set(rows, self.shape[0])
        zr = as_vector(zr, idx.size, "zr")
        i = idx // self.q_neg
        j = idx - i * self.q_neg
        w_neg = np.bincount(j, weights=zr, minlength=self.q_neg)
        w_pos = np.bincount(i, weights=zr, minlength=self.q_pos)
        return self.x_neg.T @ w_neg - self.x_pos.T @ w_pos

    def row_sqnorms(self):
        sq_pos = np.einsum("ij,ij->i", self.x_pos, self.x_pos)
        sq_neg = np.einsum("ij,ij->i", self.x_neg, self.x_neg)
        cross = self.x_pos @ self.x_neg.T
        return (sq_pos[:, None] + sq_neg[None, :] - 2.0 * cross).ravel()

    def frob_sq(self):
        sq_pos = float(np.einsum("ij,ij->", self.x_pos, self.x_pos))
        sq_neg = float(np.einsum("ij,ij->", self.x_neg, self.x_neg))
        cross = float(np.dot(self.x_pos.sum(axis=0), self.x_neg.sum(axis=0)))
        return self.q_pos * sq_neg + self.q_neg * sq_pos - 2.0 * cross


class MultiLabelOperator(LinearMap):
    """Block-diagonal operator for multi-label classification.

    Block k (one per label) has rows -y_i^(k) c_i; the flat row index is
    k * q + i and the flat column index is k * d + t, so both z and x are
    laid out label-major.
    """

    def __init__(self, features, labels):
        self.c = _as_matrix(features, "features")
        y = np.ascontiguousarray(labels, dtype=np.float64)
        if y.ndim != 2 or y.shape[0] != self.c.shape[0]:
            raise ValueError("labels must be (q, n_labels) aligned with features")
        if not np.isin(y, (-1.0, 1.0)).all():
            raise ValueError("labels must take values in {-1, +1}")
        self.y = y
        self.q, self.d = self.c.shape
        self.n_labels = y.shape[1]

    @property
    def shape(self):
        return (self.q * self.n_labels, self.d * self.n_labels)

    def matvec(self, x):
        x = as_vector(x, self.shape[1], "x")
        xm = x.reshape(self.n_labels, self.d)
        scores = self.c @ xm.T  # (q, n_labels)
        return (-(self.y * scores)).T.ravel()

    def rmatvec(self, z):
        z = as_vector(z, self.shape[0], "z")
        zm = z.reshape(self.n_labels, self.q)
        w = -(self.y.T * zm)  # (n_labels, q)
        return (w @ self.c).ravel()

    def row_sqnorms(self):
        sq = np.einsum("ij,ij->i", self.c, self.c)
        return np.tile(sq, self.n_labels)

    def frob_sq(self):
        return self.n_labels * float(np.einsum("ij,ij->", self.c, self.c))


def build_auc_problem(x_pos, x_neg, **overrides):
    """Dual problem and solver defaults for AUC maximization.

    A unit margin is enforced through b = ones. Defaults: squared-l2 loss,
    mu = tau = 1/(2 ell_h), gamma = 0.1, c1 = 1/(3 ell_h), c2 = 3 ell_h,
    with the zero-start escape enabled (the origin is a proximal fixed
    point at these defaults). Any SolverConfig field can be overridden by
    keyword; ``mu`` flows into both the problem and the config.
    """
    op = AucPairOperator(x_pos, x_neg)
    ell_h = op.frob_sq()
    if not (ell_h > 0.0):
        raise ValueError("degenerate task: the pairwise operator has zero Frobenius norm")
    defaults = dict(
        mu=1.0 / (2.0 * ell_h),
        tau=1.0 / (2.0 * ell_h),
        gamma=0.1,
        c1=1.0 / (3.0 * ell_h),
        c2=3.0 * ell_h,
        escape_zero_init=True,
    )
    defaults.update(overrides)
    config = SolverConfig(**defaults)
    problem = DualProblem.build(op, np.ones(op.shape[0]), SquaredL2Model(),
                                mu=config.mu, ell_h=ell_h)
    return problem, config


def build_mlc_problem(features, labels, lambda1, **overrides):
    """Dual problem and solver defaults for sparse multi-label classification.

    The last feature column must be constant one (the intercept). Defaults:
    elastic-net loss with weight ``lambda1``, mu = 1e-5, gamma = 1e-2,
    c1 = 1e-4, c2 = 1e8, adaptive step-size sweep tau_k = 0.1^j.
    """
    op = MultiLabelOperator(features, labels)
    if not (op.c[:, -1] == 1.0).all():
        raise ValueError("the last feature column must be the all-ones intercept")
    ell_h = op.frob_sq()
    if not (ell_h > 0.0):
        raise ValueError("degenerate task: the feature matrix has zero Frobenius norm")
    defaults = dict(
        mu=1e-5,
        gamma=1e-2,
        c1=1e-4,
        c2=1e8,
        adaptive_tau=AdaptiveTau(),
        escape_zero_init=True,
    )
    defaults.update(overrides)
    config = SolverConfig(**defaults)
    problem = DualProblem.build(op, np.ones(op.shape[0]), ElasticNetModel(lambda1),
                                mu=config.mu, ell_h=ell_h)
    return problem, config


def auc_metric(x_pos, x_neg, x):
    """Empirical AUC of the scorer <x, .>: the fraction of positive-negative
    pairs ranked strictly correctly (ties count zero)."""
    x_pos = _as_matrix(x_pos, "x_pos")
    x_neg = _as_matrix(x_neg, "x_neg")
    s_pos = x_pos @ np.asarray(x, dtype=np.float64)
    s_neg = np.sort(x_neg @ np.asarray(x, dtype=np.float64))
    wins = np.searchsorted(s_neg, s_pos, side="left").sum()
    return float(wins) / (len(s_pos) * len(s_neg))


def hamming_loss(features, labels, x):
    """Fraction of (sample, label) cells the linear classifiers get wrong,
    counting a zero score as predicting -1."""
    pred = predict_labels(features, x, np.asarray(labels).shape[1])
    return float(np.mean(pred != np.asarray(labels, dtype=np.float64)))


def predict_labels(features, x, n_labels):
    """Sign predictions (zero maps to -1) of the label-major stacked weights."""
    features = _as_matrix(features, "features")
    xm = np.asarray(x, dtype=np.float64).reshape(n_labels, -1)
    scores = features @ xm.T
    return np.where(scores > 0.0, 1.0, -1.0)


@dataclass(frozen=True)
class LinearClassifier:
    """Label-major stacked linear classifiers with an intercept column."""

    weights: np.ndarray
    n_features: int
    n_labels: int

    def predict(self, features):
        return predict_labels(features, self.weights, self.n_labels)
