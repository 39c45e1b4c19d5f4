"""Datasets: LIBSVM-format IO, feature scaling, simulation generators, and
deterministic train/test splitting.

All randomness flows through the pinned portable generator so datasets,
label flips, and fold assignments reproduce bit-for-bit everywhere.
"""

from dataclasses import dataclass

import numpy as np

from .rng import Rng


@dataclass(frozen=True)
class Dataset:
    """Dense features with either a +-1 label vector (binary) or a +-1
    label matrix (multi-label)."""

    features: np.ndarray
    labels: np.ndarray

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def multilabel(self):
        return self.labels.ndim == 2

    def split_classes(self):
        """(positives, negatives) feature matrices of a binary dataset."""
        if self.multilabel:
            raise ValueError("split_classes applies to binary datasets only")
        return self.features[self.labels > 0.0], self.features[self.labels < 0.0]


def _parse_label_field(field, lineno):
    try:
        val = float(field)
    except ValueError:
        raise ValueError(f"line {lineno}: malformed label {field!r}") from None
    if val in (0.0, -1.0):
        return -1.0
    if val == 1.0:
        return 1.0
    raise ValueError(f"line {lineno}: label {field!r} is not in {{0, 1, -1, +1}}")


def _parse_multilabel_field(field, lineno):
    if field == "":
        return ()
    out = []
    for tok in field.split(","):
        try:
            k = int(tok)
        except ValueError:
            raise ValueError(f"line {lineno}: malformed label list {field!r}") from None
        if k < 1:
            raise ValueError(f"line {lineno}: label indices are 1-based, got {k}")
        out.append(k)
    return tuple(out)


def load_libsvm(path, multilabel=False, n_labels=None):
    """Load a LIBSVM-format file into a dense Dataset.

    Feature indices are 1-based; omitted features are zero; the feature
    count is the maximum index seen anywhere in the file. Binary labels in
    {0, 1, -1, +1} map to {-1, +1} (0 maps to -1). Multi-label lines carry a
    comma-separated list of positive 1-based label indices (possibly empty);
    n_labels defaults to the largest index seen. Duplicate feature indices
    on a line and malformed tokens raise with the offending line number.
    """
    rows = []
    max_feat = 0
    max_label = 0
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            # a leading space means an empty (multi-label) label field
            head, _, rest = line.partition(" ")
            if multilabel:
                label = _parse_multilabel_field(head, lineno)
                if label:
                    max_label = max(max_label, max(label))
            else:
                label = _parse_label_field(head, lineno)
            feats = {}
            for tok in rest.split():
                idx_s, sep, val_s = tok.partition(":")
                if not sep:
                    raise ValueError(f"line {lineno}: malformed feature token {tok!r}")
                try:
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise ValueError(f"line {lineno}: malformed feature token {tok!r}") from None
                if idx < 1:
                    raise ValueError(f"line {lineno}: feature indices are 1-based, got {idx}")
                if idx in feats:
                    raise ValueError(f"line {lineno}: duplicate feature index {idx}")
                feats[idx] = val
                max_feat = max(max_feat, idx)
            rows.append((label, feats))
    if not rows:
        raise ValueError(f"{path}: no samples")
    q = len(rows)
    features = np.zeros((q, max_feat))
    for r, (_, feats) in enumerate(rows):
        for idx, val in feats.items():
            features[r, idx - 1] = val
    if multilabel:
        width = n_labels if n_labels is not None else max_label
        if width < 1:
            raise ValueError(f"{path}: no positive labels and n_labels not given")
        if max_label > width:
            raise ValueError(f"{path}: label index {max_label} exceeds n_labels={width}")
        labels = -np.ones((q, width))
        for r, (label, _) in enumerate(rows):
            for k in label:
                labels[r, k - 1] = 1.0
    else:
        labels = np.array([label for label, _ in rows])
    return Dataset(features=features, labels=labels)


def save_libsvm(dataset, path):
    """Write a Dataset in LIBSVM format (zeros omitted, 17 significant digits
    so a load round-trips bit-for-bit)."""
    with open(path, "w", encoding="ascii") as fh:
        for r in range(dataset.n_samples):
            if dataset.multilabel:
                pos = np.nonzero(dataset.labels[r] > 0.0)[0] + 1
                head = ",".join(str(int(k)) for k in pos)
            else:
                head = "+1" if dataset.labels[r] > 0.0 else "-1"
            row = dataset.features[r]
            toks = [f"{idx + 1}:{row[idx]:.17g}" for idx in np.nonzero(row != 0.0)[0]]
            fh.write(head + ("" if not toks else " " + " ".join(toks)) + "\n")


@dataclass(frozen=True)
class FeatureScaler:
    """Columnwise affine map fitted on training data: min -> -1, max -> +1,
    constant columns -> 0."""

    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def fit(cls, features):
        features = np.asarray(features, dtype=np.float64)
        return cls(lo=features.min(axis=0), hi=features.max(axis=0))

    def transform(self, features):
        features = np.asarray(features, dtype=np.float64)
        span = self.hi - self.lo
        safe = np.where(span == 0.0, 1.0, span)
        out = (2.0 * (features - self.lo) - span) / safe
        return np.where(span == 0.0, 0.0, out)


def scale_features(dataset):
    """Dataset with every feature column mapped onto [-1, 1] (fit on itself)."""
    scaler = FeatureScaler.fit(dataset.features)
    return Dataset(features=scaler.transform(dataset.features), labels=dataset.labels)


def gen_example1(q, n, p, r, seed):
    """Two-Gaussian binary classification instance.

    Positives draw from N(mu1, diag(s1)), negatives from N(mu2, diag(s2))
    with mu ~ N(0, I) and diagonal variances |N(0, 1)|. q_pos = ceil(p * q);
    the first floor(r * q_pos) samples of each class (generation order) get
    flipped labels. Returns the positives-then-negatives Dataset.
    """
    q, n = int(q), int(n)
    if q < 2 or n < 1:
        raise ValueError("need q >= 2 and n >= 1")
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if not (0.0 <= r < 1.0):
        raise ValueError(f"r must lie in [0, 1), got {r}")
    q_pos = int(np.ceil(p * q))
    q_neg = q - q_pos
    if q_pos < 1 or q_neg < 1:
        raise ValueError(f"degenerate class sizes: q_pos={q_pos}, q_neg={q_neg}")
    rng = Rng(seed)
    mu1 = rng.normal(n)
    mu2 = rng.normal(n)
    s1 = np.sqrt(rng.folded_normal(n))
    s2 = np.sqrt(rng.folded_normal(n))
    x_pos = mu1 + s1 * rng.normal(q_pos * n).reshape(q_pos, n)
    x_neg = mu2 + s2 * rng.normal(q_neg * n).reshape(q_neg, n)
    labels = np.concatenate([np.ones(q_pos), -np.ones(q_neg)])
    flips = int(np.floor(r * q_pos))
    labels[:flips] = -1.0
    labels[q_pos:q_pos + flips] = 1.0
    return Dataset(features=np.vstack([x_pos, x_neg]), labels=labels)


def gen_example3(q, d, n_labels, seed):
    """Multi-label instance with exactly realizable labels.

    Features are N(0, 1) with an appended all-ones intercept column; the
    ground-truth weights are uniform on (-1, 1); labels are the sign of the
    scores with sign(0) = -1.
    """
    q, d, n_labels = int(q), int(d), int(n_labels)
    if q < 1 or d < 1 or n_labels < 1:
        raise ValueError("need q >= 1, d >= 1 (d counts the intercept), n_labels >= 1")
    rng = Rng(seed)
    c = np.empty((q, d))
    c[:, :-1] = rng.normal(q * (d - 1)).reshape(q, d - 1)
    c[:, -1] = 1.0
    w = rng.uniform(-1.0, 1.0, d * n_labels).reshape(d, n_labels)
    scores = c @ w
    labels = np.where(scores > 0.0, 1.0, -1.0)
    return Dataset(features=c, labels=labels)


def _positive_counts(labels):
    if labels.ndim == 1:
        return (labels > 0.0).astype(np.int64)[:, None]
    return (labels > 0.0).astype(np.int64)


def kfold_splits(dataset, k, seed, stratified=True):
    """List of (train_idx, test_idx) pairs partitioning the samples into k
    folds. Stratified splitting balances every label's positives across
    folds (within one sample for a binary label)."""
    q = dataset.n_samples
    k = int(k)
    if not (2 <= k <= q):
        raise ValueError(f"need 2 <= k <= {q}, got k={k}")
    rng = Rng(seed)
    order = rng.permutation(q)
    fold_of = np.empty(q, dtype=np.int64)
    if not stratified:
        for pos, idx in enumerate(order):
            fold_of[idx] = pos % k
    elif not dataset.multilabel:
        # round-robin within each class, so class counts differ by <= 1
        next_fold = 0
        for cls in (1.0, -1.0):
            for idx in order:
                if dataset.labels[idx] == cls:
                    fold_of[idx] = next_fold % k
                    next_fold += 1
    else:
        # greedy proportional allocation, rarest positive label first
        pos = _positive_counts(dataset.labels)
        totals = pos.sum(axis=0)
        rarity = np.argsort(totals, kind="stable")
        deficit = np.repeat(totals[None, :] / k, k, axis=0)  # desired positives left
        capacity = np.full(k, q / k)
        assigned = np.zeros(q, dtype=bool)
        rank = {int(idx): pos_i for pos_i, idx in enumerate(order)}
        for lab in rarity:
            members = [i for i in range(q) if pos[i, lab] and not assigned[i]]
            members.sort(key=lambda i: rank[i])
            for i in members:
                want = deficit[:, lab] + 1e-9 * capacity
                f = int(np.argmax(want))
                fold_of[i] = f
                assigned[i] = True
                deficit[f] -= pos[i]
                capacity[f] -= 1.0
        rest = [i for i in order if not assigned[i]]
        for i in rest:
            f = int(np.argmax(capacity))
            fold_of[i] = f
            capacity[f] -= 1.0
    splits = []
    for f in range(k):
        test = np.nonzero(fold_of == f)[0]
        train = np.nonzero(fold_of != f)[0]
        if test.size == 0 or train.size == 0:
            raise ValueError(f"fold {f} is empty; fewer samples than folds?")
        splits.append((train, test))
    return splits


def holdout_split(dataset, train_fraction, seed, stratified=True):
    """One (train_idx, test_idx) pair with round(train_fraction * q) training
    samples, stratified per class for binary labels."""
    q = dataset.n_samples
    if not (0.0 < train_fraction < 1.0):
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    rng = Rng(seed)
    order = rng.permutation(q)
    n_train = int(round(train_fraction * q))
    n_train = min(max(n_train, 1), q - 1)
    if stratified and not dataset.multilabel:
        train = []
        test = []
        for cls in (1.0, -1.0):
            members = [i for i in order if dataset.labels[i] == cls]
            take = int(round(train_fraction * len(members)))
            take = min(max(take, 1 if len(members) > 1 else 0), max(len(members) - 1, 0))
            train.extend(members[:take])
            test.extend(members[take:])
        return np.sort(np.array(train, dtype=np.int64)), np.sort(np.array(test, dtype=np.int64))
    train = order[:n_train]
    test = order[n_train:]
    return np.sort(train), np.sort(test)


def subset(dataset, idx):
    """Dataset restricted to the given sample indices."""
    return Dataset(features=dataset.features[idx], labels=dataset.labels[idx])
