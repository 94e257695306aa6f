"""Comparison baselines: a one-hidden-layer sigmoid network trained by
batch backpropagation with early stopping and restarts, and principal
component analysis for optional input-space reduction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import augment, derive_seed
from .errors import DataError, TrainingError
from .neuron import sigmoid

__all__ = ["PcaTransform", "FnnModel", "FnnConfig", "TrainingCurve",
           "pca_fit", "train_fnn", "predict_fnn"]


@dataclass(eq=False)
class PcaTransform:
    """Orthonormal component rows, their explained-variance fractions
    (non-increasing), and the centering means."""

    components: np.ndarray   # (k, m)
    explained: np.ndarray    # (k,) fractions of total variance
    mean: np.ndarray         # (m,)

    @property
    def retained(self):
        return self.components.shape[0]

    def transform(self, X):
        return (np.atleast_2d(np.asarray(X, dtype=float)) - self.mean) @ self.components.T

    def inverse_transform(self, Z):
        return np.atleast_2d(np.asarray(Z, dtype=float)) @ self.components + self.mean


def pca_fit(X, variance_level=1.0) -> PcaTransform:
    """Eigen-decompose the covariance and keep the smallest leading set of
    components whose cumulative explained variance reaches the level."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 2:
        raise DataError("need at least 2 rows")
    if not 0.0 < variance_level <= 1.0:
        raise DataError("variance_level must lie in (0, 1]")
    mean = X.mean(axis=0)
    C = np.cov(X - mean, rowvar=False, bias=True)
    C = np.atleast_2d(C)
    vals, vecs = np.linalg.eigh(C)
    vals = np.clip(vals[::-1], 0.0, None)
    vecs = vecs[:, ::-1]
    total = vals.sum()
    if total <= 0:
        raise DataError("degenerate data: every column is constant")
    fractions = vals / total
    k = int(np.searchsorted(np.cumsum(fractions), variance_level - 1e-12) + 1)
    k = min(k, len(vals))
    return PcaTransform(vecs[:, :k].T.copy(), fractions[:k].copy(), mean)


@dataclass(frozen=True)
class FnnConfig:
    learning_rate: float = 0.5
    max_epochs: int = 2000
    patience: int = 100
    restarts: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise DataError("learning_rate must be positive")
        if self.max_epochs < 1 or self.patience < 1 or self.restarts < 1:
            raise DataError("max_epochs, patience and restarts must be at least 1")


@dataclass(eq=False)
class FnnModel:
    """Fully connected net with one sigmoid hidden layer.

    Binary problems use a single sigmoid output thresholded at 0.5;
    multi-class problems use one output per class and argmax.
    """

    hidden_weights: np.ndarray   # (h, m + 1)
    output_weights: np.ndarray   # (o, h + 1)
    class_count: int
    threshold: float = 0.5

    def forward(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.hidden_weights.shape[1] - 1:
            raise DataError(f"expected {self.hidden_weights.shape[1] - 1} features, "
                            f"got {X.shape[1]}")
        H = sigmoid(augment(X) @ self.hidden_weights.T)
        return sigmoid(augment(H) @ self.output_weights.T)

    def predict_classes(self, X):
        out = self.forward(X)
        if out.shape[1] == 1:
            return (out[:, 0] >= self.threshold).astype(int)
        return np.argmax(out, axis=1)


@dataclass(eq=False)
class TrainingCurve:
    """Per-epoch classification errors; best_epoch is the argmin of the
    validation error (first occurrence)."""

    train_errors: list
    val_errors: list
    best_epoch: int


def _targets(labels, class_count):
    if class_count == 2:
        return labels.astype(float)[:, None]
    T = np.zeros((labels.shape[0], class_count))
    T[np.arange(labels.shape[0]), labels] = 1.0
    return T


def fnn_loss(hidden_w, output_w, X, T):
    """Mean squared error over rows and output units."""
    H = sigmoid(augment(X) @ hidden_w.T)
    O = sigmoid(augment(H) @ output_w.T)
    return float(np.mean(np.sum((O - T) ** 2, axis=1)))


def fnn_gradients(hidden_w, output_w, X, T):
    """Backpropagated gradients of fnn_loss for both weight matrices."""
    Xa = augment(X)
    H = sigmoid(Xa @ hidden_w.T)
    Ha = augment(H)
    O = sigmoid(Ha @ output_w.T)
    n = X.shape[0]
    d_out = 2.0 * (O - T) * O * (1.0 - O) / n
    g_out = d_out.T @ Ha
    d_hid = (d_out @ output_w[:, 1:]) * H * (1.0 - H)
    g_hid = d_hid.T @ Xa
    return g_hid, g_out


def train_fnn(train, val, hidden, cfg: FnnConfig = FnnConfig()):
    """Batch gradient descent with early stopping at the validation minimum.

    Each restart draws fresh uniform [-0.5, 0.5] weights, descends for up
    to max_epochs (stopping `patience` epochs past the running validation
    minimum), and snapshots the weights at that minimum. A restart whose
    loss turns non-finite is abandoned and counted as failed. The restart
    with the lowest snapshot validation error wins.

    Returns (model, TrainingCurve of the winning restart).
    """
    if hidden < 1:
        raise DataError("need at least 1 hidden neuron")
    r = train.class_count
    T_tr = _targets(train.labels, r)
    T_va = _targets(val.labels, r)
    out_units = T_tr.shape[1]
    m = train.n_features

    best = None
    for restart in range(cfg.restarts):
        rng = np.random.default_rng(derive_seed(cfg.seed, restart))
        w_hid = rng.uniform(-0.5, 0.5, size=(hidden, m + 1))
        w_out = rng.uniform(-0.5, 0.5, size=(out_units, hidden + 1))
        model = FnnModel(w_hid, w_out, r)

        def errors():
            e_tr = float(np.mean(model.predict_classes(train.features) != train.labels))
            e_va = float(np.mean(model.predict_classes(val.features) != val.labels))
            return e_tr, e_va

        e_tr, e_va = errors()
        curve_tr, curve_va = [e_tr], [e_va]
        best_epoch, best_val = 0, e_va
        snapshot = (w_hid.copy(), w_out.copy())
        failed = False
        for epoch in range(1, cfg.max_epochs + 1):
            g_hid, g_out = fnn_gradients(w_hid, w_out, train.features, T_tr)
            w_hid -= cfg.learning_rate * g_hid
            w_out -= cfg.learning_rate * g_out
            if not (np.isfinite(w_hid).all() and np.isfinite(w_out).all()):
                failed = True
                break
            e_tr, e_va = errors()
            curve_tr.append(e_tr)
            curve_va.append(e_va)
            if e_va < best_val:
                best_val = e_va
                best_epoch = epoch
                snapshot = (w_hid.copy(), w_out.copy())
            if epoch - best_epoch >= cfg.patience:
                break
        if failed:
            continue
        if best is None or best_val < best[0]:
            curve = TrainingCurve(curve_tr, curve_va, best_epoch)
            best = (best_val, restart, snapshot, curve)
    if best is None:
        raise TrainingError("every restart diverged to non-finite loss")
    _, _, (w_hid, w_out), curve = best
    return FnnModel(w_hid, w_out, r), curve


def predict_fnn(model: FnnModel, x):
    """Classify one example; returns (class, score).

    The score is the sigmoid output for binary models, and the winning
    unit's output for multi-class ones.
    """
    x = np.asarray(x, dtype=float)
    out = model.forward(x[None, :])[0]
    if out.shape[0] == 1:
        return int(out[0] >= model.threshold), float(out[0])
    k = int(np.argmax(out))
    return k, float(out[k])
