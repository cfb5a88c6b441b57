"""Soft-margin linear SVMs and the pairwise-elimination multi-class classifier.

Binary models solve the standard soft-margin problem
``min 0.5 w.w + C sum(xi)  s.t.  l_i (w.x_i + b) >= 1 - xi_i, xi_i >= 0``
through its dual with a maximal-violating-pair update (two coordinates per
step, keeping the equality constraint satisfied) to a KKT tolerance. The
multi-class classifier trains one binary model per unordered class pair and
labels by elimination: evaluate the pair of the two surviving extreme
classes, drop the loser, repeat — exactly M-1 evaluations for M classes.

Everything operates directly on whatever feature vectors the dataset holds:
raw taxel signals or compressed measurements alike.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import measurement as _meas
from .datasets import ObservationDataset


@dataclass(frozen=True)
class LinearSvmModel:
    weights: np.ndarray             # (feature_dim,)
    bias: float
    C: float
    support_indices: tuple[int, ...]   # training rows with positive dual weight

    def decision(self, x: np.ndarray) -> float:
        return float(np.dot(self.weights, x) + self.bias)


def _smo_minimize(K: np.ndarray, y: np.ndarray, C: float, tol: float,
                  max_iter: int):
    """Dual solve via maximal-violating-pair updates on beta_i = l_i alpha_i.

    Minimizes 0.5 b^T K b - y^T b over the box [min(0, l_i C), max(0, l_i C)]
    with sum(b) = 0 preserved by construction. Returns (beta, bias, iters).
    """
    n = y.size
    upper = np.where(y > 0, C, 0.0)
    lower = np.where(y > 0, 0.0, -C)
    beta = np.zeros(n)
    d = -y.astype(np.float64)       # gradient K beta - y at beta = 0
    slack = 1e-12 * C
    for it in range(max_iter):
        can_up = beta < upper - slack
        can_dn = beta > lower + slack
        di = np.where(can_up, d, np.inf)
        dj = np.where(can_dn, d, -np.inf)
        i = int(np.argmin(di))
        j = int(np.argmax(dj))
        violation = dj[j] - di[i]
        if violation <= tol:
            lo = float(di[i]) if np.isfinite(di[i]) else 0.0
            hi = float(dj[j]) if np.isfinite(dj[j]) else 0.0
            return beta, -(lo + hi) / 2.0, it
        curvature = K[i, i] + K[j, j] - 2.0 * K[i, j]
        step = violation / max(curvature, 1e-12)
        step = min(step, upper[i] - beta[i], beta[j] - lower[j])
        beta[i] += step
        beta[j] -= step
        d += step * (K[:, i] - K[:, j])
    raise RuntimeError(f"SVM dual solve did not reach tolerance in {max_iter} steps")


def _train_with_gram(X: np.ndarray, y: np.ndarray, K: np.ndarray, C: float,
                     tol: float, max_iter: int) -> LinearSvmModel:
    beta, bias, _ = _smo_minimize(K, y, C, tol, max_iter)
    w = X.T @ beta
    alpha = y * beta                 # alpha_i = l_i beta_i >= 0
    support = tuple(int(i) for i in np.flatnonzero(alpha > 1e-9))
    return LinearSvmModel(w, bias, C, support)


def svm_train(features: np.ndarray, labels: np.ndarray, C: float,
              tol: float = 1e-6, max_iter: int = 1_000_000) -> LinearSvmModel:
    """Train one soft-margin linear SVM; labels must be -1/+1 with both present."""
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError("features must be (N, d) with one label per row")
    if not (np.all(np.isin(y, (-1.0, 1.0))) and np.any(y > 0) and np.any(y < 0)):
        raise ValueError("need both classes present, labels in {-1, +1}")
    if C <= 0:
        raise ValueError("C must be positive")
    return _train_with_gram(X, y, X @ X.T, C, tol, max_iter)


def svm_predict(model: LinearSvmModel, x: np.ndarray):
    """(label, raw margin); a margin of exactly zero predicts +1."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape != model.weights.shape:
        raise ValueError("feature dimension mismatch")
    value = model.decision(x)
    return (1 if value >= 0.0 else -1), value


def hinge_loss(model: LinearSvmModel, features: np.ndarray, labels: np.ndarray) -> float:
    """Mean hinge loss max(0, 1 - l (w.x + b)) over the observations."""
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).ravel()
    if X.shape[0] == 0:
        raise ValueError("need at least one observation")
    margins = y * (X @ model.weights + model.bias)
    return float(np.mean(np.maximum(0.0, 1.0 - margins)))


@dataclass(frozen=True)
class DagSvmModel:
    """All pairwise binary models over a fixed class ordering."""

    class_names: tuple[str, ...]
    models: dict          # (a, b) with a < b -> LinearSvmModel; +1 means class b

    def __post_init__(self):
        m = len(self.class_names)
        expected = m * (m - 1) // 2
        if len(self.models) != expected:
            raise ValueError(f"expected {expected} pairwise models, got {len(self.models)}")

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def feature_dim(self) -> int:
        first = next(iter(self.models.values()))
        return first.weights.size


def dagsvm_train(dataset: ObservationDataset, C: float, tol: float = 1e-6,
                 max_iter: int = 1_000_000) -> DagSvmModel:
    """One binary SVM per unordered class pair, from that pair's rows only."""
    m = dataset.n_classes
    if m < 2:
        raise ValueError("need at least 2 classes")
    counts = np.bincount(dataset.labels, minlength=m)
    if np.any(counts == 0):
        missing = dataset.class_names[int(np.argmin(counts))]
        raise ValueError(f"class {missing!r} has no observations")
    models = {}
    for a in range(m):
        for b in range(a + 1, m):
            X, y = dataset.rows_for_classes(a, b)
            models[(a, b)] = _train_with_gram(X, y, X @ X.T, C, tol, max_iter)
    return DagSvmModel(dataset.class_names, models)


def _stacked(model: DagSvmModel):
    pairs = sorted(model.models)
    W = np.stack([model.models[p].weights for p in pairs])
    b = np.array([model.models[p].bias for p in pairs])
    m = model.n_classes
    row = np.full((m, m), -1, dtype=np.int64)
    for idx, (a, c) in enumerate(pairs):
        row[a, c] = idx
    return W, b, row


def classify_batch(model: DagSvmModel, features: np.ndarray) -> np.ndarray:
    """Vectorized elimination tournament; returns class indices per row."""
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.feature_dim:
        raise ValueError("feature dimension mismatch")
    W, b, row = _stacked(model)
    margins = X @ W.T + b
    n = X.shape[0]
    lo = np.zeros(n, dtype=np.int64)
    hi = np.full(n, model.n_classes - 1, dtype=np.int64)
    idx = np.arange(n)
    for _ in range(model.n_classes - 1):
        decisions = margins[idx, row[lo, hi]] >= 0.0   # +1: the higher class survives
        lo = np.where(decisions, lo + 1, lo)
        hi = np.where(decisions, hi, hi - 1)
    return lo


def dagsvm_decision_path(model: DagSvmModel, x: np.ndarray):
    """(label index, evaluations) where evaluations lists each (pair, winner)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape != (model.feature_dim,):
        raise ValueError("feature dimension mismatch")
    lo, hi = 0, model.n_classes - 1
    path = []
    while lo < hi:
        pair = (lo, hi)
        label, _ = svm_predict(model.models[pair], x)
        winner = hi if label == 1 else lo
        path.append((pair, winner))
        if label == 1:
            lo += 1
        else:
            hi -= 1
    return lo, path


def dagsvm_classify(model: DagSvmModel, x: np.ndarray) -> int:
    label, _ = dagsvm_decision_path(model, x)
    return label


def accuracy(model: DagSvmModel, dataset: ObservationDataset) -> float:
    predicted = classify_batch(model, dataset.features)
    return float(np.mean(predicted == dataset.labels))


def confusion_matrix(model: DagSvmModel, dataset: ObservationDataset) -> np.ndarray:
    """Row-normalized percentages: entry (actual, predicted) out of 100."""
    if dataset.n_observations == 0:
        raise ValueError("need a non-empty test set")
    m = model.n_classes
    predicted = classify_batch(model, dataset.features)
    counts = np.zeros((m, m))
    np.add.at(counts, (dataset.labels, predicted), 1.0)
    totals = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(totals > 0, 100.0 * counts / totals, 0.0)
    return out


@dataclass(frozen=True)
class CrossValResult:
    model: DagSvmModel
    C: float
    dev_perturbations: np.ndarray
    val_perturbations: np.ndarray
    test_perturbations: np.ndarray
    val_accuracy_by_C: dict


def cross_validate(dataset: ObservationDataset, C_grid=None,
                   dev_fraction: float = 0.4, val_fraction: float = 0.2,
                   split_seed: int = 0, tol: float = 1e-6) -> CrossValResult:
    """Grid-search C on a perturbation-level split, then retrain on dev+val.

    Perturbations (not observations) are sampled, so every object contributes
    the same poses to each side of the split and the dev/val/test sets share
    no poses. Ties in validation accuracy go to the smaller C. The held-out
    perturbations form the test set.
    """
    if C_grid is None:
        C_grid = default_c_grid()
    C_grid = sorted(float(c) for c in C_grid)
    if not C_grid:
        raise ValueError("C grid must be non-empty")
    if dev_fraction <= 0 or val_fraction <= 0 or dev_fraction + val_fraction > 1:
        raise ValueError("need dev, val > 0 and dev + val <= 1")
    P = len(dataset.perturbations)
    n_dev = int(round(dev_fraction * P))
    n_val = int(round(val_fraction * P))
    if n_dev < 1 or n_val < 1 or n_dev + n_val > P:
        raise ValueError(f"degenerate split: {n_dev} dev / {n_val} val of {P}")

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(split_seed))))
    order = rng.permutation(P)
    dev_ids = np.sort(order[:n_dev])
    val_ids = np.sort(order[n_dev:n_dev + n_val])
    test_ids = np.sort(order[n_dev + n_val:])

    dev_set = dataset.subset_by_perturbations(dev_ids)
    val_set = dataset.subset_by_perturbations(val_ids)
    scores = {}
    best_C, best_acc = None, -1.0
    for C in C_grid:
        candidate = dagsvm_train(dev_set, C, tol=tol)
        scores[C] = accuracy(candidate, val_set)
        if scores[C] > best_acc:
            best_C, best_acc = C, scores[C]
    final_set = dataset.subset_by_perturbations(np.concatenate([dev_ids, val_ids]))
    final = dagsvm_train(final_set, best_C, tol=tol)
    return CrossValResult(final, best_C, dev_ids, val_ids, test_ids, scores)


def default_c_grid() -> list[float]:
    """Log-spaced grid 2^-5, 2^-3, ..., 2^9."""
    return [2.0 ** e for e in range(-5, 10, 2)]


def compress_dataset(dataset: ObservationDataset,
                     op: _meas.MeasurementOperator) -> ObservationDataset:
    """Replace sensor-signal features with their compressed measurements."""
    return dataset.with_features(_meas.apply_rows(op, dataset.features))


def dag_model_to_json(model: DagSvmModel) -> dict:
    pairs = [
        {"a": a, "b": b, "weights": m.weights.tolist(), "bias": m.bias, "C": m.C}
        for (a, b), m in sorted(model.models.items())
    ]
    return {"class_names": list(model.class_names), "pairs": pairs}


def dag_model_from_json(data: dict) -> DagSvmModel:
    models = {
        (int(p["a"]), int(p["b"])): LinearSvmModel(
            np.asarray(p["weights"], dtype=np.float64), float(p["bias"]),
            float(p["C"]), ())
        for p in data["pairs"]
    }
    return DagSvmModel(tuple(data["class_names"]), models)
