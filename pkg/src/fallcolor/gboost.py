"""From-scratch multiclass gradient boosting over point feature vectors.

Softmax objective (multinomial deviance): per stage, one depth-limited
regression tree per class is fit to that class's negative gradient
(indicator minus predicted probability) by exact greedy variance-reduction
splits, and leaves take the standard Newton step. Deterministic given
(dataset, schema, hyperparams, seed).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .core import (GREEN, TRUNK, YELLOW, ClassifiedCloud, ColoredPointCloud,
                   FeatureSchema, LabelDataset)
from .errors import ArityError, DegenerateInputError, EmptyCloudError, FormatError, ValidationError
from .features import featurize

_MODEL_FORMAT = "fallcolor-gbm"
_MODEL_VERSION = 1
_CODE_OF_CLASS = {"Green": GREEN, "Yellow": YELLOW, "Trunk": TRUNK}


@dataclass(frozen=True)
class GbmHyperparams:
    learning_rate: float = 0.1
    max_depth: int = 1
    n_estimators: int = 100
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.learning_rate <= 1:
            raise ValidationError(
                f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.max_depth < 1:
            raise ValidationError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.n_estimators < 1:
            raise ValidationError(f"n_estimators must be >= 1, got {self.n_estimators}")

    def to_dict(self) -> dict:
        return {"learning_rate": self.learning_rate, "max_depth": self.max_depth,
                "n_estimators": self.n_estimators, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "GbmHyperparams":
        return cls(float(d["learning_rate"]), int(d["max_depth"]),
                   int(d["n_estimators"]), int(d.get("seed", 0)))


class RegressionTree:
    """Flat-array binary regression tree (feature < 0 marks a leaf)."""

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.ascontiguousarray(feature, dtype=np.int32)
        self.threshold = np.ascontiguousarray(threshold, dtype=np.float64)
        self.left = np.ascontiguousarray(left, dtype=np.int32)
        self.right = np.ascontiguousarray(right, dtype=np.int32)
        self.value = np.ascontiguousarray(value, dtype=np.float64)

    def add_predictions(self, X: np.ndarray, out: np.ndarray) -> None:
        _kernels.tree_apply(X, self.feature, self.threshold, self.left,
                            self.right, self.value, out)

    def to_lists(self) -> dict:
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(),
                "value": self.value.tolist()}

    @classmethod
    def from_lists(cls, d: dict) -> "RegressionTree":
        return cls(d["feature"], d["threshold"], d["left"], d["right"], d["value"])


class _TreeBuilder:
    """Grows one tree on (X, residuals) with exact greedy splits."""

    def __init__(self, X, residuals, abs_term, max_depth, leaf_scale):
        self.X = X
        self.r = residuals
        self.abs_term = abs_term  # |r| * (1 - |r|) per row, Newton denominator
        self.max_depth = max_depth
        self.leaf_scale = leaf_scale
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def _leaf_value(self, rows: np.ndarray) -> float:
        num = float(self.r[rows].sum())
        den = float(self.abs_term[rows].sum())
        if den < 1e-150:
            return 0.0
        return self.leaf_scale * num / den

    def build(self, rows: np.ndarray, depth: int = 0) -> int:
        node = self._new_node()
        if depth >= self.max_depth or rows.size < 2:
            self.value[node] = self._leaf_value(rows)
            return node
        best_gain, best_feat, best_pos, best_order = 0.0, -1, -1, None
        for f in range(self.X.shape[1]):
            order = rows[np.argsort(self.X[rows, f], kind="stable")]
            pos, gain = _kernels.best_boundary(
                np.ascontiguousarray(self.X[order, f]),
                np.ascontiguousarray(self.r[order]))
            if pos >= 0 and gain > best_gain + 1e-12:
                best_gain, best_feat, best_pos, best_order = gain, f, pos, order
        if best_feat < 0:
            self.value[node] = self._leaf_value(rows)
            return node
        v = self.X[best_order, best_feat]
        self.feature[node] = best_feat
        self.threshold[node] = 0.5 * (float(v[best_pos]) + float(v[best_pos + 1]))
        self.left[node] = self.build(best_order[:best_pos + 1], depth + 1)
        self.right[node] = self.build(best_order[best_pos + 1:], depth + 1)
        return node

    def finish(self) -> RegressionTree:
        return RegressionTree(self.feature, self.threshold, self.left,
                              self.right, self.value)


@dataclass
class GbmModel:
    """Trained ensemble: stages x classes regression trees plus priors."""

    classes: tuple[str, ...]
    schema: FeatureSchema
    hyperparams: GbmHyperparams
    init_scores: np.ndarray  # (K,) log priors
    stages: list[list[RegressionTree]]  # [stage][class]
    metadata: dict = field(default_factory=dict)
    _packed: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def _pack(self) -> tuple:
        """All trees back to back with absolute child indices, stage-major."""
        if self._packed is None:
            class_of_tree, offsets = [], [0]
            feat, thr, left, right, value = [], [], [], [], []
            for stage in self.stages:
                for k, tree in enumerate(stage):
                    base = offsets[-1]
                    class_of_tree.append(k)
                    feat.append(tree.feature)
                    thr.append(tree.threshold)
                    left.append(np.where(tree.left >= 0, tree.left + base, -1))
                    right.append(np.where(tree.right >= 0, tree.right + base, -1))
                    value.append(tree.value)
                    offsets.append(base + len(tree.feature))
            self._packed = (
                np.array(class_of_tree, dtype=np.int32),
                np.concatenate(feat).astype(np.int32),
                np.concatenate(thr),
                np.concatenate(left).astype(np.int32),
                np.concatenate(right).astype(np.int32),
                np.concatenate(value),
                np.array(offsets, dtype=np.int32),
            )
        return self._packed

    def raw_scores(self, X: np.ndarray) -> np.ndarray:
        if X.ndim != 2 or X.shape[1] != self.schema.arity:
            raise ArityError(f"expected (n, {self.schema.arity}) features, "
                             f"got {X.shape}")
        X = np.ascontiguousarray(X, dtype=np.float64)
        contributions = np.zeros((X.shape[0], self.n_classes))
        _kernels.ensemble_apply(X, *self._pack(), contributions)
        return self.init_scores + self.hyperparams.learning_rate * contributions

    def predict_batch(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(argmax class indices, softmax probabilities) for rows of X."""
        probs = _softmax(self.raw_scores(X))
        return probs.argmax(axis=1), probs


def _softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _deviance(probs: np.ndarray, y_idx: np.ndarray) -> float:
    """Mean multinomial deviance (negative log-likelihood)."""
    p = np.clip(probs[np.arange(len(y_idx)), y_idx], 1e-300, None)
    return float(-np.mean(np.log(p)))


def stratified_split(labels: list[str], fraction: float,
                     seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic per-class shuffle split; returns (train idx, test idx)."""
    rng = np.random.default_rng(seed)
    labels_arr = np.asarray(labels)
    train, test = [], []
    for cls in sorted(set(labels)):
        idx = np.flatnonzero(labels_arr == cls)
        idx = idx[rng.permutation(idx.size)]
        n_train = max(1, min(idx.size - 1, int(round(fraction * idx.size))))
        train.append(idx[:n_train])
        test.append(idx[n_train:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def train(dataset: LabelDataset, schema: FeatureSchema, hp: GbmHyperparams,
          split_fraction: float = 0.8) -> tuple[GbmModel, float, float]:
    """Fit the boosted ensemble; returns (model, train_acc, test_acc).

    The split is stratified by class and seeded by hp.seed; per-stage
    training deviance is recorded in model.metadata["deviance_path"].
    """
    if not 0 < split_fraction < 1:
        raise ValidationError(f"split_fraction must be in (0, 1), got {split_fraction}")
    X, labels = dataset.feature_matrix(schema)
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise DegenerateInputError(
            f"training needs >= 2 classes, got {classes}")
    counts = dataset.class_counts()
    thin = {c: n for c, n in counts.items() if n < 10}
    if thin:
        raise ValidationError(f"need >= 10 rows per class, got {thin}")

    train_idx, test_idx = stratified_split(labels, split_fraction, hp.seed)
    class_index = {c: k for k, c in enumerate(classes)}
    y_idx = np.array([class_index[c] for c in labels], dtype=np.int64)
    K = len(classes)

    Xtr = np.ascontiguousarray(X[train_idx])
    ytr = y_idx[train_idx]
    n_tr = len(train_idx)
    Y = np.zeros((n_tr, K))
    Y[np.arange(n_tr), ytr] = 1.0

    priors = np.bincount(ytr, minlength=K) / n_tr
    init_scores = np.log(np.clip(priors, 1e-12, None))
    F = np.tile(init_scores, (n_tr, 1))
    leaf_scale = (K - 1) / K if K > 1 else 1.0

    stages: list[list[RegressionTree]] = []
    deviance_path = [_deviance(_softmax(F), ytr)]
    all_rows = np.arange(n_tr)
    for _ in range(hp.n_estimators):
        P = _softmax(F)
        stage: list[RegressionTree] = []
        for k in range(K):
            r = Y[:, k] - P[:, k]
            builder = _TreeBuilder(Xtr, r, np.abs(r) * (1.0 - np.abs(r)),
                                   hp.max_depth, leaf_scale)
            builder.build(all_rows)
            tree = builder.finish()
            stage.append(tree)
            contrib = np.zeros(n_tr)
            tree.add_predictions(Xtr, contrib)
            F[:, k] += hp.learning_rate * contrib
        stages.append(stage)
        deviance_path.append(_deviance(_softmax(F), ytr))

    model = GbmModel(classes=classes, schema=schema, hyperparams=hp,
                     init_scores=init_scores, stages=stages)
    pred_train, _ = model.predict_batch(X[train_idx])
    pred_test, _ = model.predict_batch(X[test_idx])
    train_acc = float(np.mean(pred_train == y_idx[train_idx]))
    test_acc = float(np.mean(pred_test == y_idx[test_idx]))
    model.metadata = {
        "train_accuracy": train_acc,
        "test_accuracy": test_acc,
        "deviance_path": deviance_path,
        "n_train": int(n_tr),
        "n_test": int(len(test_idx)),
    }
    return model, train_acc, test_acc


def predict(model: GbmModel, features) -> tuple[str, np.ndarray]:
    """Class name and probability vector for a single feature vector."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.schema.arity:
        raise ArityError(f"expected {model.schema.arity} features, got shape {x.shape}")
    idx, probs = model.predict_batch(x[None, :])
    return model.classes[int(idx[0])], probs[0]


@dataclass
class SweepRow:
    hyperparams: GbmHyperparams
    train_accuracy: float | None
    test_accuracy: float | None
    error: str | None = None


@dataclass
class SweepReport:
    rows: list[SweepRow]
    best: GbmHyperparams | None

    def to_dict(self) -> dict:
        return {
            "rows": [{"hyperparams": r.hyperparams.to_dict(),
                      "train_accuracy": r.train_accuracy,
                      "test_accuracy": r.test_accuracy,
                      "error": r.error} for r in self.rows],
            "best": self.best.to_dict() if self.best else None,
        }


def sweep(dataset: LabelDataset, schema: FeatureSchema,
          grid: list[GbmHyperparams], split_fraction: float = 0.8) -> SweepReport:
    """Train per grid point; failures are recorded and the sweep continues.

    Best is the first configuration attaining the maximum test accuracy.
    """
    if not grid:
        raise ValidationError("hyperparameter grid must be nonempty")
    rows: list[SweepRow] = []
    best: GbmHyperparams | None = None
    best_acc = -1.0
    for hp in grid:
        try:
            _, train_acc, test_acc = train(dataset, schema, hp, split_fraction)
        except Exception as exc:  # keep sweeping past bad cells
            rows.append(SweepRow(hp, None, None, error=str(exc)))
            continue
        rows.append(SweepRow(hp, train_acc, test_acc))
        if test_acc > best_acc:
            best_acc, best = test_acc, hp
    return SweepReport(rows=rows, best=best)


def classify_gbm(cloud: ColoredPointCloud, model: GbmModel) -> ClassifiedCloud:
    """Per-point featurize + predict; labels are Green/Yellow/Trunk codes."""
    if cloud.n_points == 0:
        raise EmptyCloudError("cannot classify an empty cloud")
    X = featurize(cloud, model.schema)
    # softmax is monotone, so the raw scores already decide the label
    idx = model.raw_scores(X).argmax(axis=1)
    code_of = np.array([_CODE_OF_CLASS[c] for c in model.classes], dtype=np.uint8)
    return ClassifiedCloud(cloud, code_of[idx])


def save_model(model: GbmModel, path) -> None:
    """Versioned JSON document; load_model reproduces predictions bit-exactly."""
    doc = {
        "format": _MODEL_FORMAT,
        "version": _MODEL_VERSION,
        "classes": list(model.classes),
        "schema": model.schema.to_dict(),
        "hyperparams": model.hyperparams.to_dict(),
        "init_scores": model.init_scores.tolist(),
        "metadata": model.metadata,
        "stages": [[t.to_lists() for t in stage] for stage in model.stages],
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True))


def load_model(path) -> GbmModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != _MODEL_FORMAT or doc.get("version") != _MODEL_VERSION:
        raise FormatError(f"{path}: not a {_MODEL_FORMAT} v{_MODEL_VERSION} document")
    return GbmModel(
        classes=tuple(doc["classes"]),
        schema=FeatureSchema.from_dict(doc["schema"]),
        hyperparams=GbmHyperparams.from_dict(doc["hyperparams"]),
        init_scores=np.asarray(doc["init_scores"], dtype=np.float64),
        stages=[[RegressionTree.from_lists(t) for t in stage]
                for stage in doc["stages"]],
        metadata=doc.get("metadata", {}),
    )
