"""Shared data types: point clouds, label datasets, manifests, observations.

Label codes are small ints so per-point label arrays stay compact; the
string names are used at every I/O boundary.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

GREEN, YELLOW, TRUNK, UNASSIGNED = 0, 1, 2, 3
LABEL_NAMES = ("Green", "Yellow", "Trunk", "Unassigned")
CLASS_LABELS = ("Green", "Yellow", "Trunk")  # valid labels for training rows
LABEL_CODES = {name: code for code, name in enumerate(LABEL_NAMES)}

COLOR_FEATURES = ("a_star", "b_star", "r", "g", "b")
EIGEN_FEATURES = (
    "eig1", "eig2", "eig3",
    "ev1x", "ev1y", "ev1z",
    "ev2x", "ev2y", "ev2z",
    "ev3x", "ev3y", "ev3z",
)
# Column order of the label dataset file; fixed, do not reorder.
DATASET_HEADER = ("label",) + COLOR_FEATURES + EIGEN_FEATURES


@dataclass(eq=False)
class ColoredPointCloud:
    """Ordered point set with 8-bit color, the unit flowing through the pipeline.

    xyz is (n, 3) float32 in meters with z the depth axis; rgb is (n, 3) uint8.
    """

    xyz: np.ndarray
    rgb: np.ndarray
    source_id: str = ""
    capture_week: int = 1

    def __post_init__(self):
        self.xyz = np.ascontiguousarray(self.xyz, dtype=np.float32)
        self.rgb = np.ascontiguousarray(self.rgb, dtype=np.uint8)
        if self.xyz.ndim != 2 or self.xyz.shape[1] != 3:
            raise ValidationError(f"xyz must be (n, 3), got {self.xyz.shape}")
        if self.rgb.shape != self.xyz.shape:
            raise ValidationError(
                f"rgb shape {self.rgb.shape} does not match xyz shape {self.xyz.shape}")
        if not np.all(np.isfinite(self.xyz)):
            raise ValidationError("coordinates must be finite")
        if self.capture_week < 1:
            raise ValidationError(f"capture_week must be >= 1, got {self.capture_week}")

    def __len__(self) -> int:
        return self.xyz.shape[0]

    @property
    def n_points(self) -> int:
        return self.xyz.shape[0]

    def select(self, which) -> "ColoredPointCloud":
        """New cloud with the points picked by a mask or index array, order kept."""
        return ColoredPointCloud(self.xyz[which], self.rgb[which],
                                 self.source_id, self.capture_week)

    def same_points(self, other: "ColoredPointCloud") -> bool:
        return (self.xyz.shape == other.xyz.shape
                and np.array_equal(self.xyz, other.xyz)
                and np.array_equal(self.rgb, other.rgb))


@dataclass(eq=False)
class ClassifiedCloud:
    """A cloud plus one label code per point (GREEN/YELLOW/TRUNK/UNASSIGNED)."""

    cloud: ColoredPointCloud
    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.ascontiguousarray(self.labels, dtype=np.uint8)
        if self.labels.shape != (self.cloud.n_points,):
            raise ValidationError(
                f"labels length {self.labels.shape} does not match point count "
                f"{self.cloud.n_points}")
        if self.labels.size and self.labels.max() > UNASSIGNED:
            raise ValidationError("label codes must be in {0, 1, 2, 3}")

    def count(self, code: int) -> int:
        return int(np.count_nonzero(self.labels == code))


@dataclass(frozen=True)
class FeatureSchema:
    """Which per-point channels feed the classifier, in feature-vector order."""

    channels: tuple[str, ...] = COLOR_FEATURES
    neighbor_k: int = 30

    def __post_init__(self):
        known = set(COLOR_FEATURES) | set(EIGEN_FEATURES)
        bad = [c for c in self.channels if c not in known]
        if bad:
            raise ValidationError(f"unknown feature channels: {bad}")
        if len(set(self.channels)) != len(self.channels):
            raise ValidationError("duplicate feature channels")
        if self.neighbor_k < 3:
            raise ValidationError("neighbor_k must be >= 3")

    @property
    def arity(self) -> int:
        return len(self.channels)

    @property
    def uses_eigen(self) -> bool:
        return any(c in EIGEN_FEATURES for c in self.channels)

    def to_dict(self) -> dict:
        return {"channels": list(self.channels), "neighbor_k": self.neighbor_k}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSchema":
        return cls(tuple(d["channels"]), int(d.get("neighbor_k", 30)))


@dataclass
class LabeledPointRecord:
    """One human-labeled point: color features plus neighborhood eigen-structure."""

    label: str
    a_star: float
    b_star: float
    r: int
    g: int
    b: int
    eigenvalues: np.ndarray  # (3,) descending, nonnegative
    eigenvectors: np.ndarray  # (3, 3), row i is the i-th unit eigenvector

    def __post_init__(self):
        if self.label not in CLASS_LABELS:
            raise ValidationError(f"label must be one of {CLASS_LABELS}, got {self.label!r}")
        for name, v in (("r", self.r), ("g", self.g), ("b", self.b)):
            if not 0 <= v <= 255:
                raise ValidationError(f"{name}={v} outside [0, 255]")
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=np.float64)
        self.eigenvectors = np.asarray(self.eigenvectors, dtype=np.float64)
        if self.eigenvalues.shape != (3,) or self.eigenvectors.shape != (3, 3):
            raise ValidationError("expected 3 eigenvalues and 3 eigenvectors")
        ev = self.eigenvalues
        if ev[0] < ev[1] - 1e-9 or ev[1] < ev[2] - 1e-9 or ev[2] < -1e-9:
            raise ValidationError(f"eigenvalues must be descending and nonnegative: {ev}")
        norms = np.linalg.norm(self.eigenvectors, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValidationError(f"eigenvectors must be unit norm, got norms {norms}")

    def values(self) -> dict:
        """All 17 numeric columns keyed by DATASET_HEADER name."""
        out = {"a_star": self.a_star, "b_star": self.b_star,
               "r": self.r, "g": self.g, "b": self.b}
        out.update(zip(("eig1", "eig2", "eig3"), self.eigenvalues))
        for i, axis_names in enumerate((("ev1x", "ev1y", "ev1z"),
                                        ("ev2x", "ev2y", "ev2z"),
                                        ("ev3x", "ev3y", "ev3z"))):
            out.update(zip(axis_names, self.eigenvectors[i]))
        return out


@dataclass
class LabelDataset:
    """Rows collected by the labeling workflow; column order fixed by DATASET_HEADER."""

    rows: list[LabeledPointRecord] = field(default_factory=list)
    header: tuple[str, ...] = DATASET_HEADER

    def __post_init__(self):
        if tuple(self.header) != DATASET_HEADER:
            raise ValidationError("label dataset header must match the fixed column order")

    def __len__(self) -> int:
        return len(self.rows)

    def feature_matrix(self, schema: FeatureSchema) -> tuple[np.ndarray, list[str]]:
        """(n, arity) float64 matrix in schema order plus the label strings."""
        X = np.empty((len(self.rows), schema.arity), dtype=np.float64)
        labels = []
        for i, row in enumerate(self.rows):
            vals = row.values()
            X[i] = [vals[c] for c in schema.channels]
            labels.append(row.label)
        return X, labels

    def class_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for row in self.rows:
            counts[row.label] = counts.get(row.label, 0) + 1
        return counts


@dataclass
class ManifestEntry:
    """One orchard tree: identity, field position, per-week clouds, agronomy data."""

    tree_id: str
    row: int
    position_in_row: int
    cloud_paths: dict[int, str] = field(default_factory=dict)
    leaf_n_percent: float | None = None
    gt_yellow_mass_g: float | None = None
    gt_green_mass_g: float | None = None

    def __post_init__(self):
        if not self.tree_id:
            raise ValidationError("tree_id must be nonempty")
        if self.leaf_n_percent is not None and not 0 < self.leaf_n_percent < 10:
            raise ValidationError(
                f"leaf_n_percent must be in (0, 10), got {self.leaf_n_percent}")
        masses = (self.gt_yellow_mass_g, self.gt_green_mass_g)
        for m in masses:
            if m is not None and m < 0:
                raise ValidationError(f"ground-truth mass must be nonnegative, got {m}")
        if masses[0] is not None and masses[1] is not None and masses == (0.0, 0.0):
            raise ValidationError(f"{self.tree_id}: ground-truth masses are both zero")
        for week in self.cloud_paths:
            if week < 1:
                raise ValidationError(f"{self.tree_id}: week must be >= 1, got {week}")


@dataclass
class TreeManifest:
    """All trees of one field season."""

    entries: list[ManifestEntry] = field(default_factory=list)
    season: str = ""

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.tree_id in seen:
                raise ValidationError(f"duplicate tree_id {e.tree_id!r}")
            seen.add(e.tree_id)

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, tree_id: str) -> ManifestEntry:
        for e in self.entries:
            if e.tree_id == tree_id:
                return e
        raise KeyError(tree_id)

    def weeks(self) -> list[int]:
        ws = sorted({w for e in self.entries for w in e.cloud_paths})
        return ws


@dataclass
class TreeObservation:
    """Vision output joined to agronomy data for one tree-week."""

    tree_id: str
    week: int
    yellow_count: int
    green_count: int
    index: float
    ground_truth: float | None = None
    leaf_n_percent: float | None = None

    def __post_init__(self):
        if self.week < 1:
            raise ValidationError(f"week must be >= 1, got {self.week}")
        if self.ground_truth is not None and not -1.0 <= self.ground_truth <= 1.0:
            raise ValidationError(
                f"ground_truth index must be in [-1, 1], got {self.ground_truth}")
