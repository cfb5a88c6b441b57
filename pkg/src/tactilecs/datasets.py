"""Labeled observation sets shared by the simulator and the classifier."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class ObservationDataset:
    """Feature vectors with class labels and the perturbation each came from.

    Features are either raw sensor signals (one value per taxel) or compressed
    measurements; all rows share one dimension. `perturbation_ids` index into
    `perturbations`, the grid of array poses the observations were taken at,
    which is what train/test splits are drawn over.
    """

    features: np.ndarray                  # (N, feature_dim) float64
    labels: np.ndarray                    # (N,) ints indexing class_names
    class_names: tuple[str, ...]
    perturbation_ids: np.ndarray          # (N,) ints indexing perturbations
    perturbations: tuple[dict, ...]       # each: row_mm, col_mm, yaw_deg

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        pert = np.asarray(self.perturbation_ids, dtype=np.int64)
        if feats.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if labels.shape != (feats.shape[0],) or pert.shape != (feats.shape[0],):
            raise ValueError("labels and perturbation_ids must match features rows")
        if labels.size and not (0 <= labels.min() and labels.max() < len(self.class_names)):
            raise ValueError("labels must index class_names")
        if pert.size and not (0 <= pert.min() and pert.max() < len(self.perturbations)):
            raise ValueError("perturbation_ids must index perturbations")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "perturbation_ids", pert)
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "perturbations", tuple(self.perturbations))

    @property
    def n_observations(self) -> int:
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def with_features(self, features: np.ndarray) -> "ObservationDataset":
        """Same observations under a different feature map (e.g. compressed)."""
        return replace(self, features=np.asarray(features, dtype=np.float64))

    def subset_by_perturbations(self, ids) -> "ObservationDataset":
        wanted = np.isin(self.perturbation_ids, np.asarray(ids, dtype=np.int64))
        return replace(
            self,
            features=self.features[wanted],
            labels=self.labels[wanted],
            perturbation_ids=self.perturbation_ids[wanted],
        )

    def rows_for_classes(self, a: int, b: int):
        """(features, +-1 labels) for the unordered class pair; +1 is the higher index."""
        lo, hi = (a, b) if a < b else (b, a)
        mask = (self.labels == lo) | (self.labels == hi)
        signs = np.where(self.labels[mask] == hi, 1.0, -1.0)
        return self.features[mask], signs


def save_dataset(dataset: ObservationDataset, features_path, meta_path) -> None:
    """Features as .npy (deterministic bytes), everything else as JSON."""
    np.save(features_path, dataset.features)
    meta = {
        "class_names": list(dataset.class_names),
        "labels": dataset.labels.tolist(),
        "perturbation_ids": dataset.perturbation_ids.tolist(),
        "perturbations": list(dataset.perturbations),
    }
    with open(meta_path, "w") as fp:
        json.dump(meta, fp, indent=1, sort_keys=True)


def load_dataset(features_path, meta_path) -> ObservationDataset:
    features = np.load(features_path)
    with open(meta_path) as fp:
        meta = json.load(fp)
    return ObservationDataset(
        features,
        np.asarray(meta["labels"]),
        tuple(meta["class_names"]),
        np.asarray(meta["perturbation_ids"]),
        tuple(meta["perturbations"]),
    )
