"""Nearest-class-mean frame classifier trained on pseudo-labels, plus smoothing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .data import UNLABELED, as_features, as_labels
from .errors import ArgumentError, ModelError, ShapeError, TrainingError

DEFAULT_WINDOW = 31


@dataclass(frozen=True)
class PrototypeClassifier:
    class_means: np.ndarray  # (C, D)
    present: np.ndarray  # (C,) bool

    @property
    def feature_dim(self) -> int:
        return self.class_means.shape[1]

    @property
    def class_count(self) -> int:
        return len(self.present)


def fit(features: Sequence, pseudo: Sequence, class_count: int | None = None) -> PrototypeClassifier:
    """Per-class mean of all frames carrying that pseudo-label.

    UNLABELED frames contribute nothing. ``class_count`` defaults to one more
    than the largest label seen.
    """
    if len(features) != len(pseudo):
        raise ShapeError(f"{len(features)} feature matrices for {len(pseudo)} label sequences")
    mats = [as_features(f) for f in features]
    labs = [as_labels(p) for p in pseudo]
    for m, y in zip(mats, labs):
        if len(m) != len(y):
            raise ShapeError(f"sequence has {len(m)} feature rows but {len(y)} labels")
    dims = {m.shape[1] for m in mats}
    if len(dims) > 1:
        raise ShapeError(f"feature dimensions differ across sequences: {sorted(dims)}")
    labelled = [y[y != UNLABELED] for y in labs]
    if not labelled or sum(len(y) for y in labelled) == 0:
        raise TrainingError("no labelled frame to fit on")
    top = max(int(y.max()) for y in labelled if len(y))
    if class_count is None:
        class_count = top + 1
    elif top >= class_count:
        raise ArgumentError(f"label {top} outside [0, {class_count})")
    dim = dims.pop()
    sums = np.zeros((class_count, dim))
    counts = np.zeros(class_count, dtype=np.int64)
    for m, y in zip(mats, labs):
        keep = y != UNLABELED
        np.add.at(sums, y[keep], m[keep])
        counts += np.bincount(y[keep], minlength=class_count)
    present = counts > 0
    means = np.zeros_like(sums)
    means[present] = sums[present] / counts[present, None]
    return PrototypeClassifier(class_means=means, present=present)


def predict(model: PrototypeClassifier, features) -> np.ndarray:
    """Nearest present class mean per frame; ties go to the smaller class id."""
    x = as_features(features)
    if x.shape[1] != model.feature_dim:
        raise ShapeError(f"model expects dimension {model.feature_dim}, got {x.shape[1]}")
    if not model.present.any():
        raise ModelError("model has no present class")
    dist = cdist(x, model.class_means)
    dist[:, ~model.present] = np.inf
    return np.argmin(dist, axis=1).astype(np.int64)


def count_segments(labels) -> int:
    y = np.asarray(labels)
    return int(y.size > 0) + int(np.count_nonzero(y[1:] != y[:-1]))


def mode_filter(labels, window: int) -> np.ndarray:
    """Sliding-window mode with edge truncation; ties keep the centre label."""
    y = as_labels(labels, allow_unlabeled=False)
    if window < 1 or window % 2 == 0:
        raise ArgumentError(f"window must be a positive odd integer, got {window}")
    if window == 1 or y.size == 0:
        return y.copy()
    half = window // 2
    classes, codes = np.unique(y, return_inverse=True)
    onehot = np.zeros((y.size + 1, len(classes)), dtype=np.int64)
    onehot[np.arange(1, y.size + 1), codes] = 1
    cum = np.cumsum(onehot, axis=0)
    idx = np.arange(y.size)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, y.size)
    counts = cum[hi] - cum[lo]
    best = counts.max(axis=1)
    tied = (counts == best[:, None]).sum(axis=1) > 1
    out = classes[np.argmax(counts, axis=1)]
    out[tied] = y[tied]
    return out


def smooth(labels, window: int = DEFAULT_WINDOW) -> np.ndarray:
    """Mode-filter smoothing that never fragments the input.

    A truncated mode filter can split a short run into pieces when the window
    is wider than the run. The largest odd window not above ``window`` whose
    output has no more segments than the input is used; window 1 is the
    identity, so this always terminates.
    """
    y = as_labels(labels, allow_unlabeled=False)
    if window < 1 or window % 2 == 0:
        raise ArgumentError(f"window must be a positive odd integer, got {window}")
    limit = count_segments(y)
    for w in range(window, 0, -2):
        out = mode_filter(y, w)
        if count_segments(out) <= limit:
            return out
    return y.copy()
