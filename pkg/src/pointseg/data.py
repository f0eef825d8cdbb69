"""Sequence types, skeleton topology and modality derivation.

Arrays are plain numpy:

* skeleton sequences are ``(T, J, C)`` float arrays with ``C`` in {2, 3},
* feature matrices are ``(T, D)`` float arrays,
* frame labels are length-``T`` int arrays where ``UNLABELED`` (-1) marks
  frames without a class.

The few structured types (topology, point annotations) are small frozen
dataclasses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ArgumentError, ShapeError

UNLABELED = -1
ROOT = -1

FUSION_EPS = 1e-8


def as_skeleton(frames) -> np.ndarray:
    """Validate and return a ``(T, J, C)`` float64 skeleton array."""
    arr = np.asarray(frames, dtype=np.float64)
    if arr.ndim != 3:
        raise ShapeError(f"skeleton must be T x J x C, got shape {arr.shape}")
    t, j, c = arr.shape
    if t < 1 or j < 1:
        raise ShapeError(f"skeleton needs T >= 1 and J >= 1, got shape {arr.shape}")
    if c not in (2, 3):
        raise ShapeError(f"skeleton channel count must be 2 or 3, got {c}")
    if not np.all(np.isfinite(arr)):
        raise ShapeError("skeleton contains non-finite values")
    return arr


def as_features(rows) -> np.ndarray:
    """Validate and return a ``(T, D)`` float64 feature matrix."""
    arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ShapeError(f"feature matrix must be T x D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"feature matrix needs T >= 1 and D >= 1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ShapeError("feature matrix contains non-finite values")
    return arr


def as_labels(labels, allow_unlabeled=True) -> np.ndarray:
    """Return frame labels as a 1-D int64 array.

    Raises:
        ArgumentError: on negative ids other than ``UNLABELED``, or on
            ``UNLABELED`` when ``allow_unlabeled`` is false.
    """
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise ShapeError(f"frame labels must be 1-D, got shape {arr.shape}")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        as_int = arr.astype(np.int64)
        if not np.array_equal(as_int, arr):
            raise ArgumentError("frame labels must be integers")
        arr = as_int
    arr = arr.astype(np.int64, copy=False)
    if np.any(arr < UNLABELED):
        raise ArgumentError("class ids must be >= 0 (or -1 for unlabeled)")
    if not allow_unlabeled and np.any(arr == UNLABELED):
        raise ArgumentError("labels contain UNLABELED frames")
    return arr


@dataclass(frozen=True)
class Topology:
    """Parent index per joint; ``ROOT`` (-1) marks a root joint."""

    parent: tuple[int, ...]

    def __post_init__(self):
        parent = tuple(int(p) for p in self.parent)
        object.__setattr__(self, "parent", parent)
        n = len(parent)
        if n == 0:
            raise ArgumentError("topology needs at least one joint")
        for j, p in enumerate(parent):
            if p != ROOT and not 0 <= p < n:
                raise ArgumentError(f"joint {j} has parent {p} outside [0, {n})")
            if p == j:
                raise ArgumentError(f"joint {j} is its own parent; use {ROOT} for roots")
        if ROOT not in parent:
            raise ArgumentError("topology has no root joint")
        # every ancestor chain must reach a root within n steps
        for j in range(n):
            k, steps = j, 0
            while parent[k] != ROOT:
                k = parent[k]
                steps += 1
                if steps > n:
                    raise ArgumentError(f"topology has a cycle through joint {j}")

    @property
    def joint_count(self) -> int:
        return len(self.parent)


@dataclass(frozen=True)
class PointAnnotations:
    """Sparse point labels for one sequence of ``length`` frames."""

    frames: tuple[int, ...]
    classes: tuple[int, ...]
    length: int

    def __post_init__(self):
        frames = tuple(int(f) for f in self.frames)
        classes = tuple(int(c) for c in self.classes)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "classes", classes)
        if self.length < 1:
            raise ArgumentError(f"sequence length must be >= 1, got {self.length}")
        if len(frames) != len(classes):
            raise ShapeError("frames and classes differ in length")
        if not frames:
            raise ArgumentError("a sequence needs at least one point annotation")
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ArgumentError("point frames must be strictly increasing")
        if frames[0] < 0 or frames[-1] >= self.length:
            raise ArgumentError(f"point frames must lie in [0, {self.length})")
        if any(c < 0 for c in classes):
            raise ArgumentError("point classes must be >= 0")

    def __len__(self):
        return len(self.frames)

    def pairs(self):
        return list(zip(self.frames, self.classes))


def derive_bone(skeleton, topology: Topology) -> np.ndarray:
    """Bone modality: each joint minus its parent; roots become zero vectors."""
    skel = as_skeleton(skeleton)
    if topology.joint_count != skel.shape[1]:
        raise ShapeError(
            f"topology has {topology.joint_count} joints, skeleton has {skel.shape[1]}"
        )
    parent = np.asarray(topology.parent)
    is_root = parent == ROOT
    bone = skel - skel[:, np.where(is_root, np.arange(len(parent)), parent), :]
    bone[:, is_root, :] = 0.0
    return bone


def derive_motion(skeleton) -> np.ndarray:
    """Motion modality: frame-to-frame displacement, zero at frame 0."""
    skel = as_skeleton(skeleton)
    motion = np.zeros_like(skel)
    motion[1:] = skel[1:] - skel[:-1]
    return motion


def flatten(skeleton) -> np.ndarray:
    """``(T, J, C)`` -> ``(T, J*C)`` in joint-major, channel-minor order."""
    skel = as_skeleton(skeleton)
    return skel.reshape(skel.shape[0], -1).copy()


def unflatten(rows, joint_count: int, channel_count: int) -> np.ndarray:
    rows = as_features(rows)
    if rows.shape[1] != joint_count * channel_count:
        raise ShapeError(
            f"row width {rows.shape[1]} != {joint_count} joints x {channel_count} channels"
        )
    return as_skeleton(rows.reshape(rows.shape[0], joint_count, channel_count))


def znormalize(features, eps: float = FUSION_EPS) -> np.ndarray:
    """Per-dimension z-score over frames; near-constant dimensions become 0."""
    x = as_features(features)
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    out = np.zeros_like(x)
    ok = std >= eps
    out[:, ok] = (x[:, ok] - mean[ok]) / std[ok]
    return out


def fuse_inputs(raw, feat, eps: float = FUSION_EPS) -> np.ndarray:
    """Z-normalize both inputs per dimension and concatenate along features."""
    return fuse_many([raw, feat], eps=eps)


def fuse_many(blocks: Sequence, eps: float = FUSION_EPS) -> np.ndarray:
    mats = [as_features(b) for b in blocks]
    lengths = {m.shape[0] for m in mats}
    if len(lengths) != 1:
        raise ShapeError(f"cannot fuse inputs with different frame counts {sorted(lengths)}")
    return np.concatenate([znormalize(m, eps) for m in mats], axis=1)
