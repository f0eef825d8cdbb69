"""Dense pseudo-labels from point annotations.

Three generators each place one transition between every pair of adjacent,
differently-labelled points:

* ``generate_energy_labels`` splits the interval into two clusters whose
  summed Euclidean distance to their own means is minimal,
* ``generate_kmedoids_labels`` alternates boundary search against fixed
  medoid frames with medoid re-selection inside fixed segments,
* ``generate_prototype_labels`` compares each frame against the training-set
  class prototypes of the two neighbouring points.

``integrate`` keeps a frame's label only when every generator agrees.

Ties are always resolved toward the smallest frame index. Objective values
within a small tolerance of the minimum count as ties so that rounding noise
(e.g. from prefix sums over constant features) does not decide the outcome.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .data import UNLABELED, PointAnnotations, as_features, as_labels
from .errors import ArgumentError, ConfigurationError, ShapeError

TIE_RTOL = 1e-9

PROTOTYPE_CRITERIA = ("consistent", "equidistant")


def tie_tolerance(features: np.ndarray) -> float:
    """Absolute tie tolerance for objectives summed over ``len(features)`` frames."""
    scale = float(np.abs(features).max()) if features.size else 0.0
    return TIE_RTOL * max(len(features), 1) * max(scale, 1e-300)


def argmin_first(values, tol: float = 0.0) -> int:
    """Index of the first value within ``tol`` of the minimum."""
    values = np.asarray(values, dtype=np.float64)
    return int(np.flatnonzero(values <= values.min() + tol)[0])


@dataclass(frozen=True)
class Prototypes:
    means: np.ndarray  # (class_count, D); rows of absent classes are zero
    present: np.ndarray  # (class_count,) bool

    @property
    def class_count(self) -> int:
        return len(self.present)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def get(self, cls: int) -> np.ndarray:
        if not 0 <= cls < self.class_count or not self.present[cls]:
            raise ConfigurationError(f"no prototype for class {cls}")
        return self.means[cls]


@dataclass(frozen=True)
class GeneratorConfig:
    max_kmedoids_iters: int = 50
    prototype_criterion: str = "consistent"
    distance: str = "euclidean"

    def __post_init__(self):
        if self.max_kmedoids_iters < 1:
            raise ArgumentError("max_kmedoids_iters must be >= 1")
        if self.distance != "euclidean":
            raise ArgumentError(f"unsupported distance {self.distance!r}")
        if self.prototype_criterion not in PROTOTYPE_CRITERIA:
            raise ArgumentError(
                f"prototype_criterion must be one of {PROTOTYPE_CRITERIA}, "
                f"got {self.prototype_criterion!r}"
            )


def _check_points(features: np.ndarray, points: PointAnnotations):
    if points.length != len(features):
        raise ShapeError(
            f"points describe {points.length} frames, features have {len(features)}"
        )


def compute_prototypes(features: Sequence, annotations: Sequence[PointAnnotations], class_count: int) -> Prototypes:
    """Per-class mean of the feature rows at annotated frames, over all sequences."""
    if len(features) != len(annotations):
        raise ShapeError(f"{len(features)} feature matrices for {len(annotations)} annotation lists")
    if not features:
        raise ArgumentError("need at least one sequence to compute prototypes")
    mats = [as_features(f) for f in features]
    dims = {m.shape[1] for m in mats}
    if len(dims) != 1:
        raise ShapeError(f"feature dimensions differ across sequences: {sorted(dims)}")
    sums = np.zeros((class_count, dims.pop()))
    counts = np.zeros(class_count, dtype=np.int64)
    for mat, pts in zip(mats, annotations):
        for frame, cls in zip(pts.frames, pts.classes):
            if not 0 <= frame < len(mat):
                raise IndexError(f"annotation frame {frame} outside [0, {len(mat)})")
            if not 0 <= cls < class_count:
                raise ArgumentError(f"class {cls} outside [0, {class_count})")
            sums[cls] += mat[frame]
            counts[cls] += 1
    present = counts > 0
    means = np.zeros_like(sums)
    means[present] = sums[present] / counts[present, None]
    return Prototypes(means=means, present=present)


def energy_profile(features, t_i: int, t_next: int) -> np.ndarray:
    """Two-cluster energy for every split ``t_hat`` in ``[t_i, t_next - 1]``.

    Entry ``k`` is the energy of the split after frame ``t_i + k``: the summed
    distance of frames ``t_i..t_hat`` to their mean plus that of frames
    ``t_hat+1..t_next`` to theirs.
    """
    h = as_features(features)
    if not 0 <= t_i < t_next < len(h):
        raise ArgumentError(f"need 0 <= t_i < t_next < T, got t_i={t_i}, t_next={t_next}, T={len(h)}")
    seg = h[t_i : t_next + 1]
    n = len(seg)
    prefix = np.vstack([np.zeros(seg.shape[1]), np.cumsum(seg, axis=0)])
    energy = np.empty(n - 1)
    for k in range(n - 1):
        left_mean = prefix[k + 1] / (k + 1)
        right_mean = (prefix[n] - prefix[k + 1]) / (n - k - 1)
        energy[k] = (
            np.linalg.norm(seg[: k + 1] - left_mean, axis=1).sum()
            + np.linalg.norm(seg[k + 1 :] - right_mean, axis=1).sum()
        )
    return energy


def energy_boundary(features, t_i: int, t_next: int) -> int:
    """Last frame of the left cluster; always in ``[t_i, t_next)``."""
    h = as_features(features)
    energy = energy_profile(h, t_i, t_next)
    return t_i + argmin_first(energy, tie_tolerance(h[t_i : t_next + 1]))


def _fill_from_boundaries(points: PointAnnotations, boundaries: Sequence[int]) -> np.ndarray:
    """Segment k = (boundaries[k-1], boundaries[k]] gets the k-th point's class."""
    labels = np.empty(points.length, dtype=np.int64)
    start = 0
    for cls, end in zip(points.classes, list(boundaries) + [points.length - 1]):
        labels[start : end + 1] = cls
        start = end + 1
    return labels


def generate_energy_labels(features, points: PointAnnotations) -> np.ndarray:
    h = as_features(features)
    _check_points(h, points)
    boundaries = []
    for (t0, a0), (t1, a1) in zip(points.pairs(), points.pairs()[1:]):
        boundaries.append(t0 if a0 == a1 else energy_boundary(h, t0, t1))
    return _fill_from_boundaries(points, boundaries)


def _medoid_boundaries(h: np.ndarray, points: PointAnnotations, medoids: Sequence[int]) -> list[int]:
    # Each boundary stays between its two annotated frames so that every
    # annotated frame keeps its own class; only the frames in that window
    # depend on the boundary, so the cost is restricted to them.
    out = []
    for k in range(len(medoids) - 1):
        lo, hi = points.frames[k], points.frames[k + 1]
        window = h[lo : hi + 1]
        d_left = np.linalg.norm(window - h[medoids[k]], axis=1)
        d_right = np.linalg.norm(window - h[medoids[k + 1]], axis=1)
        left = np.cumsum(d_left)[:-1]
        right = d_right.sum() - np.cumsum(d_right)[:-1]
        out.append(lo + argmin_first(left + right, tie_tolerance(window)))
    return out


def _segment_medoids(h: np.ndarray, boundaries: Sequence[int]) -> list[int]:
    starts = [0] + [b + 1 for b in boundaries]
    ends = list(boundaries) + [len(h) - 1]
    medoids = []
    for s, e in zip(starts, ends):
        seg = h[s : e + 1]
        total = cdist(seg, seg).sum(axis=1)
        medoids.append(s + argmin_first(total, tie_tolerance(seg) * len(seg)))
    return medoids


def kmedoids_boundaries(features, points: PointAnnotations, max_iters: int = 50) -> tuple[list[int], int]:
    """Converged segment boundaries and the number of iterations used."""
    h = as_features(features)
    _check_points(h, points)
    if max_iters < 1:
        raise ArgumentError("max_iters must be >= 1")
    medoids = list(points.frames)
    previous = None
    for it in range(1, max_iters + 1):
        boundaries = _medoid_boundaries(h, points, medoids)
        if boundaries == previous:
            return boundaries, it
        previous = boundaries
        if it < max_iters:
            medoids = _segment_medoids(h, boundaries)
    return previous, max_iters


def generate_kmedoids_labels(features, points: PointAnnotations, cfg: GeneratorConfig | None = None) -> np.ndarray:
    cfg = cfg or GeneratorConfig()
    boundaries, _ = kmedoids_boundaries(features, points, cfg.max_kmedoids_iters)
    return _fill_from_boundaries(points, boundaries)


def prototype_transition(features, t_i: int, t_next: int, left, right, criterion: str = "consistent") -> int:
    """Last frame labelled with the left point's class.

    ``S1``/``S2`` are the distances of a frame to the left/right prototype.

    ``"equidistant"`` searches the open interval ``(t_i, t_next)`` for the
    frame minimising ``|S1 - S2|`` and needs that interval to be non-empty.

    ``"consistent"`` searches ``[t_i, t_next)``. It first keeps the split
    points that put the fewest frames on the side of their farther
    prototype, then takes the smallest ``|S1 - S2|`` among them. When
    ``S1 - S2`` crosses zero once, this lands on the crossing, like the
    equidistant rule; on step-like features, where ``|S1 - S2|`` is flat,
    it still finds the step.
    """
    h = as_features(features)
    if criterion not in PROTOTYPE_CRITERIA:
        raise ArgumentError(f"unknown prototype criterion {criterion!r}")
    if not 0 <= t_i < t_next <= len(h):
        raise ArgumentError(f"need 0 <= t_i < t_next <= T, got t_i={t_i}, t_next={t_next}")
    first = t_i if criterion == "consistent" else t_i + 1
    window = h[first:t_next]
    if len(window) == 0:
        raise ArgumentError(f"empty open interval ({t_i}, {t_next})")
    margin = np.linalg.norm(window - left, axis=1) - np.linalg.norm(window - right, axis=1)
    gap = np.abs(margin)
    tol = TIE_RTOL * max(float(np.abs(np.vstack([window, left, right])).max()), 1e-300)
    if criterion == "equidistant":
        return first + argmin_first(gap, tol)
    # split after index c: frames 0..c go left, c+1.. go right
    wrong_left = np.cumsum(margin > tol)
    wrong_right = np.append(np.cumsum((margin < -tol)[::-1])[::-1][1:], 0)
    errors = wrong_left + wrong_right
    masked = np.where(errors == errors.min(), gap, np.inf)
    return first + argmin_first(masked, tol)


def generate_prototype_labels(
    features,
    points: PointAnnotations,
    prototypes: Prototypes,
    criterion: str = "consistent",
) -> np.ndarray:
    h = as_features(features)
    _check_points(h, points)
    if prototypes.dim != h.shape[1]:
        raise ShapeError(f"prototypes have dimension {prototypes.dim}, features {h.shape[1]}")
    for cls in set(points.classes):
        prototypes.get(cls)
    boundaries = []
    for (t0, a0), (t1, a1) in zip(points.pairs(), points.pairs()[1:]):
        if a0 == a1 or (t1 == t0 + 1 and criterion == "equidistant"):
            boundaries.append(t0)
        else:
            boundaries.append(
                prototype_transition(h, t0, t1, prototypes.get(a0), prototypes.get(a1), criterion)
            )
    return _fill_from_boundaries(points, boundaries)


def integrate(sequences: Sequence) -> np.ndarray:
    """Frame-wise intersection: the shared class where all inputs agree, else UNLABELED."""
    if not sequences:
        raise ArgumentError("need at least one label sequence to integrate")
    arrs = [as_labels(s) for s in sequences]
    lengths = {a.size for a in arrs}
    if len(lengths) != 1:
        raise ShapeError(f"label sequences differ in length: {sorted(lengths)}")
    stacked = np.vstack(arrs)
    agree = np.all(stacked == stacked[0], axis=0) & (stacked[0] != UNLABELED)
    return np.where(agree, stacked[0], UNLABELED)
