"""Point annotations simulated from dense ground truth.

One point is drawn per ground-truth segment (background included). Random
draws are keyed on ``(seed, video id, segment index)`` so each video's points
do not depend on which other videos are processed.

Random draw, fully specified for cross-platform reproducibility::

    id_key = first 8 bytes of BLAKE2b(video_id as UTF-8, digest_size=8), big-endian
    state  = 0
    for part in (seed, id_key, segment_index):
        state = splitmix64(state ^ part)
    offset = (state * segment_length) >> 64      # uniform in [0, segment_length)
    frame  = segment.start + offset

where ``splitmix64`` is the standard SplitMix64 finaliser (golden-gamma
increment followed by the 30/27/31 xor-shift-multiply mix), all arithmetic
modulo 2**64.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .data import PointAnnotations, as_labels
from .errors import ArgumentError
from .metrics import extract_segments

MASK64 = (1 << 64) - 1
STRATEGIES = ("uniform-random", "center")


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def video_key(video_id: str) -> int:
    digest = hashlib.blake2b(video_id.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def mix_key(*parts: int) -> int:
    state = 0
    for part in parts:
        state = splitmix64(state ^ (part & MASK64))
    return state


def uniform_offset(seed: int, video_id: str, segment_index: int, length: int) -> int:
    """Uniform draw in ``[0, length)`` for one (seed, video, segment) key."""
    if length < 1:
        raise ArgumentError(f"segment length must be >= 1, got {length}")
    state = mix_key(seed, video_key(video_id), segment_index)
    return (state * length) >> 64


@dataclass(frozen=True)
class PointStrategy:
    kind: str = "uniform-random"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ArgumentError(f"point strategy must be one of {STRATEGIES}, got {self.kind!r}")
        if not 0 <= self.seed <= MASK64:
            raise ArgumentError("seed must be an unsigned 64-bit integer")


def simulate_points(gt, strategy: PointStrategy, video_id: str = "") -> PointAnnotations:
    """One point per ground-truth segment, classes copied from the segment."""
    labels = as_labels(gt, allow_unlabeled=False)
    frames, classes = [], []
    for index, seg in enumerate(extract_segments(labels)):
        if strategy.kind == "center":
            frame = (seg.start + seg.end) // 2
        else:
            frame = seg.start + uniform_offset(strategy.seed, video_id, index, seg.length)
        frames.append(frame)
        classes.append(seg.label)
    return PointAnnotations(frames, classes, len(labels))
