"""Temporal segmentation metrics: frame accuracy, edit score, F1@tIoU."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .data import UNLABELED, as_labels
from .errors import ArgumentError, ShapeError

DEFAULT_THRESHOLDS = (0.10, 0.25, 0.50)


class Segment(NamedTuple):
    start: int
    end: int  # inclusive
    label: int

    @property
    def length(self) -> int:
        return self.end - self.start + 1


@dataclass
class MetricReport:
    acc: float
    edit: float
    f1: dict = field(default_factory=dict)  # threshold -> (f1, precision, recall)

    def to_json(self) -> dict:
        return {
            "acc": self.acc,
            "edit": self.edit,
            "f1": {
                threshold_key(t): {"f1": f, "precision": p, "recall": r}
                for t, (f, p, r) in sorted(self.f1.items())
            },
        }


def threshold_key(threshold: float) -> str:
    return repr(float(threshold))


def extract_segments(labels, ignore: Iterable[int] = ()) -> list[Segment]:
    """Maximal runs of equal class, ordered by start.

    Runs whose class is in ``ignore`` are dropped from the result.
    """
    y = as_labels(labels)
    if np.any(y == UNLABELED):
        raise ArgumentError("cannot extract segments from labels containing UNLABELED")
    if y.size == 0:
        return []
    ignore = set(ignore)
    cut = np.flatnonzero(y[1:] != y[:-1]) + 1
    starts = np.concatenate(([0], cut))
    ends = np.concatenate((cut - 1, [y.size - 1]))
    return [
        Segment(int(s), int(e), int(y[s]))
        for s, e in zip(starts, ends)
        if int(y[s]) not in ignore
    ]


def _check_pair(pred, gt):
    p = as_labels(pred)
    g = as_labels(gt)
    if p.shape != g.shape:
        raise ShapeError(f"prediction has {p.size} frames, ground truth has {g.size}")
    if np.any(g == UNLABELED):
        raise ArgumentError("ground truth contains UNLABELED frames")
    if np.any(p == UNLABELED):
        raise ArgumentError("prediction contains UNLABELED frames; emit dense labels")
    return p, g


def frame_accuracy(pred, gt, ignore: Iterable[int] = ()) -> float:
    """Percentage of frames whose predicted class equals the ground truth.

    Frames whose ground-truth class is in ``ignore`` are excluded.
    """
    p, g = _check_pair(pred, gt)
    keep = ~np.isin(g, list(ignore)) if ignore else np.ones(g.shape, bool)
    n = int(keep.sum())
    if n == 0:
        return 0.0
    return 100.0 * int((p[keep] == g[keep]).sum()) / n


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Insert/delete/substitute edit distance, single-row DP."""
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i] + [0] * len(b)
        for j, y in enumerate(b, 1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y))
        prev = cur
    return prev[-1]


def edit_score(pred, gt, ignore: Iterable[int] = ()) -> float:
    p, g = _check_pair(pred, gt)
    x = [s.label for s in extract_segments(p, ignore)]
    y = [s.label for s in extract_segments(g, ignore)]
    longest = max(len(x), len(y))
    if longest == 0:
        return 100.0
    return 100.0 * (1.0 - levenshtein(x, y) / longest)


def match_counts(pred, gt, threshold: float, ignore: Iterable[int] = ()) -> tuple[int, int, int]:
    """(TP, FP, FN) of segment matching at one tIoU threshold.

    Predicted segments are visited in temporal order; each is matched to the
    unmatched same-class ground-truth segment with the highest tIoU (earliest
    on ties) and counts as a true positive when that tIoU is >= ``threshold``.
    """
    if not 0.0 < threshold < 1.0:
        raise ArgumentError(f"tIoU threshold must lie in (0, 1), got {threshold}")
    p, g = _check_pair(pred, gt)
    ps = extract_segments(p, ignore)
    gs = extract_segments(g, ignore)
    matched = [False] * len(gs)
    tp = fp = 0
    for seg in ps:
        best, best_iou = -1, -1.0
        for k, ref in enumerate(gs):
            if matched[k] or ref.label != seg.label:
                continue
            inter = min(seg.end, ref.end) - max(seg.start, ref.start) + 1
            if inter <= 0:
                continue
            union = max(seg.end, ref.end) - min(seg.start, ref.start) + 1
            iou = inter / union
            if iou > best_iou:
                best, best_iou = k, iou
        if best >= 0 and best_iou >= threshold:
            matched[best] = True
            tp += 1
        else:
            fp += 1
    return tp, fp, len(gs) - sum(matched)


def f1_from_counts(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0:
        return 0.0, 100.0 * precision, 100.0 * recall
    f1 = 2 * precision * recall / (precision + recall)
    return 100.0 * f1, 100.0 * precision, 100.0 * recall


def f1_at_tiou(pred, gt, threshold: float, ignore: Iterable[int] = ()) -> tuple[float, float, float]:
    """Segmental (f1, precision, recall) in percent at a tIoU threshold."""
    return f1_from_counts(*match_counts(pred, gt, threshold, ignore))


def evaluate(pred, gt, thresholds=DEFAULT_THRESHOLDS, ignore: Iterable[int] = ()) -> MetricReport:
    ignore = tuple(ignore)
    return MetricReport(
        acc=frame_accuracy(pred, gt, ignore),
        edit=edit_score(pred, gt, ignore),
        f1={float(t): f1_at_tiou(pred, gt, t, ignore) for t in thresholds},
    )


def evaluate_dataset(
    preds: Sequence,
    gts: Sequence,
    thresholds=DEFAULT_THRESHOLDS,
    ignore: Iterable[int] = (),
    f1_mode: str = "pool",
) -> MetricReport:
    """Dataset-level report.

    Acc and Edit are averaged over videos. F1 pools TP/FP/FN over all videos
    when ``f1_mode="pool"`` and averages per-video F1 (and P, R) when
    ``f1_mode="mean"``.
    """
    if len(preds) != len(gts):
        raise ShapeError(f"{len(preds)} predictions for {len(gts)} ground-truth videos")
    if not preds:
        raise ArgumentError("no videos to evaluate")
    if f1_mode not in ("pool", "mean"):
        raise ArgumentError(f"unknown f1_mode {f1_mode!r}")
    ignore = tuple(ignore)
    accs = [frame_accuracy(p, g, ignore) for p, g in zip(preds, gts)]
    edits = [edit_score(p, g, ignore) for p, g in zip(preds, gts)]
    f1 = {}
    for t in thresholds:
        counts = [match_counts(p, g, t, ignore) for p, g in zip(preds, gts)]
        if f1_mode == "pool":
            tp, fp, fn = (sum(c[i] for c in counts) for i in range(3))
            f1[float(t)] = f1_from_counts(tp, fp, fn)
        else:
            per = np.array([f1_from_counts(*c) for c in counts])
            f1[float(t)] = tuple(float(v) for v in per.mean(axis=0))
    return MetricReport(acc=float(np.mean(accs)), edit=float(np.mean(edits)), f1=f1)
