import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import edit_oracle, f1_oracle
from pointseg.metrics import (
    Segment,
    edit_score,
    evaluate,
    evaluate_dataset,
    extract_segments,
    f1_at_tiou,
    frame_accuracy,
    levenshtein,
)
from pointseg.errors import ArgumentError, ShapeError

A, B, C = 0, 1, 2

labels_st = st.lists(st.integers(0, 3), min_size=1, max_size=40)


def test_extract_segments_examples():
    assert extract_segments([A, A, B, B, B]) == [Segment(0, 1, A), Segment(2, 4, B)]
    assert extract_segments([A]) == [Segment(0, 0, A)]
    assert len(extract_segments([A, B, A])) == 3


def test_extract_segments_rejects_unlabeled():
    with pytest.raises(ArgumentError):
        extract_segments([A, -1, B])


def test_frame_accuracy_examples():
    assert frame_accuracy([A, B, C], [A, B, C]) == 100
    assert frame_accuracy([A, A, A, B], [A, A, A, A]) == 75
    assert frame_accuracy([B, B], [A, A]) == 0
    with pytest.raises(ShapeError):
        frame_accuracy([A], [A, A])


def test_edit_examples():
    assert edit_score([A, A, B], [A, A, B]) == 100
    assert edit_score([A, B, A, B], [A, A, B, B]) == 50
    assert edit_score([B, B, B], [A, A, A]) == 0


def test_f1_examples():
    gt = [A] * 10
    pred = [A] * 5 + [B] * 5
    for t in (0.1, 0.25, 0.5):
        assert f1_at_tiou(gt, gt, t)[0] == 100
    assert f1_at_tiou(pred, gt, 0.5)[0] == pytest.approx(100 * 2 * 0.5 / 1.5)  # B is an FP
    # pred (0,4,A) against gt (0,9,A) inside a 10-frame video: pad with ignored class
    p = [A] * 5 + [C] * 5
    g = [A] * 10
    assert f1_at_tiou(p, g, 0.5, ignore=[C]) == (100.0, 100.0, 100.0)
    assert f1_at_tiou(p, g, 0.51, ignore=[C])[0] == 0
    # two halves: first matches, second is an FP because the gt is used up
    f, prec, rec = f1_at_tiou([A] * 5 + [B] + [A] * 4, [A] * 10, 0.4, ignore=[B])
    assert (prec, rec) == (50.0, 100.0)
    assert f == pytest.approx(66.666, abs=0.01)


def test_f1_threshold_validation():
    with pytest.raises(ArgumentError):
        f1_at_tiou([A], [A], 1.0)
    with pytest.raises(ArgumentError):
        f1_at_tiou([A], [A], 0.0)


def test_prediction_with_unlabeled_rejected():
    with pytest.raises(ArgumentError):
        frame_accuracy([A, -1], [A, A])


def test_evaluate_single_perfect():
    rep = evaluate([A, B, B], [A, B, B])
    assert rep.acc == rep.edit == 100
    assert all(v == (100.0, 100.0, 100.0) for v in rep.f1.values())
    assert sorted(rep.f1) == [0.1, 0.25, 0.5]


def test_dataset_acc_is_mean_of_videos():
    rep = evaluate_dataset([[A, A], [A, B]], [[A, A], [A, A]])
    assert rep.acc == 75


def test_dataset_f1_pools_counts():
    # video 1 perfect (2 segments), video 2 two wrong-class segments:
    # pooled TP=2, FP=2, FN=2 -> P = R = F1 = 50
    good = ([A] * 5 + [B] * 5, [A] * 5 + [B] * 5)
    bad = ([C] * 5 + [C + 1] * 5, [A] * 5 + [B] * 5)
    rep = evaluate_dataset([good[0], bad[0]], [good[1], bad[1]], thresholds=[0.5])
    assert rep.f1[0.5] == (50.0, 50.0, 50.0)
    # pooling differs from averaging once segment counts differ
    many = ([A, B] * 5, [A] * 10)
    pooled = evaluate_dataset([good[0], many[0]], [good[1], many[1]], thresholds=[0.1])
    mean = evaluate_dataset([good[0], many[0]], [good[1], many[1]], thresholds=[0.1], f1_mode="mean")
    # counts: video1 TP=2; video2 TP=1 FP=9 FN=0 -> pooled P=3/12, R=3/3
    assert pooled.f1[0.1][1] == pytest.approx(25.0)
    assert pooled.f1[0.1][2] == pytest.approx(100.0)
    assert pooled.f1[0.1][0] == pytest.approx(40.0)
    assert mean.f1[0.1][0] == pytest.approx((100 + 100 * 2 * 0.1 / 1.1) / 2)


def test_report_json_keys():
    obj = evaluate([A, B], [A, B]).to_json()
    assert set(obj) == {"acc", "edit", "f1"}
    assert set(obj["f1"]) == {"0.1", "0.25", "0.5"}
    assert set(obj["f1"]["0.5"]) == {"f1", "precision", "recall"}


@given(st.lists(st.integers(0, 4), max_size=8), st.lists(st.integers(0, 4), max_size=8))
def test_levenshtein_matches_recursive(a, b):
    from oracles import levenshtein_recursive

    assert levenshtein(a, b) == levenshtein_recursive(a, b)


@given(labels_st, st.integers(0, 2**31))
def test_edit_and_f1_match_oracles(gt, seed):
    r = np.random.default_rng(seed)
    pred = r.integers(0, 4, len(gt)) if seed % 2 else np.array(gt)[::-1]
    assert edit_score(pred, gt) == pytest.approx(edit_oracle(list(pred), gt), abs=1e-12)
    for t in (0.1, 0.25, 0.5, 0.75):
        assert f1_at_tiou(pred, gt, t) == pytest.approx(f1_oracle(list(pred), gt, t), abs=1e-9)


@given(labels_st, labels_st, st.integers(2, 4))
def test_upsampling_invariance(a, b, k):
    n = min(len(a), len(b))
    p, g = np.array(a[:n]), np.array(b[:n])
    up_p, up_g = np.repeat(p, k), np.repeat(g, k)
    assert edit_score(up_p, up_g) == edit_score(p, g)
    for t in (0.1, 0.25, 0.5):
        assert f1_at_tiou(up_p, up_g, t) == pytest.approx(f1_at_tiou(p, g, t))


@given(labels_st, labels_st)
def test_f1_non_increasing_in_threshold(a, b):
    n = min(len(a), len(b))
    scores = [f1_at_tiou(a[:n], b[:n], t)[0] for t in np.linspace(0.05, 0.95, 19)]
    assert all(x >= y - 1e-12 for x, y in zip(scores, scores[1:]))


@given(labels_st, labels_st, st.permutations(range(4)))
def test_class_permutation_invariance(a, b, perm):
    n = min(len(a), len(b))
    p, g = np.array(a[:n]), np.array(b[:n])
    perm = np.array(perm)
    r1, r2 = evaluate(p, g), evaluate(perm[p], perm[g])
    assert r1.acc == r2.acc and r1.edit == r2.edit and r1.f1 == r2.f1


@given(st.lists(st.integers(0, 1), min_size=1, max_size=30), st.integers(0, 2**31))
def test_accuracy_complement_two_classes(gt, seed):
    g = np.array(gt)
    p = np.random.default_rng(seed).integers(0, 2, len(g))
    flipped = 1 - p  # every right frame becomes wrong and vice versa
    assert frame_accuracy(p, g) + frame_accuracy(flipped, g) == pytest.approx(100)
