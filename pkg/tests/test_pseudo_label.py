import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import energy_boundary_oracle, kmedoids_oracle
from pointseg.data import UNLABELED, PointAnnotations
from pointseg.errors import ArgumentError, ConfigurationError, ShapeError
from pointseg.metrics import extract_segments
from pointseg.pseudo_label import (
    GeneratorConfig,
    compute_prototypes,
    energy_boundary,
    generate_energy_labels,
    generate_kmedoids_labels,
    generate_prototype_labels,
    integrate,
    kmedoids_boundaries,
    prototype_transition,
)

A, B, C = 3, 5, 1


def col(values):
    return np.asarray(values, dtype=float)[:, None]


def pts(pairs, length):
    return PointAnnotations([f for f, _ in pairs], [c for _, c in pairs], length)


def protos_1d(values):
    """Prototypes from {class: scalar}."""
    n = max(values) + 1
    feats = [col([values[c]]) for c in values]
    ann = [pts([(0, c)], 1) for c in values]
    return compute_prototypes(feats, ann, n)


# -- prototypes -------------------------------------------------------------


def test_prototype_of_single_annotation():
    p = compute_prototypes([np.array([[1.0, 2.0], [7.0, 9.0]])], [pts([(1, 0)], 2)], 1)
    np.testing.assert_array_equal(p.means[0], [7, 9])


def test_prototype_two_point_mean_and_absent_class():
    feats = [np.array([[1.0, 0.0], [9.0, 9.0]]), np.array([[3.0, 0.0]])]
    p = compute_prototypes(feats, [pts([(0, 0)], 2), pts([(0, 0)], 1)], 3)
    np.testing.assert_array_equal(p.means[0], [2, 0])
    assert not p.present[2] and np.all(p.means[2] == 0)
    with pytest.raises(ConfigurationError):
        p.get(2)


def test_prototype_frame_out_of_range():
    bad = PointAnnotations([5], [0], 6)
    with pytest.raises(IndexError):
        compute_prototypes([np.zeros((3, 1))], [bad], 1)


# -- energy -------------------------------------------------------------------


def test_energy_examples():
    assert energy_boundary(col([0, 1, 2]), 1, 2) == 1
    assert energy_boundary(col([0, 0, 0, 10, 10]), 0, 4) == 2
    assert energy_boundary(col([0.1] * 6), 0, 5) == 0
    assert energy_boundary(np.full((6, 3), 0.7), 0, 5) == 0


def test_energy_rejects_bad_interval():
    with pytest.raises(ArgumentError):
        energy_boundary(col([0, 1, 2]), 2, 2)


def test_energy_labels_examples():
    assert generate_energy_labels(col(range(6)), pts([(3, 7)], 6)).tolist() == [7] * 6
    assert generate_energy_labels(col([0, 0, 0, 10, 10]), pts([(0, A), (4, B)], 5)).tolist() == [A, A, A, B, B]
    assert generate_energy_labels(col([4, 1, 8, 2, 0]), pts([(1, A), (3, A)], 5)).tolist() == [A] * 5


@given(st.integers(2, 30), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_energy_matches_exhaustive_oracle(t, d, seed):
    r = np.random.default_rng(seed)
    h = r.normal(size=(t, d))
    if seed % 5 == 0:
        h = np.round(h)  # plenty of exact ties
    t_i = int(r.integers(0, t - 1))
    t_next = int(r.integers(t_i + 1, t))
    assert energy_boundary(h, t_i, t_next) == energy_boundary_oracle(h.tolist(), t_i, t_next)


# -- k-medoids ----------------------------------------------------------------


def test_kmedoids_examples():
    cfg = GeneratorConfig()
    assert generate_kmedoids_labels(col(range(5)), pts([(2, C)], 5), cfg).tolist() == [C] * 5
    feats = col([0, 0, 0, 10, 10, 10])
    assert generate_kmedoids_labels(feats, pts([(1, A), (4, B)], 6), cfg).tolist() == [A, A, A, B, B, B]
    assert generate_kmedoids_labels(col([2.0] * 8), pts([(0, A), (5, B)], 8), cfg).tolist() == [A] + [B] * 7


def test_kmedoids_examples_agree_with_oracle():
    assert kmedoids_oracle([[0], [0], [0], [10], [10], [10]], [1, 4], 50) == [2]
    assert kmedoids_oracle([[2.0]] * 8, [0, 5], 50) == [0]


def test_kmedoids_single_iteration_is_initial_assignment():
    r = np.random.default_rng(3)
    h = r.normal(size=(40, 3))
    p = pts([(2, A), (15, B), (30, A)], 40)
    bounds, iters = kmedoids_boundaries(h, p, max_iters=1)
    assert iters == 1
    # initial medoids are the annotated frames
    expected = []
    for (lo, _), (hi, _) in zip(p.pairs(), p.pairs()[1:]):
        costs = [
            np.linalg.norm(h[lo : b + 1] - h[lo], axis=1).sum() + np.linalg.norm(h[b + 1 : hi + 1] - h[hi], axis=1).sum()
            for b in range(lo, hi)
        ]
        expected.append(lo + int(np.argmin(costs)))
    assert bounds == expected


@given(st.integers(3, 40), st.integers(1, 4), st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_kmedoids_matches_oracle_and_terminates(t, d, n_points, max_iters, seed):
    r = np.random.default_rng(seed)
    n_points = min(n_points, t)
    frames = sorted(r.choice(t, n_points, replace=False).tolist())
    classes = r.integers(0, 3, n_points).tolist()
    h = r.normal(size=(t, d))
    p = PointAnnotations(frames, classes, t)
    bounds, iters = kmedoids_boundaries(h, p, max_iters)
    assert 1 <= iters <= max_iters
    assert bounds == (kmedoids_oracle(h.tolist(), frames, max_iters) or [])


# -- prototype similarity ----------------------------------------------------------


def test_prototype_labels_hand_example():
    protos = protos_1d({A: 0.0, B: 10.0})
    feats = col([0, 2, 5, 8, 10])
    p = pts([(0, A), (4, B)], 5)
    assert prototype_transition(feats, 0, 4, protos.get(A), protos.get(B), "equidistant") == 2
    for criterion in ("consistent", "equidistant"):
        assert generate_prototype_labels(feats, p, protos, criterion).tolist() == [A, A, A, B, B]


def test_prototype_adjacent_points_and_single_point():
    protos = protos_1d({A: 0.0, B: 10.0, C: 3.0})
    assert generate_prototype_labels(col([9, 9, 9, 0]), pts([(2, A), (3, B)], 4), protos).tolist() == [A, A, A, B]
    assert generate_prototype_labels(col([1, 2, 3]), pts([(0, C)], 3), protos).tolist() == [C] * 3


def test_prototype_missing_class_is_configuration_error():
    protos = protos_1d({A: 0.0})
    with pytest.raises(ConfigurationError):
        generate_prototype_labels(col([0, 1, 2]), pts([(0, A), (2, B)], 3), protos)


def test_prototype_step_recovery_needs_consistent_rule():
    protos = protos_1d({A: 0.0, B: 1.0})
    feats = col([0] * 6 + [1] * 4)
    p = pts([(1, A), (8, B)], 10)
    truth = [A] * 6 + [B] * 4
    assert generate_prototype_labels(feats, p, protos, "consistent").tolist() == truth
    # |S1 - S2| is flat across a step, so the literal rule falls back to the first frame
    assert generate_prototype_labels(feats, p, protos, "equidistant").tolist() == [A, A, A] + [B] * 7
    # segment ending on its own annotated frame
    assert generate_prototype_labels(feats, pts([(5, A), (8, B)], 10), protos).tolist() == truth


def test_prototype_dimension_mismatch():
    with pytest.raises(ShapeError):
        generate_prototype_labels(np.zeros((3, 2)), pts([(0, A)], 3), protos_1d({A: 0.0}))


# -- integration ------------------------------------------------------------------


def test_integrate_examples():
    s = [A, B, B, C]
    assert integrate([s, s, s]).tolist() == s
    assert integrate([[A, A, B], [A, B, B], [A, A, B]]).tolist() == [A, UNLABELED, B]
    assert integrate([[A, A], [B, B]]).tolist() == [UNLABELED] * 2
    with pytest.raises(ShapeError):
        integrate([[A], [A, A]])


@given(st.lists(st.lists(st.integers(0, 3), min_size=6, max_size=6), min_size=1, max_size=4), st.permutations(range(4)))
def test_integrate_properties(seqs, order):
    assert integrate([seqs[0]] * 3).tolist() == seqs[0]
    shuffled = [seqs[i % len(seqs)] for i in order][: len(seqs)]
    if sorted(map(tuple, shuffled)) == sorted(map(tuple, seqs)):
        assert integrate(shuffled).tolist() == integrate(seqs).tolist()
    assert integrate(seqs[::-1]).tolist() == integrate(seqs).tolist()


# -- shared generator invariants --------------------------------------------------


@st.composite
def problems(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    r = np.random.default_rng(seed)
    t = draw(st.integers(1, 60))
    d = draw(st.integers(1, 4))
    n = draw(st.integers(1, min(t, 8)))
    frames = sorted(r.choice(t, n, replace=False).tolist())
    classes = r.integers(0, 4, n).tolist()
    h = r.normal(size=(t, d))
    if draw(st.booleans()):
        h = np.round(h)
    return h, PointAnnotations(frames, classes, t)


def all_generators(h, p):
    protos = compute_prototypes([h], [p], 4)
    return {
        "energy": generate_energy_labels(h, p),
        "kmedoids": generate_kmedoids_labels(h, p, GeneratorConfig(max_kmedoids_iters=10)),
        "prototype": generate_prototype_labels(h, p, protos),
        "prototype-eq": generate_prototype_labels(h, p, protos, "equidistant"),
    }


def collapse(seq):
    return [x for i, x in enumerate(seq) if i == 0 or x != seq[i - 1]]


@given(problems())
def test_generator_structural_invariants(problem):
    h, p = problem
    for name, labels in all_generators(h, p).items():
        assert len(labels) == p.length and UNLABELED not in labels, name
        for f, c in p.pairs():
            assert labels[f] == c, name
        segs = extract_segments(labels)
        assert len(segs) <= 2 * len(p) - 1, name
        assert [s.label for s in segs] == collapse(list(p.classes)), name


@given(problems(), st.permutations(range(4)))
def test_generators_equivariant_under_relabeling(problem, perm):
    h, p = problem
    perm = np.array(perm)
    relabeled = PointAnnotations(p.frames, [int(perm[c]) for c in p.classes], p.length)
    base = all_generators(h, p)
    moved = all_generators(h, relabeled)
    for name in base:
        np.testing.assert_array_equal(perm[base[name]], moved[name], err_msg=name)


@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(1, 4))
def test_noiseless_piecewise_constant_recovery(seed, n_segments, d):
    r = np.random.default_rng(seed)
    lengths = r.integers(1, 12, n_segments)
    classes = [int(r.integers(0, 4))]
    for _ in range(n_segments - 1):
        classes.append(int(r.choice([c for c in range(4) if c != classes[-1]])))
    # distinct value per piece
    values = r.normal(size=(n_segments, d)) + np.arange(n_segments)[:, None] * 3.0
    h = np.repeat(values, lengths, axis=0)
    truth = np.repeat(classes, lengths)
    starts = np.concatenate(([0], np.cumsum(lengths)[:-1]))
    frames = [int(s + r.integers(0, l)) for s, l in zip(starts, lengths)]
    p = PointAnnotations(frames, classes, len(h))
    np.testing.assert_array_equal(generate_energy_labels(h, p), truth)
    np.testing.assert_array_equal(generate_kmedoids_labels(h, p), truth)
    # exact piece-value prototypes: each class's piece values must coincide, so give
    # every piece a class-determined value
    class_values = r.normal(size=(4, d)) * 3
    hp = np.repeat(class_values[classes], lengths, axis=0)
    protos = compute_prototypes([hp], [p], 4)
    np.testing.assert_array_equal(generate_prototype_labels(hp, p, protos), truth)
