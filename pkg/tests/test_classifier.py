from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eventbots.classifier import (
    DecisionTree,
    Leaf,
    Split,
    TrainingError,
    TrainParams,
    balance_classes,
    cross_validate,
    cross_validate_predictions,
    evaluate,
    gain_ratio,
    laplace,
    rank_features_by_gain,
    roc_auc,
    stratified_folds,
    train,
)
from eventbots.corpus import BOT, NONBOT
from oracles import gain_ratio_oracle

B, N = BOT, NONBOT


def test_gain_ratio_pure_split():
    assert gain_ratio([B, B, N, N], [B, B], [N, N]) == pytest.approx(1.0)


def test_gain_ratio_zero_gain():
    assert gain_ratio([B, B, N, N], [B, N], [B, N]) == pytest.approx(0.0, abs=1e-15)


def test_gain_ratio_rejects_bad_children():
    with pytest.raises(ValueError):
        gain_ratio([B, N], [], [B, N])
    with pytest.raises(ValueError):
        gain_ratio([B, N], [B], [B])


def test_gain_ratio_random_50_row_tables():
    rng = random.Random(50)
    for _ in range(200):
        parent = [rng.choice((B, N)) for _ in range(50)]
        cut = rng.randrange(1, 50)
        rng.shuffle(parent)
        left, right = parent[:cut], parent[cut:]
        assert gain_ratio(parent, left, right) == pytest.approx(gain_ratio_oracle(parent, left, right), abs=1e-12)


def test_gain_ratio_frozen_value():
    parent = [B] * 6 + [N] * 4
    left, right = [B] * 5 + [N], [B] + [N] * 3
    assert gain_ratio(parent, left, right) == pytest.approx(0.2640977750531416, abs=1e-12)


@settings(max_examples=200)
@given(st.lists(st.booleans(), min_size=2, max_size=60), st.data())
def test_gain_ratio_in_unit_interval(bits, data):
    labels = [B if b else N for b in bits]
    cut = data.draw(st.integers(1, len(labels) - 1))
    g = gain_ratio(labels, labels[:cut], labels[cut:])
    assert 0.0 <= g <= 1.0


@pytest.mark.parametrize("counts,expected", [
    ((8, 0), (B, 0.9)),
    ((1, 1), (N, 0.5)),
    ((0, 0), (N, 0.5)),
    ((0, 3), (N, 0.8)),
])
def test_laplace(counts, expected):
    cls, p = laplace(counts)
    assert cls == expected[0] and p == pytest.approx(expected[1])


def test_separable_one_feature():
    X = [[1.0], [2.0], [3.0], [10.0], [11.0], [12.0]]
    y = [N, N, N, B, B, B]
    tree = train(X, y, TrainParams(min_leaf=1))
    assert tree.depth() == 1
    assert isinstance(tree.root, Split) and tree.root.threshold == 6.5
    assert all(tree.predict(x)[0] == c for x, c in zip(X, y))


def test_identical_rows_give_majority_leaf():
    tree = train([[1.0, 2.0]] * 5, [B, B, B, N, N])
    assert isinstance(tree.root, Leaf) and tree.root.class_counts == (3, 2)
    assert tree.predict([1.0, 2.0]) == (B, pytest.approx(4 / 7))


def test_single_class_is_single_leaf():
    tree = train([[1.0], [2.0]], [N, N])
    assert tree.root == Leaf((0, 2))


def test_empty_input_is_fatal():
    with pytest.raises(TrainingError):
        train([], [])


def test_hand_traced_tree():
    # XOR-like layout: no split on f1 has any gain; on f0 the midpoints 2.5 and
    # 7.5 tie at the best ratio (0.383689...), and the lower threshold wins.
    # The remaining right side {B x4, N x2} is then split at 7.5.
    X = [[1, 1], [2, 2], [8, 9], [9, 8], [3, 8], [4, 9], [6, 1], [7, 2]]
    y = [N, N, N, N, B, B, B, B]
    tree = train(X, y, TrainParams(min_leaf=1))
    assert tree.dumps().splitlines()[2:] == [
        "S 0 2.5 4 4",
        "L 0 2",
        "S 0 7.5 4 2",
        "L 4 0",
        "L 0 2",
    ]
    left = [c for r, c in zip(X, y) if r[0] <= 2.5]
    right = [c for r, c in zip(X, y) if r[0] > 2.5]
    assert gain_ratio_oracle(y, left, right) == pytest.approx(0.3836885465963445, abs=1e-12)
    x = [5.0, 0.0]
    # root: f0=5 > 2.5 -> right; f0=5 <= 7.5 -> leaf with 4 bots, 0 non-bots
    assert tree.decision_path(x) == ((0, False), (0, True))
    assert tree.predict(x) == (B, 5 / 6)


def test_arity_mismatch():
    tree = train([[1.0, 2.0], [3.0, 4.0]], [B, N], TrainParams(min_leaf=1))
    with pytest.raises(ValueError):
        tree.predict([1.0])


def test_serialization_roundtrip(tmp_path):
    rng = random.Random(3)
    X = [[rng.random() for _ in range(4)] for _ in range(80)]
    y = [B if r[0] + r[2] > 1 else N for r in X]
    tree = train(X, y, feature_names=["a", "b", "c", "d"])
    tree.save(tmp_path / "t.txt")
    back = DecisionTree.load(tmp_path / "t.txt")
    assert back == tree
    assert back.dumps() == tree.dumps()


def _blobs(n, seed, shift=2.0, dims=3):
    rng = random.Random(seed)
    X, y = [], []
    for i in range(n):
        c = B if i % 2 == 0 else N
        mu = shift if c == B else 0.0
        X.append([rng.gauss(mu if d == 0 else 0.0, 1.0) for d in range(dims)])
        y.append(c)
    return X, y


def test_training_is_deterministic():
    X, y = _blobs(200, 1)
    assert train(X, y).dumps() == train(X, y).dumps()
    assert cross_validate(X, y, 10, 4) == cross_validate(X, y, 10, 4)


def _partition(tree, X):
    """(feature_index, frozenset of rows sent left) per split, in preorder."""
    out = []

    def walk(node, rows):
        if isinstance(node, Leaf):
            return
        left = [i for i in rows if X[i][node.feature_index] <= node.threshold]
        out.append((node.feature_index, frozenset(left)))
        walk(node.left, left)
        walk(node.right, [i for i in rows if i not in set(left)])

    walk(tree.root, list(range(len(X))))
    return out


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 2), st.sampled_from(["exp", "cube", "affine"]))
def test_monotone_transform_keeps_structure(seed, col, kind):
    X, y = _blobs(60, seed)
    f = {"exp": math.exp, "cube": lambda v: v ** 3 + v, "affine": lambda v: 3.5 * v - 7}[kind]
    Xt = [[f(v) if j == col else v for j, v in enumerate(r)] for r in X]
    assert _partition(train(X, y), X) == _partition(train(Xt, y), Xt)


def test_majority_predictor_metrics():
    from eventbots.classifier import Prediction

    preds = [Prediction(i, B if i % 2 else N, N, 0.5, 0) for i in range(10)]
    rep = evaluate(preds)
    assert rep.accuracy == 0.5 and rep.roc_auc == 0.5


def test_perfectly_separable_cv():
    X = [[float(i if i < 20 else i + 100)] for i in range(40)]
    y = [N] * 20 + [B] * 20
    rep = cross_validate(X, y, k=10, seed=1)
    assert rep.accuracy == 1.0 and rep.roc_auc == 1.0 and rep.f_measure == 1.0


def test_label_permutation_near_chance():
    X, y = _blobs(500, 7)
    shuffled = list(y)
    random.Random(99).shuffle(shuffled)
    acc = cross_validate(X, shuffled, k=10, seed=5).accuracy
    assert 0.4 <= acc <= 0.6


def test_signal_is_learned():
    X, y = _blobs(400, 8, shift=4.0)
    assert cross_validate(X, y, k=10, seed=2).accuracy > 0.95


def test_class_smaller_than_k_names_class():
    X = [[float(i)] for i in range(30)]
    y = [B] * 5 + [N] * 25
    with pytest.raises(TrainingError, match="Bot"):
        cross_validate(X, y, k=10, seed=0, balance=False)


def test_roc_perfect_and_negated():
    y = [B, B, N, N, B, N]
    s = [0.9, 0.8, 0.1, 0.2, 0.7, 0.3]
    assert roc_auc(y, s) == 1.0
    assert roc_auc(y, [-v for v in s]) == 0.0
    assert roc_auc(y, [0.5] * 6) == 0.5
    assert roc_auc([B, B], [0.1, 0.2]) == 0.5


@given(st.lists(st.tuples(st.booleans(), st.integers(0, 5)), min_size=2, max_size=40))
def test_roc_matches_pair_count(rows):
    y = [B if b else N for b, _ in rows]
    s = [float(v) for _, v in rows]
    pos = [v for c, v in zip(y, s) if c == B]
    neg = [v for c, v in zip(y, s) if c == N]
    if not pos or not neg:
        return
    pairs = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    assert roc_auc(y, s) == pytest.approx(pairs / (len(pos) * len(neg)), abs=1e-12)


def test_metrics_match_sklearn_on_pooled_predictions():
    metrics = pytest.importorskip("sklearn.metrics")
    X, y = _blobs(300, 21, shift=1.2)
    preds = cross_validate_predictions(X, y, k=10, seed=3)
    rep = evaluate(preds)
    t = [p.true_label for p in preds]
    h = [p.predicted for p in preds]
    assert rep.accuracy == pytest.approx(metrics.accuracy_score(t, h), abs=1e-12)
    assert rep.precision == pytest.approx(metrics.precision_score(t, h, average="weighted"), abs=1e-12)
    assert rep.recall == pytest.approx(metrics.recall_score(t, h, average="weighted"), abs=1e-12)
    assert rep.f_measure == pytest.approx(metrics.f1_score(t, h, average="weighted"), abs=1e-12)
    auc = metrics.roc_auc_score([1 if v == B else 0 for v in t], [p.bot_score for p in preds])
    assert rep.roc_auc == pytest.approx(auc, abs=1e-12)
    assert rep.recall == rep.tp_rate


def test_balance_and_folds():
    y = [B] * 30 + [N] * 70
    keep = balance_classes(y, 4)
    assert sum(y[i] == B for i in keep) == sum(y[i] == N for i in keep) == 30
    folds = stratified_folds([y[i] for i in keep], 10, 4)
    flat = sorted(i for f in folds for i in f)
    assert flat == list(range(60))
    assert all(len(f) == 6 for f in folds)


def test_rank_features():
    X = [[float(i), 1.0, float(i)] for i in range(20)]
    y = [N] * 10 + [B] * 10
    ranking = rank_features_by_gain(X, y)
    assert [f for f, _ in ranking] == [0, 2, 1]
    assert ranking[0][1] == pytest.approx(1.0)
    assert ranking[2][1] == 0.0
    with pytest.raises(TrainingError):
        rank_features_by_gain([[1.0]], [B])
