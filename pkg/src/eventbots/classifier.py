"""Gain-ratio decision tree for Bot vs NonBot with stratified cross-validation.

The tree is binary on numeric features (``value <= threshold`` goes left),
grows greedily on gain ratio and is capped by depth and minimum leaf size
instead of being pruned.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence, Union

from .corpus import BOT, NONBOT

CLASSES = (BOT, NONBOT)
_INDEX = {BOT: 0, NONBOT: 1}
MIN_GAIN = 1e-12

FORMAT_HEADER = "eventbots-tree 1"


class TrainingError(ValueError):
    pass


def _entropy(counts: Sequence[int]) -> float:
    n = sum(counts)
    if n == 0:
        return 0.0
    h = 0.0
    for c in counts:
        if c:
            p = c / n
            h -= p * math.log2(p)
    return h


def _split_scores(parent: Sequence[int], left: Sequence[int], right: Sequence[int]) -> tuple[float, float]:
    """(information gain, gain ratio) for a two-way split given class counts."""
    n = sum(parent)
    nl, nr = sum(left), sum(right)
    gain = _entropy(parent) - (nl / n) * _entropy(left) - (nr / n) * _entropy(right)
    gain = max(gain, 0.0)
    split_info = _entropy((nl, nr))
    if split_info == 0.0:
        return gain, 0.0
    return gain, min(gain / split_info, 1.0)


def _counts(labels: Sequence) -> dict:
    out: dict = {}
    for y in labels:
        out[y] = out.get(y, 0) + 1
    return out


def gain_ratio(parent_labels: Sequence, left_labels: Sequence, right_labels: Sequence) -> float:
    """Information gain of splitting ``parent_labels`` into the two children,
    divided by the entropy of the children's size partition."""
    if not left_labels or not right_labels:
        raise ValueError("gain_ratio needs two non-empty children")
    pc, lc, rc = _counts(parent_labels), _counts(left_labels), _counts(right_labels)
    merged = dict(lc)
    for k, v in rc.items():
        merged[k] = merged.get(k, 0) + v
    if merged != pc:
        raise ValueError("children do not partition the parent labels")
    keys = sorted(pc, key=repr)
    return _split_scores(
        [pc[k] for k in keys], [lc.get(k, 0) for k in keys], [rc.get(k, 0) for k in keys]
    )[1]


@dataclass(frozen=True)
class Leaf:
    class_counts: tuple[int, int]


@dataclass(frozen=True)
class Split:
    feature_index: int
    threshold: float
    left: "Node"
    right: "Node"
    class_counts: tuple[int, int]


Node = Union[Leaf, Split]


@dataclass(frozen=True)
class TrainParams:
    max_depth: int = 12
    min_leaf: int = 2
    seed: int = 0  # training is deterministic; kept so runs record it


def laplace(counts: tuple[int, int]) -> tuple[str, float]:
    """Class and its Laplace-smoothed probability; ties go to NonBot."""
    total = counts[0] + counts[1] + 2
    p_bot = (counts[0] + 1) / total
    p_non = (counts[1] + 1) / total
    if p_bot > p_non:
        return BOT, p_bot
    return NONBOT, p_non


@dataclass(frozen=True)
class DecisionTree:
    root: Node
    n_features: int
    feature_names: tuple[str, ...] = ()

    def _check(self, x: Sequence[float]) -> None:
        if len(x) != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {len(x)}")

    def leaf(self, x: Sequence[float]) -> Leaf:
        self._check(x)
        node = self.root
        while isinstance(node, Split):
            node = node.left if x[node.feature_index] <= node.threshold else node.right
        return node

    def decision_path(self, x: Sequence[float]) -> tuple[tuple[int, bool], ...]:
        """(feature_index, went_left) for each split visited."""
        self._check(x)
        path = []
        node = self.root
        while isinstance(node, Split):
            go_left = x[node.feature_index] <= node.threshold
            path.append((node.feature_index, go_left))
            node = node.left if go_left else node.right
        return tuple(path)

    def predict(self, x: Sequence[float]) -> tuple[str, float]:
        return laplace(self.leaf(x).class_counts)

    def bot_probability(self, x: Sequence[float]) -> float:
        c = self.leaf(x).class_counts
        return (c[0] + 1) / (c[0] + c[1] + 2)

    def depth(self) -> int:
        def d(n):
            return 0 if isinstance(n, Leaf) else 1 + max(d(n.left), d(n.right))
        return d(self.root)

    def nodes(self) -> list[Node]:
        out = []
        stack = [self.root]
        while stack:
            n = stack.pop()
            out.append(n)
            if isinstance(n, Split):
                stack.extend((n.right, n.left))
        return out

    def dumps(self) -> str:
        """Plain-text preorder serialization, one node per line::

            eventbots-tree 1
            features <n> <comma-separated names>
            S <feature_index> <threshold> <bot_count> <nonbot_count>
            L <bot_count> <nonbot_count>
        """
        lines = [FORMAT_HEADER, f"features {self.n_features} {','.join(self.feature_names)}".rstrip()]
        for n in self.nodes():
            if isinstance(n, Split):
                lines.append(f"S {n.feature_index} {n.threshold!r} {n.class_counts[0]} {n.class_counts[1]}")
            else:
                lines.append(f"L {n.class_counts[0]} {n.class_counts[1]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> DecisionTree:
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != FORMAT_HEADER:
            raise ValueError("not a serialized tree")
        head = lines[1].split(" ", 2)
        n_features = int(head[1])
        names = tuple(head[2].split(",")) if len(head) > 2 else ()
        it = iter(lines[2:])

        def read() -> Node:
            parts = next(it).split()
            if parts[0] == "L":
                return Leaf((int(parts[1]), int(parts[2])))
            left = read()
            right = read()
            return Split(int(parts[1]), float(parts[2]), left, right, (int(parts[3]), int(parts[4])))

        root = read()
        return cls(root, n_features, names)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> DecisionTree:
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def _encode(labels: Sequence[str]) -> list[int]:
    try:
        return [_INDEX[y] for y in labels]
    except KeyError as exc:
        raise TrainingError(f"unknown label {exc.args[0]!r}") from None


def _class_counts(ys: Sequence[int], idx: Sequence[int]) -> tuple[int, int]:
    bots = sum(1 for i in idx if ys[i] == 0)
    return bots, len(idx) - bots


def _best_split(X, ys, idx, min_leaf):
    """Best (ratio, feature, threshold) over all midpoints; None if no split
    with positive gain satisfies ``min_leaf``."""
    parent = _class_counts(ys, idx)
    n = len(idx)
    best = None
    for f in range(len(X[idx[0]])):
        order = sorted(idx, key=lambda i: X[i][f])
        left = [0, 0]
        for pos in range(n - 1):
            left[ys[order[pos]]] += 1
            v, nxt = X[order[pos]][f], X[order[pos + 1]][f]
            if v == nxt:
                continue
            nl = pos + 1
            if nl < min_leaf or n - nl < min_leaf:
                continue
            right = (parent[0] - left[0], parent[1] - left[1])
            gain, ratio = _split_scores(parent, left, right)
            if gain < MIN_GAIN:
                continue
            if best is None or ratio > best[0]:
                thr = (v + nxt) / 2.0
                if not v <= thr < nxt:
                    thr = v
                best = (ratio, f, thr)
    return best


def train(matrix: Sequence[Sequence[float]], labels: Sequence[str], params: TrainParams | None = None,
          feature_names: Sequence[str] = ()) -> DecisionTree:
    params = params or TrainParams()
    if not matrix:
        raise TrainingError("cannot train on an empty matrix")
    if len(matrix) != len(labels):
        raise TrainingError("matrix and labels differ in length")
    width = len(matrix[0])
    if any(len(r) != width for r in matrix):
        raise TrainingError("ragged feature matrix")
    if any(not math.isfinite(v) for r in matrix for v in r):
        raise TrainingError("feature values must be finite")
    X = [list(map(float, r)) for r in matrix]
    ys = _encode(labels)
    min_leaf = max(params.min_leaf, 1)

    def grow(idx: list[int], depth: int) -> Node:
        counts = _class_counts(ys, idx)
        if depth >= params.max_depth or 0 in counts or len(idx) < 2 * min_leaf:
            return Leaf(counts)
        best = _best_split(X, ys, idx, min_leaf)
        if best is None:
            return Leaf(counts)
        _, f, thr = best
        li = [i for i in idx if X[i][f] <= thr]
        ri = [i for i in idx if X[i][f] > thr]
        return Split(f, thr, grow(li, depth + 1), grow(ri, depth + 1), counts)

    return DecisionTree(grow(list(range(len(X))), 0), width, tuple(feature_names))


@dataclass(frozen=True)
class Prediction:
    row: int
    true_label: str
    predicted: str
    bot_score: float
    fold: int


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    tp_rate: float
    fp_rate: float
    precision: float
    recall: float
    f_measure: float
    roc_auc: float
    n: int

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_lines(self) -> str:
        return "".join(f"{k}: {v!r}\n" for k, v in self.as_dict().items())


def roc_auc(true_labels: Sequence[str], bot_scores: Sequence[float]) -> float:
    """Probability that a random Bot outscores a random NonBot (ties half).

    Computed via mid-ranks. Returns 0.5 when either class is missing.
    """
    pairs = sorted(zip(bot_scores, true_labels), key=lambda p: p[0])
    n_pos = sum(1 for _, y in pairs if y == BOT)
    n_neg = len(pairs) - n_pos
    if n_pos == 0 or n_neg == 0:
        return 0.5
    rank_sum = 0.0
    i = 0
    while i < len(pairs):
        j = i
        while j + 1 < len(pairs) and pairs[j + 1][0] == pairs[i][0]:
            j += 1
        mid = (i + j) / 2.0 + 1.0
        rank_sum += mid * sum(1 for _, y in pairs[i:j + 1] if y == BOT)
        i = j + 1
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def evaluate(predictions: Sequence[Prediction]) -> EvalReport:
    """Pooled metrics; per-class rates are weighted by true-class support."""
    n = len(predictions)
    if n == 0:
        raise ValueError("no predictions to evaluate")
    acc = sum(p.predicted == p.true_label for p in predictions) / n
    tpr = fpr = prec = f = 0.0
    for c in CLASSES:
        tp = sum(p.true_label == c and p.predicted == c for p in predictions)
        fn = sum(p.true_label == c and p.predicted != c for p in predictions)
        fp = sum(p.true_label != c and p.predicted == c for p in predictions)
        tn = n - tp - fn - fp
        w = (tp + fn) / n
        r = tp / (tp + fn) if tp + fn else 0.0
        pr = tp / (tp + fp) if tp + fp else 0.0
        tpr += w * r
        fpr += w * (fp / (fp + tn) if fp + tn else 0.0)
        prec += w * pr
        f += w * (2 * pr * r / (pr + r) if pr + r else 0.0)
    auc = roc_auc([p.true_label for p in predictions], [p.bot_score for p in predictions])
    return EvalReport(acc, tpr, fpr, prec, tpr, f, auc, n)


def balance_classes(labels: Sequence[str], seed: int) -> list[int]:
    """Row indices after downsampling the majority class to the minority size."""
    by = {c: [i for i, y in enumerate(labels) if y == c] for c in CLASSES}
    m = min(len(v) for v in by.values())
    rng = random.Random(seed)
    keep = []
    for c in CLASSES:
        rows = by[c]
        keep.extend(rows if len(rows) == m else rng.sample(rows, m))
    return sorted(keep)


def stratified_folds(labels: Sequence[str], k: int, seed: int) -> list[list[int]]:
    for c in CLASSES:
        size = sum(1 for y in labels if y == c)
        if size < k:
            raise TrainingError(f"class {c} has {size} rows, fewer than k={k}")
    rng = random.Random(f"folds:{seed}")
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for c in CLASSES:
        rows = [i for i, y in enumerate(labels) if y == c]
        rng.shuffle(rows)
        for j, i in enumerate(rows):
            folds[(offset + j) % k].append(i)
        offset += len(rows)
    return [sorted(f) for f in folds]


def cross_validate_predictions(
    matrix: Sequence[Sequence[float]],
    labels: Sequence[str],
    k: int = 10,
    seed: int = 0,
    params: TrainParams | None = None,
    balance: bool = True,
) -> list[Prediction]:
    """Pooled out-of-fold predictions, ordered by row index.

    ``row`` refers to the original matrix; rows dropped by balancing get no
    prediction.
    """
    if k < 2:
        raise TrainingError("k must be at least 2")
    _encode(labels)
    rows = balance_classes(labels, seed) if balance else list(range(len(labels)))
    sub_labels = [labels[i] for i in rows]
    folds = stratified_folds(sub_labels, k, seed)
    preds = []
    for fold_no, test in enumerate(folds):
        test_set = set(test)
        train_rows = [rows[j] for j in range(len(rows)) if j not in test_set]
        tree = train([matrix[i] for i in train_rows], [labels[i] for i in train_rows], params)
        for j in test:
            i = rows[j]
            cls, _ = tree.predict(matrix[i])
            preds.append(Prediction(i, labels[i], cls, tree.bot_probability(matrix[i]), fold_no))
    preds.sort(key=lambda p: p.row)
    return preds


def cross_validate(
    matrix: Sequence[Sequence[float]],
    labels: Sequence[str],
    k: int = 10,
    seed: int = 0,
    params: TrainParams | None = None,
    balance: bool = True,
) -> EvalReport:
    return evaluate(cross_validate_predictions(matrix, labels, k, seed, params, balance))


def best_single_split_gain(values: Sequence[float], ys: Sequence[int]) -> float:
    order = sorted(range(len(values)), key=lambda i: values[i])
    parent = (ys.count(0), ys.count(1))
    left = [0, 0]
    best = 0.0
    for pos in range(len(order) - 1):
        left[ys[order[pos]]] += 1
        if values[order[pos]] == values[order[pos + 1]]:
            continue
        right = (parent[0] - left[0], parent[1] - left[1])
        best = max(best, _split_scores(parent, left, right)[0])
    return best


def rank_features_by_gain(
    matrix: Sequence[Sequence[float]], labels: Sequence[str]
) -> list[tuple[int, float]]:
    """(column index, information gain of its best threshold), best first."""
    if len(matrix) < 2:
        raise TrainingError("need at least two rows")
    ys = _encode(labels)
    gains = [(f, best_single_split_gain([r[f] for r in matrix], ys)) for f in range(len(matrix[0]))]
    return sorted(gains, key=lambda g: (-g[1], g[0]))
