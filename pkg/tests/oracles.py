"""Independent reference implementations used to cross-check the library."""

from __future__ import annotations

import math

from eventbots.corpus import BOT, NONBOT


def entropy_oracle(labels) -> float:
    """Shannon entropy in bits from first principles (natural log, rescaled)."""
    n = len(labels)
    out = 0.0
    for c in set(labels):
        p = labels.count(c) / n
        out -= p * math.log(p)
    return out / math.log(2)


def gain_ratio_oracle(parent, left, right) -> float:
    n = len(parent)
    gain = entropy_oracle(parent) - len(left) / n * entropy_oracle(left) - len(right) / n * entropy_oracle(right)
    split_info = entropy_oracle(["L"] * len(left) + ["R"] * len(right))
    return 0.0 if split_info == 0 else gain / split_info


def brute_brokerage(bots, friends, edges):
    """Quadratic reference: scan the whole edge list for every node."""
    nodes = sorted({u for e in edges for u in e})
    followers = [u for u in nodes if u not in bots and any(a == u and b in bots for a, b in edges)]
    exclusive = [u for u in followers if not any(a == u and b in friends for a, b in edges)]
    return len(followers), len(exclusive)


def random_graph(rng, n=200, p=0.02):
    nodes = [f"n{i}" for i in range(n)]
    edges = {(a, b) for a in nodes for b in nodes if a != b and rng.random() < p}
    return nodes, sorted(edges)


def metrics_oracle(rows):
    """Weighted-average metrics from (true, predicted, bot_score) triples.

    AUC counts Bot/NonBot score pairs directly (ties count half).
    """
    n = len(rows)
    out = dict.fromkeys(("accuracy", "tp_rate", "fp_rate", "precision", "recall", "f_measure"), 0.0)
    out["accuracy"] = sum(t == p for t, p, _ in rows) / n
    for c in (BOT, NONBOT):
        tp = sum(t == c and p == c for t, p, _ in rows)
        fn = sum(t == c and p != c for t, p, _ in rows)
        fp = sum(t != c and p == c for t, p, _ in rows)
        tn = n - tp - fn - fp
        w = (tp + fn) / n
        r = tp / (tp + fn) if tp + fn else 0.0
        pr = tp / (tp + fp) if tp + fp else 0.0
        out["tp_rate"] += w * r
        out["recall"] += w * r
        out["fp_rate"] += w * (fp / (fp + tn) if fp + tn else 0.0)
        out["precision"] += w * pr
        out["f_measure"] += w * (2 * pr * r / (pr + r) if pr + r else 0.0)
    pos = [s for t, _, s in rows if t == BOT]
    neg = [s for t, _, s in rows if t == NONBOT]
    wins = sum(1.0 if a > b else 0.5 if a == b else 0.0 for a in pos for b in neg)
    out["roc_auc"] = wins / (len(pos) * len(neg)) if pos and neg else 0.5
    out["n"] = n
    return out
