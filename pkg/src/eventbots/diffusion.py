"""Follower-graph statistics: exclusive reach of bots and degree summaries."""

from __future__ import annotations

import bisect
import csv
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable


class GraphError(ValueError):
    pass


class FollowEdgeSet:
    """Directed follower -> followed edges, indexed both ways.

    Duplicate edges collapse to one; self-loops are rejected.
    """

    def __init__(self, edges: Iterable[tuple[str, str]] = ()):
        out: dict[str, set[str]] = {}
        for follower, followed in edges:
            if follower == followed:
                raise GraphError(f"self-loop on {follower!r}")
            out.setdefault(follower, set()).add(followed)
        self._out = {u: sorted(vs) for u, vs in out.items()}
        inc: dict[str, list[str]] = {}
        for u in sorted(self._out):
            for v in self._out[u]:
                inc.setdefault(v, []).append(u)
        self._in = inc

    def __len__(self):
        return sum(len(v) for v in self._out.values())

    def __iter__(self):
        for u in sorted(self._out):
            for v in self._out[u]:
                yield u, v

    def __contains__(self, edge) -> bool:
        vs = self._out.get(edge[0])
        if not vs:
            return False
        i = bisect.bisect_left(vs, edge[1])
        return i < len(vs) and vs[i] == edge[1]

    def following(self, user: str) -> list[str]:
        return self._out.get(user, [])

    def followers(self, user: str) -> list[str]:
        return self._in.get(user, [])

    def nodes(self) -> set[str]:
        return set(self._out) | set(self._in)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["follower_id", "followed_id"])
            w.writerows(self)

    @classmethod
    def load(cls, path: str | Path) -> FollowEdgeSet:
        edges = []
        with open(path, encoding="utf-8", newline="") as fh:
            for line_no, row in enumerate(csv.reader(fh), start=1):
                if not row or row[0].startswith("#"):
                    continue
                if line_no == 1 and row[0].strip() == "follower_id":
                    continue
                if len(row) != 2:
                    raise GraphError(f"{path}:{line_no}: expected follower_id,followed_id")
                edges.append((row[0].strip(), row[1].strip()))
        return cls(edges)


def read_id_set(path: str | Path) -> set[str]:
    with open(path, encoding="utf-8") as fh:
        return {ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")}


def write_id_set(ids: Iterable[str], path: str | Path) -> None:
    Path(path).write_text("".join(f"{i}\n" for i in sorted(ids)), encoding="utf-8")


@dataclass(frozen=True)
class BrokerageResult:
    bot_follower_count: int
    exclusive_follower_count: int
    exclusive_fraction: float


def bot_followers(bots: set[str], edges: FollowEdgeSet) -> set[str]:
    return {u for b in bots for u in edges.followers(b)} - bots


def brokerage_reach(bots: Iterable[str], bot_friends: Iterable[str], edges: FollowEdgeSet) -> BrokerageResult:
    """Followers of bots (bots themselves excluded) that follow no bot friend.

    Those accounts only see the relayed content through the bots. The
    fraction is 0.0 when the bots have no followers.
    """
    bots = set(bots)
    if not bots:
        raise GraphError("brokerage needs at least one bot")
    friends = set(bot_friends)
    followers = bot_followers(bots, edges)
    exclusive = sum(1 for u in followers if not any(v in friends for v in edges.following(u)))
    total = len(followers)
    return BrokerageResult(total, exclusive, exclusive / total if total else 0.0)


def friends_of(accounts: Iterable[str], edges: FollowEdgeSet) -> set[str]:
    return {v for u in set(accounts) for v in edges.following(u)}


@dataclass(frozen=True)
class DegreeStats:
    node_count: int
    edge_count: int
    average_degree: float
    undirected_average_degree: float


def degree_stats(edges: FollowEdgeSet, node_subset: Iterable[str] | None = None) -> DegreeStats:
    """Edges with both ends in the subset over subset size.

    ``average_degree`` counts each directed edge once (E/N); the undirected
    convention 2E/N is reported alongside.
    """
    nodes = edges.nodes() if node_subset is None else set(node_subset)
    if not nodes:
        if node_subset is not None:
            raise GraphError("node subset is empty")
        return DegreeStats(0, 0, 0.0, 0.0)
    e = sum(1 for u in nodes for v in edges.following(u) if v in nodes)
    n = len(nodes)
    return DegreeStats(n, e, e / n, 2 * e / n)


def sample_followers(bots: Iterable[str], edges: FollowEdgeSet, n: int, seed: int) -> set[str]:
    """Seeded sample of ``n`` bot followers plus the bots themselves."""
    bots = set(bots)
    pool = sorted(bot_followers(bots, edges))
    chosen = pool if n >= len(pool) else random.Random(seed).sample(pool, n)
    return set(chosen) | bots
