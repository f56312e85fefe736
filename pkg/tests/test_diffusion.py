from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eventbots.diffusion import (
    FollowEdgeSet,
    GraphError,
    brokerage_reach,
    degree_stats,
    friends_of,
    read_id_set,
    sample_followers,
    write_id_set,
)
from oracles import brute_brokerage, random_graph


def test_follower_also_following_friend():
    e = FollowEdgeSet([("F", "B"), ("F", "S"), ("B", "S")])
    assert brokerage_reach({"B"}, {"S"}, e).exclusive_fraction == 0.0


def test_follower_following_only_bot():
    e = FollowEdgeSet([("F", "B"), ("B", "S")])
    r = brokerage_reach({"B"}, {"S"}, e)
    assert (r.bot_follower_count, r.exclusive_follower_count, r.exclusive_fraction) == (1, 1, 1.0)


def test_bots_are_not_their_own_followers():
    e = FollowEdgeSet([("B1", "B2"), ("F", "B1")])
    assert brokerage_reach({"B1", "B2"}, set(), e).bot_follower_count == 1


def test_empty_bot_set_is_fatal():
    with pytest.raises(GraphError):
        brokerage_reach(set(), {"S"}, FollowEdgeSet())


def test_no_followers_gives_zero():
    assert brokerage_reach({"B"}, set(), FollowEdgeSet([("B", "S")])).exclusive_fraction == 0.0


def test_edge_set_invariants():
    with pytest.raises(GraphError):
        FollowEdgeSet([("a", "a")])
    e = FollowEdgeSet([("a", "b"), ("a", "b"), ("b", "a")])
    assert len(e) == 2 and ("a", "b") in e and ("b", "c") not in e


def test_random_graphs_match_brute_force():
    rng = random.Random(200)
    for _ in range(10):
        nodes, edges = random_graph(rng)
        bots = set(rng.sample(nodes, 8))
        e = FollowEdgeSet(edges)
        friends = friends_of(bots, e)
        assert friends == {b for a, b in edges if a in bots}
        r = brokerage_reach(bots, friends, e)
        assert (r.bot_follower_count, r.exclusive_follower_count) == brute_brokerage(bots, friends, edges)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_monotone_in_friend_set(seed):
    rng = random.Random(seed)
    nodes, edges = random_graph(rng, 60, 0.05)
    e = FollowEdgeSet(edges)
    bots = set(rng.sample(nodes, 4))
    friends: set[str] = set()
    last = brokerage_reach(bots, friends, e).exclusive_fraction
    for extra in rng.sample(nodes, 20):
        friends.add(extra)
        now = brokerage_reach(bots, friends, e).exclusive_fraction
        assert now <= last
        last = now


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_relabeling_invariance(seed):
    rng = random.Random(seed)
    nodes, edges = random_graph(rng, 50, 0.06)
    bots = set(rng.sample(nodes, 3))
    friends = set(rng.sample(nodes, 5))
    perm = dict(zip(nodes, rng.sample(nodes, len(nodes))))
    a = brokerage_reach(bots, friends, FollowEdgeSet(edges))
    b = brokerage_reach({perm[x] for x in bots}, {perm[x] for x in friends},
                        FollowEdgeSet([(perm[u], perm[v]) for u, v in edges]))
    assert a == b


def test_degree_examples():
    tri = FollowEdgeSet([("a", "b"), ("b", "c"), ("c", "a")])
    d = degree_stats(tri)
    assert (d.node_count, d.edge_count, d.average_degree, d.undirected_average_degree) == (3, 3, 1.0, 2.0)
    assert degree_stats(FollowEdgeSet()).average_degree == 0.0
    with pytest.raises(GraphError):
        degree_stats(tri, set())


def test_star_of_40000_followers_over_97_bots():
    bots = [f"bot{i:02d}" for i in range(97)]
    edges = FollowEdgeSet((f"f{i:05d}", bots[i % 97]) for i in range(40000))
    d = degree_stats(edges)
    assert (d.node_count, d.edge_count) == (40097, 40000)
    assert d.average_degree == pytest.approx(40000 / 40097)
    assert d.average_degree == pytest.approx(0.9976, abs=1e-4)


@given(st.sets(st.tuples(st.sampled_from("abcdef"), st.sampled_from("abcdef"))).map(
    lambda s: {e for e in s if e[0] != e[1]}), st.sets(st.sampled_from("abcdef"), min_size=1))
def test_degree_edge_count_matches_filter(edges, subset):
    d = degree_stats(FollowEdgeSet(edges), subset)
    assert d.edge_count == sum(1 for u, v in edges if u in subset and v in subset)


def test_friends_of_examples():
    e = FollowEdgeSet([("a", "b"), ("a", "c"), ("d", "a")])
    assert friends_of(set(), e) == set()
    assert friends_of({"a"}, e) == {"b", "c"}


def test_sample_followers_is_seeded():
    e = FollowEdgeSet((f"f{i}", "B") for i in range(100))
    s1 = sample_followers({"B"}, e, 20, seed=3)
    assert s1 == sample_followers({"B"}, e, 20, seed=3)
    assert len(s1) == 21 and "B" in s1
    assert sample_followers({"B"}, e, 500, seed=3) == e.nodes()


def test_files_roundtrip(tmp_path):
    e = FollowEdgeSet([("x", "y"), ("a", "b")])
    e.save(tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == "follower_id,followed_id\na,b\nx,y\n"
    assert list(FollowEdgeSet.load(tmp_path / "e.csv")) == list(e)
    write_id_set({"b", "a"}, tmp_path / "ids.txt")
    assert read_id_set(tmp_path / "ids.txt") == {"a", "b"}
