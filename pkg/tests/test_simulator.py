from __future__ import annotations

import json
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import T0, snap, tweet
from eventbots import simulator as sim
from eventbots.content import hostname, rumor_pickup
from eventbots.corpus import BOT, NONBOT, corpus_stats, load_corpus, load_labels, latest_snapshots
from eventbots.diffusion import FollowEdgeSet, brokerage_reach, friends_of
from eventbots.provenance import (
    AUTOMATION,
    INTERACTIVE,
    SourceCategoryTable,
    description_word_frequency,
    top_sources,
)

DAY = sim.DAY


@pytest.fixture(scope="module")
def mixed():
    cfg = sim.SimConfig(seed=5, n_bots={k: 6 for k in sim.ARCHETYPES}, n_humans=40,
                        rumors=sim.boston_rumors())
    return sim.simulate(cfg)


def _newswire_cfg(rate=1.0, hours=24, **kw):
    feed = tuple(sim.FeedItem(f"nw-{i}", T0 + i * 3600, "newswire", f"Update {i} #BostonMarathon")
                 for i in range(hours))
    bot = sim.BotArchetype("Source", ("newswire",), repost_delay_s=(0, 3600), rate_per_hour=rate)
    return sim.SimConfig(seed=1, bots=(bot,), news_feed=feed, emit_upstream=False,
                         window_end=T0 + DAY, **kw)


def test_empty_config_writes_valid_files(tmp_path):
    res = sim.simulate(sim.SimConfig(seed=0))
    assert res.records == [] and res.labels == {}
    paths = sim.write_simulation(res, tmp_path)
    assert load_corpus(paths["corpus"]).records == []
    assert load_labels(paths["labels"]) == {}
    assert len(FollowEdgeSet.load(paths["edges"])) == 0
    assert json.loads(paths["truth"].read_text())["counts"]["total_tweets"] == 0


def test_source_bot_one_per_hour():
    res = sim.simulate(_newswire_cfg())
    assert len(res.records) == 24
    assert all("@newswire" in r.text for r in res.records)
    assert sim.audit_rate_limits(res.records) == []


def test_paper_rate_stays_under_caps():
    # 41 tweets/hour sustained for three days against a dense feed
    feed = tuple(sim.FeedItem(f"nw-{i}", T0 + i * 60, "newswire", f"Item {i} #BostonMarathon")
                 for i in range(3 * 24 * 60))
    bot = sim.BotArchetype("Source", ("newswire",), repost_delay_s=(0, 3600), rate_per_hour=41.0)
    res = sim.simulate(sim.SimConfig(seed=2, bots=(bot,), news_feed=feed, emit_upstream=False,
                                     window_end=T0 + 3 * DAY))
    ts = sorted(r.created_at for r in res.records)
    assert len(ts) > 2500
    # independent sliding-window audit
    j = 0
    for i, t in enumerate(ts):
        while j < len(ts) and ts[j] < t + DAY:
            j += 1
        assert j - i <= 1000
    assert max(Counter(t // 1800 for t in ts).values()) <= 21
    assert sim.audit_rate_limits(res.records) == []


@pytest.mark.parametrize("rate,rule", [(50.0, "daily_cap"), (1000.0, "daily_cap")])
def test_rates_above_cap_rejected(rate, rule):
    with pytest.raises(sim.SimulationConfigError) as exc:
        sim.simulate(_newswire_cfg(rate=rate))
    assert exc.value.rule == rule and rule in str(exc.value)


def test_semi_hour_rule_named():
    cfg = _newswire_cfg(rate=30.0, policy=sim.RateLimitPolicy(semi_hour_cap=10))
    with pytest.raises(sim.SimulationConfigError) as exc:
        sim.simulate(cfg)
    assert exc.value.rule == "semi_hour_cap"


@pytest.mark.parametrize("change,rule", [
    (dict(window_end=T0 + 3600), "window"),
    (dict(temporal="weird"), "temporal"),
    (dict(source_profile="1999"), "source_profile"),
    (dict(n_bots={"Spam": 1}), "archetype"),
    (dict(human_rate_per_hour=(2.0, 1.0)), "rates"),
    (dict(bot_rate_per_hour=(1.0, 60.0)), "daily_cap"),
])
def test_config_validation(change, rule):
    with pytest.raises(sim.SimulationConfigError) as exc:
        sim.simulate(sim.SimConfig(seed=0, **change))
    assert exc.value.rule == rule


def test_archetype_validation():
    with pytest.raises(sim.SimulationConfigError):
        sim.BotArchetype("Source")
    with pytest.raises(sim.SimulationConfigError):
        sim.BotArchetype("Keyword")
    with pytest.raises(sim.SimulationConfigError):
        sim.BotArchetype("OutsideContent")


def test_same_seed_byte_identical(tmp_path):
    cfg = sim.SimConfig(seed=9, n_bots={k: 2 for k in sim.ARCHETYPES}, n_humans=8, window_end=T0 + 2 * DAY)
    a = sim.write_simulation(sim.simulate(cfg), tmp_path / "a")
    b = sim.write_simulation(sim.simulate(cfg), tmp_path / "b")
    for name in a:
        assert a[name].read_bytes() == b[name].read_bytes(), name
    c = sim.write_simulation(sim.simulate(sim.SimConfig(**{**cfg.__dict__, "seed": 10})), tmp_path / "c")
    assert a["corpus"].read_bytes() != c["corpus"].read_bytes()


def test_pure_profile_sources(mixed):
    table = SourceCategoryTable.default()
    for r in mixed.records:
        label = mixed.labels.get(r.author_id)
        if label == BOT:
            assert table.category(r.source) == AUTOMATION, r.source
        elif label == NONBOT:
            assert table.category(r.source) == INTERACTIVE, r.source


def test_every_bot_tweet_is_attributed(mixed):
    attr = mixed.truth["bot_attribution"]
    feed = {it.item_id: it for it in mixed.feed}
    bots = {u for u, l in mixed.labels.items() if l == BOT}
    accounts = mixed.truth["accounts"]
    for r in mixed.records:
        if r.author_id not in bots:
            continue
        item = feed[attr[r.tweet_id]]
        a = accounts[r.author_id]
        if a["archetype"] == "Source":
            assert item.handle in a["cited_handles"]
        if a["archetype"] == "OutsideContent":
            assert item.external and item.handle in a["feed_url_pool"]
        assert r.created_at >= item.time


def test_truth_counts_match_corpus(mixed, tmp_path):
    paths = sim.write_simulation(mixed, tmp_path)
    loaded = load_corpus(paths["corpus"], mixed.event).records
    assert corpus_stats(loaded) == mixed.truth["counts"]
    assert sum(a["posts"] for a in mixed.truth["accounts"].values()) == len(loaded)


def test_rumor_reaches_humans_first_and_only_carrier_bots(mixed):
    accounts = mixed.truth["accounts"]
    for spec in mixed.rumor_specs():
        truth = mixed.truth["rumors"][spec.name]
        for uid, _ in truth["bot_pickups"]:
            a = accounts[uid]
            assert a["archetype"] == "Source"
            assert set(a["cited_handles"]) & set(truth["carried_by"])
        if not truth["carried_by"]:
            assert truth["bot_pickups"] == []
        res = rumor_pickup(mixed.records, mixed.labels, spec)
        human = res.get(NONBOT)
        assert human is not None and human.latency_s < 4 * 3600
        bot = res.get(BOT)
        if bot is not None:
            assert bot.latency_s >= 600  # carriers repeat it ten minutes after the origin
    assert mixed.truth["rumors"]["sandy_hook"]["bot_pickups"] == []


def test_rumor_without_carrier_never_reaches_bots():
    rumors = tuple(r for r in sim.boston_rumors(carriers=()))
    res = sim.simulate(sim.SimConfig(seed=3, n_bots={k: 5 for k in sim.ARCHETYPES}, n_humans=20, rumors=rumors))
    for spec in res.rumor_specs():
        assert rumor_pickup(res.records, res.labels, spec).get(BOT) is None


def test_source_bots_pick_up_carried_rumor():
    carrier = "CMoleBoston"
    bots = tuple(sim.BotArchetype("Source", (carrier,), repost_delay_s=(10, 6 * 3600), rate_per_hour=4.0)
                 for _ in range(4))
    res = sim.simulate(sim.SimConfig(seed=4, bots=bots, n_humans=10, rumors=sim.boston_rumors((carrier,))))
    picks = res.truth["rumors"]["citizen_911"]["bot_pickups"]
    assert len(picks) >= 1


def test_three_cited_feeds_dominate():
    cited = ("AP", "BostonGlobe", "NBCNews")
    bots = tuple(sim.BotArchetype("Source", cited, rate_per_hour=3.0, style="via") for _ in range(6))
    res = sim.simulate(sim.SimConfig(seed=6, bots=bots, n_bots={"PopularTweet": 2, "Keyword": 2},
                                     n_humans=20, window_end=T0 + 3 * DAY))
    bot_ids = {u for u, l in res.labels.items() if l == BOT}
    top = top_sources(res.records, 3, authors=bot_ids)
    assert {t.mentioned_handle for t in top} == {h.casefold() for h in cited}
    assert res.truth["citations"][top[0].mentioned_handle] == top[0].count


def test_bot_descriptions_mention_news(mixed):
    snaps = latest_snapshots(mixed.records)
    bots = [snaps[u] for u, l in sorted(mixed.labels.items()) if l == BOT and u in snaps]
    top3 = [w for w, _ in description_word_frequency(bots)[:3]]
    assert "news" in top3


def test_shortener_mix_proportions():
    res = sim.simulate(sim.SimConfig(seed=8, n_bots={k: 12 for k in sim.ARCHETYPES}, n_humans=0,
                                     bot_rate_per_hour=(4.0, 8.0)))
    hosts = Counter(hostname(u) for r in res.records if res.labels.get(r.author_id) == BOT for u in r.urls)
    n = sum(hosts.values())
    assert n > 3000
    total = sum(sim.DEFAULT_BOT_SHORTENERS.values())
    for host, w in sim.DEFAULT_BOT_SHORTENERS.items():
        assert hosts[host] / n == pytest.approx(w / total, abs=0.03), host
    assert set(hosts) == set(sim.DEFAULT_BOT_SHORTENERS)
    # every shortened link resolves through the recorded table
    assert all(u in res.resolver_table for r in res.records if res.labels.get(r.author_id) == BOT for u in r.urls)


def test_follower_graph_truth(mixed):
    bots = {u for u, l in mixed.labels.items() if l == BOT}
    r = brokerage_reach(bots, friends_of(bots, mixed.edges), mixed.edges)
    assert r.bot_follower_count == mixed.truth["followers"]["bot_followers"]
    assert r.exclusive_follower_count == mixed.truth["followers"]["exclusive_followers"]


def test_2013_profile_is_more_automated_than_2011():
    def share(profile):
        res = sim.simulate(sim.SimConfig(seed=12, n_bots={k: 5 for k in sim.ARCHETYPES}, n_humans=40,
                                         source_profile=profile, window_end=T0 + 2 * DAY))
        table = SourceCategoryTable.default()
        return sum(table.category(r.source) == AUTOMATION for r in res.records) / len(res.records)

    assert share("2013") > share("2011")


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["baseline", "event"]))
def test_simulator_output_passes_audit(seed, temporal):
    cfg = sim.SimConfig(seed=seed, n_bots={k: 2 for k in sim.ARCHETYPES}, n_humans=6, temporal=temporal,
                        window_end=T0 + 2 * DAY, bot_rate_per_hour=(10.0, 40.0))
    assert sim.audit_rate_limits(sim.simulate(cfg).records) == []


def test_audit_flags_1001_tweets_in_a_day():
    a = snap("spammer")
    recs = [tweet(a, T0 + i * 86, f"post {i} #BostonMarathon") for i in range(1001)]
    v = sim.audit_rate_limits(recs)
    assert [(x.rule, x.account_id, x.count) for x in v] == [("daily_cap", "spammer", 1001)]
    assert sim.audit_rate_limits(recs[:1000]) == []


def test_audit_flags_cross_account_duplicates():
    recs = [tweet("a", T0 + 5, "same words #BostonMarathon"), tweet("b", T0 + 5, "same words #BostonMarathon")]
    v = sim.audit_rate_limits(recs)
    assert [x.rule for x in v] == ["duplicate_content"]
    # same account, retweets, or far apart in time are not duplicates
    assert sim.audit_rate_limits([tweet("a", T0, "x y"), tweet("a", T0 + 1, "x y")]) == []
    assert sim.audit_rate_limits([tweet("a", T0, "RT @z: x"), tweet("b", T0, "RT @z: x")]) == []
    assert sim.audit_rate_limits([tweet("a", T0, "x y"), tweet("b", T0 + 601, "x y")]) == []


def test_audit_flags_semi_hour_bucket():
    recs = [tweet("a", T0 + i, f"n{i}") for i in range(22)]
    assert [x.rule for x in sim.audit_rate_limits(recs)] == ["semi_hour_cap"]


def test_limiter_enforces_both_caps():
    kept, rejected = sim.limit_times(range(T0, T0 + 3 * DAY, 30), sim.RateLimitPolicy())
    assert rejected > 0 and len(kept) + rejected == len(range(T0, T0 + 3 * DAY, 30))
    assert max(Counter(t // 1800 for t in kept).values()) <= 21


def test_config_from_dict_roundtrip():
    raw = {"seed": 4, "n_bots": {"Source": 1}, "window_start": "2013-04-15T00:00:00Z",
           "window_end": "2013-04-17T00:00:00Z", "bot_rate_per_hour": [1, 2],
           "rumors": [{"name": "r", "origin_time": "2013-04-15T12:00:00Z", "origin_handle": "x", "text": "t"}]}
    cfg = sim.config_from_dict(raw)
    assert cfg.window_end - cfg.window_start == 2 * DAY
    assert cfg.rumors[0].origin_time == T0 + 12 * 3600
    with pytest.raises(sim.SimulationConfigError):
        sim.config_from_dict({"seed": 1, "bogus": True})
