"""Labelled synthetic event corpora with ground truth.

Bots follow one of four archetypes and repost items from a scripted news
feed; humans post conversational tweets and occasional retweets. Every
account passes through the same posting limiter, so emitted corpora never
break the daily or semi-hourly caps.

Two knobs shape how hard the resulting classification problem is:

* ``temporal``: ``"baseline"`` gives bots scheduler-like regular timing and
  humans a diurnal pattern; ``"event"`` draws both classes' posting times
  from the same burst process around shared news moments, so timing carries
  no class signal.
* ``source_profile``: ``"pure"`` keeps bots on automation services and
  humans on interactive clients; ``"2013"`` and ``"2011"`` draw clients
  from observed event mixes, where the categories overlap.
"""

from __future__ import annotations

import bisect
import json
import math
import random
from collections import Counter, deque
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import (
    BOT,
    NONBOT,
    AccountSnapshot,
    EventSpec,
    TweetRecord,
    corpus_stats,
    dump_corpus,
    parse_time,
    save_event_spec,
    save_labels,
    sort_records,
)
from .diffusion import FollowEdgeSet
from .content import RumorSpec

ARCHETYPES = ("PopularTweet", "Keyword", "Source", "OutsideContent")
DAY = 86400
SEMI_HOUR = 1800
DUPLICATE_WINDOW_S = 600


class SimulationConfigError(ValueError):
    def __init__(self, rule: str, message: str):
        super().__init__(f"{rule}: {message}")
        self.rule = rule


@dataclass(frozen=True)
class RateLimitPolicy:
    daily_cap: int = 1000
    semi_hour_cap: int = 21  # ceil(1000 / 48)
    follow_daily_cap: int = 1000


# (handle, verified) of accounts the bots draw from
UPSTREAM_ACCOUNTS = (
    ("CMoleBoston", False), ("BostonGlobe", True), ("7News", True), ("cnnbrk", True),
    ("BBCWorld", True), ("fox25news", True), ("Slate", True), ("TIME", True), ("AP", True),
    ("WLTX", True), ("wsvn", True), ("NewsBreaker", False), ("WCVB", True), ("NBCNews", True),
    ("PressHerald", False),
)
EXTERNAL_FEEDS = (
    "www.sigalert.com", "feeds.abcnews.com", "rss.cnn.com", "feedproxy.google.com",
    "news.google.com", "www.woweather.com",
)
TOPIC_WORDS = (
    "explosion", "suspect", "police", "victims", "watertown", "manhunt", "fbi",
    "hospital", "finish line", "investigation",
)
EVENT_TAGS = ("#BostonMarathon", "#prayforboston", "#BostonStrong", "#bostonblasts")
EVENT_KEYWORDS = ("bostonmarathon", "prayforboston", "bostonstrong", "bostonblasts", "boston marathon")

DEFAULT_BOT_SHORTENERS = {"bit.ly": 40, "j.mp": 20, "dlvr.it": 15, "q.gs": 10, "adf.ly": 8, "bo.st": 4, "youtu.be": 3}
DEFAULT_HUMAN_HOSTS = {
    "bit.ly": 30, "twitter.com": 15, "www.youtube.com": 12, "instagram.com": 10,
    "apne.ws": 8, "nbcnews.to": 8, "cnsnews.com": 5, "adf.ly": 4,
}

_BOSTON_BOTS_2013 = {
    "twitterfeed": 11405, "web": 5844, "Tweet Old Post": 4052, "dlvr.it": 3962, "IFTTT": 2049,
    "TweetDeck": 1515, "Crime News Updates": 950, "VenturaCounty_Retweets": 609,
    "WordPress.com": 530, "Strictly Tweetbot for Wordpress": 353, "Bitly Composer": 186,
}
_BOSTON_HUMANS_2013 = {
    "web": 2603, "twitterfeed": 1969, "Tweet Button": 1042, "Twitter for iPhone": 453,
    "TweetDeck": 298, "Botize": 246, "Twitter for iPad": 220, "Echofon": 216, "Twitterfall": 31,
    "Instagram": 12, "HootSuite": 3,
}


def _zipf(names: Sequence[str]) -> dict[str, float]:
    return {n: 1.0 / (i + 1) for i, n in enumerate(names)}


SOURCE_PROFILES: dict[str, dict[str, dict[str, float]]] = {
    "pure": {
        "bot": {k: v for k, v in _BOSTON_BOTS_2013.items() if k not in ("web", "TweetDeck")},
        "human": {
            "web": 2603, "Tweet Button": 1042, "Twitter for iPhone": 453, "Twitter for Android": 400,
            "TweetDeck": 298, "Twitter for iPad": 220, "Echofon": 216, "Mobile Web": 60, "HootSuite": 30,
        },
    },
    "2013": {"bot": _BOSTON_BOTS_2013, "human": _BOSTON_HUMANS_2013},
    "2011": {
        "bot": _zipf(["twitterfeed", "TweetDeck", "web", "Twitter for iPhone", "PageBase.Net", "Echofon",
                      "Tweet Button", "Resonancers", "Mobile Web", "Butting In"]),
        "human": _zipf(["web", "Twitter for iPhone", "Twitter for BlackBerry", "Twitter for Android",
                        "Tweet Button", "Visibli", "Twitter for iPad", "UberSocial for BlackBerry",
                        "HootSuite", "Mobile Web"]),
    },
}

BOT_DESCRIPTION_WORDS = (
    "breaking news", "latest news", "world news", "news updates", "retweet", "headlines",
    "alerts", "24/7", "local news", "automated", "latest", "breaking",
)
HUMAN_DESCRIPTION_WORDS = (
    "love", "music", "coffee", "runner", "mom", "student", "sports", "life", "dad", "teacher",
    "boston", "fan", "travel", "photography", "writer", "nurse", "husband", "wife", "dog lover",
)
HUMAN_PHRASES = (
    "thoughts with everyone in boston", "cannot believe what happened today", "stay safe everyone",
    "so sad watching the news", "praying for the runners and families", "heartbreaking scenes",
    "hope they catch whoever did this", "my cousin ran today and she is ok", "unreal day",
    "grateful for the first responders", "glued to the tv right now", "boston is strong",
    "does anyone know if the roads are open", "sending love from far away", "what a week",
)


@dataclass(frozen=True)
class FeedItem:
    item_id: str
    time: int
    handle: str
    text: str
    url: str | None = None
    popular: bool = False
    external: bool = False
    rumor: str | None = None
    retweet_of: str | None = None


@dataclass(frozen=True)
class BotArchetype:
    kind: str
    cited_handles: tuple[str, ...] = ()
    keyword_list: tuple[str, ...] = ()
    feed_url_pool: tuple[str, ...] = ()
    repost_delay_s: tuple[int, int] = (30, 6 * 3600)
    client_source: str = "twitterfeed"
    rate_per_hour: float = 2.0
    style: str = "rt"  # rt | via | copy

    def __post_init__(self):
        if self.kind not in ARCHETYPES:
            raise SimulationConfigError("archetype", f"unknown bot kind {self.kind!r}")
        if self.kind == "Source" and not self.cited_handles:
            raise SimulationConfigError("archetype", "Source bots need cited_handles")
        if self.kind == "Keyword" and not self.keyword_list:
            raise SimulationConfigError("archetype", "Keyword bots need keyword_list")
        if self.kind == "OutsideContent" and not self.feed_url_pool:
            raise SimulationConfigError("archetype", "OutsideContent bots need feed_url_pool")
        if self.style not in ("rt", "via", "copy"):
            raise SimulationConfigError("archetype", f"unknown style {self.style!r}")
        lo, hi = self.repost_delay_s
        if lo < 0 or hi < lo:
            raise SimulationConfigError("archetype", "repost_delay_s must be 0 <= min <= max")

    def accepts(self, item: FeedItem) -> bool:
        if self.kind == "Source":
            return not item.external and item.handle in self.cited_handles
        if self.kind == "OutsideContent":
            return item.external and item.handle in self.feed_url_pool
        if item.external or item.rumor:
            return False
        if self.kind == "PopularTweet":
            return item.popular
        text = item.text.casefold()
        return any(k.casefold() in text for k in self.keyword_list)


@dataclass(frozen=True)
class RumorInjection:
    name: str
    origin_time: int
    origin_handle: str
    text: str
    carried_by: tuple[str, ...] = ()
    carrier_delay_s: int = 600
    human_share: float = 0.2
    human_delay_s: float = 1800.0


@dataclass(frozen=True)
class SimConfig:
    seed: int
    n_bots: Mapping[str, int] = field(default_factory=dict)
    n_humans: int = 0
    window_start: int = 1365984000  # 2013-04-15T00:00:00Z
    window_end: int = 1365984000 + 7 * DAY  # 2013-04-22T00:00:00Z
    event_name: str = "Simulated Boston Marathon"
    keywords: tuple[str, ...] = EVENT_KEYWORDS
    bots: tuple[BotArchetype, ...] = ()
    news_feed: tuple[FeedItem, ...] | None = None
    rumors: tuple[RumorInjection, ...] = ()
    temporal: str = "baseline"
    source_profile: str = "pure"
    client_loyalty: float = 0.5
    bot_rate_per_hour: tuple[float, float] = (1.0, 6.0)
    human_rate_per_hour: tuple[float, float] = (0.3, 2.0)
    upstream_rate_per_hour: tuple[float, float] = (3.0, 8.0)
    external_rate_per_hour: tuple[float, float] = (4.0, 8.0)
    emit_upstream: bool = True
    followers_per_bot: int = 20
    follow_friend_prob: float = 0.9
    bot_shorteners: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_BOT_SHORTENERS))
    human_hosts: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_HUMAN_HOSTS))
    policy: RateLimitPolicy = field(default_factory=RateLimitPolicy)
    bot_profile: AccountProfile | None = None
    human_profile: AccountProfile | None = None

    @property
    def event(self) -> EventSpec:
        return EventSpec(self.event_name, self.keywords, self.window_start, self.window_end)


def _check_rate(rate: float, policy: RateLimitPolicy, who: str) -> None:
    if rate * 24 > policy.daily_cap:
        raise SimulationConfigError(
            "daily_cap", f"{who} rate {rate}/h exceeds {policy.daily_cap} tweets per day")
    if rate / 2 > policy.semi_hour_cap:
        raise SimulationConfigError(
            "semi_hour_cap", f"{who} rate {rate}/h exceeds {policy.semi_hour_cap} tweets per 30 minutes")


def validate_config(cfg: SimConfig) -> None:
    if not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool):
        raise SimulationConfigError("seed", "an integer seed is required")
    if cfg.window_end - cfg.window_start < DAY:
        raise SimulationConfigError("window", "event window must span at least one day")
    for kind, n in cfg.n_bots.items():
        if kind not in ARCHETYPES:
            raise SimulationConfigError("archetype", f"unknown bot kind {kind!r}")
        if n < 0:
            raise SimulationConfigError("counts", "bot counts must be non-negative")
    if cfg.n_humans < 0:
        raise SimulationConfigError("counts", "n_humans must be non-negative")
    if cfg.temporal not in ("baseline", "event"):
        raise SimulationConfigError("temporal", f"unknown temporal mode {cfg.temporal!r}")
    if cfg.source_profile not in SOURCE_PROFILES:
        raise SimulationConfigError("source_profile", f"unknown source profile {cfg.source_profile!r}")
    for name in ("bot_rate_per_hour", "human_rate_per_hour", "upstream_rate_per_hour", "external_rate_per_hour"):
        lo, hi = getattr(cfg, name)
        if not 0 < lo <= hi:
            raise SimulationConfigError("rates", f"{name} must satisfy 0 < low <= high")
        _check_rate(hi, cfg.policy, name)
    for b in cfg.bots:
        _check_rate(b.rate_per_hour, cfg.policy, f"{b.kind} bot")
    for r in cfg.rumors:
        if not cfg.window_start <= r.origin_time <= cfg.window_end:
            raise SimulationConfigError("rumor", f"rumor {r.name!r} starts outside the window")


# --- posting limiter ----------------------------------------------------------

class PostingLimiter:
    """Admits posts for one account while respecting the semi-hourly buckets
    and a sliding 24-hour cap. Times must be offered in ascending order."""

    def __init__(self, policy: RateLimitPolicy):
        self.policy = policy
        self._day: deque[int] = deque()
        self._buckets: Counter = Counter()
        self.rejected = 0

    def admit(self, t: int) -> bool:
        while self._day and self._day[0] <= t - DAY:
            self._day.popleft()
        bucket = t // SEMI_HOUR
        if len(self._day) >= self.policy.daily_cap or self._buckets[bucket] >= self.policy.semi_hour_cap:
            self.rejected += 1
            return False
        self._day.append(t)
        self._buckets[bucket] += 1
        return True


def limit_times(times: Iterable[int], policy: RateLimitPolicy) -> tuple[list[int], int]:
    lim = PostingLimiter(policy)
    kept = [t for t in sorted(times) if lim.admit(t)]
    return kept, lim.rejected


# --- timing models -------------------------------------------------------------

# UTC hour weights; the trough sits in the small hours of US Eastern time
HUMAN_DIURNAL = (
    5, 4, 3, 2, 1.5, 1, 0.7, 0.6, 0.7, 1, 1.5, 2.5, 3.5, 4.5, 5, 5, 5, 5.5, 5.5, 6, 6, 6.5, 6.5, 6,
)


def _n_posts(rate: float, span: int, rng: random.Random) -> int:
    return max(1, int(round(rate * span / 3600.0 * rng.uniform(0.85, 1.15))))


def _regular_times(rate: float, start: int, end: int, rng: random.Random) -> list[int]:
    period = 3600.0 / rate
    phase = rng.random() * period
    out = []
    k = 0
    while True:
        t = start + phase + k * period + rng.uniform(-0.03, 0.03) * period
        if t > end:
            break
        if t >= start:
            out.append(int(t))
        k += 1
    return out


def _diurnal_times(n: int, start: int, end: int, rng: random.Random) -> list[int]:
    """Sessions placed by hour-of-day weight, each a short burst of posts."""
    days = max(1, math.ceil((end - start) / DAY))
    out: list[int] = []
    while len(out) < n:
        day = rng.randrange(days)
        hour = rng.choices(range(24), weights=HUMAN_DIURNAL)[0]
        t = (start // DAY + day) * DAY + hour * 3600 + rng.randrange(3600)
        for _ in range(min(n - len(out), 1 + int(rng.expovariate(1 / 2.0)))):
            if start <= t <= end:
                out.append(t)
            t += int(rng.expovariate(1 / 300.0)) + 1
    return sorted(out)


def _event_times(n: int, start: int, end: int, centers: Sequence[tuple[int, float]], rng: random.Random) -> list[int]:
    """Posts clustered after shared news moments, plus background chatter."""
    width = rng.uniform(900, 6 * 3600)
    background = rng.uniform(0.1, 0.4)
    moments = [c for c, _ in centers]
    weights = [w for _, w in centers]
    out = []
    while len(out) < n:
        if rng.random() < background:
            t = rng.uniform(start, end)
        else:
            t = rng.choices(moments, weights=weights)[0] + rng.expovariate(1 / width)
        if start <= t <= end:
            out.append(int(t))
    return sorted(out)


def _news_moments(cfg: SimConfig) -> list[tuple[int, float]]:
    rng = random.Random(f"{cfg.seed}:moments")
    span = cfg.window_end - cfg.window_start
    k = max(4, span // (8 * 3600))
    return sorted(
        (cfg.window_start + int(rng.uniform(0, 0.95) * span), rng.uniform(0.5, 3.0)) for _ in range(k)
    )


# --- generation ------------------------------------------------------------------

@dataclass
class _Draft:
    author: str
    time: int
    text: str
    source: str
    urls: tuple[str, ...] = ()
    retweet_of: str | None = None
    item_id: str | None = None
    seq: int = 0


@dataclass
class _Account:
    user_id: str
    handle: str
    role: str  # bot | human | upstream | origin
    snapshot: AccountSnapshot | None = None
    archetype: BotArchetype | None = None
    clients: tuple[str, ...] = ()
    client_weights: tuple[float, ...] = ()
    rate: float = 0.0
    url_prob: float = 0.0
    signature: str = ""


@dataclass
class SimulationResult:
    config: SimConfig
    records: list[TweetRecord]
    edges: FollowEdgeSet
    labels: dict[str, str]
    truth: dict
    feed: list[FeedItem]
    resolver_table: dict[str, str]

    @property
    def event(self) -> EventSpec:
        return self.config.event

    def rumor_specs(self) -> list[RumorSpec]:
        return [RumorSpec(r.name, r.origin_time, (r.text[:60],), r.origin_handle) for r in self.config.rumors]


def _weighted(rng: random.Random, mapping: Mapping[str, float]) -> str:
    keys = sorted(mapping)
    return rng.choices(keys, weights=[mapping[k] for k in keys])[0]


def _short_url(rng: random.Random, host: str) -> str:
    code = "".join(rng.choice("abcdefghijkmnopqrstuvwxyzABCDEFGHJKLMNPQRSTUVWXYZ23456789") for _ in range(7))
    return f"http://{host}/{code}"


def _headline(rng: random.Random) -> str:
    w1, w2 = rng.sample(TOPIC_WORDS, 2)
    templates = (
        "Update: {a} near the {b} as officials brief reporters",
        "Officials: {a} and {b} latest",
        "Live: new details on {a}, {b}",
        "{a} update from Boston; {b} developing",
        "Report: {a} confirmed, {b} ongoing",
    )
    return rng.choice(templates).format(a=w1, b=w2).capitalize()


def generate_news_feed(cfg: SimConfig) -> list[FeedItem]:
    """Bursty upstream posting plus external web-feed items, rumor carriers
    included. Deterministic in ``cfg.seed``."""
    moments = _news_moments(cfg)
    items: list[FeedItem] = []
    span = cfg.window_end - cfg.window_start
    channels = [(h, False) for h, _ in UPSTREAM_ACCOUNTS] + [(f, True) for f in EXTERNAL_FEEDS]
    for handle, external in channels:
        rng = random.Random(f"{cfg.seed}:feed:{handle}")
        lo, hi = cfg.external_rate_per_hour if external else cfg.upstream_rate_per_hour
        rate = rng.uniform(lo, hi)
        times = _event_times(_n_posts(rate, span, rng), cfg.window_start, cfg.window_end, moments, rng)
        times, _ = limit_times(times, cfg.policy)
        for i, t in enumerate(times):
            site = handle if external else f"www.{handle.lower()}.com"
            tag = rng.choice(EVENT_TAGS)
            items.append(FeedItem(
                item_id=f"{handle}-{i}",
                time=t,
                handle=handle,
                text=f"{_headline(rng)} {tag}",
                url=f"http://{site}/story/{i}" if external or rng.random() < 0.9 else None,
                popular=rng.random() < 0.25,
                external=external,
            ))
    for r in cfg.rumors:
        for carrier in r.carried_by:
            items.append(FeedItem(
                item_id=f"{carrier}-rumor-{r.name}",
                time=r.origin_time + r.carrier_delay_s,
                handle=carrier,
                text=r.text,
                rumor=r.name,
                retweet_of=r.origin_handle,
            ))
    return sorted(items, key=lambda it: (it.time, it.item_id))


class _Ids:
    def __init__(self, seed: int):
        self.rng = random.Random(f"{seed}:ids")
        self.used: set[str] = set()

    def next(self) -> str:
        while True:
            uid = str(self.rng.randrange(10_000_000, 2_000_000_000))
            if uid not in self.used:
                self.used.add(uid)
                return uid


def _bot_archetypes(cfg: SimConfig) -> list[BotArchetype]:
    upstream = [h for h, _ in UPSTREAM_ACCOUNTS]
    profile = SOURCE_PROFILES[cfg.source_profile]["bot"]
    out = list(cfg.bots)
    for kind in ARCHETYPES:
        for i in range(cfg.n_bots.get(kind, 0)):
            rng = random.Random(f"{cfg.seed}:bot:{kind}:{i}")
            lo, hi = cfg.bot_rate_per_hour
            params = dict(
                kind=kind,
                client_source=_weighted(rng, profile),
                rate_per_hour=math.exp(rng.uniform(math.log(lo), math.log(hi))),
                repost_delay_s=(rng.randrange(10, 120), rng.randrange(3 * 3600, 12 * 3600)),
            )
            if kind == "Source":
                params["cited_handles"] = tuple(sorted(rng.sample(upstream, rng.randint(2, 4))))
                params["style"] = rng.choice(("rt", "via"))
            elif kind == "Keyword":
                params["keyword_list"] = tuple(sorted(rng.sample(TOPIC_WORDS, rng.randint(1, 3))))
                params["style"] = rng.choice(("rt", "copy"))
            elif kind == "OutsideContent":
                params["feed_url_pool"] = tuple(sorted(rng.sample(EXTERNAL_FEEDS, rng.randint(1, 2))))
                params["style"] = "copy"
            out.append(BotArchetype(**params))
    return out


@dataclass(frozen=True)
class AccountProfile:
    """Log-normal profile counts and age, plus the per-account URL habit."""

    followers_median: float
    followers_sigma: float
    friends_median: float
    friends_sigma: float
    age_days_median: float
    age_days_sigma: float
    url_mean: float
    url_sd: float
    statuses_median: float = 5000.0
    descriptions: tuple[str, ...] = HUMAN_DESCRIPTION_WORDS


BOT_PROFILE = AccountProfile(100, 0.75, 450, 0.6, 280, 0.7, 0.83, 0.05, 20000, BOT_DESCRIPTION_WORDS)
HUMAN_PROFILE = AccountProfile(420, 0.75, 300, 0.6, 1250, 0.6, 0.66, 0.07, 5000, HUMAN_DESCRIPTION_WORDS)
UPSTREAM_PROFILE = AccountProfile(500000, 1.0, 800, 1.0, 1800, 0.3, 0.9, 0.0, 50000, ("news and updates",))


def _lognormal(rng: random.Random, median: float, sigma: float) -> float:
    return math.exp(rng.gauss(math.log(median), sigma))


def _snapshot(acc_id: str, handle: str, profile: AccountProfile, cfg: SimConfig, rng: random.Random,
              verified: bool = False) -> AccountSnapshot:
    age_days = _lognormal(rng, profile.age_days_median, profile.age_days_sigma)
    words = rng.sample(profile.descriptions, min(3, len(profile.descriptions)))
    return AccountSnapshot(
        user_id=acc_id,
        handle=handle,
        followers_count=int(_lognormal(rng, profile.followers_median, profile.followers_sigma)),
        friends_count=int(_lognormal(rng, profile.friends_median, profile.friends_sigma)),
        statuses_count=int(_lognormal(rng, profile.statuses_median, 1.0)),
        created_at=max(1, cfg.window_start - int(age_days * DAY)),
        description=" ".join(words).capitalize(),
        verified=verified,
    )


def _url_habit(profile: AccountProfile, rng: random.Random) -> float:
    return min(0.99, max(0.02, rng.gauss(profile.url_mean, profile.url_sd)))


def _account_clients(cfg: SimConfig, role: str, primary: str | None, rng: random.Random):
    """Each post uses the primary client with probability ``client_loyalty``
    and otherwise a fresh draw from the class mix."""
    profile = SOURCE_PROFILES[cfg.source_profile][role]
    primary = primary or _weighted(rng, profile)
    names = sorted(profile)
    total = sum(profile.values())
    rest = 1.0 - cfg.client_loyalty
    return (primary, *names), (cfg.client_loyalty, *(rest * profile[n] / total for n in names))


def _with_tag(text: str, spec: EventSpec, rng: random.Random) -> str:
    return text if spec.matches(text) else f"{text} {rng.choice(EVENT_TAGS)}"


def simulate(cfg: SimConfig) -> SimulationResult:
    """Generate a labelled corpus, follower edges and a ground-truth record."""
    validate_config(cfg)
    spec = cfg.event
    feed = list(cfg.news_feed) if cfg.news_feed is not None else generate_news_feed(cfg)
    feed.sort(key=lambda it: (it.time, it.item_id))
    ids = _Ids(cfg.seed)
    moments = _news_moments(cfg)
    span = cfg.window_end - cfg.window_start
    verified = dict(UPSTREAM_ACCOUNTS)

    accounts: dict[str, _Account] = {}
    by_handle: dict[str, _Account] = {}

    def add(acc: _Account) -> _Account:
        accounts[acc.user_id] = acc
        by_handle[acc.handle] = acc
        return acc

    upstream_handles = sorted({it.handle for it in feed if not it.external} | {r.origin_handle for r in cfg.rumors})
    for h in upstream_handles:
        rng = random.Random(f"{cfg.seed}:upstream:{h}")
        uid = ids.next()
        role = "origin" if any(r.origin_handle == h for r in cfg.rumors) and h not in verified else "upstream"
        add(_Account(uid, h, role, _snapshot(uid, h, UPSTREAM_PROFILE, cfg, rng, verified.get(h, False)),
                     clients=("TweetDeck",)))

    bots = _bot_archetypes(cfg)
    for i, arch in enumerate(bots):
        rng = random.Random(f"{cfg.seed}:botacct:{i}")
        uid = ids.next()
        handle = f"{rng.choice(('Boston', 'News', 'Breaking', 'Live', 'Daily', 'World'))}" \
                 f"{rng.choice(('Wire', 'Feed', 'Alerts', 'Now', 'Updates', 'Hub'))}{i}"
        clients, weights = _account_clients(cfg, "bot", arch.client_source, rng)
        profile = cfg.bot_profile or BOT_PROFILE
        add(_Account(uid, handle, "bot", _snapshot(uid, handle, profile, cfg, rng), arch, clients, weights,
                     rate=arch.rate_per_hour, url_prob=_url_habit(profile, rng),
                     signature=f"#{handle}"))

    for i in range(cfg.n_humans):
        rng = random.Random(f"{cfg.seed}:human:{i}")
        uid = ids.next()
        handle = f"{rng.choice(('jess', 'mike', 'sam', 'alex', 'kate', 'chris', 'pat', 'lee'))}_{i}"
        clients, weights = _account_clients(cfg, "human", None, rng)
        lo, hi = cfg.human_rate_per_hour
        profile = cfg.human_profile or HUMAN_PROFILE
        add(_Account(uid, handle, "human", _snapshot(uid, handle, profile, cfg, rng), None, clients, weights,
                     rate=math.exp(rng.uniform(math.log(lo), math.log(hi))),
                     url_prob=_url_habit(profile, rng)))

    drafts: list[_Draft] = []
    rejected: Counter = Counter()
    resolver_table: dict[str, str] = {}
    attribution: dict[int, str] = {}

    # upstream accounts post their own feed items (only when someone listens)
    if cfg.emit_upstream and (bots or cfg.n_humans):
        for h in upstream_handles:
            acc = by_handle[h]
            own = [it for it in feed if not it.external and it.handle == h]
            lim = PostingLimiter(cfg.policy)
            for it in own:
                if not lim.admit(it.time):
                    continue
                if it.retweet_of:
                    drafts.append(_Draft(acc.user_id, it.time, f"RT @{it.retweet_of}: {it.text}", "TweetDeck",
                                         retweet_of=it.retweet_of, item_id=it.item_id))
                else:
                    drafts.append(_Draft(acc.user_id, it.time, it.text, "TweetDeck",
                                         (it.url,) if it.url else (), item_id=it.item_id))
            rejected[acc.user_id] += lim.rejected
        for r in cfg.rumors:
            acc = by_handle[r.origin_handle]
            if acc.role == "origin":
                drafts.append(_Draft(acc.user_id, r.origin_time, r.text, "web", item_id=f"rumor-{r.name}"))

    # bots work through their backlog, oldest first, within their repost delay
    for uid in sorted(accounts, key=lambda u: accounts[u].handle):
        acc = accounts[uid]
        if acc.role != "bot":
            continue
        arch = acc.archetype
        rng = random.Random(f"{cfg.seed}:botposts:{acc.handle}")
        if cfg.temporal == "event":
            slots = _event_times(_n_posts(acc.rate, span, rng), cfg.window_start, cfg.window_end, moments, rng)
        else:
            slots = _regular_times(acc.rate, cfg.window_start, cfg.window_end, rng)
        slots, n_rej = limit_times(slots, cfg.policy)
        rejected[uid] += n_rej
        pool = [it for it in feed if arch.accepts(it)]
        pool_times = [it.time for it in pool]
        cursor = 0
        dmin, dmax = arch.repost_delay_s
        for t in slots:
            # oldest unposted item still inside the delay window; older ones expire
            j = max(cursor, bisect.bisect_left(pool_times, t - dmax))
            if j >= len(pool) or pool_times[j] > t - dmin:
                continue
            cursor = j + 1
            it = pool[j]
            client = rng.choices(acc.clients, weights=acc.client_weights)[0]
            urls: tuple[str, ...] = ()
            if it.url and rng.random() < acc.url_prob:
                short = _short_url(rng, _weighted(rng, cfg.bot_shorteners))
                resolver_table[short] = it.url
                urls = (short,)
            url_txt = f" {urls[0]}" if urls else ""
            style = arch.style if not it.external else "copy"
            if style == "rt":
                author = it.retweet_of or it.handle
                d = _Draft(uid, t, f"RT @{author}: {it.text}{url_txt}", client, urls, retweet_of=author)
            elif style == "via":
                d = _Draft(uid, t, f"{it.text}{url_txt} via @{it.retweet_of or it.handle} {acc.signature}",
                           client, urls)
            else:
                d = _Draft(uid, t, f"{it.text}{url_txt} {acc.signature}", client, urls)
            d.item_id = it.item_id
            drafts.append(d)

    # humans: own chatter, news retweets, rumor pickups
    human_ids = sorted(u for u, a in accounts.items() if a.role == "human")
    news = [it for it in feed if not it.external and not it.rumor]
    news_times = [it.time for it in news]
    for uid in human_ids:
        acc = accounts[uid]
        rng = random.Random(f"{cfg.seed}:humanposts:{acc.handle}")
        n = _n_posts(acc.rate, span, rng)
        if cfg.temporal == "event":
            times = _event_times(n, cfg.window_start, cfg.window_end, moments, rng)
        else:
            times = _diurnal_times(n, cfg.window_start, cfg.window_end, rng)
        plan = [(t, "own", None) for t in times]
        for r in cfg.rumors:
            if rng.random() < r.human_share:
                t = int(r.origin_time + rng.expovariate(1 / r.human_delay_s))
                if t <= cfg.window_end:
                    plan.append((t, "rumor", r))
        plan.sort(key=lambda p: (p[0], p[1]))
        lim = PostingLimiter(cfg.policy)
        for t, kind, r in plan:
            if not lim.admit(t):
                continue
            client = rng.choices(acc.clients, weights=acc.client_weights)[0]
            if kind == "rumor":
                drafts.append(_Draft(uid, t, f"RT @{r.origin_handle}: {r.text}", client,
                                     retweet_of=r.origin_handle, item_id=f"rumor-{r.name}"))
                continue
            urls = ()
            if rng.random() < acc.url_prob:
                urls = (_short_url(rng, _weighted(rng, cfg.human_hosts)),)
            url_txt = f" {urls[0]}" if urls else ""
            j = bisect.bisect_right(news_times, t) - 1
            if j >= 0 and rng.random() < 0.25:
                it = news[j]
                drafts.append(_Draft(uid, t, f"RT @{it.handle}: {it.text}{url_txt}", client, urls,
                                     retweet_of=it.handle))
                continue
            text = rng.choice(HUMAN_PHRASES)
            if len(human_ids) > 1 and rng.random() < 0.1:
                other = accounts[rng.choice(human_ids)]
                if other.user_id != uid:
                    text = f"@{other.handle} {text}"
            drafts.append(_Draft(uid, t, _with_tag(text + url_txt, spec, rng), client, urls))
        rejected[uid] += lim.rejected

    records, attribution = _finalize(drafts, accounts, spec)
    labels = {u: (BOT if a.role == "bot" else NONBOT) for u, a in accounts.items() if a.role in ("bot", "human")}
    edges, follower_truth = _follow_graph(cfg, accounts, by_handle)
    truth = _truth(cfg, records, accounts, attribution, rejected, follower_truth, feed)
    return SimulationResult(cfg, records, edges, labels, truth, feed, resolver_table)


def _finalize(drafts: list[_Draft], accounts: Mapping[str, _Account], spec: EventSpec):
    """Order drafts, make copied (non-retweet) texts unique across accounts
    within the duplicate window, and assign tweet ids."""
    for i, d in enumerate(drafts):
        d.seq = i
    drafts.sort(key=lambda d: (d.time, d.author, d.seq))
    last_seen: dict[str, tuple[int, str]] = {}
    for d in drafts:
        if d.retweet_of or d.text.startswith("RT @"):
            continue
        base, n = d.text, 1
        while d.text in last_seen and last_seen[d.text][1] != d.author and d.time - last_seen[d.text][0] <= DUPLICATE_WINDOW_S:
            n += 1
            d.text = f"{base} ({n})"
        last_seen[d.text] = (d.time, d.author)
    records = []
    attribution = {}
    for i, d in enumerate(drafts):
        tid = str(323000000000000000 + i)
        acc = accounts[d.author]
        records.append(TweetRecord(
            tweet_id=tid,
            author_id=d.author,
            created_at=d.time,
            text=d.text,
            source=d.source,
            retweet_of_author=d.retweet_of,
            urls=d.urls,
            author=acc.snapshot,
        ))
        if d.item_id:
            attribution[tid] = d.item_id
    return sort_records(records), attribution


def _follow_graph(cfg: SimConfig, accounts: Mapping[str, _Account], by_handle: Mapping[str, _Account]):
    rng = random.Random(f"{cfg.seed}:graph")
    upstream = sorted(a.user_id for a in accounts.values() if a.role == "upstream")
    edges = set()
    friends_of_bot: dict[str, list[str]] = {}
    for uid in sorted(accounts):
        acc = accounts[uid]
        if acc.role == "bot":
            arch = acc.archetype
            if arch.kind == "Source":
                fr = [by_handle[h].user_id for h in arch.cited_handles if h in by_handle]
            else:
                fr = rng.sample(upstream, min(len(upstream), rng.randint(1, 3)))
            friends_of_bot[uid] = sorted(set(fr) - {uid})
            edges.update((uid, f) for f in friends_of_bot[uid])
        elif acc.role == "human" and upstream:
            edges.update((uid, f) for f in rng.sample(upstream, min(len(upstream), rng.randint(1, 3))))
    bot_ids = sorted(friends_of_bot)
    exclusive = 0
    n_followers = cfg.followers_per_bot * len(bot_ids)
    for i in range(n_followers):
        fid = f"f{i:07d}"
        followed = rng.sample(bot_ids, 2 if rng.random() < 0.05 and len(bot_ids) > 1 else 1)
        edges.update((fid, b) for b in followed)
        if rng.random() < cfg.follow_friend_prob:
            pool = sorted({f for b in followed for f in friends_of_bot[b]})
            if pool:
                edges.update((fid, f) for f in rng.sample(pool, min(len(pool), rng.randint(1, 2))))
                continue
        exclusive += 1
    for u, v in edges:
        if u == v:
            raise AssertionError("self-loop generated")
    truth = {"bot_followers": n_followers, "exclusive_followers": exclusive}
    return FollowEdgeSet(edges), truth


def _truth(cfg, records, accounts, attribution, rejected, follower_truth, feed) -> dict:
    from .provenance import extract_mentions

    feed_by_id = {it.item_id: it for it in feed}
    per_account = {}
    citations: Counter = Counter()
    posts = Counter(r.author_id for r in records)
    for r in records:
        if accounts[r.author_id].role == "bot":
            citations.update(extract_mentions(r.text))
    for uid in sorted(accounts):
        a = accounts[uid]
        entry = {"handle": a.handle, "role": a.role, "posts": posts[uid], "rate_limited": rejected[uid]}
        if a.role == "bot":
            entry.update(
                archetype=a.archetype.kind,
                client_source=a.archetype.client_source,
                cited_handles=list(a.archetype.cited_handles),
                keyword_list=list(a.archetype.keyword_list),
                feed_url_pool=list(a.archetype.feed_url_pool),
            )
        if a.role in ("upstream", "origin"):
            entry["verified"] = a.snapshot.verified
        per_account[uid] = entry
    rumors = {}
    for rz in cfg.rumors:
        rid_items = {f"rumor-{rz.name}"} | {it.item_id for it in feed if it.rumor == rz.name}
        picks = {"bot": [], "human": []}
        for r in records:
            role = accounts[r.author_id].role
            if role in picks and attribution.get(r.tweet_id) in rid_items:
                picks[role].append([r.author_id, r.created_at])
        rumors[rz.name] = {
            "origin_time": rz.origin_time,
            "origin_handle": rz.origin_handle,
            "carried_by": list(rz.carried_by),
            "bot_pickups": picks["bot"],
            "human_pickups": picks["human"],
        }
    author_of = {r.tweet_id: r.author_id for r in records}
    bot_attr = {tid: item for tid, item in attribution.items() if accounts[author_of[tid]].role == "bot"}
    return {
        "seed": cfg.seed,
        "temporal": cfg.temporal,
        "source_profile": cfg.source_profile,
        "counts": corpus_stats(records),
        "accounts": per_account,
        "bot_attribution": dict(sorted(bot_attr.items())),
        "feed_items": {i: {"handle": feed_by_id[i].handle, "time": feed_by_id[i].time}
                       for i in sorted(set(bot_attr.values())) if i in feed_by_id},
        "citations": dict(sorted(citations.items())),
        "rumors": rumors,
        "followers": follower_truth,
        "bot_shorteners": dict(sorted(cfg.bot_shorteners.items())),
        "policy": asdict(cfg.policy),
    }


def write_simulation(result: SimulationResult, out_dir: str | Path) -> dict[str, Path]:
    """Write corpus, edges, labels, truth sidecar, event spec, rumor specs and
    the offline resolver table. Returns the paths by name."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "corpus": out / "corpus.jsonl",
        "edges": out / "edges.csv",
        "labels": out / "labels.csv",
        "truth": out / "truth.json",
        "event": out / "event.json",
        "rumors": out / "rumors.json",
        "resolver": out / "resolver.tsv",
    }
    dump_corpus(result.records, paths["corpus"])
    result.edges.save(paths["edges"])
    save_labels(result.labels, paths["labels"])
    paths["truth"].write_text(json.dumps(result.truth, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    save_event_spec(result.event, paths["event"])
    rumors = [
        {"name": r.name, "origin_time": r.origin_time, "matchers": list(r.matchers), "origin_handle": r.origin_handle}
        for r in result.rumor_specs()
    ]
    paths["rumors"].write_text(json.dumps(rumors, indent=1) + "\n", encoding="utf-8")
    with open(paths["resolver"], "w", encoding="utf-8", newline="\n") as fh:
        for short in sorted(result.resolver_table):
            fh.write(f"{short}\t{result.resolver_table[short]}\n")
    return paths


def config_from_dict(raw: Mapping) -> SimConfig:
    """Build a SimConfig from decoded JSON; times may be ISO strings."""
    raw = dict(raw)
    for key in ("window_start", "window_end"):
        if key in raw:
            raw[key] = parse_time(raw[key])
    for key in ("bot_rate_per_hour", "human_rate_per_hour", "upstream_rate_per_hour",
                "external_rate_per_hour", "keywords"):
        if key in raw:
            raw[key] = tuple(raw[key])
    if "policy" in raw:
        raw["policy"] = RateLimitPolicy(**raw["policy"])
    if "bots" in raw:
        raw["bots"] = tuple(
            BotArchetype(**{k: tuple(v) if isinstance(v, list) else v for k, v in b.items()}) for b in raw["bots"]
        )
    if "rumors" in raw:
        raw["rumors"] = tuple(
            RumorInjection(**{**r, "origin_time": parse_time(r["origin_time"]),
                              "carried_by": tuple(r.get("carried_by", ()))})
            for r in raw["rumors"]
        )
    if "news_feed" in raw and raw["news_feed"] is not None:
        raw["news_feed"] = tuple(FeedItem(**{**it, "time": parse_time(it["time"])}) for it in raw["news_feed"])
    try:
        return SimConfig(**raw)
    except TypeError as exc:
        raise SimulationConfigError("config", str(exc)) from exc


def boston_rumors(carriers: Sequence[str] = ("CMoleBoston",)) -> tuple[RumorInjection, ...]:
    """Rumor injections patterned on the three Boston case studies."""
    return (
        RumorInjection("citizen_911", parse_time("2013-04-19T15:34:56Z"), "pspoole",
                       "Dzhokhar Tsarnaev received US citizenship on Sept 11, 2012 #BostonMarathon",
                       carried_by=tuple(carriers)),
        RumorInjection("sandy_hook", parse_time("2013-04-19T09:56:45Z"), "CommonGrandma",
                       "She ran for the Sandy Hook children and was 8 years old. #prayforboston"),
        RumorInjection("donate_1", parse_time("2013-04-15T11:29:23Z"), "_BostonMarathon",
                       "For each RT this gets, $1 will be donated to the victims of the Boston Marathon Explosions. "
                       "#DonateToBoston"),
    )


# --- audit -----------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    rule: str
    account_id: str | None
    start_time: int
    count: int
    detail: str = ""


def audit_rate_limits(records: Sequence[TweetRecord], policy: RateLimitPolicy | None = None) -> list[Violation]:
    """Posting-rule breaches in a corpus.

    * ``daily_cap``: more than ``daily_cap`` tweets by one account inside a
      sliding 24-hour window; each run of overlapping offending windows is
      one violation.
    * ``semi_hour_cap``: one violation per clock-aligned 30-minute bucket
      above the cap.
    * ``duplicate_content``: the same non-retweet text from two or more
      accounts within 10 minutes; one violation per text.
    """
    policy = policy or RateLimitPolicy()
    out: list[Violation] = []
    by_author: dict[str, list[int]] = {}
    for r in records:
        by_author.setdefault(r.author_id, []).append(r.created_at)
    for uid in sorted(by_author):
        ts = sorted(by_author[uid])
        j = 0
        in_run = False
        for i, t in enumerate(ts):
            while j < len(ts) and ts[j] < t + DAY:
                j += 1
            n = j - i
            if n > policy.daily_cap:
                if not in_run:
                    out.append(Violation("daily_cap", uid, t, n, f"{n} tweets within 24h"))
                in_run = True
            else:
                in_run = False
        buckets = Counter(t // SEMI_HOUR for t in ts)
        for b in sorted(buckets):
            if buckets[b] > policy.semi_hour_cap:
                out.append(Violation("semi_hour_cap", uid, b * SEMI_HOUR, buckets[b],
                                     f"{buckets[b]} tweets in one 30-minute bucket"))
    by_text: dict[str, list[tuple[int, str]]] = {}
    for r in records:
        if not r.is_retweet:
            by_text.setdefault(r.text, []).append((r.created_at, r.author_id))
    for text in sorted(by_text):
        posts = sorted(by_text[text])
        for (t1, a1), (t2, a2) in _cross_account_pairs(posts):
            out.append(Violation("duplicate_content", None, t1, 2, f"{text[:80]!r} by {a1} and {a2}"))
            break
    return out


def _cross_account_pairs(posts: list[tuple[int, str]]):
    """Yield (earlier, later) posts by different accounts within the window."""
    start = 0
    for i, (t, a) in enumerate(posts):
        while posts[start][0] < t - DUPLICATE_WINDOW_S:
            start += 1
        for k in range(start, i):
            if posts[k][1] != a:
                yield posts[k], (t, a)
