"""Rumor pickup latency and URL analysis (hostnames, expansion, blocklists)."""

from __future__ import annotations

import json
import logging
import urllib.request
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence
from urllib.parse import urlsplit

from .corpus import BOT, NONBOT, UNLABELED, CorpusError, EventSpec, TweetRecord, normalize_url, parse_time
from ._data import data_text
from .provenance import extract_mentions

log = logging.getLogger(__name__)

LABEL_CLASSES = (BOT, NONBOT, UNLABELED)
INVALID_HOST = "invalid"


# --- rumors -----------------------------------------------------------------

@dataclass(frozen=True)
class RumorSpec:
    name: str
    origin_time: int
    matchers: tuple[str, ...] = ()
    origin_handle: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "matchers", tuple(m.casefold() for m in self.matchers if m.strip()))
        if self.origin_handle:
            object.__setattr__(self, "origin_handle", self.origin_handle.lstrip("@").casefold())
        if not self.matchers and not self.origin_handle:
            raise CorpusError(f"rumor {self.name!r} needs at least one matcher")

    def matches(self, r: TweetRecord) -> bool:
        text = r.text.casefold()
        if any(m in text for m in self.matchers):
            return True
        if self.origin_handle:
            if r.retweet_of_author and r.retweet_of_author.lstrip("@").casefold() == self.origin_handle:
                return True
            if text.startswith("rt @"):
                cited = extract_mentions(r.text[3:])
                return bool(cited) and cited[0] == self.origin_handle
        return False


def load_rumors(path: str | Path) -> list[RumorSpec]:
    """JSON list of {name, origin_time (ISO or epoch), matchers, origin_handle}."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        return [
            RumorSpec(
                name=r["name"],
                origin_time=parse_time(r["origin_time"]),
                matchers=tuple(r.get("matchers", ())),
                origin_handle=r.get("origin_handle"),
            )
            for r in raw
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusError(f"invalid rumor file {path}: {exc}") from exc


@dataclass(frozen=True)
class ClassPickup:
    count_distinct_users: int
    first_pickup_time: int | None
    latency_s: int | None
    pre_origin_matches: int = 0


@dataclass(frozen=True)
class RumorPickup:
    rumor: str
    by_class: dict[str, ClassPickup | None]
    matched_users: int

    def get(self, label: str) -> ClassPickup | None:
        return self.by_class.get(label)


def rumor_pickup(
    records: Iterable[TweetRecord],
    labels: Mapping[str, str],
    rumor: RumorSpec,
    spec: EventSpec | None = None,
) -> RumorPickup:
    """Who picked up a rumor, per label class, and how long after it started.

    Counts are distinct matching users. Latency is measured from the origin
    to the first matching tweet at or after it; earlier matches are counted
    in ``pre_origin_matches`` instead. A class with no match maps to None.
    """
    if spec is not None and rumor.origin_time > spec.window_end:
        raise CorpusError(f"rumor {rumor.name!r} starts after the event window ends")
    users: dict[str, set[str]] = {c: set() for c in LABEL_CLASSES}
    first: dict[str, int] = {}
    pre: Counter = Counter()
    for r in records:
        if not rumor.matches(r):
            continue
        c = labels.get(r.author_id, UNLABELED)
        if c not in users:
            c = UNLABELED
        users[c].add(r.author_id)
        if r.created_at < rumor.origin_time:
            pre[c] += 1
        elif c not in first or r.created_at < first[c]:
            first[c] = r.created_at
    by_class: dict[str, ClassPickup | None] = {}
    for c in LABEL_CLASSES:
        if not users[c]:
            by_class[c] = None
            continue
        t = first.get(c)
        by_class[c] = ClassPickup(len(users[c]), t, None if t is None else t - rumor.origin_time, pre[c])
    return RumorPickup(rumor.name, by_class, sum(len(u) for u in users.values()))


# --- URLs -------------------------------------------------------------------

def hostname(url: str) -> str | None:
    """Lower-case hostname without port, or None for unparseable URLs."""
    norm = normalize_url(url)
    if norm is None:
        return None
    host = urlsplit(norm).hostname
    return host.rstrip(".") if host else None


def _key(url: str) -> str:
    """Scheme-insensitive lookup key: host + path (+query), no trailing slash."""
    norm = normalize_url(url)
    if norm is None:
        return url.strip()
    p = urlsplit(norm)
    key = (p.hostname or "") + p.path.rstrip("/")
    return key + ("?" + p.query if p.query else "")


def default_shorteners() -> frozenset[str]:
    return frozenset(data_text("shorteners.txt").split())


@dataclass(frozen=True)
class UrlRecord:
    raw_url: str
    hostname: str
    author_id: str = ""
    expanded_url: str | None = None
    expanded_hostname: str | None = None
    unresolved: bool = False
    blocklisted: bool | None = None

    @property
    def final_url(self) -> str:
        return self.expanded_url or self.raw_url


def url_records(records: Iterable[TweetRecord]) -> list[UrlRecord]:
    """One UrlRecord per URL occurrence, in corpus order."""
    out = []
    for r in records:
        for u in r.urls:
            out.append(UrlRecord(u, hostname(u) or INVALID_HOST, r.author_id))
    return out


def hostname_rank(
    urls: Sequence[UrlRecord] | Iterable[TweetRecord],
    labels: Mapping[str, str],
    label_class: str,
    k: int,
    *,
    expanded: bool = False,
) -> list[tuple[str, int]]:
    """Top-k hostnames by occurrence among URLs posted by ``label_class``.

    Unparseable URLs are tallied under ``"invalid"``. With ``expanded=True``
    the expansion hostname is used where one is known.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    urls = list(urls)
    if urls and isinstance(urls[0], TweetRecord):
        urls = url_records(urls)
    counts: Counter = Counter()
    for u in urls:
        if labels.get(u.author_id, UNLABELED) != label_class:
            continue
        counts[(u.expanded_hostname if expanded and u.expanded_hostname else u.hostname)] += 1
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]


class Resolver(Protocol):
    def resolve(self, url: str) -> str | None: ...


class OfflineResolver:
    """Short URL -> expanded URL table; lookups ignore scheme and trailing '/'."""

    blocking = False  # in-memory, so no point fanning out to threads

    def __init__(self, table: Mapping[str, str] | None = None):
        self._table = {_key(k): v for k, v in (table or {}).items()}

    def resolve(self, url: str) -> str | None:
        return self._table.get(_key(url))

    @classmethod
    def load(cls, path: str | Path) -> OfflineResolver:
        table = {}
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                short, sep, expanded = line.partition("\t")
                if not sep:
                    raise CorpusError(f"{path}:{line_no}: expected short_url<TAB>expanded_url")
                table[short.strip()] = expanded.strip()
        return cls(table)


class HttpResolver:
    """Follows redirects with HEAD requests. Only used when explicitly requested."""

    blocking = True

    def __init__(self, timeout: float = 10.0):
        self.timeout = timeout

    def resolve(self, url: str) -> str | None:
        req = urllib.request.Request(normalize_url(url) or url, method="HEAD")
        with urllib.request.urlopen(req, timeout=self.timeout) as resp:  # noqa: S310
            return resp.geturl()


def expand_urls(
    urls: Sequence[UrlRecord],
    resolver: Resolver,
    shorteners: Iterable[str] | None = None,
    max_in_flight: int = 8,
) -> list[UrlRecord]:
    """Fill expansion fields for shortener URLs the resolver knows.

    Distinct raw URLs are resolved once each, at most ``max_in_flight`` at a
    time (resolvers with ``blocking = False`` are called inline). Resolver
    errors mark the record unresolved; non-shortener URLs and
    already-expanded records pass through unchanged.
    """
    short_hosts = {h.casefold() for h in (default_shorteners() if shorteners is None else shorteners)}
    todo = sorted({u.raw_url for u in urls if u.hostname in short_hosts and u.expanded_url is None})

    def attempt(raw: str) -> str | None:
        try:
            target = resolver.resolve(raw)
        except Exception as exc:  # resolver failures are per-record, never fatal
            log.info("could not resolve %s: %s", raw, exc)
            return None
        return normalize_url(target) if target else None

    if max_in_flight > 1 and len(todo) > 1 and getattr(resolver, "blocking", True):
        with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
            resolved = dict(zip(todo, pool.map(attempt, todo)))
    else:
        resolved = {raw: attempt(raw) for raw in todo}

    out = []
    for u in urls:
        if u.raw_url not in resolved:
            out.append(u)
            continue
        target = resolved[u.raw_url]
        if target is None:
            out.append(replace(u, unresolved=True))
        else:
            out.append(replace(u, expanded_url=target, expanded_hostname=hostname(target), unresolved=False))
    return out


class BlocklistUnavailable(RuntimeError):
    pass


class Blocklist(Protocol):
    def contains(self, url: str) -> bool: ...


class OfflineBlocklist:
    """Entries are full URLs (matched scheme-insensitively) or hostname
    patterns; a pattern ``example.com`` or ``*.example.com`` also covers
    subdomains."""

    def __init__(self, entries: Iterable[str] = ()):
        self._urls: set[str] = set()
        self._hosts: set[str] = set()
        for e in entries:
            e = e.strip()
            if not e or e.startswith("#"):
                continue
            if "/" in e:
                self._urls.add(_key(e))
            else:
                self._hosts.add(e.casefold().lstrip("*.").rstrip("."))

    def contains(self, url: str) -> bool:
        if _key(url) in self._urls:
            return True
        host = hostname(url)
        if not host:
            return False
        parts = host.split(".")
        return any(".".join(parts[i:]) in self._hosts for i in range(len(parts)))

    @classmethod
    def load(cls, path: str | Path) -> OfflineBlocklist:
        try:
            with open(path, encoding="utf-8") as fh:
                return cls(fh.read().splitlines())
        except OSError as exc:
            raise BlocklistUnavailable(f"cannot read blocklist {path}: {exc}") from exc


@dataclass(frozen=True)
class ScreenReport:
    flagged: dict[str, int]
    totals: dict[str, int]
    distinct_flagged: dict[str, int]
    distinct_totals: dict[str, int]
    flagged_urls: tuple[UrlRecord, ...] = field(default=(), repr=False)

    @property
    def bot_flagged(self) -> int:
        return self.flagged[BOT]

    @property
    def nonbot_flagged(self) -> int:
        return self.flagged[NONBOT]

    def fraction(self, label: str) -> float:
        return self.flagged[label] / self.totals[label] if self.totals[label] else 0.0


def blocklist_screen(
    urls: Sequence[UrlRecord],
    labels: Mapping[str, str],
    client: Blocklist,
) -> ScreenReport:
    """Per-class counts of URL occurrences (and distinct URLs) on a blocklist.

    The expanded URL is checked when known. If the client fails, the
    exception propagates and no report is produced.
    """
    verdicts: dict[str, bool] = {}
    for u in urls:
        if u.final_url not in verdicts:
            try:
                verdicts[u.final_url] = bool(client.contains(u.final_url))
            except BlocklistUnavailable:
                raise
            except Exception as exc:
                raise BlocklistUnavailable(str(exc)) from exc

    flagged = {c: 0 for c in LABEL_CLASSES}
    totals = {c: 0 for c in LABEL_CLASSES}
    distinct = {c: set() for c in LABEL_CLASSES}
    distinct_hit = {c: set() for c in LABEL_CLASSES}
    hits = []
    for u in urls:
        c = labels.get(u.author_id, UNLABELED)
        c = c if c in totals else UNLABELED
        totals[c] += 1
        distinct[c].add(u.final_url)
        if verdicts[u.final_url]:
            flagged[c] += 1
            distinct_hit[c].add(u.final_url)
            hits.append(replace(u, blocklisted=True))
    return ScreenReport(
        flagged,
        totals,
        {c: len(v) for c, v in distinct_hit.items()},
        {c: len(v) for c, v in distinct.items()},
        tuple(hits),
    )
