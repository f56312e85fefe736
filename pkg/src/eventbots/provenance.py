"""Where bot content comes from: cited handles, verification, client sources
and profile vocabulary."""

from __future__ import annotations

import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ._data import data_text
from .corpus import UNLABELED, AccountSnapshot, CorpusError, TweetRecord

AUTOMATION = "automation_platform"
INTERACTIVE = "interactive_client"
OTHER = "other"
CATEGORIES = (AUTOMATION, INTERACTIVE, OTHER)

# '@' must open a token; handles are 1-15 of [A-Za-z0-9_]
_MENTION_RE = re.compile(r"(?<![A-Za-z0-9_@])@([A-Za-z0-9_]{1,15})(?![A-Za-z0-9_@])")
_WORD_RE = re.compile(r"[^\W_]+")


@dataclass(frozen=True)
class MentionTally:
    mentioned_handle: str
    count: int
    verified: bool | None = None


@dataclass(frozen=True)
class VerifiedRatio:
    verified_count: int
    total_count: int
    ratio: float | None
    unresolved: tuple[str, ...] = ()


class SourceCategoryTable:
    """Client-source string -> category; unknown strings fall back to ``other``."""

    def __init__(self, mapping: Mapping[str, str] | None = None):
        self._map: dict[str, str] = {}
        for source, cat in (mapping or {}).items():
            self.add(source, cat)

    def add(self, source: str, category: str) -> None:
        if category not in CATEGORIES:
            raise CorpusError(f"unknown source category {category!r}")
        self._map[source.strip().casefold()] = category

    def category(self, source: str) -> str:
        return self._map.get(source.strip().casefold(), OTHER)

    def sources_in(self, category: str) -> frozenset[str]:
        return frozenset(s for s, c in self._map.items() if c == category)

    def __len__(self):
        return len(self._map)

    @classmethod
    def parse(cls, text: str) -> SourceCategoryTable:
        table = cls()
        for line_no, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            source, sep, cat = line.rpartition("=")
            if not sep or not source.strip():
                raise CorpusError(f"category table line {line_no}: expected 'source = category'")
            table.add(source, cat.strip())
        return table

    @classmethod
    def load(cls, path: str | Path) -> SourceCategoryTable:
        return cls.parse(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def default(cls) -> SourceCategoryTable:
        return cls.parse(data_text("source_categories.txt"))


def default_automation_sources() -> frozenset[str]:
    """Case-folded client strings of known automation services."""
    return SourceCategoryTable.default().sources_in(AUTOMATION)


def default_stopwords() -> frozenset[str]:
    return frozenset(data_text("stopwords.txt").split())


def extract_mentions(text: str) -> list[str]:
    return [m.casefold() for m in _MENTION_RE.findall(text)]


def tally_mentions(
    records: Iterable[TweetRecord],
    snapshots: Mapping[str, AccountSnapshot] | None = None,
) -> list[MentionTally]:
    """All mentioned handles with occurrence counts, most frequent first."""
    counts = Counter()
    for r in records:
        counts.update(extract_mentions(r.text))
    by_handle = _by_handle(snapshots)
    tallies = [
        MentionTally(h, n, by_handle[h].verified if h in by_handle else None)
        for h, n in counts.items()
    ]
    tallies.sort(key=lambda t: (-t.count, t.mentioned_handle))
    return tallies


def top_sources(
    records: Iterable[TweetRecord],
    k: int,
    *,
    authors: Iterable[str] | None = None,
    snapshots: Mapping[str, AccountSnapshot] | None = None,
) -> list[MentionTally]:
    """Top-k mentioned handles, optionally restricted to tweets by ``authors``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if authors is not None:
        keep = set(authors)
        records = [r for r in records if r.author_id in keep]
    return tally_mentions(records, snapshots)[:k]


def _by_handle(snapshots) -> dict[str, AccountSnapshot]:
    if snapshots is None:
        return {}
    values = snapshots.values() if isinstance(snapshots, Mapping) else snapshots
    return {s.handle.casefold().lstrip("@"): s for s in values}


def verified_ratio(
    tallies: Sequence[MentionTally],
    snapshots: Mapping[str, AccountSnapshot] | Iterable[AccountSnapshot] | None = None,
) -> VerifiedRatio:
    """Share of distinct mentioned handles that are verified accounts.

    Each handle counts once regardless of how often it was mentioned.
    Handles with no snapshot (and no verified flag on the tally) count as
    unverified and are listed in ``unresolved``.
    """
    by_handle = _by_handle(snapshots)
    handles = sorted({t.mentioned_handle for t in tallies})
    flags = {t.mentioned_handle: t.verified for t in tallies}
    verified = 0
    unresolved = []
    for h in handles:
        if h in by_handle:
            verified += by_handle[h].verified
        elif flags[h] is not None:
            verified += bool(flags[h])
        else:
            unresolved.append(h)
    total = len(handles)
    return VerifiedRatio(verified, total, verified / total if total else None, tuple(unresolved))


@dataclass
class SourceBreakdown:
    """Per-class tweet counts by raw client source and by category."""

    by_source: dict[str, Counter] = field(default_factory=lambda: defaultdict(Counter))
    by_category: dict[str, Counter] = field(default_factory=lambda: defaultdict(Counter))

    def ranking(self, label: str, k: int | None = None) -> list[tuple[str, int]]:
        items = sorted(self.by_source.get(label, Counter()).items(), key=lambda kv: (-kv[1], kv[0]))
        return items[:k] if k else items

    def total(self, label: str) -> int:
        return sum(self.by_category.get(label, Counter()).values())

    def share(self, label: str, category: str = AUTOMATION) -> float:
        total = self.total(label)
        return self.by_category[label][category] / total if total else 0.0


def categorize_sources(
    records: Iterable[TweetRecord],
    labels: Mapping[str, str],
    table: SourceCategoryTable | None = None,
) -> SourceBreakdown:
    table = table or SourceCategoryTable.default()
    out = SourceBreakdown()
    for r in records:
        label = labels.get(r.author_id, UNLABELED)
        out.by_source[label][r.source] += 1
        out.by_category[label][table.category(r.source)] += 1
    return out


def automation_share(records: Iterable[TweetRecord], table: SourceCategoryTable | None = None) -> float:
    table = table or SourceCategoryTable.default()
    n = auto = 0
    for r in records:
        n += 1
        auto += table.category(r.source) == AUTOMATION
    return auto / n if n else 0.0


def description_words(text: str) -> list[str]:
    return _WORD_RE.findall(text.casefold())


def description_word_frequency(
    snapshots: Iterable[AccountSnapshot],
    stopwords: Iterable[str] | None = None,
) -> list[tuple[str, int]]:
    stop = default_stopwords() if stopwords is None else frozenset(w.casefold() for w in stopwords)
    counts = Counter()
    for s in snapshots:
        counts.update(w for w in description_words(s.description) if w not in stop)
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))

