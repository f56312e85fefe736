"""Per-account user-based and temporal feature vectors."""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import BOT, NONBOT, AccountSnapshot, EventSpec, TweetRecord, latest_snapshots, tweets_by_author
from .provenance import default_automation_sources

F1 = "F1"
F2 = "F2"

USER_COLUMNS = (
    "tweet_count",
    "followers_friends_ratio",
    "account_age_days",
    "url_fraction",
    "automation_source_fraction",
)
TEMPORAL_COLUMNS = (
    "inter_tweet_mean_s",
    "inter_tweet_std_s",
    "hour_entropy_bits",
    "max_gap_fraction",
    "weekday_concentration",
)
COLUMNS = {F1: USER_COLUMNS, F2: USER_COLUMNS + TEMPORAL_COLUMNS}

# Matrix encoding of temporal features that are undefined (fewer than two
# tweets). Every defined value is >= 0, so a single split isolates it.
ABSENT = -1.0


@dataclass(frozen=True)
class FeatureVector:
    user_id: str
    tweet_count: int
    followers_friends_ratio: float
    account_age_days: float
    url_fraction: float
    automation_source_fraction: float
    inter_tweet_mean_s: float | None = None
    inter_tweet_std_s: float | None = None
    hour_entropy_bits: float | None = None
    max_gap_fraction: float | None = None
    weekday_concentration: float | None = None
    empty_activity: bool = False

    @property
    def has_temporal(self) -> bool:
        return self.inter_tweet_mean_s is not None

    def values(self, feature_set: str = F2) -> list[float]:
        out = []
        for name in COLUMNS[feature_set]:
            v = getattr(self, name)
            out.append(ABSENT if v is None else float(v))
        return out


def _timestamps(tweets: Iterable[TweetRecord]) -> list[int]:
    return sorted(t.created_at for t in tweets)


def inter_tweet_stats(tweets: Sequence[TweetRecord]) -> tuple[float, float] | None:
    """Mean and population standard deviation of consecutive gaps, in seconds.

    Returns None for fewer than two tweets.
    """
    ts = _timestamps(tweets)
    if len(ts) < 2:
        return None
    deltas = [b - a for a, b in zip(ts, ts[1:])]
    mean = math.fsum(deltas) / len(deltas)
    var = math.fsum((d - mean) ** 2 for d in deltas) / len(deltas)
    return mean, math.sqrt(var)


def _utc(ts: int) -> datetime:
    return datetime.fromtimestamp(ts, tz=timezone.utc)


def hour_entropy(tweets: Sequence[TweetRecord]) -> float:
    """Shannon entropy (bits) of the UTC hour-of-day histogram."""
    if not tweets:
        raise ValueError("hour_entropy needs at least one tweet")
    hist = Counter(_utc(t.created_at).hour for t in tweets)
    n = len(tweets)
    h = -math.fsum((c / n) * math.log2(c / n) for c in hist.values())
    return max(h, 0.0)


def weekday_concentration(tweets: Sequence[TweetRecord]) -> float:
    hist = Counter(_utc(t.created_at).weekday() for t in tweets)
    return max(hist.values()) / len(tweets)


def max_gap_fraction(tweets: Sequence[TweetRecord], spec: EventSpec) -> float:
    """Longest silence between consecutive tweets over the window span."""
    ts = _timestamps(tweets)
    gap = max(b - a for a, b in zip(ts, ts[1:]))
    return min(gap / spec.span_s, 1.0)


def extract_user_features(
    account: AccountSnapshot,
    tweets: Sequence[TweetRecord],
    spec: EventSpec,
    automation_sources: Iterable[str] | None = None,
) -> FeatureVector:
    auto = default_automation_sources() if automation_sources is None else {s.casefold() for s in automation_sources}
    n = len(tweets)
    ratio = account.followers_count / max(account.friends_count, 1)
    age_days = (spec.window_start - account.created_at) / 86400.0
    if n == 0:
        return FeatureVector(account.user_id, 0, ratio, age_days, 0.0, 0.0, empty_activity=True)
    with_url = sum(1 for t in tweets if t.urls)
    automated = sum(1 for t in tweets if t.source.strip().casefold() in auto)
    return FeatureVector(account.user_id, n, ratio, age_days, with_url / n, automated / n)


def extract_features(
    account: AccountSnapshot,
    tweets: Sequence[TweetRecord],
    spec: EventSpec,
    automation_sources: Iterable[str] | None = None,
) -> FeatureVector:
    """User-based features plus temporal extras (when at least two tweets)."""
    fv = extract_user_features(account, tweets, spec, automation_sources)
    stats = inter_tweet_stats(tweets)
    if stats is None:
        return fv
    return FeatureVector(
        fv.user_id,
        fv.tweet_count,
        fv.followers_friends_ratio,
        fv.account_age_days,
        fv.url_fraction,
        fv.automation_source_fraction,
        inter_tweet_mean_s=stats[0],
        inter_tweet_std_s=stats[1],
        hour_entropy_bits=hour_entropy(tweets),
        max_gap_fraction=max_gap_fraction(tweets, spec),
        weekday_concentration=weekday_concentration(tweets),
    )


@dataclass
class DesignMatrix:
    columns: tuple[str, ...]
    user_ids: list[str] = field(default_factory=list)
    rows: list[list[float]] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["user_id", *self.columns, "label"])
            for uid, row, label in zip(self.user_ids, self.rows, self.labels):
                w.writerow([uid, *(repr(v) for v in row), label])

    @classmethod
    def read_csv(cls, path: str | Path) -> DesignMatrix:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            m = cls(columns=tuple(header[1:-1]))
            for row in reader:
                if not row:
                    continue
                m.user_ids.append(row[0])
                m.rows.append([float(v) for v in row[1:-1]])
                m.labels.append(row[-1])
        return m


def build_design_matrix(
    labels: Mapping[str, str],
    records: Sequence[TweetRecord],
    spec: EventSpec,
    feature_set: str = F1,
    automation_sources: Iterable[str] | None = None,
) -> DesignMatrix:
    """Feature rows for every Bot/NonBot-labelled account, in user_id order.

    Labelled accounts without tweets in ``records`` are listed in
    ``skipped`` rather than raising.
    """
    if feature_set not in COLUMNS:
        raise ValueError(f"unknown feature set {feature_set!r}")
    if automation_sources is None:
        automation_sources = default_automation_sources()
    by_author = tweets_by_author(records)
    snapshots = latest_snapshots(records)
    m = DesignMatrix(columns=COLUMNS[feature_set])
    for uid in sorted(labels):
        label = labels[uid]
        if label not in (BOT, NONBOT):
            continue
        tweets = by_author.get(uid)
        if not tweets:
            m.skipped.append(uid)
            continue
        fv = extract_features(snapshots[uid], tweets, spec, automation_sources)
        m.user_ids.append(uid)
        m.rows.append(fv.values(feature_set))
        m.labels.append(label)
    return m


def account_features(
    records: Sequence[TweetRecord],
    spec: EventSpec,
    automation_sources: Iterable[str] | None = None,
) -> dict[str, FeatureVector]:
    """Full feature vectors for every author in the corpus."""
    if automation_sources is None:
        automation_sources = default_automation_sources()
    snapshots = latest_snapshots(records)
    return {
        uid: extract_features(snapshots[uid], tweets, spec, automation_sources)
        for uid, tweets in sorted(tweets_by_author(records).items())
    }
