"""Event corpus data model, ingestion, filtering and annotation labels."""

from __future__ import annotations

import csv
import json
import logging
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence
from urllib.parse import urlsplit

log = logging.getLogger(__name__)

BOT = "Bot"
NONBOT = "NonBot"
UNLABELED = "Unlabeled"

CHOICE_BOT = "Bot"
CHOICE_NOTBOT = "NotBot"
CHOICE_CANTDECIDE = "CantDecide"

_CHOICE_ALIASES = {
    "bot": CHOICE_BOT,
    "notbot": CHOICE_NOTBOT,
    "not_bot": CHOICE_NOTBOT,
    "cantdecide": CHOICE_CANTDECIDE,
    "cant_decide": CHOICE_CANTDECIDE,
}
_LABEL_ALIASES = {"bot": BOT, "nonbot": NONBOT, "non_bot": NONBOT}


class CorpusError(ValueError):
    """Raised for invalid corpus, label or annotation input."""


class RecordError(CorpusError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no
        self.message = message


@dataclass(frozen=True)
class AccountSnapshot:
    user_id: str
    handle: str
    followers_count: int
    friends_count: int
    statuses_count: int
    created_at: int
    description: str = ""
    verified: bool = False

    def __post_init__(self):
        for name in ("followers_count", "friends_count", "statuses_count"):
            if getattr(self, name) < 0:
                raise CorpusError(f"{name} must be non-negative")


@dataclass(frozen=True)
class TweetRecord:
    tweet_id: str
    author_id: str
    created_at: int
    text: str
    source: str
    author: AccountSnapshot
    retweet_of_author: str | None = None
    urls: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.tweet_id:
            raise CorpusError("tweet_id must be non-empty")
        if self.created_at <= 0:
            raise CorpusError("created_at must be positive")
        if not isinstance(self.urls, tuple):
            object.__setattr__(self, "urls", tuple(self.urls))

    @property
    def is_retweet(self) -> bool:
        return bool(self.retweet_of_author) or self.text.startswith("RT @")

    def to_dict(self) -> dict:
        d = {
            "tweet_id": self.tweet_id,
            "author_id": self.author_id,
            "created_at": self.created_at,
            "text": self.text,
            "source": self.source,
            "retweet_of_author": self.retweet_of_author,
            "urls": list(self.urls),
            "author": asdict(self.author),
        }
        if self.retweet_of_author is None:
            del d["retweet_of_author"]
        return d


@dataclass(frozen=True)
class EventSpec:
    name: str
    keywords: tuple[str, ...]
    window_start: int
    window_end: int

    def __post_init__(self):
        if self.window_start >= self.window_end:
            raise CorpusError("window_start must precede window_end")
        kws = tuple(_normalize_keyword(k) for k in self.keywords)
        kws = tuple(k for k in kws if k)
        if not kws:
            raise CorpusError("event needs at least one keyword")
        object.__setattr__(self, "keywords", kws)

    def in_window(self, t: float) -> bool:
        return self.window_start <= t <= self.window_end

    def matches(self, text: str) -> bool:
        folded = text.casefold()
        return any(k in folded for k in self.keywords)

    @property
    def span_s(self) -> int:
        return self.window_end - self.window_start

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "window_start": format_time(self.window_start),
            "window_end": format_time(self.window_end),
            "keywords": list(self.keywords),
        }


@dataclass(frozen=True)
class AnnotationRecord:
    user_id: str
    annotator_id: str
    choice: str


@dataclass(frozen=True)
class AccountLabel:
    user_id: str
    label: str


@dataclass
class LoadResult:
    """Outcome of reading one or more corpus files."""

    records: list[TweetRecord] = field(default_factory=list)
    errors: list[RecordError] = field(default_factory=list)
    duplicates_dropped: int = 0
    filtered_out: int = 0
    warnings: list[str] = field(default_factory=list)


def _normalize_keyword(k: str) -> str:
    return k.strip().casefold().lstrip("#").strip()


def parse_time(value: str | int | float) -> int:
    """Parse ISO-8601 (naive means UTC) or epoch seconds into epoch seconds."""
    if isinstance(value, (int, float)):
        return int(value)
    text = value.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def format_time(epoch: int) -> str:
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@lru_cache(maxsize=1 << 16)
def normalize_url(url: str) -> str | None:
    """Return a normalized absolute URL, or None if it cannot be made valid.

    Scheme-less URLs such as ``bit.ly/abc`` get ``http://`` prepended and the
    hostname is lower-cased.
    """
    url = url.strip()
    if not url or any(c.isspace() for c in url):
        return None
    if "://" not in url:
        url = "http://" + url
    try:
        parts = urlsplit(url)
        host = parts.hostname
        parts.port  # noqa: B018 - raises on malformed ports
    except ValueError:
        return None
    if parts.scheme.lower() not in ("http", "https") or not host or "." not in host:
        return None
    netloc = parts.netloc
    at = netloc.rfind("@") + 1
    netloc = netloc[:at] + netloc[at:].lower()
    return parts._replace(scheme=parts.scheme.lower(), netloc=netloc).geturl()


def load_event_spec(path: str | Path) -> EventSpec:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        return EventSpec(
            name=str(raw["name"]),
            keywords=tuple(raw["keywords"]),
            window_start=parse_time(raw["window_start"]),
            window_end=parse_time(raw["window_end"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusError(f"invalid event spec {path}: {exc}") from exc


def save_event_spec(spec: EventSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n", encoding="utf-8")


def _snapshot_from(raw: Mapping) -> AccountSnapshot:
    if not isinstance(raw, Mapping):
        raise CorpusError("author must be an object")
    verified = raw.get("verified", False)
    if not isinstance(verified, bool):
        raise CorpusError("author.verified must be a boolean")
    return AccountSnapshot(
        user_id=_str(raw, "user_id"),
        handle=_str(raw, "handle"),
        followers_count=_int(raw, "followers_count"),
        friends_count=_int(raw, "friends_count"),
        statuses_count=_int(raw, "statuses_count"),
        created_at=_int(raw, "created_at"),
        description=str(raw.get("description") or ""),
        verified=verified,
    )


def _str(raw: Mapping, key: str) -> str:
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise CorpusError(f"{key} must be a string")
    return str(value)


def _int(raw: Mapping, key: str) -> int:
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise CorpusError(f"{key} must be a number")
    if isinstance(value, float) and not value.is_integer():
        raise CorpusError(f"{key} must be whole seconds/counts")
    return int(value)


def record_from_dict(raw: Mapping) -> TweetRecord:
    """Build a TweetRecord from one decoded line; URLs are normalized here."""
    if not isinstance(raw, Mapping):
        raise CorpusError("record must be an object")
    try:
        urls_raw = raw.get("urls") or []
        if not isinstance(urls_raw, list):
            raise CorpusError("urls must be a list")
        urls = []
        for u in urls_raw:
            norm = normalize_url(u) if isinstance(u, str) else None
            if norm is None:
                raise CorpusError(f"invalid url {u!r}")
            urls.append(norm)
        rt = raw.get("retweet_of_author")
        if rt is not None and not isinstance(rt, str):
            raise CorpusError("retweet_of_author must be a string")
        text = raw["text"]
        if not isinstance(text, str):
            raise CorpusError("text must be a string")
        return TweetRecord(
            tweet_id=_str(raw, "tweet_id"),
            author_id=_str(raw, "author_id"),
            created_at=_int(raw, "created_at"),
            text=text,
            source=str(raw.get("source") or ""),
            retweet_of_author=rt or None,
            urls=tuple(urls),
            author=_snapshot_from(raw["author"]),
        )
    except KeyError as exc:
        raise CorpusError(f"missing field {exc.args[0]!r}") from None


def _read_file(path: Path, strict: bool, result: LoadResult) -> list[TweetRecord]:
    out = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read corpus {path}: {exc}") from exc
    with fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(record_from_dict(json.loads(line)))
            except (json.JSONDecodeError, CorpusError) as exc:
                err = RecordError(line_no, str(exc))
                if strict:
                    raise err from exc
                result.errors.append(err)
    return out


def sort_records(records: Iterable[TweetRecord]) -> list[TweetRecord]:
    return sorted(records, key=lambda r: (r.created_at, r.tweet_id))


def load_corpus(
    paths: str | Path | Sequence[str | Path],
    spec: EventSpec | None = None,
    *,
    strict: bool = False,
) -> LoadResult:
    """Read line-delimited JSON records, keep those in the event window that
    match an event keyword, sorted by (created_at, tweet_id).

    Duplicate tweet ids keep the first occurrence in file order. Malformed
    lines are collected in ``errors`` unless ``strict`` is set.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    result = LoadResult()
    seen: set[str] = set()
    kept = []
    for p in paths:
        for rec in _read_file(Path(p), strict, result):
            if rec.tweet_id in seen:
                result.duplicates_dropped += 1
                continue
            seen.add(rec.tweet_id)
            if spec is not None and not (spec.in_window(rec.created_at) and spec.matches(rec.text)):
                result.filtered_out += 1
                continue
            kept.append(rec)
    result.records = sort_records(kept)
    result.warnings = check_account_dates(result.records)
    for w in result.warnings:
        log.warning(w)
    return result


def check_account_dates(records: Sequence[TweetRecord]) -> list[str]:
    """Accounts whose creation date is after one of their tweets."""
    first: dict[str, TweetRecord] = {}
    for r in records:
        if r.author_id not in first or r.created_at < first[r.author_id].created_at:
            first[r.author_id] = r
    return [
        f"account {uid} created after its tweet {r.tweet_id}"
        for uid, r in sorted(first.items())
        if r.author.created_at > r.created_at
    ]


def dump_corpus(records: Iterable[TweetRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def corpus_stats(records: Sequence[TweetRecord]) -> dict[str, int]:
    return {
        "total_tweets": len(records),
        "unique_users": len({r.author_id for r in records}),
        "tweets_with_urls": sum(1 for r in records if r.urls),
        "retweet_count": sum(1 for r in records if r.is_retweet),
    }


def latest_snapshots(records: Iterable[TweetRecord]) -> dict[str, AccountSnapshot]:
    """Snapshot attached to each account's latest tweet (latest wins)."""
    latest: dict[str, TweetRecord] = {}
    for r in records:
        cur = latest.get(r.author_id)
        if cur is None or (r.created_at, r.tweet_id) >= (cur.created_at, cur.tweet_id):
            latest[r.author_id] = r
    return {uid: r.author for uid, r in latest.items()}


def tweets_by_author(records: Iterable[TweetRecord]) -> dict[str, list[TweetRecord]]:
    by = defaultdict(list)
    for r in records:
        by[r.author_id].append(r)
    return dict(by)


def aggregate_annotations(records: Iterable[AnnotationRecord]) -> list[AccountLabel]:
    """Unanimous-vote labelling: Bot/NonBot only when at least three
    annotators all agree; everything else stays Unlabeled."""
    choices: dict[str, dict[str, str]] = defaultdict(dict)
    for a in records:
        per_user = choices[a.user_id]
        if a.annotator_id in per_user:
            raise CorpusError(f"duplicate annotation for user {a.user_id!r} by {a.annotator_id!r}")
        if a.choice not in (CHOICE_BOT, CHOICE_NOTBOT, CHOICE_CANTDECIDE):
            raise CorpusError(f"unknown annotation choice {a.choice!r}")
        per_user[a.annotator_id] = a.choice

    labels = []
    for uid in sorted(choices):
        votes = set(choices[uid].values())
        label = UNLABELED
        if len(choices[uid]) >= 3 and len(votes) == 1:
            label = {CHOICE_BOT: BOT, CHOICE_NOTBOT: NONBOT}.get(votes.pop(), UNLABELED)
        labels.append(AccountLabel(uid, label))
    return labels


def _csv_rows(path: str | Path, header_first: str) -> Iterable[tuple[int, list[str]]]:
    with open(path, encoding="utf-8", newline="") as fh:
        for line_no, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].startswith("#"):
                continue
            if line_no == 1 and row[0].strip().lower() == header_first:
                continue
            yield line_no, [c.strip() for c in row]


def load_annotations(path: str | Path) -> list[AnnotationRecord]:
    out = []
    for line_no, row in _csv_rows(path, "user_id"):
        if len(row) != 3:
            raise CorpusError(f"{path}:{line_no}: expected user_id,annotator_id,choice")
        choice = _CHOICE_ALIASES.get(row[2].lower().replace("'", "").replace(" ", ""))
        if choice is None:
            raise CorpusError(f"{path}:{line_no}: unknown choice {row[2]!r}")
        out.append(AnnotationRecord(row[0], row[1], choice))
    return out


def load_labels(path: str | Path) -> dict[str, str]:
    """Read ``user_id,label`` lines into a user_id -> Bot/NonBot mapping."""
    labels: dict[str, str] = {}
    for line_no, row in _csv_rows(path, "user_id"):
        if len(row) != 2:
            raise CorpusError(f"{path}:{line_no}: expected user_id,label")
        label = _LABEL_ALIASES.get(row[1].lower())
        if label is None:
            raise CorpusError(f"{path}:{line_no}: unknown label {row[1]!r}")
        if row[0] in labels and labels[row[0]] != label:
            raise CorpusError(f"{path}:{line_no}: conflicting label for {row[0]!r}")
        labels[row[0]] = label
    return labels


def save_labels(labels: Mapping[str, str] | Iterable[AccountLabel], path: str | Path) -> None:
    """Write Bot/NonBot labels; Unlabeled accounts are omitted."""
    if isinstance(labels, Mapping):
        items = sorted(labels.items())
    else:
        items = sorted((a.user_id, a.label) for a in labels)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "label"])
        for uid, label in items:
            if label in (BOT, NONBOT):
                w.writerow([uid, label.lower()])


def label_of(labels: Mapping[str, str], user_id: str) -> str:
    return labels.get(user_id, UNLABELED)
