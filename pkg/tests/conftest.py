from __future__ import annotations

import itertools
import sys

import pytest

from eventbots.corpus import AccountSnapshot, EventSpec, TweetRecord

T0 = 1365984000  # 2013-04-15T00:00:00Z

_ids = itertools.count(1)


def snap(user_id: str = "u1", *, handle: str | None = None, followers: int = 10, friends: int = 10,
         statuses: int = 100, created_at: int = T0 - 86400 * 100, description: str = "",
         verified: bool = False) -> AccountSnapshot:
    return AccountSnapshot(user_id, handle or user_id, followers, friends, statuses, created_at, description, verified)


def tweet(author: str | AccountSnapshot = "u1", t: int = T0 + 60, text: str = "boston marathon", *,
          source: str = "web", urls=(), rt: str | None = None, tweet_id: str | None = None) -> TweetRecord:
    a = author if isinstance(author, AccountSnapshot) else snap(author)
    return TweetRecord(tweet_id or f"t{next(_ids):08d}", a.user_id, t, text, source, a, rt, tuple(urls))


@pytest.fixture
def event() -> EventSpec:
    return EventSpec("Boston", ("#BostonMarathon", "boston marathon", "prayforboston"), T0, T0 + 7 * 86400)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
