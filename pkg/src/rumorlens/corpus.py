"""Event -> claim -> tweet data model and its JSON-lines reader/writer."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from rumorlens.io import atomic_write_text

CERTAINTY_LABELS = frozenset({"uncertain", "somewhat-certain", "certain", "underspecified"})
STANCES = frozenset({"supporting", "denying", "questioning", "commenting"})

_KNOWN_KEYS = {
    "id", "claim_id", "event", "text", "timestamp", "resolving",
    "resolution", "certainty_labels", "stance",
}


class CorpusError(ValueError):
    """Raised for malformed or inconsistent corpus input."""


@dataclass(frozen=True)
class Tweet:
    id: str
    claim_id: str
    text: str
    timestamp: float
    is_resolving: bool = False
    certainty_labels: tuple[str, ...] | None = None
    stance: str | None = None
    extra: dict = field(default_factory=dict, compare=False, hash=False)


@dataclass(frozen=True)
class Claim:
    id: str
    event: str
    tweets: tuple[Tweet, ...]
    # None only for claims retained with keep_unresolved
    resolution_value: bool | None

    @property
    def resolving_tweet(self) -> Tweet | None:
        for t in self.tweets:
            if t.is_resolving:
                return t
        return None

    @property
    def is_resolved(self) -> bool:
        return self.resolving_tweet is not None

    def __len__(self) -> int:
        return len(self.tweets)


@dataclass(frozen=True)
class Corpus:
    claims: tuple[Claim, ...]
    events: frozenset[str]

    def claim(self, claim_id: str) -> Claim:
        for c in self.claims:
            if c.id == claim_id:
                return c
        raise KeyError(f"unknown claim {claim_id!r}")

    @property
    def resolved_claims(self) -> tuple[Claim, ...]:
        return tuple(c for c in self.claims if c.is_resolved)

    def tweets(self) -> Iterable[Tweet]:
        for c in self.claims:
            yield from c.tweets


def _tweet_order(t: Tweet):
    return (t.timestamp, t.id)


def index_tweets(claim: Claim) -> list[tuple[int, Tweet]]:
    """Ranks 1..n in timestamp order, ties broken by tweet id."""
    ordered = sorted(claim.tweets, key=_tweet_order)
    return list(enumerate(ordered, start=1))


def _parse_resolution(value, where: str) -> bool | None:
    if value is None:
        return None
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.lower() in ("true", "false"):
        return value.lower() == "true"
    raise CorpusError(f"{where}: resolution must be 'true' or 'false', got {value!r}")


def _tweet_from_record(rec: dict, lineno: int) -> tuple[Tweet, str, bool | None]:
    where = f"line {lineno}"
    for key in ("id", "claim_id", "event", "text", "timestamp"):
        if key not in rec:
            raise CorpusError(f"{where}: missing field {key!r}")
    ts = rec["timestamp"]
    if isinstance(ts, bool) or not isinstance(ts, (int, float)):
        raise CorpusError(f"{where}: timestamp must be a number")
    if not math.isfinite(ts) or ts < 0:
        raise CorpusError(f"{where}: timestamp must be finite and non-negative")
    labels = rec.get("certainty_labels")
    if labels is not None:
        if not isinstance(labels, list):
            raise CorpusError(f"{where}: certainty_labels must be a list")
        bad = [lab for lab in labels if lab not in CERTAINTY_LABELS]
        if bad:
            raise CorpusError(f"{where}: unknown certainty label(s) {bad}")
        labels = tuple(labels)
    stance = rec.get("stance")
    if stance is not None and stance not in STANCES:
        raise CorpusError(f"{where}: unknown stance {stance!r}")
    resolving = rec.get("resolving", False)
    if not isinstance(resolving, bool):
        raise CorpusError(f"{where}: resolving must be a boolean")
    tweet = Tweet(
        id=str(rec["id"]),
        claim_id=str(rec["claim_id"]),
        text=str(rec["text"]),
        timestamp=ts,
        is_resolving=resolving,
        certainty_labels=labels,
        stance=stance,
        extra={k: v for k, v in rec.items() if k not in _KNOWN_KEYS},
    )
    return tweet, str(rec["event"]), _parse_resolution(rec.get("resolution"), where)


def build_corpus(
    tweets: Iterable[tuple[Tweet, str, bool | None]],
    keep_unresolved: bool = False,
) -> Corpus:
    """Group (tweet, event, resolution) triples into validated claims."""
    grouped: dict[str, list[Tweet]] = {}
    claim_meta: dict[str, tuple[str, bool | None]] = {}
    seen_ids: set[str] = set()
    for tweet, event, resolution in tweets:
        if tweet.id in seen_ids:
            raise CorpusError(f"duplicate tweet id {tweet.id!r}")
        seen_ids.add(tweet.id)
        meta = (event, resolution)
        if tweet.claim_id in claim_meta and claim_meta[tweet.claim_id] != meta:
            raise CorpusError(
                f"claim {tweet.claim_id!r}: inconsistent claim-level fields "
                f"{claim_meta[tweet.claim_id]} vs {meta}"
            )
        claim_meta.setdefault(tweet.claim_id, meta)
        grouped.setdefault(tweet.claim_id, []).append(tweet)

    claims = []
    for claim_id, members in grouped.items():
        event, resolution = claim_meta[claim_id]
        n_resolving = sum(t.is_resolving for t in members)
        if n_resolving > 1:
            raise CorpusError(f"claim {claim_id!r} has {n_resolving} resolving tweets")
        if len(members) < 2:
            raise CorpusError(f"claim {claim_id!r} has fewer than 2 tweets")
        if n_resolving == 0:
            if not keep_unresolved:
                warnings.warn(f"dropping unresolved claim {claim_id!r}", stacklevel=2)
                continue
        elif resolution is None:
            raise CorpusError(f"claim {claim_id!r} is resolved but has no resolution value")
        ordered = tuple(sorted(members, key=_tweet_order))
        claims.append(Claim(claim_id, event, ordered, resolution))

    claims.sort(key=lambda c: c.id)
    return Corpus(tuple(claims), frozenset(c.event for c in claims))


def parse_corpus(path: str | Path, keep_unresolved: bool = False) -> Corpus:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(rec, dict):
                raise CorpusError(f"line {lineno}: expected a JSON object")
            records.append(_tweet_from_record(rec, lineno))
    return build_corpus(records, keep_unresolved=keep_unresolved)


def tweet_record(tweet: Tweet, claim: Claim) -> dict:
    rec = {
        "id": tweet.id,
        "claim_id": claim.id,
        "event": claim.event,
        "text": tweet.text,
        "timestamp": tweet.timestamp,
        "resolving": tweet.is_resolving,
        "resolution": None if claim.resolution_value is None
        else ("true" if claim.resolution_value else "false"),
    }
    if tweet.certainty_labels is not None:
        rec["certainty_labels"] = list(tweet.certainty_labels)
    if tweet.stance is not None:
        rec["stance"] = tweet.stance
    rec.update(tweet.extra)
    return rec


def dumps_corpus(corpus: Corpus) -> str:
    lines = [
        json.dumps(tweet_record(t, c), ensure_ascii=False, sort_keys=True)
        for c in corpus.claims
        for t in c.tweets
    ]
    return "".join(line + "\n" for line in lines)


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    atomic_write_text(path, dumps_corpus(corpus))
