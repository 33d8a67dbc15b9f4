"""Per-tweet intrinsic variables: cue ratios, FCR and tweet density."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from rumorlens.corpus import Claim, Tweet, index_tweets
from rumorlens.lexicon import GROUPS, CueCounts, CueGroup, Lexicon, match_cues

DENSITY_WINDOW = 600.0
BIN_WIDTH = 600.0


@dataclass(frozen=True)
class CueRatios:
    kcr: float
    rcr: float
    bcr: float
    dcr: float

    @property
    def fcr(self) -> float:
        return min(1.0, max(0.0, self.kcr + self.rcr))

    def as_array(self) -> np.ndarray:
        return np.array([self.kcr, self.rcr, self.bcr, self.dcr])


def cue_ratios(counts: CueCounts | Mapping[CueGroup, int]) -> CueRatios:
    """Share of each group in all matched cues; all zeros when nothing matched."""
    if isinstance(counts, CueCounts):
        counts = counts.counts
    values = [counts.get(g, 0) for g in GROUPS]
    if any(v < 0 for v in values):
        raise ValueError("cue counts must be non-negative")
    total = sum(values)
    if total == 0:
        return CueRatios(0.0, 0.0, 0.0, 0.0)
    return CueRatios(*(v / total for v in values))


def claim_ratios(claim: Claim, lexicon: Lexicon) -> list[CueRatios]:
    return [cue_ratios(match_cues(t.text, lexicon)) for _, t in index_tweets(claim)]


def tweet_density(claim: Claim, tweet: Tweet, window: float = DENSITY_WINDOW) -> float:
    """Tweets per minute in a window of ``window`` seconds centred on ``tweet``.

    Boundaries are inclusive and the tweet counts itself.
    """
    half = window / 2
    n = sum(1 for t in claim.tweets if abs(t.timestamp - tweet.timestamp) <= half)
    return n / (window / 60.0)


def claim_densities(claim: Claim, window: float = DENSITY_WINDOW) -> np.ndarray:
    """``tweet_density`` for every tweet of the claim in rank order."""
    times = [t.timestamp for _, t in index_tweets(claim)]
    half = window / 2
    counts = [
        bisect.bisect_right(times, ts + half) - bisect.bisect_left(times, ts - half)
        for ts in times
    ]
    return np.asarray(counts, dtype=float) / (window / 60.0)


def bin_timeline(
    claim: Claim, values: Sequence[float], width: float = BIN_WIDTH
) -> list[tuple[int, float, int]]:
    """Group values into ``width``-second bins anchored at the resolving tweet.

    ``values`` are aligned with ``index_tweets(claim)``. Returns
    ``(bin_index, mean_value, count)`` sorted by bin index.
    """
    resolving = claim.resolving_tweet
    if resolving is None:
        raise ValueError(f"claim {claim.id!r} has no resolving tweet")
    ranked = index_tweets(claim)
    if len(values) != len(ranked):
        raise ValueError("values must align with the claim's tweets")
    bins: dict[int, list[float]] = {}
    for (_, tweet), v in zip(ranked, values):
        b = math.floor((tweet.timestamp - resolving.timestamp) / width)
        bins.setdefault(b, []).append(float(v))
    return [(b, float(np.mean(vs)), len(vs)) for b, vs in sorted(bins.items())]


FEATURE_DUMP_HEADER = ["claim_id", "tweet_id", "rank", "kcr", "rcr", "bcr", "dcr", "fcr", "density"]


def feature_dump_rows(claims: Sequence[Claim], lexicon: Lexicon, window: float = DENSITY_WINDOW):
    for claim in claims:
        ratios = claim_ratios(claim, lexicon)
        density = claim_densities(claim, window)
        for (rank, tweet), r, d in zip(index_tweets(claim), ratios, density):
            yield [claim.id, tweet.id, rank, r.kcr, r.rcr, r.bcr, r.dcr, r.fcr, float(d)]
