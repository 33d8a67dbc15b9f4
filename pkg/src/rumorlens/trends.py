"""Trend-discontinuity features over a claim's rank-indexed tweet sequence.

For a tweet at rank i three least-squares lines are fitted: ``l_p`` over
ranks 1..i-1, ``l_f`` over i+1..n and ``l_a`` over 1..n. From them:

- delta: value(i) - value(i-1), 0 at i = 1
- reset: l_f(i+1) - l_p(i-1), 0 when either segment is empty
- rmsd_p / rmsd_f: RMS gap between l_p (l_f) and l_a over the segment's own
  ranks, 0 for segments of fewer than two tweets
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from rumorlens.certainty import GlmModel
from rumorlens.corpus import Claim, index_tweets
from rumorlens.features import DENSITY_WINDOW, claim_densities, claim_ratios
from rumorlens.lexicon import Lexicon

VARIABLES = ("KCR", "RCR", "BCR", "DCR", "CRT", "DENSITY")
EXTRA_VARIABLES = ("FCR",)
SUFFIXES = ("", "_Delta", "_Reset", "_RMSD_p", "_RMSD_f")

CUE_SET = ("KCR", "RCR", "BCR", "DCR", "DENSITY")
CERT_SET = ("CRT", "DENSITY")


def columns(variables: Sequence[str]) -> list[str]:
    return [v + s for v in variables for s in SUFFIXES]


FEATURE_COLUMNS = columns(VARIABLES)
EXPORT_COLUMNS = columns(VARIABLES + EXTRA_VARIABLES)
FEATURE_SETS = {"cue": columns(CUE_SET), "cert": columns(CERT_SET)}


@dataclass(frozen=True)
class Line:
    slope: float
    intercept: float
    n: int

    def __call__(self, x):
        return self.intercept + self.slope * np.asarray(x, dtype=float)


def fit_line(xs: Sequence[float], ys: Sequence[float]) -> Line | None:
    """Ordinary least squares; a single point gives a horizontal line, no points gives None."""
    if len(xs) != len(ys):
        raise ValueError("xs and ys differ in length")
    n = len(xs)
    if n == 0:
        return None
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if n == 1:
        return Line(0.0, float(y[0]), 1)
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0:
        return Line(0.0, float(ym), n)
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    return Line(slope, float(ym - slope * xm), n)


@dataclass(frozen=True)
class DiscontinuitySet:
    delta: float
    reset: float
    rmsd_p: float
    rmsd_f: float


def delta(series: Sequence[float], i: int) -> float:
    """Difference to the preceding tweet at 1-based rank ``i``."""
    if not 1 <= i <= len(series):
        raise IndexError(f"rank {i} outside 1..{len(series)}")
    return 0.0 if i == 1 else float(series[i - 1]) - float(series[i - 2])


def _rmsd(a: Line, b: Line, ranks: np.ndarray) -> float:
    return math.sqrt(float(np.mean((a(ranks) - b(ranks)) ** 2)))


def discontinuities(series: Sequence[float], i: int) -> DiscontinuitySet:
    """Discontinuity features at 1-based rank ``i`` (direct, per-position fits)."""
    n = len(series)
    if n < 2:
        raise ValueError("need at least 2 values")
    y = np.asarray(series, dtype=float)
    ranks = np.arange(1, n + 1, dtype=float)
    pre, post = ranks[: i - 1], ranks[i:]
    l_a = fit_line(ranks, y)
    l_p = fit_line(pre, y[: i - 1])
    l_f = fit_line(post, y[i:])
    reset = 0.0
    if l_p is not None and l_f is not None:
        reset = float(l_f(i + 1) - l_p(i - 1))
    rmsd_p = _rmsd(l_p, l_a, pre) if len(pre) >= 2 else 0.0
    rmsd_f = _rmsd(l_f, l_a, post) if len(post) >= 2 else 0.0
    return DiscontinuitySet(delta(y, i), reset, rmsd_p, rmsd_f)


def _segment_lines(n, sx, sxx, sy, sxy):
    """Vectorized OLS slope/intercept from segment sums; n may contain 0s and 1s."""
    with np.errstate(invalid="ignore", divide="ignore"):
        denom = n * sxx - sx * sx
        slope = np.where(denom > 0, (n * sxy - sx * sy) / np.where(denom > 0, denom, 1), 0.0)
        intercept = np.where(n > 0, (sy - slope * sx) / np.where(n > 0, n, 1), 0.0)
    return slope, intercept


def series_discontinuities(series: Sequence[float]) -> np.ndarray:
    """All four features at every rank, shape (n, 4): delta, reset, rmsd_p, rmsd_f.

    Same values as calling ``discontinuities`` per rank, in O(n) using prefix sums.
    """
    y = np.asarray(series, dtype=float)
    n = len(y)
    if n < 2:
        raise ValueError("need at least 2 values")
    # every feature is shift invariant; centring limits cancellation in the sums
    y = y - y.mean()
    x = np.arange(1, n + 1, dtype=float)

    def prefix(v):
        return np.concatenate([[0.0], np.cumsum(v)])

    cx, cxx, cy, cxy = prefix(x), prefix(x * x), prefix(y), prefix(x * y)
    i = np.arange(1, n + 1)
    # preceding segment covers ranks 1..i-1, following i+1..n
    n_p = (i - 1).astype(float)
    p_sums = (cx[i - 1], cxx[i - 1], cy[i - 1], cxy[i - 1])
    n_f = (n - i).astype(float)
    f_sums = tuple(c[n] - c[i] for c in (cx, cxx, cy, cxy))
    b_p, a_p = _segment_lines(n_p, *p_sums)
    b_f, a_f = _segment_lines(n_f, *f_sums)
    line_a = fit_line(x, y)

    out = np.zeros((n, 4))
    out[1:, 0] = np.diff(y)
    both = (n_p > 0) & (n_f > 0)
    out[:, 1] = np.where(both, (a_f + b_f * (i + 1)) - (a_p + b_p * (i - 1)), 0.0)

    def rmsd(m, sx, sxx, a, b):
        # mean over the segment's ranks of ((a - a_all) + (b - b_all) x)^2
        da, db = a - line_a.intercept, b - line_a.slope
        with np.errstate(invalid="ignore", divide="ignore"):
            ms = (da * da * m + 2 * da * db * sx + db * db * sxx) / np.where(m > 0, m, 1)
        return np.where(m >= 2, np.sqrt(np.clip(ms, 0.0, None)), 0.0)

    out[:, 2] = rmsd(n_p, p_sums[0], p_sums[1], a_p, b_p)
    out[:, 3] = rmsd(n_f, f_sums[0], f_sums[1], a_f, b_f)
    return out


@dataclass(frozen=True)
class FeatureVector:
    claim_id: str
    tweet_id: str
    rank: int
    is_resolving: bool
    resolution_value: bool | None
    values: dict[str, float]

    def project(self, names: Sequence[str]) -> np.ndarray:
        return np.array([self.values[c] for c in names])

    @property
    def cue_set(self) -> np.ndarray:
        return self.project(FEATURE_SETS["cue"])

    @property
    def cert_set(self) -> np.ndarray:
        return self.project(FEATURE_SETS["cert"])


def intrinsic_series(
    claim: Claim, model: GlmModel, lexicon: Lexicon, window: float = DENSITY_WINDOW
) -> dict[str, np.ndarray]:
    ratios = claim_ratios(claim, lexicon)
    R = np.array([r.as_array() for r in ratios])
    return {
        "KCR": R[:, 0],
        "RCR": R[:, 1],
        "BCR": R[:, 2],
        "DCR": R[:, 3],
        "CRT": model.predict(R),
        "DENSITY": claim_densities(claim, window),
        "FCR": np.clip(R[:, 0] + R[:, 1], 0.0, 1.0),
    }


def build_feature_vectors(
    claim: Claim, model: GlmModel, lexicon: Lexicon, window: float = DENSITY_WINDOW
) -> list[FeatureVector]:
    series = intrinsic_series(claim, model, lexicon, window)
    table = {}
    for var in VARIABLES + EXTRA_VARIABLES:
        disc = series_discontinuities(series[var])
        table[var] = series[var]
        for k, suffix in enumerate(SUFFIXES[1:]):
            table[var + suffix] = disc[:, k]
    vectors = []
    for row, (rank, tweet) in enumerate(index_tweets(claim)):
        vectors.append(
            FeatureVector(
                claim_id=claim.id,
                tweet_id=tweet.id,
                rank=rank,
                is_resolving=tweet.is_resolving,
                resolution_value=claim.resolution_value,
                values={c: float(table[c][row]) for c in EXPORT_COLUMNS},
            )
        )
    return vectors


MATRIX_ID_COLUMNS = ["claim_id", "tweet_id", "rank", "is_resolving", "resolution_value"]


def matrix_rows(vectors: Sequence[FeatureVector]):
    for v in vectors:
        res = "" if v.resolution_value is None else str(v.resolution_value).lower()
        yield [v.claim_id, v.tweet_id, v.rank, str(v.is_resolving).lower(), res] + [
            v.values[c] for c in EXPORT_COLUMNS
        ]


def vectors_from_rows(rows: Sequence[dict[str, str]]) -> list[FeatureVector]:
    """Inverse of ``matrix_rows`` for rows read back with ``csv.DictReader``."""
    out = []
    for r in rows:
        res = r["resolution_value"]
        out.append(
            FeatureVector(
                claim_id=r["claim_id"],
                tweet_id=r["tweet_id"],
                rank=int(r["rank"]),
                is_resolving=r["is_resolving"] == "true",
                resolution_value=None if res == "" else res == "true",
                values={c: float(r[c]) for c in EXPORT_COLUMNS if c in r},
            )
        )
    return out
