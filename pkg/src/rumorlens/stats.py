"""Rank correlation, paired signed-rank test, FDR adjustment and group comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import mannwhitneyu, rankdata

EXACT_WILCOXON_MAX_N = 12


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    n: int

    __test__ = False  # keep pytest from collecting this class


def _spearman(ra: np.ndarray, rb: np.ndarray) -> np.ndarray:
    """Pearson correlation on ranks; rb may be 2-D with one permutation per row."""
    ra = ra - ra.mean()
    rb = rb - rb.mean(axis=-1, keepdims=True)
    denom = np.sqrt(np.sum(ra * ra) * np.sum(rb * rb, axis=-1))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(denom > 0, (rb @ ra) / np.where(denom > 0, denom, 1), 0.0)


def spearman_rho(a, b, permutations: int = 10_000, seed: int = 0) -> TestResult:
    """Spearman's rho (average ranks for ties) with a two-sided permutation p-value."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("a and b must be 1-D and of equal length")
    if len(a) < 3:
        raise ValueError("need at least 3 pairs")
    ra, rb = rankdata(a), rankdata(b)
    rho = float(_spearman(ra, rb))
    rng = np.random.default_rng(seed)
    perms = rng.permuted(np.tile(rb, (permutations, 1)), axis=1)
    null = _spearman(ra, perms)
    hits = int(np.sum(np.abs(null) >= abs(rho) - 1e-12))
    return TestResult(rho, (hits + 1) / (permutations + 1), len(a))


def _signed_rank_counts(doubled_ranks: np.ndarray) -> np.ndarray:
    """Number of sign assignments reaching each value of 2*W+ (subset-sum DP)."""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in doubled_ranks:
        r = int(r)
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(x, y, two_sided: bool = True) -> TestResult:
    """Wilcoxon signed-rank test for paired samples.

    The statistic is W+, the rank sum of positive differences x - y (zero
    differences dropped, average ranks for ties). Exact p-value for up to
    12 non-zero differences, otherwise a tie-corrected normal approximation
    with continuity correction. One-sided tests the alternative x > y.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be paired 1-D samples")
    d = x - y
    d = d[d != 0]
    n = len(d)
    if n == 0:
        return TestResult(0.0, 1.0, 0)
    if n < 5:
        raise ValueError(f"need at least 5 non-zero differences, got {n}")
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())

    if n <= EXACT_WILCOXON_MAX_N:
        doubled = np.rint(2 * ranks).astype(int)
        counts = _signed_rank_counts(doubled)
        probs = counts / counts.sum()
        k = int(round(2 * w_plus))
        upper = float(probs[k:].sum())
        lower = float(probs[: k + 1].sum())
        p = min(1.0, 2 * min(upper, lower)) if two_sided else upper
        return TestResult(w_plus, p, n)

    mean = n * (n + 1) / 4
    _, tie_counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24 - float(np.sum(tie_counts**3 - tie_counts)) / 48
    if var <= 0:
        return TestResult(w_plus, 1.0, n)
    sd = math.sqrt(var)
    if two_sided:
        z = max(abs(w_plus - mean) - 0.5, 0.0) / sd
        p = math.erfc(z / math.sqrt(2))
    else:
        z = (w_plus - mean - 0.5) / sd
        p = 0.5 * math.erfc(z / math.sqrt(2))
    return TestResult(w_plus, min(1.0, p), n)


def fdr_adjust(p: Sequence[float], method: str = "bh") -> list[float]:
    """Benjamini-Hochberg step-up adjusted p-values, aligned with the input.

    ``method="by"`` applies the Benjamini-Yekutieli harmonic-sum inflation.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError("p must be 1-D")
    if np.any((p < 0) | (p > 1) | ~np.isfinite(p)):
        raise ValueError("p-values must lie in [0, 1]")
    m = len(p)
    if m == 0:
        return []
    if method == "bh":
        factor = 1.0
    elif method == "by":
        factor = float(np.sum(1.0 / np.arange(1, m + 1)))
    else:
        raise ValueError(f"unknown FDR method {method!r}")
    order = np.argsort(p, kind="stable")
    scaled = p[order] * m * factor / np.arange(1, m + 1)
    adjusted_sorted = np.minimum(1.0, np.minimum.accumulate(scaled[::-1])[::-1])
    out = np.empty(m)
    out[order] = adjusted_sorted
    return out.tolist()


@dataclass(frozen=True)
class GroupDiffRow:
    variable: str
    median_a: float
    median_b: float
    p_raw: float
    p_fdr: float


def rank_sum_p(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sided Mann-Whitney p-value; 1 when the pooled values are all equal."""
    pooled = np.concatenate([a, b])
    if np.all(pooled == pooled[0]):
        return 1.0
    return float(mannwhitneyu(a, b, alternative="two-sided", method="asymptotic").pvalue)


def group_diff_report(
    features, names: Sequence[str], mask_a, mask_b, method: str = "bh"
) -> list[GroupDiffRow]:
    """Per-column rank-sum test between two row groups, FDR-adjusted across columns.

    Rows are sorted by adjusted p-value, then by raw p-value, then by name.
    """
    F = np.asarray(features, dtype=float)
    mask_a = np.asarray(mask_a, dtype=bool)
    mask_b = np.asarray(mask_b, dtype=bool)
    if F.ndim != 2 or F.shape[1] != len(names):
        raise ValueError("features must be (n, len(names))")
    if not mask_a.any() or not mask_b.any():
        raise ValueError("both groups must be non-empty")
    A, B = F[mask_a], F[mask_b]
    raw = [rank_sum_p(A[:, j], B[:, j]) for j in range(F.shape[1])]
    adj = fdr_adjust(raw, method)
    rows = [
        GroupDiffRow(name, float(np.median(A[:, j])), float(np.median(B[:, j])), raw[j], adj[j])
        for j, name in enumerate(names)
    ]
    rows.sort(key=lambda r: (r.p_fdr, r.p_raw, r.variable))
    return rows


def format_group_diff(rows: Sequence[GroupDiffRow], label_a: str = "a", label_b: str = "b") -> str:
    width = max([len("variable")] + [len(r.variable) for r in rows])
    lines = [f"{'variable':<{width}}  {'median_' + label_a:>12}  {'median_' + label_b:>12}  {'p_raw':>10}  {'p_fdr':>10}"]
    for r in rows:
        lines.append(
            f"{r.variable:<{width}}  {r.median_a:>12.4f}  {r.median_b:>12.4f}  {r.p_raw:>10.3g}  {r.p_fdr:>10.3g}"
        )
    return "\n".join(lines) + "\n"
