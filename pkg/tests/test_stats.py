import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rumorlens.stats import fdr_adjust, format_group_diff, group_diff_report, spearman_rho, wilcoxon_signed_rank

from oracles import bh_by_hand, spearman_by_formula, wilcoxon_enumeration


def test_spearman_examples():
    # sum d^2 = 4, so rho = 1 - 24/120 = 0.8 (see the ledger on the 0.7 figure)
    assert spearman_by_formula([1, 2, 3, 4, 5], [2, 1, 4, 3, 5]) == pytest.approx(0.8)
    assert spearman_rho([1, 2, 3, 4, 5], [2, 1, 4, 3, 5]).statistic == pytest.approx(0.8)
    assert spearman_rho([1, 2, 3, 4, 5], [3, 1, 2, 4, 5]).statistic == pytest.approx(0.7)
    assert spearman_rho([1, 2, 3, 4], [10, 20, 30, 40]).statistic == pytest.approx(1.0)
    assert spearman_rho([1, 2, 3, 4], [4, 3, 2, 1]).statistic == pytest.approx(-1.0)


def test_spearman_errors_and_pvalue():
    with pytest.raises(ValueError):
        spearman_rho([1, 2, 3], [1, 2])
    r = spearman_rho(np.arange(30), np.arange(30) ** 2, permutations=2000, seed=1)
    assert r.p_value == pytest.approx(1 / 2001)
    assert spearman_rho([1, 2, 3, 4, 5], [2, 1, 4, 3, 5], seed=4) == spearman_rho([1, 2, 3, 4, 5], [2, 1, 4, 3, 5], seed=4)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-1000, 1000), min_size=3, max_size=15, unique=True), st.integers(0, 10**6))
def test_spearman_monotone_invariance(a, seed):
    rng = np.random.default_rng(seed)
    b = rng.permutation(len(a)).astype(float)
    base = spearman_rho(a, b, permutations=200).statistic
    x = np.asarray(a, dtype=float)
    assert spearman_rho(x**3 + x, b**3 - 7, permutations=200).statistic == pytest.approx(base)
    assert base == pytest.approx(spearman_by_formula(a, list(b)))


def test_wilcoxon_conventions():
    assert wilcoxon_signed_rank([1, 2, 3], [1, 2, 3]).p_value == 1.0
    r = wilcoxon_signed_rank(np.arange(1, 7) + 1.0, np.zeros(6))
    assert r.p_value == pytest.approx(2 / 64)
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([1, 2, 3, 4], [0, 0, 0, 0])


def test_wilcoxon_matches_enumeration_small_n():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(5, 11))
        x = np.round(rng.normal(size=n), 1)
        y = np.round(rng.normal(size=n), 1)
        if np.count_nonzero(x - y) < 5:
            continue
        assert wilcoxon_signed_rank(x, y).p_value == pytest.approx(wilcoxon_enumeration(x, y), abs=1e-12)


def test_wilcoxon_swap_symmetry_and_one_sided():
    rng = np.random.default_rng(2)
    x, y = rng.normal(size=20), rng.normal(size=20)
    assert wilcoxon_signed_rank(x, y).p_value == pytest.approx(wilcoxon_signed_rank(y, x).p_value)
    up = wilcoxon_signed_rank(x + 3, y, two_sided=False).p_value
    down = wilcoxon_signed_rank(x - 3, y, two_sided=False).p_value
    assert up < 0.01 < 0.99 < down


def test_wilcoxon_normal_branch_against_scipy():
    from scipy.stats import wilcoxon

    rng = np.random.default_rng(5)
    x, y = rng.normal(size=40), rng.normal(0.3, 1, size=40)
    ref = wilcoxon(x, y, correction=True, method="approx").pvalue
    assert wilcoxon_signed_rank(x, y).p_value == pytest.approx(ref, rel=1e-9)


def test_bh_examples():
    assert fdr_adjust([0.01, 0.02, 0.03, 0.04]) == pytest.approx([0.04] * 4)
    assert fdr_adjust([0.3]) == [0.3]
    assert fdr_adjust([0.2, 0.2, 0.2]) == pytest.approx([0.2] * 3)
    assert fdr_adjust([]) == []
    with pytest.raises(ValueError):
        fdr_adjust([1.2])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=30))
def test_bh_properties(p):
    adj = fdr_adjust(p)
    assert adj == pytest.approx(bh_by_hand(p))
    assert all(a >= q - 1e-15 for a, q in zip(adj, p))
    order = np.argsort(p, kind="stable")
    sorted_adj = np.asarray(adj)[order]
    assert np.all(np.diff(sorted_adj) >= -1e-15)


def test_by_variant_against_statsmodels():
    from statsmodels.stats.multitest import multipletests

    p = [0.001, 0.01, 0.02, 0.2, 0.5, 0.04]
    ref = multipletests(p, method="fdr_by")[1]
    assert fdr_adjust(p, method="by") == pytest.approx(list(ref))
    assert fdr_adjust(p) == pytest.approx(list(multipletests(p, method="fdr_bh")[1]))


def test_group_diff_identical_groups():
    F = np.random.default_rng(0).normal(size=(10, 3))
    rows = group_diff_report(np.vstack([F, F]), ["a", "b", "c"], [True] * 10 + [False] * 10, [False] * 10 + [True] * 10)
    assert len(rows) == 3
    assert all(r.p_fdr == pytest.approx(1.0) for r in rows)


def test_group_diff_planted_shift_ranks_first():
    rng = np.random.default_rng(1)
    F = rng.normal(size=(80, 5))
    mask = np.arange(80) < 30
    F[mask, 3] += 1.5
    rows = group_diff_report(F, list("vwxyz"), mask, ~mask)
    assert rows[0].variable == "y"
    assert rows[0].median_a > rows[0].median_b
    text = format_group_diff(rows, "a", "b")
    assert text.splitlines()[1].startswith("y")


def test_group_diff_constant_column_p_one():
    F = np.zeros((6, 1))
    rows = group_diff_report(F, ["k"], [True] * 3 + [False] * 3, [False] * 3 + [True] * 3)
    assert rows[0].p_raw == 1.0
