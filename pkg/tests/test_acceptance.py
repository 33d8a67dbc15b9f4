"""Acceptance criteria 1-11, one test each, one PASS/FAIL line each.

Lines are printed as they run (visible with ``-s``) and repeated in the
"acceptance criteria" section of the terminal summary.
"""

import json
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from oracles import GLM_W, GLM_X, GLM_Y, bh_by_hand, is_lattice_local_max, lattice_search, wilcoxon_enumeration
from rumorlens.certainty import aggregate_certainty, evaluate_glm_cv, fit_glm
from rumorlens.classify import EnsembleConfig, resample, run_task, train_adaboost
from rumorlens.cli import annotated_matrix, feature_vectors, fit_certainty_model, group_diff, main
from rumorlens.features import cue_ratios
from rumorlens.lexicon import default_lexicon, match_cues
from rumorlens.stats import fdr_adjust, spearman_rho, wilcoxon_signed_rank
from rumorlens.synth import SynthConfig, generate
from rumorlens.trends import series_discontinuities

LEX = default_lexicon()
SEEDS = range(5)


def report(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[str(n)] = line
    print(line)


def test_criterion_01_synth_res_val_beat_baseline():
    t0 = time.perf_counter()
    res, val = [], []
    for seed in SEEDS:
        corpus = generate(SynthConfig(seed=seed, n_claims=40, fcr_jump=0.3, dcr_boost_false=0.3), LEX)
        model = fit_certainty_model(corpus, LEX)
        vectors = feature_vectors(corpus, model, LEX, 600.0)
        config = EnsembleConfig(seed=seed)
        r, _ = run_task(vectors, "res", "cue", config, folds=10)
        v, _ = run_task(vectors, "val", "cert", config, folds=10)
        res.append(r.accuracy - r.baseline_accuracy)
        val.append(v.accuracy - v.baseline_accuracy)
    elapsed = time.perf_counter() - t0
    ok = np.mean(res) >= 0.05 and np.mean(val) >= 0.05 and elapsed < 60
    report(1, ok, f"RES acc-BL {np.mean(res):+.3f}, VAL acc-BL {np.mean(val):+.3f} (need >= 0.05), {elapsed:.1f}s")
    assert ok


def test_criterion_02_glm_matches_grid_search():
    t0 = time.perf_counter()
    m = fit_glm(GLM_X, GLM_Y, GLM_W)
    beta = np.array([m.intercept, *m.coef])
    grid = lattice_search(GLM_X, GLM_Y, GLM_W, step=0.05)
    gap = float(np.max(np.abs(beta - grid)))
    local = is_lattice_local_max(grid, GLM_X, GLM_Y, GLM_W, step=0.05)
    elapsed = time.perf_counter() - t0
    ok = gap <= 0.05 + 1e-9 and local and elapsed < 30
    report(2, ok, f"max |IRLS - grid| = {gap:.3f} (step 0.05), grid point is a lattice local max: {local}, {elapsed:.1f}s")
    assert ok


def test_criterion_03_glm_cv_beats_mean_baseline():
    wins = 0
    for seed in range(10):
        corpus = generate(SynthConfig(seed=seed, certainty_link=0.8), LEX)
        X, y = annotated_matrix(corpus, LEX)
        cv = evaluate_glm_cv(X, y, folds=10, seed=seed)
        wins += cv.rmse_mean < cv.baseline_rmse
    report(3, wins >= 9, f"GLM RMSE < baseline RMSE in {wins}/10 seeds (need >= 9)")
    assert wins >= 9


def test_criterion_04_trend_feature_analytics():
    failures = []
    for n in (2, 3, 7, 20):
        if not np.allclose(series_discontinuities(np.full(n, 0.37)), 0.0, atol=1e-12):
            failures.append(f"constant n={n}")
        a, b = 0.2, -0.05
        out = series_discontinuities(a + b * np.arange(1, n + 1))
        if not np.allclose(out[:, 2:], 0.0, atol=1e-9):
            failures.append(f"collinear rmsd n={n}")
        # reset is l_f(i+1) - l_p(i-1) = 2b wherever both segments exist, 0 at the ends
        expected = np.array([2 * b if 1 < i < n else 0.0 for i in range(1, n + 1)])
        if not np.allclose(out[:, 1], expected, atol=1e-9):
            failures.append(f"collinear reset n={n}")
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 40))
        y = rng.normal(size=n)
        c, a = rng.normal() * 10, rng.uniform(-5, 5)
        base = series_discontinuities(y)
        shifted = series_discontinuities(y + c)
        scaled = series_discontinuities(a * y)
        worst = max(
            worst,
            float(np.max(np.abs(shifted - base))),
            float(np.max(np.abs(scaled[:, :2] - a * base[:, :2]))),
            float(np.max(np.abs(scaled[:, 2:] - abs(a) * base[:, 2:]))),
        )
    ok = not failures and worst <= 1e-9
    report(4, ok, f"closed forms {'ok' if not failures else failures}; max shift/scale error on 1000 series {worst:.1e}")
    assert ok


def test_criterion_05_resampling_arithmetic():
    sizes = []
    for n_major in (92, 93, 150, 1000):
        y = np.array([1] * 46 + [0] * n_major)
        _, yr, _ = resample(np.zeros((len(y), 1)), y, seed=0)
        sizes.append((len(yr), int(yr.sum()), int((yr == 0).sum())))
    y = np.array([1] * 13 + [0] * 26)
    _, yr, idx = resample(np.zeros((39, 1)), y, seed=0)
    small = (len(yr), int(yr.sum()), sorted(idx.tolist()) == list(range(39)))
    ok = all(s == (138, 46, 92) for s in sizes) and small == (39, 13, True)
    report(5, ok, f"(46, N>=92) -> {sorted(set(sizes))}; (13, 26) -> {small[0]} items, unchanged: {small[2]}")
    assert ok


def test_criterion_06_adaboost_monotone():
    # "weighted ensemble training error" read as the exponential-loss bound; 0/1 error checked for the endpoint claim
    bound_violations = endpoint_violations = 0
    for s in range(100):
        rng = np.random.default_rng(s)
        n, d = int(rng.integers(10, 40)), int(rng.integers(2, 5))
        X = rng.normal(size=(n, d))
        y = (X[:, 0] + rng.normal(size=n) > 0).astype(int)
        if len(set(y)) < 2:
            y[0] = 1 - y[0]
        ens = train_adaboost(X, y, EnsembleConfig(rounds=20))
        ys = np.where(y == ens.classes[1], 1, -1)
        staged = list(ens.staged_decision_function(X))
        bound = [float(np.mean(np.exp(-ys * sc))) for sc in staged]
        bound_violations += any(b2 > b1 + 1e-12 for b1, b2 in zip(bound, bound[1:]))
        first = np.mean(ens.learners[0].predict(X) != ys)
        final = np.mean(ens.labels_from_scores(staged[-1]) != y)
        endpoint_violations += final > first + 1e-12
    ok = bound_violations == 0 and endpoint_violations == 0
    report(6, ok, f"bound increases in {bound_violations}/100 datasets; ensemble worse than first learner in {endpoint_violations}/100")
    assert ok


def test_criterion_07_certainty_worked_example():
    score = aggregate_certainty(["certain"] * 4 + ["somewhat-certain"])
    report(7, score == 0.9, f"certain x4 + somewhat-certain x1 -> {score!r}")
    assert score == 0.9


def test_criterion_08_cue_matching_worked_example():
    text = (
        "#BREAKING: @nswpolice say a photo circulating of arrest of man near "
        "#MartinPlace is NOT related to the police operation #sydneysiege"
    )
    r = cue_ratios(match_cues(text, LEX))
    got = (r.kcr, r.rcr, r.bcr, r.dcr)
    ok = got == (0.0, 2 / 3, 0.0, 1 / 3)
    report(8, ok, f"KCR {r.kcr:.3f} RCR {r.rcr:.3f} BCR {r.bcr:.3f} DCR {r.dcr:.3f}")
    assert ok


def _criterion_09_parts():
    rng = np.random.default_rng(9)
    checked = mismatches = 0
    while checked < 200:
        # exact branch needs >= 5 non-zero differences; rounding plants ties
        n = int(rng.integers(5, 11))
        x, y = np.round(rng.normal(size=n), 1), np.round(rng.normal(size=n), 1)
        if np.count_nonzero(x - y) < 5:
            continue
        checked += 1
        mismatches += abs(wilcoxon_signed_rank(x, y).p_value - wilcoxon_enumeration(x, y)) > 1e-12
    p = [0.01, 0.02, 0.03, 0.04]
    bh = fdr_adjust(p)
    bh_ok = np.allclose(bh, bh_by_hand(p)) and np.allclose(bh, [0.04] * 4)
    rho = spearman_rho([1, 2, 3, 4, 5], [2, 1, 4, 3, 5]).statistic
    return checked, mismatches, bh_ok, rho


@pytest.mark.xfail(
    strict=True,
    reason="the worked Spearman example states 0.7; hand ranking gives 1 - 6*4/120 = 0.8 (see ledger)",
)
def test_criterion_09_stats_oracles():
    checked, mismatches, bh_ok, rho = _criterion_09_parts()
    ok = mismatches == 0 and bh_ok and np.isclose(rho, 0.7)
    report(
        9,
        ok,
        f"Wilcoxon exact vs enumeration: {mismatches}/{checked} mismatches; BH worked example ok: {bh_ok}; "
        f"Spearman worked example rho = {rho:.3f} (stated 0.7)",
    )
    assert ok


def test_criterion_09_parts_that_hold():
    checked, mismatches, bh_ok, rho = _criterion_09_parts()
    assert checked == 200 and mismatches == 0 and bh_ok
    assert rho == pytest.approx(0.8)


def test_criterion_10_pipeline_determinism(tmp_path):
    runs = []
    for name in ("a", "b"):
        work = tmp_path / name
        assert main(["pipeline", "--seed", "11", "--workdir", str(work), "--plot-claims", "claim000", "claim001"]) == 0
        runs.append(work)
    report_json = json.loads((runs[0] / "report.json").read_text())
    compared = ["report.json"] + [v for k, v in report_json["artifacts"].items() if k.endswith("_csv")]
    same = all((runs[0] / f).read_bytes() == (runs[1] / f).read_bytes() for f in compared)
    ok = same and len(compared) == 3
    report(10, ok, f"byte-identical across two runs: {', '.join(compared)}")
    assert ok


KR_RESET = {"KCR_Reset", "RCR_Reset", "FCR_Reset"}
DCR_FAMILY = {"DCR", "DCR_Delta", "DCR_Reset", "DCR_RMSD_p", "DCR_RMSD_f"}


def test_criterion_11_directional_effects():
    res_hits = strict_hits = val_hits = 0
    for seed in SEEDS:
        corpus = generate(SynthConfig(seed=seed), LEX)
        vectors = feature_vectors(corpus, fit_certainty_model(corpus, LEX), LEX, 600.0)
        res_rows, _ = group_diff(vectors, "res", "bh")
        val_rows, _ = group_diff(vectors, "val", "bh")
        top3 = {r.variable for r in res_rows[:3]}
        # FCR_Reset is exactly KCR_Reset + RCR_Reset (reset is linear in the series)
        res_hits += bool(top3 & KR_RESET)
        strict_hits += bool(top3 & {"KCR_Reset", "RCR_Reset"})
        best = val_rows[0].p_fdr
        val_hits += any(r.variable in DCR_FAMILY and r.p_fdr <= best for r in val_rows)
    ok = res_hits == len(SEEDS) and val_hits == len(SEEDS)
    report(
        11,
        ok,
        f"K/R reset feature in RES top 3: {res_hits}/5 (KCR/RCR alone: {strict_hits}/5); "
        f"DCR family at the smallest VAL adjusted p: {val_hits}/5",
    )
    assert ok
