import csv
import json

import pytest

from rumorlens.cli import main
from rumorlens.lexicon import CueGroup, default_lexicon, load_lexicon


def run(*argv) -> int:
    return main([str(a) for a in argv])


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory):
    """One small synth corpus pushed through the standalone stages."""
    d = tmp_path_factory.mktemp("cli")
    assert run("synth", "--seed", 4, "--n-claims", 12, "--out", d / "corpus.jsonl") == 0
    assert run("certainty", "fit", "--corpus", d / "corpus.jsonl", "--out", d / "model.json") == 0
    assert run("trends", "--corpus", d / "corpus.jsonl", "--model", d / "model.json", "--out", d / "trends.csv") == 0
    return d


def test_parse_round_trips(artifacts, capsys):
    out = artifacts / "parsed.jsonl"
    assert run("parse", "--in", artifacts / "corpus.jsonl", "--out", out) == 0
    assert out.read_bytes() == (artifacts / "corpus.jsonl").read_bytes()
    assert "12 claims" in capsys.readouterr().out


def test_match_and_features(artifacts):
    assert run("match", "--corpus", artifacts / "corpus.jsonl", "--out", artifacts / "match.csv") == 0
    rows = read_rows(artifacts / "match.csv")
    assert rows and all(int(r["total"]) == sum(int(r[g.value]) for g in CueGroup) for r in rows)
    assert run("features", "--corpus", artifacts / "corpus.jsonl", "--out", artifacts / "features.csv") == 0
    assert len(read_rows(artifacts / "features.csv")) == len(rows)


def test_certainty_predict_and_eval(artifacts):
    c = artifacts / "corpus.jsonl"
    assert run("certainty", "predict", "--corpus", c, "--model", artifacts / "model.json", "--out", artifacts / "pred.csv") == 0
    scores = [float(r["certainty"]) for r in read_rows(artifacts / "pred.csv")]
    assert all(0.0 < s < 1.0 for s in scores)
    assert run("certainty", "eval", "--corpus", c, "--seed", 0, "--folds", 5, "--out", artifacts / "cv.json") == 0
    report = json.loads((artifacts / "cv.json").read_text())
    assert report["folds"] == 5 and report["rmse_mean"] > 0


def test_trends_matrix_has_all_columns(artifacts):
    rows = read_rows(artifacts / "trends.csv")
    assert {"KCR_Reset", "DCR_Delta", "CRT_RMSD_f", "FCR_Reset"} <= set(rows[0])


@pytest.mark.parametrize("task,features,n", [("res", "cue", 25), ("val", "cert", 10)])
def test_classify_report(artifacts, task, features, n):
    report = artifacts / f"{task}_{features}.json"
    code = run(
        "classify", "--in", artifacts / "trends.csv", "--task", task, "--features", features,
        "--folds", 3, "--seed", 1, "--rounds", 10, "--report", report,
    )
    assert code == 0
    data = json.loads(report.read_text())
    assert data["n_features"] == n
    for key in ("wgt_f1", "wgt_precision", "accuracy", "bl_accuracy"):
        assert 0.0 <= data[key] <= 1.0


def test_stats_writes_sorted_table(artifacts, capsys):
    assert run("stats", "--in", artifacts / "trends.csv", "--compare", "res", "--out", artifacts / "s.csv") == 0
    rows = read_rows(artifacts / "s.csv")
    ps = [float(r["p_fdr"]) for r in rows]
    assert ps == sorted(ps)
    assert "KCR" in capsys.readouterr().out


def test_plot_and_unknown_claim(artifacts, capsys):
    svg = artifacts / "p.svg"
    corpus = artifacts / "corpus.jsonl"
    claim_id = json.loads(corpus.read_text().splitlines()[0])["claim_id"]
    assert run("plot", "--corpus", corpus, "--claim", claim_id, "--model", artifacts / "model.json", "--out", svg) == 0
    assert svg.exists() and svg.with_suffix(".csv").exists()
    assert run("plot", "--corpus", corpus, "--claim", "nope", "--model", artifacts / "model.json", "--out", svg) == 1
    assert "unknown claim" in capsys.readouterr().err


def test_extend_lexicon(tmp_path):
    seed = default_lexicon()
    cue = sorted(seed.groups[CueGroup.KNOWLEDGE])[0]
    emb = tmp_path / "emb.txt"
    emb.write_text(f"3 2\n{cue} 1 0\nzyzzyva 0.99 0.1\nother 0 1\n")
    out = tmp_path / "lex.txt"
    assert run("extend-lexicon", "--embeddings", emb, "--k", 1, "--out", out) == 0
    assert "zyzzyva" in load_lexicon(out).groups[CueGroup.KNOWLEDGE]


def test_config_supplies_options_and_flags_win(artifacts, tmp_path):
    cfg = tmp_path / "rl.toml"
    cfg.write_text(
        "[classify]\n"
        f'input = "{artifacts / "trends.csv"}"\n'
        'task = "res"\nfeatures = "cue"\nfolds = 3\nseed = 2\nrounds = 5\n'
        f'report = "{tmp_path / "from_config.json"}"\n'
    )
    assert run("classify", "--config", cfg) == 0
    data = json.loads((tmp_path / "from_config.json").read_text())
    assert (len(data["folds"]), data["seed"], data["task"]) == (3, 2, "RES")
    assert run("classify", "--config", cfg, "--seed", 9, "--report", tmp_path / "flag.json") == 0
    assert json.loads((tmp_path / "flag.json").read_text())["seed"] == 9


def test_config_rejects_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[stats]\nbogus = 1\n")
    assert run("stats", "--config", cfg, "--in", "x.csv") == 2
    assert "bogus" in capsys.readouterr().err


def test_synth_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "synth.toml"
    cfg.write_text("[synth]\nseed = 3\nn_claims = 5\n")
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert run("synth", "--config", cfg, "--out", a) == 0
    assert run("synth", "--config", cfg, "--n-claims", 6, "--out", b) == 0
    claims = lambda p: {json.loads(line)["claim_id"] for line in p.read_text().splitlines()}  # noqa: E731
    assert (len(claims(a)), len(claims(b))) == (5, 6)


def pipeline(workdir, *extra) -> int:
    return run("pipeline", "--seed", 5, "--folds", 3, "--rounds", 10, "--workdir", workdir, *extra)


def test_pipeline_smoke_and_byte_identical_rerun(tmp_path):
    assert pipeline(tmp_path / "a") == 0
    assert pipeline(tmp_path / "b") == 0
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    for key in ("classification", "certainty_cv", "top_discriminators", "artifacts"):
        assert key in report
    assert set(report["classification"]) == {"res_cue", "res_cert", "val_cue", "val_cert"}
    for name in report["artifacts"].values():
        assert (tmp_path / "a" / name).exists()
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_pipeline_extension_without_embeddings_names_stage(tmp_path, capsys):
    assert pipeline(tmp_path, "--extend") == 1
    err = capsys.readouterr().err
    assert "extend-lexicon" in err and "embeddings" in err
    assert pipeline(tmp_path, "--extend", "--embeddings", tmp_path / "missing.txt") == 1
    assert "extend-lexicon" in capsys.readouterr().err


def test_pipeline_bad_corpus_names_parse_stage(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{not json\n")
    assert pipeline(tmp_path / "w", "--corpus", bad) == 1
    assert "stage 'parse'" in capsys.readouterr().err
