"""Command-line interface: one subcommand per pipeline stage plus ``pipeline``.

Every option can also come from a TOML file given with ``--config``. A file
whose top level holds only scalars applies to whichever command is run;
otherwise the table named after the command is used (``[classify]``,
``[certainty.fit]``, ``[pipeline]``). Flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from rumorlens import __version__
from rumorlens.certainty import (
    GlmModel,
    aggregate_certainty,
    evaluate_glm_cv,
    fit_glm,
    observation_weights,
)
from rumorlens.classify import EnsembleConfig, run_task
from rumorlens.corpus import Corpus, index_tweets, parse_corpus, write_corpus
from rumorlens.features import (
    BIN_WIDTH,
    DENSITY_WINDOW,
    FEATURE_DUMP_HEADER,
    claim_ratios,
    feature_dump_rows,
)
from rumorlens.io import read_csv, write_csv, write_json
from rumorlens.lexicon import (
    GROUPS,
    Lexicon,
    default_lexicon,
    extend_lexicon,
    load_embeddings,
    load_lexicon,
    match_cues,
    save_lexicon,
)
from rumorlens.plot import timeline_bins, write_timeline
from rumorlens.stats import format_group_diff, group_diff_report
from rumorlens.synth import generate, load_synth_config
from rumorlens.trends import EXPORT_COLUMNS, MATRIX_ID_COLUMNS, build_feature_vectors, matrix_rows, vectors_from_rows

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}' failed: {message}")
        self.stage = stage


# ---------------------------------------------------------------- helpers


def _lexicon(path: str | None) -> Lexicon:
    return load_lexicon(path) if path else default_lexicon()


def _corpus(path: str, keep_unresolved: bool = False) -> Corpus:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        corpus = parse_corpus(path, keep_unresolved=keep_unresolved)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return corpus


def annotated_matrix(corpus: Corpus, lexicon: Lexicon) -> tuple[np.ndarray, np.ndarray]:
    """Cue ratios and aggregated certainty for every tweet with a usable label set."""
    X, y = [], []
    for claim in corpus.claims:
        for (_, tweet), ratios in zip(index_tweets(claim), claim_ratios(claim, lexicon)):
            if not tweet.certainty_labels:
                continue
            score = aggregate_certainty(tweet.certainty_labels)
            if score is not None:
                X.append(ratios.as_array())
                y.append(score)
    return np.array(X).reshape(-1, 4), np.array(y)


def fit_certainty_model(corpus: Corpus, lexicon: Lexicon) -> GlmModel:
    X, y = annotated_matrix(corpus, lexicon)
    if len(y) < 6:
        raise ValueError(f"only {len(y)} annotated tweets; need at least 6 to fit the certainty model")
    return fit_glm(X, y, observation_weights(X, y))


def feature_vectors(corpus: Corpus, model: GlmModel, lexicon: Lexicon, window: float):
    return [v for claim in corpus.claims for v in build_feature_vectors(claim, model, lexicon, window)]


def write_matrix(vectors, path: str | Path) -> None:
    write_csv(path, MATRIX_ID_COLUMNS + EXPORT_COLUMNS, matrix_rows(vectors))


def group_diff(vectors, compare: str, method: str):
    if compare == "res":
        rows = list(vectors)
        a = np.array([v.is_resolving for v in rows])
        labels = ("resolving", "other")
    elif compare == "val":
        rows = [v for v in vectors if v.is_resolving and v.resolution_value is not None]
        a = np.array([not v.resolution_value for v in rows])
        labels = ("false", "true")
    else:
        raise ValueError(f"unknown comparison {compare!r}")
    F = np.array([[v.values[c] for c in EXPORT_COLUMNS] for v in rows])
    return group_diff_report(F, EXPORT_COLUMNS, a, ~a, method=method), labels


def write_group_diff(result, path: str | Path) -> None:
    write_csv(
        path,
        ["variable", "median_a", "median_b", "p_raw", "p_fdr"],
        ([r.variable, r.median_a, r.median_b, r.p_raw, r.p_fdr] for r in result),
    )


# ---------------------------------------------------------------- commands


def cmd_synth(args) -> int:
    overrides = {
        "seed": args.seed,
        "n_claims": args.n_claims,
        "fcr_jump": args.fcr_jump,
        "dcr_boost_false": args.dcr_boost_false,
        "certainty_link": args.certainty_link,
        "noise": args.noise,
        "cue_rate": args.cue_rate,
    }
    config = load_synth_config(args.config, **overrides)
    corpus = generate(config, _lexicon(args.lexicon))
    write_corpus(corpus, args.out)
    print(f"wrote {len(corpus.claims)} claims to {args.out}")
    return 0


def cmd_parse(args) -> int:
    corpus = _corpus(args.input, args.keep_unresolved)
    n_tweets = sum(len(c) for c in corpus.claims)
    if args.out:
        write_corpus(corpus, args.out)
    print(f"{len(corpus.claims)} claims, {n_tweets} tweets, {len(corpus.resolved_claims)} resolved")
    return 0


def cmd_extend_lexicon(args) -> int:
    if not args.embeddings:
        raise ValueError("--embeddings is required to extend the lexicon")
    extended = extend_lexicon(_lexicon(args.lexicon), load_embeddings(args.embeddings), k=args.k)
    save_lexicon(extended, args.out)
    print(f"lexicon size {extended.size()} written to {args.out}")
    return 0


def cmd_match(args) -> int:
    corpus = _corpus(args.corpus, args.keep_unresolved)
    lexicon = _lexicon(args.lexicon)
    header = ["claim_id", "tweet_id", "rank"] + [g.value for g in GROUPS] + ["total"]
    rows = []
    for claim in corpus.claims:
        for rank, tweet in index_tweets(claim):
            counts = match_cues(tweet.text, lexicon)
            rows.append([claim.id, tweet.id, rank] + [counts[g] for g in GROUPS] + [counts.total])
    write_csv(args.out, header, rows)
    return 0


def cmd_features(args) -> int:
    corpus = _corpus(args.corpus, args.keep_unresolved)
    write_csv(args.out, FEATURE_DUMP_HEADER, feature_dump_rows(corpus.claims, _lexicon(args.lexicon), args.window))
    return 0


def cmd_certainty_fit(args) -> int:
    model = fit_certainty_model(_corpus(args.corpus), _lexicon(args.lexicon))
    model.save(args.out)
    print(f"intercept {model.intercept:.4f} coef {[round(c, 4) for c in model.coef]} converged {model.converged}")
    return 0


def cmd_certainty_predict(args) -> int:
    corpus = _corpus(args.corpus, args.keep_unresolved)
    lexicon = _lexicon(args.lexicon)
    model = GlmModel.load(args.model)
    rows = []
    for claim in corpus.claims:
        ratios = claim_ratios(claim, lexicon)
        scores = model.predict(np.array([r.as_array() for r in ratios]))
        for (rank, tweet), s in zip(index_tweets(claim), scores):
            rows.append([claim.id, tweet.id, rank, float(s)])
    write_csv(args.out, ["claim_id", "tweet_id", "rank", "certainty"], rows)
    return 0


def cmd_certainty_eval(args) -> int:
    X, y = annotated_matrix(_corpus(args.corpus), _lexicon(args.lexicon))
    report = evaluate_glm_cv(X, y, folds=args.folds, seed=args.seed).as_dict()
    report.update({"n": int(len(y)), "folds": args.folds, "seed": args.seed})
    write_json(args.out, report)
    print(f"rmse {report['rmse_mean']:.4f} (max {report['rmse_max']:.4f}) baseline {report['baseline_rmse']:.4f}")
    return 0


def cmd_trends(args) -> int:
    corpus = _corpus(args.corpus, args.keep_unresolved)
    model = GlmModel.load(args.model)
    write_matrix(feature_vectors(corpus, model, _lexicon(args.lexicon), args.window), args.out)
    return 0


def cmd_classify(args) -> int:
    vectors = vectors_from_rows(read_csv(args.input))
    config = EnsembleConfig(rounds=args.rounds, min_leaf=args.min_leaf, min_parent=args.min_parent, seed=args.seed)
    report, summary = run_task(vectors, args.task, args.features, config, folds=args.folds)
    write_json(args.report, summary)
    print(
        f"{summary['task']}/{summary['feature_set']}: acc {report.accuracy:.3f} "
        f"bl {report.baseline_accuracy:.3f} wgt_f1 {report.weighted_f1:.3f}"
    )
    return 0


def cmd_stats(args) -> int:
    vectors = vectors_from_rows(read_csv(args.input))
    rows, labels = group_diff(vectors, args.compare, "by" if args.by else "bh")
    if args.out:
        write_group_diff(rows, args.out)
    sys.stdout.write(format_group_diff(rows, *labels))
    return 0


def cmd_plot(args) -> int:
    corpus = _corpus(args.corpus)
    try:
        claim = corpus.claim(args.claim)
    except KeyError:
        raise ValueError(f"unknown claim {args.claim!r}") from None
    model = GlmModel.load(args.model) if args.model else None
    bins = timeline_bins(claim, _lexicon(args.lexicon), model, args.source, args.bin_width)
    write_timeline(bins, args.out, args.csv or str(Path(args.out).with_suffix(".csv")), title=claim.id)
    return 0


def cmd_pipeline(args) -> int:
    out = Path(args.workdir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts: dict[str, str] = {}

    def stage(name: str, fn: Callable):
        try:
            return fn()
        except StageError:
            raise
        except Exception as exc:  # every failure is reported with its stage name
            raise StageError(name, str(exc)) from exc

    def record(key: str, name: str) -> Path:
        artifacts[key] = name
        return out / name

    if args.corpus:
        corpus = stage("parse", lambda: _corpus(args.corpus, args.keep_unresolved))
    else:
        corpus = stage("synth", lambda: generate(load_synth_config(args.synth_config, seed=args.seed)))
    stage("parse", lambda: write_corpus(corpus, record("corpus", "corpus.jsonl")))

    lexicon = stage("lexicon", lambda: _lexicon(args.lexicon))
    if args.extend:
        def _extend():
            if not args.embeddings:
                raise ValueError("lexicon extension requested but no embeddings file given")
            if not Path(args.embeddings).exists():
                raise FileNotFoundError(f"embeddings file not found: {args.embeddings}")
            return extend_lexicon(lexicon, load_embeddings(args.embeddings), k=args.k)

        lexicon = stage("extend-lexicon", _extend)
    stage("extend-lexicon", lambda: save_lexicon(lexicon, record("lexicon", "lexicon.txt")))

    stage(
        "features",
        lambda: write_csv(
            record("features", "features.csv"),
            FEATURE_DUMP_HEADER,
            feature_dump_rows(corpus.claims, lexicon, args.window),
        ),
    )
    model = stage("certainty", lambda: fit_certainty_model(corpus, lexicon))
    stage("certainty", lambda: model.save(record("model", "certainty_model.json")))

    def _cv():
        X, y = annotated_matrix(corpus, lexicon)
        return evaluate_glm_cv(X, y, folds=min(args.folds, len(y)), seed=args.seed).as_dict()

    certainty_cv = stage("certainty", _cv)

    resolved = Corpus(corpus.resolved_claims, corpus.events)
    vectors = stage("trends", lambda: feature_vectors(resolved, model, lexicon, args.window))
    stage("trends", lambda: write_matrix(vectors, record("trends", "trends.csv")))

    config = EnsembleConfig(rounds=args.rounds, min_leaf=args.min_leaf, min_parent=args.min_parent, seed=args.seed)
    classification = {}
    for task, fset in (("res", "cue"), ("res", "cert"), ("val", "cue"), ("val", "cert")):
        _, summary = stage("classify", lambda: run_task(vectors, task, fset, config, folds=args.folds))
        classification[f"{task}_{fset}"] = summary

    stats = {}
    method = "by" if args.by else "bh"
    for compare in ("res", "val"):
        rows, _ = stage("stats", lambda: group_diff(vectors, compare, method))
        stage("stats", lambda: write_group_diff(rows, record(f"stats_{compare}", f"stats_{compare}.csv")))
        stats[compare] = [r.variable for r in rows[:5]]

    plot_ids = args.plot_claims or [c.id for c in resolved.claims[:1]]

    def _plots():
        for cid in plot_ids:
            bins = timeline_bins(resolved.claim(cid), lexicon, model, "predicted", args.bin_width)
            write_timeline(bins, record(f"plot_{cid}", f"plot_{cid}.svg"), out / f"plot_{cid}.csv", title=cid)
            artifacts[f"plot_{cid}_csv"] = f"plot_{cid}.csv"

    stage("plot", _plots)

    report = {
        "version": __version__,
        "seed": args.seed,
        "n_claims": len(resolved.claims),
        "n_tweets": len(vectors),
        "lexicon_size": lexicon.size(),
        "certainty_model": json.loads(model.to_json()),
        "certainty_cv": certainty_cv,
        "classification": classification,
        "top_discriminators": stats,
        "artifacts": artifacts,
    }
    write_json(out / "report.json", report)
    for key, s in classification.items():
        print(f"{key}: acc {s['accuracy']:.3f} bl {s['bl_accuracy']:.3f}")
    print(f"report written to {out / 'report.json'}")
    return 0


# ---------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser, corpus: bool = True, lexicon: bool = True) -> None:
    p.add_argument("--config", help="TOML file with option defaults")
    if corpus:
        p.add_argument("--corpus", required=True, help="corpus JSONL")
        p.add_argument("--keep-unresolved", action="store_true", help="keep claims without a resolving tweet")
    if lexicon:
        p.add_argument("--lexicon", help="lexicon file (default: built-in seed lexicon)")


def _ensemble_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--rounds", type=int, default=40)
    p.add_argument("--min-leaf", type=int, default=2)
    p.add_argument("--min-parent", type=int, default=3)


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="rumorlens", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rumorlens {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    leaves: dict[str, argparse.ArgumentParser] = {}

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--config", help="TOML synth config ([synth] table or flat keys)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--n-claims", type=int)
    p.add_argument("--fcr-jump", type=float)
    p.add_argument("--dcr-boost-false", type=float)
    p.add_argument("--certainty-link", type=float)
    p.add_argument("--noise", type=float)
    p.add_argument("--cue-rate", type=float)
    p.set_defaults(func=cmd_synth)
    leaves["synth"] = p

    p = sub.add_parser("parse", help="validate a corpus and write it normalized")
    p.add_argument("--config")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.add_argument("--keep-unresolved", action="store_true")
    p.set_defaults(func=cmd_parse)
    leaves["parse"] = p

    p = sub.add_parser("extend-lexicon", help="add embedding neighbours of the seed cues")
    _common(p, corpus=False)
    p.add_argument("--embeddings")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extend_lexicon)
    leaves["extend-lexicon"] = p

    p = sub.add_parser("match", help="per-tweet cue counts")
    _common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_match)
    leaves["match"] = p

    p = sub.add_parser("features", help="per-tweet cue ratios and density")
    _common(p)
    p.add_argument("--window", type=float, default=DENSITY_WINDOW)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)
    leaves["features"] = p

    p = sub.add_parser("certainty", help="certainty regression")
    csub = p.add_subparsers(dest="action", required=True)
    q = csub.add_parser("fit")
    _common(q)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_certainty_fit)
    leaves["certainty.fit"] = q
    q = csub.add_parser("predict")
    _common(q)
    q.add_argument("--model", required=True)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_certainty_predict)
    leaves["certainty.predict"] = q
    q = csub.add_parser("eval")
    _common(q)
    q.add_argument("--folds", type=int, default=10)
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_certainty_eval)
    leaves["certainty.eval"] = q

    p = sub.add_parser("trends", help="trend-discontinuity feature matrix")
    _common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--window", type=float, default=DENSITY_WINDOW)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_trends)
    leaves["trends"] = p

    p = sub.add_parser("classify", help="boosted-ensemble RES/VAL evaluation")
    p.add_argument("--config")
    p.add_argument("--in", dest="input", required=True, help="feature matrix CSV from `trends`")
    p.add_argument("--task", choices=("res", "val"), required=True)
    p.add_argument("--features", choices=("cue", "cert"), required=True)
    _ensemble_opts(p)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_classify)
    leaves["classify"] = p

    p = sub.add_parser("stats", help="group-difference table with FDR adjustment")
    p.add_argument("--config")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--compare", choices=("res", "val"), default="res")
    p.add_argument("--by", action="store_true", help="Benjamini-Yekutieli instead of Benjamini-Hochberg")
    p.add_argument("--out", help="CSV output")
    p.set_defaults(func=cmd_stats)
    leaves["stats"] = p

    p = sub.add_parser("plot", help="SVG timeline of one claim plus companion CSV")
    _common(p, corpus=False)
    p.add_argument("--corpus", required=True)
    p.add_argument("--claim", required=True)
    p.add_argument("--model", help="certainty model JSON (needed for --source predicted)")
    p.add_argument("--source", choices=("predicted", "annotated"), default="predicted")
    p.add_argument("--bin-width", type=float, default=BIN_WIDTH)
    p.add_argument("--out", required=True, help="SVG path")
    p.add_argument("--csv", help="CSV path (default: SVG path with .csv)")
    p.set_defaults(func=cmd_plot)
    leaves["plot"] = p

    p = sub.add_parser("pipeline", help="run every stage and write all artifacts")
    p.add_argument("--config")
    p.add_argument("--corpus", help="corpus JSONL (default: generate a synthetic one)")
    p.add_argument("--synth-config", help="synth TOML used when no corpus is given")
    p.add_argument("--keep-unresolved", action="store_true")
    p.add_argument("--lexicon")
    p.add_argument("--extend", action="store_true", help="extend the lexicon from --embeddings")
    p.add_argument("--embeddings")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--window", type=float, default=DENSITY_WINDOW)
    p.add_argument("--bin-width", type=float, default=BIN_WIDTH)
    p.add_argument("--by", action="store_true")
    p.add_argument("--plot-claims", nargs="*", default=None)
    p.add_argument("--workdir", required=True)
    _ensemble_opts(p)
    p.set_defaults(func=cmd_pipeline)
    leaves["pipeline"] = p
    return parser, leaves


def _leaf_name(ns: argparse.Namespace) -> str:
    return f"certainty.{ns.action}" if ns.command == "certainty" else ns.command


def _prescan(argv: Sequence[str]) -> tuple[str | None, str | None]:
    """Subcommand path and --config value, found before argparse runs."""
    positional, config = [], None
    it = iter(argv)
    for tok in it:
        if tok == "--config":
            config = next(it, None)
        elif tok.startswith("--config="):
            config = tok.split("=", 1)[1]
        elif not tok.startswith("-") and len(positional) < 2:
            positional.append(tok)
    if not positional:
        return None, config
    if positional[0] == "certainty" and len(positional) > 1:
        return f"certainty.{positional[1]}", config
    return positional[0], config


def _config_section(path: str, leaf: str) -> dict:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    if not any(isinstance(v, dict) for v in data.values()):
        return data
    node = data
    for part in leaf.split("."):
        node = node.get(part, {}) if isinstance(node, dict) else {}
    return {k: v for k, v in node.items() if not isinstance(v, dict)}


def _apply_config(parser, leaves, argv: Sequence[str]) -> argparse.Namespace:
    leaf, config = _prescan(argv)
    # synth reads its own config through load_synth_config
    if config and leaf in leaves and leaf != "synth":
        sub = leaves[leaf]
        dests = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, value in _config_section(config, leaf).items():
            dest = key.replace("-", "_")
            if dest not in dests or dest in ("help", "config", "func"):
                raise ValueError(f"unknown option {key!r} in config for '{leaf}'")
            dests[dest].required = False  # satisfied by the config file
            defaults[dest] = value
        sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, leaves = build_parser()
    try:
        args = _apply_config(parser, leaves, argv)
    except (OSError, ValueError, tomllib.TOMLDecodeError) as exc:
        print(f"rumorlens: config: {exc}", file=sys.stderr)
        return 2
    leaf = _leaf_name(args)
    try:
        return int(args.func(args) or 0)
    except StageError as exc:
        print(f"rumorlens: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"rumorlens: stage '{leaf}' failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
