"""Command-line pipeline: index, train, query, eval, explain.

One binary, five subcommands, one JSON config plus flag overrides (flags
win). The only environment input is CODETRACE_CONFIG, consulted when
--config is absent. Exit codes: 0 success, 1 runtime failure, 2 usage or
configuration error. Fatal conditions print a single "error: ..." line
to stderr.

Artifacts are plain text, written deterministically: identical inputs,
config and seed reproduce every file byte for byte. The index embeds the
corpus fingerprint and the trainer refuses to run against artifacts
built from a different corpus, as does the query command for a model
trained elsewhere.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ConfigError, PipelineConfig, load_config
from .corpus import (CorpusError, corpus_fingerprint, ingest_corpus,
                     load_manifest, load_queries)
from .evaluation import cross_validate, default_methods
from .features import FeatureFilterError
from .learning import TrainingDivergedError, TrainingData, train
from .pipeline import build_bundle
from .profiles import ProfileError, load_profile
from .retrieval import (FeatureNotFoundError, RetrievalIndex,
                        top_words_for_feature)
from .storage import (StorageError, format_float, format_matrix, load_model,
                      parse_matrix, save_model)
from .text import tokenize_text
from .vectorize import Vocabulary, build_label_graph

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

INDEX_META = "meta.json"
INDEX_VOCAB = "vocab.tsv"
INDEX_FEATURES = "features.tsv"
INDEX_X = "X.mat"
INDEX_Y = "Y.mat"
INDEX_CONTENT = "content_pairs.tsv"
INDEX_LABELS = "labels.tsv"
INDEX_REPORT = "report.txt"
MODEL_FILE = "model.txt"
TRACE_FILE = "loss_trace.tsv"
EVAL_FILES = ("report.tsv", "summary.tsv", "folds.tsv", "excluded.tsv")


class CliError(Exception):
    def __init__(self, message: str, exit_code: int = EXIT_RUNTIME):
        super().__init__(message)
        self.exit_code = exit_code


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)


def _ingest(config: PipelineConfig):
    profile = load_profile(config.profile)
    manifest = None
    if config.manifest is not None:
        manifest = load_manifest(config.manifest)
    documents, report = ingest_corpus(
        config.corpus_root, profile,
        label_rule="manifest" if manifest else "per-file",
        manifest=manifest)
    return profile, documents, report


def cmd_index(config: PipelineConfig) -> int:
    profile, documents, report = _ingest(config)
    bundle = build_bundle(documents, profile, config.bundle_options())
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    m = len(bundle.doc_ids)
    token_df = np.count_nonzero(bundle.counts.X, axis=1)
    feature_df = np.count_nonzero(bundle.counts.Y, axis=1)
    lower, upper, r_lower, r_upper = bundle.options.resolved_bounds(m)

    meta = {
        "format": "codetrace-index",
        "version": 1,
        "fingerprint": bundle.fingerprint,
        "m": m,
        "d_x": len(bundle.vocab),
        "d_y": len(bundle.feature_index),
        "weighting": bundle.matrices.weighting,
        "profile": config.profile,
        "feature_min_docs": int(lower),
        "feature_max_docs": int(upper),
        "relationship_min_docs": int(r_lower),
        "relationship_max_docs": int(r_upper),
        "include_relationships": bundle.options.include_relationships,
        "empty_text_docs": sorted(bundle.matrices.empty_text_docs),
        "empty_code_docs": sorted(bundle.matrices.empty_code_docs),
        "recovered_docs": sorted(bundle.feature_set.flagged_docs),
    }
    _write_text(out / INDEX_META,
                json.dumps(meta, indent=2, sort_keys=True) + "\n")
    _write_text(out / INDEX_VOCAB, "".join(
        f"{token}\t{int(df)}\n"
        for token, df in zip(bundle.vocab.keys, token_df)))
    _write_text(out / INDEX_FEATURES, "".join(
        f"{kind}\t{key}\t{int(df)}\n"
        for (kind, key), df in zip(bundle.feature_entries(), feature_df)))
    _write_text(out / INDEX_X, format_matrix(bundle.X))
    _write_text(out / INDEX_Y, format_matrix(bundle.Y))

    pair_lines = []
    for (kind, key), column in zip(bundle.feature_entries(), bundle.R.T):
        for i in np.flatnonzero(column):
            pair_lines.append(f"{bundle.vocab.key(int(i))}\t{key}\n")
    _write_text(out / INDEX_CONTENT, "".join(pair_lines))
    _write_text(out / INDEX_LABELS, "".join(
        f"{doc_id}\t{label}\n"
        for doc_id, label in zip(bundle.doc_ids, bundle.labels)))
    _write_text(out / INDEX_REPORT, report.format())

    print(f"indexed m={m} d_x={len(bundle.vocab)} "
          f"d_y={len(bundle.feature_index)} "
          f"fingerprint={bundle.fingerprint[:12]} -> {out}")
    return EXIT_OK


@dataclass
class IndexArtifacts:
    meta: dict
    vocab_tokens: tuple[str, ...]
    token_df: np.ndarray
    feature_entries: tuple[tuple[str, str], ...]
    X: np.ndarray
    Y: np.ndarray
    R: np.ndarray
    doc_ids: tuple[str, ...]
    labels: tuple[str, ...]

    @property
    def idf_tokens(self) -> np.ndarray | None:
        if self.meta["weighting"] != "tfidf":
            return None
        m = float(self.meta["m"])
        with np.errstate(divide="ignore"):
            return np.where(self.token_df > 0,
                            np.log(m / np.maximum(self.token_df, 1.0)), 0.0)


def _load_index(config: PipelineConfig) -> IndexArtifacts:
    out = Path(config.output_dir)
    meta_path = out / INDEX_META
    if not meta_path.is_file():
        raise CliError(f"no index found in {out}; run 'index' first",
                       EXIT_USAGE)
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    if meta.get("format") != "codetrace-index" or meta.get("version") != 1:
        raise CliError(f"{meta_path} is not a readable index description")

    vocab_tokens, token_df = [], []
    for line in (out / INDEX_VOCAB).read_text(encoding="utf-8").splitlines():
        token, df = line.split("\t")
        vocab_tokens.append(token)
        token_df.append(int(df))
    feature_entries = []
    for line in (out / INDEX_FEATURES).read_text(
            encoding="utf-8").splitlines():
        kind, key, _df = line.split("\t")
        feature_entries.append((kind, key))
    doc_ids, labels = [], []
    for line in (out / INDEX_LABELS).read_text(encoding="utf-8").splitlines():
        doc_id, label = line.split("\t")
        doc_ids.append(doc_id)
        labels.append(label)

    X = parse_matrix((out / INDEX_X).read_text(encoding="utf-8"))
    Y = parse_matrix((out / INDEX_Y).read_text(encoding="utf-8"))
    if (X.shape != (meta["d_x"], meta["m"])
            or Y.shape != (meta["d_y"], meta["m"])):
        raise CliError(f"index matrices in {out} do not match {INDEX_META}")

    token_index = {token: i for i, token in enumerate(vocab_tokens)}
    feature_pos = {key: j for j, (_, key) in enumerate(feature_entries)}
    R = np.zeros((len(vocab_tokens), len(feature_entries)), dtype=np.float64)
    for line in (out / INDEX_CONTENT).read_text(
            encoding="utf-8").splitlines():
        token, key = line.split("\t")
        R[token_index[token], feature_pos[key]] = 1.0
    return IndexArtifacts(meta=meta, vocab_tokens=tuple(vocab_tokens),
                          token_df=np.array(token_df, dtype=np.float64),
                          feature_entries=tuple(feature_entries),
                          X=X, Y=Y, R=R, doc_ids=tuple(doc_ids),
                          labels=tuple(labels))


def cmd_train(config: PipelineConfig) -> int:
    artifacts = _load_index(config)
    _profile, documents, _report = _ingest(config)
    current = corpus_fingerprint(documents)
    if current != artifacts.meta["fingerprint"]:
        raise CliError(
            f"corpus fingerprint mismatch: index holds "
            f"{artifacts.meta['fingerprint'][:12]}, corpus at "
            f"{config.corpus_root} hashes to {current[:12]}; re-run 'index'")

    hyper = config.hyper()
    d_x, m = artifacts.X.shape
    d_y = artifacts.Y.shape[0]
    try:
        hyper.validate(d_x, d_y)
        if hyper.k > m:
            raise ValueError(f"k={hyper.k} exceeds the document count {m}")
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE)

    data = TrainingData(X=artifacts.X, Y=artifacts.Y, R=artifacts.R,
                        graph=build_label_graph(list(artifacts.labels)))
    model = train(data, hyper)

    out = Path(config.output_dir)
    save_model(out / MODEL_FILE, model, artifacts.vocab_tokens,
               artifacts.feature_entries, artifacts.meta["fingerprint"],
               artifacts.meta["weighting"], config.alpha)
    trace_lines = ["iteration\ttotal\n"]
    trace_lines.append(f"0\t{format_float(model.initial_loss.total)}\n")
    for i, step in enumerate(model.trace, start=1):
        trace_lines.append(f"{i}\t{format_float(step.total)}\n")
    _write_text(out / TRACE_FILE, "".join(trace_lines))

    final = model.trace[-1].total if model.trace else model.initial_loss.total
    print(f"trained k={hyper.k} iterations={len(model.trace)} "
          f"initial={format_float(model.initial_loss.total)} "
          f"final={format_float(final)} -> {out / MODEL_FILE}")
    return EXIT_OK


def _load_model_against_index(config: PipelineConfig,
                              artifacts: IndexArtifacts):
    model_path = Path(config.output_dir) / MODEL_FILE
    if not model_path.is_file():
        raise CliError(f"no model at {model_path}; run 'train' first",
                       EXIT_USAGE)
    stored = load_model(model_path)
    if stored.fingerprint != artifacts.meta["fingerprint"]:
        raise CliError(f"model at {model_path} was trained on a different "
                       f"corpus (fingerprint {stored.fingerprint[:12]} vs "
                       f"index {artifacts.meta['fingerprint'][:12]})")
    if stored.vocab_tokens != artifacts.vocab_tokens:
        raise CliError(f"model vocabulary does not match the index in "
                       f"{config.output_dir}")
    if stored.feature_keys != artifacts.feature_entries:
        raise CliError(f"model feature list does not match the index in "
                       f"{config.output_dir}")
    return stored


def cmd_query(config: PipelineConfig, text: str, top: int,
              alpha: float | None) -> int:
    artifacts = _load_index(config)
    stored = _load_model_against_index(config, artifacts)
    index = RetrievalIndex(
        stored.model, artifacts.X, artifacts.Y, artifacts.doc_ids,
        Vocabulary(artifacts.vocab_tokens),
        feature_keys=[key for _, key in artifacts.feature_entries],
        idf_tokens=artifacts.idf_tokens,
        alpha=stored.alpha if alpha is None else alpha)
    tokens = tokenize_text(text)
    if not tokens:
        print("note: query has no tokens after stop-word removal",
              file=sys.stderr)
    results = index.rank(tokens, top)
    if index.last_oov_count:
        print(f"note: {index.last_oov_count} query token occurrences are "
              f"outside the vocabulary", file=sys.stderr)
    for rank, result in enumerate(results, start=1):
        print(result.format_record(rank))
    return EXIT_OK


def cmd_eval(config: PipelineConfig) -> int:
    if config.query_file is None:
        raise CliError("eval needs a query_file (config key or --query-file)",
                       EXIT_USAGE)
    profile, documents, _report = _ingest(config)
    queries = load_queries(config.query_file, require_labels=True)
    doc_labels = {doc.label for doc in documents}
    if doc_labels.isdisjoint(q.label for q in queries):
        raise CliError("no query label matches any document label; check the "
                       "query file or pass --manifest", EXIT_USAGE)
    bundle = build_bundle(documents, profile, config.bundle_options())
    methods = default_methods(config.hyper(), alpha=config.alpha,
                              lm_smoothing=config.lm_smoothing,
                              lsi_k=config.lsi_k, names=config.methods)
    try:
        report = cross_validate(bundle, queries, methods,
                                seed=config.seed, n_folds=config.n_folds,
                                conventional_split=config.conventional_split)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE)

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "report.tsv", report.format_table())
    _write_text(out / "summary.tsv", report.format_summary())
    _write_text(out / "folds.tsv", report.format_folds())
    _write_text(out / "excluded.tsv", report.format_excluded())
    print(f"evaluated {len(queries)} queries with "
          f"{len(config.methods)} methods over {config.n_folds} folds "
          f"-> {out / 'summary.tsv'}")
    return EXIT_OK


def cmd_explain(config: PipelineConfig, key: str, top_words: int,
                baseline_path: str | None) -> int:
    model_path = Path(config.output_dir) / MODEL_FILE
    if not model_path.is_file():
        raise CliError(f"no model at {model_path}; run 'train' first",
                       EXIT_USAGE)
    stored = load_model(model_path)
    keys = [k for _, k in stored.feature_keys]
    rows = top_words_for_feature(stored.model, stored.vocab_tokens, keys,
                                 key, top_words)
    if baseline_path is None:
        for word, score in rows:
            print(f"{word}\t{format_float(score)}")
        return EXIT_OK

    baseline = load_model(baseline_path)
    if baseline.fingerprint != stored.fingerprint:
        raise CliError("baseline model was trained on a different corpus")
    base_rows = top_words_for_feature(
        baseline.model, baseline.vocab_tokens,
        [k for _, k in baseline.feature_keys], key, top_words)
    for (word, score), (base_word, base_score) in zip(rows, base_rows):
        print(f"{word}\t{format_float(score)}"
              f"\t{base_word}\t{format_float(base_score)}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="codetrace",
        description="Cross-modal source retrieval: index a corpus, train "
                    "the projection model, query, evaluate, explain.")
    parser.add_argument("--config", help="JSON config file; defaults to "
                        "$CODETRACE_CONFIG when set")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--corpus-root", dest="corpus_root")
    common.add_argument("--output-dir", dest="output_dir")
    common.add_argument("--profile")
    common.add_argument("--manifest")
    common.add_argument("--seed", type=int)
    common.add_argument("--weighting", choices=("tfidf", "count"))

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("index", parents=[common],
                   help="ingest the corpus and write index artifacts")

    p_train = sub.add_parser("train", parents=[common],
                             help="train the projection model on the index")
    p_train.add_argument("--lambda1", type=float)
    p_train.add_argument("--lambda2", type=float)
    p_train.add_argument("--lambda3", type=float)
    p_train.add_argument("--k", type=int)
    p_train.add_argument("--eta", type=float)
    p_train.add_argument("--max-iter", dest="max_iter", type=int)
    p_train.add_argument("--tol", type=float)
    p_train.add_argument("--backtracking", action="store_true", default=None)
    p_train.add_argument("--alpha", type=float,
                         help="blend weight stored with the model")

    p_query = sub.add_parser("query", parents=[common],
                             help="rank documents for a text query")
    p_query.add_argument("text")
    p_query.add_argument("--top", type=int, default=10)
    p_query.add_argument("--alpha", type=float, default=None,
                         help="override the blend weight stored in the model")

    p_eval = sub.add_parser("eval", parents=[common],
                            help="cross-validated comparison of methods")
    p_eval.add_argument("--query-file", dest="query_file")
    p_eval.add_argument("--methods",
                        help="comma-separated subset of "
                             "cos,lm,lsi,cfa,cfa_cr,codetrace")
    p_eval.add_argument("--n-folds", dest="n_folds", type=int)
    p_eval.add_argument("--conventional-split", action="store_true",
                        default=None)
    p_eval.add_argument("--alpha", type=float)
    p_eval.add_argument("--lambda1", type=float)
    p_eval.add_argument("--lambda2", type=float)
    p_eval.add_argument("--lambda3", type=float)
    p_eval.add_argument("--k", type=int)
    p_eval.add_argument("--eta", type=float)
    p_eval.add_argument("--max-iter", dest="max_iter", type=int)
    p_eval.add_argument("--backtracking", action="store_true", default=None)

    p_explain = sub.add_parser("explain", parents=[common],
                               help="top related words for a code feature")
    p_explain.add_argument("key")
    p_explain.add_argument("--top-words", dest="top_words", type=int,
                           default=10)
    p_explain.add_argument("--baseline-model", dest="baseline_model",
                           help="second model file for a side-by-side view")
    return parser


_CONFIG_FLAGS = ("corpus_root", "output_dir", "profile", "manifest", "seed",
                 "weighting", "query_file", "methods", "n_folds",
                 "conventional_split", "alpha", "lambda1", "lambda2",
                 "lambda3", "k", "eta", "max_iter", "tol", "backtracking")


def _overrides_from(args: argparse.Namespace) -> dict:
    overrides = {}
    for name in _CONFIG_FLAGS:
        value = getattr(args, name, None)
        if value is None:
            continue
        if name == "methods":
            value = tuple(part.strip() for part in value.split(",")
                          if part.strip())
        overrides[name] = value
    return overrides


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config_path = args.config or os.environ.get("CODETRACE_CONFIG")
        overrides = _overrides_from(args)
        if args.command == "query":
            overrides.pop("alpha", None)   # serving alpha rides the model
        config = load_config(config_path, overrides)
        if args.command == "index":
            return cmd_index(config)
        if args.command == "train":
            return cmd_train(config)
        if args.command == "query":
            return cmd_query(config, args.text, args.top, args.alpha)
        if args.command == "eval":
            return cmd_eval(config)
        if args.command == "explain":
            return cmd_explain(config, args.key, args.top_words,
                               args.baseline_model)
        raise CliError(f"unknown command {args.command!r}", EXIT_USAGE)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ConfigError, ProfileError, CorpusError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StorageError, FeatureFilterError, FeatureNotFoundError,
            TrainingDivergedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entry() -> None:
    sys.exit(main())
