"""Seeded corpus generator with a planted cross-modal signal.

The corpus is built so that text-only retrieval and cross-modal retrieval
are forced apart:

* Signal topics. Each topic owns one label, one unique code block, and
  three query words. Bridge documents (training side) carry the query
  words in comments next to the topic block; test documents carry the
  same block under filler comments disjoint from every query. A text
  ranker scores zero on these queries; a learned word-to-snippet coupling
  retrieves them. The block bodies use identifiers that tokenize to
  nothing, so no query word ever appears in a test document.

* Cross-modal topics. Test documents reference an imported type whose
  name fragments are the query words; that reference feature never occurs
  in any training document, so a co-occurrence factorization cannot reach
  it. Glossary documents (training side) carry the same words in comments
  so the word projections exist, and the content matrix links the words
  to the reference feature. Distractor documents repeat the query words
  in comments, outranking the true documents on any text-only score.

Margins measured on this corpus are structural, not tuned: removing the
content term severs the only path from a cross-modal query to its
documents.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import CodeDocument, Query
from .learning import Hyperparams
from .metrics import ndcg_at_p
from .pipeline import BundleOptions, CorpusBundle, build_bundle
from .profiles import JAVA_PROFILE
from .text import ENGLISH_STOP_WORDS, extract_tokens, tokenize_text

# 96 distinct lowercase words, none a Java keyword or an English stop
# word, none splittable further. Sliced into per-topic query and filler
# triples after a seeded shuffle.
WORD_POOL = (
    "quota", "flush", "worker", "socket", "timeout", "retry",
    "parser", "cache", "evict", "render", "scroll", "jitter",
    "cursor", "widget", "resize", "palette", "stroke", "canvas",
    "buffer", "overflow", "ledger", "audit", "batch", "merge",
    "conflict", "branch", "commit", "stash", "rebase", "mirror",
    "proxy", "gateway", "throttle", "backoff", "nonce", "token",
    "expiry", "session", "logout", "avatar", "upload", "chunk",
    "resume", "digest", "checksum", "corrupt", "replay", "journal",
    "compact", "snapshot", "restore", "rollback", "quorum", "ballot",
    "leader", "lease", "fence", "epoch", "shard", "tenant",
    "sandbox", "spool", "daemon", "mutex", "deadlock", "starve",
    "preempt", "vacuum", "badge", "crash", "folder", "panel",
    "toolbar", "margin", "indent", "glyph", "kerning", "baseline",
    "ruler", "zoom", "pane", "splash", "dialog", "tooltip",
    "hover", "focus", "blur", "swipe", "pinch", "rotate",
    "tilt", "probe", "beacon", "relay", "filter", "drain",
)


@dataclass(frozen=True)
class PlantedSpec:
    """Shape of the generated corpus; defaults give 88 documents."""
    n_signal_topics: int = 12
    n_crossmodal_topics: int = 4
    bridge_docs: int = 2      # training docs per signal topic
    signal_docs: int = 3      # test docs per signal topic
    crossmodal_docs: int = 3  # test docs per cross-modal topic
    distractor_docs: int = 2  # per cross-modal topic
    glossary_docs: int = 2    # training docs per cross-modal topic
    seed: int = 0

    def words_needed(self) -> int:
        return 6 * self.n_signal_topics + 6 * self.n_crossmodal_topics


@dataclass
class PlantedCorpus:
    documents: list[CodeDocument]
    queries: list[Query]
    training_ids: frozenset[str]
    # Labels whose test documents are reachable only through their code
    # block; exactly half of all labels under the default spec.
    snippet_only_labels: frozenset[str]
    all_labels: frozenset[str]
    files: dict[str, str] = field(default_factory=dict)
    manifest: dict[str, str] = field(default_factory=dict)


def _check_pool() -> None:
    assert len(set(WORD_POOL)) == len(WORD_POOL)
    for word in WORD_POOL:
        assert word.isalpha() and word.islower() and len(word) >= 2, word
        assert word not in JAVA_PROFILE.keywords, word
        assert word not in ENGLISH_STOP_WORDS, word


def _block(index: int) -> str:
    # Call names like "z3a" tokenize to single characters and vanish, so
    # the block contributes no words to either the text view or the
    # content matrix; it is pure structure.
    return (f"void run() {{\n"
            f"    z{index}a();\n"
            f"    z{index}b();\n"
            f"    {{\n        z{index}c();\n    }}\n"
            f"}}\n")


def _comment_lines(words, repeats: int) -> str:
    line = "// " + " ".join(words) + "\n"
    return line * repeats


def generate_planted(spec: PlantedSpec) -> PlantedCorpus:
    """Build the corpus in memory; ids sort distractors before signal docs."""
    _check_pool()
    if spec.words_needed() > len(WORD_POOL):
        raise ValueError(f"spec needs {spec.words_needed()} words, "
                         f"pool has {len(WORD_POOL)}")
    rng = np.random.default_rng(spec.seed)
    words = [WORD_POOL[i] for i in rng.permutation(len(WORD_POOL))]

    def take(n: int) -> list[str]:
        out = words[:n]
        del words[:n]
        return out

    files: dict[str, str] = {}
    manifest: dict[str, str] = {}
    queries: list[Query] = []
    training: set[str] = set()
    snippet_only: set[str] = set()

    def add(doc_id: str, label: str, source: str, train: bool = False) -> None:
        files[doc_id] = source
        manifest[doc_id] = label
        if train:
            training.add(doc_id)

    block_index = 0
    for i in range(spec.n_signal_topics):
        query_words = take(3)
        filler = take(3)
        label = f"topic{i:02d}"
        snippet_only.add(label)
        body = _block(block_index)
        block_index += 1
        for b in range(spec.bridge_docs):
            add(f"sig/topic{i:02d}_bridge{b}.java", label,
                _comment_lines(query_words, 1) + body, train=True)
        for t in range(spec.signal_docs):
            add(f"sig/topic{i:02d}_test{t}.java", label,
                _comment_lines(filler, 1 + t % 2) + body)
        text = " ".join(query_words)
        queries.append(Query(id=f"q_sig{i:02d}", text=text,
                             tokens=tokenize_text(text), label=label))

    for j in range(spec.n_crossmodal_topics):
        query_words = take(3)
        filler = take(3)
        label = f"cross{j}"
        w1, w2, w3 = query_words
        import_line = f"import {w1}.{w2}.{w3.capitalize()};\n"
        body = _block(block_index)
        block_index += 1
        for t in range(spec.crossmodal_docs):
            add(f"ref/cross{j}_doc{t}.java", label,
                _comment_lines(filler, 2) + import_line + body)
        text = " ".join(query_words)
        queries.append(Query(id=f"q_ref{j}", text=text,
                             tokens=tokenize_text(text), label=label))

        noise_body = _block(block_index)
        block_index += 1
        for t in range(spec.distractor_docs):
            add(f"dis/noise{j}_doc{t}.java", f"noise{j}",
                _comment_lines(query_words, 3) + noise_body)

        gloss_body = _block(block_index)
        block_index += 1
        for t in range(spec.glossary_docs):
            add(f"gls/gloss{j}_doc{t}.java", f"gloss{j}",
                _comment_lines(query_words, 2) + gloss_body, train=True)

    documents = []
    for doc_id in sorted(files):
        source = files[doc_id]
        documents.append(CodeDocument(
            id=doc_id, path=doc_id, source=source,
            tokens=extract_tokens(source, JAVA_PROFILE),
            label=manifest[doc_id]))
    return PlantedCorpus(
        documents=documents, queries=queries,
        training_ids=frozenset(training),
        snippet_only_labels=frozenset(snippet_only),
        all_labels=frozenset(manifest.values()),
        files=files, manifest=manifest)


def write_tree(corpus: PlantedCorpus, root) -> None:
    """Materialize the corpus for the command-line pipeline."""
    from pathlib import Path
    root = Path(root)
    for doc_id, source in sorted(corpus.files.items()):
        path = root / doc_id
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(source, encoding="utf-8")
    manifest_lines = [f"{doc_id}\t{label}"
                      for doc_id, label in sorted(corpus.manifest.items())]
    (root / "manifest.tsv").write_text("\n".join(manifest_lines) + "\n",
                                       encoding="utf-8")
    query_lines = [f"{q.id}\t{q.label}\t{q.text}" for q in corpus.queries]
    (root / "queries.tsv").write_text("\n".join(query_lines) + "\n",
                                      encoding="utf-8")


def planted_bundle(spec: PlantedSpec,
                   options: BundleOptions | None = None,
                   ) -> tuple[PlantedCorpus, CorpusBundle]:
    corpus = generate_planted(spec)
    bundle = build_bundle(corpus.documents, JAVA_PROFILE,
                          options or BundleOptions())
    return corpus, bundle


def split_indices(corpus: PlantedCorpus,
                  bundle: CorpusBundle) -> tuple[list[int], list[int]]:
    train_idx = [j for j, doc_id in enumerate(bundle.doc_ids)
                 if doc_id in corpus.training_ids]
    candidate_idx = [j for j, doc_id in enumerate(bundle.doc_ids)
                     if doc_id not in corpus.training_ids]
    return train_idx, candidate_idx


def experiment_hyper(seed: int = 0) -> Hyperparams:
    # Width equals the planted co-occurrence rank (one direction per
    # signal plus glossary topic), so the factorization captures every
    # coupling without padded columns.
    return Hyperparams(k=16, eta=5e-3, max_iter=400, tol=1e-9, seed=seed,
                       backtracking=True)


def _mean_ndcg(method, bundle, corpus, train_idx, candidate_idx,
               cutoff: int = 5) -> float:
    candidate_labels = [bundle.labels[j] for j in candidate_idx]
    candidate_ids = [bundle.doc_ids[j] for j in candidate_idx]
    method.fit(bundle, train_idx)
    values = []
    for query in corpus.queries:
        relevant = {doc_id for doc_id, label
                    in zip(candidate_ids, candidate_labels)
                    if label == query.label}
        if not relevant:
            continue
        ranked = method.rank(bundle, query, candidate_idx)
        values.append(ndcg_at_p(ranked, relevant, cutoff))
    return float(np.mean(values))


def run_planted_experiment(seed: int = 0,
                           method_names: tuple[str, ...] = (
                               "cos", "lm", "lsi", "cfa", "cfa_cr",
                               "codetrace"),
                           spec: PlantedSpec | None = None,
                           alpha: float = 0.5) -> dict[str, float]:
    """Mean nDCG@5 per method on one seeded corpus instance."""
    from .evaluation import default_methods
    if spec is None:
        spec = PlantedSpec(seed=seed)
    corpus, bundle = planted_bundle(spec)
    train_idx, candidate_idx = split_indices(corpus, bundle)
    hyper = experiment_hyper(seed)
    results: dict[str, float] = {}
    for method in default_methods(hyper, alpha=alpha, names=method_names):
        results[method.name] = _mean_ndcg(method, bundle, corpus,
                                          train_idx, candidate_idx)
    return results


def content_weight_sweep(seed: int = 0,
                         weights: tuple[float, ...] = (
                             0.0, 0.05, 0.1, 0.2, 0.4, 0.8),
                         spec: PlantedSpec | None = None,
                         alpha: float = 0.5) -> dict[float, float]:
    """Mean nDCG@5 of the full model as the content weight varies."""
    from dataclasses import replace
    from .evaluation import ProjectionMethod
    from .learning import train
    if spec is None:
        spec = PlantedSpec(seed=seed)
    corpus, bundle = planted_bundle(spec)
    train_idx, candidate_idx = split_indices(corpus, bundle)
    base = experiment_hyper(seed)
    results: dict[float, float] = {}
    for weight in weights:
        hyper = replace(base, lambda3=weight)
        method = ProjectionMethod("codetrace", train, hyper, alpha)
        results[weight] = _mean_ndcg(method, bundle, corpus,
                                     train_idx, candidate_idx)
    return results
