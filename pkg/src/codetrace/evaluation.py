"""Cross-validated retrieval evaluation.

Queries are split into seeded folds. Following the original protocol, one
fold's queries and the documents they link to (label equality) become the
training set of the learned methods, and everything else is the test
side: the remaining queries are ranked over the remaining documents. The
``conventional_split`` flag swaps the orientation (four folds train, one
tests) for comparison runs.

A test query whose relevant set is empty within the test corpus is
flagged and excluded from averages. A method that fails in one fold marks
its cells failed instead of aborting the whole report.
"""
from __future__ import annotations

import traceback
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import LanguageModelScorer, LsiScorer, cosine_scores, \
    rank_doc_ids
from .corpus import Query
from .learning import Hyperparams, Model, TrainingData, cfa_model, \
    cfa_plus_cr_train, train
from .metrics import ndcg_at_p, precision_at_n, recall_at_n
from .pipeline import CorpusBundle
from .retrieval import RetrievalIndex
from .vectorize import build_label_graph

DEFAULT_CUTOFFS = {
    "P": (1, 2, 4, 5),
    "R": (1, 3, 5, 20),
    "nDCG": (2, 4, 10, 20),
}


def make_folds(query_ids, seed: int, n_folds: int = 5) -> list[list[str]]:
    """Deterministic fold assignment from (sorted ids, seed) only.

    Ids are sorted before the seeded shuffle, so insertion order cannot
    leak into the assignment. Fold sizes differ by at most one.
    """
    ids = sorted(query_ids)
    if len(set(ids)) != len(ids):
        raise ValueError("query ids must be unique")
    if n_folds < 2:
        raise ValueError(f"need at least 2 folds, got {n_folds}")
    if len(ids) < n_folds:
        raise ValueError(f"{len(ids)} queries cannot fill {n_folds} folds")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ids))
    folds: list[list[str]] = [[] for _ in range(n_folds)]
    for position, idx in enumerate(order):
        folds[position % n_folds].append(ids[idx])
    return [sorted(fold) for fold in folds]


class MethodFailure(RuntimeError):
    pass


class RetrievalMethod:
    """One evaluated system: fit on training columns, rank over candidates."""

    name = "base"
    needs_training = False

    def fit(self, bundle: CorpusBundle, train_idx: list[int]) -> None:
        pass

    def rank(self, bundle: CorpusBundle, query: Query,
             candidate_idx: list[int]) -> list[str]:
        raise NotImplementedError


class CosMethod(RetrievalMethod):
    name = "cos"

    def rank(self, bundle, query, candidate_idx):
        vec, _ = bundle.vectorize_query(query.tokens)
        X = bundle.X[:, candidate_idx]
        ids = [bundle.doc_ids[j] for j in candidate_idx]
        return rank_doc_ids(cosine_scores(vec, X), ids)


class LmMethod(RetrievalMethod):
    name = "lm"

    def __init__(self, smoothing: float = 0.5):
        self.smoothing = smoothing
        self._scorer = None
        self._ids = None

    def fit(self, bundle, train_idx):
        self._scorer = None

    def _ensure(self, bundle, candidate_idx):
        ids = tuple(bundle.doc_ids[j] for j in candidate_idx)
        if self._ids != ids:
            self._scorer = LanguageModelScorer(
                bundle.counts.X[:, candidate_idx], bundle.vocab,
                self.smoothing)
            self._ids = ids

    def rank(self, bundle, query, candidate_idx):
        self._ensure(bundle, candidate_idx)
        return rank_doc_ids(self._scorer.scores(query.tokens), list(self._ids))


class LsiMethod(RetrievalMethod):
    name = "lsi"

    def __init__(self, k: int = 64):
        self.k = k
        self._scorer = None
        self._ids = None

    def _ensure(self, bundle, candidate_idx):
        ids = tuple(bundle.doc_ids[j] for j in candidate_idx)
        if self._ids != ids:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                self._scorer = LsiScorer(bundle.X[:, candidate_idx], self.k)
            self._ids = ids

    def rank(self, bundle, query, candidate_idx):
        self._ensure(bundle, candidate_idx)
        vec, _ = bundle.vectorize_query(query.tokens)
        return rank_doc_ids(self._scorer.scores(vec), list(self._ids))


class ProjectionMethod(RetrievalMethod):
    """The learned cross-modal systems: cfa, cfa_cr, and the full model."""

    needs_training = True

    def __init__(self, name: str, trainer, hyper: Hyperparams,
                 alpha: float = 0.5):
        self.name = name
        self.trainer = trainer
        self.hyper = hyper
        self.alpha = alpha
        self.model: Model | None = None

    def fit(self, bundle, train_idx):
        if not train_idx:
            raise MethodFailure(f"{self.name}: no training documents")
        labels = [bundle.labels[j] for j in train_idx]
        X = bundle.X[:, train_idx]
        Y = bundle.Y[:, train_idx]
        data = TrainingData(X=X, Y=Y, R=bundle.R,
                            graph=build_label_graph(labels))
        k_max = min(X.shape[0], Y.shape[0], len(train_idx))
        hyper = self.hyper
        if hyper.k > k_max:
            # Tiny training folds cannot support the configured width.
            hyper = replace(hyper, k=k_max)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            self.model = self.trainer(data, hyper)

    def rank(self, bundle, query, candidate_idx):
        if self.model is None:
            raise MethodFailure(f"{self.name}: not fitted")
        index = RetrievalIndex(
            self.model, bundle.X[:, candidate_idx], bundle.Y[:, candidate_idx],
            tuple(bundle.doc_ids[j] for j in candidate_idx), bundle.vocab,
            idf_tokens=bundle.matrices.idf_tokens, alpha=self.alpha)
        return [r.doc_id for r in index.rank(query.tokens, len(candidate_idx))]


def default_methods(hyper: Hyperparams, alpha: float = 0.5,
                    lm_smoothing: float = 0.5, lsi_k: int = 64,
                    names: tuple[str, ...] = ("cos", "lm", "lsi", "cfa",
                                              "cfa_cr", "codetrace"),
                    ) -> list[RetrievalMethod]:
    def full_trainer(data, hp):
        return train(data, hp)

    def cfa_trainer(data, hp):
        return cfa_model(data, hp)

    registry = {
        "cos": lambda: CosMethod(),
        "lm": lambda: LmMethod(lm_smoothing),
        "lsi": lambda: LsiMethod(lsi_k),
        "cfa": lambda: ProjectionMethod("cfa", cfa_trainer, hyper, alpha),
        "cfa_cr": lambda: ProjectionMethod("cfa_cr", cfa_plus_cr_train,
                                           hyper, alpha),
        "codetrace": lambda: ProjectionMethod("codetrace", full_trainer,
                                              hyper, alpha),
    }
    unknown = [n for n in names if n not in registry]
    if unknown:
        raise ValueError(f"unknown methods: {unknown}; "
                         f"known: {sorted(registry)}")
    return [registry[n]() for n in names]


@dataclass
class MetricReport:
    method_names: tuple[str, ...]
    cutoffs: dict[str, tuple[int, ...]]
    n_folds: int
    # (method, metric, cutoff, fold) -> per-fold mean over evaluated queries
    values: dict[tuple[str, str, int, int], float | None] = field(default_factory=dict)
    fold_assignment: dict[str, int] = field(default_factory=dict)
    excluded: list[tuple[int, str, str]] = field(default_factory=list)
    failures: list[tuple[str, int, str]] = field(default_factory=list)

    def mean(self, method: str, metric: str, cutoff: int) -> float | None:
        cells = [self.values.get((method, metric, cutoff, f))
                 for f in range(self.n_folds)]
        usable = [c for c in cells if c is not None]
        if not usable:
            return None
        return float(np.mean(usable))

    def format_table(self) -> str:
        lines = ["method\tmetric\tcutoff\tfold\tvalue"]
        for method in self.method_names:
            for metric, cuts in sorted(self.cutoffs.items()):
                for cutoff in cuts:
                    for fold in range(self.n_folds):
                        value = self.values.get((method, metric, cutoff, fold))
                        cell = "failed" if value is None else f"{value:.17g}"
                        lines.append(f"{method}\t{metric}\t{cutoff}\t{fold}"
                                     f"\t{cell}")
        return "\n".join(lines) + "\n"

    def format_summary(self) -> str:
        lines = ["method\tmetric\tcutoff\tmean"]
        for method in self.method_names:
            for metric, cuts in sorted(self.cutoffs.items()):
                for cutoff in cuts:
                    mean = self.mean(method, metric, cutoff)
                    cell = "failed" if mean is None else f"{mean:.17g}"
                    lines.append(f"{method}\t{metric}\t{cutoff}\t{cell}")
        return "\n".join(lines) + "\n"

    def format_folds(self) -> str:
        lines = ["query\tfold"]
        for qid in sorted(self.fold_assignment):
            lines.append(f"{qid}\t{self.fold_assignment[qid]}")
        return "\n".join(lines) + "\n"

    def format_excluded(self) -> str:
        lines = ["fold\tquery\treason"]
        for fold, qid, reason in self.excluded:
            lines.append(f"{fold}\t{qid}\t{reason}")
        for method, fold, message in self.failures:
            lines.append(f"{fold}\tmethod:{method}\t{message}")
        return "\n".join(lines) + "\n"


def _metric_value(metric: str, ranked, relevant, cutoff: int) -> float:
    if metric == "P":
        return precision_at_n(ranked, relevant, cutoff)
    if metric == "R":
        return recall_at_n(ranked, relevant, cutoff)
    if metric == "nDCG":
        return ndcg_at_p(ranked, relevant, cutoff)
    raise ValueError(f"unknown metric {metric!r}")


def cross_validate(bundle: CorpusBundle, queries: list[Query],
                   methods: list[RetrievalMethod],
                   cutoffs: dict[str, tuple[int, ...]] | None = None,
                   seed: int = 0, n_folds: int = 5,
                   conventional_split: bool = False) -> MetricReport:
    """Run every method through the fold protocol and collect metrics.

    Fold means average over the queries evaluated in that fold; the
    report's summary means average the fold means. Relevance is label
    equality against the candidate (non-training) documents.
    """
    if cutoffs is None:
        cutoffs = DEFAULT_CUTOFFS
    for query in queries:
        if query.label is None:
            raise ValueError(f"query {query.id!r} has no label; "
                             f"evaluation requires labeled queries")
    folds = make_folds([q.id for q in queries], seed, n_folds)
    by_id = {q.id: q for q in queries}
    report = MetricReport(method_names=tuple(m.name for m in methods),
                          cutoffs=dict(cutoffs), n_folds=n_folds)
    for fold_idx, fold in enumerate(folds):
        for qid in fold:
            report.fold_assignment[qid] = fold_idx

    for fold_idx, fold in enumerate(folds):
        if conventional_split:
            train_qids = [qid for f, fold_ids in enumerate(folds)
                          for qid in fold_ids if f != fold_idx]
        else:
            train_qids = list(fold)
        train_labels = {by_id[qid].label for qid in train_qids}
        train_idx = [j for j, label in enumerate(bundle.labels)
                     if label in train_labels]
        candidate_idx = [j for j in range(len(bundle.doc_ids))
                         if j not in set(train_idx)]
        test_queries = [by_id[qid] for fold_ids in folds
                        for qid in fold_ids if qid not in set(train_qids)]
        test_queries.sort(key=lambda q: q.id)

        candidate_labels = [bundle.labels[j] for j in candidate_idx]
        relevant_by_query: dict[str, set[str]] = {}
        evaluated = []
        for query in test_queries:
            relevant = {bundle.doc_ids[j]
                        for j, label in zip(candidate_idx, candidate_labels)
                        if label == query.label}
            if not relevant:
                report.excluded.append(
                    (fold_idx, query.id,
                     "no relevant documents in the test corpus"))
                continue
            relevant_by_query[query.id] = relevant
            evaluated.append(query)

        for method in methods:
            try:
                method.fit(bundle, train_idx)
                per_metric: dict[tuple[str, int], list[float]] = {
                    (metric, cutoff): []
                    for metric, cuts in cutoffs.items() for cutoff in cuts}
                for query in evaluated:
                    ranked = method.rank(bundle, query, candidate_idx)
                    relevant = relevant_by_query[query.id]
                    for (metric, cutoff), bucket in per_metric.items():
                        bucket.append(_metric_value(metric, ranked,
                                                    relevant, cutoff))
                for (metric, cutoff), bucket in per_metric.items():
                    report.values[(method.name, metric, cutoff, fold_idx)] = (
                        float(np.mean(bucket)) if bucket else None)
            except Exception as exc:   # an isolated method/fold failure
                for metric, cuts in cutoffs.items():
                    for cutoff in cuts:
                        report.values[(method.name, metric, cutoff,
                                       fold_idx)] = None
                report.failures.append(
                    (method.name, fold_idx,
                     "".join(traceback.format_exception_only(exc)).strip()))
    return report


def tune_alpha(bundle: CorpusBundle, model: Model, queries: list[Query],
               candidate_idx: list[int], cutoff: int = 5,
               grid: tuple[float, ...] = tuple(g / 10 for g in range(11)),
               ) -> tuple[float, float]:
    """Pick the blend weight maximizing mean nDCG on a validation slice."""
    labels = [bundle.labels[j] for j in candidate_idx]
    ids = tuple(bundle.doc_ids[j] for j in candidate_idx)
    best = (0.0, -1.0)
    for alpha in grid:
        index = RetrievalIndex(model, bundle.X[:, candidate_idx],
                               bundle.Y[:, candidate_idx], ids, bundle.vocab,
                               idf_tokens=bundle.matrices.idf_tokens,
                               alpha=alpha)
        scores = []
        for query in queries:
            relevant = {doc_id for doc_id, label in zip(ids, labels)
                        if label == query.label}
            if not relevant:
                continue
            ranked = [r.doc_id for r in index.rank(query.tokens, len(ids))]
            scores.append(ndcg_at_p(ranked, relevant, cutoff))
        value = float(np.mean(scores)) if scores else 0.0
        if value > best[1]:
            best = (alpha, value)
    return best
