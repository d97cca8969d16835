"""Query-time ranking and explanation.

A ranked score blends two cosines: text-to-text between the query vector
and a document's word column, and text-to-code between the projected
query and the projected code column. The blend weight alpha is the only
serving-time knob; 0 degenerates to plain text retrieval, 1 to the
learned cross-modal match.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .learning import Model


class FeatureNotFoundError(KeyError):
    def __init__(self, key: str, suggestions: list[str]):
        super().__init__(key)
        self.key = key
        self.suggestions = suggestions

    def __str__(self) -> str:
        if self.suggestions:
            return (f"unknown feature {self.key!r}; closest known keys: "
                    + ", ".join(repr(s) for s in self.suggestions))
        return f"unknown feature {self.key!r}"


@dataclass(frozen=True)
class ScoredResult:
    doc_id: str
    score: float
    text_text: float
    text_code: float

    def format_record(self, rank: int) -> str:
        return (f"{rank}\t{self.doc_id}\t{self.score:.17g}"
                f"\t{self.text_text:.17g}\t{self.text_code:.17g}")


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b) / (na * nb)


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(min(previous[j] + 1,
                               current[j - 1] + 1,
                               previous[j - 1] + (ca != cb)))
        previous = current
    return previous[-1]


class RetrievalIndex:
    """Model plus per-document vectors, ready to rank queries.

    Code columns are projected through V once at construction; queries
    are projected through U per call. Query tokens missing from the
    vocabulary are dropped and counted, never errors.
    """

    def __init__(self, model: Model, X: np.ndarray, Y: np.ndarray,
                 doc_ids: tuple[str, ...], vocab, feature_keys=None,
                 idf_tokens: np.ndarray | None = None, alpha: float = 0.5):
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
        if X.shape[1] != len(doc_ids) or Y.shape[1] != len(doc_ids):
            raise ValueError("matrix columns must match doc_ids")
        if X.shape[0] != model.U.shape[0]:
            raise ValueError(f"vocabulary size {X.shape[0]} does not match "
                             f"the model's {model.U.shape[0]} word rows")
        if Y.shape[0] != model.V.shape[0]:
            raise ValueError(f"feature count {Y.shape[0]} does not match "
                             f"the model's {model.V.shape[0]} feature rows")
        self.model = model
        self.X = X
        self.Y = Y
        self.doc_ids = tuple(doc_ids)
        self.vocab = vocab
        self.feature_keys = tuple(feature_keys) if feature_keys else None
        self.idf_tokens = idf_tokens
        self.alpha = alpha
        self.code_projections = self.project_code_columns(model, Y)
        self.last_oov_count = 0

    @staticmethod
    def project_code_columns(model: Model, Y: np.ndarray) -> np.ndarray:
        return model.V.T @ Y

    def vectorize_query(self, tokens: Counter) -> tuple[np.ndarray, int]:
        """Query vector in vocabulary space, plus the dropped-token count."""
        vec = np.zeros(self.X.shape[0], dtype=np.float64)
        oov = 0
        for token, count in tokens.items():
            i = self.vocab.get(token)
            if i is None:
                oov += count
            else:
                vec[i] = float(count)
        if self.idf_tokens is not None:
            vec *= self.idf_tokens
        self.last_oov_count = oov
        return vec, oov

    def text_text_similarity(self, query_vec: np.ndarray, j: int) -> float:
        return cosine(query_vec, self.X[:, j])

    def text_code_similarity(self, query_vec: np.ndarray, j: int) -> float:
        return cosine(self.model.U.T @ query_vec, self.code_projections[:, j])

    def score_all(self, tokens: Counter) -> list[ScoredResult]:
        query_vec, _ = self.vectorize_query(tokens)
        latent_query = self.model.U.T @ query_vec
        results = []
        for j, doc_id in enumerate(self.doc_ids):
            tt = cosine(query_vec, self.X[:, j])
            tc = cosine(latent_query, self.code_projections[:, j])
            score = (1.0 - self.alpha) * tt + self.alpha * tc
            results.append(ScoredResult(doc_id=doc_id, score=score,
                                        text_text=tt, text_code=tc))
        return results

    def rank(self, tokens: Counter, n: int) -> list[ScoredResult]:
        """Top-n results, descending score, ties broken by ascending id."""
        if n < 0:
            raise ValueError(f"n must be non-negative, got {n}")
        results = self.score_all(tokens)
        results.sort(key=lambda r: (-r.score, r.doc_id))
        return results[:n]


def top_words_for_feature(model: Model, vocab_tokens, feature_keys,
                          key: str, t: int) -> list[tuple[str, float]]:
    """The t words most related to a code feature under the learned model.

    Relatedness is the feature's column of U V'. Unknown keys raise with
    the three closest known keys by edit distance.
    """
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    index = {k: i for i, k in enumerate(feature_keys)}
    if key not in index:
        nearest = sorted(feature_keys,
                         key=lambda cand: (levenshtein(key, cand), cand))[:3]
        raise FeatureNotFoundError(key, nearest)
    if t == 0:
        return []
    scores = model.U @ model.V[index[key]]
    order = sorted(range(len(vocab_tokens)),
                   key=lambda i: (-scores[i], vocab_tokens[i]))
    return [(vocab_tokens[i], float(scores[i])) for i in order[:t]]
