"""Dense index structures and data matrices.

The vocabulary and feature index assign stable dense indices in sorted
order, so matrix layout is a pure function of corpus content. Column j of
the text matrix X and of the code matrix Y describe the same document.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np


class _SortedIndex:
    """Immutable string-to-dense-index map in sorted key order."""

    def __init__(self, keys: Iterable[str]):
        self._keys = tuple(sorted(set(keys)))
        self._index = {k: i for i, k in enumerate(self._keys)}

    def __len__(self) -> int:
        return len(self._keys)

    def __contains__(self, key: str) -> bool:
        return key in self._index

    def __getitem__(self, key: str) -> int:
        return self._index[key]

    def get(self, key: str, default=None):
        return self._index.get(key, default)

    def items(self):
        return self._index.items()

    @property
    def keys(self) -> tuple[str, ...]:
        return self._keys

    def key(self, i: int) -> str:
        return self._keys[i]


class Vocabulary(_SortedIndex):
    @classmethod
    def from_documents(cls, documents) -> "Vocabulary":
        tokens: set[str] = set()
        for doc in documents:
            tokens.update(doc.tokens)
        return cls(tokens)


class FeatureIndex(_SortedIndex):
    @classmethod
    def from_feature_set(cls, feature_set) -> "FeatureIndex":
        return cls(feature_set.features)


@dataclass
class DataMatrices:
    X: np.ndarray                      # vocab x documents
    Y: np.ndarray                      # features x documents
    doc_ids: tuple[str, ...]
    weighting: str
    idf_tokens: np.ndarray | None      # per-row idf, tf-idf weighting only
    idf_features: np.ndarray | None
    empty_text_docs: tuple[str, ...]   # flagged: no text evidence at all
    empty_code_docs: tuple[str, ...]


def _fill_counts(matrix: np.ndarray, index: _SortedIndex,
                 per_doc: list[Counter], what: str) -> None:
    for j, counts in enumerate(per_doc):
        for key, count in counts.items():
            i = index.get(key)
            if i is None:
                raise ValueError(f"{what} {key!r} is not in the index; "
                                 f"indices must be built from this corpus")
            matrix[i, j] = float(count)


def _apply_tfidf(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """tf * log(m / df) per entry, then L2-normalize each column."""
    m = matrix.shape[1]
    df = np.count_nonzero(matrix, axis=1).astype(np.float64)
    with np.errstate(divide="ignore"):
        idf = np.where(df > 0, np.log(m / np.maximum(df, 1.0)), 0.0)
    weighted = matrix * idf[:, None]
    norms = np.linalg.norm(weighted, axis=0)
    nonzero = norms > 0
    weighted[:, nonzero] /= norms[nonzero]
    return weighted, idf


def build_matrices(documents, doc_features: Mapping[str, Counter],
                   vocab: Vocabulary, feature_index: FeatureIndex,
                   weighting: str = "tfidf") -> DataMatrices:
    """Column-aligned text and code matrices for a document list.

    ``weighting`` is "count" for raw occurrence counts or "tfidf" for
    tf * log(m/df) with L2-normalized columns. A document missing from
    ``doc_features`` simply gets an all-zero code column. Documents with
    all-zero text or code columns are flagged, not dropped.
    """
    if weighting not in ("count", "tfidf"):
        raise ValueError(f"unknown weighting {weighting!r}")
    docs = list(documents)
    m = len(docs)
    X = np.zeros((len(vocab), m), dtype=np.float64)
    Y = np.zeros((len(feature_index), m), dtype=np.float64)
    _fill_counts(X, vocab, [doc.tokens for doc in docs], "token")
    _fill_counts(Y, feature_index,
                 [doc_features.get(doc.id, Counter()) for doc in docs],
                 "feature")

    idf_tokens = idf_features = None
    if weighting == "tfidf":
        X, idf_tokens = _apply_tfidf(X)
        Y, idf_features = _apply_tfidf(Y)

    empty_text = tuple(doc.id for j, doc in enumerate(docs)
                       if not X[:, j].any())
    empty_code = tuple(doc.id for j, doc in enumerate(docs)
                       if not Y[:, j].any())
    return DataMatrices(X=X, Y=Y, doc_ids=tuple(doc.id for doc in docs),
                        weighting=weighting, idf_tokens=idf_tokens,
                        idf_features=idf_features,
                        empty_text_docs=empty_text, empty_code_docs=empty_code)


@dataclass
class LabelGraph:
    """Similarity graph over the 2m views (text block first, then code)."""
    W: np.ndarray
    degrees: np.ndarray
    laplacian: np.ndarray
    m: int

    @property
    def lxx(self) -> np.ndarray:
        return self.laplacian[:self.m, :self.m]

    @property
    def lxy(self) -> np.ndarray:
        return self.laplacian[:self.m, self.m:]

    @property
    def lyx(self) -> np.ndarray:
        return self.laplacian[self.m:, :self.m]

    @property
    def lyy(self) -> np.ndarray:
        return self.laplacian[self.m:, self.m:]


def build_label_graph(labels: list[str]) -> LabelGraph:
    """Normalized Laplacian of the equal-label graph over both views.

    Vertex i < m is the text view of document i, vertex m+i its code view.
    Two distinct vertices are adjacent iff their labels match, so a
    document's own two views are always connected. A degree-zero vertex
    (impossible here, but the convention matters for the math) would keep
    a unit diagonal entry.
    """
    if not labels:
        raise ValueError("need at least one label")
    m = len(labels)
    stacked = np.array(list(labels) + list(labels), dtype=object)
    W = (stacked[:, None] == stacked[None, :]).astype(np.float64)
    np.fill_diagonal(W, 0.0)
    degrees = W.sum(axis=1)
    with np.errstate(divide="ignore"):
        dinv = np.where(degrees > 0, 1.0 / np.sqrt(np.maximum(degrees, 1e-300)), 0.0)
    laplacian = np.eye(2 * m) - dinv[:, None] * W * dinv[None, :]
    return LabelGraph(W=W, degrees=degrees, laplacian=laplacian, m=m)
