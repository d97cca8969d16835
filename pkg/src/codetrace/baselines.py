"""Classical retrieval baselines: plain cosine, query likelihood, LSI."""
from __future__ import annotations

import warnings
from collections import Counter

import numpy as np


def rank_doc_ids(scores: np.ndarray, doc_ids) -> list[str]:
    """Descending score, ties broken by ascending document id."""
    order = sorted(range(len(doc_ids)), key=lambda j: (-scores[j], doc_ids[j]))
    return [doc_ids[j] for j in order]


def cosine_scores(query_vec: np.ndarray, X: np.ndarray) -> np.ndarray:
    qn = float(np.linalg.norm(query_vec))
    if qn == 0.0:
        return np.zeros(X.shape[1])
    norms = np.linalg.norm(X, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = (query_vec @ X) / (qn * norms)
    return np.where(norms > 0, scores, 0.0)


class LanguageModelScorer:
    """Query likelihood under linearly smoothed unigram document models.

    P(w | d) = (1 - s) * count(w, d) / |d|  +  s * P(w | corpus)

    where ``s`` is the smoothing weight on the corpus model. A query word
    absent from the whole corpus falls back to a floor of 1/(T+1) with T
    the corpus token total, which shifts every document equally instead
    of producing minus infinity. Operates on raw counts regardless of the
    weighting used elsewhere.
    """

    def __init__(self, counts: np.ndarray, vocab, smoothing: float = 0.5):
        if not 0.0 < smoothing < 1.0:
            raise ValueError(f"smoothing must lie in (0, 1), got {smoothing}")
        self.counts = counts
        self.vocab = vocab
        self.smoothing = smoothing
        self.doc_lengths = counts.sum(axis=0)
        corpus_counts = counts.sum(axis=1)
        self.total = float(corpus_counts.sum())
        if self.total <= 0:
            raise ValueError("corpus has no tokens")
        self.corpus_probs = corpus_counts / self.total

    def scores(self, query_tokens: Counter) -> np.ndarray:
        s = self.smoothing
        m = self.counts.shape[1]
        out = np.zeros(m)
        floor = 1.0 / (self.total + 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            for token, q_count in sorted(query_tokens.items()):
                i = self.vocab.get(token)
                if i is None or self.corpus_probs[i] == 0.0:
                    out += q_count * np.log(s * floor)
                    continue
                p_doc = np.where(self.doc_lengths > 0,
                                 self.counts[i] / np.maximum(self.doc_lengths, 1.0),
                                 0.0)
                out += q_count * np.log((1.0 - s) * p_doc
                                        + s * self.corpus_probs[i])
        return out


class LsiScorer:
    """Latent semantic indexing: rank in the truncated left-singular basis.

    Documents and queries are folded in as U_k' x, and compared by cosine.
    At full rank this reproduces the plain cosine ordering exactly, since
    projection onto the column span preserves inner products against
    in-span document columns. ``k`` above the matrix rank is clamped with
    a warning.
    """

    def __init__(self, X: np.ndarray, k: int):
        if k < 1:
            raise ValueError(f"k must be positive, got {k}")
        left, sigma, _ = np.linalg.svd(X, full_matrices=False)
        cutoff = (sigma[0] * max(X.shape) * np.finfo(np.float64).eps
                  if sigma.size and sigma[0] > 0 else 0.0)
        rank = int(np.sum(sigma > cutoff))
        if k > rank:
            warnings.warn(f"lsi rank {k} clamped to matrix rank {rank}",
                          stacklevel=2)
            k = max(rank, 1)
        self.k = k
        self.basis = left[:, :k]                  # d_x by k
        self.doc_coords = self.basis.T @ X        # k by m
        self.sigma = sigma[:k]

    def scores(self, query_vec: np.ndarray) -> np.ndarray:
        q = self.basis.T @ query_vec
        qn = float(np.linalg.norm(q))
        if qn == 0.0:
            return np.zeros(self.doc_coords.shape[1])
        norms = np.linalg.norm(self.doc_coords, axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            scores = (q @ self.doc_coords) / (qn * norms)
        return np.where(norms > 0, scores, 0.0)

    def reconstruction_residual(self, X: np.ndarray) -> float:
        """Frobenius distance between X and its rank-k reconstruction."""
        return float(np.linalg.norm(X - self.basis @ self.doc_coords))
