"""End-to-end corpus preparation shared by the CLI, evaluation, and tests."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .corpus import CodeDocument, corpus_fingerprint
from .features import FeatureSet, build_content_matrix, build_feature_set, \
    filter_by_frequency
from .profiles import LanguageProfile
from .vectorize import DataMatrices, FeatureIndex, Vocabulary, build_matrices


@dataclass(frozen=True)
class BundleOptions:
    weighting: str = "tfidf"
    feature_min_docs: int = 2
    feature_max_docs: int | None = None      # None: half the corpus
    relationship_min_docs: int | None = None
    relationship_max_docs: int | None = None
    include_relationships: bool = True

    def resolved_bounds(self, m: int) -> tuple[int, float, int, float]:
        lower = self.feature_min_docs
        upper = self.feature_max_docs
        if upper is None:
            upper = max(lower, m // 2)
        r_lower = self.relationship_min_docs
        r_upper = self.relationship_max_docs
        return (lower, upper,
                lower if r_lower is None else r_lower,
                upper if r_upper is None else r_upper)


@dataclass
class CorpusBundle:
    """Everything derivable from a corpus without labels from queries."""
    documents: list[CodeDocument]
    profile: LanguageProfile
    vocab: Vocabulary
    feature_index: FeatureIndex
    feature_set: FeatureSet
    matrices: DataMatrices
    counts: DataMatrices          # raw-count twin, for the language model
    R: np.ndarray
    fingerprint: str
    options: BundleOptions = field(default_factory=BundleOptions)

    @property
    def doc_ids(self) -> tuple[str, ...]:
        return self.matrices.doc_ids

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(doc.label for doc in self.documents)

    @property
    def X(self) -> np.ndarray:
        return self.matrices.X

    @property
    def Y(self) -> np.ndarray:
        return self.matrices.Y

    def vectorize_query(self, tokens: Counter) -> tuple[np.ndarray, int]:
        """Query vector under the bundle's weighting, plus dropped count."""
        vec = np.zeros(len(self.vocab), dtype=np.float64)
        oov = 0
        for token, count in tokens.items():
            i = self.vocab.get(token)
            if i is None:
                oov += count
            else:
                vec[i] = float(count)
        if self.matrices.idf_tokens is not None:
            vec *= self.matrices.idf_tokens
        return vec, oov

    def feature_entries(self) -> tuple[tuple[str, str], ...]:
        return tuple((self.feature_set.features[key].kind, key)
                     for key in self.feature_index.keys)


def build_bundle(documents: list[CodeDocument], profile: LanguageProfile,
                 options: BundleOptions = BundleOptions()) -> CorpusBundle:
    """Features, indices, matrices and the content matrix for a corpus.

    These artifacts are label-free: cross-validation can slice columns for
    training without rebuilding, and the serving index uses them as-is.
    """
    m = len(documents)
    raw_features = build_feature_set(documents, profile,
                                     options.include_relationships)
    lower, upper, r_lower, r_upper = options.resolved_bounds(m)
    feature_set = filter_by_frequency(raw_features, lower, upper,
                                      r_lower, r_upper)
    vocab = Vocabulary.from_documents(documents)
    feature_index = FeatureIndex.from_feature_set(feature_set)
    matrices = build_matrices(documents, feature_set.doc_features,
                              vocab, feature_index, options.weighting)
    counts = (matrices if options.weighting == "count"
              else build_matrices(documents, feature_set.doc_features,
                                  vocab, feature_index, "count"))
    R = build_content_matrix(vocab, feature_index, feature_set.features)
    return CorpusBundle(documents=list(documents), profile=profile,
                        vocab=vocab, feature_index=feature_index,
                        feature_set=feature_set, matrices=matrices,
                        counts=counts, R=R,
                        fingerprint=corpus_fingerprint(documents),
                        options=options)
