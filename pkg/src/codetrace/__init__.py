"""Cross-modal retrieval of source files from natural-language queries.

Text and code are vectorized separately (words vs. structural code
features), projected into a shared latent space by two learned linear
maps, and ranked by a blend of text cosine and latent cosine. See the
README for the pipeline walkthrough.
"""
from .config import PipelineConfig, load_config
from .corpus import CodeDocument, Query, ingest_corpus, load_queries
from .learning import (Hyperparams, Model, TrainingData, cfa_init, cfa_model,
                       cfa_plus_cr_train, total_loss, train)
from .pipeline import BundleOptions, CorpusBundle, build_bundle
from .profiles import BUILTIN_PROFILES, LanguageProfile, load_profile
from .retrieval import RetrievalIndex, top_words_for_feature
from .vectorize import build_label_graph

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_PROFILES",
    "BundleOptions",
    "CodeDocument",
    "CorpusBundle",
    "Hyperparams",
    "LanguageProfile",
    "Model",
    "PipelineConfig",
    "Query",
    "RetrievalIndex",
    "TrainingData",
    "build_bundle",
    "build_label_graph",
    "cfa_init",
    "cfa_model",
    "cfa_plus_cr_train",
    "ingest_corpus",
    "load_config",
    "load_profile",
    "load_queries",
    "top_words_for_feature",
    "total_loss",
    "train",
    "__version__",
]
