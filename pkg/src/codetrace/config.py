"""Pipeline configuration: one JSON file, flat keys, flags win.

Every knob has a documented default so an empty config is runnable.
Unknown keys are rejected instead of ignored, since a typo like
"lamda2" silently reverting to a default would poison experiments.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .learning import Hyperparams
from .pipeline import BundleOptions

DEFAULT_CUTOFFS = {
    "P": (1, 2, 4, 5),
    "R": (1, 3, 5, 20),
    "nDCG": (2, 4, 10, 20),
}
KNOWN_METHODS = ("cos", "lm", "lsi", "cfa", "cfa_cr", "codetrace")


class ConfigError(ValueError):
    """Invalid configuration file or option value."""


@dataclass(frozen=True)
class PipelineConfig:
    corpus_root: str = "corpus"
    profile: str = "java"            # builtin name or path to a JSON profile
    query_file: str | None = None
    manifest: str | None = None      # path<TAB>label file; None = per-file labels
    output_dir: str = "out"

    feature_min_docs: int = 2
    feature_max_docs: int | None = None   # None = half the corpus
    relationship_min_docs: int | None = None
    relationship_max_docs: int | None = None
    include_relationships: bool = True
    weighting: str = "tfidf"

    lambda1: float = 1.0
    lambda2: float = 0.1
    lambda3: float = 0.2
    k: int = 64
    eta: float = 1e-3
    max_iter: int = 500
    tol: float = 1e-6
    backtracking: bool = False

    alpha: float = 0.5
    lm_smoothing: float = 0.5
    lsi_k: int = 64
    methods: tuple[str, ...] = KNOWN_METHODS
    n_folds: int = 5
    conventional_split: bool = False
    seed: int = 0

    def validate(self) -> None:
        if self.weighting not in ("tfidf", "count"):
            raise ConfigError(f"weighting must be 'tfidf' or 'count', "
                              f"got {self.weighting!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 < self.lm_smoothing < 1.0:
            raise ConfigError(f"lm_smoothing must be in (0, 1), "
                              f"got {self.lm_smoothing}")
        if self.feature_min_docs < 1:
            raise ConfigError("feature_min_docs must be >= 1")
        if (self.feature_max_docs is not None
                and self.feature_max_docs < self.feature_min_docs):
            raise ConfigError("feature_max_docs below feature_min_docs")
        if self.lsi_k < 1:
            raise ConfigError("lsi_k must be >= 1")
        if self.n_folds < 2:
            raise ConfigError("n_folds must be >= 2")
        unknown = [m for m in self.methods if m not in KNOWN_METHODS]
        if unknown:
            raise ConfigError(f"unknown methods {unknown}; "
                              f"known: {list(KNOWN_METHODS)}")
        try:
            self.hyper().validate(d_x=max(self.k, 1), d_y=max(self.k, 1))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def hyper(self) -> Hyperparams:
        return Hyperparams(lambda1=self.lambda1, lambda2=self.lambda2,
                           lambda3=self.lambda3, k=self.k, eta=self.eta,
                           max_iter=self.max_iter, tol=self.tol,
                           seed=self.seed, backtracking=self.backtracking)

    def bundle_options(self) -> BundleOptions:
        return BundleOptions(
            weighting=self.weighting,
            feature_min_docs=self.feature_min_docs,
            feature_max_docs=self.feature_max_docs,
            relationship_min_docs=self.relationship_min_docs,
            relationship_max_docs=self.relationship_max_docs,
            include_relationships=self.include_relationships)


_FIELD_TYPES = {f.name: f for f in fields(PipelineConfig)}


def _coerce(name: str, value):
    if name == "methods":
        if not isinstance(value, (list, tuple)) or not all(
                isinstance(v, str) for v in value):
            raise ConfigError(f"{name} must be a list of method names")
        return tuple(value)
    return value


def load_config(path: str | Path | None = None,
                overrides: dict | None = None) -> PipelineConfig:
    """Config file first, then overrides (command-line flags) on top."""
    config = PipelineConfig()
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}")
        if not isinstance(raw, dict):
            raise ConfigError(f"config {path} must be a JSON object")
        unknown = sorted(set(raw) - set(_FIELD_TYPES))
        if unknown:
            raise ConfigError(f"config {path} has unknown keys: {unknown}")
        config = replace(config, **{k: _coerce(k, v) for k, v in raw.items()})
    if overrides:
        unknown = sorted(set(overrides) - set(_FIELD_TYPES))
        if unknown:
            raise ConfigError(f"unknown config overrides: {unknown}")
        config = replace(config,
                         **{k: _coerce(k, v) for k, v in overrides.items()})
    config.validate()
    return config


def dump_config(config: PipelineConfig) -> str:
    payload = asdict(config)
    payload["methods"] = list(payload["methods"])
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
