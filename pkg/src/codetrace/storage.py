"""Text formats for matrices and trained models.

Everything is line-oriented UTF-8 so artifacts diff cleanly and rebuild
byte-identically. Floats are written with 17 significant digits, which
round-trips IEEE doubles exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .learning import Hyperparams, Model

MODEL_MAGIC = "codetrace-model"
MODEL_VERSION = 1


class StorageError(ValueError):
    """Malformed or incompatible artifact file."""


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def format_matrix(A: np.ndarray) -> str:
    """Header line "rows cols", then one whitespace-separated row per line."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise StorageError(f"matrix dump needs a 2-d array, got {A.ndim}-d")
    lines = [f"{A.shape[0]} {A.shape[1]}"]
    for row in A:
        lines.append(" ".join(format_float(v) for v in row))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise StorageError("empty matrix dump")
    try:
        rows, cols = (int(v) for v in lines[0].split())
    except ValueError:
        raise StorageError(f"bad matrix header: {lines[0]!r}")
    if len(lines) - 1 != rows:
        raise StorageError(f"expected {rows} rows, found {len(lines) - 1}")
    out = np.zeros((rows, cols), dtype=np.float64)
    for i, line in enumerate(lines[1:]):
        values = line.split()
        if len(values) != cols:
            raise StorageError(f"row {i}: expected {cols} values, "
                               f"found {len(values)}")
        out[i] = [float(v) for v in values]
    return out


_HYPER_FIELDS = ("lambda1", "lambda2", "lambda3", "k", "eta",
                 "max_iter", "tol", "seed", "backtracking")


@dataclass
class StoredModel:
    model: Model
    vocab_tokens: tuple[str, ...]
    feature_keys: tuple[tuple[str, str], ...]   # (kind, key)
    fingerprint: str
    weighting: str
    alpha: float


def save_model(path, model: Model, vocab_tokens, feature_entries,
               fingerprint: str, weighting: str, alpha: float) -> None:
    """Write a single self-contained model file.

    The file carries the vocabulary and feature listing alongside U and V
    so a query process needs nothing else to agree with the trainer about
    row meaning, plus the corpus fingerprint to refuse mismatched indexes.
    """
    d_x, k = model.U.shape
    d_y = model.V.shape[0]
    if len(vocab_tokens) != d_x:
        raise StorageError(f"vocabulary size {len(vocab_tokens)} does not "
                           f"match U rows {d_x}")
    if len(feature_entries) != d_y:
        raise StorageError(f"feature list size {len(feature_entries)} does "
                           f"not match V rows {d_y}")
    lines = [f"{MODEL_MAGIC} {MODEL_VERSION}",
             f"fingerprint {fingerprint}",
             f"weighting {weighting}",
             f"alpha {format_float(alpha)}"]
    hp = model.hyper
    for name in _HYPER_FIELDS:
        value = getattr(hp, name)
        if isinstance(value, bool):
            lines.append(f"{name} {int(value)}")
        elif isinstance(value, int):
            lines.append(f"{name} {value}")
        else:
            lines.append(f"{name} {format_float(value)}")
    lines.append(f"vocab {d_x}")
    lines.extend(vocab_tokens)
    lines.append(f"features {d_y}")
    lines.extend(f"{kind}\t{key}" for kind, key in feature_entries)
    lines.append(f"U {d_x} {k}")
    for row in model.U:
        lines.append(" ".join(format_float(v) for v in row))
    lines.append(f"V {d_y} {k}")
    for row in model.V:
        lines.append(" ".join(format_float(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def _expect(line: str, name: str) -> str:
    parts = line.split(None, 1)
    if len(parts) != 2 or parts[0] != name:
        raise StorageError(f"expected '{name} <value>', got {line!r}")
    return parts[1]


def load_model(path) -> StoredModel:
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    it = iter(lines)

    def next_line() -> str:
        try:
            return next(it)
        except StopIteration:
            raise StorageError(f"{path}: truncated model file")

    header = next_line().split()
    if len(header) != 2 or header[0] != MODEL_MAGIC:
        raise StorageError(f"{path}: not a model file")
    if int(header[1]) != MODEL_VERSION:
        raise StorageError(f"{path}: unsupported model version {header[1]} "
                           f"(this build reads version {MODEL_VERSION})")
    fingerprint = _expect(next_line(), "fingerprint")
    weighting = _expect(next_line(), "weighting")
    alpha = float(_expect(next_line(), "alpha"))
    raw: dict[str, str] = {}
    for name in _HYPER_FIELDS:
        raw[name] = _expect(next_line(), name)
    hyper = Hyperparams(
        lambda1=float(raw["lambda1"]), lambda2=float(raw["lambda2"]),
        lambda3=float(raw["lambda3"]), k=int(raw["k"]), eta=float(raw["eta"]),
        max_iter=int(raw["max_iter"]), tol=float(raw["tol"]),
        seed=int(raw["seed"]), backtracking=bool(int(raw["backtracking"])))

    d_x = int(_expect(next_line(), "vocab"))
    vocab_tokens = tuple(next_line() for _ in range(d_x))
    d_y = int(_expect(next_line(), "features"))
    feature_keys = []
    for _ in range(d_y):
        parts = next_line().split("\t")
        if len(parts) != 2:
            raise StorageError(f"{path}: bad feature line {parts!r}")
        feature_keys.append((parts[0], parts[1]))

    def read_matrix(name: str, rows: int) -> np.ndarray:
        head = next_line().split()
        if len(head) != 3 or head[0] != name or int(head[1]) != rows:
            raise StorageError(f"{path}: bad {name} header {head!r}")
        cols = int(head[2])
        out = np.zeros((rows, cols), dtype=np.float64)
        for i in range(rows):
            values = next_line().split()
            if len(values) != cols:
                raise StorageError(f"{path}: {name} row {i} has "
                                   f"{len(values)} values, expected {cols}")
            out[i] = [float(v) for v in values]
        return out

    U = read_matrix("U", d_x)
    V = read_matrix("V", d_y)
    if U.shape[1] != hyper.k or V.shape[1] != hyper.k:
        raise StorageError(f"{path}: matrix width does not match k={hyper.k}")
    model = Model(U=U, V=V, hyper=hyper)
    return StoredModel(model=model, vocab_tokens=vocab_tokens,
                       feature_keys=tuple(feature_keys),
                       fingerprint=fingerprint, weighting=weighting,
                       alpha=alpha)
