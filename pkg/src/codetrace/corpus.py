"""Corpus ingestion: source files in, documents and queries out."""
from __future__ import annotations

import hashlib
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .profiles import LanguageProfile
from .text import SourceWarning, extract_tokens, tokenize_text


class CorpusError(ValueError):
    """Fatal problem with corpus or query input."""


@dataclass(frozen=True)
class CodeDocument:
    id: str          # relative posix path, unique within the corpus
    path: str
    source: str
    tokens: Counter
    label: str


@dataclass(frozen=True)
class Query:
    id: str
    text: str
    tokens: Counter
    label: str | None = None


@dataclass
class IngestionReport:
    skipped: list[tuple[str, str]] = field(default_factory=list)   # (path, reason)
    warnings: list[tuple[str, str]] = field(default_factory=list)  # (doc id, message)

    def format(self) -> str:
        lines = [f"documents-skipped\t{len(self.skipped)}"]
        for path, reason in self.skipped:
            lines.append(f"skip\t{path}\t{reason}")
        for doc_id, message in self.warnings:
            lines.append(f"warn\t{doc_id}\t{message}")
        return "\n".join(lines) + "\n"


def load_manifest(path: str | Path) -> dict[str, str]:
    """Read a ``relative-path<TAB>label`` manifest file."""
    mapping: dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise CorpusError(f"{path}:{lineno}: manifest line must be "
                                  f"'path<TAB>label', got {line!r}")
            mapping[parts[0]] = parts[1]
    if not mapping:
        raise CorpusError(f"{path}: manifest is empty")
    return mapping


def ingest_corpus(root: str | Path, profile: LanguageProfile,
                  label_rule: str = "per-file",
                  manifest: dict[str, str] | None = None,
                  ) -> tuple[list[CodeDocument], IngestionReport]:
    """Walk ``root`` and build documents for every file matching the profile.

    Files are visited in lexicographic order of their relative path, which
    fixes document identity and every downstream ordering. Unreadable or
    non-UTF-8 files are skipped and listed in the report. With the
    ``manifest`` label rule only listed files are ingested and every
    manifest entry must exist on disk; with ``per-file`` each document's
    label is its own id.
    """
    root = Path(root)
    if not root.is_dir():
        raise CorpusError(f"corpus root {root} is not a directory")
    if label_rule not in ("per-file", "manifest"):
        raise CorpusError(f"unknown label rule {label_rule!r}")
    if label_rule == "manifest" and not manifest:
        raise CorpusError("label rule 'manifest' needs a manifest mapping")

    candidates = sorted(
        p.relative_to(root).as_posix()
        for p in root.rglob("*")
        if p.is_file() and p.suffix in profile.extensions
    )
    if label_rule == "manifest":
        missing = sorted(set(manifest) - set(candidates))
        if missing:
            raise CorpusError(f"manifest entry missing on disk: {missing[0]}")
        candidates = sorted(set(candidates) & set(manifest))

    report = IngestionReport()
    documents = []
    for rel in candidates:
        full = root / rel
        try:
            source = full.read_text(encoding="utf-8")
        except UnicodeDecodeError:
            report.skipped.append((rel, "not valid UTF-8"))
            continue
        except OSError as exc:
            report.skipped.append((rel, f"unreadable: {exc.strerror}"))
            continue
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", SourceWarning)
            tokens = extract_tokens(source, profile)
        for w in caught:
            report.warnings.append((rel, str(w.message)))
        label = manifest[rel] if label_rule == "manifest" else rel
        documents.append(CodeDocument(id=rel, path=str(full), source=source,
                                      tokens=tokens, label=label))
    if not documents:
        raise CorpusError(f"no ingestable files under {root} "
                          f"(extensions {', '.join(profile.extensions)})")
    return documents, report


def corpus_fingerprint(documents: list[CodeDocument]) -> str:
    """Content hash over sorted (id, source hash) pairs.

    Embedded in every artifact so stale indexes and models are detected
    instead of silently mixed.
    """
    outer = hashlib.sha256()
    for doc in sorted(documents, key=lambda d: d.id):
        inner = hashlib.sha256(doc.source.encode("utf-8")).hexdigest()
        outer.update(doc.id.encode("utf-8"))
        outer.update(b"\x00")
        outer.update(inner.encode("ascii"))
        outer.update(b"\n")
    return outer.hexdigest()


def load_queries(path: str | Path, require_labels: bool = False) -> list[Query]:
    """Read a UTF-8 TSV query file: ``id<TAB>label<TAB>text`` per line.

    The label field may be empty at serving time; with ``require_labels``
    (evaluation) an empty label is fatal. Query text is tokenized exactly
    like a comment body. Records whose text is empty, or empties out after
    stop-word removal, are rejected with a warning rather than an error.
    """
    queries = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise CorpusError(f"{path}:{lineno}: expected 3 tab-separated "
                                  f"fields, got {len(parts)}")
            qid, label, text = parts
            if not qid:
                raise CorpusError(f"{path}:{lineno}: empty query id")
            if qid in seen:
                raise CorpusError(f"{path}:{lineno}: duplicate query id {qid!r}")
            seen.add(qid)
            if require_labels and not label:
                raise CorpusError(f"{path}:{lineno}: evaluation requires "
                                  f"labeled queries")
            if not text.strip():
                warnings.warn(f"{path}:{lineno}: query {qid!r} has empty text, "
                              f"skipped", SourceWarning, stacklevel=2)
                continue
            tokens = tokenize_text(text)
            if not tokens:
                warnings.warn(f"{path}:{lineno}: query {qid!r} has no tokens "
                              f"after stop-word removal, skipped",
                              SourceWarning, stacklevel=2)
                continue
            queries.append(Query(id=qid, text=text, tokens=tokens,
                                 label=label or None))
    return queries
