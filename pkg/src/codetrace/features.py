"""Code-side features: snippets, relationships, filtering, content links.

Every block-tree node that owns at least one statement yields a snippet
feature keyed by the canonical text of its subtree, so the same nested
structure appearing in two files maps to the same feature. A feature's
surface words come from the statements at its own nesting level only: a
word owned by a deeper snippet is not re-counted by the enclosing ones,
which keeps the surface words of a node disjoint from every ancestor's.

Relationship features (inheritance, interface implementation, imported or
qualified type references) are extracted with per-profile regexes. Their
surface words are the fragments of the target name, split like any
identifier, so "refs:java.io.ioexception" shares the word "exception"
with queries that mention exceptions.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .blocks import build_block_tree, iter_nodes, serialize_node
from .corpus import CodeDocument
from .profiles import LanguageProfile
from .text import strip_source, tokenize_text

KIND_SNIPPET = "snippet"
KIND_RELATIONSHIP = "relationship"

_PLACEHOLDER = re.compile(r"<[^<>\s]*>")
_QUALIFIED_NAME = re.compile(
    r"\b[A-Za-z_$][\w$]*(?:\.[A-Za-z_$][\w$]*)+\b")
_ACCESS_WORDS = frozenset({"public", "private", "protected", "virtual", "final"})
_GENERIC_ARGS = re.compile(r"<[^<>]*>")


class FeatureFilterError(ValueError):
    """Frequency filtering removed every feature."""


@dataclass
class CodeFeature:
    kind: str
    key: str
    surface_words: Counter


@dataclass
class FeatureSet:
    """Corpus-level feature registry plus the per-document multiset map."""
    features: dict[str, CodeFeature] = field(default_factory=dict)
    doc_features: dict[str, Counter] = field(default_factory=dict)
    flagged_docs: list[str] = field(default_factory=list)

    def document_frequency(self) -> dict[str, int]:
        df: dict[str, int] = {key: 0 for key in self.features}
        for counts in self.doc_features.values():
            for key in counts:
                df[key] += 1
        return df

    def format_dump(self) -> str:
        """``kind<TAB>key<TAB>document-frequency`` lines, sorted by key."""
        df = self.document_frequency()
        lines = [f"{feat.kind}\t{key}\t{df[key]}"
                 for key, feat in sorted(self.features.items())]
        return "\n".join(lines) + "\n" if lines else ""


def _surface_tokens(statements: list[str], profile: LanguageProfile) -> Counter:
    # Placeholders are structure, not words: "<id:int>" must not yield "id".
    text = _PLACEHOLDER.sub(" ", " ".join(statements))
    return tokenize_text(text, profile.keywords)


def extract_snippets(doc: CodeDocument, profile: LanguageProfile,
                     ) -> tuple[list[CodeFeature], Counter, bool]:
    """Snippet features of one document, bottom-up, with multiplicities."""
    stripped = strip_source(doc.source, profile)
    tree = build_block_tree(stripped.code, profile)
    found: list[CodeFeature] = []
    counts: Counter = Counter()

    subtree_tokens: dict[int, set] = {}
    for node in iter_nodes(tree.root):
        own = _surface_tokens(node.statements, profile)
        below: set = set()
        for child in node.children:
            below |= subtree_tokens[id(child)]
        if node.statements:
            key = serialize_node(node)
            surface = Counter({t: c for t, c in own.items() if t not in below})
            found.append(CodeFeature(KIND_SNIPPET, key, surface))
            counts[key] += 1
        subtree_tokens[id(node)] = below | set(own)
    return found, counts, tree.recovered


def _relationship_feature(kind_prefix: str, target: str) -> CodeFeature:
    target = target.strip()
    key = f"{kind_prefix}:{target.lower()}"
    surface = tokenize_text(target)
    return CodeFeature(KIND_RELATIONSHIP, key, surface)


def _split_type_list(captured: str) -> list[str]:
    names = []
    for part in _GENERIC_ARGS.sub(" ", captured).split(","):
        words = [w for w in part.split() if w.lower() not in _ACCESS_WORDS]
        if words:
            names.append(words[-1])
    return names


def extract_relationships(doc: CodeDocument, profile: LanguageProfile,
                          ) -> tuple[list[CodeFeature], Counter]:
    """Inheritance, implementation and reference features of one document.

    Runs over comment-stripped but string-preserving text, because include
    directives keep their targets inside quotes. Reference features come
    from import/include directives plus qualified names used in the body
    whose final segment is capitalized (filters out method chains).
    """
    stripped = strip_source(doc.source, profile, keep_strings=True)
    code = stripped.code
    found: list[CodeFeature] = []
    counts: Counter = Counter()

    def add(feature: CodeFeature) -> None:
        if not feature.key.split(":", 1)[1]:
            return
        found.append(feature)
        counts[feature.key] += 1

    for pattern in profile.extends_patterns:
        for match in re.finditer(pattern, code):
            for name in _split_type_list(match.group(1)):
                add(_relationship_feature("inherits", name))
    for pattern in profile.implements_patterns:
        for match in re.finditer(pattern, code):
            for name in _split_type_list(match.group(1)):
                add(_relationship_feature("implements", name))
    for pattern in profile.import_patterns:
        for match in re.finditer(pattern, code):
            add(_relationship_feature("refs", match.group(1)))
    for match in _QUALIFIED_NAME.finditer(code):
        name = match.group(0)
        if name.rsplit(".", 1)[-1][0].isupper():
            add(_relationship_feature("refs", name))
    return found, counts


def build_feature_set(documents: list[CodeDocument], profile: LanguageProfile,
                      include_relationships: bool = True) -> FeatureSet:
    """Extract every feature of every document; no filtering yet."""
    fs = FeatureSet()
    for doc in documents:
        doc_counts: Counter = Counter()
        snips, counts, recovered = extract_snippets(doc, profile)
        if recovered:
            fs.flagged_docs.append(doc.id)
        doc_counts.update(counts)
        for feat in snips:
            fs.features.setdefault(feat.key, feat)
        if include_relationships:
            rels, rel_counts = extract_relationships(doc, profile)
            doc_counts.update(rel_counts)
            for feat in rels:
                fs.features.setdefault(feat.key, feat)
        fs.doc_features[doc.id] = doc_counts
    return fs


def filter_by_frequency(fs: FeatureSet, lower: int, upper: float,
                        relationship_lower: int | None = None,
                        relationship_upper: float | None = None) -> FeatureSet:
    """Keep features whose document frequency lies in [lower, upper].

    ``upper`` may be ``math.inf``. Relationship features use the same
    bounds unless overridden. Raises if nothing survives, since an empty
    feature space makes every later stage meaningless.
    """
    rl = lower if relationship_lower is None else relationship_lower
    ru = upper if relationship_upper is None else relationship_upper
    for lo, up in ((lower, upper), (rl, ru)):
        if not (1 <= lo <= up):
            raise ValueError(f"need 1 <= lower <= upper, got ({lo}, {up})")

    df = fs.document_frequency()

    def keeps(feat: CodeFeature) -> bool:
        lo, up = (rl, ru) if feat.kind == KIND_RELATIONSHIP else (lower, upper)
        return lo <= df[feat.key] <= up

    kept = {key: feat for key, feat in fs.features.items() if keeps(feat)}
    if not kept:
        raise FeatureFilterError(
            f"frequency bounds ({lower}, {upper}) removed all "
            f"{len(fs.features)} features; widen the bounds")
    out = FeatureSet(features=kept, flagged_docs=list(fs.flagged_docs))
    for doc_id, counts in fs.doc_features.items():
        out.doc_features[doc_id] = Counter(
            {k: c for k, c in counts.items() if k in kept})
    return out


def build_content_matrix(vocab, feature_index,
                         features: dict[str, CodeFeature]) -> np.ndarray:
    """Binary word-by-feature matrix: 1 where the word is a surface word.

    Row order follows the vocabulary, column order the feature index; the
    matrix therefore aligns with the text and code data matrices.
    """
    R = np.zeros((len(vocab), len(feature_index)), dtype=np.float64)
    for key, j in feature_index.items():
        for token in features[key].surface_words:
            i = vocab.get(token)
            if i is not None:
                R[i, j] = 1.0
    return R
