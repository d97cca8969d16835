"""Block-delimiter trees and statement normalization.

Source structure is recovered without a grammar: opening delimiters push a
node, closing delimiters pop, and the text in between splits into
statements on the terminator. Header text sitting between the previous
terminator and an opening delimiter ("void run()", "class Foo extends
Bar") is attached to the opened child as its first statement, so a block's
signature travels with the block.

Statements are normalized so that structurally identical code compares
equal: declared identifier names collapse to a placeholder derived from
the declared type, literals collapse to <num>/<str>, and spacing is
canonicalized by joining lexical atoms with single spaces.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .profiles import LanguageProfile


@dataclass
class BlockNode:
    depth: int
    # Direct statements and child nodes, in source order.
    items: list = field(default_factory=list)

    @property
    def statements(self) -> list[str]:
        return [it for it in self.items if isinstance(it, str)]

    @property
    def children(self) -> list["BlockNode"]:
        return [it for it in self.items if isinstance(it, BlockNode)]


@dataclass
class BlockTree:
    root: BlockNode
    recovered: bool = False   # delimiters were unbalanced and repaired


_ATOM = re.compile(
    r"<(?:id:[a-z0-9_$.]+|num|str)>"
    r"|\"(?:\\.|[^\"\\\n])*\""
    r"|'(?:\\.|[^'\\\n])*'"
    r"|0[xX][0-9a-fA-F]+"
    r"|\d+(?:\.\d+)?(?:[eE][+-]?\d+)?[fFlLdDuU]*"
    r"|[A-Za-z_$][A-Za-z0-9_$]*"
    r"|\S"
)
_IDENTIFIER = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*\Z")

# Atoms allowed between a type and the declared name: pointers, refs, arrays.
_TYPE_SUFFIX = {"*", "&", "[", "]"}
# Atom after the declared name that confirms a declaration.
_DECL_BOUNDARY = {"=", ",", ")", ":"}


def _is_identifier(atom: str) -> bool:
    return bool(_IDENTIFIER.match(atom))


def normalize_statement(statement: str, profile: LanguageProfile) -> str:
    """Canonical form of one statement.

    normalize_statement("int maxRetry = 5;", profile) == "int <id:int> = <num>"

    Declaration detection is a best-effort pattern (type atom, optional
    pointer/array punctuation, name atom, then '=', ',', ')', ':' or end of
    statement); it deliberately does not try to be a parser. The function
    is idempotent: placeholders atomize as single units and never re-match.
    """
    statement = statement.replace(profile.statement_terminator, " ")
    atoms = _ATOM.findall(statement)
    if not atoms:
        return ""

    declared: dict[str, str] = {}
    stop = profile.declaration_stop_words
    for i, type_atom in enumerate(atoms):
        if not _is_identifier(type_atom) or type_atom.lower() in stop:
            continue
        j = i + 1
        while j < len(atoms) and atoms[j] in _TYPE_SUFFIX:
            j += 1
        if j >= len(atoms) or not _is_identifier(atoms[j]):
            continue
        name = atoms[j]
        if name.lower() in stop:
            continue
        boundary = atoms[j + 1] if j + 1 < len(atoms) else None
        if boundary is not None and boundary not in _DECL_BOUNDARY:
            continue
        tag = type_atom.lower()
        declared[name] = f"<id:{tag}>"
        # Chained declarators: "int a, b;" (but not across "= expr").
        k = j + 1
        while (boundary == "," and k + 1 < len(atoms)
               and atoms[k] == "," and _is_identifier(atoms[k + 1])):
            nxt = atoms[k + 2] if k + 2 < len(atoms) else None
            if nxt is not None and nxt not in _DECL_BOUNDARY:
                break
            declared[atoms[k + 1]] = f"<id:{tag}>"
            boundary = nxt
            k += 2

    out = []
    for atom in atoms:
        if atom in declared:
            out.append(declared[atom])
        elif atom[0].isdigit():
            out.append("<num>")
        elif atom[0] in "\"'":
            out.append("<str>")
        else:
            out.append(atom)
    return " ".join(out)


def build_block_tree(code: str, profile: LanguageProfile) -> BlockTree:
    """Parse pre-stripped code into a block tree.

    ``code`` must already have comments and string literals removed so
    that delimiters inside them cannot confuse the scan. Unbalanced
    delimiters are repaired (stray closers ignored, open blocks closed at
    end of file) and the tree is marked recovered. Nodes that end up with
    no statements and no surviving children are pruned.
    """
    root = BlockNode(depth=0)
    stack = [root]
    buf: list[str] = []
    recovered = False

    def flush_to(node: BlockNode) -> None:
        text = "".join(buf)
        buf.clear()
        normalized = normalize_statement(text, profile)
        if normalized:
            node.items.append(normalized)

    i, n = 0, len(code)
    od, cd, term = profile.block_open, profile.block_close, profile.statement_terminator
    while i < n:
        if code.startswith(od, i):
            child = BlockNode(depth=len(stack))
            flush_to(child)          # header text belongs to the new block
            stack[-1].items.append(child)
            stack.append(child)
            i += len(od)
        elif code.startswith(cd, i):
            flush_to(stack[-1])
            if len(stack) > 1:
                stack.pop()
            else:
                recovered = True     # stray closer at top level
            i += len(cd)
        elif code.startswith(term, i):
            flush_to(stack[-1])
            i += len(term)
        else:
            buf.append(code[i])
            i += 1
    flush_to(stack[-1])
    if len(stack) > 1:
        recovered = True             # close every block left open
    _prune(root)
    return BlockTree(root=root, recovered=recovered)


def _prune(node: BlockNode) -> bool:
    """Drop empty descendants; returns whether ``node`` carries anything."""
    kept = []
    for item in node.items:
        if isinstance(item, BlockNode):
            if _prune(item):
                kept.append(item)
        else:
            kept.append(item)
    node.items = kept
    return bool(kept)


def serialize_node(node: BlockNode) -> str:
    """Canonical text of a subtree; equal keys mean structurally equal code."""
    parts = []
    for item in node.items:
        if isinstance(item, BlockNode):
            parts.append("{ " + serialize_node(item) + " }")
        else:
            parts.append(item)
    return " ; ".join(parts)


def iter_nodes(node: BlockNode):
    """Yield nodes bottom-up (leaves before their ancestors)."""
    for child in node.children:
        yield from iter_nodes(child)
    yield node
