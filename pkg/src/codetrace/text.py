"""Token extraction and source stripping.

One splitter serves every text channel (comments, identifiers in code,
query text) so that the same string always yields the same tokens. The
split points are underscores, lower-to-upper case transitions, the
boundary between an acronym run and a following capitalized word
("IOException" -> io, exception), and letter/digit boundaries. Everything
is lowercased; tokens shorter than two characters are dropped.

Stop-word handling differs by channel: language keywords are filtered
only from code-derived tokens. A keyword inside a comment or a query
("double", "switch") is ordinary prose and survives.
"""
from __future__ import annotations

import re
import warnings
from collections import Counter
from dataclasses import dataclass

from .profiles import LanguageProfile


class SourceWarning(UserWarning):
    """Recoverable oddity found while scanning a source file."""


ENGLISH_STOP_WORDS = frozenset("""
    a an and are as at be been being but by can could did do does doing done
    down for from had has have having he her hers him his how i if in into
    is it its itself me mine more most my no nor not of on or our ours out
    over she so some such than that the their theirs them then there these
    they this those through to too under until up upon was we were what when
    where which while who whom why will with would you your yours
""".split())

_WORD_RUN = re.compile(r"[A-Za-z0-9_]+")
_BOUNDARY = re.compile(
    r"(?<=[a-z0-9])(?=[A-Z])"        # lower or digit, then upper
    r"|(?<=[A-Z])(?=[A-Z][a-z])"     # acronym run, then capitalized word
    r"|(?<=[A-Za-z])(?=[0-9])"       # letter to digit
    r"|(?<=[0-9])(?=[A-Za-z])"       # digit to letter
)


def split_words(text: str) -> list[str]:
    """Lowercased word fragments of ``text``, in order, length >= 2.

    Examples:
        split_words("maxRetryCount") -> ["max", "retry", "count"]
        split_words("java.io.IOException") -> ["java", "io", "io", "exception"]
        split_words("grid_2d") -> ["grid"]        ("2" and "d" too short)
    """
    out = []
    for run in _WORD_RUN.findall(text):
        for piece in run.split("_"):
            if not piece:
                continue
            for word in _BOUNDARY.split(piece):
                word = word.lower()
                if len(word) >= 2:
                    out.append(word)
    return out


def tokenize_text(text: str, extra_stop_words: frozenset[str] = frozenset()) -> Counter:
    """Token multiset of a free-text string.

    ``extra_stop_words`` carries the language keywords when tokenizing
    code; leave it empty for comments and queries.
    """
    return Counter(
        w for w in split_words(text)
        if w not in ENGLISH_STOP_WORDS and w not in extra_stop_words
    )


@dataclass(frozen=True)
class StrippedSource:
    code: str       # comments and (unless kept) string literals blanked out
    comments: str   # concatenated comment bodies
    unterminated_comment: bool


def strip_source(source: str, profile: LanguageProfile,
                 keep_strings: bool = False) -> StrippedSource:
    """Split a source file into its code stream and its comment text.

    Comments are replaced by a single space in the code stream. String
    literals are likewise blanked (their contents never become tokens or
    statements) unless ``keep_strings`` is set, which relationship
    extraction uses because C include directives live inside quotes.
    Literals do not span lines; a block comment with no closing marker
    swallows the rest of the file.
    """
    code_parts: list[str] = []
    comment_parts: list[str] = []
    unterminated = False
    i, n = 0, len(source)
    while i < n:
        matched = False
        for opener, closer in profile.block_comments:
            if source.startswith(opener, i):
                end = source.find(closer, i + len(opener))
                if end == -1:
                    comment_parts.append(source[i + len(opener):])
                    unterminated = True
                    i = n
                else:
                    comment_parts.append(source[i + len(opener):end])
                    code_parts.append(" ")
                    i = end + len(closer)
                matched = True
                break
        if matched:
            continue
        for marker in profile.line_comments:
            if source.startswith(marker, i):
                end = source.find("\n", i)
                if end == -1:
                    end = n
                comment_parts.append(source[i + len(marker):end])
                code_parts.append(" ")
                i = end   # the newline itself stays in the code stream
                matched = True
                break
        if matched:
            continue
        for delim in profile.string_delimiters:
            if source.startswith(delim, i):
                j = i + len(delim)
                closed = False
                while j < n:
                    if source[j] == "\\":
                        j += 2
                        continue
                    if source.startswith(delim, j):
                        j += len(delim)
                        closed = True
                        break
                    if source[j] == "\n":
                        break
                    j += 1
                code_parts.append(source[i:j] if keep_strings else " ")
                i = j
                matched = True
                break
        if matched:
            continue
        code_parts.append(source[i])
        i += 1
    return StrippedSource("".join(code_parts), "\n".join(comment_parts), unterminated)


def extract_tokens(source: str, profile: LanguageProfile) -> Counter:
    """Token multiset of a source file: comment words plus identifier fragments.

    String literal contents are excluded. An unterminated block comment
    turns the remainder of the file into comment text and raises a
    ``SourceWarning``.
    """
    stripped = strip_source(source, profile)
    if stripped.unterminated_comment:
        warnings.warn(
            "unterminated block comment; trailing source treated as comment text",
            SourceWarning, stacklevel=2)
    tokens = tokenize_text(stripped.comments)
    tokens.update(tokenize_text(stripped.code, profile.keywords))
    return tokens
