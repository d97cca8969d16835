"""Language profiles.

A profile tells the pipeline how to take a source file apart without a real
parser: comment markers, string delimiters, block delimiters, the statement
terminator, the keyword list used as extra stop words for code-derived
tokens, and the regexes that drive relationship extraction.

Profiles for a Java-like and a C-like language ship as module constants.
Custom profiles load from a JSON file whose keys mirror the dataclass
fields below; unknown keys are rejected so typos fail loudly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields


class ProfileError(ValueError):
    """Raised when a profile definition is inconsistent or malformed."""


JAVA_KEYWORDS = frozenset("""
    abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package
    private protected public record return sealed short static strictfp
    super switch synchronized this throw throws transient try var void
    volatile while yield true false null
""".split())

C_KEYWORDS = frozenset("""
    auto bool break case char class const continue default define defined do
    double elif else endif enum extern float for goto if ifdef ifndef include
    inline int long namespace new delete pragma private protected public
    register restrict return short signed sizeof static struct switch
    template typedef typename undef union unsigned using virtual void
    volatile while true false null nullptr
""".split())

# Words that never act as the type in a best-effort declaration match.
_JAVA_NON_TYPE = frozenset("""
    abstract assert break case catch class continue default do else enum
    extends final finally for goto if implements import instanceof interface
    native new package private protected public return sealed static
    strictfp super switch synchronized this throw throws transient try while
    yield permits record
""".split())

_C_NON_TYPE = frozenset("""
    break case class continue default delete do else enum for goto if
    namespace new private protected public return sizeof struct switch
    template typedef typename union using virtual while
""".split())


@dataclass(frozen=True)
class LanguageProfile:
    name: str
    extensions: tuple[str, ...]
    block_open: str = "{"
    block_close: str = "}"
    line_comments: tuple[str, ...] = ("//",)
    block_comments: tuple[tuple[str, str], ...] = (("/*", "*/"),)
    string_delimiters: tuple[str, ...] = ('"', "'")
    statement_terminator: str = ";"
    keywords: frozenset[str] = frozenset()
    # Regexes with exactly one capture group holding the target name.
    import_patterns: tuple[str, ...] = ()
    # Regexes whose capture group holds a comma-separated base-type list.
    extends_patterns: tuple[str, ...] = ()
    implements_patterns: tuple[str, ...] = ()
    declaration_stop_words: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if not self.name:
            raise ProfileError("profile name must be non-empty")
        if not self.block_open or not self.block_close:
            raise ProfileError("block delimiters must be non-empty")
        if self.block_open == self.block_close:
            raise ProfileError("block open and close delimiters must differ")
        if not self.line_comments and not self.block_comments:
            raise ProfileError(
                "profile needs at least one comment marker (line or block)")
        if not self.statement_terminator:
            raise ProfileError("statement terminator must be non-empty")
        for pair in self.block_comments:
            if len(pair) != 2 or not pair[0] or not pair[1]:
                raise ProfileError(f"bad block comment marker pair: {pair!r}")


JAVA_PROFILE = LanguageProfile(
    name="java",
    extensions=(".java",),
    keywords=JAVA_KEYWORDS,
    import_patterns=(
        r"(?m)^\s*import\s+(?:static\s+)?([A-Za-z_$][\w$]*(?:\.[A-Za-z_$*][\w$]*)*)\s*;",
    ),
    extends_patterns=(
        r"\b(?:class|interface)\s+[\w$]+(?:\s*<[^<>]*>)?\s+extends\s+([\w.$,\s<>]+?)(?=\bimplements\b|\{|;|$)",
    ),
    implements_patterns=(
        r"\bimplements\s+([\w.$,\s<>]+?)(?=\{|;|$)",
    ),
    declaration_stop_words=_JAVA_NON_TYPE,
)

C_PROFILE = LanguageProfile(
    name="c",
    extensions=(".c", ".h", ".cc", ".cpp", ".hpp"),
    keywords=C_KEYWORDS,
    import_patterns=(
        r'(?m)^\s*#\s*include\s*[<"]([^<>"\n]+)[>"]',
    ),
    extends_patterns=(
        # C++ style "class X : public A, private B {"
        r"\b(?:class|struct)\s+[\w$]+\s*:\s*([^{;]+)",
    ),
    implements_patterns=(),
    declaration_stop_words=_C_NON_TYPE,
)

BUILTIN_PROFILES = {p.name: p for p in (JAVA_PROFILE, C_PROFILE)}

_LIST_FIELDS = {"extensions", "line_comments", "import_patterns",
                "extends_patterns", "implements_patterns"}
_SET_FIELDS = {"keywords", "declaration_stop_words"}


def profile_from_dict(data: dict) -> LanguageProfile:
    known = {f.name for f in fields(LanguageProfile)}
    unknown = set(data) - known
    if unknown:
        raise ProfileError(f"unknown profile keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in _LIST_FIELDS:
            kwargs[key] = tuple(value)
        elif key in _SET_FIELDS:
            kwargs[key] = frozenset(value)
        elif key == "block_comments":
            kwargs[key] = tuple((pair[0], pair[1]) for pair in value)
        elif key == "string_delimiters":
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    return LanguageProfile(**kwargs)


def load_profile(name_or_path: str) -> LanguageProfile:
    """Resolve a built-in profile name, or load a JSON profile file."""
    if name_or_path in BUILTIN_PROFILES:
        return BUILTIN_PROFILES[name_or_path]
    try:
        with open(name_or_path, encoding="utf-8") as handle:
            data = json.load(handle)
    except FileNotFoundError:
        raise ProfileError(
            f"unknown profile {name_or_path!r}: not a built-in "
            f"({', '.join(sorted(BUILTIN_PROFILES))}) and no such file")
    except json.JSONDecodeError as exc:
        raise ProfileError(f"profile file {name_or_path}: invalid JSON ({exc})")
    if not isinstance(data, dict):
        raise ProfileError(f"profile file {name_or_path} must hold a JSON object")
    return profile_from_dict(data)
