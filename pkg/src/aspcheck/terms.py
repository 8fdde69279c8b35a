"""Ground ASP terms and facts: parsing, rendering, ordering.

The term grammar covers exactly what shows up in ground data: integers
(unbounded at this layer; 32-bit range enforcement is a validation facet,
not a parsing concern), double-quoted strings, alphanumeric constants,
functions with at least one argument, and tuples.  Variables, intervals
and rule syntax are deliberately absent; those belong to the rule engine.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

__all__ = [
    "Number",
    "Str",
    "Const",
    "Func",
    "Tuple",
    "GroundTerm",
    "Fact",
    "ParseError",
    "parse_term",
    "parse_facts",
    "render",
    "compare",
    "sort_key",
]

# Matches gringo-style identifiers; leading underscores are legal so that
# auxiliary predicates like __in_range can be declared and derived.
IDENT_RE = re.compile(r"_*[a-z][A-Za-z0-9_]*\Z")


@dataclass(frozen=True, slots=True)
class Number:
    value: int


@dataclass(frozen=True, slots=True)
class Str:
    """String content without the surrounding quotes."""

    value: str


@dataclass(frozen=True, slots=True)
class Const:
    name: str


@dataclass(frozen=True, slots=True)
class Func:
    name: str
    args: tuple["GroundTerm", ...]

    def __post_init__(self) -> None:
        if not self.args:
            raise ValueError("zero-arity symbols are Const, not Func")


@dataclass(frozen=True, slots=True)
class Tuple:
    args: tuple["GroundTerm", ...]


GroundTerm = Union[Number, Str, Const, Func, Tuple]


@dataclass(frozen=True, slots=True)
class Fact:
    """A ground atom: predicate name plus argument terms (possibly none)."""

    predicate: str
    args: tuple[GroundTerm, ...] = ()

    def term(self) -> GroundTerm:
        """The fact viewed as a term (used for rendering and ordering)."""
        return Func(self.predicate, self.args) if self.args else Const(self.predicate)


class ParseError(ValueError):
    """Syntax error in term or fact text, with position information."""

    def __init__(self, message: str, *, offset: int, line: int | None = None,
                 column: int | None = None):
        self.offset = offset
        self.line = line
        self.column = column
        where = f"line {line}, column {column}" if line is not None else f"offset {offset}"
        super().__init__(f"{message} ({where})")


# ---------------------------------------------------------------------------
# Tokenizer


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<number>\d+)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<ident>_*[a-z][A-Za-z0-9_]*)
  | (?P<rulearrow>:-)
  | (?P<punct>[(),.\-])
    """,
    re.VERBOSE,
)

_ESCAPES = {"\\\\": "\\", '\\"': '"', "\\n": "\n"}


def _decode_string(lexeme: str, offset: int) -> str:
    body = lexeme[1:-1]
    out: list[str] = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            esc = body[i : i + 2]
            if esc not in _ESCAPES:
                raise ParseError(f"unsupported string escape {esc!r}", offset=offset + 1 + i)
            out.append(_ESCAPES[esc])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _encode_string(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


@dataclass(frozen=True, slots=True)
class _Token:
    kind: str  # number | string | ident | rulearrow | punct | end
    text: str
    offset: int


def _tokenize(text: str, *, keep_comments: bool = False) -> Iterator[_Token]:
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", offset=pos,
                             **_line_col(text, pos))
        kind = m.lastgroup
        pos = m.end()
        if kind == "ws" or (kind == "comment" and not keep_comments):
            continue
        yield _Token(kind, m.group(), m.start())
    yield _Token("end", "", n)


def _line_col(text: str, offset: int) -> dict[str, int]:
    line = text.count("\n", 0, offset) + 1
    column = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return {"line": line, "column": column}


# ---------------------------------------------------------------------------
# Recursive-descent parser


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = list(_tokenize(text))
        self.i = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, expected: str) -> ParseError:
        tok = self.cur
        got = repr(tok.text) if tok.kind != "end" else "end of input"
        return ParseError(f"expected {expected}, got {got}", offset=tok.offset,
                          **_line_col(self.text, tok.offset))

    def expect(self, text: str, expected: str) -> _Token:
        if self.cur.text != text:
            raise self.error(expected)
        return self.advance()

    def term(self) -> GroundTerm:
        tok = self.cur
        if tok.kind == "number":
            self.advance()
            return Number(int(tok.text))
        if tok.text == "-":
            self.advance()
            if self.cur.kind != "number":
                raise self.error("digits after '-'")
            return Number(-int(self.advance().text))
        if tok.kind == "string":
            self.advance()
            return Str(_decode_string(tok.text, tok.offset))
        if tok.kind == "ident":
            self.advance()
            if self.cur.text == "(":
                self.advance()
                args = self.term_list()
                self.expect(")", "')' closing argument list")
                return Func(tok.text, tuple(args))
            return Const(tok.text)
        if tok.text == "(":
            self.advance()
            if self.cur.text == ")":
                self.advance()
                return Tuple(())
            args = [self.term()]
            while self.cur.text == ",":
                self.advance()
                if self.cur.text == ")":  # trailing comma: (1,)
                    break
                args.append(self.term())
            self.expect(")", "')' closing tuple")
            return Tuple(tuple(args))
        raise self.error("a term (number, string, constant, function or tuple)")

    def term_list(self) -> list[GroundTerm]:
        args = [self.term()]
        while self.cur.text == ",":
            self.advance()
            args.append(self.term())
        return args

    def fact(self) -> Fact:
        tok = self.cur
        if tok.kind != "ident":
            raise self.error("a predicate name")
        self.advance()
        args: tuple[GroundTerm, ...] = ()
        if self.cur.text == "(":
            self.advance()
            args = tuple(self.term_list())
            self.expect(")", "')' closing argument list")
        self.expect(".", "'.' terminating the fact")
        return Fact(tok.text, args)


def parse_term(text: str) -> GroundTerm:
    """Parse one ground term; the whole input must be consumed."""
    parser = _Parser(text)
    term = parser.term()
    if parser.cur.kind != "end":
        raise parser.error("end of input")
    return term


def parse_facts(text: str) -> list[Fact]:
    """Parse dot-terminated facts, in source order, duplicates preserved.

    `%` starts a line comment.  Rule syntax is rejected with the offending
    line so that program files are not silently misread as data.
    """
    try:
        parser = _Parser(text)
        facts: list[Fact] = []
        while parser.cur.kind != "end":
            if parser.cur.kind == "rulearrow":
                raise _rule_error(text, parser.cur.offset)
            facts.append(parser.fact())
        return facts
    except ParseError as exc:
        line_text = text.splitlines()[exc.line - 1] if exc.line else ""
        if ":-" in line_text and "rules are not allowed" not in str(exc):
            raise _rule_error(text, exc.offset) from None
        raise


def _rule_error(text: str, offset: int) -> ParseError:
    pos = _line_col(text, offset)
    return ParseError(
        f"rules are not allowed in a facts file (':-' on line {pos['line']})",
        offset=offset, **pos)


# ---------------------------------------------------------------------------
# Rendering and ordering


def render(t: GroundTerm) -> str:
    """Canonical text: no whitespace, strings quoted, `(x,)` for 1-tuples."""
    if isinstance(t, Number):
        return str(t.value)
    if isinstance(t, Str):
        return _encode_string(t.value)
    if isinstance(t, Const):
        return t.name
    if isinstance(t, Func):
        return f"{t.name}({','.join(render(a) for a in t.args)})"
    if isinstance(t, Tuple):
        if len(t.args) == 1:
            return f"({render(t.args[0])},)"
        return f"({','.join(render(a) for a in t.args)})"
    raise TypeError(f"not a ground term: {t!r}")


def render_fact(f: Fact) -> str:
    return render(f.term())


_KIND_RANK = {Number: 0, Const: 1, Str: 2, Tuple: 3, Func: 4}


def sort_key(t: GroundTerm):
    """Total-order key: tuple comparison agrees with compare()."""
    if isinstance(t, Number):
        return (0, t.value)
    if isinstance(t, Const):
        return (1, t.name)
    if isinstance(t, Str):
        return (2, t.value)
    if isinstance(t, Tuple):
        return (3, len(t.args), tuple(sort_key(a) for a in t.args))
    if isinstance(t, Func):
        return (4, len(t.args), t.name, tuple(sort_key(a) for a in t.args))
    raise TypeError(f"not a ground term: {t!r}")


def compare(a: GroundTerm, b: GroundTerm) -> int:
    """-1, 0 or 1.  Cross-kind rank: Number < Const < Str < Tuple < Func."""
    ra, rb = _KIND_RANK[type(a)], _KIND_RANK[type(b)]
    if ra != rb:
        return -1 if ra < rb else 1
    if isinstance(a, Number):
        return _cmp(a.value, b.value)
    if isinstance(a, Const):
        return _cmp(a.name, b.name)
    if isinstance(a, Str):
        return _cmp(a.value, b.value)
    if isinstance(a, Tuple):
        if len(a.args) != len(b.args):
            return _cmp(len(a.args), len(b.args))
        return _cmp_args(a.args, b.args)
    assert isinstance(a, Func) and isinstance(b, Func)
    if len(a.args) != len(b.args):
        return _cmp(len(a.args), len(b.args))
    if a.name != b.name:
        return _cmp(a.name, b.name)
    return _cmp_args(a.args, b.args)


def _cmp(x, y) -> int:
    return (x > y) - (x < y)


def _cmp_args(xs: tuple[GroundTerm, ...], ys: tuple[GroundTerm, ...]) -> int:
    for x, y in zip(xs, ys):
        c = compare(x, y)
        if c:
            return c
    return 0
