"""Parser for the polynomial grammar used on the command line and in configs.

Grammar::

    expr    := ['+'|'-'] term (('+'|'-') term)*
    term    := factor ('*' factor)*
    factor  := atom ('^' INT)?
    atom    := GEN | NUMBER | 'i' | '(' expr ')' | '{' expr '}'
    GEN     := ('X'|'Y'|'Z') INT | 'F' INT '_' INT
    NUMBER  := INT ('/' INT)? | DECIMAL

``{expr}`` denotes the centered element ``expr - f(expr)`` where ``f`` is the
weight functional of expr's family; the caller supplies that functional.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .scalars import I
from .words import FAMILY_LETTERS, Generator, Polynomial


class ParseError(ValueError):
    """Malformed input; ``position`` is the 0-based offset of the offending token."""

    def __init__(self, message: str, text: str, position: int):
        self.text = text
        self.position = position
        super().__init__(f"{message} at position {position}: {text!r}")


_TOKEN = re.compile(
    r"""\s*(?:
        (?P<gen>[XYZ]\d+|F\d+_\d+)
      | (?P<num>\d+\.\d*|\.\d+|\d+(?:/\d+)?)
      | (?P<imag>i)
      | (?P<op>[-+*^(){}])
    )""",
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        start = m.start(kind)
        out.append(Token(kind, m.group(kind), start))
        pos = m.end()
    return out


def parse_generator(text: str) -> Generator:
    if text[0] == "F":
        fam, idx = text[1:].split("_")
        return Generator(int(fam), int(idx))
    return Generator(FAMILY_LETTERS.index(text[0]), int(text[1:]))


# AST nodes are plain tuples: ("num", value) ("gen", Generator) ("add", [(sign, node)])
# ("mul", [node]) ("pow", node, k) ("center", node, pos)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    def peek(self) -> Optional[Token]:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.text, len(self.text))
        self.i += 1
        return tok

    def expect(self, op: str) -> Token:
        tok = self.peek()
        if tok is None or tok.text != op:
            pos = tok.pos if tok else len(self.text)
            raise ParseError(f"expected {op!r}", self.text, pos)
        return self.take()

    def parse(self):
        if not self.toks:
            raise ParseError("empty expression", self.text, 0)
        node = self.expr()
        tok = self.peek()
        if tok is not None:
            raise ParseError(f"unexpected token {tok.text!r}", self.text, tok.pos)
        return node

    def expr(self):
        terms = []
        sign = 1
        tok = self.peek()
        if tok is not None and tok.text in "+-" and tok.kind == "op":
            sign = -1 if self.take().text == "-" else 1
        terms.append((sign, self.term()))
        while (tok := self.peek()) is not None and tok.kind == "op" and tok.text in "+-":
            sign = -1 if self.take().text == "-" else 1
            terms.append((sign, self.term()))
        return ("add", terms) if len(terms) > 1 or terms[0][0] < 0 else terms[0][1]

    def term(self):
        factors = [self.factor()]
        while (tok := self.peek()) is not None and tok.text == "*":
            self.take()
            factors.append(self.factor())
        return ("mul", factors) if len(factors) > 1 else factors[0]

    def factor(self):
        node = self.atom()
        tok = self.peek()
        if tok is not None and tok.text == "^":
            self.take()
            exp = self.take()
            if exp.kind != "num" or not exp.text.isdigit():
                raise ParseError("exponent must be a non-negative integer", self.text, exp.pos)
            node = ("pow", node, int(exp.text))
        return node

    def atom(self):
        tok = self.take()
        if tok.kind == "gen":
            return ("gen", parse_generator(tok.text))
        if tok.kind == "num":
            return ("num", Fraction(tok.text))
        if tok.kind == "imag":
            return ("num", I)
        if tok.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if tok.text == "{":
            node = self.expr()
            self.expect("}")
            return ("center", node, tok.pos)
        raise ParseError(f"unexpected token {tok.text!r}", self.text, tok.pos)


def parse_ast(text: str):
    return _Parser(text).parse()


CenterFn = Callable[[Polynomial], Polynomial]


def build(node, center: CenterFn | None = None, text: str = "") -> Polynomial:
    kind = node[0]
    if kind == "num":
        return Polynomial.constant(node[1])
    if kind == "gen":
        return Polynomial.generator(node[1])
    if kind == "add":
        out = Polynomial()
        for sign, sub in node[1]:
            p = build(sub, center, text)
            out = out + p if sign > 0 else out - p
        return out
    if kind == "mul":
        out = Polynomial.constant(1)
        for sub in node[1]:
            out = out * build(sub, center, text)
        return out
    if kind == "pow":
        return build(node[1], center, text) ** node[2]
    if kind == "center":
        inner = build(node[1], center, text)
        if center is None:
            raise ParseError("centering braces need a weight functional", text, node[2])
        if len(inner.family_set()) > 1:
            raise ParseError("centered factor mixes families", text, node[2])
        return center(inner)
    raise AssertionError(kind)


def parse_polynomial(text: str, center: CenterFn | None = None) -> Polynomial:
    """Parse ``text`` into a :class:`Polynomial`; braces are resolved via ``center``."""
    return build(parse_ast(text), center, text)


def parse_word(text: str):
    """Parse a bare monomial such as ``"X0*Y1*X0"`` (``"1"`` is the empty word)."""
    p = parse_polynomial(text)
    if len(p) != 1:
        raise ParseError("expected a single monomial", text, 0)
    ((w, c),) = p.items()
    if c != 1:
        raise ParseError("expected a monomial with unit coefficient", text, 0)
    return w


def uses_centering(text: str) -> bool:
    return "{" in text
