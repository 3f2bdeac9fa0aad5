"""Noncommutative words and polynomials over labelled generator families."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Iterator, Mapping, NamedTuple

from .scalars import Scalar, exact, format_scalar, is_zero

FAMILY_LETTERS = "XYZ"


class Generator(NamedTuple):
    family: int
    index: int = 0

    def __str__(self):
        if 0 <= self.family < len(FAMILY_LETTERS):
            return f"{FAMILY_LETTERS[self.family]}{self.index}"
        return f"F{self.family}_{self.index}"


def X(i: int = 0) -> Generator:
    return Generator(0, i)


def Y(i: int = 0) -> Generator:
    return Generator(1, i)


def Z(i: int = 0) -> Generator:
    return Generator(2, i)


class Word(tuple):
    """An immutable sequence of generators; the empty word is the unit."""

    __slots__ = ()

    def __new__(cls, letters: Iterable[Generator] = ()):
        return super().__new__(cls, letters)

    def __add__(self, other):
        return Word(tuple.__add__(self, other))

    def __getitem__(self, item):
        out = tuple.__getitem__(self, item)
        return Word(out) if isinstance(item, slice) else out

    def families(self) -> tuple[int, ...]:
        return tuple(g.family for g in self)

    def family_set(self) -> frozenset[int]:
        return frozenset(g.family for g in self)

    def rotate(self, k: int = 1) -> "Word":
        """Cyclic shift moving the first ``k`` letters to the end."""
        if not self:
            return self
        k %= len(self)
        return Word(tuple.__getitem__(self, slice(k, None)) + tuple.__getitem__(self, slice(None, k)))

    def __str__(self):
        return "*".join(str(g) for g in self) if self else "1"

    def __repr__(self):
        return f"Word({str(self)!r})"


EMPTY = Word()


def word(*letters: Generator) -> Word:
    return Word(letters)


class Polynomial:
    """Finite linear combination of words, stored without zero coefficients."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Word, Scalar] | None = None):
        clean: dict[Word, Scalar] = {}
        if terms:
            for w, c in terms.items():
                c = exact(c)
                if not is_zero(c):
                    clean[Word(w)] = c
        self._terms = clean
        self._hash = None

    @classmethod
    def constant(cls, c: Scalar) -> "Polynomial":
        return cls({EMPTY: c})

    @classmethod
    def from_word(cls, w: Iterable[Generator], c: Scalar = 1) -> "Polynomial":
        return cls({Word(w): c})

    @classmethod
    def generator(cls, g: Generator) -> "Polynomial":
        return cls({Word((g,)): 1})

    @staticmethod
    def _accumulate(acc: dict, w: Word, c) -> None:
        v = acc.get(w)
        acc[w] = c if v is None else v + c

    @classmethod
    def _from_acc(cls, acc: dict) -> "Polynomial":
        return cls(acc)

    def terms(self) -> dict[Word, Scalar]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def words(self):
        return self._terms.keys()

    def coefficient(self, w: Word) -> Scalar:
        return self._terms.get(Word(w), 0)

    def scalar_part(self) -> Scalar:
        return self._terms.get(EMPTY, 0)

    def is_zero(self) -> bool:
        return not self._terms

    def family_set(self) -> frozenset[int]:
        fams: set[int] = set()
        for w in self._terms:
            fams.update(g.family for g in w)
        return frozenset(fams)

    def degree(self) -> int:
        return max((len(w) for w in self._terms), default=0)

    def __len__(self):
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[Word, Scalar]]:
        return iter(self._terms.items())

    @staticmethod
    def _coerce(other) -> "Polynomial | None":
        if isinstance(other, Polynomial):
            return other
        if isinstance(other, Word):
            return Polynomial.from_word(other)
        if isinstance(other, Generator):
            return Polynomial.generator(other)
        try:
            complex(other)
        except (TypeError, ValueError):
            return None
        return Polynomial.constant(other)

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        acc = dict(self._terms)
        for w, c in o._terms.items():
            self._accumulate(acc, w, c)
        return Polynomial(acc)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({w: -c for w, c in self._terms.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        acc: dict = {}
        for w1, c1 in self._terms.items():
            for w2, c2 in o._terms.items():
                self._accumulate(acc, w1 + w2, c1 * c2)
        return Polynomial(acc)

    def __rmul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial powers need a non-negative integer exponent")
        out = Polynomial.constant(1)
        for _ in range(k):
            out = out * self
        return out

    def scale(self, c: Scalar) -> "Polynomial":
        return Polynomial({w: c * v for w, v in self._terms.items()})

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self._terms == o._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for w in sorted(self._terms, key=lambda w: (len(w), tuple(w))):
            c = self._terms[w]
            if not w:
                parts.append(format_scalar(c))
            elif c == 1:
                parts.append(str(w))
            else:
                parts.append(f"({format_scalar(c)})*{w}")
        return " + ".join(parts)

    def __repr__(self):
        return f"Polynomial({str(self)!r})"


def as_polynomial(p) -> Polynomial:
    out = Polynomial._coerce(p)
    if out is None:
        raise TypeError(f"cannot interpret {p!r} as a polynomial")
    return out


@dataclass(frozen=True)
class Block:
    """A maximal single-family factor of an alternating product."""

    family: Hashable
    content: Polynomial

    def __post_init__(self):
        if not isinstance(self.content, Polynomial):
            object.__setattr__(self, "content", as_polynomial(self.content))


def _identity(f):
    return f


def runs(w: Word, key: Callable[[int], Hashable] | None = None) -> list[tuple[Hashable, Word]]:
    """Split ``w`` into maximal runs of letters whose families share a ``key``."""
    key = key or _identity
    out: list[tuple[Hashable, Word]] = []
    start = 0
    cur = None
    for i, g in enumerate(w):
        k = key(g.family)
        if i == 0:
            cur = k
        elif k != cur:
            out.append((cur, w[start:i]))
            start, cur = i, k
    if w:
        out.append((cur, w[start:]))
    return out


def alternating_blocks(w: Word, key: Callable[[int], Hashable] | None = None) -> list[Block]:
    """Group consecutive same-family letters; adjacent blocks differ in family."""
    return [Block(fam, Polynomial.from_word(sub)) for fam, sub in runs(Word(w), key)]


def concatenate_blocks(blocks: Iterable[Block]) -> Polynomial:
    out = Polynomial.constant(1)
    for b in blocks:
        out = out * b.content
    return out


def cyclic_rotations(blocks: list[Block]) -> list[Block]:
    """Fold the last block onto the front of the first one.

    Input must be alternating with at least two blocks whose end families agree;
    the output is cyclically alternating and one block shorter.
    """
    blocks = list(blocks)
    if len(blocks) < 2:
        raise ValueError("need at least two blocks to rotate")
    for a, b in zip(blocks, blocks[1:]):
        if a.family == b.family:
            raise ValueError("blocks are not alternating")
    if blocks[0].family != blocks[-1].family:
        raise ValueError("end blocks belong to different families; sequence is already cyclically alternating")
    merged = Block(blocks[0].family, blocks[-1].content * blocks[0].content)
    return [merged, *blocks[1:-1]]
