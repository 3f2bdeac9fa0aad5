"""Noncrossing partitions, the Kreweras complement and free cumulants.

The free-product oracle here is independent of the centering recursion in
:mod:`vortex.products`: it sums cumulants of the first family against moments
of the second over the Kreweras complement.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Sequence

from .functionals import evaluate
from .scalars import Scalar, exact
from .words import Block, Polynomial, Word, as_polynomial

MAX_N = 12
MAX_CUMULANT_LEN = 10


def crosses(b1: Sequence[int], b2: Sequence[int]) -> bool:
    """True when some a<b<c<d has a,c in one block and b,d in the other."""
    for x, y in ((b1, b2), (b2, b1)):
        for a, c in itertools.combinations(sorted(x), 2):
            inside = any(a < t < c for t in y)
            outside = any(t < a or t > c for t in y)
            if inside and outside:
                return True
    return False


@dataclass(frozen=True, order=True)
class NoncrossingPartition:
    """Blocks of {1..n}, each sorted, listed by their smallest element."""

    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(sorted(tuple(sorted(b)) for b in self.blocks))
        object.__setattr__(self, "blocks", blocks)
        flat = sorted(x for b in blocks for x in b)
        if self.n < 1 or flat != list(range(1, self.n + 1)) or any(not b for b in blocks):
            raise ValueError(f"blocks {blocks} do not partition 1..{self.n}")
        for b1, b2 in itertools.combinations(blocks, 2):
            if crosses(b1, b2):
                raise ValueError(f"blocks {b1} and {b2} cross")

    @classmethod
    def from_string(cls, text: str) -> "NoncrossingPartition":
        """Parse ``"{1,3}{2}"`` or ``"13|2"`` (single-digit shorthand)."""
        text = text.strip()
        if "{" in text:
            parts = [p for p in text.replace("}", "").split("{") if p]
            blocks = [tuple(int(x) for x in p.split(",")) for p in parts]
        else:
            blocks = [tuple(int(c) for c in p) for p in text.split("|")]
        return cls(max(max(b) for b in blocks), tuple(blocks))

    @classmethod
    def _trusted(cls, n: int, blocks) -> "NoncrossingPartition":
        # skips validation; blocks must already be sorted and noncrossing
        obj = object.__new__(cls)
        object.__setattr__(obj, "n", n)
        object.__setattr__(obj, "blocks", blocks)
        return obj

    def __len__(self):
        return len(self.blocks)

    def block_of(self, i: int) -> tuple[int, ...]:
        for b in self.blocks:
            if i in b:
                return b
        raise KeyError(i)

    def block_sizes(self) -> tuple[int, ...]:
        return tuple(sorted(len(b) for b in self.blocks))

    def rotate(self, k: int = 1) -> "NoncrossingPartition":
        """Relabel i -> i+k mod n."""
        n = self.n
        return NoncrossingPartition(n, tuple(tuple((x - 1 + k) % n + 1 for x in b) for b in self.blocks))

    def __str__(self):
        return "".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks)


def _nc_blocks(elems: tuple[int, ...]):
    if not elems:
        yield ()
        return
    first, rest = elems[0], elems[1:]
    m = len(rest)
    for k in range(m + 1):
        for chosen in itertools.combinations(range(m), k):
            cuts = (-1, *chosen, m)
            gaps = [rest[cuts[j] + 1:cuts[j + 1]] for j in range(len(cuts) - 1)]
            head = (first, *(rest[i] for i in chosen))
            for parts in itertools.product(*(list(_nc_blocks(g)) for g in gaps)):
                yield (head, *itertools.chain.from_iterable(parts))


@lru_cache(maxsize=None)
def _enumerate(n: int) -> tuple[NoncrossingPartition, ...]:
    raw = sorted(tuple(sorted(blocks)) for blocks in _nc_blocks(tuple(range(1, n + 1))))
    return tuple(NoncrossingPartition._trusted(n, blocks) for blocks in raw)


def enumerate_nc(n: int) -> list[NoncrossingPartition]:
    """All noncrossing partitions of {1..n}, sorted lexicographically by blocks."""
    if not 1 <= n <= MAX_N:
        raise ValueError(f"n must lie in 1..{MAX_N}, got {n}")
    return list(_enumerate(n))


def kreweras(pi: NoncrossingPartition) -> NoncrossingPartition:
    """Kreweras complement on the interleaved set 1 < 1' < 2 < 2' < ... < n < n'.

    Primed points i' < j' can share a block exactly when {i+1, ..., j} is a
    union of blocks of ``pi``, since otherwise some block of ``pi`` would
    separate them.
    """
    n = pi.n
    owner = {x: idx for idx, b in enumerate(pi.blocks) for x in b}
    sizes = [len(b) for b in pi.blocks]

    def closed(i: int, j: int) -> bool:
        counts: dict[int, int] = {}
        for x in range(i + 1, j + 1):
            counts[owner[x]] = counts.get(owner[x], 0) + 1
        return all(sizes[b] == c for b, c in counts.items())

    label = list(range(n + 1))
    for j in range(1, n + 1):
        for i in range(1, j):
            if label[i] == i and closed(i, j):
                label[j] = i
                break
    blocks: dict[int, list[int]] = {}
    for j in range(1, n + 1):
        blocks.setdefault(label[j], []).append(j)
    return NoncrossingPartition(n, tuple(tuple(b) for b in blocks.values()))


# -------------------------------------------------------------- cumulants


Functional = Callable[[Word], Scalar]


class CumulantCalculator:
    """Multilinear free cumulants of a functional, memoized on argument tuples.

    Arguments are polynomials; moments of products come from ``f``.
    """

    def __init__(self, f):
        self.f = f
        self._memo: dict[tuple[Polynomial, ...], Scalar] = {}

    def moment(self, elems: Sequence[Polynomial]) -> Scalar:
        prod = Polynomial.constant(1)
        for e in elems:
            prod = prod * e
        return evaluate(self.f, prod)

    def cumulant(self, elems: Sequence) -> Scalar:
        elems = tuple(as_polynomial(e) for e in elems)
        if not elems:
            raise ValueError("cumulants need at least one argument")
        hit = self._memo.get(elems)
        if hit is not None:
            return hit
        n = len(elems)
        if n > MAX_CUMULANT_LEN:
            raise ValueError(f"cumulant order capped at {MAX_CUMULANT_LEN}")
        total = self.moment(elems)
        for pi in enumerate_nc(n):
            if len(pi) == 1:
                continue
            total = total - self.partitioned(pi, elems)
        total = exact(total)
        self._memo[elems] = total
        return total

    def partitioned(self, pi: NoncrossingPartition, elems: Sequence[Polynomial]) -> Scalar:
        """kappa_pi: product of block cumulants."""
        out: Scalar = Fraction(1)
        for b in pi.blocks:
            out = out * self.cumulant(tuple(elems[i - 1] for i in b))
            if out == 0:
                return Fraction(0)
        return out


def moment_partitioned(f, pi: NoncrossingPartition, elems: Sequence[Polynomial]) -> Scalar:
    """psi_pi: product over blocks of the moment of the ordered block product."""
    out: Scalar = Fraction(1)
    for b in pi.blocks:
        prod = Polynomial.constant(1)
        for i in b:
            prod = prod * elems[i - 1]
        out = out * evaluate(f, prod)
        if out == 0:
            return Fraction(0)
    return out


@dataclass
class FreeCumulantTable:
    family: object
    kappa: dict[Word, Scalar]

    def cumulant(self, w: Word) -> Scalar:
        return self.kappa[Word(w)]

    def moment(self, w: Word) -> Scalar:
        """Forward moment-cumulant sum over NC(|w|)."""
        w = Word(w)
        if not w:
            return Fraction(1)
        total: Scalar = Fraction(0)
        for pi in enumerate_nc(len(w)):
            term: Scalar = Fraction(1)
            for b in pi.blocks:
                term = term * self.kappa[Word(w[i - 1] for i in b)]
            total = total + term
        return exact(total)


def moments_to_cumulants(f, maxlen: int, words: Iterable[Word] | None = None) -> FreeCumulantTable:
    """Free cumulants of ``f`` on ``words`` (default: powers of generator 0 up to ``maxlen``).

    Every subword needed by the moment-cumulant sum is included in the table.
    """
    if not 1 <= maxlen <= MAX_CUMULANT_LEN:
        raise ValueError(f"maxlen must lie in 1..{MAX_CUMULANT_LEN}")
    from .words import Generator

    fam = f.family if hasattr(f, "family") else 0
    if words is None:
        g = Generator(fam, 0)
        words = [Word((g,) * k) for k in range(1, maxlen + 1)]
    calc = CumulantCalculator(f)
    kappa: dict[Word, Scalar] = {}
    for w in words:
        w = Word(w)
        if len(w) > maxlen:
            raise ValueError(f"word {w} is longer than maxlen={maxlen}")
        for k in range(1, len(w) + 1):
            for idx in itertools.combinations(range(len(w)), k):
                sub = Word(w[i] for i in idx)
                if sub not in kappa:
                    kappa[sub] = calc.cumulant([Polynomial.generator(g) for g in sub])
    return FreeCumulantTable(fam, kappa)


def mixed_moment_oracle(fA, fB, blocks: Sequence[Block], calc: CumulantCalculator | None = None) -> Scalar:
    """Free mixed moment of a1 b1 ... an bn as sum over pi in NC(n) of kappa_pi[a] psi_K(pi)[b]."""
    blocks = list(blocks)
    if not blocks or len(blocks) % 2:
        raise ValueError("need an even, nonempty alternating block sequence a1 b1 ... an bn")
    fams = [b.family for b in blocks]
    if len(set(fams[0::2])) != 1 or len(set(fams[1::2])) != 1 or fams[0] == fams[1]:
        raise ValueError("blocks must alternate between two families")
    calc = calc or CumulantCalculator(fA)
    a = [b.content for b in blocks[0::2]]
    bs = [b.content for b in blocks[1::2]]
    total: Scalar = Fraction(0)
    for pi in enumerate_nc(len(a)):
        k = calc.partitioned(pi, a)
        if k == 0:
            continue
        total = total + k * moment_partitioned(fB, kreweras(pi), bs)
    return exact(total)


def free_moment_oracle(fA, fB, w: Word, calc: CumulantCalculator | None = None) -> Scalar:
    """Free-product moment of any word in two families via :func:`mixed_moment_oracle`.

    Units are inserted so the block sequence starts with ``fA``'s family and
    has even length.
    """
    from .words import alternating_blocks

    if not w:
        return Fraction(1)
    fa, fb = fA.family, fB.family
    blocks = alternating_blocks(w)
    for b in blocks:
        if b.family not in (fa, fb):
            raise ValueError(f"word {w} uses family {b.family} outside ({fa}, {fb})")
    one = Polynomial.constant(1)
    if blocks[0].family != fa:
        blocks.insert(0, Block(fa, one))
    if len(blocks) % 2:
        blocks.append(Block(fb, one))
    return mixed_moment_oracle(fA, fB, blocks, calc)
