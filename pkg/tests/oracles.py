"""Brute-force reference implementations used only by the tests.

Nothing here calls the package's product engine or its partition code:
partitions come from plain set-partition enumeration with a crossing test,
and products are expanded through cumulants or by hand-written formulas.
Functionals are any callables on :class:`vortex.words.Word`.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping, Sequence

from vortex.words import Word

# ------------------------------------------------------------- partitions


def set_partitions(elems: tuple[int, ...]):
    """All set partitions of ``elems`` (blocks as sorted tuples)."""
    if not elems:
        yield ()
        return
    first, rest = elems[0], elems[1:]
    for part in set_partitions(rest):
        yield ((first,),) + part
        for i, blk in enumerate(part):
            yield part[:i] + ((first,) + blk,) + part[i + 1:]


def is_noncrossing(part) -> bool:
    for i, b1 in enumerate(part):
        for b2 in part[i + 1:]:
            for a in b1:
                for c in b1:
                    if a < c:
                        for b in b2:
                            for d in b2:
                                if a < b < c < d or b < a < d < c:
                                    return False
    return True


@lru_cache(maxsize=None)
def nc_partitions(n: int) -> tuple:
    out = [tuple(sorted(tuple(sorted(b)) for b in p)) for p in set_partitions(tuple(range(n)))]
    return tuple(p for p in out if is_noncrossing(p))


def is_inner(block, part) -> bool:
    """True when some other block has elements on both sides of ``block``."""
    lo, hi = min(block), max(block)
    for other in part:
        if other is block:
            continue
        if any(x < lo for x in other) and any(x > hi for x in other):
            return True
    return False


def _sub(w: Word, block) -> Word:
    return Word(w[i] for i in block)


# -------------------------------------------------------------- cumulants


class Cumulants:
    """Free cumulants of one functional on words, by Moebius recursion."""

    def __init__(self, f: Callable[[Word], object]):
        self.f = f
        self.memo: dict[Word, object] = {}

    def __call__(self, w: Word):
        if w in self.memo:
            return self.memo[w]
        n = len(w)
        total = self.f(w)
        for part in nc_partitions(n):
            if len(part) == 1:
                continue
            term = 1
            for blk in part:
                term = term * self(_sub(w, blk))
            total = total - term
        self.memo[w] = total
        return total


class CfreeCumulants:
    """c-free cumulants R of a pair (value v, weight w) on words.

    v(word) = sum over NC partitions of prod_outer R(block) * prod_inner kappa_w(block).
    """

    def __init__(self, value: Callable, weight_cumulants: Cumulants):
        self.value = value
        self.kappa = weight_cumulants
        self.memo: dict[Word, object] = {}

    def __call__(self, w: Word):
        if w in self.memo:
            return self.memo[w]
        total = self.value(w)
        for part in nc_partitions(len(w)):
            if len(part) == 1:
                continue
            term = 1
            for blk in part:
                sub = _sub(w, blk)
                term = term * (self.kappa(sub) if is_inner(blk, part) else self(sub))
            total = total - term
        self.memo[w] = total
        return total


def _monochromatic(w: Word, part) -> bool:
    return all(len({w[i].family for i in blk}) == 1 for blk in part)


def free_moment(psis: Mapping[int, Callable], w: Word, kap: Mapping[int, Cumulants] | None = None):
    """Free product moment: sum over monochromatic NC partitions of cumulant products.

    Pass ``kap`` (family -> Cumulants) to reuse cumulants across many words.
    """
    w = Word(w)
    if not w:
        return Fraction(1)
    if kap is None:
        kap = {f: Cumulants(g) for f, g in psis.items()}
    total = 0
    for part in nc_partitions(len(w)):
        if not _monochromatic(w, part):
            continue
        term = 1
        for blk in part:
            sub = _sub(w, blk)
            term = term * kap[sub[0].family](sub)
        total = total + term
    return total


def cfree_moment(values: Mapping[int, Callable], weights: Mapping[int, Callable], w: Word):
    """c-free product of (value_i, weight_i) on ``w`` via c-free cumulants."""
    w = Word(w)
    if not w:
        return Fraction(1)
    kap = {f: Cumulants(g) for f, g in weights.items()}
    rc = {f: CfreeCumulants(values[f], kap[f]) for f in values}
    total = 0
    for part in nc_partitions(len(w)):
        if not _monochromatic(w, part):
            continue
        term = 1
        for blk in part:
            sub = _sub(w, blk)
            fam = sub[0].family
            term = term * (kap[fam](sub) if is_inner(blk, part) else rc[fam](sub))
        total = total + term
    return total


# ---------------------------------------------------------- dual numbers


class Dual:
    """a + b*eps with eps^2 = 0, over exact rationals."""

    __slots__ = ("a", "b")

    def __init__(self, a, b=0):
        self.a, self.b = Fraction(a), Fraction(b)

    @staticmethod
    def lift(x):
        return x if isinstance(x, Dual) else Dual(x)

    def __add__(self, o):
        o = Dual.lift(o)
        return Dual(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __sub__(self, o):
        o = Dual.lift(o)
        return Dual(self.a - o.a, self.b - o.b)

    def __rsub__(self, o):
        return Dual.lift(o) - self

    def __mul__(self, o):
        o = Dual.lift(o)
        return Dual(self.a * o.a, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__


def infinitesimal_free_omega(psis: Mapping[int, Callable], omegas: Mapping[int, Callable], w: Word):
    """eps-part of the free product of psi_i + eps*omega_i (omega_i(1) = 0)."""
    duals = {f: (lambda word, f=f: Dual(psis[f](word), omegas[f](word))) for f in psis}
    return free_moment(duals, w).b


# ------------------------------------------------------ closed formulas


def omega_ab(psi_a, phi_a, omega_a, psi_b, phi_b, omega_b, omega_unit):
    """omega(ab) for cyclically c-free a, b from their six moments and omega(1)."""
    return (phi_a * phi_b - psi_a * phi_b - phi_a * psi_b + psi_a * psi_b
            + psi_a * omega_b + omega_a * psi_b - omega_unit * psi_a * psi_b)


def second_order_pairing(pairs: Sequence[Sequence[object]]):
    """Cyclic pairing sum over a matrix of pair covariances: sum_k prod_i C[i][(i + k) % n]."""
    n = len(pairs)
    total = 0
    for k in range(n):
        term = 1
        for i in range(n):
            term = term * pairs[i][(i + k) % n]
        total = total + term
    return total
