"""Closed-form evaluators for the classical specializations of cyclic c-freeness.

These are coded straight from their defining formulas and do not use the
centering recursion, so they serve as independent checks of
:mod:`vortex.products`.

* cyclic-Boolean (both weights are the augmentation delta),
* cyclic-monotone (weight delta on the first algebra, phi on the second),
* infinitesimal freeness (weights equal to phi on both algebras).
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Mapping, Sequence

from .functionals import FunctionalTriple, evaluate
from .scalars import Scalar, exact, is_zero
from .words import Polynomial, Word, runs


def _omega_unit(triples: Mapping[int, FunctionalTriple]) -> Scalar:
    units = {exact(t.omega.unit) for t in triples.values()}
    if len(units) != 1:
        raise ValueError("omega(1) must agree across algebras")
    return units.pop()


def boolean_phi(triples: Mapping[int, FunctionalTriple], w: Word) -> Scalar:
    """Boolean product of the phi's: the product of phi over the alternating blocks."""
    out: Scalar = Fraction(1)
    for fam, sub in runs(Word(w)):
        out = out * triples[fam].phi.value(sub)
    return exact(out)


def cyclic_boolean_omega(triples: Mapping[int, FunctionalTriple], w: Word) -> Scalar:
    """omega on a raw word: fold the ends together, then multiply the phi's."""
    w = Word(w)
    if not w:
        return _omega_unit(triples)
    rs = runs(w)
    if len(rs) >= 2 and rs[0][0] == rs[-1][0]:
        rs = [(rs[0][0], rs[-1][1] + rs[0][1]), *rs[1:-1]]
    if len(rs) == 1:
        fam, sub = rs[0]
        return triples[fam].omega.value(sub)
    out: Scalar = Fraction(1)
    for fam, sub in rs:
        out = out * triples[fam].phi.value(sub)
    return exact(out)


def _monotone_split(w: Word, a_family: int):
    """Write ``w`` as b_0 a_1 b_1 ... a_n b_n with a_i maximal runs in ``a_family``."""
    a_parts: list[Word] = []
    b_parts: list[Word] = [Word()]
    for fam, sub in runs(Word(w)):
        if fam == a_family:
            a_parts.append(sub)
            b_parts.append(Word())
        else:
            b_parts[-1] = sub
    return a_parts, b_parts


def monotone_phi(tA: FunctionalTriple, tB: FunctionalTriple, w: Word) -> Scalar:
    """phi(b_0 a_1 b_1 ... a_n b_n) = phi_A(a_1...a_n) phi_B(b_0)...phi_B(b_n)."""
    a_parts, b_parts = _monotone_split(w, tA.family)
    out = tA.phi.value(Word(itertools.chain.from_iterable(a_parts)))
    for b in b_parts:
        out = out * tB.phi.value(b)
    return exact(out)


def cyclic_monotone_omega(tA: FunctionalTriple, tB: FunctionalTriple, w: Word) -> Scalar:
    """omega(b_0 a_1 b_1 ... a_n b_n) = omega_A(a_1...a_n) phi_B(b_1)...phi_B(b_{n-1}) phi_B(b_n b_0).

    Words without any letter of the first algebra take the value omega_B.
    """
    a_parts, b_parts = _monotone_split(w, tA.family)
    if not a_parts:
        return tB.omega.value(Word(w))
    out = tA.omega.value(Word(itertools.chain.from_iterable(a_parts)))
    for b in b_parts[1:-1]:
        out = out * tB.phi.value(b)
    out = out * tB.phi.value(b_parts[-1] + b_parts[0])
    return exact(out)


class InfinitesimalOracle:
    """omega for infinitesimal freeness, by expanding into centered elements.

    On an alternating phi-centered tuple ``c_1...c_n`` the value is
    ``sum_i omega(c_i) phi(c_{i+1}...c_n c_1...c_{i-1})``. Freeness of phi
    makes every summand vanish except, for odd ``n``, the middle one, which
    equals ``omega(c_m) prod_j phi(c_{n+1-j} c_j)`` with each pair covariance
    zero across algebras.
    """

    def __init__(self, triples: Mapping[int, FunctionalTriple]):
        self.triples = dict(triples)
        self.unit = _omega_unit(triples)
        self._memo: dict = {}

    def _phi(self, fam, p: Polynomial) -> Scalar:
        return evaluate(self.triples[fam].phi, p)

    def _omega(self, fam, p: Polynomial) -> Scalar:
        return evaluate(self.triples[fam].omega, p)

    def _centered_value(self, elems: Sequence[tuple[int, Polynomial]]) -> Scalar:
        n = len(elems)
        if n % 2 == 0:
            return Fraction(0)
        mid = n // 2
        out = self._omega(*elems[mid])
        for j in range(mid):
            (f1, p1), (f2, p2) = elems[n - 1 - j], elems[j]
            if f1 != f2:
                return Fraction(0)
            out = out * self._phi(f1, p1 * p2)
            if is_zero(out):
                return Fraction(0)
        return exact(out)

    def elements(self, elems: Sequence[tuple[int, Polynomial]]) -> Scalar:
        merged: list[tuple[int, Polynomial]] = []
        for fam, p in elems:
            if merged and merged[-1][0] == fam:
                merged[-1] = (fam, merged[-1][1] * p)
            else:
                merged.append((fam, p))
        key = tuple(merged)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if not merged:
            out = self.unit
        elif len(merged) == 1:
            out = self._omega(*merged[0])
        else:
            scal = [self._phi(f, p) for f, p in merged]
            cent = [(f, p - Polynomial.constant(s)) for (f, p), s in zip(merged, scal)]
            out = self._centered_value(cent)
            m = len(merged)
            for k in range(1, m + 1):
                for T in itertools.combinations(range(m), k):
                    coef: Scalar = Fraction(1)
                    for j in T:
                        coef = coef * scal[j]
                    if is_zero(coef):
                        continue
                    rest = [cent[j] for j in range(m) if j not in T]
                    out = out + coef * self.elements(rest)
            out = exact(out)
        self._memo[key] = out
        return out

    def __call__(self, w: Word) -> Scalar:
        return self.elements([(fam, Polynomial.from_word(sub)) for fam, sub in runs(Word(w))])
