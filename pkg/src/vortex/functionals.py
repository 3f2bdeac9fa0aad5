"""Moment functionals on the algebra of a single generator family.

A :class:`MomentFunctional` is a linear map on polynomials in one family,
specified by its values on words. Values come either from a rule (a Python
callable on nonempty words) or from an explicit table. Rule-backed functionals
built from a moment sequence ignore generator indices, so ``X0*X1`` and
``X0^2`` share a value; use tables when several distinct variables are needed.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable, Hashable, Iterable, Mapping, NamedTuple

import numpy as np

from .scalars import Scalar, exact, scalar_from_json
from .words import EMPTY, Generator, Polynomial, Word, as_polynomial


class FunctionalError(ValueError):
    """Invalid functional construction or evaluation."""


class MissingMomentError(LookupError):
    """A table-backed functional has no value for the requested word."""


class FamilyMismatchError(FunctionalError):
    """A polynomial uses generators outside the functional's family."""


def _as_families(family) -> frozenset:
    if isinstance(family, (tuple, frozenset, set, list)):
        return frozenset(family)
    return frozenset([family])


class MomentFunctional:
    """Linear functional given by its values on words of one family.

    ``family`` is a label, usually an int. Composite functionals (a product
    evaluator packaged as one algebra) use a tuple label and accept words in
    any of the listed families.
    """

    def __init__(
        self,
        family: Hashable,
        rule: Callable[[Word], Scalar] | None = None,
        table: Mapping[Word, Scalar] | None = None,
        *,
        unital: bool = True,
        tracial: bool = False,
        unit: Scalar | None = None,
        name: str = "",
    ):
        if (rule is None) == (table is None):
            raise FunctionalError("give exactly one of rule or table")
        if unital and unit is not None and exact(unit) != 1:
            raise FunctionalError("a unital functional has value 1 on the unit")
        self.family = family
        self.families = _as_families(family)
        self.rule = rule
        self.table = None if table is None else {Word(w): exact(v) for w, v in table.items()}
        self.unital = unital
        self.tracial = tracial
        if unital:
            self.unit = Fraction(1)
        elif unit is not None:
            self.unit = exact(unit)
        elif self.table is not None and EMPTY in self.table:
            self.unit = self.table[EMPTY]
        else:
            self.unit = Fraction(0)
        self.name = name
        self._memo: dict[Word, Scalar] = {}

    def __repr__(self):
        kind = "rule" if self.rule is not None else f"table[{len(self.table)}]"
        return f"MomentFunctional({self.name or kind}, family={self.family!r}, tracial={self.tracial})"

    def _lookup(self, w: Word) -> Scalar:
        tab = self.table
        if w in tab:
            return tab[w]
        if self.tracial:
            for k in range(1, len(w)):
                r = w.rotate(k)
                if r in tab:
                    return tab[r]
        raise MissingMomentError(f"{self.name or 'table functional'} has no value for {w}")

    def value(self, w: Word) -> Scalar:
        """Value on a single word (the empty word gives ``unit``)."""
        if not w:
            return self.unit
        v = self._memo.get(w)
        if v is None:
            for g in w:
                if g.family not in self.families:
                    raise FamilyMismatchError(f"generator {g} is outside family {self.family!r}")
            v = exact(self.rule(w)) if self.rule is not None else self._lookup(w)
            self._memo[w] = v
        return v

    def evaluate(self, p) -> Scalar:
        if isinstance(p, Word):
            return self.value(p)
        if isinstance(p, Generator):
            return self.value(Word((p,)))
        p = as_polynomial(p)
        total: Scalar = Fraction(0)
        for w, c in p.items():
            total = total + c * self.value(w)
        return exact(total)

    __call__ = evaluate


def evaluate(f: Callable, p) -> Scalar:
    """Apply a functional (or any callable on words) linearly to ``p``."""
    if isinstance(f, MomentFunctional):
        return f.evaluate(p)
    p = as_polynomial(p)
    total: Scalar = Fraction(0)
    for w, c in p.items():
        total = total + c * f(w)
    return exact(total)


def center(f: Callable, p) -> Polynomial:
    """``p - f(p)*1``; the result is annihilated by ``f`` when ``f`` is unital."""
    p = as_polynomial(p)
    return p - Polynomial.constant(evaluate(f, p))


@dataclass(frozen=True)
class FunctionalPair:
    """A c-freeness pair: value functional ``phi`` and weight ``psi``."""

    phi: MomentFunctional
    psi: MomentFunctional

    def __post_init__(self):
        if not (self.phi.unital and self.psi.unital):
            raise FunctionalError("both members of a pair must be unital")
        if self.phi.family != self.psi.family:
            raise FunctionalError("pair members must share a family")

    @property
    def family(self):
        return self.psi.family


@dataclass(frozen=True)
class FunctionalTriple:
    """Input data (psi, phi, omega) of the cyclic c-free product."""

    psi: MomentFunctional
    phi: MomentFunctional
    omega: MomentFunctional

    def __post_init__(self):
        if not (self.psi.unital and self.phi.unital):
            raise FunctionalError("psi and phi must be unital")
        if not self.omega.tracial:
            raise FunctionalError("omega must be tracial")
        if len({self.psi.family, self.phi.family, self.omega.family}) != 1:
            raise FunctionalError("triple members must share a family")

    @property
    def family(self):
        return self.psi.family


@dataclass(frozen=True)
class StateTriple:
    """Three unital states (phi, psi, theta) entering the indented product."""

    phi: MomentFunctional
    psi: MomentFunctional
    theta: MomentFunctional

    def __post_init__(self):
        if not (self.phi.unital and self.psi.unital and self.theta.unital):
            raise FunctionalError("indented product inputs must be unital")
        if len({self.phi.family, self.psi.family, self.theta.family}) != 1:
            raise FunctionalError("triple members must share a family")

    @property
    def family(self):
        return self.psi.family


# ---------------------------------------------------------------- zoo


def sequence_functional(family, moments: Callable[[int], Scalar], *, name: str = "",
                        unital: bool = True, unit: Scalar | None = None) -> MomentFunctional:
    """Functional whose value on a word depends only on its length."""
    cached = lru_cache(maxsize=None)(moments)
    return MomentFunctional(family, rule=lambda w: cached(len(w)), unital=unital,
                            tracial=True, unit=unit, name=name)


def delta_functional(family=0) -> MomentFunctional:
    """Augmentation: reads off the scalar part."""
    return sequence_functional(family, lambda k: 0, name="delta")


def dirac(family=0, point: Scalar = 1) -> MomentFunctional:
    point = exact(point)
    return sequence_functional(family, lambda k: point ** k, name=f"dirac({point})")


def catalan(n: int) -> int:
    """Catalan numbers via the first-return recursion."""
    c = [1]
    for m in range(n):
        c.append(sum(c[i] * c[m - i] for i in range(m + 1)))
    return c[n]


def semicircle(family=0, variance: Scalar = 1) -> MomentFunctional:
    variance = exact(variance)

    def m(k):
        return 0 if k % 2 else catalan(k // 2) * variance ** (k // 2)

    return sequence_functional(family, m, name="semicircle")


def bernoulli(family=0, p: Scalar = Fraction(1, 2), x: Scalar = 1, y: Scalar = -1) -> MomentFunctional:
    """Two-atom law ``p*delta_x + (1-p)*delta_y``; defaults to symmetric +-1."""
    p, x, y = exact(p), exact(x), exact(y)
    return sequence_functional(family, lambda k: p * x ** k + (1 - p) * y ** k, name="bernoulli")


class SpikedTriple(NamedTuple):
    """Limit data of ``A_N = diag(theta, a, ..., a)`` with the spike at ``e_1``.

    ``psi`` is the limit trace, ``omega`` the 1/N correction and ``phi`` the
    vector state at the spike. ``matrix(N)`` builds the concrete matrix.
    """

    psi: MomentFunctional
    omega: MomentFunctional
    phi: MomentFunctional
    matrix: Callable[[int], np.ndarray]

    def trace_moment(self, k: int, N: int) -> Scalar:
        """Exact ``tr_N(A_N^k)``."""
        w = Word((Generator(self.psi.family, 0),) * k)
        return exact(self.psi.value(w) + self.omega.value(w) / Fraction(N))


def spiked_diagonal_triple(theta: Scalar, a: Scalar, family=0) -> SpikedTriple:
    theta, a = exact(theta), exact(a)
    psi = sequence_functional(family, lambda k: a ** k, name=f"spiked-psi({theta},{a})")
    omega = sequence_functional(family, lambda k: theta ** k - a ** k, unital=False, unit=0,
                                name=f"spiked-omega({theta},{a})")
    phi = sequence_functional(family, lambda k: theta ** k, name=f"spiked-phi({theta},{a})")

    def matrix(N: int) -> np.ndarray:
        d = np.full(N, complex(a), dtype=complex)
        d[0] = complex(theta)
        return np.diag(d)

    return SpikedTriple(psi, omega, phi, matrix)


def table_functional(family, values: Mapping, *, tracial: bool = False, unital: bool = True,
                     unit: Scalar | None = None, name: str = "") -> MomentFunctional:
    from .parsing import parse_word

    table = {}
    for key, v in values.items():
        w = parse_word(key) if isinstance(key, str) else Word(key)
        table[w] = v
    if unital:
        table.pop(EMPTY, None)
    return MomentFunctional(family, table=table, unital=unital, tracial=tracial, unit=unit, name=name)


# ------------------------------------------------------- random test data


def family_words(family: int, n_indices: int, max_len: int, min_len: int = 1) -> Iterable[Word]:
    gens = [Generator(family, i) for i in range(n_indices)]
    for n in range(min_len, max_len + 1):
        for tup in itertools.product(gens, repeat=n):
            yield Word(tup)


def necklace_key(w: Word) -> Word:
    return min(w.rotate(k) for k in range(len(w))) if w else w


def random_rational(rng: random.Random, span: int = 6, max_den: int = 4) -> Fraction:
    return Fraction(rng.randint(-span, span), rng.randint(1, max_den))


def random_table_functional(family: int, rng: random.Random, *, max_len: int = 8, n_indices: int = 1,
                            tracial: bool = False, unital: bool = True, unit: Scalar | None = None,
                            span: int = 6, max_den: int = 4) -> MomentFunctional:
    """Random rational table on all words up to ``max_len`` (tracial via necklaces)."""
    table: dict[Word, Scalar] = {}
    for w in family_words(family, n_indices, max_len):
        key = necklace_key(w) if tracial else w
        if key not in table:
            table[key] = random_rational(rng, span, max_den)
        if tracial:
            table[w] = table[key]
    if not unital and unit is None:
        unit = random_rational(rng, span, max_den)
    return MomentFunctional(family, table=table, unital=unital, tracial=tracial, unit=unit,
                            name=f"random[{family}]")


def random_triple(family: int, rng: random.Random, *, unit: Scalar, max_len: int = 8,
                  n_indices: int = 1, tracial_states: bool = False) -> FunctionalTriple:
    psi = random_table_functional(family, rng, max_len=max_len, n_indices=n_indices, tracial=tracial_states)
    phi = random_table_functional(family, rng, max_len=max_len, n_indices=n_indices, tracial=tracial_states)
    omega = random_table_functional(family, rng, max_len=max_len, n_indices=n_indices, tracial=True,
                                    unital=False, unit=unit)
    return FunctionalTriple(psi, phi, omega)


# ---------------------------------------------------------------- JSON


_RULES = {
    "delta": lambda fam, spec: delta_functional(fam),
    "dirac": lambda fam, spec: dirac(fam, scalar_from_json(spec.get("point", 1))),
    "semicircle": lambda fam, spec: semicircle(fam, scalar_from_json(spec.get("variance", 1))),
    "bernoulli": lambda fam, spec: bernoulli(
        fam,
        scalar_from_json(spec.get("p", "1/2")),
        scalar_from_json(spec.get("x", 1)),
        scalar_from_json(spec.get("y", -1)),
    ),
}


def _spiked_from_json(fam, spec):
    trip = spiked_diagonal_triple(scalar_from_json(spec["theta"]), scalar_from_json(spec["a"]), fam)
    role = spec.get("role", "psi")
    if role not in ("psi", "phi", "omega"):
        raise FunctionalError(f"unknown spiked role {role!r}")
    return getattr(trip, role)


def _moments_from_json(fam, spec):
    seq = [scalar_from_json(v) for v in spec["moments"]]
    unital = spec.get("unital", True)
    unit = None if unital else scalar_from_json(spec.get("unit", 0))

    def m(k):
        if k == 0:
            return 1 if unital else unit
        if k > len(seq):
            raise MissingMomentError(f"moment sequence has no entry of order {k}")
        return seq[k - 1]

    return sequence_functional(fam, m, unital=unital, unit=unit, name="moments")


def functional_from_json(spec: Mapping, family=None) -> MomentFunctional:
    """Decode one functional.

    Accepted forms::

        {"family": 0, "values": {"X0": 0, "X0*X0": 1}, "tracial": true}
        {"rule": "semicircle", "variance": 1}
        {"rule": "spiked", "theta": 2, "a": 0, "role": "omega"}
        {"rule": "moments", "moments": [0, 1, 0, 2]}

    Non-unital functionals set ``"unital": false`` and give ``"unit"``.
    """
    fam = spec.get("family", family)
    if fam is None:
        raise FunctionalError("functional spec needs a family")
    if family is not None and fam != family:
        raise FunctionalError(f"spec family {fam} disagrees with slot {family}")
    if "values" in spec:
        unital = spec.get("unital", True)
        unit = None if unital else scalar_from_json(spec.get("unit", 0))
        values = {k: scalar_from_json(v) for k, v in spec["values"].items()}
        return table_functional(fam, values, tracial=spec.get("tracial", False), unital=unital, unit=unit)
    rule = spec.get("rule")
    if rule == "spiked":
        return _spiked_from_json(fam, spec)
    if rule == "moments":
        return _moments_from_json(fam, spec)
    if rule in _RULES:
        return _RULES[rule](fam, spec)
    raise FunctionalError(f"unknown functional rule {rule!r}")


def load_functional(path: str | Path, family=None) -> MomentFunctional:
    return functional_from_json(json.loads(Path(path).read_text()), family)
