"""Exact evaluators for free, c-free, cyclic c-free, ordered and indented products.

Every product is a configuration of one recursion. Split a word into maximal
single-algebra blocks ``b_1 ... b_m`` and write each block as
``b_j = b_j° + w_j(b_j)`` with ``w_j`` the weight functional of its algebra.
Expanding, the fully centered term is known in closed form and the others are
shorter words, so

    F(b_1...b_m) = F(b_1°...b_m°) - sum_{S proper} prod_{j not in S} (-w_j(b_j)) F(prod_{j in S} b_j).

With value functionals ``v_j`` the fully centered term is ``prod (v_j - w_j)(b_j)``,
which vanishes for the free product (``v = w``). In cyclic mode the word is
first rotated so that its two ends lie in different algebras; single blocks go
to ``omega`` and the empty word to the shared constant ``omega(1)``.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Callable, Hashable, Mapping

from .functionals import (
    FunctionalError,
    FunctionalPair,
    FunctionalTriple,
    MomentFunctional,
    StateTriple,
    evaluate,
    functional_from_json,
    spiked_diagonal_triple,
)
from .scalars import scalar_from_json
from .scalars import Scalar, exact, is_zero
from .words import EMPTY, Polynomial, Word, as_polynomial, runs

WordFunctional = Callable[[Word], Scalar]


class UnregisteredFamilyError(LookupError):
    """A word uses a generator family with no registered functional."""


class OmegaUnitMismatchError(ValueError):
    """Cyclic c-free inputs must agree on omega(1)."""


class MissingRoleError(LookupError):
    """A product mode needs a functional that was not registered for some algebra."""


MODES = ("free", "cfree", "cyclic", "ordered", "indented")


def _unit_of(f) -> Scalar:
    return f.unit if hasattr(f, "unit") else f(EMPTY)


class Engine:
    """The centering recursion for one choice of weight and value functionals.

    ``group_of`` maps a generator family to the algebra it belongs to;
    ``weights`` and ``values`` (and ``omegas`` in cyclic mode) map algebras to
    functionals on words.
    """

    def __init__(
        self,
        group_of: Callable[[int], Hashable],
        weights: Mapping[Hashable, WordFunctional],
        values: Mapping[Hashable, WordFunctional],
        *,
        cyclic: bool = False,
        omegas: Mapping[Hashable, WordFunctional] | None = None,
        unit: Scalar = 1,
    ):
        if cyclic and omegas is None:
            raise ValueError("cyclic mode needs omega functionals")
        self.group_of = group_of
        self.weights = dict(weights)
        self.values = dict(values)
        self.cyclic = cyclic
        self.omegas = dict(omegas or {})
        self.unit = exact(unit)
        self._memo: dict[Word, Scalar] = {}

    def word(self, w: Word) -> Scalar:
        if not w:
            return self.unit if self.cyclic else Fraction(1)
        hit = self._memo.get(w)
        if hit is not None:
            return hit
        rs = runs(w, self.group_of)
        if len(rs) == 1:
            g = rs[0][0]
            out = exact((self.omegas if self.cyclic else self.values)[g](w))
        elif self.cyclic and rs[0][0] == rs[-1][0]:
            last = rs[-1][1]
            out = self.word(last + w[: len(w) - len(last)])
        else:
            out = self._expand(rs)
        self._memo[w] = out
        return out

    def _expand(self, rs) -> Scalar:
        m = len(rs)
        ws = [exact(self.weights[g](sub)) for g, sub in rs]
        total: Scalar = Fraction(1)
        for (g, sub), wj in zip(rs, ws):
            total = total * (self.values[g](sub) - wj)
        # subsets T of the blocks replaced by their weights; blocks with zero weight must stay
        live = [j for j in range(m) if not is_zero(ws[j])]
        for k in range(1, len(live) + 1):
            for T in itertools.combinations(live, k):
                coef: Scalar = Fraction(1)
                for j in T:
                    coef = coef * -ws[j]
                keep = Word(itertools.chain.from_iterable(rs[j][1] for j in range(m) if j not in T))
                total = total - coef * self.word(keep)
        return exact(total)

    def __call__(self, p) -> Scalar:
        if isinstance(p, Word):
            return self.word(p)
        p = as_polynomial(p)
        total: Scalar = Fraction(0)
        for w, c in p.items():
            total = total + c * self.word(w)
        return exact(total)


def _roles(data) -> dict[str, WordFunctional]:
    if isinstance(data, MomentFunctional):
        return {"psi": data}
    if isinstance(data, FunctionalPair):
        return {"phi": data.phi, "psi": data.psi}
    if isinstance(data, FunctionalTriple):
        return {"psi": data.psi, "phi": data.phi, "omega": data.omega}
    if isinstance(data, StateTriple):
        return {"phi": data.phi, "psi": data.psi, "theta": data.theta}
    if isinstance(data, Mapping):
        return dict(data)
    raise TypeError(f"cannot register {type(data).__name__} as algebra data")


def _label_families(label) -> tuple:
    if isinstance(label, (tuple, frozenset)):
        return tuple(label)
    return (label,)


class ProductContext:
    """Per-algebra functional data plus cached evaluators for every product mode.

    ``data`` maps an algebra label to a :class:`MomentFunctional` (weight only),
    a pair, a triple, or a dict of named roles (``psi``, ``phi``, ``omega``,
    ``theta``). Integer labels are generator families; a tuple label groups
    several families into one algebra, whose role functionals must then accept
    words in all of them (see :func:`composite`). Insertion order fixes which
    algebra is "left" for the non-symmetric ordered and indented products.
    """

    def __init__(self, data: Mapping[Hashable, object]):
        self.roles: dict[Hashable, dict[str, WordFunctional]] = {}
        self._group: dict[int, Hashable] = {}
        for label, d in data.items():
            self.roles[label] = _roles(d)
            for fam in _label_families(label):
                if fam in self._group:
                    raise ValueError(f"family {fam} registered twice")
                self._group[fam] = label
        self._engines: dict[tuple, Engine] = {}
        self._second: dict[tuple, "SecondOrder"] = {}

    @property
    def labels(self) -> list:
        return list(self.roles)

    def group_of(self, family: int) -> Hashable:
        try:
            return self._group[family]
        except KeyError:
            raise UnregisteredFamilyError(f"generator family {family} has no registered functional") from None

    def role(self, label, name: str) -> WordFunctional:
        try:
            return self.roles[label][name]
        except KeyError:
            raise MissingRoleError(f"algebra {label!r} has no {name!r} functional") from None

    def _role_map(self, spec) -> dict:
        if isinstance(spec, str):
            return {g: self.role(g, spec) for g in self.roles}
        return {g: self.role(g, spec[g]) for g in self.roles}

    def shared_unit(self) -> Scalar:
        units = {g: exact(_unit_of(self.role(g, "omega"))) for g in self.roles}
        vals = set(units.values())
        if len(vals) > 1:
            detail = ", ".join(f"{g}: {v}" for g, v in units.items())
            raise OmegaUnitMismatchError(f"omega(1) must agree across algebras ({detail})")
        return vals.pop() if vals else Fraction(0)

    def engine(self, weight, value, cyclic: bool = False) -> Engine:
        key = (
            weight if isinstance(weight, str) else tuple(sorted(weight.items(), key=repr)),
            value if isinstance(value, str) else tuple(sorted(value.items(), key=repr)),
            cyclic,
        )
        eng = self._engines.get(key)
        if eng is None:
            kw = {}
            if cyclic:
                kw = {"omegas": self._role_map("omega"), "unit": self.shared_unit()}
            eng = Engine(self.group_of, self._role_map(weight), self._role_map(value), cyclic=cyclic, **kw)
            self._engines[key] = eng
        return eng

    def left_right(self) -> tuple[Hashable, Hashable]:
        if len(self.roles) != 2:
            raise ValueError("ordered and indented products take exactly two algebras")
        left, right = self.labels
        return left, right

    def weight_roles(self, mode: str):
        """Weight functional names per algebra for ``mode`` (used for centering)."""
        if mode in ("free", "cfree", "cyclic"):
            return "psi"
        left, right = self.left_right()
        if mode == "ordered":
            return {left: "psi", right: "phi"}
        if mode == "indented":
            return {left: "theta", right: "psi"}
        raise ValueError(f"unknown mode {mode!r}")

    def center_fn(self, mode: str) -> Callable[[Polynomial], Polynomial]:
        """Centering against the weight of the polynomial's own algebra."""
        roles = self.weight_roles(mode)

        def center(p: Polynomial) -> Polynomial:
            fams = p.family_set()
            if not fams:
                return p - Polynomial.constant(p.scalar_part())
            labels = {self.group_of(f) for f in fams}
            if len(labels) != 1:
                raise ValueError("cannot center a polynomial spanning several algebras")
            (g,) = labels
            name = roles if isinstance(roles, str) else roles[g]
            return p - Polynomial.constant(evaluate(self.role(g, name), p))

        return center


# ------------------------------------------------------------ public API


def free_product_eval(ctx: ProductContext, p) -> Scalar:
    """psi_1 * psi_2 evaluated on ``p``."""
    return ctx.engine("psi", "psi")(p)


def weighted_cfree_eval(ctx: ProductContext, p, weights="psi", values="phi") -> Scalar:
    """c-free product of the ``values`` functionals with per-algebra ``weights``."""
    return ctx.engine(weights, values)(p)


def cfree_product_eval(ctx: ProductContext, p) -> tuple[Scalar, Scalar]:
    """(psi_1 * psi_2, phi_1 (psi_1 * psi_2) phi_2) on ``p``."""
    return free_product_eval(ctx, p), weighted_cfree_eval(ctx, p)


def cyclic_cfree_eval(ctx: ProductContext, p) -> Scalar:
    """The cyclic c-free product omega_1 ⊛ omega_2 on ``p``."""
    return ctx.engine("psi", "phi", cyclic=True)(p)


def ordered_product_eval(ctx: ProductContext, p) -> tuple[Scalar, Scalar]:
    """(phi, psi) components of (phi_1, psi_1) ⋉ (phi_2, psi_2)."""
    w = ctx.weight_roles("ordered")
    return ctx.engine(w, "phi")(p), ctx.engine(w, "psi")(p)


def indented_product_eval(ctx: ProductContext, p) -> tuple[Scalar, Scalar, Scalar]:
    """(phi, psi, theta) components of the indented product."""
    w = ctx.weight_roles("indented")
    return ctx.engine(w, "phi")(p), ctx.engine(w, "psi")(p), ctx.engine(w, "theta")(p)


def evaluate_mode(ctx: ProductContext, mode: str, p) -> dict[str, Scalar]:
    """Named components of the product ``mode`` on ``p``."""
    if mode == "free":
        return {"psi": free_product_eval(ctx, p)}
    if mode == "cfree":
        psi, phi = cfree_product_eval(ctx, p)
        return {"psi": psi, "phi": phi}
    if mode == "cyclic":
        return {"omega": cyclic_cfree_eval(ctx, p)}
    if mode == "ordered":
        phi, psi = ordered_product_eval(ctx, p)
        return {"phi": phi, "psi": psi}
    if mode == "indented":
        phi, psi, theta = indented_product_eval(ctx, p)
        return {"phi": phi, "psi": psi, "theta": theta}
    raise ValueError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")


def composite(ctx: ProductContext, mode: str = "cyclic"):
    """Package the product over ``ctx`` as the data of a single algebra.

    The label is the tuple of member families. For ``mode="cyclic"`` the result
    is a :class:`FunctionalTriple` (free, c-free, cyclic c-free products).
    """
    label = tuple(f for g in ctx.labels for f in _label_families(g))
    if mode == "free":
        eng = ctx.engine("psi", "psi")
        return MomentFunctional(label, rule=eng.word, tracial=True, name="free-composite")
    if mode == "cfree":
        psi = MomentFunctional(label, rule=ctx.engine("psi", "psi").word, name="free-composite")
        phi = MomentFunctional(label, rule=ctx.engine("psi", "phi").word, name="cfree-composite")
        return FunctionalPair(phi=phi, psi=psi)
    if mode == "cyclic":
        psi = MomentFunctional(label, rule=ctx.engine("psi", "psi").word, name="free-composite")
        phi = MomentFunctional(label, rule=ctx.engine("psi", "phi").word, name="cfree-composite")
        omega = MomentFunctional(label, rule=ctx.engine("psi", "phi", cyclic=True).word, unital=False,
                                 tracial=True, unit=ctx.shared_unit(), name="cyclic-composite")
        return FunctionalTriple(psi=psi, phi=phi, omega=omega)
    raise ValueError(f"composite not available for mode {mode!r}")


# ------------------------------------------------------ second order


class SecondOrder:
    """(psi_A * psi_B)^(2): the second-order free extension of (psi_A, 0), (psi_B, 0).

    Both arguments are reduced by traciality and the centering expansion. For
    fully centered cyclically alternating factors ``a_1...a_n`` and
    ``c_1...c_m`` with ``n, m >= 2`` the value is
    ``delta_{nm} sum_k prod_i psi(a_i b_{i+k})`` where ``b_i = c_{n+1-i}``
    (the second word read backwards) and ``psi(x° y°)`` is the covariance
    ``psi(xy) - psi(x)psi(y)`` inside one algebra and 0 across algebras.
    Words living in a single algebra contribute nothing, since each algebra
    carries the trivial second-order functional.
    """

    def __init__(self, ctx: ProductContext):
        self.ctx = ctx
        self.psi = ctx._role_map("psi")
        self._memo: dict[tuple[Word, Word], Scalar] = {}

    def _reduce(self, w: Word):
        """Cyclically alternating runs of ``w`` (after rotation), or None if trivial."""
        rs = runs(w, self.ctx.group_of)
        if len(rs) >= 2 and rs[0][0] == rs[-1][0]:
            last = rs[-1][1]
            w = last + w[: len(w) - len(last)]
            rs = runs(w, self.ctx.group_of)
        return rs if len(rs) >= 2 else None

    def _pair(self, x, y) -> Scalar:
        (gx, wx), (gy, wy) = x, y
        if gx != gy:
            return Fraction(0)
        f = self.psi[gx]
        return exact(f(wx + wy) - f(wx) * f(wy))

    def _centered(self, ra, rc) -> Scalar:
        n = len(ra)
        if n != len(rc):
            return Fraction(0)
        b = rc[::-1]
        total: Scalar = Fraction(0)
        for k in range(n):
            term: Scalar = Fraction(1)
            for i in range(n):
                term = term * self._pair(ra[i], b[(i + k) % n])
                if is_zero(term):
                    break
            total = total + term
        return exact(total)

    def words(self, p: Word, q: Word) -> Scalar:
        key = (p, q)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        ra, rc = self._reduce(p), self._reduce(q)
        if ra is None or rc is None:
            out = Fraction(0)
        else:
            out = self._expand(ra, rc)
        self._memo[key] = out
        return out

    def _expand(self, ra, rc) -> Scalar:
        wa = [exact(self.psi[g](s)) for g, s in ra]
        wc = [exact(self.psi[g](s)) for g, s in rc]
        total = self._centered(ra, rc)
        # the subsets replaced by weights in either argument, excluding the all-centered term
        live_a = [j for j in range(len(ra)) if not is_zero(wa[j])]
        live_c = [j for j in range(len(rc)) if not is_zero(wc[j])]
        subsets_a = [T for k in range(len(live_a) + 1) for T in itertools.combinations(live_a, k)]
        subsets_c = [T for k in range(len(live_c) + 1) for T in itertools.combinations(live_c, k)]
        for Ta in subsets_a:
            ca: Scalar = Fraction(1)
            for j in Ta:
                ca = ca * -wa[j]
            pa = Word(itertools.chain.from_iterable(s for j, (g, s) in enumerate(ra) if j not in Ta))
            for Tc in subsets_c:
                if not Ta and not Tc:
                    continue
                cc: Scalar = ca
                for j in Tc:
                    cc = cc * -wc[j]
                qc = Word(itertools.chain.from_iterable(s for j, (g, s) in enumerate(rc) if j not in Tc))
                total = total - cc * self.words(pa, qc)
        return exact(total)

    def __call__(self, p, q) -> Scalar:
        p, q = as_polynomial(p), as_polynomial(q)
        total: Scalar = Fraction(0)
        for w1, c1 in p.items():
            for w2, c2 in q.items():
                total = total + c1 * c2 * self.words(w1, w2)
        return exact(total)


def second_order_covariance(ctx: ProductContext, p, q) -> Scalar:
    """Bilinear second-order free covariance of ``p`` and ``q``."""
    key = ("psi",)
    so = ctx._second.get(key)
    if so is None:
        so = ctx._second[key] = SecondOrder(ctx)
    return so(p, q)


# ------------------------------------------------------------ JSON input

ROLE_NAMES = ("psi", "phi", "omega", "theta")


def context_from_json(spec) -> ProductContext:
    """Build a :class:`ProductContext` from decoded JSON.

    ::

        {"algebras": [
            {"family": 0, "psi": {"rule": "semicircle"}, "phi": {"rule": "dirac", "point": 0}},
            {"family": 1, "spiked": {"theta": 2, "a": 0}}
        ]}

    Each role takes any form accepted by :func:`functional_from_json`, with
    the family defaulting to the algebra's. ``"spiked"`` fills ``psi``,
    ``phi`` and ``omega`` from the spiked diagonal model; explicit roles
    override it. List order fixes left and right for ordered and indented
    products. A bare list is accepted in place of the ``algebras`` object.
    """
    algebras = spec.get("algebras") if isinstance(spec, Mapping) else spec
    if not isinstance(algebras, list) or not algebras:
        raise FunctionalError("context spec needs a non-empty 'algebras' list")
    data: dict[Hashable, dict] = {}
    for entry in algebras:
        if not isinstance(entry, Mapping) or "family" not in entry:
            raise FunctionalError("every algebra entry needs a 'family'")
        fam = entry["family"]
        if not isinstance(fam, int) or isinstance(fam, bool) or fam < 0:
            raise FunctionalError(f"family must be a non-negative integer, got {fam!r}")
        if fam in data:
            raise FunctionalError(f"family {fam} listed twice")
        roles: dict[str, MomentFunctional] = {}
        if "spiked" in entry:
            sp = entry["spiked"]
            trip = spiked_diagonal_triple(scalar_from_json(sp["theta"]), scalar_from_json(sp.get("a", 0)), fam)
            roles.update(psi=trip.psi, phi=trip.phi, omega=trip.omega)
        for name in ROLE_NAMES:
            if name in entry:
                roles[name] = functional_from_json(entry[name], fam)
        unknown = set(entry) - set(ROLE_NAMES) - {"family", "spiked"}
        if unknown:
            raise FunctionalError(f"unknown keys for family {fam}: {', '.join(sorted(unknown))}")
        if not roles:
            raise FunctionalError(f"family {fam} has no functionals")
        data[fam] = roles
    return ProductContext(data)
