from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortex.functionals import center, semicircle
from vortex.parsing import ParseError, parse_polynomial, parse_word, tokenize
from vortex.scalars import I
from vortex.words import (Block, Generator, Polynomial, Word, X, Y, alternating_blocks, concatenate_blocks,
                          cyclic_rotations, runs)

P = Polynomial


def gen(g):
    return P.generator(g)


# ------------------------------------------------------------ word algebra


def test_unit_law_and_single_family_ring_identity():
    w = P.from_word((X(0), Y(0), X(0)))
    assert P.constant(1) * w == w
    assert w * P.constant(1) == w
    x = gen(X(0))
    assert (x + 1) * (x - 1) == x * x - 1


def test_no_reordering_across_families():
    x, y = gen(X(0)), gen(Y(0))
    assert (x * y) * (y * x) == P.from_word((X(0), Y(0), Y(0), X(0)))
    assert x * y != y * x


def test_zero_coefficients_are_dropped():
    x = gen(X(0))
    assert (x - x).is_zero()
    assert len(x + 0) == 1
    assert (x * 0).is_zero()


def test_power_and_degree():
    x, y = gen(X(0)), gen(Y(0))
    p = (x + y) ** 2
    assert len(p) == 4
    assert p.degree() == 2
    assert p.coefficient(Word((X(0), Y(0)))) == 1
    assert (x + y) ** 0 == P.constant(1)


def test_word_rotate():
    w = Word((X(0), Y(0), X(1)))
    assert w.rotate(1) == Word((Y(0), X(1), X(0)))
    assert w.rotate(3) == w
    assert Word().rotate(2) == Word()


def test_alternating_blocks():
    w = Word((X(0), X(1), Y(0), X(0)))
    blocks = alternating_blocks(w)
    assert [b.family for b in blocks] == [0, 1, 0]
    assert blocks[0].content == P.from_word((X(0), X(1)))
    assert alternating_blocks(Word((Y(0),))) == [Block(1, gen(Y(0)))]
    assert alternating_blocks(Word()) == []
    assert concatenate_blocks(blocks) == P.from_word(w)


def test_runs_with_grouping_key():
    w = Word((X(0), Y(0), Generator(2, 0), X(0)))
    grouped = runs(w, key=lambda f: f in (0, 1))
    assert [k for k, _ in grouped] == [True, False, True]


def test_cyclic_rotation_folds_last_block():
    p1, q1, p2 = gen(X(0)), gen(Y(0)), gen(X(1))
    out = cyclic_rotations([Block(0, p1), Block(1, q1), Block(0, p2)])
    assert out == [Block(0, p2 * p1), Block(1, q1)]
    r, s, t = gen(X(2)), gen(Y(1)), gen(X(3))
    out = cyclic_rotations([Block(0, p1), Block(1, q1), Block(0, r), Block(1, s), Block(0, t)])
    assert out == [Block(0, t * p1), Block(1, q1), Block(0, r), Block(1, s)]


def test_cyclic_rotation_errors():
    with pytest.raises(ValueError):
        cyclic_rotations([Block(0, gen(X(0))), Block(1, gen(Y(0)))])
    with pytest.raises(ValueError):
        cyclic_rotations([Block(0, gen(X(0)))])
    with pytest.raises(ValueError):
        cyclic_rotations([Block(0, gen(X(0))), Block(0, gen(X(1))), Block(0, gen(X(0)))])


letters = st.sampled_from([X(0), X(1), Y(0), Y(1)])
polys = st.lists(st.tuples(st.lists(letters, max_size=3), st.integers(-3, 3)), max_size=4).map(
    lambda ts: P({Word(w): c for w, c in ts}))


@settings(max_examples=60, deadline=None)
@given(polys, polys, polys)
def test_ring_axioms(p, q, r):
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r
    assert (p + q) * r == p * r + q * r
    assert p + q == q + p
    assert (p - p).is_zero()


# ----------------------------------------------------------------- parsing


def test_parse_word_and_polynomial():
    assert parse_word("X0*Y0*X0") == Word((X(0), Y(0), X(0)))
    assert parse_word("1") == Word()
    assert parse_word("F2_1*X0") == Word((Generator(2, 1), X(0)))
    p = parse_polynomial("2*X0^2 - 1/2*Y0 + 3")
    assert p.coefficient(Word((X(0), X(0)))) == 2
    assert p.coefficient(Word((Y(0),))) == Fraction(-1, 2)
    assert p.scalar_part() == 3


def test_parse_precedence_and_parentheses():
    assert parse_polynomial("X0*(Y0 + 1)") == parse_polynomial("X0*Y0 + X0")
    assert parse_polynomial("(X0 + Y0)^2") == parse_polynomial("X0^2 + X0*Y0 + Y0*X0 + Y0^2")
    assert parse_polynomial("-X0 + X0") == P()
    assert parse_polynomial("0.25*X0") == parse_polynomial("1/4*X0")


def test_parse_imaginary_unit():
    p = parse_polynomial("i*X0")
    assert p.coefficient(Word((X(0),))) == I
    assert parse_polynomial("i*i") == P.constant(-1)


def test_centering_braces_use_the_supplied_functional():
    s = semicircle(0)
    p = parse_polynomial("{X0^2}", lambda q: center(s, q))
    assert p == parse_polynomial("X0^2 - 1")
    assert parse_polynomial("{X0}", lambda q: center(s, q)) == parse_polynomial("X0")


@pytest.mark.parametrize("text, pos", [
    ("X0 + ", 5),
    ("X0 * * Y0", 5),
    ("(X0", 3),
    ("X0)", 2),
    ("X0 ^ Y0", 5),
    ("Q1", 0),
    ("X0 # Y0", 3),
    ("", 0),
    ("X0^1/2", 3),
])
def test_parse_error_positions(text, pos):
    with pytest.raises(ParseError) as exc:
        parse_polynomial(text)
    assert exc.value.position == pos


def test_centering_errors():
    with pytest.raises(ParseError) as exc:
        parse_polynomial("X0*{Y0}")
    assert exc.value.position == 3
    with pytest.raises(ParseError):
        parse_polynomial("{X0*Y0}", lambda q: q)


def test_parse_word_rejects_non_monomials():
    with pytest.raises(ParseError):
        parse_word("X0 + Y0")
    with pytest.raises(ParseError):
        parse_word("2*X0")


def test_tokenize_positions():
    toks = tokenize(" X0 *Y12")
    assert [(t.kind, t.text, t.pos) for t in toks] == [("gen", "X0", 1), ("op", "*", 4), ("gen", "Y12", 5)]


@settings(max_examples=60, deadline=None)
@given(polys)
def test_str_round_trip(p):
    assert parse_polynomial(str(p)) == p
