from __future__ import annotations

import json
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vortex.functionals import (FamilyMismatchError, FunctionalError, MissingMomentError, MomentFunctional,
                                bernoulli, catalan, center, delta_functional, dirac, functional_from_json,
                                load_functional, random_table_functional, semicircle, spiked_diagonal_triple,
                                table_functional)
from vortex.parsing import parse_polynomial, parse_word
from vortex.scalars import I, GaussianRational, exact, format_scalar, parse_scalar, scalar_from_json
from vortex.words import Polynomial, Word, X, Y


def powers(k, family=0):
    return Word((X(0) if family == 0 else Y(0),) * k)


# ------------------------------------------------------------ evaluation


def test_dirac_and_unit():
    f = dirac(0, 1)
    assert f(parse_polynomial("X0^3")) == 1
    assert f(Polynomial.constant(1)) == 1
    assert dirac(0, 3)(parse_polynomial("X0^2 + 2*X0")) == 15


def test_catalan_and_semicircle_moments():
    assert [catalan(n) for n in range(7)] == [1, 1, 2, 5, 14, 42, 132]
    s = semicircle(0)
    assert [s.value(powers(k)) for k in range(1, 9)] == [0, 1, 0, 2, 0, 5, 0, 14]
    assert semicircle(0, 2).value(powers(4)) == 8


def test_bernoulli_moments():
    b = bernoulli(0)
    assert [b.value(powers(k)) for k in range(1, 5)] == [0, 1, 0, 1]
    b = bernoulli(0, Fraction(1, 3), 2, 0)
    assert b.value(powers(3)) == Fraction(8, 3)


def test_spiked_trace_functional_at_finite_n():
    # diag(2, 0, 0, 0): tr_4(A^2) = 4/4
    t = spiked_diagonal_triple(2, 0)
    assert t.trace_moment(2, 4) == 1
    assert t.psi.value(powers(3)) == 0
    assert t.omega.value(powers(3)) == 8
    assert t.phi.value(powers(3)) == 8
    assert t.trace_moment(3, 4) == 2


def test_spiked_expansion_is_exact_in_n():
    t = spiked_diagonal_triple(2, 1)
    for N in (1, 2, 5, 17, 1000):
        assert t.trace_moment(2, N) == 1 + Fraction(3, N)
    flat = spiked_diagonal_triple(1, 1)
    assert all(flat.omega.value(powers(k)) == 0 for k in range(1, 6))
    assert flat.omega.unit == 0


def test_spiked_matrix_matches_its_functionals():
    t = spiked_diagonal_triple(Fraction(3, 2), Fraction(-1, 2))
    A = t.matrix(7)
    assert A.shape == (7, 7)
    import numpy as np
    for k in range(1, 5):
        tr = np.trace(np.linalg.matrix_power(A, k)).real / 7
        assert tr == pytest.approx(float(t.trace_moment(k, 7)), abs=1e-12)
        assert np.linalg.matrix_power(A, k)[0, 0].real == pytest.approx(float(t.phi.value(powers(k))))


def test_centering():
    s = semicircle(0)
    assert center(s, Polynomial.constant(1)).is_zero()
    assert center(dirac(0, 5), parse_polynomial("X0")) == parse_polynomial("X0 - 5")
    assert center(s, parse_polynomial("X0^2")) == parse_polynomial("X0^2 - 1")
    assert s(center(s, parse_polynomial("X0^4 + 3*X0"))) == 0


def test_delta_functional():
    d = delta_functional(0)
    assert d(Polynomial.constant(1)) == 1
    assert d.value(powers(5)) == 0
    assert d(parse_polynomial("3 + 2*X0")) == 3


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=5), st.integers(-3, 3))
def test_evaluation_is_linear(coeffs, point):
    f = dirac(0, point)
    p = Polynomial({powers(k + 1): c for k, c in enumerate(coeffs)})
    assert f(p) == sum(c * Fraction(point) ** (k + 1) for k, c in enumerate(coeffs))
    assert f(p + p) == 2 * f(p)


# ---------------------------------------------------------------- tables


def test_table_functional_and_traciality():
    f = table_functional(0, {"X0": 1, "X0*X1": 2, "X1*X0*X0": 5}, tracial=True)
    assert f.value(parse_word("X1*X0")) == 2
    assert f.value(parse_word("X0*X1*X0")) == 5
    g = table_functional(0, {"X0*X1": 2})
    with pytest.raises(MissingMomentError):
        g.value(parse_word("X1*X0"))


def test_random_tracial_table_is_rotation_invariant():
    f = random_table_functional(0, random.Random(1), max_len=5, n_indices=2, tracial=True)
    w = parse_word("X0*X1*X1*X0*X1")
    assert {f.value(w.rotate(k)) for k in range(5)} == {f.value(w)}


def test_family_mismatch_and_construction_errors():
    with pytest.raises(FamilyMismatchError):
        semicircle(0).value(parse_word("Y0"))
    with pytest.raises(FunctionalError):
        MomentFunctional(0)
    with pytest.raises(FunctionalError):
        MomentFunctional(0, rule=lambda w: 0, unit=2)


def test_non_unital_unit():
    f = table_functional(0, {"X0": 1}, unital=False, unit=Fraction(1, 2))
    assert f(Polynomial.constant(4)) == 2
    assert f.value(Word()) == Fraction(1, 2)


# ------------------------------------------------------------------ JSON


def test_functional_from_json_forms(tmp_path):
    f = functional_from_json({"family": 0, "values": {"X0": "1/2", "X0*X0": 2}})
    assert f.value(parse_word("X0")) == Fraction(1, 2)
    assert functional_from_json({"rule": "semicircle", "variance": 2}, family=1).value(powers(2, 1)) == 2
    om = functional_from_json({"rule": "spiked", "theta": 2, "a": 1, "role": "omega"}, family=0)
    assert om.value(powers(2)) == 3 and om.unit == 0
    m = functional_from_json({"rule": "moments", "moments": [0, 1, 0, 2]}, family=0)
    assert m.value(powers(4)) == 2
    with pytest.raises(MissingMomentError):
        m.value(powers(5))
    path = tmp_path / "f.json"
    path.write_text(json.dumps({"family": 0, "rule": "bernoulli"}))
    assert load_functional(path).value(powers(2)) == 1


@pytest.mark.parametrize("spec", [
    {"rule": "semicircle"},
    {"family": 0, "rule": "nope"},
    {"family": 0, "rule": "spiked", "theta": 1, "a": 0, "role": "theta"},
])
def test_functional_from_json_errors(spec):
    with pytest.raises(FunctionalError):
        functional_from_json(spec)


def test_json_family_must_match_slot():
    with pytest.raises(FunctionalError):
        functional_from_json({"family": 0, "rule": "delta"}, family=1)


# --------------------------------------------------------------- scalars


def test_parse_scalar():
    assert parse_scalar("-1/2") == Fraction(-1, 2)
    assert parse_scalar("0.1") == Fraction(1, 10)
    assert parse_scalar("i") == I
    assert parse_scalar("1/2+3/4i") == GaussianRational(Fraction(1, 2), Fraction(3, 4))
    assert parse_scalar("2-i") == GaussianRational(2, -1)
    with pytest.raises(ValueError):
        parse_scalar("")


def test_scalar_from_json_and_format():
    assert scalar_from_json([1, "1/3"]) == GaussianRational(1, Fraction(1, 3))
    assert scalar_from_json([2, 0]) == 2
    assert isinstance(scalar_from_json(0.5), float)
    with pytest.raises(ValueError):
        scalar_from_json(True)
    assert format_scalar(Fraction(3, 4)) == "3/4"
    assert format_scalar(GaussianRational(1, -2)) == "1-2i"
    assert format_scalar(I) == "1i"
    assert format_scalar(0.25) == "0.25"


def test_gaussian_arithmetic():
    z = GaussianRational(1, 2)
    assert exact(z * z.conjugate()) == 5
    assert exact(I * I) == -1
    assert z / z == 1
