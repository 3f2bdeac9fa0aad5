"""Exact Gaussian-rational scalars and helpers for mixing them with floats.

Coefficients in the symbolic engine are kept as :class:`fractions.Fraction`
when real and as :class:`GaussianRational` when they carry an imaginary part.
Floats and complex numbers are accepted everywhere and simply make the result
inexact.
"""

from __future__ import annotations

import numbers
from fractions import Fraction
from typing import Union

Scalar = Union[int, Fraction, "GaussianRational", float, complex]


class GaussianRational:
    """A complex number ``re + im*i`` with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def _lift(x):
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, (int, Fraction)):
            return GaussianRational(x, 0)
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return complex(self) + other
        return exact(GaussianRational(self.re + o.re, self.im + o.im))

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            return complex(self) * other
        return exact(GaussianRational(self.re * o.re - self.im * o.im,
                                      self.re * o.im + self.im * o.re))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if o is None:
            return complex(self) / other
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by zero")
        return exact(GaussianRational((self.re * o.re + self.im * o.im) / den,
                                      (self.im * o.re - self.re * o.im) / den))

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is None:
            return other / complex(self)
        return o / self

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            return complex(self) ** k
        out: Scalar = Fraction(1)
        base: Scalar = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __eq__(self, other):
        o = self._lift(other)
        if o is None:
            if isinstance(other, numbers.Complex):
                return complex(self) == other
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __repr__(self):
        return f"GaussianRational({self.re!s}, {self.im!s})"

    def __str__(self):
        return format_scalar(self)


I = GaussianRational(0, 1)


def exact(x):
    """Return the canonical exact representative of ``x`` when it is exact.

    Ints become Fractions and Gaussian rationals with zero imaginary part
    collapse to Fractions; inexact values pass through unchanged.
    """
    if isinstance(x, bool):
        return Fraction(int(x))
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, GaussianRational) and x.im == 0:
        return x.re
    return x


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, GaussianRational))


def is_zero(x) -> bool:
    return x == 0


def to_complex(x) -> complex:
    return complex(x)


def parse_scalar(text: str):
    """Parse ``"3"``, ``"-1/2"``, ``"0.25"`` or ``"1/2+3/4i"`` style literals.

    Decimal literals are read exactly (``Fraction("0.1") == 1/10``).
    """
    s = text.strip().replace(" ", "")
    if not s:
        raise ValueError("empty scalar literal")
    if s.endswith(("i", "j")) and s not in ("i", "j"):
        body = s[:-1]
        cut = max(body.rfind("+"), body.rfind("-"))
        if cut > 0 and body[cut - 1] not in "eE":
            re_part, im_part = body[:cut], body[cut:]
        else:
            re_part, im_part = "0", body
        if im_part in ("+", "-", ""):
            im_part += "1"
        return exact(GaussianRational(Fraction(re_part), Fraction(im_part)))
    if s in ("i", "j"):
        return I
    return Fraction(s)


def scalar_from_json(value):
    """Decode a JSON scalar: number, rational string, or ``[re, im]`` pair."""
    if isinstance(value, bool):
        raise ValueError("booleans are not scalars")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        return parse_scalar(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        re_v, im_v = (scalar_from_json(v) for v in value)
        if is_exact(re_v) and is_exact(im_v):
            return exact(GaussianRational(re_v, im_v))
        return complex(re_v) + 1j * complex(im_v)
    raise ValueError(f"cannot decode scalar from {value!r}")


def format_scalar(x, digits: int = 15) -> str:
    """Exact rationals print as ``p/q``; inexact values with ``digits`` significant digits."""
    x = exact(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, GaussianRational):
        im = x.im
        sign = "-" if im < 0 else "+"
        mag = -im if im < 0 else im
        if x.re == 0:
            return f"{'-' if im < 0 else ''}{mag}i"
        return f"{x.re}{sign}{mag}i"
    c = complex(x)
    if c.imag == 0:
        return f"{c.real:.{digits}g}"
    sign = "-" if c.imag < 0 else "+"
    return f"{c.real:.{digits}g}{sign}{abs(c.imag):.{digits}g}i"
