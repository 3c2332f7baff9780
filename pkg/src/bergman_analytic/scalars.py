"""Coefficient values for jets.

Two arithmetic modes exist. In ``"exact"`` mode a coefficient is a
``gmpy2.mpq`` when it is real and a :class:`GaussRational` otherwise, so
real-coefficient computations never pay for an imaginary part. In
``"float"`` mode coefficients are plain Python ``complex`` numbers.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

from gmpy2 import mpq

from .errors import ModeMismatch

EXACT = "exact"
FLOAT = "float"
MODES = (EXACT, FLOAT)


class GaussRational:
    """A complex number with rational real and imaginary parts.

    Arithmetic results with a vanishing imaginary part collapse back to a
    plain ``mpq`` so that the canonical form of a real value is unique.
    """

    __slots__ = ("re", "im")

    def __init__(self, re, im=0):
        self.re = mpq(re)
        self.im = mpq(im)

    @staticmethod
    def make(re, im):
        if im == 0:
            return mpq(re)
        g = GaussRational.__new__(GaussRational)
        g.re = re
        g.im = im
        return g

    def __repr__(self):
        return f"GaussRational({self.re}, {self.im})"

    def __str__(self):
        sign = "+" if self.im >= 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"

    def __eq__(self, other):
        if isinstance(other, GaussRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Rational, type(mpq()))):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __neg__(self):
        return GaussRational.make(-self.re, -self.im)

    def __add__(self, other):
        if isinstance(other, GaussRational):
            return GaussRational.make(self.re + other.re, self.im + other.im)
        if _is_real_exact(other):
            return GaussRational.make(self.re + other, self.im)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GaussRational):
            return GaussRational.make(self.re - other.re, self.im - other.im)
        if _is_real_exact(other):
            return GaussRational.make(self.re - other, self.im)
        return NotImplemented

    def __rsub__(self, other):
        if _is_real_exact(other):
            return GaussRational.make(other - self.re, -self.im)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, GaussRational):
            return GaussRational.make(
                self.re * other.re - self.im * other.im,
                self.re * other.im + self.im * other.re,
            )
        if _is_real_exact(other):
            return GaussRational.make(self.re * other, self.im * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, GaussRational):
            return self * other.reciprocal()
        if _is_real_exact(other):
            return GaussRational.make(self.re / other, self.im / other)
        return NotImplemented

    def __rtruediv__(self, other):
        if _is_real_exact(other):
            return self.reciprocal() * other
        return NotImplemented

    def reciprocal(self):
        norm = self.re * self.re + self.im * self.im
        return GaussRational.make(self.re / norm, -self.im / norm)

    def conjugate(self):
        return GaussRational.make(self.re, -self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __abs__(self):
        return abs(complex(self))


_MPQ = type(mpq())


def _is_real_exact(x) -> bool:
    return isinstance(x, (int, _MPQ, Rational)) and not isinstance(x, bool)


def is_exact_value(x) -> bool:
    return isinstance(x, GaussRational) or _is_real_exact(x)


def exact(value, imag=0):
    """Coerce ``value`` (int, Fraction, mpq, ``"p/q"`` string, GaussRational)
    into an exact-mode coefficient."""
    if isinstance(value, GaussRational):
        if imag:
            return value + GaussRational.make(mpq(0), exact(imag))
        return value
    if isinstance(value, float) or isinstance(value, complex):
        raise ModeMismatch(f"refusing to convert float {value!r} to an exact scalar")
    if isinstance(value, str):
        value = mpq(Fraction(value.strip()))
    re = mpq(value)
    if imag:
        return GaussRational.make(re, exact(imag))
    return re


def to_mode(value, mode: str):
    """Convert a Python number into a coefficient of the given mode."""
    if mode == EXACT:
        return exact(value)
    if mode == FLOAT:
        return complex(value)
    raise ValueError(f"unknown arithmetic mode {mode!r}")


def conj(x):
    if isinstance(x, (GaussRational, complex)):
        return x.conjugate()
    return x


def real_part(x):
    if isinstance(x, GaussRational):
        return x.re
    if isinstance(x, complex):
        return x.real
    return x


def imag_part(x):
    if isinstance(x, GaussRational):
        return x.im
    if isinstance(x, complex):
        return x.imag
    return mpq(0)


def to_complex(x) -> complex:
    return complex(x)


def format_exact(x) -> tuple[str, str]:
    """Return ``("p/q", "p/q")`` strings for the real and imaginary part."""
    return _fmt(real_part(x)), _fmt(imag_part(x))


def _fmt(q) -> str:
    q = mpq(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"
