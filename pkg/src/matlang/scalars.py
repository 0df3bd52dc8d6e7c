"""Scalars for the two numeric towers.

The exact tower uses :class:`GaussianRational` (complex numbers with rational
parts); the float tower uses Python ``complex``.
"""

from __future__ import annotations

import enum
import re
from fractions import Fraction
from numbers import Rational


class Tower(enum.Enum):
    EXACT = "exact"
    FLOAT = "float"


class GaussianRational:
    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def coerce(cls, x) -> GaussianRational:
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, (int, Fraction, Rational)):
            return cls(x, 0)
        if isinstance(x, complex):
            return cls(Fraction(x.real), Fraction(x.imag))
        if isinstance(x, float):
            return cls(Fraction(x), 0)
        raise TypeError(f"cannot make an exact scalar from {x!r}")

    @property
    def real(self) -> Fraction:
        return self.re

    @property
    def imag(self) -> Fraction:
        return self.im

    def conjugate(self) -> GaussianRational:
        return GaussianRational(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __add__(self, other):
        o = _exact_or_none(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = _exact_or_none(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = _exact_or_none(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = _exact_or_none(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re * o.re - self.im * o.im,
                                self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _exact_or_none(other)
        if o is None:
            return NotImplemented
        d = o.abs2()
        if d == 0:
            raise ZeroDivisionError("exact division by zero")
        n = self * o.conjugate()
        return GaussianRational(n.re / d, n.im / d)

    def __rtruediv__(self, other):
        o = _exact_or_none(other)
        if o is None:
            return NotImplemented
        return o / self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, (float, complex)):
            return complex(self) == other
        o = _exact_or_none(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self) -> int:
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __repr__(self) -> str:
        return f"GaussianRational({format_scalar(self)!r})"

    def __str__(self) -> str:
        return format_scalar(self)


def _exact_or_none(x) -> GaussianRational | None:
    if isinstance(x, GaussianRational):
        return x
    if isinstance(x, (int, Fraction)):
        return GaussianRational(x, 0)
    return None


def coerce(x, tower: Tower):
    if tower is Tower.EXACT:
        return GaussianRational.coerce(x)
    return complex(x)


# -------------------------
# Text format:  a | bi | a+bi | a-bi  with rational or decimal parts
# -------------------------

_NUM = r"(?:\d+(?:\.\d*)?|\.\d+)(?:/\d+)?"
_SCALAR_RE = re.compile(
    rf"""^\s*(?:
        (?P<re>[+-]?{_NUM})(?:\s*(?P<isign>[+-])\s*(?P<im>{_NUM})?\s*i)?
      | (?P<only_sign>[+-]?)\s*(?P<only_im>{_NUM})?\s*i
    )\s*$""",
    re.VERBOSE,
)


def _fraction(text: str) -> Fraction:
    if "/" in text:
        num, den = text.split("/")
        return Fraction(num) / Fraction(den)
    return Fraction(text)


def parse_scalar(text: str) -> GaussianRational:
    """Parse ``3``, ``-1/2``, ``0.15``, ``1+2i``, ``1-i``, ``-2/3i`` exactly."""
    m = _SCALAR_RE.match(text)
    if not m:
        raise ValueError(f"not a scalar literal: {text!r}")
    if m.group("re") is not None:
        re_part = _fraction(m.group("re"))
        im_part = Fraction(0)
        if m.group("isign"):
            im_part = _fraction(m.group("im") or "1")
            if m.group("isign") == "-":
                im_part = -im_part
        return GaussianRational(re_part, im_part)
    im_part = _fraction(m.group("only_im") or "1")
    if m.group("only_sign") == "-":
        im_part = -im_part
    return GaussianRational(0, im_part)


def _fmt_real(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    if x == 0:
        return "0"
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def format_scalar(z) -> str:
    """Canonical text; exact values print as rationals, floats via ``repr``."""
    if isinstance(z, GaussianRational):
        re_, im_ = z.re, z.im
    else:
        z = complex(z)
        re_, im_ = z.real, z.imag
        # normalise negative zero
        re_, im_ = re_ + 0.0, im_ + 0.0
    if im_ == 0:
        return _fmt_real(re_)
    sign = "-" if im_ < 0 else "+"
    mag = "" if abs(im_) == 1 else _fmt_real(abs(im_))
    if re_ == 0:
        return f"{'-' if sign == '-' else ''}{mag}i"
    return f"{_fmt_real(re_)}{sign}{mag}i"
