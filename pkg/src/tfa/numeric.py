"""Certified real arithmetic and circle reductions.

Every real that enters an inequality check is a :class:`PrecisionReal`: either
an exact rational or an Arb ball ``[mid - rad, mid + rad]`` guaranteed to
contain the true value. Ball arithmetic is delegated to python-flint, which
rounds outward.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Callable, Iterator, Sequence, Union

from flint import acb, arb, ctx, fmpq

DEFAULT_DIGITS = 256
_LOG2_10 = math.log2(10)
_GUARD_BITS = 32


class PrecisionError(ArithmeticError):
    """Working precision is insufficient for a certified answer."""


class AmbiguityError(PrecisionError):
    """An enclosure straddles a decision boundary (integer, half-integer, zero)."""


class ParseError(ValueError):
    pass


def default_digits() -> int:
    env = os.environ.get("TFA_DIGITS")
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise ParseError(f"TFA_DIGITS must be an integer, got {env!r}") from exc
        if value < 16:
            raise ParseError("TFA_DIGITS must be at least 16")
        return value
    return DEFAULT_DIGITS


def digits_to_bits(digits: int) -> int:
    return int(math.ceil(digits * _LOG2_10)) + _GUARD_BITS


def arb_to_fraction(x: arb) -> Fraction:
    """Exact value of an arb midpoint (dyadic rational)."""
    man, exp = x.mid().man_exp()
    man, exp = int(man), int(exp)
    if exp >= 0:
        return Fraction(man * (1 << exp))
    return Fraction(man, 1 << (-exp))


def _rad_fraction(x: arb) -> Fraction:
    man, exp = x.rad().man_exp()
    man, exp = int(man), int(exp)
    if exp >= 0:
        return Fraction(man * (1 << exp))
    return Fraction(man, 1 << (-exp))


def fraction_to_arb(q: Fraction) -> arb:
    return arb(fmpq(q.numerator, q.denominator))


def hull(lo: Fraction, hi: Fraction) -> arb:
    """Ball containing the closed interval [lo, hi] (at the current precision)."""
    if lo > hi:
        lo, hi = hi, lo
    return arb(fmpq((lo + hi).numerator, 2 * (lo + hi).denominator),
               fmpq((hi - lo).numerator, 2 * (hi - lo).denominator))


Number = Union["PrecisionReal", int, Fraction]


@dataclass(frozen=True, eq=False)
class PrecisionReal:
    """A real number known exactly or up to a certified error radius.

    ``exact`` is set for rationals (``ball`` is then None and built on
    demand by :meth:`arb`); otherwise ``ball`` encloses the value.
    ``source`` records where the number came from; when it is a parseable
    literal, :meth:`refine` rebuilds the number at higher precision.
    """

    ball: arb | None
    exact: Fraction | None = None
    source: str = "derived"
    digits: int = DEFAULT_DIGITS

    # -- construction -------------------------------------------------
    @classmethod
    def from_fraction(cls, q: Fraction | int, source: str | None = None,
                      digits: int | None = None) -> "PrecisionReal":
        q = Fraction(q)
        return cls(None, q, source or f"rat:{q.numerator}/{q.denominator}",
                   digits or default_digits())

    @classmethod
    def from_arb(cls, ball: arb, source: str = "derived",
                 digits: int | None = None) -> "PrecisionReal":
        return cls(ball, None, source, digits or default_digits())

    @classmethod
    def coerce(cls, x: Number, digits: int | None = None) -> "PrecisionReal":
        if isinstance(x, PrecisionReal):
            return x
        if isinstance(x, (int, Fraction)):
            return cls.from_fraction(x, digits=digits)
        raise TypeError(f"cannot convert {type(x).__name__} to PrecisionReal")

    # -- views ----------------------------------------------------------
    @property
    def bits(self) -> int:
        return digits_to_bits(self.digits)

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    @property
    def value(self) -> Fraction:
        return self.exact if self.exact is not None else arb_to_fraction(self.ball)

    @property
    def radius(self) -> Fraction:
        return Fraction(0) if self.exact is not None else _rad_fraction(self.ball)

    def lower(self) -> Fraction:
        return self.value - self.radius

    def upper(self) -> Fraction:
        return self.value + self.radius

    def arb(self, bits: int | None = None) -> arb:
        """Ball at ``bits`` precision (rationals are re-rounded there)."""
        if self.exact is None:
            return self.ball
        with ctx.workprec(bits or self.bits):
            return fraction_to_arb(self.exact)

    def contains(self, q: Fraction | int) -> bool:
        q = Fraction(q)
        if self.exact is not None:
            return self.exact == q
        return self.lower() <= q <= self.upper()

    def __float__(self) -> float:
        return float(self.value)

    def __repr__(self) -> str:
        if self.exact is not None:
            return f"PrecisionReal({self.exact})"
        return f"PrecisionReal({float(self.value)!r} +/- {float(self.radius):.3g})"

    # -- arithmetic -----------------------------------------------------
    def _lift(self, other: Number) -> "PrecisionReal":
        return PrecisionReal.coerce(other, self.digits)

    def _binary(self, other: Number, exact_op: Callable, ball_op: Callable) -> "PrecisionReal":
        other = self._lift(other)
        digits = max(self.digits, other.digits)
        if self.exact is not None and other.exact is not None:
            return PrecisionReal.from_fraction(exact_op(self.exact, other.exact),
                                               source="derived", digits=digits)
        with ctx.workprec(digits_to_bits(digits)):
            ball = ball_op(self.arb(), other.arb())
        return PrecisionReal(ball, None, "derived", digits)

    def __add__(self, other: Number) -> "PrecisionReal":
        return self._binary(other, lambda a, b: a + b, lambda a, b: a + b)

    def __radd__(self, other: Number) -> "PrecisionReal":
        return self._lift(other) + self

    def __sub__(self, other: Number) -> "PrecisionReal":
        return self._binary(other, lambda a, b: a - b, lambda a, b: a - b)

    def __rsub__(self, other: Number) -> "PrecisionReal":
        return self._lift(other) - self

    def __mul__(self, other: Number) -> "PrecisionReal":
        return self._binary(other, lambda a, b: a * b, lambda a, b: a * b)

    def __rmul__(self, other: Number) -> "PrecisionReal":
        return self._lift(other) * self

    def __truediv__(self, other: Number) -> "PrecisionReal":
        other = self._lift(other)
        if other.sign() == 0:
            raise ZeroDivisionError("division by an exact zero")
        if other.exact is None and other.ball.contains(0):
            raise AmbiguityError("divisor enclosure contains zero")
        return self._binary(other, lambda a, b: a / b, lambda a, b: a / b)

    def __rtruediv__(self, other: Number) -> "PrecisionReal":
        return self._lift(other) / self

    def __neg__(self) -> "PrecisionReal":
        if self.exact is not None:
            return PrecisionReal.from_fraction(-self.exact, "derived", self.digits)
        with ctx.workprec(self.bits):
            return PrecisionReal(-self.ball, None, "derived", self.digits)

    def __abs__(self) -> "PrecisionReal":
        if self.exact is not None:
            return PrecisionReal.from_fraction(abs(self.exact), "derived", self.digits)
        with ctx.workprec(self.bits):
            return PrecisionReal(abs(self.ball), None, "derived", self.digits)

    def _unary(self, name: str) -> "PrecisionReal":
        with ctx.workprec(self.bits):
            ball = getattr(self.arb(), name)()
        if not ball.is_finite():
            raise PrecisionError(f"{name} produced a non-finite enclosure")
        return PrecisionReal(ball, None, "derived", self.digits)

    def sqrt(self) -> "PrecisionReal":
        if self.exact is not None:
            if self.exact < 0:
                raise ValueError("sqrt of a negative number")
            num, den = self.exact.numerator, self.exact.denominator
            rn, rd = math.isqrt(num), math.isqrt(den)
            if rn * rn == num and rd * rd == den:
                return PrecisionReal.from_fraction(Fraction(rn, rd), "derived", self.digits)
        elif self.ball < 0:
            raise ValueError("sqrt of a negative number")
        return self._unary("sqrt")

    def exp(self) -> "PrecisionReal":
        return self._unary("exp")

    def log(self) -> "PrecisionReal":
        if self.sign() <= 0:
            raise ValueError("log of a non-positive number")
        return self._unary("log")

    def cos(self) -> "PrecisionReal":
        return self._unary("cos")

    def sin(self) -> "PrecisionReal":
        return self._unary("sin")

    # -- certified decisions ---------------------------------------------
    def sign(self) -> int:
        """-1, 0 or 1; zero only for exact zero. Raises on ambiguity."""
        if self.exact is not None:
            return (self.exact > 0) - (self.exact < 0)
        if self.ball > 0:
            return 1
        if self.ball < 0:
            return -1
        raise AmbiguityError("sign undecidable at current precision")

    def _cmp(self, other: Number) -> int:
        return (self - self._lift(other)).sign()

    def __lt__(self, other: Number) -> bool:
        return self._cmp(other) < 0

    def __le__(self, other: Number) -> bool:
        return self._cmp(other) <= 0

    def __gt__(self, other: Number) -> bool:
        return self._cmp(other) > 0

    def __ge__(self, other: Number) -> bool:
        return self._cmp(other) >= 0

    def floor(self) -> int:
        if self.exact is not None:
            return math.floor(self.exact)
        lo, hi = self.lower(), self.upper()
        a, b = math.floor(lo), math.floor(hi)
        if a != b:
            raise AmbiguityError(f"enclosure [{float(lo)}, {float(hi)}] straddles an integer")
        return a

    def round_half_up(self) -> int:
        """Integer n with self - n in [-1/2, 1/2)."""
        return (self + Fraction(1, 2)).floor()

    def refine(self, digits: int) -> "PrecisionReal":
        """Rebuild from the literal source at ``digits`` precision."""
        if self.exact is not None:
            return PrecisionReal.from_fraction(self.exact, self.source, digits)
        if self.source == "derived":
            raise PrecisionError("derived quantity cannot be refined; re-derive from its inputs")
        return parse_real(self.source, digits)


@dataclass(frozen=True, eq=False)
class PrecisionComplex:
    re: PrecisionReal
    im: PrecisionReal

    @classmethod
    def coerce(cls, z: "PrecisionComplex | complex | int | Fraction",
               digits: int | None = None) -> "PrecisionComplex":
        if isinstance(z, PrecisionComplex):
            return z
        if isinstance(z, complex):
            return cls(PrecisionReal.from_fraction(Fraction(z.real), digits=digits),
                       PrecisionReal.from_fraction(Fraction(z.imag), digits=digits))
        return cls(PrecisionReal.coerce(z, digits), PrecisionReal.from_fraction(0, digits=digits))

    @property
    def digits(self) -> int:
        return max(self.re.digits, self.im.digits)

    @property
    def is_exact(self) -> bool:
        return self.re.is_exact and self.im.is_exact

    def acb(self, bits: int | None = None) -> acb:
        bits = bits or digits_to_bits(self.digits)
        return acb(self.re.arb(bits), self.im.arb(bits))

    def abs2(self) -> PrecisionReal:
        return self.re * self.re + self.im * self.im

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __repr__(self) -> str:
        return f"PrecisionComplex({complex(self)!r})"


@dataclass(frozen=True)
class CircleValue:
    """{x}, ||x||, <x> and [x] of one real."""

    frac: PrecisionReal
    dist: PrecisionReal
    signed: PrecisionReal
    integer_part: int


def frac(x: PrecisionReal) -> PrecisionReal:
    return x - x.floor()


def signed(x: PrecisionReal) -> PrecisionReal:
    """The representative of x mod 1 in [-1/2, 1/2)."""
    return x - x.round_half_up()


def dist(x: PrecisionReal) -> PrecisionReal:
    """Distance from x to the nearest integer."""
    return abs(signed(x))


def circle_reduce(x: PrecisionReal) -> CircleValue:
    n = x.floor()
    s = signed(x)
    return CircleValue(x - n, abs(s), s, n)


def arb_dist(x: arb) -> arb:
    """||x|| on a raw ball; raises if the nearest integer is not unique."""
    n = (x + 0.5).floor().unique_fmpz()
    if n is None:
        raise AmbiguityError("nearest integer undecidable at current precision")
    return abs(x - n)


def arb_frac(x: arb) -> arb:
    n = x.floor().unique_fmpz()
    if n is None:
        raise AmbiguityError("integer part undecidable at current precision")
    return x - n


# ---------------------------------------------------------------------------
# input grammar

_RAT = re.compile(r"^([+-]?\d+)(?:/(\d+))?$")
_DEC = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_CF = re.compile(r"^\[\s*([+-]?\d+)\s*(?:;\s*([\d\s,]*?))?\s*(,\s*\.\.\.)?\s*\]$")
_CFGEOM = re.compile(r"^\[\s*([+-]?\d+)\s*;\s*(\d+)\s*,\s*(\d+)\s*\]$")


def _parse_plain(text: str) -> Fraction | None:
    m = _RAT.match(text)
    if m:
        den = int(m.group(2) or 1)
        if den == 0:
            raise ParseError(f"zero denominator in {text!r}")
        return Fraction(int(m.group(1)), den)
    if _DEC.match(text):
        try:
            return Fraction(Decimal(text))
        except InvalidOperation as exc:
            raise ParseError(f"bad decimal {text!r}") from exc
    return None


def _fractional_digits(text: str) -> int:
    mantissa, _, exponent = text.lower().partition("e")
    digits = len(mantissa.partition(".")[2])
    return max(0, digits - int(exponent or 0))


def quotient_stream(a0: int, head: Sequence[int], periodic: bool) -> Iterator[int]:
    yield a0
    if not periodic:
        yield from head
        return
    while True:
        yield from head


def geometric_stream(a0: int, first: int, ratio: int) -> Iterator[int]:
    yield a0
    a = first
    while True:
        yield a
        a *= ratio


def cf_enclosure(quotients: Iterator[int], bits: int) -> tuple[Fraction, Fraction] | Fraction:
    """Enclose the value of an infinite continued fraction.

    The true value lies between consecutive convergents, whose gap is
    1/(q_k q_{k+1}); iteration stops once the gap is below 2^-bits.
    A finite stream returns the exact rational.
    """
    p_prev, q_prev, p, q = 1, 0, next(quotients), 1
    target = 1 << bits
    for a in quotients:
        if a < 1:
            raise ParseError("partial quotients after the first must be positive")
        p_prev, q_prev, p, q = p, q, a * p + p_prev, a * q + q_prev
        if q * q_prev > target:
            return Fraction(p_prev, q_prev), Fraction(p, q)
    return Fraction(p, q)


def parse_real(spec: str, digits: int | None = None,
               min_literal_digits: int | None = None) -> PrecisionReal:
    """Parse the real-number grammar.

    ``rat:p/q``, ``dec:<decimal>``, ``sqrt:d``, ``golden``,
    ``cf:[a0;a1,...,ak]`` (exact rational), ``cf:[a0;a1,...,ak,...]``
    (the listed tail repeated forever), ``cfgeom:[a0;c,r]`` (a_k = c r^(k-1)).
    Bare integers, fractions and decimals are accepted as exact rationals.
    """
    digits = digits or default_digits()
    text = spec.strip()
    bits = digits_to_bits(digits)
    kind, sep, body = text.partition(":")
    if not sep:
        kind, body = "", text
    kind = kind.lower()

    if kind == "golden" or text.lower() == "golden":
        with ctx.workprec(bits):
            ball = (1 + arb(5).sqrt()) / 2
        return PrecisionReal(ball, None, "golden", digits)

    if kind == "rat":
        m = _RAT.match(body.strip())
        if not m:
            raise ParseError(f"malformed rational {spec!r}")
        q = _parse_plain(body.strip())
        return PrecisionReal.from_fraction(q, text, digits)

    if kind == "dec":
        body = body.strip()
        if not _DEC.match(body):
            raise ParseError(f"malformed decimal {spec!r}")
        if min_literal_digits is not None and _fractional_digits(body) < min_literal_digits:
            raise PrecisionError(
                f"decimal literal has {_fractional_digits(body)} fractional digits, "
                f"{min_literal_digits} required")
        return PrecisionReal.from_fraction(Fraction(Decimal(body)), text, digits)

    if kind == "sqrt":
        try:
            d = int(body.strip())
        except ValueError as exc:
            raise ParseError(f"malformed sqrt spec {spec!r}") from exc
        if d <= 0:
            raise ParseError("sqrt: argument must be positive")
        r = math.isqrt(d)
        if r * r == d:
            raise ParseError(f"sqrt:{d} is a perfect square; use rat:{r}/1")
        with ctx.workprec(bits):
            ball = arb(d).sqrt()
        return PrecisionReal(ball, None, text, digits)

    if kind in ("cf", "cfgeom"):
        body = body.strip()
        if kind == "cfgeom":
            m = _CFGEOM.match(body)
            if not m:
                raise ParseError(f"malformed cfgeom spec {spec!r}")
            first, ratio = int(m.group(2)), int(m.group(3))
            if first < 1 or ratio < 1:
                raise ParseError("cfgeom needs positive first quotient and ratio")
            stream = geometric_stream(int(m.group(1)), first, ratio)
        else:
            m = _CF.match(body)
            if not m:
                raise ParseError(f"malformed continued fraction {spec!r}")
            tail = [int(t) for t in (m.group(2) or "").replace(" ", "").split(",") if t]
            periodic = m.group(3) is not None
            if periodic and not tail:
                raise ParseError("periodic continued fraction needs a non-empty tail")
            if any(a < 1 for a in tail):
                raise ParseError("partial quotients after the first must be positive")
            stream = quotient_stream(int(m.group(1)), tail, periodic)
        enc = cf_enclosure(stream, bits)
        if isinstance(enc, Fraction):
            return PrecisionReal.from_fraction(enc, text, digits)
        with ctx.workprec(bits):
            ball = hull(*enc)
        return PrecisionReal(ball, None, text, digits)

    if kind == "":
        q = _parse_plain(text)
        if q is not None:
            return PrecisionReal.from_fraction(q, text, digits)
    raise ParseError(f"unrecognised real spec {spec!r}")


_COMPLEX = re.compile(r"^([+-]?[\d./eE]+)?\s*(?:([+-])\s*([\d./eE]*)\s*[ij])?$")


def parse_complex(spec: str, digits: int | None = None) -> PrecisionComplex:
    """Parse ``a+bi`` with plain numerals, ``re,im`` in the real grammar, or ``polar:r,turns``.

    ``polar:r,turns`` denotes r * exp(2 pi i turns).
    """
    text = spec.strip().replace(" ", "")
    if text.lower().startswith("polar:"):
        parts = text[6:].split(",")
        if len(parts) != 2:
            raise ParseError(f"malformed polar spec {spec!r}")
        r, turns = (parse_real(p, digits) for p in parts)
        digits = max(r.digits, turns.digits)
        with ctx.workprec(digits_to_bits(digits)):
            s, c = (turns.arb() * 2).sin_cos_pi()
            rb = r.arb()
            return PrecisionComplex(PrecisionReal(rb * c, None, "derived", digits),
                                    PrecisionReal(rb * s, None, "derived", digits))
    comma = _top_level_comma(text)
    if comma is not None:
        return PrecisionComplex(parse_real(text[:comma], digits), parse_real(text[comma + 1:], digits))
    m = _COMPLEX.match(text)
    if not m or not text:
        return _parse_complex_grammar(text, spec, digits)
    re_part = _parse_plain(m.group(1)) if m.group(1) else Fraction(0)
    if m.group(2):
        mag = _parse_plain(m.group(3)) if m.group(3) else Fraction(1)
        if mag is None:
            raise ParseError(f"malformed imaginary part in {spec!r}")
        im_part = mag if m.group(2) == "+" else -mag
    else:
        im_part = Fraction(0)
    if re_part is None:
        raise ParseError(f"malformed real part in {spec!r}")
    return PrecisionComplex(PrecisionReal.from_fraction(re_part, digits=digits),
                            PrecisionReal.from_fraction(im_part, digits=digits))


def _top_level_comma(text: str) -> int | None:
    depth = 0
    for i, ch in enumerate(text):
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        elif ch == "," and depth == 0:
            return i
    return None


def _split_complex(text: str) -> tuple[str, str, str] | None:
    """Split ``<re><sign><im>i`` at the last top-level sign."""
    depth = 0
    for i in range(len(text) - 2, 0, -1):
        ch = text[i]
        if ch == "]":
            depth += 1
        elif ch == "[":
            depth -= 1
        elif ch in "+-" and depth == 0 and text[i - 1] not in "eE:;,[":
            return text[:i], ch, text[i + 1:-1]
    return None


def _parse_complex_grammar(text: str, spec: str, digits: int | None) -> PrecisionComplex:
    if not text.endswith(("i", "j")) or text.lower() == "golden":
        return PrecisionComplex(parse_real(text, digits), PrecisionReal.from_fraction(0, digits=digits))
    parts = _split_complex(text)
    if parts is None:
        im = parse_real(text[:-1] or "1", digits)
        return PrecisionComplex(PrecisionReal.from_fraction(0, digits=digits), im)
    re_s, sign, im_s = parts
    re_v, im_v = parse_real(re_s, digits), parse_real(im_s or "1", digits)
    return PrecisionComplex(re_v, im_v if sign == "+" else -im_v)


def with_precision_growth(fn: Callable[[int], object], digits: int | None = None,
                          max_digits: int = 8192):
    """Call ``fn(digits)``, doubling digits on precision failures."""
    digits = digits or default_digits()
    while True:
        try:
            return fn(digits)
        except PrecisionError:
            if digits * 2 > max_digits:
                raise
            digits *= 2
