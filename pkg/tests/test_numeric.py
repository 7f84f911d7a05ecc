from fractions import Fraction

import mpmath
import pytest
from flint import arb, ctx
from hypothesis import given, strategies as st

from tfa.numeric import (AmbiguityError, ParseError, PrecisionError, PrecisionReal,
                         circle_reduce, dist, frac, parse_complex, parse_real, signed,
                         with_precision_growth)

from oracles import mp_to_fraction

rationals = st.fractions(min_value=-10**6, max_value=10**6, max_denominator=10**6)


def test_rat_literal_is_exact():
    x = parse_real("rat:3/7")
    assert x.is_exact and x.value == Fraction(3, 7) and x.radius == 0


def test_sqrt_literal_width_at_100_digits():
    x = parse_real("sqrt:2", digits=100)
    assert 2 * x.radius <= Fraction(1, 10**100)
    with mpmath.workdps(300):
        assert x.contains(mp_to_fraction(mpmath.sqrt(2))) or \
            x.lower() <= mp_to_fraction(mpmath.sqrt(2)) <= x.upper()


def test_periodic_cf_is_the_golden_conjugate():
    x = parse_real("cf:[0;1,1,1,...]")
    # fixed point of x = 1/(1+x): x^2 + x - 1 = 0
    assert (x * x + x - 1).arb().contains(0)
    with mpmath.workdps(400):
        ref = mp_to_fraction((mpmath.sqrt(5) - 1) / 2)
    assert x.lower() <= ref <= x.upper()
    assert x.radius < Fraction(1, 10**200)


def test_finite_cf_is_exact():
    x = parse_real("cf:[4;2,6,7]")
    assert x.is_exact and x.value == Fraction(415, 93)


def test_geometric_cf_literal():
    x = parse_real("cfgeom:[0;1,2]")
    assert not x.is_exact and x.radius < Fraction(1, 10**100)


@pytest.mark.parametrize("spec", ["", "rat:1/0", "sqrt:4", "sqrt:-3", "cf:[0;1,0]",
                                  "cf:[0;...]", "bogus:1", "dec:1.2.3"])
def test_malformed_literals(spec):
    with pytest.raises(ParseError):
        parse_real(spec)


def test_decimal_literal_digit_requirement():
    assert parse_real("dec:0.125").value == Fraction(1, 8)
    with pytest.raises(PrecisionError):
        parse_real("dec:0.12", min_literal_digits=10)


@pytest.mark.parametrize("x, fr, d, s, n", [
    (Fraction(2, 5), Fraction(2, 5), Fraction(2, 5), Fraction(2, 5), 0),
    (Fraction(3, 4), Fraction(3, 4), Fraction(1, 4), Fraction(-1, 4), 0),
    (Fraction(-5, 4), Fraction(3, 4), Fraction(1, 4), Fraction(-1, 4), -2),
])
def test_circle_reduce_examples(x, fr, d, s, n):
    c = circle_reduce(PrecisionReal.from_fraction(x))
    assert (c.frac.value, c.dist.value, c.signed.value, c.integer_part) == (fr, d, s, n)


def test_signed_range_is_half_open():
    assert signed(PrecisionReal.from_fraction(Fraction(1, 2))).value == Fraction(-1, 2)


def test_ambiguous_reduction_raises():
    with ctx.workprec(64):
        x = PrecisionReal.from_arb(arb(0.5, 1e-9))
    with pytest.raises(AmbiguityError):
        circle_reduce(x)
    with ctx.workprec(64):
        y = PrecisionReal.from_arb(arb(3, 1e-9))
    with pytest.raises(AmbiguityError):
        frac(y)


@given(rationals)
def test_circle_identities(q):
    x = PrecisionReal.from_fraction(q)
    c = circle_reduce(x)
    assert c.dist.value == abs(c.signed.value)
    assert dist(x + 1).value == c.dist.value
    assert dist(-x).value == c.dist.value
    assert c.dist.value <= Fraction(1, 2)
    assert c.frac.value + c.integer_part == q
    assert c.frac.value - c.signed.value in (0, 1)
    assert 0 <= c.frac.value < 1


def test_interval_soundness_of_closed_forms():
    r2 = parse_real("sqrt:2")
    assert (r2 * r2).contains(2)
    r3 = parse_real("sqrt:3")
    assert ((r2 + r3) * (r3 - r2)).contains(1)
    g = parse_real("golden")
    assert (g * g - g).contains(1)


@given(st.fractions(min_value=Fraction(1, 100), max_value=100, max_denominator=1000))
def test_exact_sqrt_of_square(q):
    assert PrecisionReal.from_fraction(q * q).sqrt().value == q


def test_refine_rebuilds_from_source():
    x = parse_real("sqrt:5", digits=30)
    y = x.refine(200)
    assert y.radius < x.radius and y.lower() >= x.lower() and y.upper() <= x.upper()


def test_precision_growth_doubles_digits():
    seen = []

    def fn(d):
        seen.append(d)
        if d < 100:
            raise PrecisionError("more")
        return d

    assert with_precision_growth(fn, 30) == 120
    assert seen == [30, 60, 120]


@pytest.mark.parametrize("spec, z", [
    ("1+0i", 1), ("2-3i", 2 - 3j), ("-2i", -2j), ("i", 1j), ("1.5e-3+2i", 0.0015 + 2j),
    ("sqrt:2+rat:1/3i", 2 ** 0.5 + 1j / 3), ("rat:-1/2-sqrt:3i", -0.5 - 3 ** 0.5 * 1j),
    ("cf:[0;1,2,...]+1i", 3 ** 0.5 - 1 + 1j), ("sqrt:2,rat:1/2", 2 ** 0.5 + 0.5j),
])
def test_complex_literals(spec, z):
    assert abs(complex(parse_complex(spec)) - z) < 1e-12


def test_polar_literal():
    z = parse_complex("polar:2,rat:1/4")
    assert z.re.arb().contains(0) and z.im.arb().contains(2)


def test_negation_and_abs_keep_working_precision():
    x = parse_real("sqrt:2")
    assert (-x).radius <= x.radius and abs(-x).radius <= x.radius
    assert float((-x).radius) < 1e-200
