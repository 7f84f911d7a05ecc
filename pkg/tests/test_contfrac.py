from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from tfa.contfrac import (CapExceededError, DepthExhaustedError, TerminalInputError,
                          alternation_signs, best_approx_brute_check, convergents,
                          determinant_ok, expand, quality_bounds)
from tfa.numeric import PrecisionReal, parse_real

from oracles import euclid_quotients, mp_dist, mp_value

FIB = [1, 1, 2, 3, 5, 8, 13, 21, 34, 55]


def test_golden_quotients_and_fibonacci_denominators():
    cf = expand(parse_real("golden"), 10)
    assert list(cf.quotients) == [1] * 10
    assert cf.q == FIB


def test_sqrt2_quotients():
    assert list(expand(parse_real("sqrt:2"), 6).quotients) == [1, 2, 2, 2, 2, 2]


def test_rational_terminates_in_canonical_form():
    cf = expand(parse_real("rat:415/93"), 50)
    assert list(cf.quotients) == [4, 2, 6, 7] == euclid_quotients(415, 93)
    assert cf.terminal and cf.convergents[-1] == (415, 93)


@given(st.integers(-10**9, 10**9), st.integers(1, 10**9))
def test_rational_expansion_matches_euclid(p, q):
    cf = expand(PrecisionReal.from_fraction(Fraction(p, q)), 200)
    g = Fraction(p, q)
    assert list(cf.quotients) == euclid_quotients(g.numerator, g.denominator)
    assert Fraction(*cf.convergents[-1]) == g
    assert len(cf) == 1 or cf.quotients[-1] >= 2


def test_convergent_recurrence_seeds():
    assert convergents([2, 3, 4]) == [(2, 1), (7, 3), (30, 13)]


@pytest.mark.parametrize("spec", ["golden", "sqrt:2", "sqrt:7", "cf:[0;1,50,1,50,...]",
                                  "cfgeom:[0;1,2]", "cf:[3;1,4,1,5,...]"])
def test_determinant_and_alternation(spec):
    x = parse_real(spec)
    cf = expand(x, 25, strict=False)
    assert determinant_ok(cf)
    signs = alternation_signs(x, cf)
    assert all(s != 0 for s in signs)
    assert all(a == -b for a, b in zip(signs, signs[1:]))
    assert all(b > a for a, b in zip(cf.q[1:], cf.q[2:]))


def test_depth_exhaustion_reports_valid_depth():
    x = parse_real("sqrt:2", digits=20)
    with pytest.raises(DepthExhaustedError) as info:
        expand(x, 200)
    err = info.value
    assert 10 < err.valid_depth < 200
    assert len(err.partial) == err.valid_depth + 1
    assert list(err.partial.quotients) == [1] + [2] * err.valid_depth


def test_certified_quotients_agree_with_high_precision_oracle():
    x = parse_real("golden", digits=60)
    cf = expand(x, 500, strict=False)
    with mpmath.workdps(400):
        y = mp_value("golden")
        for a in cf.quotients:
            assert int(mpmath.floor(y)) == a
            y = 1 / (y - a)


def _oracle_argmin(spec: str, q_next: int) -> int:
    with mpmath.workdps(80):
        x = mp_value(spec, 80)
        return min(range(1, q_next), key=lambda k: mp_dist(k * x))


@pytest.mark.parametrize("spec, n, expected", [("golden", 4, 5), ("sqrt:2", 3, None)])
def test_best_approximation_examples(spec, n, expected):
    r = best_approx_brute_check(parse_real(spec), n)
    assert r.passed and r.argmin == r.q_n == _oracle_argmin(spec, r.q_next)
    if expected is not None:
        assert r.argmin == expected and r.q_next == 8


def test_best_approximation_vacuous_range():
    r = best_approx_brute_check(parse_real("golden"), 0)
    assert r.q_next == 1 and r.argmin is None and r.passed


def test_best_approximation_cap():
    with pytest.raises(CapExceededError):
        best_approx_brute_check(parse_real("golden"), 20, cap=1000)


def test_quality_golden_n5():
    r = quality_bounds(parse_real("golden"), 5)
    assert (r.q_n, r.q_next) == (8, 13)
    assert (r.lower_bound, r.upper_bound) == (Fraction(1, 26), Fraction(1, 13))
    assert r.inside
    with mpmath.workdps(60):
        d = float(mp_dist(8 * mp_value("golden", 60)))
    assert abs(float(r.dist_qn.value) - d) < 1e-15


def test_quality_sqrt2_n4():
    assert quality_bounds(parse_real("sqrt:2"), 4).inside


def test_terminal_input_error():
    with pytest.raises(TerminalInputError):
        quality_bounds(parse_real("rat:1/3"), 1)


@given(st.integers(2, 400).filter(lambda d: int(d ** 0.5) ** 2 != d), st.integers(1, 12))
def test_sandwich_on_quadratic_surds(d, n):
    assert quality_bounds(parse_real(f"sqrt:{d}"), n).inside


def test_sandwich_lower_bound_fails_at_index_zero_when_first_quotient_is_one():
    # ||q_0 x|| = ||x|| < 1/2 = 1/(2 q_1) whenever a_1 = 1; the bound starts at n = 1
    r = quality_bounds(parse_real("golden"), 0)
    assert r.q_n == r.q_next == 1 and not r.inside
