"""Acceptance suite: one test per criterion, each printing a single pass/fail line.

Every criterion is checked at its stated tolerance and wall-clock limit. Random
instances come from fixed seeds so the suite is reproducible.
"""

import math
import time
import warnings
from fractions import Fraction

import mpmath
import numpy as np

from oracles import mp_dist, mp_to_fraction
from tfa.bounds import (build_exceptional_set, gap_check, lemma_bound, reciprocal_sum_lemma,
                        sum_bounds_outside)
from tfa.contfrac import (alternation_signs, best_approx_brute_check, determinant_ok, expand,
                          quality_bounds)
from tfa.engine import (construct_nk, full_measure_experiment, keyth_harness, orbit,
                        product_log, round_trip_residual)
from tfa.numeric import PrecisionComplex, PrecisionReal, parse_real
from tfa.trigpoly import TrigPoly, find_torus_zeros, lower_bound_constant

SPIKY = "cf:[0;1,50,1,50,...]"
ONE = PrecisionReal.from_fraction(1)
HALF = Fraction(1, 2)
NONSQUARE = [d for d in range(2, 60) if math.isqrt(d) ** 2 != d]


def _surd(rng):
    """(a + sqrt d) / b together with an independent mpmath value."""
    d = int(rng.choice(NONSQUARE))
    a, b = int(rng.integers(-5, 6)), int(rng.integers(1, 6))
    x = (parse_real(f"sqrt:{d}") + a) / b
    return x, (lambda: (a + mpmath.sqrt(d)) / b), f"({a}+sqrt{d})/{b}"


def _corpus():
    rng = np.random.default_rng(20240601)
    named = ["golden", "sqrt:2", "sqrt:3", "sqrt:5"]
    out = [(s, parse_real(s)) for s in named]
    out += [(label, x) for x, _, label in (_surd(rng) for _ in range(10))]
    synthetic = [SPIKY, "cf:[0;5,1,2,...]", "cf:[1;1,2,3,...]", "cf:[0;2,9,1,1,4,...]",
                 "cfgeom:[0;1,2]"]
    out += [(s, parse_real(s)) for s in synthetic]
    return out


# -- 1 -------------------------------------------------------------------------------------

def test_criterion_01_continued_fractions(record_criterion):
    start = time.perf_counter()
    failures, n0_hold, brute, sandwich = [], 0, 0, 0
    for label, x in _corpus():
        cf = expand(x, 42, strict=False)
        if not determinant_ok(cf):
            failures.append(f"{label}: determinant")
        signs = alternation_signs(x, cf)
        if signs != [(-1) ** (k + 1) for k in range(len(signs))]:
            failures.append(f"{label}: alternation")
        q = cf.q
        for n in range(len(q) - 1):
            if q[n + 1] > 10**4:
                break
            brute += 1
            if not best_approx_brute_check(x, n).passed:
                failures.append(f"{label}: best approximation n={n}")
        n0_hold += quality_bounds(x, 0).inside
        for n in range(1, min(40, cf.valid_depth - 1) + 1):
            sandwich += 1
            if not quality_bounds(x, n).inside:
                failures.append(f"{label}: sandwich n={n}")
    elapsed = time.perf_counter() - start
    ok = record_criterion(
        1, not failures,
        f"20 inputs, {brute} brute-force checks, {sandwich} sandwich checks (n>=1), "
        f"n=0 sandwich held for {n0_hold}/20", elapsed, 60)
    assert ok, failures[:10]


# -- 2 -------------------------------------------------------------------------------------

def _admissible_index(rng, cf, cap=1000):
    usable = [n for n in range(1, len(cf.q)) if 2 <= cf.q[n] <= cap]
    return int(rng.choice(usable))


def test_criterion_02_gap_lemma(record_criterion):
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    pool = [_surd(rng) for _ in range(30)]
    expansions = [expand(x, 20) for x, _, _ in pool]
    failures = 0
    for _ in range(1000):
        i = int(rng.integers(len(pool)))
        (x, mp_x, label), cf = pool[i], expansions[i]
        n = _admissible_index(rng, cf)
        q = cf.q[n]
        lo = int(rng.integers(-10**4, 10**4))
        size = int(rng.integers(2, min(q, 40) + 1))
        ks = sorted(rng.choice(np.arange(lo, lo + q), size=size, replace=False).tolist())
        r = gap_check(ks, x, n)
        with mpmath.workdps(60):
            xv = mp_x()
            oracle = min(mp_dist((b - a) * xv) for j, a in enumerate(ks) for b in ks[j + 1:])
            oracle_ok = oracle >= mpmath.mpf(1) / (2 * q)
        failures += not (r.passed and oracle_ok)
    elapsed = time.perf_counter() - start
    ok = record_criterion(2, failures == 0, f"1000 instances, {failures} failures", elapsed, 60)
    assert ok


# -- 3 -------------------------------------------------------------------------------------

def test_criterion_03_reciprocal_sum_lemma(record_criterion):
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    pool = [_surd(rng) for _ in range(30)]
    expansions = [expand(x, 20) for x, _, _ in pool]
    failures, worst = 0, 0.0
    for _ in range(1000):
        i = int(rng.integers(len(pool)))
        (x, mp_x, _), cf = pool[i], expansions[i]
        n = _admissible_index(rng, cf)
        q = cf.q[n]
        lo = int(rng.integers(-10**4, 10**4))
        x0 = Fraction(int(rng.integers(0, 10**9)), 10**9)
        with mpmath.workdps(60):
            xv = mp_x()
            d = {k: mp_dist(k * xv - mpmath.mpf(x0.numerator) / x0.denominator)
                 for k in range(lo, lo + q)}
            # keep indices clearly separated from x so the hypothesis is decidable
            ks = [k for k in range(lo, lo + q) if d[k] >= mpmath.mpf(1) / (4 * q) + 1e-30]
            oracle = mpmath.fsum(1 / d[k] for k in ks)
        r = reciprocal_sum_lemma(ks, x, PrecisionReal.from_fraction(x0), n)
        bound = lemma_bound(q)
        agree = abs(float(r.value.value) - float(oracle)) <= 1e-9 * max(1.0, float(oracle))
        failures += not (r.passed and agree and mp_to_fraction(oracle) <= bound)
        worst = max(worst, float(oracle) / float(bound))
    elapsed = time.perf_counter() - start
    ok = record_criterion(3, failures == 0,
                          f"1000 instances, {failures} failures, max sum/bound = {worst:.3f}",
                          elapsed, 120)
    assert ok


# -- 4 -------------------------------------------------------------------------------------

def _expected_count(cs) -> int:
    r0, r1, r2 = (c.real ** 2 + c.imag ** 2 for c in cs)
    disc = 4 * r0 * r1 - (r0 + r1 - r2) ** 2
    return 2 if disc > 0 else 1 if disc == 0 else 0


def _close(r, q) -> bool:
    return abs(r.value - Fraction(q)) < Fraction(1, 10**200)


def test_criterion_04_torus_zeros(record_criterion):
    rng = np.random.default_rng(4)
    start = time.perf_counter()
    failures, counts, worst = 0, [0, 0, 0], 0.0
    for _ in range(1000):
        # Gaussian-integer coefficients make the classification exact integer arithmetic
        cs = []
        while len(cs) < 3:
            c = complex(int(rng.integers(-6, 7)), int(rng.integers(-6, 7)))
            if c:
                cs.append(c)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            d = find_torus_zeros(*(PrecisionComplex.coerce(c) for c in cs))
        expected = _expected_count(cs)
        counts[expected] += 1
        worst = max([worst, *d.residuals])
        failures += d.count != expected or any(r >= 1e-30 for r in d.residuals)
    d1, d2, d3 = find_torus_zeros(1, 1, 1), find_torus_zeros(2, 1, 1), find_torus_zeros(3, 1, 1)
    closed = (d1.count == 2
              and _close(d1.zeros[0][0], Fraction(1, 3)) and _close(d1.zeros[0][1], Fraction(2, 3))
              and _close(d1.zeros[1][0], Fraction(2, 3)) and _close(d1.zeros[1][1], Fraction(1, 3))
              and _close(d1.t, Fraction(-1, 2))
              and d2.count == 1 and _close(d2.zeros[0][0], HALF) and _close(d2.zeros[0][1], HALF)
              and _close(d2.t, 1) and d3.count == 0)
    elapsed = time.perf_counter() - start
    ok = record_criterion(
        4, failures == 0 and closed,
        f"1000 triples (0/1/2 zeros: {counts[0]}/{counts[1]}/{counts[2]}), {failures} failures, "
        f"max residual {worst:.1e}, closed forms {'ok' if closed else 'WRONG'}", elapsed, 30)
    assert ok


# -- 5 -------------------------------------------------------------------------------------

def test_criterion_05_lower_bound_constant(record_criterion):
    rng = np.random.default_rng(5)
    start = time.perf_counter()
    smallest, done = math.inf, 0
    while done < 100:
        mods = rng.uniform(0.2, 3.0, size=3)
        a, b, c = sorted(mods)
        if c >= a + b - 1e-3:
            continue  # want a strict triangle so the polynomial has zeros
        phases = rng.uniform(0, 1, size=3)
        cs = [PrecisionComplex.coerce(complex(m * np.exp(2j * np.pi * p)))
              for m, p in zip(mods, phases)]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            r = lower_bound_constant(*cs, grid_n=256)
        assert not r.zero_free
        smallest = min(smallest, r.constant)
        done += 1
    elapsed = time.perf_counter() - start
    ok = record_criterion(5, smallest > 1e-6,
                          f"100 triples with zeros, smallest constant {smallest:.3e}", elapsed, 600)
    assert ok


# -- 6 -------------------------------------------------------------------------------------

def test_criterion_06_exceptional_sets(record_criterion):
    start = time.perf_counter()
    golden = parse_real("golden")
    pts = [golden * k for k in range(1, 51)]
    delta = Fraction(1, 10)
    E = build_exceptional_set(pts, delta)
    r1, r2 = sum_bounds_outside(pts, E, 1000, seed=0)
    passed = (E.measure <= delta and r1.passed and r2.passed
              and r1.value <= r1.bound and r2.value <= r2.bound)
    elapsed = time.perf_counter() - start
    ok = record_criterion(
        6, passed,
        f"|E| = {float(E.measure):.4f} <= 0.1, first sum max {r1.value:.1f} <= {r1.bound:.1f}, "
        f"second sum max {r2.value:.1f} <= {r2.bound:.1f}", elapsed, 60)
    assert ok


# -- 7 -------------------------------------------------------------------------------------

def test_criterion_07_nk_construction(record_criterion):
    start = time.perf_counter()
    alpha = parse_real(SPIKY)
    # c = 2 keeps the admitted indices in the regime where the ratio is flat
    r = construct_nk(alpha, ONE, HALF, 40, 2)
    checks = [c.check(HALF) for c in r.certificates]
    exact_ok = all(ch["nk_is_m_qn"] and ch["frac_le_s"] and ch["m_le_cap"] for ch in checks)
    ratios = [float(c.ratio.value) for c in r.certificates]
    spread = max(ratios) / min(ratios) if ratios and min(ratios) > 0 else math.inf
    golden_empty = not construct_nk(parse_real("golden"), ONE, HALF, 40, 1).certificates
    passed = bool(r.certificates) and exact_ok and spread <= 10 and golden_empty
    elapsed = time.perf_counter() - start
    ok = record_criterion(
        7, passed,
        f"{len(r.certificates)} certificates, ratio max/min = {spread:.2f}, "
        f"golden list empty: {golden_empty}", elapsed, 60)
    assert ok


# -- 8 -------------------------------------------------------------------------------------

def test_criterion_08_product_comparison(record_criterion):
    start = time.perf_counter()
    alpha = parse_real(SPIKY)
    P = TrigPoly.build(1, 1, 1, alpha, 1)
    certs = [c for c in construct_nk(alpha, ONE, HALF, 40, 1).certificates if c.nk <= 10**5]
    results = []
    for cert in certs:
        h = keyth_harness(P, cert, Fraction(1, 10), 50, seed=0)
        cmp = h.comparison
        margin = max(s.log_ratio - s.log_bound for s in cmp.samples)
        results.append((cert.nk, cmp.passed and cmp.identity_ok and len(cmp.samples) == 50,
                        margin))
    elapsed = time.perf_counter() - start
    detail = ", ".join(f"[P_k]={K}: {'ok' if good else 'FAIL'} (max log ratio - log bound "
                       f"{m:.3f})" for K, good, m in results)
    ok = record_criterion(8, bool(results) and all(g for _, g, _ in results),
                          f"{len(results)} certificates, 50 samples each; {detail}", elapsed, 600)
    assert ok


# -- 9 -------------------------------------------------------------------------------------

def test_criterion_09_orbit_consistency(record_criterion):
    rng = np.random.default_rng(9)
    start = time.perf_counter()
    specs = ["golden", "sqrt:2", "sqrt:3", "sqrt:5", "sqrt:7", SPIKY]
    failures, clamps = 0, 0
    for _ in range(100):
        cs = [complex(*rng.uniform(-2, 2, size=2)) for _ in range(3)]
        a, b = rng.choice(len(specs), size=2, replace=False)
        P = TrigPoly.build(*cs, parse_real(specs[a]), parse_real(specs[b]))
        x = Fraction(int(rng.integers(0, 10**6)), 10**6)
        M = int(rng.integers(1, 1001))
        split = int(rng.integers(0, M + 1))
        whole = product_log(P, x, M)
        parts = product_log(P, x, split).log_magnitude + \
            product_log(P, x + split, M - split).log_magnitude
        tr = orbit(P, x, M)
        tele = (whole.log_magnitude - parts).arb().contains(0)
        forward = (tr.at(M) - whole.log_magnitude).arb().contains(0)
        back = round_trip_residual(P, x, M).arb().contains(0)
        clamps += bool(whole.clamp_events)
        failures += not (tele and forward and back)
    elapsed = time.perf_counter() - start
    ok = record_criterion(9, failures == 0,
                          f"100 instances (M <= 1000), {failures} failures, "
                          f"{clamps} with clamp events", elapsed, 60)
    assert ok


# -- 10 ------------------------------------------------------------------------------------

def test_criterion_10_full_measure_sampling(record_criterion):
    start = time.perf_counter()
    r = full_measure_experiment(samples=200, depth=60, digits=256, threshold=0.1, seed=0)
    elapsed = time.perf_counter() - start
    ok = record_criterion(10, r["fraction"] >= 0.9,
                          f"{r['fraction']:.1%} of 200 samples exceed 0.1 by depth 60 "
                          f"(median proxy {np.median(r['proxies']):.2f})", elapsed, 300)
    assert ok
