"""Reciprocal-distance sum estimates and exceptional sets on the circle.

Three estimates live here:

* the gap/reciprocal-sum bound for an orbit window ``k alpha - x`` shorter
  than a convergent denominator q_n,
* the exceptional-set construction: outside a set of measure <= delta the sums
  sum 1/||x - x_n|| and sum 1/||x - x_n||^2 obey N log N and N^2 bounds,
* the bound on sum_{n < Q} 1/|P(x + n)| for the three-term polynomial P.

Exceptional sets are built in two stages with explicit constants. With
M = 4N/delta, stage one removes balls of radius delta/(4N) around every point,
so each term is at most M outside and sum 1/||x - x_n||^2 <= N M^2, below the
design level T2 = 32 N^2 / delta^2. Stage two removes the superlevel set

    F(x) = sum min(M, 1/||x - x_n||) > T1 = 16 N ln(4N/delta) / delta,

located by adaptive bisection with certified per-cell bounds. Markov's
inequality bounds that set by roughly delta/8; the final measure is checked
exactly.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from flint import arb, ctx

from .contfrac import expand
from .numeric import (AmbiguityError, PrecisionReal, arb_dist, arb_to_fraction,
                      digits_to_bits)
from .trigpoly import TrigPoly, exact_min_modulus, find_torus_zeros, local_distance, \
    lower_bound_constant

# relative slack covering accumulated float64 rounding in sums of positive terms
_SUM_SLACK = 1e-9
_FLOAT_EPS = 2.0 ** -50


class HypothesisError(ValueError):
    pass


class WindowError(HypothesisError):
    """k_m - k_1 >= q_n."""


class SeparationError(HypothesisError):
    """Some ||k_j alpha - x|| < 1/(4 q_n)."""


class BudgetInfeasibleError(ArithmeticError):
    pass


class EmptyComplementError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


class UnresolvedCaseError(AmbiguityError):
    pass


class InternalConsistencyError(AssertionError):
    pass


@dataclass
class SumReport:
    """Outcome of one estimate.

    ``value`` is the checked quantity (a sum, or a minimum for gap checks),
    ``bound`` the explicit comparison bound, ``reference`` the growth term the
    constant is fitted against (N log N, N^2, q ln q, ...).
    """

    name: str
    value: float | PrecisionReal | None
    bound: float | Fraction | None
    passed: bool
    reference: float | None = None
    constant_fit: float | None = None
    design_constant: float | None = None
    witnesses: list = field(default_factory=list)
    details: dict = field(default_factory=dict)


def nlogn(n: int) -> float:
    """n log n, with log replaced by 1 for n < 3 so the reference stays positive."""
    return n * max(math.log(n), 1.0) if n > 0 else 0.0


@lru_cache(maxsize=None)
def harmonic(n: int) -> Fraction:
    return sum((Fraction(1, j) for j in range(1, n + 1)), Fraction(0))


def lemma_bound(q: int) -> Fraction:
    """2 (4q + sum_{1 <= j <= q} 2q/j), both sign classes of the gap argument."""
    return 2 * (4 * q + 2 * q * harmonic(q))


def _convergent_denominator(alpha: PrecisionReal, n: int) -> int:
    cf = expand(alpha, n + 1, strict=False)
    if len(cf) <= n:
        raise PreconditionError(f"convergent index {n} not available for this input")
    return cf.q[n]


def _check_window(ks: Sequence[int], q: int) -> None:
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("ks must be strictly increasing")
    if ks and ks[-1] - ks[0] >= q:
        raise WindowError(f"window k_m - k_1 = {ks[-1] - ks[0]} is not below q_n = {q}")


# -- the orbit-window lemma -------------------------------------------------

def gap_check(ks: Sequence[int], alpha: PrecisionReal, n: int) -> SumReport:
    """min_{i != j} ||(k_i - k_j) alpha|| against 1/(2 q_n)."""
    ks = list(ks)
    q = _convergent_denominator(alpha, n)
    _check_window(ks, q)
    threshold = Fraction(1, 2 * q)
    if len(ks) < 2:
        return SumReport("gap", None, threshold, True, details={"q_n": q, "pairs": 0})
    arr = np.asarray(ks, dtype=np.int64)
    diffs = np.unique((arr[None, :] - arr[:, None])[np.triu_indices(len(arr), 1)])
    bits = alpha.bits
    with ctx.workprec(bits):
        a = alpha.arb(bits)
        best_d, best = None, None
        for d in diffs.tolist():
            v = arb_dist(a * d)
            if best is None or v.mid() < best.mid():
                best_d, best = d, v
        lo = best.lower()
        passed = bool(best >= arb(threshold.numerator) / threshold.denominator)
    value = PrecisionReal.from_arb(best, digits=alpha.digits)
    return SumReport("gap", value, threshold, passed,
                     witnesses=[{"difference": best_d, "dist": float(lo)}],
                     details={"q_n": q, "pairs": len(ks) * (len(ks) - 1) // 2,
                              "distinct_differences": int(len(diffs))})


def reciprocal_sum_lemma(ks: Sequence[int], alpha: PrecisionReal, x: PrecisionReal,
                         n: int, max_witnesses: int = 10) -> SumReport:
    """sum_j 1/||k_j alpha - x|| against the explicit bound 2 (4 q + 2 q H_q)."""
    ks = list(ks)
    q = _convergent_denominator(alpha, n)
    _check_window(ks, q)
    bound = lemma_bound(q)
    ref = q * math.log(q) if q > 1 else None
    if not ks:
        return SumReport("reciprocal_sum", PrecisionReal.from_fraction(0), bound, True, ref,
                         0.0 if ref else None, details={"q_n": q})
    digits = max(alpha.digits, x.digits)
    bits = digits_to_bits(digits)
    sep = Fraction(1, 4 * q)
    with ctx.workprec(bits):
        a, xb = alpha.arb(bits), x.arb(bits)
        sep_b = arb(sep.numerator) / sep.denominator
        total = arb(0)
        terms = []
        for k in ks:
            d = arb_dist(a * k - xb)
            if d < sep_b:
                raise SeparationError(f"||{k} alpha - x|| < 1/(4 q_n) = {sep}")
            if not d >= sep_b:
                raise AmbiguityError(f"separation of k = {k} undecidable at this precision")
            total += 1 / d
            terms.append((k, d))
        passed = bool(total <= arb(bound.numerator) / bound.denominator)
    terms.sort(key=lambda kd: kd[1].mid())
    value = PrecisionReal.from_arb(total, digits=digits)
    return SumReport("reciprocal_sum", value, bound, passed, ref,
                     float(total.mid()) / ref if ref else None,
                     witnesses=[{"k": k, "term": float((1 / d).mid())}
                                for k, d in terms[:max_witnesses]],
                     details={"q_n": q, "m": len(ks), "bound_float": float(bound)})


# -- circle interval unions ---------------------------------------------------

@dataclass(frozen=True)
class IntervalUnion:
    """Sorted, disjoint closed arcs of the circle [0, 1), stored unwrapped."""

    intervals: tuple[tuple[Fraction, Fraction], ...] = ()

    @classmethod
    def from_arcs(cls, arcs: Iterable[tuple[Fraction, Fraction]]) -> "IntervalUnion":
        pieces = []
        for a, b in arcs:
            a, b = Fraction(a), Fraction(b)
            if b <= a:
                continue
            if b - a >= 1:
                return cls(((Fraction(0), Fraction(1)),))
            shift = math.floor(a)
            a, b = a - shift, b - shift
            if b > 1:
                pieces.append((a, Fraction(1)))
                pieces.append((Fraction(0), b - 1))
            else:
                pieces.append((a, b))
        pieces.sort()
        merged: list[list[Fraction]] = []
        for a, b in pieces:
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        return cls(tuple((a, b) for a, b in merged))

    @property
    def measure(self) -> Fraction:
        return sum((b - a for a, b in self.intervals), Fraction(0))

    def __len__(self) -> int:
        return len(self.intervals)

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        return IntervalUnion.from_arcs(self.intervals + other.intervals)

    def contains(self, x) -> bool:
        x = Fraction(x)
        x -= math.floor(x)
        i = bisect.bisect_right(self.intervals, (x, Fraction(2))) - 1
        return i >= 0 and self.intervals[i][0] <= x <= self.intervals[i][1]

    def pullback(self, lam: PrecisionReal) -> "IntervalUnion":
        """Enclosure of {x in [0,1): lam x mod 1 in self} for the uncertain scale lam."""
        if not self.intervals:
            return self
        sign = lam.sign()
        if sign == 0:
            raise ValueError("cannot pull back through a zero scale")
        scale = 1 << 64
        lo = Fraction(math.floor(abs(lam).lower() * scale), scale)
        hi = Fraction(math.ceil(abs(lam).upper() * scale), scale)
        if lo <= 0:
            raise AmbiguityError("scale enclosure reaches zero")
        arcs = self.intervals if sign > 0 else tuple((1 - b, 1 - a) for a, b in self.intervals)
        out = []
        for j in range(0, math.ceil(hi) + 1):
            for a, b in arcs:
                xa, xb = (a + j) / hi, (b + j) / lo
                if xa >= 1 or xb <= 0:
                    continue
                out.append((max(xa, Fraction(0)), min(xb, Fraction(1))))
        return IntervalUnion.from_arcs(out)

    def sample_outside(self, count: int, rng: np.random.Generator,
                       max_tries: int = 1000) -> list[Fraction]:
        if self.measure >= 1:
            raise EmptyComplementError("exceptional set covers the whole circle")
        out = []
        tries = 0
        while len(out) < count:
            batch = rng.random(max(2 * (count - len(out)), 16))
            for u in batch:
                x = Fraction(float(u))
                if not self.contains(x):
                    out.append(x)
                    if len(out) == count:
                        break
            tries += 1
            if tries > max_tries:
                raise EmptyComplementError("could not sample outside the exceptional set")
        return out


# -- exceptional sets -----------------------------------------------------------

@dataclass(frozen=True)
class PointCloud:
    """Points on the circle as float centres with rigorous error radii."""

    centres: np.ndarray
    errors: np.ndarray

    @classmethod
    def build(cls, points) -> "PointCloud":
        centres, errors = [], []
        for p in points:
            if isinstance(p, PrecisionReal):
                v, r = p.value, p.radius
            else:
                v, r = Fraction(p), Fraction(0)
            v -= math.floor(v)
            c = float(v)
            if c >= 1.0:
                c = 0.0
            err = abs(Fraction(c) - v) if Fraction(c) != v and c != 0.0 else Fraction(0)
            if c == 0.0 and v != 0:
                err = min(v, 1 - v)
            centres.append(c)
            errors.append(float(r + err) * (1 + 1e-12) + (1e-300 if (r or err) else 0.0))
        return cls(np.asarray(centres, dtype=float), np.asarray(errors, dtype=float))

    def __len__(self) -> int:
        return len(self.centres)


@dataclass(frozen=True)
class ExceptionalSet:
    union: IntervalUnion
    stage1: IntervalUnion
    stage2: IntervalUnion
    n_points: int
    delta: Fraction
    cap: float
    level_first: float
    level_second: float
    cells_examined: int

    @property
    def measure(self) -> Fraction:
        return self.union.measure

    def contains(self, x) -> bool:
        return self.union.contains(x)


def _circle_min_max(a: np.ndarray, w: np.ndarray, c: np.ndarray):
    """Min and max circular distance from points c (K, L) to cells [a, a + w] (K,)."""
    a, w = a[:, None], w[:, None]
    u = np.mod(c - a, 1.0)
    mind = np.where(u <= w, 0.0, np.minimum(u - w, 1.0 - u))
    v = np.mod(c + 0.5 - a, 1.0)
    da = np.abs(u - np.floor(u + 0.5))
    db = np.abs((u - w) - np.floor(u - w + 0.5))
    maxd = np.where(v <= w, 0.5, np.maximum(da, db))
    return mind, maxd


class _CellBounds:
    """Certified upper and lower bounds on F over cells lying inside one bin.

    Points in bins within ``reach`` of the cell's bin are summed exactly; the
    rest are bounded through their bin distance, a circular convolution of the
    bin histogram with capped kernels.
    """

    def __init__(self, cloud: PointCloud, cap: float, level: int, reach: int = 4):
        order = np.argsort(cloud.centres, kind="stable")
        self.c = cloud.centres[order]
        self.e = cloud.errors[order]
        self.cap = cap
        self.nbins = nb = 2 ** level
        self.reach = reach
        width = 1.0 / nb
        bins = np.minimum((self.c * nb).astype(np.int64), nb - 1)
        n = len(bins)
        # points repeated one turn either side so bin windows are contiguous
        self.ext_bins = np.concatenate([bins - nb, bins, bins + nb])
        self.ext_c = np.concatenate([self.c, self.c, self.c])
        self.ext_e = np.concatenate([self.e, self.e, self.e])
        hist = np.bincount(bins, minlength=nb).astype(float)
        k = np.arange(nb)
        dk = np.minimum(k, nb - k)
        emax = float(self.e.max()) + _FLOAT_EPS if n else _FLOAT_EPS
        far = dk > reach
        ku = np.zeros(nb)
        kl = np.zeros(nb)
        ku[far] = np.minimum(cap, 1.0 / ((dk[far] - 1) * width - emax))
        kl[far] = np.minimum(cap, 1.0 / np.minimum((dk[far] + 1) * width + emax, 0.5))
        fh = np.fft.rfft(hist)
        self.far_up = np.fft.irfft(fh * np.fft.rfft(ku), nb)
        self.far_lo = np.fft.irfft(fh * np.fft.rfft(kl), nb)
        slack = 1e-9 * n * cap
        self.far_up = self.far_up + slack
        self.far_lo = np.maximum(self.far_lo - slack, 0.0)

    def bounds(self, a: np.ndarray, w: np.ndarray, chunk_budget: int = 4_000_000):
        nb, r = self.nbins, self.reach
        cell_bin = np.minimum((a * nb).astype(np.int64), nb - 1)
        start = np.searchsorted(self.ext_bins, cell_bin - r, side="left")
        stop = np.searchsorted(self.ext_bins, cell_bin + r, side="right")
        lengths = stop - start
        upper = np.empty(len(a))
        lower = np.empty(len(a))
        order = np.argsort(lengths, kind="stable")
        i = 0
        while i < len(order):
            # grow the chunk while the padded block stays within budget
            j = i + 1
            while j < len(order) and int(lengths[order[j]]) * (j + 1 - i) <= chunk_budget:
                j += 1
            idx = order[i:j]
            lmax = max(int(lengths[idx].max()), 1)
            cols = start[idx, None] + np.arange(lmax)[None, :]
            mask = cols < stop[idx, None]
            cols = np.where(mask, cols, 0)
            c, e = self.ext_c[cols], self.ext_e[cols]
            mind, maxd = _circle_min_max(a[idx], w[idx], c)
            lo = np.maximum(mind - e - _FLOAT_EPS, 0.0)
            hi = maxd + e + _FLOAT_EPS
            with np.errstate(divide="ignore"):
                inv_lo = np.where(mask, np.minimum(self.cap, 1.0 / lo), 0.0)
            inv_hi = np.where(mask, np.minimum(self.cap, 1.0 / hi), 0.0)
            upper[idx] = inv_lo.sum(axis=1) + self.far_up[cell_bin[idx]]
            lower[idx] = inv_hi.sum(axis=1) + self.far_lo[cell_bin[idx]]
            i = j
        return upper * (1 + _SUM_SLACK), lower * (1 - _SUM_SLACK)


def design_levels(n: int, delta: Fraction) -> tuple[float, float, float]:
    """(cap M, first level T1, second level T2)."""
    d = float(delta)
    return 4 * n / d, 16 * n * math.log(4 * n / d) / d, 32 * n * n / (d * d)


def build_exceptional_set(points, delta, min_width_log2: int = 34) -> ExceptionalSet:
    """Two-stage exceptional set of measure <= delta (checked exactly)."""
    delta = Fraction(delta)
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    cloud = points if isinstance(points, PointCloud) else PointCloud.build(points)
    n = len(cloud)
    if n < 1:
        raise ValueError("need at least one point")
    cap, t1, t2 = design_levels(n, delta)
    radius = delta / (4 * n)
    stage1 = IntervalUnion.from_arcs(
        (Fraction(c) - radius - Fraction(e), Fraction(c) + radius + Fraction(e))
        for c, e in zip(cloud.centres.tolist(), cloud.errors.tolist()))

    level = max(10, math.ceil(math.log2(max(2 * n, 1))))
    cells = _CellBounds(cloud, cap, level)
    a = np.arange(2 ** level, dtype=float) / 2 ** level
    w = np.full_like(a, 2.0 ** -level)
    included: list[tuple[float, float]] = []
    examined = 0
    while len(a):
        examined += len(a)
        upper, lower = cells.bounds(a, w)
        hit = lower > t1
        for s, width in zip(a[hit].tolist(), w[hit].tolist()):
            included.append((s, s + width))
        und = ~hit & (upper > t1)
        a, w = a[und], w[und]
        if not len(a):
            break
        if w[0] <= 2.0 ** -min_width_log2:
            included.extend(zip(a.tolist(), (a + w).tolist()))
            break
        half = w / 2
        a = np.concatenate([a, a + half])
        w = np.concatenate([half, half])
    stage2 = IntervalUnion.from_arcs((Fraction(s), Fraction(e)) for s, e in included)
    union = stage1.union(stage2)
    if union.measure > delta:
        raise BudgetInfeasibleError(
            f"exceptional set measure {float(union.measure):.6g} exceeds delta = {float(delta)}")
    return ExceptionalSet(union, stage1, stage2, n, delta, cap, t1, t2, examined)


def _outside_sums(cloud: PointCloud, xs: Sequence[Fraction]):
    """Per-sample float sums and their rigorous upper bounds."""
    x = np.asarray([float(v) for v in xs])
    xerr = np.asarray([float(abs(Fraction(float(v)) - v)) for v in xs])
    d = np.abs(np.mod(x[:, None] - cloud.centres[None, :] + 0.5, 1.0) - 0.5)
    lo = np.maximum(d - cloud.errors[None, :] - xerr[:, None] - _FLOAT_EPS, 0.0)
    with np.errstate(divide="ignore"):
        s1, s2 = (1 / d).sum(axis=1), (1 / d ** 2).sum(axis=1)
        u1 = (1 / lo).sum(axis=1) * (1 + _SUM_SLACK)
        u2 = (1 / lo ** 2).sum(axis=1) * (1 + _SUM_SLACK)
        term_max = (1 / lo).max(axis=1)
    return s1, s2, u1, u2, term_max


def sum_bounds_outside(points, E: ExceptionalSet, samples: int,
                       seed: int = 0) -> tuple[SumReport, SumReport]:
    """Sample x outside E; fit the two sums against N log N and N^2."""
    cloud = points if isinstance(points, PointCloud) else PointCloud.build(points)
    n = len(cloud)
    if n != E.n_points:
        raise ValueError("points do not match the exceptional set")
    if E.measure >= 1:
        raise EmptyComplementError("exceptional set covers the whole circle")
    delta = float(E.delta)
    design1 = 16 / delta * math.log(4 * n / delta) / max(math.log(n), 1.0)
    design2 = 32 / delta ** 2
    ref1, ref2 = nlogn(n), float(n * n)
    if samples == 0:
        return (SumReport("outside_first", None, E.level_first, True, ref1, None, design1),
                SumReport("outside_second", None, E.level_second, True, ref2, None, design2))
    rng = np.random.default_rng(seed)
    xs = E.union.sample_outside(samples, rng)
    s1, s2, u1, u2, term_max = _outside_sums(cloud, xs)
    i1, i2 = int(np.argmax(u1)), int(np.argmax(u2))
    fit1, fit2 = float(u1[i1]) / ref1, float(u2[i2]) / ref2
    termwise = bool((term_max <= E.cap * (1 + 1e-12)).all())
    common = {"samples": samples, "seed": seed, "termwise_cap_ok": termwise,
              "cap": E.cap, "delta": delta}
    r1 = SumReport("outside_first", float(s1[i1]), E.level_first,
                   bool(fit1 <= design1) and termwise, ref1, fit1, design1,
                   witnesses=[{"x": float(xs[i1]), "sum": float(s1[i1]), "upper": float(u1[i1])}],
                   details=dict(common))
    r2 = SumReport("outside_second", float(s2[i2]), E.level_second,
                   bool(fit2 <= design2) and termwise, ref2, fit2, design2,
                   witnesses=[{"x": float(xs[i2]), "sum": float(s2[i2]), "upper": float(u2[i2])}],
                   details=dict(common))
    return r1, r2


# -- sum of 1/|P(x + n)| ------------------------------------------------------

@dataclass
class ProductSumReport:
    report: SumReport
    case: str
    exceptional: IntervalUnion
    convergent_index: int
    q_n: int
    lower_bound: float | None
    samples: list[Fraction]
    sums: list[float]


def _admissible_index(ratio: PrecisionReal, qk: int, g_lo: Fraction, g_hi: Fraction,
                      depth: int) -> tuple[int, int]:
    cf = expand(ratio, depth, strict=False)
    for i, q in enumerate(cf.q):
        if g_lo * q <= qk <= g_hi * q:
            return i, q
    raise PreconditionError(
        f"Q_k = {qk} is not within [{g_lo} q_n, {g_hi} q_n] for any n <= {len(cf) - 1}")


def _floor_range(beta: arb, g2: arb, n: int) -> range:
    """Integers taken by floor(beta (x + n) - g2) for x in [0, 1) (a superset)."""
    ends = [beta * n - g2, beta * (n + 1) - g2]
    lo = min(float(e.lower()) for e in ends)
    hi = max(float(e.upper()) for e in ends)
    return range(math.floor(lo - 1e-9), math.floor(hi + 1e-9) + 1)


def _to_cloud(values: list[arb]) -> PointCloud:
    reals = [PrecisionReal.from_arb(v) for v in values]
    return PointCloud.build(reals)


def _sample_sums(P: TrigPoly, xs: Sequence[Fraction], qk: int, bits: int) -> list[float]:
    sums = []
    with ctx.workprec(bits):
        p = P.evaluator(bits)
        for x in xs:
            xb = arb(x.numerator) / x.denominator
            total = arb(0)
            for k in range(qk):
                total += 1 / abs(p(xb + k))
            sums.append(float(total.upper()))
    return sums


def _sample_local_sums(P: TrigPoly, zeros, t: float, xs: Sequence[Fraction], qk: int) -> list[float]:
    alpha, beta = float(P.alpha), float(P.beta)
    n = np.arange(qk)
    out = []
    for x in xs:
        X = np.mod(alpha * (float(x) + n), 1.0)
        Y = np.mod(beta * (float(x) + n), 1.0)
        out.append(float((1 / local_distance(X, Y, zeros, t)).sum()))
    return out


def product_reciprocal_sum_analysis(P: TrigPoly, qk: int, gamma_lo, gamma_hi, delta,
                                    samples: int, seed: int = 0, depth: int = 60,
                                    assume_case2: bool = False,
                                    grid_n: int = 256) -> ProductSumReport:
    """Exceptional set and sampled bound for sum_{n < Q} 1/|P(x + n)|.

    Case 1 (alpha + t beta != 0) feeds the O(Q) shifted points of the linear
    term into :func:`build_exceptional_set`, in the variable z = (alpha + t beta) x.
    Case 2 splits the orbit into terms far from xi (bounded by the window
    lemma, no exceptional set needed) and the O(1) near terms, which fall back
    on the quadratic term ||alpha (x + n) - g1||^2.
    """
    gamma_lo, gamma_hi, delta = Fraction(gamma_lo), Fraction(gamma_hi), Fraction(delta)
    if qk < 2:
        raise PreconditionError("Q_k must be at least 2")
    ratio = P.alpha / P.beta
    idx, q = _admissible_index(ratio, qk, gamma_lo, gamma_hi, depth)
    data = find_torus_zeros(*P.coefficients)
    bits = digits_to_bits(P.digits)
    rng = np.random.default_rng(seed)
    ref = qk * math.log(qk)

    if data.count == 0:
        mn = exact_min_modulus(*P.coefficients)
        E = IntervalUnion()
        xs = E.sample_outside(samples, rng) if samples else []
        sums = _sample_sums(P, xs, qk, bits)
        bound = qk / float(mn.lower())
        worst = max(sums) if sums else 0.0
        rep = SumReport("product_reciprocal_sum", worst, bound, worst <= bound, ref,
                        worst / ref, 1 / (float(mn.lower()) * math.log(qk)),
                        details={"case": "zero-free", "min_modulus": float(mn.lower()),
                                 "seed": seed, "samples": samples})
        return ProductSumReport(rep, "zero-free", E, idx, q, float(mn.lower()), xs, sums)

    lb = lower_bound_constant(*P.coefficients, grid_n=grid_n).constant
    t = data.t
    lam = P.alpha + t * P.beta
    try:
        case = 1 if lam.sign() != 0 else 2
    except AmbiguityError:
        if not assume_case2:
            raise UnresolvedCaseError("alpha + t beta cannot be separated from 0; pass "
                                      "assume_case2 if it vanishes identically")
        case = 2
    details: dict = {"case": case, "t": float(t), "lambda": float(lam.value),
                     "lower_bound_constant": lb, "convergent_index": idx, "q_n": q,
                     "seed": seed, "samples": samples}

    with ctx.workprec(bits):
        tb, betab = t.arb(bits), P.beta.arb(bits)
        zero_balls = [(g1.arb(bits), g2.arb(bits)) for g1, g2 in data.zeros]
        if case == 1:
            lamb = lam.arb(bits)
            vals = []
            for g1, g2 in zero_balls:
                base = g1 + tb * g2
                for k in range(qk):
                    for j in _floor_range(betab, g2, k):
                        for m in (0, -1):
                            vals.append(-(lamb * k - base - tb * j + tb * m))
            cloud = _to_cloud(vals)
            scale = abs(lam)
            delta_z = delta * Fraction(math.floor(scale.lower() * 2**32), 2**32) \
                / math.ceil(scale.upper())
            Ez = build_exceptional_set(cloud, delta_z)
            E = Ez.union.pullback(lam)
            linear_bound = Ez.level_first
            details.update(points=len(cloud), delta_z=float(delta_z),
                           first_level=Ez.level_first)
        else:
            alphab, ratiob = P.alpha.arb(bits), ratio.arb(bits)
            near_vals, far_sum = [], arb(0)
            mult = math.ceil(1 / float(abs(P.beta).lower())) + 1
            cap_near = 8 * (gamma_hi / gamma_lo + 1)
            sep = arb(1) / (4 * q)
            windows_total = 0
            for g1, g2 in zero_balls:
                ks = sorted({j for k in range(qk) for j in _floor_range(betab, g2, k)})
                for m in (0, -1):
                    xi = g1 + tb * g2 - m * tb
                    near = set()
                    for j in ks:
                        d = arb_dist(ratiob * j - xi)
                        if d >= sep:
                            far_sum += 1 / d
                        else:
                            near.add(j)
                    near_n = [k for k in range(qk)
                              if near.intersection(_floor_range(betab, g2, k))]
                    if len(near_n) > cap_near:
                        raise InternalConsistencyError(
                            f"near set has {len(near_n)} elements, cap {float(cap_near)}")
                    near_vals.extend(g1 - alphab * k for k in near_n)
                    windows_total += math.ceil((ks[-1] - ks[0] + 1) / q) if ks else 0
            far_lemma = mult * windows_total * float(lemma_bound(q))
            far_actual = mult * float(far_sum.upper())
            if far_actual > far_lemma:
                raise InternalConsistencyError("far-term sum exceeds the window lemma bound")
            if near_vals:
                cloud = _to_cloud(near_vals)
                scale = abs(P.alpha)
                delta_z = delta * Fraction(math.floor(scale.lower() * 2**32), 2**32) \
                    / math.ceil(scale.upper())
                Ez = build_exceptional_set(cloud, delta_z)
                E = Ez.union.pullback(P.alpha)
                near_bound = Ez.level_second
            else:
                E, near_bound = IntervalUnion(), 0.0
            linear_bound = far_lemma + near_bound
            details.update(far_actual=far_actual, far_lemma_bound=far_lemma,
                           near_points=len(near_vals), near_bound=near_bound,
                           multiplicity=mult)

    if E.measure > delta:
        raise BudgetInfeasibleError(f"pulled-back exceptional set has measure "
                                    f"{float(E.measure):.6g} > delta")
    xs = E.sample_outside(samples, rng) if samples else []
    sums = _sample_sums(P, xs, qk, bits)
    local = _sample_local_sums(P, data.float_zeros(), float(t), xs, qk)
    bound = linear_bound / lb
    worst = max(sums) if sums else 0.0
    consistent = all(s <= l / lb * (1 + 1e-6) for s, l in zip(sums, local))
    details.update(measure=float(E.measure), bound_chain=bound,
                   pointwise_lower_bound_ok=consistent,
                   worst_local_sum=max(local) if local else 0.0)
    rep = SumReport("product_reciprocal_sum", worst, bound, worst <= bound, ref,
                    worst / ref, bound / ref, details=details)
    return ProductSumReport(rep, f"case{case}", E, idx, q, lb, xs, sums)
