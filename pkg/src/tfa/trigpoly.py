"""The three-term exponential polynomial and its zeros on the torus.

For p(x, y) = C0 + C1 e(x) + C2 e(y) with e(x) = exp(2 pi i x), write
R_i = |C_i|^2. A zero exists iff the moduli form a (possibly flat) triangle,
i.e. iff the discriminant Delta = 4 R0 R1 - (R0 + R1 - R2)^2 is >= 0. At a zero,

    w1 = C1 e(g1) = -C0 (R0 + R1 - R2 +/- i sqrt(Delta)) / (2 R0),   w2 = -C0 - w1,

which is purely algebraic; only the final angles need an arctangent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from flint import acb, arb, ctx

from .numeric import (AmbiguityError, PrecisionComplex, PrecisionReal, default_digits,
                      digits_to_bits)

ZERO_RESIDUAL_TOL = 1e-30


@dataclass(frozen=True)
class TrigPoly:
    """P(x) = C0 + C1 e(alpha x) + C2 e(beta x)."""

    c0: PrecisionComplex
    c1: PrecisionComplex
    c2: PrecisionComplex
    alpha: PrecisionReal
    beta: PrecisionReal

    def __post_init__(self):
        for name in ("c0", "c1", "c2"):
            if getattr(self, name).abs2().sign() <= 0:
                raise ValueError(f"coefficient {name} must be nonzero")

    @classmethod
    def build(cls, c0, c1, c2, alpha, beta) -> "TrigPoly":
        digits = default_digits()
        return cls(PrecisionComplex.coerce(c0, digits), PrecisionComplex.coerce(c1, digits),
                   PrecisionComplex.coerce(c2, digits), PrecisionReal.coerce(alpha, digits),
                   PrecisionReal.coerce(beta, digits))

    @property
    def coefficients(self) -> tuple[PrecisionComplex, PrecisionComplex, PrecisionComplex]:
        return self.c0, self.c1, self.c2

    @property
    def digits(self) -> int:
        return max(self.c0.digits, self.c1.digits, self.c2.digits,
                   self.alpha.digits, self.beta.digits)

    def evaluator(self, bits: int | None = None) -> Callable[[arb], acb]:
        """Raw-ball evaluator x -> P(x) for hot loops (caller sets ctx precision)."""
        bits = bits or digits_to_bits(self.digits)
        c0, c1, c2 = (c.acb(bits) for c in self.coefficients)
        two_a, two_b = 2 * self.alpha.arb(bits), 2 * self.beta.arb(bits)

        def p(x: arb) -> acb:
            sa, ca = (two_a * x).sin_cos_pi()
            sb, cb = (two_b * x).sin_cos_pi()
            return c0 + c1 * acb(ca, sa) + c2 * acb(cb, sb)

        return p

    def floats(self) -> tuple[complex, complex, complex, float, float]:
        return (complex(self.c0), complex(self.c1), complex(self.c2),
                float(self.alpha), float(self.beta))


def eval_p(P: TrigPoly, x: PrecisionReal) -> PrecisionComplex:
    digits = max(P.digits, x.digits)
    bits = digits_to_bits(digits)
    with ctx.workprec(bits):
        z = P.evaluator(bits)(x.arb(bits))
    return PrecisionComplex(PrecisionReal.from_arb(z.real, digits=digits),
                            PrecisionReal.from_arb(z.imag, digits=digits))


def torus_p(c0: acb, c1: acb, c2: acb, x: arb, y: arb) -> acb:
    sx, cx = (2 * x).sin_cos_pi()
    sy, cy = (2 * y).sin_cos_pi()
    return c0 + c1 * acb(cx, sx) + c2 * acb(cy, sy)


@dataclass(frozen=True)
class LowerBoundReport:
    constant: float
    argmin: tuple[float, float]
    grid_n: int
    refine: int
    zero_free: bool
    analytic_min: float | None = None


@dataclass(frozen=True)
class TorusZeroData:
    zeros: tuple[tuple[PrecisionReal, PrecisionReal], ...]
    slopes: tuple[PrecisionReal, ...]
    discriminant: PrecisionReal
    residuals: tuple[float, ...] = ()
    empirical: LowerBoundReport | None = field(default=None)

    @property
    def count(self) -> int:
        return len(self.zeros)

    @property
    def t(self) -> PrecisionReal | None:
        return self.slopes[0] if self.slopes else None

    def float_zeros(self) -> list[tuple[float, float]]:
        return [(float(a), float(b)) for a, b in self.zeros]


def triangle_discriminant(c0: PrecisionComplex, c1: PrecisionComplex,
                          c2: PrecisionComplex) -> PrecisionReal:
    """4 R0 R1 - (R0 + R1 - R2)^2; its sign gives the zero count (2, 1, 0)."""
    r0, r1, r2 = c0.abs2(), c1.abs2(), c2.abs2()
    s = r0 + r1 - r2
    return 4 * r0 * r1 - s * s


def _turns(z: acb) -> arb:
    """arg(z) / (2 pi), shifted into [0, 1) by its midpoint."""
    g = z.arg() / (2 * arb.pi())
    if g.mid() < 0:
        g += 1
    return g


def find_torus_zeros(c0, c1, c2) -> TorusZeroData:
    """All (g1, g2) in [0,1)^2 with C0 + C1 e(g1) + C2 e(g2) = 0, in closed form."""
    c0, c1, c2 = (PrecisionComplex.coerce(c) for c in (c0, c1, c2))
    for c in (c0, c1, c2):
        if c.abs2().sign() <= 0:
            raise ValueError("coefficients must be nonzero")
    digits = max(c0.digits, c1.digits, c2.digits)
    bits = digits_to_bits(digits)
    disc = triangle_discriminant(c0, c1, c2)
    try:
        sign = disc.sign()
    except AmbiguityError as exc:
        raise AmbiguityError("cannot decide the triangle classification of |C0|, |C1|, |C2| "
                             "at this precision") from exc
    if sign < 0:
        return TorusZeroData((), (), disc)
    with ctx.workprec(bits):
        a0, a1, a2 = c0.acb(bits), c1.acb(bits), c2.acb(bits)
        r0, r1, r2 = (c.abs2().arb(bits) for c in (c0, c1, c2))
        root = arb(0) if sign == 0 else disc.arb(bits).sqrt()
        zeros, residuals = [], []
        for s in ((1,) if sign == 0 else (1, -1)):
            w1 = -a0 * acb(r0 + r1 - r2, s * root) / (2 * r0)
            w2 = -a0 - w1
            g1, g2 = _turns(w1 / a1), _turns(w2 / a2)
            residuals.append(float(abs(torus_p(a0, a1, a2, g1, g2)).upper()))
            zeros.append((PrecisionReal.from_arb(g1, digits=digits),
                          PrecisionReal.from_arb(g2, digits=digits)))
    zeros.sort(key=lambda z: (z[0].value, z[1].value))
    slopes = tuple(slope_parameter(c0, c1, c2, z) for z in zeros)
    return TorusZeroData(tuple(zeros), slopes, disc, tuple(residuals))


def slope_parameter(c0, c1, c2, zero: tuple[PrecisionReal, PrecisionReal]) -> PrecisionReal:
    """t = Re(w2 / w1) with w1 = C1 e(g1), w2 = C2 e(g2).

    Near the zero p ~ 2 pi i (w1 u + w2 v), so the linear part is controlled by
    |u + t v| when w2/w1 is real. Algebraically t = (R0 - R1 - R2) / (2 R1),
    the same for both zeros.
    """
    c1, c2 = PrecisionComplex.coerce(c1), PrecisionComplex.coerce(c2)
    digits = max(c1.digits, c2.digits, zero[0].digits)
    bits = digits_to_bits(digits)
    with ctx.workprec(bits):
        g1, g2 = zero[0].arb(bits), zero[1].arb(bits)
        s1, k1 = (2 * g1).sin_cos_pi()
        s2, k2 = (2 * g2).sin_cos_pi()
        w1 = c1.acb(bits) * acb(k1, s1)
        w2 = c2.acb(bits) * acb(k2, s2)
        if abs(w1) < arb(2) ** (-bits // 2):
            raise ArithmeticError("degenerate gradient: |w1| vanishes")
        t = (w2 / w1).real
    if t.contains(0):
        warnings.warn("slope parameter t is zero (|C0|^2 = |C1|^2 + |C2|^2); "
                      "the lower-bound grid check still applies", RuntimeWarning, stacklevel=2)
    return PrecisionReal.from_arb(t, digits=digits)


# -- empirical lower-bound constant (float grid) ---------------------------

def _signed(x: np.ndarray) -> np.ndarray:
    return x - np.floor(x + 0.5)


def _dist(x: np.ndarray) -> np.ndarray:
    return np.abs(_signed(x))


def _modulus(cs, X, Y):
    c0, c1, c2 = cs
    return np.abs(c0 + c1 * np.exp(2j * np.pi * X) + c2 * np.exp(2j * np.pi * Y))


def local_distance(X, Y, zeros, t):
    """min_j ( ||x - g1 + t <y - g2>|| + ||x - g1||^2 + ||y - g2||^2 )."""
    out = None
    for g1, g2 in zeros:
        dx, dy = X - g1, Y - g2
        d = _dist(dx + t * _signed(dy)) + _dist(dx) ** 2 + _dist(dy) ** 2
        out = d if out is None else np.minimum(out, d)
    return out


def _ratio(cs, zeros, t, X, Y):
    m = _modulus(cs, X, Y)
    if not zeros:
        return m
    d = local_distance(X, Y, zeros, t)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = m / d
    r[d < 1e-13] = np.inf
    return r


def lower_bound_constant(c0, c1, c2, grid_n: int = 256, refine: int = 10,
                         n_seeds: int = 8) -> LowerBoundReport:
    """Observed infimum of |p| / local_distance over a torus grid, locally refined.

    Without zeros the constant is min |p|, compared against the exact minimum
    max(0, 2 max_i |C_i| - sum_i |C_i|).
    """
    if grid_n < 64:
        raise ValueError("grid_n must be at least 64")
    data = find_torus_zeros(c0, c1, c2)
    cs = tuple(complex(PrecisionComplex.coerce(c)) for c in (c0, c1, c2))
    zeros = data.float_zeros()
    t = float(data.t) if data.t is not None else 0.0
    axis = np.arange(grid_n) / grid_n
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    R = _ratio(cs, zeros, t, X, Y)
    flat = R.ravel()
    seeds = np.argsort(flat)[:n_seeds]
    best = float(flat[seeds[0]])
    arg = (float(X.ravel()[seeds[0]]), float(Y.ravel()[seeds[0]]))
    h = 1.0 / grid_n
    offsets = np.arange(-refine, refine + 1) * (h / refine)
    for s in seeds:
        lx, ly = np.meshgrid(X.ravel()[s] + offsets, Y.ravel()[s] + offsets, indexing="ij")
        local = _ratio(cs, zeros, t, lx, ly)
        i = int(np.argmin(local))
        if local.ravel()[i] < best:
            best = float(local.ravel()[i])
            arg = (float(lx.ravel()[i]) % 1.0, float(ly.ravel()[i]) % 1.0)
    analytic = None
    if not zeros:
        mods = sorted(abs(c) for c in cs)
        analytic = max(0.0, mods[2] - mods[1] - mods[0])
    return LowerBoundReport(best, arg, grid_n, refine, not zeros, analytic)


def exact_min_modulus(c0, c1, c2) -> PrecisionReal:
    """min over the torus of |p|: max(0, 2 max|C_i| - sum |C_i|)."""
    mods = sorted((PrecisionComplex.coerce(c).abs2().sqrt() for c in (c0, c1, c2)),
                  key=lambda r: r.value)
    gap = mods[2] - mods[1] - mods[0]
    try:
        positive = gap.sign() > 0
    except AmbiguityError:
        positive = False
    return gap if positive else PrecisionReal.from_fraction(Fraction(0))


__all__ = [
    "LowerBoundReport", "TorusZeroData", "TrigPoly", "ZERO_RESIDUAL_TOL", "eval_p",
    "exact_min_modulus", "find_torus_zeros", "local_distance", "lower_bound_constant",
    "slope_parameter", "torus_p", "triangle_discriminant",
]
