"""Continued-fraction expansion and the best-approximation checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from flint import ctx

from .numeric import AmbiguityError, PrecisionError, PrecisionReal, arb_dist

BRUTE_FORCE_CAP = 10**6


class DepthExhaustedError(PrecisionError):
    """Precision ran out before the requested depth; carries what was certified."""

    def __init__(self, requested: int, valid_depth: int, partial: "ContinuedFraction"):
        super().__init__(f"requested {requested} quotients but only indices 0..{valid_depth} "
                         f"are certified; re-supply the input at higher precision")
        self.requested = requested
        self.valid_depth = valid_depth
        self.partial = partial


class TerminalInputError(ValueError):
    """The input is rational and its expansion ends before the requested index."""


class CapExceededError(ValueError):
    pass


@dataclass(frozen=True)
class ContinuedFraction:
    quotients: tuple[int, ...]
    convergents: tuple[tuple[int, int], ...]
    valid_depth: int
    terminal: bool

    @property
    def p(self) -> list[int]:
        return [pq[0] for pq in self.convergents]

    @property
    def q(self) -> list[int]:
        return [pq[1] for pq in self.convergents]

    def __len__(self) -> int:
        return len(self.quotients)


def convergents(quotients: list[int] | tuple[int, ...]) -> list[tuple[int, int]]:
    """p_k, q_k from the three-term recurrences with p_{-1}=1, q_{-1}=0, p_{-2}=0, q_{-2}=1."""
    out = []
    p_prev, q_prev, p_prev2, q_prev2 = 1, 0, 0, 1
    for a in quotients:
        p, q = a * p_prev + p_prev2, a * q_prev + q_prev2
        out.append((p, q))
        p_prev2, q_prev2, p_prev, q_prev = p_prev, q_prev, p, q
    return out


def _quotients_exact(x: Fraction, depth: int) -> tuple[list[int], bool]:
    quotients = []
    num, den = x.numerator, x.denominator
    while len(quotients) < depth:
        a, r = divmod(num, den)
        quotients.append(a)
        if r == 0:
            return quotients, True
        num, den = den, r
    return quotients, False


def _quotients_interval(lo: Fraction, hi: Fraction, depth: int) -> list[int]:
    # The remainder interval is mapped through t -> 1/t exactly, so every real in
    # [lo, hi] shares each quotient emitted here.
    quotients = []
    while len(quotients) < depth:
        if hi - lo >= Fraction(1, 4):
            break
        a = math.floor(lo)
        if math.floor(hi) != a:
            break
        quotients.append(a)
        r_lo, r_hi = lo - a, hi - a
        if r_lo <= 0:
            break
        lo, hi = 1 / r_hi, 1 / r_lo
    return quotients


def expand(x: PrecisionReal, depth: int, strict: bool = True) -> ContinuedFraction:
    """Expand x into ``depth`` partial quotients a_0 .. a_{depth-1}.

    Rational inputs terminate (flagged ``terminal``) in canonical form, so the
    last quotient is at least 2 whenever there is more than one. For ball
    inputs a quotient is emitted only when the enclosure of the remainder's
    reciprocal has width below 1/4 and does not straddle an integer. With
    ``strict`` a shortfall raises :class:`DepthExhaustedError`; otherwise the
    certified prefix is returned.
    """
    if depth < 1:
        raise ValueError("depth must be positive")
    if x.is_exact:
        quotients, terminal = _quotients_exact(x.exact, depth)
    else:
        quotients = _quotients_interval(x.lower(), x.upper(), depth)
        terminal = False
    cf = ContinuedFraction(tuple(quotients), tuple(convergents(quotients)),
                           len(quotients) - 1, terminal)
    if len(quotients) < depth and not terminal and strict:
        raise DepthExhaustedError(depth, cf.valid_depth, cf)
    if not quotients:
        raise DepthExhaustedError(depth, -1, cf)
    return cf


def _need(x: PrecisionReal, index: int) -> ContinuedFraction:
    cf = expand(x, index + 1, strict=False)
    if len(cf) <= index:
        if cf.terminal:
            raise TerminalInputError(
                f"rational input terminates at index {cf.valid_depth}; index {index} does not exist")
        raise DepthExhaustedError(index + 1, cf.valid_depth, cf)
    return cf


@dataclass(frozen=True)
class BestApproxReport:
    n: int
    q_n: int
    q_next: int
    argmin: int | None
    min_dist: PrecisionReal | None
    dist_qn: PrecisionReal
    passed: bool


def best_approx_brute_check(x: PrecisionReal, n: int,
                            cap: int = BRUTE_FORCE_CAP) -> BestApproxReport:
    """Exhaustively minimise ||k x|| over 1 <= k < q_{n+1} and compare with ||q_n x||."""
    cf = _need(x, n + 1)
    q_n, q_next = cf.q[n], cf.q[n + 1]
    if q_next > cap:
        raise CapExceededError(f"q_{n + 1} = {q_next} exceeds brute-force cap {cap}")
    bits = x.bits
    with ctx.workprec(bits):
        xb = x.arb(bits)
        d_qn = arb_dist(xb * q_n)
        best_k, best = None, None
        dists = []
        for k in range(1, q_next):
            d = arb_dist(xb * k)
            dists.append(d)
            if best is None or d.mid() < best.mid():
                best_k, best = k, d
        if best_k is not None:
            # the minimiser must be certified strictly below every other candidate
            for k, d in enumerate(dists, start=1):
                if k != best_k and not (d > best):
                    if x.is_exact:
                        continue
                    raise AmbiguityError(f"cannot separate ||{k} x|| from ||{best_k} x||")
    to_real = lambda b: PrecisionReal.from_arb(b, digits=x.digits)
    passed = best_k is None or best_k == q_n
    return BestApproxReport(n, q_n, q_next, best_k,
                            None if best is None else to_real(best), to_real(d_qn), passed)


@dataclass(frozen=True)
class QualityReport:
    n: int
    q_n: int
    q_next: int
    dist_qn: PrecisionReal
    lower_bound: Fraction
    upper_bound: Fraction
    inside: bool


def quality_bounds(x: PrecisionReal, n: int) -> QualityReport:
    """Check 1/(2 q_{n+1}) <= ||q_n x|| <= 1/q_{n+1}."""
    cf = _need(x, n + 1)
    q_n, q_next = cf.q[n], cf.q[n + 1]
    if x.is_exact:
        y = x.exact * q_n
        d = PrecisionReal.from_fraction(abs(y - math.floor(y + Fraction(1, 2))), digits=x.digits)
    else:
        with ctx.workprec(x.bits):
            d = PrecisionReal.from_arb(arb_dist(x.arb() * q_n), digits=x.digits)
    lo, hi = Fraction(1, 2 * q_next), Fraction(1, q_next)
    inside = bool(d >= lo and d <= hi)
    return QualityReport(n, q_n, q_next, d, lo, hi, inside)


def determinant_ok(cf: ContinuedFraction) -> bool:
    """p_k q_{k-1} - p_{k-1} q_k = (-1)^{k-1} for every k >= 1."""
    conv = cf.convergents
    return all(conv[k][0] * conv[k - 1][1] - conv[k - 1][0] * conv[k][1] == (-1) ** (k - 1)
               for k in range(1, len(conv)))


def alternation_signs(x: PrecisionReal, cf: ContinuedFraction) -> list[int]:
    """Certified sign of p_k/q_k - x for each convergent (0 when equal)."""
    return [(PrecisionReal.from_fraction(Fraction(p, q), digits=x.digits) - x).sign()
            for p, q in cf.convergents]


__all__ = [
    "BRUTE_FORCE_CAP", "BestApproxReport", "CapExceededError", "ContinuedFraction",
    "DepthExhaustedError", "QualityReport", "TerminalInputError", "alternation_signs",
    "best_approx_brute_check", "convergents", "determinant_ok", "expand", "quality_bounds",
]
