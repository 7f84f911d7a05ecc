"""Configuration normalisation, condition classifiers, N_k construction,
translate products and the product-comparison harness."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from flint import acb, arb, ctx

from .bounds import IntervalUnion, ProductSumReport, product_reciprocal_sum_analysis
from .contfrac import expand
from .numeric import AmbiguityError, PrecisionReal, arb_dist, digits_to_bits, frac, parse_real
from .trigpoly import TrigPoly, exact_min_modulus, find_torus_zeros

CLAMP_FLOOR = 1e-300


class DegenerateConfigurationError(ValueError):
    pass


class ClampError(ArithmeticError):
    def __init__(self, index: int):
        super().__init__(f"|P| fell below the clamp floor at offset {index}")
        self.index = index


class SampleInExceptionalSetError(ValueError):
    pass


# -- configuration normalisation ------------------------------------------------

Point = tuple[PrecisionReal, PrecisionReal]


@dataclass(frozen=True)
class Configuration:
    points: tuple[Point, ...]

    @classmethod
    def build(cls, points) -> "Configuration":
        pts = tuple((PrecisionReal.coerce(a), PrecisionReal.coerce(b)) for a, b in points)
        if len(pts) != 4:
            raise ValueError("a configuration has exactly four points")
        return cls(pts)


@dataclass(frozen=True)
class TransformStep:
    name: str
    matrix: tuple[tuple[PrecisionReal, PrecisionReal], tuple[PrecisionReal, PrecisionReal]]
    translation: tuple[PrecisionReal, PrecisionReal]


@dataclass(frozen=True)
class Normalization:
    alpha: PrecisionReal
    beta: PrecisionReal
    steps: tuple[TransformStep, ...]
    collinear: tuple[int, int, int]
    off_line: int
    base: int


def _cross(o: Point, p: Point, q: Point) -> PrecisionReal:
    return (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0])


def _maybe_zero(x: PrecisionReal) -> bool:
    try:
        return x.sign() == 0
    except AmbiguityError:
        return True


def _certainly_nonzero(x: PrecisionReal) -> bool:
    try:
        return x.sign() != 0
    except AmbiguityError:
        return False


def _apply(m, t, p: Point) -> Point:
    return (m[0][0] * p[0] + m[0][1] * p[1] + t[0], m[1][0] * p[0] + m[1][1] * p[1] + t[1])


def normalize_configuration(cfg: Configuration, base: int | None = None) -> Normalization:
    """Map the configuration to {(0,1), (0,0), (alpha,0), (beta,0)}, alpha <= beta.

    The composite is an area-preserving affine map: translate the base point
    to the origin, rotate the line onto the first axis, shear the off-line
    point onto the second axis, then scale by (v, 1/v). Given the base point
    the map is unique, so the output is canonical. The default base is the
    lexicographically smallest collinear point.
    """
    pts = cfg.points
    candidates = []
    for off in range(4):
        i, j, k = (n for n in range(4) if n != off)
        if _maybe_zero(_cross(pts[i], pts[j], pts[k])) and \
                _certainly_nonzero(_cross(pts[i], pts[j], pts[off])):
            candidates.append(off)
    if len(candidates) != 1:
        raise DegenerateConfigurationError(
            "need exactly three collinear points and one point certified off their line")
    off = candidates[0]
    line = tuple(n for n in range(4) if n != off)
    for a in range(3):
        for b in range(a + 1, 3):
            p, q = pts[line[a]], pts[line[b]]
            if not (_certainly_nonzero(p[0] - q[0]) or _certainly_nonzero(p[1] - q[1])):
                raise DegenerateConfigurationError("collinear points are not distinct")
    if base is None:
        base = min(line, key=lambda n: (pts[n][0].value, pts[n][1].value))
    elif base not in line:
        raise ValueError("base must be one of the collinear points")
    zero, one = PrecisionReal.from_fraction(0), PrecisionReal.from_fraction(1)
    ident = ((one, zero), (zero, one))
    steps = []

    shift = (-pts[base][0], -pts[base][1])
    steps.append(TransformStep("translate", ident, shift))
    cur = [_apply(ident, shift, p) for p in pts]

    other = next(n for n in line if n != base)
    d1, d2 = cur[other]
    norm = (d1 * d1 + d2 * d2).sqrt()
    rot = ((d1 / norm, d2 / norm), (-d2 / norm, d1 / norm))
    steps.append(TransformStep("rotate", rot, (zero, zero)))
    cur = [_apply(rot, (zero, zero), p) for p in cur]

    u, v = cur[off]
    shear = ((one, -u / v), (zero, one))
    steps.append(TransformStep("shear", shear, (zero, zero)))
    cur = [_apply(shear, (zero, zero), p) for p in cur]

    scale = ((v, zero), (zero, 1 / v))
    steps.append(TransformStep("scale", scale, (zero, zero)))
    cur = [_apply(scale, (zero, zero), p) for p in cur]

    params = [cur[n][0] for n in line if n != base]
    params.sort(key=lambda r: r.value)
    return Normalization(params[0], params[1], tuple(steps), line, off, base)


# -- condition classifiers ---------------------------------------------------------

@dataclass
class Classification:
    """Finite-depth evidence for the growth conditions; never a limsup verdict."""

    depth_reached: int
    rational_case: bool
    quotient_ratio: list[float]
    denominator_ratio: list[float]
    running_max_quotient: list[float]
    running_max_denominator: list[float]
    nlogn_condition: str
    power_condition: dict[str, bool]
    note: str = "finite-depth evidence only"


def _log_ratio_sequences(cf) -> tuple[list[float], list[float]]:
    qa, qd = [], []
    for k in range(1, len(cf)):
        q = cf.q[k]
        if q < 2:
            continue
        lq = math.log(q)
        qa.append(math.exp(math.log(cf.quotients[k]) - math.log(lq)))
        if k + 1 < len(cf):
            qd.append(math.exp(math.log(cf.q[k + 1]) - lq - math.log(lq)))
    return qa, qd


def _running_max(xs: Sequence[float]) -> list[float]:
    out, m = [], -math.inf
    for x in xs:
        m = max(m, x)
        out.append(m)
    return out


def classify_condition(ratio: PrecisionReal, depth: int,
                       gammas: Sequence[float] = (1.5, 2.0, 3.0)) -> Classification:
    """a_k / ln q_k and q_{k+1} / (q_k ln q_k) along the computed expansion.

    ``nlogn_condition`` is "positive" when the maximum of a_k/ln q_k over the
    second half of the range is at least half the maximum over the first half,
    and "decay" otherwise. ``power_condition`` records, per exponent gamma,
    whether some q_{k+1} >= q_k^gamma was seen.
    """
    if depth < 3:
        raise ValueError("depth must be at least 3")
    cf = expand(ratio, depth + 1, strict=False)
    if cf.terminal:
        return Classification(cf.valid_depth, True, [], [], [], [], "rational",
                              {str(g): False for g in gammas},
                              "terminal expansion: at least one of alpha, beta is rational")
    qa, qd = _log_ratio_sequences(cf)
    verdict = "insufficient-depth"
    if len(qa) >= 4:
        half = len(qa) // 2
        verdict = "positive" if max(qa[half:]) >= 0.5 * max(qa[:half]) else "decay"
    power = {}
    for g in gammas:
        power[str(g)] = any(math.log(cf.q[k + 1]) >= g * math.log(cf.q[k])
                            for k in range(1, len(cf) - 1) if cf.q[k] >= 2)
    return Classification(cf.valid_depth, False, qa, qd, _running_max(qa), _running_max(qd),
                          verdict, power)


def denominator_growth_proxy(x: PrecisionReal, depth: int) -> float:
    """max_k q_{k+1} / (q_k ln q_k) over the first ``depth`` quotients."""
    _, qd = _log_ratio_sequences(expand(x, depth, strict=False))
    return max(qd) if qd else 0.0


def full_measure_experiment(samples: int = 200, depth: int = 60, digits: int = 256,
                            threshold: float = 0.1, seed: int = 0) -> dict:
    """Fraction of uniform random x whose growth proxy exceeds ``threshold``."""
    rng = np.random.default_rng(seed)
    proxies = []
    for _ in range(samples):
        ds = "".join(str(d) for d in rng.integers(0, 10, size=digits))
        x = parse_real(f"dec:0.{ds}")
        proxies.append(denominator_growth_proxy(x, depth))
    hits = sum(p > threshold for p in proxies)
    return {"samples": samples, "depth": depth, "threshold": threshold, "seed": seed,
            "fraction": hits / samples if samples else 0.0, "proxies": proxies}


# -- N_k construction -----------------------------------------------------------

@dataclass(frozen=True)
class NkCertificate:
    n_index: int
    m: int
    nk: int
    q_n: int
    q_next: int
    dist_alpha_beta: PrecisionReal
    frac_over_beta: PrecisionReal
    ratio: PrecisionReal

    def check(self, s: Fraction) -> dict[str, bool]:
        return {"nk_is_m_qn": self.nk == self.m * self.q_n,
                "frac_le_s": bool(self.frac_over_beta <= s),
                "m_le_cap": self.m <= math.ceil(1 / s) + 1,
                "dist_le_m_over_qnext": bool(self.dist_alpha_beta <= Fraction(self.m, self.q_next))}


@dataclass
class NkResult:
    certificates: list[NkCertificate]
    misses: list[dict]
    selected: list[int]
    skipped_vacuous: list[int]
    depth_reached: int


def construct_nk(alpha: PrecisionReal, beta: PrecisionReal, s, depth: int,
                 c=1) -> NkResult:
    """Pigeonhole construction of N_k = m q_n with {N_k / beta} <= s.

    Indices are selected by q_{n+1} >= c q_n ln q_n. Indices where that test
    is implied by q_{n+1} >= q_n + 1 alone (c q_n ln q_n <= q_n + 1, which
    includes q_n = 1) carry no information and are skipped. For each selected
    index the smallest m in 1 .. ceil(1/s) + 1 is kept; failures are recorded
    as misses rather than raised.
    """
    s, c = Fraction(s), Fraction(c)
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    if c <= 0:
        raise ValueError("c must be positive")
    ratio = alpha / beta
    cf = expand(ratio, depth, strict=False)
    if cf.terminal:
        raise ValueError("alpha/beta is rational")
    m_cap = math.ceil(1 / s) + 1
    certs, misses, selected, skipped = [], [], [], []
    bits = max(alpha.bits, beta.bits)
    for n in range(len(cf) - 1):
        q, q_next = cf.q[n], cf.q[n + 1]
        threshold = float(c) * q * math.log(q) if q > 1 else 0.0
        if threshold <= q + 1:
            skipped.append(n)
            continue
        if q_next < threshold:
            continue
        selected.append(n)
        found = None
        for m in range(1, m_cap + 1):
            nk = m * q
            f = frac(PrecisionReal.from_fraction(nk) / beta)
            if f <= s:
                found = (m, nk, f)
                break
        if found is None:
            misses.append({"n": n, "q_n": q, "reason": f"no m <= {m_cap} with {{m q_n / beta}} <= s"})
            continue
        m, nk, f = found
        with ctx.workprec(bits):
            d = PrecisionReal.from_arb(arb_dist(ratio.arb(bits) * nk), digits=ratio.digits)
        r = d * (PrecisionReal.from_fraction(nk).log() * nk)
        certs.append(NkCertificate(n, m, nk, q, q_next, d, f, r))
    return NkResult(certs, misses, selected, skipped, cf.valid_depth)


# -- translate products and the orbit -------------------------------------------------

@dataclass(frozen=True)
class ProductLog:
    log_magnitude: PrecisionReal
    phase: float
    clamp_events: tuple[int, ...]
    count: int


def _xball(x, bits: int) -> arb:
    if isinstance(x, PrecisionReal):
        return x.arb(bits)
    x = Fraction(x)
    return arb(x.numerator) / x.denominator


def _factor_logs(P: TrigPoly, xb: arb, offsets: Sequence[int], clamp: float, bits: int):
    """(log|P(x + j)|, arg P(x + j), clamped?) for each offset, as raw balls."""
    p = P.evaluator(bits)
    floor = arb(clamp)
    out = []
    for j in offsets:
        v = p(xb + j)
        mag = abs(v)
        if mag < floor or not mag > 0:
            out.append((floor.log(), v.arg(), True))
        else:
            out.append((mag.log(), v.arg(), False))
    return out


def product_log(P: TrigPoly, x, count: int, clamp: float = CLAMP_FLOOR) -> ProductLog:
    """log prod_{j < count} |P(x + j)| and its accumulated phase.

    Factors certified below ``clamp`` (or not certified positive) contribute
    log(clamp) and are listed in ``clamp_events``.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    bits = digits_to_bits(P.digits)
    with ctx.workprec(bits):
        xb = _xball(x, bits)
        total, phase, events = arb(0), arb(0), []
        for j, (lg, ph, clamped) in enumerate(_factor_logs(P, xb, range(count), clamp, bits)):
            total += lg
            phase += ph
            if clamped:
                events.append(j)
        ph = float(phase.mid())
    return ProductLog(PrecisionReal.from_arb(total, digits=P.digits),
                      math.remainder(ph, 2 * math.pi), tuple(events), count)


@dataclass
class OrbitTrace:
    x: Fraction | PrecisionReal
    ns: list[int]
    log_magnitudes: list[PrecisionReal]
    phases: list[float]
    clamp_events: list[int] = field(default_factory=list)

    def at(self, n: int) -> PrecisionReal:
        return self.log_magnitudes[self.ns.index(n)]

    def rows(self) -> list[tuple[int, float, float]]:
        return [(n, float(l.value), p) for n, l, p in zip(self.ns, self.log_magnitudes, self.phases)]


def orbit(P: TrigPoly, x, M: int, clamp: float = CLAMP_FLOOR) -> OrbitTrace:
    """log|f(x + n)| - log|f(x)| for |n| <= M from f(x + 1) = P(x) f(x)."""
    if M < 0:
        raise ValueError("M must be non-negative")
    bits = digits_to_bits(P.digits)
    with ctx.workprec(bits):
        xb = _xball(x, bits)
        fwd = _factor_logs(P, xb, range(M), clamp, bits)
        bwd = _factor_logs(P, xb, range(-1, -M - 1, -1), clamp, bits)
        for j, (_, _, clamped) in enumerate(fwd):
            if clamped:
                raise ClampError(j)
        for j, (_, _, clamped) in enumerate(bwd, start=1):
            if clamped:
                raise ClampError(-j)
        logs = {0: arb(0)}
        phases = {0: arb(0)}
        for n in range(1, M + 1):
            logs[n] = logs[n - 1] + fwd[n - 1][0]
            phases[n] = phases[n - 1] + fwd[n - 1][1]
            logs[-n] = logs[-n + 1] - bwd[n - 1][0]
            phases[-n] = phases[-n + 1] - bwd[n - 1][1]
        ns = list(range(-M, M + 1))
        lm = [PrecisionReal.from_arb(logs[n], digits=P.digits) for n in ns]
        ph = [math.remainder(float(phases[n].mid()), 2 * math.pi) for n in ns]
    return OrbitTrace(x, ns, lm, ph)


def round_trip_residual(P: TrigPoly, x, M: int) -> PrecisionReal:
    """Backward walk of M steps from x + M, plus the forward trace at +M (contains 0)."""
    fwd = orbit(P, x, M).at(M) if M else PrecisionReal.from_fraction(0)
    shifted = Fraction(x) + M if not isinstance(x, PrecisionReal) else x + M
    back = orbit(P, shifted, M).at(-M) if M else PrecisionReal.from_fraction(0)
    return fwd + back


# -- product comparison -----------------------------------------------------------------

@dataclass
class KeythSample:
    x: Fraction
    log_ratio: float
    log_bound: float
    passed: bool
    identity_ok: bool


@dataclass
class KeythReport:
    nk: int
    floor_pk: int
    perturbation: float
    samples: list[KeythSample]
    passed: bool
    identity_ok: bool
    uniform_bound: float | None = None
    details: dict = field(default_factory=dict)


def _index_identity(K: int) -> bool:
    """Offsets of y + n, n < K, equal those of x' - n, 1 <= n <= K, with x' = y + K."""
    return Counter(range(K)) == Counter(K - n for n in range(1, K + 1))


def keyth_compare(P: TrigPoly, cert: NkCertificate, xs: Sequence, delta=None,
                  exceptional: IntervalUnion | None = None) -> KeythReport:
    """Compare |prod P(y + n)| / |prod P(x + n)| with exp(pert * sum 1/|P(x + n)|).

    y = x - N_k/|beta| and the products run over n < [N_k/|beta|]. Shifting by
    N_k/beta leaves the beta-term unchanged and rotates the alpha-term, so
    |P(y + n) - P(x + n)| = |C1| |e^{2 pi i N_k alpha/beta} - 1| =: pert.
    """
    bits = digits_to_bits(P.digits)
    beta_abs = abs(P.beta)
    pk = PrecisionReal.from_fraction(cert.nk) / beta_abs
    K = pk.floor()
    identity_static = _index_identity(K)
    with ctx.workprec(bits):
        c1 = P.c1.acb(bits)
        turn = (P.alpha / P.beta).arb(bits) * cert.nk
        pert = abs(c1) * abs(acb(0, 2 * arb.pi() * turn).exp() - 1)
        pkb = pk.arb(bits)
        samples = []
        p = P.evaluator(bits)
        for x in xs:
            x = Fraction(x)
            if exceptional is not None and exceptional.contains(x):
                raise SampleInExceptionalSetError(f"sample {x} lies in the exceptional set")
            xb = arb(x.numerator) / x.denominator
            yb = xb - pkb
            log_x, log_y, recip = arb(0), arb(0), arb(0)
            for n in range(K):
                vx = abs(p(xb + n))
                log_x += vx.log()
                recip += 1 / vx
                log_y += abs(p(yb + n)).log()
            # same factors taken in the order x' - n, n = 1 .. K
            xp = yb + K
            log_alt = arb(0)
            for n in range(1, K + 1):
                log_alt += abs(p(xp - n)).log()
            lr = log_y - log_x
            bound = pert * recip
            ok = bool(lr <= bound)
            ident = identity_static and bool((log_alt - log_y).contains(0))
            samples.append(KeythSample(x, float(lr.mid()), float(bound.mid()), ok, ident))
        pert_f = float(pert.mid())
    uniform = None
    if find_torus_zeros(*P.coefficients).count == 0:
        mn = exact_min_modulus(*P.coefficients)
        uniform = math.exp(pert_f * K / float(mn.lower()))
    return KeythReport(cert.nk, K, pert_f, samples,
                       all(s.passed for s in samples),
                       all(s.identity_ok for s in samples) and identity_static,
                       uniform, {"delta": None if delta is None else float(Fraction(delta))})


@dataclass
class KeythHarness:
    certificate: NkCertificate
    analysis: ProductSumReport
    comparison: KeythReport


def keyth_harness(P: TrigPoly, cert: NkCertificate, delta, samples: int, seed: int = 0,
                  s=Fraction(1, 2)) -> KeythHarness:
    """Build the exceptional set at Q = [P_k] and compare products at samples outside it."""
    s = Fraction(s)
    beta_abs = abs(P.beta)
    K = (PrecisionReal.from_fraction(cert.nk) / beta_abs).floor()
    inv_beta_lo = Fraction(1) / beta_abs.upper()
    inv_beta_hi = Fraction(1) / beta_abs.lower()
    gamma_lo = min(Fraction(1), inv_beta_lo) / 2
    gamma_hi = (math.ceil(1 / s) + 1) * max(Fraction(1), inv_beta_hi) + 1
    analysis = product_reciprocal_sum_analysis(P, K, gamma_lo, gamma_hi, delta, samples, seed)
    comparison = keyth_compare(P, cert, analysis.samples, delta, analysis.exceptional)
    return KeythHarness(cert, analysis, comparison)
