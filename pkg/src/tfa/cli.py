"""Batch command line: one subcommand per operation, JSON envelopes or CSV tables.

Exit codes: 0 when every verdict passes, 1 on a failed verdict, 2 on usage,
parse or precision errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path

from flint import arb

from . import bounds, contfrac, engine, trigpoly
from .numeric import (ParseError, PrecisionError, PrecisionReal, default_digits,
                      parse_complex, parse_real)

SCHEMA_VERSION = 1

ENVELOPE_SCHEMA = {
    "type": "object",
    "required": ["schemaVersion", "command", "inputs", "result", "verdicts", "seed", "precision"],
    "properties": {
        "schemaVersion": {"const": SCHEMA_VERSION},
        "command": {"type": "string"},
        "inputs": {"type": "object"},
        "result": {"type": "object"},
        "verdicts": {
            "type": "array",
            "items": {"type": "object", "required": ["name", "passed"],
                      "properties": {"name": {"type": "string"},
                                     "passed": {"type": "boolean"}}},
        },
        "seed": {"type": ["integer", "null"]},
        "precision": {"type": "object", "required": ["digits"],
                      "properties": {"digits": {"type": "integer"}}},
    },
}

OUT_DIGITS = 40


class UsageError(Exception):
    pass


# -- serialisation ----------------------------------------------------------------

def ball(x) -> dict:
    """{value, radius} decimal strings whose interval contains x."""
    if isinstance(x, PrecisionReal):
        mid, rad = x.value, x.radius
    elif isinstance(x, arb):
        x = PrecisionReal.from_arb(x)
        mid, rad = x.value, x.radius
    else:
        mid, rad = Fraction(x), Fraction(0)
    text = _decimal(mid)
    err = abs(Fraction(Decimal(text)) - mid) + rad
    return {"value": text, "radius": _round_up(err)}


def _decimal(q: Fraction) -> str:
    if q == 0:
        return "0"
    if q.denominator == 1:
        return str(q.numerator)
    exp = math.floor(math.log10(abs(q.numerator)) - math.log10(q.denominator))
    scale = OUT_DIGITS - 1 - exp
    n = round(q * Fraction(10) ** scale)
    with localcontext() as ctx:
        ctx.prec = OUT_DIGITS + 10
        d = Decimal(n).scaleb(-scale).normalize()
    return format(d, "f") if -30 < exp < 30 else format(d, "e")


def _round_up(q: Fraction) -> str:
    if q == 0:
        return "0"
    exp = math.floor(math.log10(q.numerator) - math.log10(q.denominator)) - 2
    n = math.ceil(q / Fraction(10) ** exp)
    return format(Decimal(n).scaleb(exp).normalize(), "e")


def _num(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


class Report:
    def __init__(self, command: str, inputs: dict, digits: int, seed: int | None = None):
        self.command = command
        self.inputs = inputs
        self.digits = digits
        self.seed = seed
        self.result: dict = {}
        self.verdicts: list[dict] = []
        self.table: tuple[list[str], list[list]] | None = None

    def verdict(self, name: str, passed: bool) -> None:
        self.verdicts.append({"name": name, "passed": bool(passed)})

    @property
    def passed(self) -> bool:
        return all(v["passed"] for v in self.verdicts)

    def envelope(self) -> dict:
        return {"schemaVersion": SCHEMA_VERSION, "command": self.command,
                "inputs": self.inputs, "result": self.result, "verdicts": self.verdicts,
                "seed": self.seed, "precision": {"digits": self.digits}}

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return json.dumps(self.envelope(), sort_keys=True, indent=2) + "\n"
        if self.table is None:
            raise UsageError(f"{self.command} has no tabular output; use --format json")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.table[0])
        w.writerows(self.table[1])
        return buf.getvalue()


# -- argument helpers ---------------------------------------------------------------

def _real(args, name):
    spec = getattr(args, name)
    if spec is None:
        raise UsageError(f"--{name} is required")
    return parse_real(spec, args.digits)


def _poly(args) -> trigpoly.TrigPoly:
    cs = [parse_complex(getattr(args, f"c{i}"), args.digits) for i in range(3)]
    return trigpoly.TrigPoly.build(*cs, _real(args, "alpha"), _real(args, "beta"))


def _coeffs(args):
    return [parse_complex(getattr(args, f"c{i}"), args.digits) for i in range(3)]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.replace(" ", "").split(",") if t]


def _read_points(path: str, digits: int) -> list[PrecisionReal]:
    pts = []
    for row in csv.reader(Path(path).read_text().splitlines()):
        if row and row[0].strip() and not row[0].lstrip().startswith("#"):
            pts.append(parse_real(row[0].strip(), digits))
    return pts


def _zero_payload(data: trigpoly.TorusZeroData) -> dict:
    return {"count": data.count,
            "zeros": [{"gamma1": ball(g1), "gamma2": ball(g2)} for g1, g2 in data.zeros],
            "t": None if data.t is None else ball(data.t),
            "discriminant": ball(data.discriminant),
            "residuals": [_num(r) for r in data.residuals]}


def _sum_payload(r: bounds.SumReport) -> dict:
    value = r.value
    if isinstance(value, PrecisionReal):
        value = ball(value)
    bound = r.bound
    if isinstance(bound, Fraction):
        bound = ball(bound)
    return {"name": r.name, "value": value, "bound": bound, "reference": r.reference,
            "constantFit": r.constant_fit, "designConstant": r.design_constant,
            "witnesses": r.witnesses, "details": r.details}


def _cert_payload(c: engine.NkCertificate) -> dict:
    return {"nIndex": c.n_index, "m": c.m, "Nk": str(c.nk), "qN": str(c.q_n),
            "qNext": str(c.q_next), "distAlphaBeta": ball(c.dist_alpha_beta),
            "fracOverBeta": ball(c.frac_over_beta), "ratio": ball(c.ratio)}


# -- subcommands ----------------------------------------------------------------------

def cmd_cf(args, rep: Report):
    x = _real(args, "value")
    cf = contfrac.expand(x, args.depth, strict=True)
    rep.result = {"quotients": [str(a) for a in cf.quotients],
                  "p": [str(p) for p in cf.p], "q": [str(q) for q in cf.q],
                  "validDepth": cf.valid_depth, "terminal": cf.terminal}
    rep.verdict("depth_reached", cf.terminal or len(cf) >= args.depth)
    rep.verdict("determinant_identity", contfrac.determinant_ok(cf))
    rep.table = (["k", "a", "p", "q"],
                 [[k, a, p, q] for k, (a, p, q) in enumerate(zip(cf.quotients, cf.p, cf.q))])


def cmd_best_approx(args, rep: Report):
    r = contfrac.best_approx_brute_check(_real(args, "value"), args.n, args.cap)
    rep.result = {"n": r.n, "qN": r.q_n, "qNext": r.q_next, "argmin": r.argmin,
                  "minDist": None if r.min_dist is None else ball(r.min_dist),
                  "distQn": ball(r.dist_qn)}
    rep.verdict("best_approximation", r.passed)


def cmd_quality(args, rep: Report):
    r = contfrac.quality_bounds(_real(args, "value"), args.n)
    rep.result = {"n": r.n, "qN": r.q_n, "qNext": r.q_next, "distQn": ball(r.dist_qn),
                  "lower": ball(r.lower_bound), "upper": ball(r.upper_bound)}
    rep.verdict("sandwich", r.inside)


def cmd_zeros(args, rep: Report):
    data = trigpoly.find_torus_zeros(*_coeffs(args))
    rep.result = _zero_payload(data)
    rep.verdict("residuals_below_1e-30", all(r < 1e-30 for r in data.residuals))
    rep.table = (["gamma1", "gamma2", "t"],
                 [[float(g1.value), float(g2.value), float(data.t.value)] for g1, g2 in data.zeros])


def cmd_lower_bound(args, rep: Report):
    r = trigpoly.lower_bound_constant(*_coeffs(args), grid_n=args.grid)
    rep.result = {"constant": r.constant, "argmin": list(r.argmin), "gridN": r.grid_n,
                  "refine": r.refine, "zeroFree": r.zero_free, "analyticMin": r.analytic_min}
    rep.verdict("positive_constant", r.constant > 0)


def cmd_gap(args, rep: Report):
    r = bounds.gap_check(_ints(args.ks), _real(args, "alpha"), args.n)
    rep.result = _sum_payload(r)
    rep.verdict("gap", r.passed)


def cmd_lemma3(args, rep: Report):
    r = bounds.reciprocal_sum_lemma(_ints(args.ks), _real(args, "alpha"), _real(args, "x"), args.n)
    rep.result = _sum_payload(r)
    rep.verdict("reciprocal_sum_bound", r.passed)


def cmd_excset(args, rep: Report):
    pts = _read_points(args.points, args.digits)
    E = bounds.build_exceptional_set(pts, Fraction(args.delta))
    rep.result = {"nPoints": E.n_points, "measure": ball(E.measure), "delta": args.delta,
                  "levelFirst": E.level_first, "cap": E.cap, "intervals": len(E.union),
                  "stage1Measure": ball(E.stage1.measure), "stage2Measure": ball(E.stage2.measure)}
    rep.verdict("measure_le_delta", E.measure <= E.delta)
    rep.table = (["start", "end"], [[str(a), str(b)] for a, b in E.union.intervals])


def cmd_outside_sums(args, rep: Report):
    pts = _read_points(args.points, args.digits)
    E = bounds.build_exceptional_set(pts, Fraction(args.delta))
    r1, r2 = bounds.sum_bounds_outside(pts, E, args.samples, args.seed)
    rep.result = {"measure": ball(E.measure), "first": _sum_payload(r1), "second": _sum_payload(r2)}
    rep.verdict("measure_le_delta", E.measure <= E.delta)
    rep.verdict("first_sum", r1.passed)
    rep.verdict("second_sum", r2.passed)


def cmd_prodsum(args, rep: Report):
    r = bounds.product_reciprocal_sum_analysis(
        _poly(args), args.q, Fraction(args.gamma_lo), Fraction(args.gamma_hi),
        Fraction(args.delta), args.samples, args.seed, depth=args.depth,
        assume_case2=args.assume_case2)
    rep.result = {"case": r.case, "convergentIndex": r.convergent_index, "qN": r.q_n,
                  "measure": ball(r.exceptional.measure), "report": _sum_payload(r.report)}
    rep.verdict("sum_le_bound", r.report.passed)
    rep.table = (["x", "sum"], [[float(x), s] for x, s in zip(r.samples, r.sums)])


def cmd_classify(args, rep: Report):
    ratio = _real(args, "value") if args.value else _real(args, "alpha") / _real(args, "beta")
    c = engine.classify_condition(ratio, args.depth)
    rep.result = {"depthReached": c.depth_reached, "rationalCase": c.rational_case,
                  "nlognCondition": c.nlogn_condition, "powerCondition": c.power_condition,
                  "quotientRatio": c.quotient_ratio, "denominatorRatio": c.denominator_ratio,
                  "runningMaxQuotient": c.running_max_quotient,
                  "runningMaxDenominator": c.running_max_denominator, "note": c.note}
    n = max(len(c.quotient_ratio), len(c.denominator_ratio))
    pad = lambda xs, i: xs[i] if i < len(xs) else ""
    rep.table = (["i", "quotientRatio", "denominatorRatio"],
                 [[i, pad(c.quotient_ratio, i), pad(c.denominator_ratio, i)] for i in range(n)])


def _nk(args) -> engine.NkResult:
    return engine.construct_nk(_real(args, "alpha"), _real(args, "beta"),
                               Fraction(args.s), args.depth, Fraction(args.c))


def cmd_nk(args, rep: Report):
    r = _nk(args)
    s = Fraction(args.s)
    rep.result = {"certificates": [_cert_payload(c) for c in r.certificates],
                  "misses": r.misses, "selected": r.selected,
                  "skippedVacuous": r.skipped_vacuous, "depthReached": r.depth_reached}
    checks = [c.check(s) for c in r.certificates]
    for key in ("nk_is_m_qn", "frac_le_s", "m_le_cap", "dist_le_m_over_qnext"):
        rep.verdict(key, all(ch[key] for ch in checks))
    rep.table = (["nIndex", "m", "Nk", "distAlphaBeta", "fracOverBeta", "ratio"],
                 [[c.n_index, c.m, c.nk, float(c.dist_alpha_beta.value),
                   float(c.frac_over_beta.value), float(c.ratio.value)] for c in r.certificates])


def cmd_product(args, rep: Report):
    r = engine.product_log(_poly(args), _real(args, "x"), args.count)
    rep.result = {"logMagnitude": ball(r.log_magnitude), "phase": r.phase,
                  "clampEvents": list(r.clamp_events), "count": r.count}


def cmd_orbit(args, rep: Report):
    tr = engine.orbit(_poly(args), _real(args, "x"), args.m)
    rep.result = {"n": tr.ns, "logMagnitude": [ball(v) for v in tr.log_magnitudes],
                  "phase": tr.phases, "clampEvents": tr.clamp_events}
    rep.table = (["n", "logMagnitude", "phase"], [list(r) for r in tr.rows()])


def _pick_certificate(certs, max_floor: int, beta: PrecisionReal):
    for c in certs:
        K = (PrecisionReal.from_fraction(c.nk) / abs(beta)).floor()
        if 2 <= K <= max_floor:
            return c
    return None


def _keyth(args, rep: Report, P, nk: engine.NkResult, prefix: str = ""):
    cert = _pick_certificate(nk.certificates, args.max_floor, P.beta)
    if cert is None:
        rep.result[prefix + "keyth"] = None
        rep.verdict(prefix + "keyth_certificate_available", False)
        return None
    h = engine.keyth_harness(P, cert, Fraction(args.delta), args.samples, args.seed,
                             Fraction(args.s))
    cmp = h.comparison
    rep.result[prefix + "keyth"] = {
        "certificate": _cert_payload(cert), "floorPk": cmp.floor_pk,
        "perturbation": cmp.perturbation, "measure": ball(h.analysis.exceptional.measure),
        "case": h.analysis.case, "uniformBound": cmp.uniform_bound,
        "samples": [{"x": str(s.x), "logRatio": s.log_ratio, "logBound": s.log_bound}
                    for s in cmp.samples]}
    rep.verdict(prefix + "ratio_le_bound", cmp.passed)
    rep.verdict(prefix + "index_identity", cmp.identity_ok)
    rep.table = (["x", "logRatio", "logBound", "passed"],
                 [[float(s.x), s.log_ratio, s.log_bound, s.passed] for s in cmp.samples])
    return h


def cmd_keyth(args, rep: Report):
    _keyth(args, rep, _poly(args), _nk(args))


def cmd_normalize(args, rep: Report):
    rows = [r for r in csv.reader(Path(args.config).read_text().splitlines())
            if r and r[0].strip() and not r[0].lstrip().startswith("#")]
    if len(rows) != 4 or any(len(r) != 2 for r in rows):
        raise UsageError("configuration file needs four rows of two columns")
    cfg = engine.Configuration.build(
        [(parse_real(a.strip(), args.digits), parse_real(b.strip(), args.digits)) for a, b in rows])
    n = engine.normalize_configuration(cfg, args.base)
    rep.result = {"alpha": ball(n.alpha), "beta": ball(n.beta), "collinear": list(n.collinear),
                  "offLine": n.off_line, "base": n.base,
                  "steps": [{"name": s.name,
                             "matrix": [[ball(e) for e in row] for row in s.matrix],
                             "translation": [ball(e) for e in s.translation]} for s in n.steps]}


def cmd_report(args, rep: Report):
    P = _poly(args)
    ratio = P.alpha / P.beta
    c = engine.classify_condition(ratio, args.depth)
    rep.result["classify"] = {"nlognCondition": c.nlogn_condition,
                              "powerCondition": c.power_condition,
                              "rationalCase": c.rational_case, "depthReached": c.depth_reached}
    data = trigpoly.find_torus_zeros(*P.coefficients)
    rep.result["zeros"] = _zero_payload(data)
    rep.verdict("zero_residuals", all(r < 1e-30 for r in data.residuals))
    if c.rational_case:
        rep.result["note"] = "alpha/beta is rational; the pipeline stops after classification"
        return
    nk = _nk(args)
    rep.result["nk"] = {"certificates": [_cert_payload(x) for x in nk.certificates],
                        "misses": nk.misses}
    s = Fraction(args.s)
    rep.verdict("nk_certificates_valid", all(all(x.check(s).values()) for x in nk.certificates))
    h = _keyth(args, rep, P, nk)
    if h is not None:
        rep.result["prodsum"] = _sum_payload(h.analysis.report)
        rep.verdict("prodsum_bound", h.analysis.report.passed)


# -- parser ----------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--digits", type=_positive, default=None, help="working precision in decimal digits")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--threads", type=int, default=None,
                   help="worker count (accepted; computation is single-process)")
    p.add_argument("--seed", type=int, default=0)


def _add_coeffs(p):
    for i in range(3):
        p.add_argument(f"--c{i}", required=True, help="complex literal, e.g. 1+0i")


def _add_freqs(p):
    p.add_argument("--alpha", required=True)
    p.add_argument("--beta", required=True)


def _add_nk(p):
    p.add_argument("--s", default="1/2")
    p.add_argument("--depth", type=int, default=40)
    p.add_argument("--c", default="1")


def _add_keyth(p):
    p.add_argument("--delta", default="1/10")
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--max-floor", type=int, default=10**5, dest="max_floor")


COMMANDS = {}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tfa", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        COMMANDS[name] = fn
        return p

    p = add("cf", cmd_cf, "continued-fraction expansion")
    p.add_argument("--value", required=True)
    p.add_argument("--depth", type=int, default=20)
    for name, fn in (("best-approx", cmd_best_approx), ("quality", cmd_quality)):
        p = add(name, fn, "best-approximation check" if fn is cmd_best_approx
                else "two-sided convergent quality bound")
        p.add_argument("--value", required=True)
        p.add_argument("--n", type=int, required=True)
        if fn is cmd_best_approx:
            p.add_argument("--cap", type=int, default=contfrac.BRUTE_FORCE_CAP)
    p = add("zeros", cmd_zeros, "torus zeros and slope parameter")
    _add_coeffs(p)
    p = add("lower-bound", cmd_lower_bound, "empirical lower-bound constant")
    _add_coeffs(p)
    p.add_argument("--grid", type=int, default=256)
    p = add("gap", cmd_gap, "pairwise gap check for an orbit window")
    p.add_argument("--alpha", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--ks", required=True, help="comma-separated increasing integers")
    p = add("lemma3", cmd_lemma3, "reciprocal-sum bound for an orbit window")
    p.add_argument("--alpha", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--ks", required=True)
    for name, fn in (("excset", cmd_excset), ("outside-sums", cmd_outside_sums)):
        p = add(name, fn, "exceptional set" if fn is cmd_excset else "sampled sums outside E")
        p.add_argument("--points", required=True, help="CSV file, one real per line")
        p.add_argument("--delta", default="1/10")
        if fn is cmd_outside_sums:
            p.add_argument("--samples", type=int, default=1000)
    p = add("prodsum", cmd_prodsum, "sum of 1/|P(x+n)| outside an exceptional set")
    _add_coeffs(p)
    _add_freqs(p)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--gamma-lo", default="1", dest="gamma_lo")
    p.add_argument("--gamma-hi", default="4", dest="gamma_hi")
    p.add_argument("--delta", default="1/10")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--depth", type=int, default=60)
    p.add_argument("--assume-case2", action="store_true", dest="assume_case2")
    p = add("classify", cmd_classify, "finite-depth growth-condition classifier")
    p.add_argument("--value", default=None)
    p.add_argument("--alpha", default=None)
    p.add_argument("--beta", default=None)
    p.add_argument("--depth", type=int, default=60)
    p = add("nk", cmd_nk, "pigeonhole N_k certificates")
    _add_freqs(p)
    _add_nk(p)
    for name, fn in (("product", cmd_product), ("orbit", cmd_orbit)):
        p = add(name, fn, "log of a translate product" if fn is cmd_product else "orbit trace")
        _add_coeffs(p)
        _add_freqs(p)
        p.add_argument("--x", required=True)
        if fn is cmd_product:
            p.add_argument("--count", type=int, required=True)
        else:
            p.add_argument("--m", type=int, required=True)
    p = add("keyth", cmd_keyth, "product comparison at the smallest usable certificate")
    _add_coeffs(p)
    _add_freqs(p)
    _add_nk(p)
    _add_keyth(p)
    p = add("normalize", cmd_normalize, "normalise a four-point configuration")
    p.add_argument("--config", required=True, help="CSV file, four rows of two reals")
    p.add_argument("--base", type=int, default=None)
    p = add("report", cmd_report, "classify, zeros, nk, prodsum and keyth in one run")
    _add_coeffs(p)
    _add_freqs(p)
    _add_nk(p)
    _add_keyth(p)
    return parser


_INPUT_SKIP = {"format", "out", "threads", "digits", "seed", "command"}


def _suggest_digits(exc, args) -> int:
    # quotient count grows roughly linearly with digits, so scale by the shortfall
    valid = getattr(exc, "valid_depth", None)
    wanted = getattr(args, "depth", None)
    if valid and wanted and wanted > valid:
        return max(2 * args.digits, math.ceil(2 * args.digits * wanted / valid))
    return 2 * args.digits


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def run(argv: list[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    args.digits = args.digits or default_digits()
    inputs = {k: v for k, v in sorted(vars(args).items()) if k not in _INPUT_SKIP}
    rep = Report(args.command, inputs, args.digits, args.seed)
    try:
        COMMANDS[args.command](args, rep)
        text = rep.render(args.format)
    except (PrecisionError, contfrac.DepthExhaustedError) as exc:
        suggestion = _suggest_digits(exc, args)
        print(f"tfa {args.command}: precision error: {exc}; retry with --digits {suggestion}",
              file=sys.stderr)
        return 2
    except (UsageError, ParseError, ValueError, ArithmeticError, OSError) as exc:
        print(f"tfa {args.command}: {exc}", file=sys.stderr)
        return 2
    if args.out:
        Path(args.out).write_text(text)
    else:
        stdout.write(text)
    return 0 if rep.passed else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
