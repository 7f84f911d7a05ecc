"""Certified continued fractions, Diophantine sum bounds and translate products
for three-term trigonometric polynomials."""

from .contfrac import ContinuedFraction, best_approx_brute_check, expand, quality_bounds
from .numeric import (AmbiguityError, CircleValue, ParseError, PrecisionComplex, PrecisionError,
                      PrecisionReal, circle_reduce, parse_complex, parse_real)
from .trigpoly import (TorusZeroData, TrigPoly, eval_p, find_torus_zeros, lower_bound_constant,
                       slope_parameter)
from .bounds import (IntervalUnion, SumReport, build_exceptional_set, gap_check,
                     product_reciprocal_sum_analysis, reciprocal_sum_lemma, sum_bounds_outside)
from .engine import (Configuration, NkCertificate, OrbitTrace, classify_condition, construct_nk,
                     keyth_compare, normalize_configuration, orbit, product_log)

__version__ = "0.1.0"
