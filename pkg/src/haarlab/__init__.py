"""Exact-arithmetic certificates for digit-defined compact sets.

The package builds compact subsets of the line from per-level digit
constraints in mixed-radix systems, projects them to exact closed-interval
unions at any finite depth, and emits machine-checkable certificates about
translate intersections: CERTIFIED_EMPTY with the refinement depth,
POINT_FOUND with an explicit digit word and per-translate membership
checks, or INCONCLUSIVE_AT_DEPTH with the residual intervals.  All
arithmetic is rational; nothing is floated.

Layers, bottom up:

* numeric: mixed-radix systems, digit words, carry-exact addition;
* intervals: exact closed-interval unions and their set algebra;
* digitsets: symbolic set expressions and their depth-k projections;
* constructions: the named sets (ternary, gap(m), haar_family, cl(l),
  w(k,l), notideal_*, nullmeager) plus their companion data;
* witness: blockwise witness Cantor sets and sparse sub-Cantor extraction;
* certify: the certificate producers and the independent re-verifier;
* cli: the `haarlab` command.
"""

from .certify import (
    CERTIFIED_EMPTY,
    INCONCLUSIVE_AT_DEPTH,
    POINT_FOUND,
    Certificate,
    NoAdmissibleDigit,
    NotAFixedPoint,
    VerificationReport,
    cantor_avoiding_pairs,
    carry_intersection_point,
    certify_empty_intersection,
    certify_haar1_gap_sequence,
    greedy_common_point,
    refute_haar1_difference_interval,
    refute_haar_countable,
    refute_haar_finite_X,
    refute_null_finite,
    reverify_certificate,
    sampled_tuple_certificate,
    step4_separation,
    verify_haar_n,
)
from .constructions import (
    check_L_bounds,
    lem2_translates,
    m_level,
    make,
    parse_construction,
    resolve_set_descriptor,
)
from .digitsets import (
    DigitSetExpr,
    FiniteUnion,
    Product,
    Reflect,
    UnionFamily,
    contains_at_depth,
    is_admissible_prefix,
    project,
)
from .intervals import (
    CapacityExceeded,
    IntervalUnion,
    get_max_intervals,
    set_max_intervals,
)
from .numeric import (
    DigitWord,
    MixedRadixSystem,
    add_with_carry,
    eval_word,
    expand,
    format_rational,
    parse_rational,
)
from .witness import (
    BlockCantorWitness,
    build_cl_witness,
    build_notideal_D,
    build_notideal_E,
    build_ternary_haar2_witness,
    extract_sparse_subcantor,
    scaled_ternary_increment_tree,
)

__version__ = "0.1.0"

__all__ = [
    "CERTIFIED_EMPTY",
    "POINT_FOUND",
    "INCONCLUSIVE_AT_DEPTH",
    "Certificate",
    "VerificationReport",
    "NoAdmissibleDigit",
    "NotAFixedPoint",
    "CapacityExceeded",
    "certify_empty_intersection",
    "verify_haar_n",
    "sampled_tuple_certificate",
    "certify_haar1_gap_sequence",
    "refute_haar1_difference_interval",
    "greedy_common_point",
    "refute_haar_finite_X",
    "refute_null_finite",
    "refute_haar_countable",
    "carry_intersection_point",
    "step4_separation",
    "cantor_avoiding_pairs",
    "reverify_certificate",
    "make",
    "parse_construction",
    "resolve_set_descriptor",
    "check_L_bounds",
    "lem2_translates",
    "m_level",
    "DigitSetExpr",
    "Product",
    "FiniteUnion",
    "Reflect",
    "UnionFamily",
    "project",
    "is_admissible_prefix",
    "contains_at_depth",
    "IntervalUnion",
    "get_max_intervals",
    "set_max_intervals",
    "MixedRadixSystem",
    "DigitWord",
    "expand",
    "eval_word",
    "add_with_carry",
    "parse_rational",
    "format_rational",
    "BlockCantorWitness",
    "build_ternary_haar2_witness",
    "build_cl_witness",
    "build_notideal_D",
    "build_notideal_E",
    "scaled_ternary_increment_tree",
    "extract_sparse_subcantor",
    "__version__",
]
