"""Command-line front end: one subcommand per certified statement.

    haarlab verify  {ternary-haar2 | cl-haarN --l L | notideal-D |
                     notideal-E | haar1-gaps --set NAME}
    haarlab refute  {haar1 --set NAME --candidate-interval LO HI |
                     haarN --family haar_family(n) | haar-finite-X |
                     null-finite-Y | haar-countable --set nullmeager}
    haarlab construct --name NAME --depth K --emit FILE
    haarlab check FILE

Every run prints a human summary (or the full report with --json) and can
write the report to a file with --emit; `check` re-verifies such a report
independently.  Exit codes: 0 when the claim is certified or the point is
found, 2 when the outcome is INCONCLUSIVE_AT_DEPTH at the depth cap, 1 on
usage or internal errors.

Depth policy: --depth fixes the depth cap exactly; without it each command
starts from its natural depth and doubles up to --max-depth (default caps
are generous because the certifiers stop as soon as they decide).  Exact
rationals on the command line and in --points files are "p/q" strings;
decimals are rejected.  HAARLAB_MAX_INTERVALS overrides the global interval
cap.  Reports are reproducible byte for byte apart from elapsed_ms fields.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from .certify import (
    INCONCLUSIVE_AT_DEPTH,
    cantor_avoiding_pairs,
    carry_intersection_point,
    certify_haar1_gap_sequence,
    refute_haar1_difference_interval,
    refute_haar_countable,
    refute_haar_finite_X,
    refute_null_finite,
    reverify_certificate,
    sampled_tuple_certificate,
    verify_haar_n,
)
from .constructions import construction_descriptor, make, parse_construction
from .digitsets import project
from .intervals import IntervalUnion, set_max_intervals
from .numeric import format_rational, parse_rational
from .witness import (
    build_cl_witness,
    build_notideal_D,
    build_notideal_E,
    build_ternary_haar2_witness,
    extract_sparse_subcantor,
    scaled_ternary_increment_tree,
)

__all__ = ["main", "run"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 2

DEFAULT_DEPTH_CAP = 1024

# statuses and conclusions that map to exit 0
_SETTLED = {"CERTIFIED_EMPTY", "POINT_FOUND", "ALL_CERTIFIED"}


class UsageError(Exception):
    """Bad command line; printed with the usage string, exit 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); remap to exit 1
        raise UsageError(f"{self.prog}: {message}")


def _rational(text: str) -> Fraction:
    return parse_rational(text.strip())


def _read_points(path: str) -> list:
    """Exact rationals, one "p/q" per line; blanks and # comments skipped."""
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                values.append(parse_rational(line))
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from None
    if not values:
        raise UsageError(f"{path}: no points found")
    return values


def _jsonable(result) -> dict:
    return result.to_jsonable() if hasattr(result, "to_jsonable") else result


def _status_of(data: dict) -> str:
    return data.get("aggregate") or data.get("status") or ""


def _exit_code(data: dict) -> int:
    return EXIT_OK if _status_of(data) in _SETTLED else EXIT_INCONCLUSIVE


def _depth_plan(args, start: int):
    """(start, cap) for the escalation loop; explicit --depth pins the cap."""
    if args.depth is not None:
        if args.depth < 1:
            raise UsageError("--depth must be >= 1")
        start = args.depth
        cap = args.max_depth if args.max_depth is not None else args.depth
    else:
        cap = args.max_depth if args.max_depth is not None else \
            max(start, DEFAULT_DEPTH_CAP)
    if cap < start:
        raise UsageError("--max-depth must be >= the starting depth")
    return start, cap


def _escalate(run, start: int, cap: int) -> dict:
    depth = start
    data = _jsonable(run(depth))
    while _status_of(data) == INCONCLUSIVE_AT_DEPTH and depth < cap:
        depth = min(depth * 2, cap)
        data = _jsonable(run(depth))
    return data


def _first_slotted_generation(witness) -> int:
    g = witness.first_generation
    while witness.scheme.tuple_size(g) is None:
        g += 1
    return g


def _slot_end_depth(witness, generation: int, members) -> int:
    """Depth that reaches just past the tuple's designated slot."""
    if members is None:
        members = tuple(range(witness.scheme.tuple_size(generation)))
    p = witness.designated_slot(generation, tuple(sorted(members)))
    return witness.slot_levels(generation, p)[1] + 1


def _parse_members(text):
    if text is None:
        return None
    try:
        return tuple(int(piece) for piece in text.split(","))
    except ValueError:
        raise UsageError(f"--members wants comma-separated integers, got {text!r}") \
            from None


def _set_name_of(claim_set: dict):
    return claim_set.get("set", {}).get("name")


def _summary_lines(data: dict) -> list:
    if data.get("kind") == "haar-n-report":
        claim = data["claim"]
        lines = [
            f"claim: every {claim['n'] + 1}-tuple of generation-"
            f"{claim['generation']} branch translates has empty intersection",
            f"set: {_set_name_of(claim['set']) or 'structural'}",
            f"witness: {claim['witness']['scheme']}",
            f"tuples: {len(claim['tuples'])}"
            + (" (sampled)" if claim["sampled"] else ""),
        ]
        if data["certificates"]:
            lines.append("max certified depth: "
                         + str(max(c["depth"] for c in data["certificates"])))
        lines.append(f"aggregate: {data['aggregate']}")
        return lines
    if data.get("kind") == "projection":
        return [
            f"claim: depth-{data['depth']} projection of "
            f"{_set_name_of(data['set']) or 'structural set'}",
            f"intervals: {len(data['projection'])}",
        ]
    claim = data["claim"]
    lines = [f"claim: {claim['kind']}"]
    name = _set_name_of(claim.get("set", {}))
    if name:
        lines.append(f"set: {name}")
    if "translates" in claim:
        lines.append(f"translates: {len(claim['translates'])}")
    if "gaps" in claim:
        lines.append(f"gaps: {len(claim['gaps'])}")
    if "anchors" in claim:
        lines.append(f"anchors: {', '.join(claim['anchors'])}")
    if "direction" in claim:
        lines.append(f"direction: {claim['direction']}, "
                     f"limit {claim['limit']}, count {claim['count']}")
    if "points" in claim:
        lines.append(f"points: {len(claim['points'])}")
    if claim.get("conclusion"):
        lines.append(f"conclusion: {claim['conclusion']}")
    if claim.get("found_point"):
        lines.append(f"point: {claim['found_point']}")
    elif data.get("point"):
        lines.append(f"point: {data['point']['value']}")
    if data.get("residual"):
        lines.append(f"residual intervals: {len(data['residual'])}")
    lines.append(f"status: {data['status']}")
    lines.append(f"depth: {data['depth']}")
    return lines


def _deliver(data: dict, args) -> None:
    text = json.dumps(data, indent=2)
    if getattr(args, "emit", None):
        with open(args.emit, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    if args.json:
        print(text)
    else:
        for line in _summary_lines(data):
            print(line)


# ---------------------------------------------------------------------------
# verify targets
# ---------------------------------------------------------------------------


def _cmd_verify_ternary(args) -> int:
    witness = build_ternary_haar2_witness()
    nc = make("ternary")
    if args.generation < witness.first_generation:
        raise UsageError(f"generations start at {witness.first_generation}")
    start, cap = _depth_plan(args, witness.block_bounds(args.generation)[1])
    data = _escalate(
        lambda depth: verify_haar_n(
            nc.expr, witness, 2, args.generation, depth,
            set_name=nc.text, workers=args.workers),
        start, cap,
    )
    _deliver(data, args)
    return _exit_code(data)


def _cmd_verify_cl(args) -> int:
    witness = build_cl_witness(args.l)
    nc = make("cl", l=args.l)
    members = _parse_members(args.members)
    generation = args.generation if args.generation is not None \
        else _first_slotted_generation(witness)
    start, cap = _depth_plan(args, _slot_end_depth(witness, generation, members))
    data = _escalate(
        lambda depth: sampled_tuple_certificate(
            nc.expr, witness, generation, depth, members, set_name=nc.text),
        start, cap,
    )
    _deliver(data, args)
    return _exit_code(data)


def _cmd_verify_notideal(args, build) -> int:
    witness = build()
    target = make("cl", l=0)  # the layer the designated slot collides with
    members = _parse_members(args.members)
    generation = args.generation if args.generation is not None \
        else _first_slotted_generation(witness)
    start, cap = _depth_plan(args, _slot_end_depth(witness, generation, members))
    data = _escalate(
        lambda depth: sampled_tuple_certificate(
            target.expr, witness, generation, depth, members,
            set_name=target.text),
        start, cap,
    )
    _deliver(data, args)
    return _exit_code(data)


def _cmd_verify_gaps(args) -> int:
    nc = parse_construction(args.set)
    if args.points:
        gaps = _read_points(args.points)
    else:
        canonical = nc.companions.get("gaps")
        if canonical is None:
            raise UsageError(
                f"{nc.text} has no canonical gap sequence; supply --points")
        gaps = canonical(args.count)
    start, cap = _depth_plan(args, 64)
    data = _escalate(
        lambda depth: certify_haar1_gap_sequence(
            nc.expr, gaps, depth, set_name=nc.text),
        start, cap,
    )
    _deliver(data, args)
    return _exit_code(data)


# ---------------------------------------------------------------------------
# refute targets
# ---------------------------------------------------------------------------


def _cmd_refute_haar1(args) -> int:
    nc = parse_construction(args.set)
    lo, hi = args.candidate_interval
    candidate = IntervalUnion([(lo, hi)])
    cert = refute_haar1_difference_interval(nc.expr, candidate, set_name=nc.text)
    data = _jsonable(cert)
    _deliver(data, args)
    return _exit_code(data)


def _cmd_refute_haarN(args) -> int:
    nc = parse_construction(args.family)
    if nc.name != "haar_family" or "m" in nc.params:
        raise UsageError("--family wants the full union, e.g. haar_family(2)")
    n = nc.params["n"]
    anchors = _read_points(args.points) if args.points \
        else [Fraction(m, 25) for m in range(n + 1)]
    start, cap = _depth_plan(args, 30)
    data = _escalate(
        lambda depth: carry_intersection_point(n, anchors, depth), start, cap)
    _deliver(data, args)
    return _exit_code(data)


def _cmd_refute_finite(args) -> int:
    translates = _read_points(args.points) if args.points else [
        Fraction(1, 25), Fraction(1, 1875), Fraction(1, 421875),
    ]
    start, cap = _depth_plan(args, 4)
    data = _escalate(
        lambda depth: refute_haar_finite_X(translates, depth), start, cap)
    _deliver(data, args)
    return _exit_code(data)


def _cmd_refute_null_finite(args) -> int:
    nc = make("notideal_Y")
    limit = args.limit
    if args.points:
        sequence = _read_points(args.points)
    else:
        steps = [Fraction(1, 25), Fraction(1, 1875), Fraction(1, 421875)]
        sign = 1 if args.direction == "decreasing" else -1
        sequence = [limit + sign * s for s in steps]
    count = args.count if args.count is not None else len(sequence)
    start, cap = _depth_plan(args, 4)
    data = _escalate(
        lambda depth: refute_null_finite(
            nc.expr, sequence, count, depth, limit=limit, set_name=nc.text),
        start, cap,
    )
    _deliver(data, args)
    return _exit_code(data)


def _cmd_refute_countable(args) -> int:
    nc = parse_construction(args.set)
    if nc.name != "nullmeager":
        raise UsageError("--set wants a nullmeager construction")
    if args.points:
        points = _read_points(args.points)
    else:
        subcantor = extract_sparse_subcantor(
            scaled_ternary_increment_tree(), nc.system, 2)
        points = [subcantor.branch_value(b, 2) for b in range(4)]
    prefix = _parse_members(args.prefix) or ()
    start, cap = _depth_plan(args, 8)
    data = _escalate(
        lambda depth: refute_haar_countable(
            nc.expr, points, depth, prefix=prefix, set_name=nc.text),
        start, cap,
    )
    _deliver(data, args)
    return _exit_code(data)


# ---------------------------------------------------------------------------
# construct / check
# ---------------------------------------------------------------------------


def _cmd_construct(args) -> int:
    nc = parse_construction(args.name)
    if args.depth < 1:
        raise UsageError("--depth must be >= 1")
    cells = project(nc.expr, args.depth)
    data = {
        "kind": "projection",
        "set": construction_descriptor(nc),
        "depth": args.depth,
        "projection": [[format_rational(lo), format_rational(hi)]
                       for lo, hi in cells],
    }
    _deliver(data, args)
    return EXIT_OK


def _cmd_check(args) -> int:
    with open(args.report, encoding="utf-8") as fh:
        data = json.load(fh)
    result = reverify_certificate(data)
    if args.json:
        print(json.dumps(result, indent=2))
    else:
        print(f"report: {args.report}")
        print(f"recomputed: {result['recomputed_status']}")
        print(f"detail: {result['detail']}")
        print(f"ok: {result['ok']}")
    return EXIT_OK if result["ok"] else EXIT_ERROR


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


def _add_common(parser, depth=True):
    parser.add_argument("--json", action="store_true",
                        help="print the full JSON report instead of a summary")
    parser.add_argument("--emit", metavar="FILE",
                        help="also write the JSON report to FILE")
    if depth:
        parser.add_argument("--depth", type=int, default=None,
                            help="projection depth cap (exact; no escalation)")
        parser.add_argument("--max-depth", type=int, default=None,
                            help="escalation cap when --depth is not fixed")


def build_parser() -> _Parser:
    parser = _Parser(
        prog="haarlab",
        description="exact certificates for digit-defined compact sets",
    )
    verbs = parser.add_subparsers(dest="verb", required=True,
                                  parser_class=_Parser)

    verify = verbs.add_parser("verify", help="certify a smallness witness")
    vt = verify.add_subparsers(dest="target", required=True,
                               parser_class=_Parser)

    p = vt.add_parser("ternary-haar2",
                      help="all branch triples of the two-digit base-3 witness")
    p.add_argument("--generation", type=int, default=2)
    p.add_argument("--workers", type=int, default=1,
                   help="thread pool width for tuple checks")
    _add_common(p)
    p.set_defaults(func=_cmd_verify_ternary)

    p = vt.add_parser("cl-haarN",
                      help="sampled tuple of the forbidden-block witness")
    p.add_argument("--l", type=int, required=True,
                   help="block level parameter (tuple size 2*m(l)+2)")
    p.add_argument("--generation", type=int, default=None)
    p.add_argument("--members", default=None,
                   help="comma-separated branch indices (default: first tuple)")
    _add_common(p)
    p.set_defaults(func=_cmd_verify_cl)

    for tag, builder in (("notideal-D", build_notideal_D),
                         ("notideal-E", build_notideal_E)):
        p = vt.add_parser(tag, help=f"sampled {tag} tuple against cl(0)")
        p.add_argument("--generation", type=int, default=None)
        p.add_argument("--members", default=None,
                       help="comma-separated branch indices (default: first tuple)")
        _add_common(p)
        p.set_defaults(func=lambda a, b=builder: _cmd_verify_notideal(a, b))

    p = vt.add_parser("haar1-gaps",
                      help="certify a gap sequence dropping to zero")
    p.add_argument("--set", required=True,
                   help="named construction, e.g. gap(5) or haar_family(1,0)")
    p.add_argument("--count", type=int, default=11,
                   help="length of the canonical gap sequence")
    p.add_argument("--points", metavar="FILE",
                   help="file of explicit gaps, one p/q per line")
    _add_common(p)
    p.set_defaults(func=_cmd_verify_gaps)

    refute = verbs.add_parser("refute", help="exhibit a refuting point or identity")
    rt = refute.add_subparsers(dest="target", required=True,
                               parser_class=_Parser)

    p = rt.add_parser("haar1", help="difference-set attractor with interior zero")
    p.add_argument("--set", required=True)
    p.add_argument("--candidate-interval", nargs=2, type=_rational,
                   required=True, metavar=("LO", "HI"),
                   help="exact bounds; quote a leading space for fractions "
                        "like ' -1/3'")
    _add_common(p, depth=False)
    p.set_defaults(func=_cmd_refute_haar1)

    p = rt.add_parser("haarN", help="carry-corrected common point for the union")
    p.add_argument("--family", required=True,
                   help="union construction, e.g. haar_family(2)")
    p.add_argument("--points", metavar="FILE",
                   help="file of n+1 increasing anchors spanning < 1/5")
    _add_common(p)
    p.set_defaults(func=_cmd_refute_haarN)

    p = rt.add_parser("haar-finite-X", help="greedy common point of X translates")
    p.add_argument("--points", metavar="FILE",
                   help="file of decreasing translates (c_0 < 12/25)")
    _add_common(p)
    p.set_defaults(func=_cmd_refute_finite)

    p = rt.add_parser("null-finite-Y",
                      help="common point along a monotone sequence in Y")
    p.add_argument("--direction", choices=("decreasing", "increasing"),
                   default="decreasing")
    p.add_argument("--limit", type=_rational, default=Fraction(0),
                   help="the sequence's limit (default 0)")
    p.add_argument("--count", type=int, default=None,
                   help="how many leading terms must hit (default: all)")
    p.add_argument("--points", metavar="FILE",
                   help="file with the monotone sequence, one p/q per line")
    _add_common(p)
    p.set_defaults(func=_cmd_refute_null_finite)

    p = rt.add_parser("haar-countable",
                      help="greedy common point under sampled translates")
    p.add_argument("--set", default="nullmeager")
    p.add_argument("--points", metavar="FILE",
                   help="file of witness points (default: 4 extracted values)")
    p.add_argument("--prefix", default=None,
                   help="comma-separated digits anchoring the point's cell")
    _add_common(p)
    p.set_defaults(func=_cmd_refute_countable)

    p = verbs.add_parser("construct", help="emit a depth-k projection report")
    p.add_argument("--name", required=True,
                   help="named construction, e.g. cl(0) or nullmeager(3,5)")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--emit", metavar="FILE", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_construct)

    p = verbs.add_parser("check", help="re-verify an emitted report")
    p.add_argument("report", metavar="FILE")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_check)

    return parser


def run(argv=None) -> int:
    try:
        cap = os.environ.get("HAARLAB_MAX_INTERVALS")
        if cap is not None:
            set_max_intervals(int(cap))
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except BrokenPipeError:
        return EXIT_ERROR
    except Exception as exc:  # mapped, not raised: the contract is exit codes
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
