"""Certificates: empty translate intersections and explicit common points.

The central operation intersects a digit-defined set with widened translates

    R(k)  =  intersection over i of  ( project(set, k) - [t_i, t_i + p_i) )

where p_i >= 0 pads translate i to cover every tail behind a finite branch
value.  A cell [a, b] minus the window [t, t+p) is the half-open span
(a - t - p, b - t], so the computation runs on spans with explicit endpoint
openness, not on the public closed-interval type.  Endpoints are encoded as
positions (value, side) with side in {-1, 0, +1} meaning "just below",
"at", and "just above" the value; tuple comparison then orders positions
and decides emptiness and adjacency exactly.

The refiner is adaptive: it deepens one level at a time, keeps per-translate
survivor prefixes whose spans still meet the running intersection R, and
enumerates children only inside digit windows derived from R's pieces.
Pruning is exact: a child span is contained in its parent span, and R only
shrinks as the depth grows, so a discarded prefix can never contribute
later.  CERTIFIED_EMPTY at depth k is sound for the un-projected sets
because projection over-approximates; it is monotone in k for the same
reason.  A nonempty R at the depth cap yields INCONCLUSIVE_AT_DEPTH with
the closure of R as the residual; inconclusive is an outcome, not an error.

Cell enumeration can double at every level where all pairwise translate
differences have a zero digit (nothing constrains the new digit, both
branches survive), and witness tuples sharing a deep branch prefix hit
hundreds of such levels before their separating block.  Product sets get
an emptiness pre-pass that is immune to this: their digit menus ignore
prefix content, and every survivor cell is grid-aligned, so the position
of each translate window inside the current cell depends only on the
level, not on the digits chosen.  The residual state per translate is a
bitmask over a handful of nearby set cells ("which ones still carry an
admissible prefix"), and states reached through different prefixes merge.
See certify_empty_intersection for how the two passes combine.

Point certificates come from the greedy digit algorithms: a digit is chosen
at each level so that both the prefix value and the prefix value plus one
cell width avoid every forbidden cell family shifted by the truncated
translate (the truncation of the true translate leaves a tail below one
cell width, so the point plus the true translate lands in one of the two
checked cells).  Every emitted point is re-verified per translate against
the set expression at the stated depth, independently of the search path.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import ceil, floor, lcm

from .constructions import (
    l_sets,
    m_level,
    make,
    middle_cell_family,
    resolve_set_descriptor,
    t_cell_family,
)
from .digitsets import (
    Digits,
    DigitSetExpr,
    FiniteUnion,
    Product,
    Reflect,
    RepeatTail,
    contains_at_depth,
    expr_to_descriptor,
    is_admissible_prefix,
    project,
)
from .intervals import (
    CapacityExceeded,
    IntervalUnion,
    distance_between,
    get_max_intervals,
    ifs_step,
    negate,
    translate as translate_union,
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
    branch_bits,
    build_cl_witness,
    build_notideal_D,
    build_notideal_E,
    build_ternary_haar2_witness,
)

__all__ = [
    "CERTIFIED_EMPTY",
    "POINT_FOUND",
    "INCONCLUSIVE_AT_DEPTH",
    "NoAdmissibleDigit",
    "NotAFixedPoint",
    "Certificate",
    "VerificationReport",
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
    "set_claim",
    "witness_claim",
    "reverify_certificate",
]

CERTIFIED_EMPTY = "CERTIFIED_EMPTY"
POINT_FOUND = "POINT_FOUND"
INCONCLUSIVE_AT_DEPTH = "INCONCLUSIVE_AT_DEPTH"


class NoAdmissibleDigit(RuntimeError):
    """Every pool digit at some level hits a forbidden cell family."""


class NotAFixedPoint(ValueError):
    """The candidate interval union is not fixed by the difference IFS."""


@dataclass
class Certificate:
    """Machine-checkable outcome; all fields JSON-ready."""

    claim: dict
    status: str
    depth: int
    point: dict | None = None
    residual: list | None = None
    elapsed_ms: int = 0

    def to_jsonable(self) -> dict:
        return {
            "claim": self.claim,
            "status": self.status,
            "depth": self.depth,
            "point": self.point,
            "residual": self.residual,
            "elapsed_ms": self.elapsed_ms,
        }


@dataclass
class VerificationReport:
    """Aggregate of per-tuple certificates from verify_haar_n."""

    claim: dict
    certificates: list = field(default_factory=list)

    @property
    def aggregate(self) -> str:
        if all(c.status == CERTIFIED_EMPTY for c in self.certificates):
            return "ALL_CERTIFIED"
        return INCONCLUSIVE_AT_DEPTH

    def to_jsonable(self) -> dict:
        return {
            "kind": "haar-n-report",
            "claim": self.claim,
            "aggregate": self.aggregate,
            "certificates": [c.to_jsonable() for c in self.certificates],
        }


def _rat(x) -> str:
    return format_rational(Fraction(x))


def _rats(xs) -> list:
    return [_rat(x) for x in xs]


def _unrats(xs) -> list:
    return [parse_rational(s) for s in xs]


def set_claim(expr: DigitSetExpr, name: str | None = None) -> dict:
    """Descriptor used inside claims; resolvable by resolve_set_descriptor."""
    if name is not None:
        return {"system": expr.system.descriptor(), "set": {"kind": "named", "name": name}}
    return {"system": expr.system.descriptor(), "set": expr_to_descriptor(expr)}


# ---------------------------------------------------------------------------
# Span algebra on positions (value, side)
# ---------------------------------------------------------------------------


def _span(lo, lo_open, hi, hi_open):
    return ((lo, 1 if lo_open else 0), (hi, -1 if hi_open else 0))


def _normalize_spans(spans) -> list:
    live = sorted(s for s in spans if s[0] <= s[1])
    out = []
    for lo, hi in live:
        if out:
            plo, phi = out[-1]
            touching = lo <= phi or (lo[0] == phi[0] and lo[1] == phi[1] + 1)
            if touching:
                if hi > phi:
                    out[-1] = (plo, hi)
                continue
        out.append((lo, hi))
    return out


def _intersect_span_unions(a: list, b: list) -> list:
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo <= hi:
            out.append((lo, hi))
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return _normalize_spans(out)


def _span_meets(span, pieces) -> bool:
    lo, hi = span
    for plo, phi in pieces:
        if plo > hi:
            return False
        if max(lo, plo) <= min(hi, phi):
            return True
    return False


def _cell_span(v, width, t, p, reflected):
    # normal: cell [v, v+width] minus window [t, t+p)  ->  (v-t-p, v+width-t]
    # reflected: cell plus window                      ->  [v+t, v+width+t+p)
    if reflected:
        return _span(v + t, False, v + width + t + p, p > 0)
    return _span(v - t - p, p > 0, v + width - t, False)


# ---------------------------------------------------------------------------
# Adaptive empty-intersection certifier
# ---------------------------------------------------------------------------


def _window_bounds(num, wid, den, mode):
    """Touched-cell range and fully-covered range for one window.

    All in cell units relative to the window-start cell: the window is
    [phi, phi+width] of a point window (mode 0), [phi, phi+width) (mode 1)
    or (phi, phi+width] (mode 2), with phi = num/den and width = wid/den.
    A cell j is touched when [j, j+1] meets the union of the window over
    the current survivor cell, which spans one extra unit; it is fully
    covered when the window of every point of the survivor cell contains
    all of [j, j+1].  Exact endpoint openness matters on both sides: a
    closed edge that lands exactly on the grid grazes the neighboring cell
    at its endpoint (set membership via a cell's closed boundary), while
    the open edge of a pad window must not re-admit that cell.
    """
    total = num + wid
    # closed left edge aligned to the grid grazes the cell ending there
    jmin = -1 if (mode in (0, 1) and num == 0) else 0
    if mode == 0:
        jmax = 1
        flo, fhi = 1, 0  # a point window never swallows a cell
    elif mode == 2:
        # closed right edge: the boundary cell is touched even when aligned
        jmax = total // den + 1
        flo, fhi = 2, total // den - 1
    else:
        jmax = total // den + (0 if total % den == 0 else 1)
        flo = (0 if num == 0 else 1) + 1
        fhi = total // den - (2 if total % den == 0 else 1)
    return jmin, jmax, flo, fhi


def _aligned_empty_depth(walk, reflected, translates, pads, depth):
    """Emptiness depth via merged alignment states, or None if undecided.

    Product sets only: the digit menu at a level ignores prefix content and
    survivor cells are grid-aligned, so relative to any survivor the window
    of translate t starts at the same fractional offset frac(t * q(level-1)).
    Survivor data per translate collapses to a bitmask over the few set
    cells its window touches, recording which still carry an admissible
    prefix; -1 marks a window that contains a whole admissible cell and can
    never prune again.  States reached through different prefixes merge,
    so levels whose digit constraints are vacuous no longer double the work
    the way they double cell counts in the exact refiner.
    """
    system = walk.system
    m = len(translates)
    offs = [(-(t + p) if reflected else t) for t, p in zip(translates, pads)]
    modes = [0 if p == 0 else (2 if reflected else 1) for p in pads]
    den = lcm(*(x.denominator for x in offs + pads))
    base = []
    num = []
    wid = []
    for t, p in zip(offs, pads):
        whole, part = divmod(t.numerator * (den // t.denominator), den)
        base.append(whole)
        num.append(part)
        w = p.numerator * (den // p.denominator)
        if w > den:
            return None  # pad spans more than a unit cell; exact refiner only
        wid.append(w)
    bounds = [_window_bounds(num[i], wid[i], den, modes[i]) for i in range(m)]
    jmin = [b[0] for b in bounds]
    jmax = [b[1] for b in bounds]

    # Seed one state per unit cell the intersection hull can touch.  The
    # only admissible depth-0 set cell is [0, 1], so the mask per translate
    # has at most the bit of that cell relative to its window start.
    xlo = max(-t - p for t, p in zip(offs, pads))
    xhi = min(1 - t for t in offs)
    if xlo > xhi:
        return 1
    states = set()
    for unit in range(ceil(xlo) - 1, floor(xhi) + 1):
        masks = []
        for i in range(m):
            root = -(unit + base[i])
            if not jmin[i] <= root <= jmax[i]:
                break
            masks.append(1 << (root - jmin[i]))
        if len(masks) == m:
            states.add(tuple(masks))
    if not states:
        return 1

    cap = get_max_intervals()
    for level in range(depth):
        radix = system.radix(level)
        allowed = walk.digits_at(level)
        runs = allowed.runs
        carry = []
        for i in range(m):
            c, num[i] = divmod(num[i] * radix, den)
            carry.append(c)
            wid[i] *= radix
        pjmin, pjmax = jmin, jmax
        bounds = [_window_bounds(num[i], wid[i], den, modes[i]) for i in range(m)]
        jmin = [b[0] for b in bounds]
        jmax = [b[1] for b in bounds]
        if any(jmax[i] - jmin[i] > 60 for i in range(m)):
            return None  # window spans dozens of cells; masks would blow up
        # cells whose whole extent stays inside every window position
        fullmask = []
        for i in range(m):
            bits = 0
            for j in range(bounds[i][2], bounds[i][3] + 1):
                bits |= 1 << (j - jmin[i])
            fullmask.append(bits)

        # segment digit space so each (translate, target cell) keeps one
        # parent cell and one digit-run membership within a segment
        cuts = {0}
        for i in range(m):
            for j in range(jmin[i], jmax[i] + 1):
                s = carry[i] + j
                cuts.add(-s % radix)
                for lo, hi in runs:
                    cuts.add((lo - s) % radix)
                    cuts.add((hi - s) % radix)
        tables = set()
        for d in sorted(cuts):
            tab = []
            for i in range(m):
                row = []
                for j in range(jmin[i], jmax[i] + 1):
                    pj, e = divmod(d + carry[i] + j, radix)
                    ok = pjmin[i] <= pj <= pjmax[i] and allowed.contains(e)
                    row.append((pj - pjmin[i], ok))
                tab.append(tuple(row))
            tables.add(tuple(tab))

        nxt = set()
        for state in states:
            for tab in tables:
                out = []
                for i in range(m):
                    mask = state[i]
                    if mask == -1:
                        out.append(-1)
                        continue
                    nm = 0
                    for bit, (pj, ok) in enumerate(tab[i]):
                        if ok and (mask >> pj) & 1:
                            nm |= 1 << bit
                    if not nm:
                        break
                    if nm & fullmask[i]:
                        nm = -1
                    out.append(nm)
                if len(out) == m:
                    nxt.add(tuple(out))
        if not nxt:
            return level + 1
        if len(nxt) > cap:
            raise CapacityExceeded(
                f"{len(nxt)} alignment states at depth {level + 1} exceed cap {cap}"
            )
        states = nxt
    return None


def certify_empty_intersection(expr: DigitSetExpr, translates, pads=None,
                               depth: int = 8, claim: dict | None = None,
                               set_name: str | None = None) -> Certificate:
    """Certify that the padded translate intersection of the set is empty.

    Checks intersection over i of (set - [t_i, t_i + p_i)) on projections,
    refining one level at a time up to `depth`.  Empty at some level gives
    CERTIFIED_EMPTY at that level (sound for the real sets, for every tail
    choice inside the pads); otherwise INCONCLUSIVE_AT_DEPTH with the
    closure of the final intersection as residual intervals.

    Product sets (plain or reflected) run the alignment-state pass first,
    which survives the level-doubling that defeats cell enumeration on
    witness tuples with deep shared prefixes; when it cannot certify
    emptiness the exact span refiner takes over and supplies the residual.
    """
    start = time.monotonic()
    translates = [Fraction(t) for t in translates]
    if not translates:
        raise ValueError("need at least one translate")
    if pads is None:
        pads = [Fraction(0)] * len(translates)
    pads = [Fraction(p) for p in pads]
    if len(pads) != len(translates):
        raise ValueError("pads must match translates")
    if any(p < 0 for p in pads):
        raise ValueError("pads must be nonnegative")
    if depth < 1:
        raise ValueError("depth must be >= 1")

    reflected = isinstance(expr, Reflect)
    walk_expr = expr.member if reflected else expr
    system = walk_expr.system

    if claim is None:
        claim = {}
    claim = {
        "kind": "empty-intersection",
        "set": set_claim(expr, set_name),
        "translates": _rats(translates),
        "pads": _rats(pads),
        **claim,
    }

    if isinstance(walk_expr, Product):
        try:
            emptied = _aligned_empty_depth(walk_expr, reflected, translates,
                                           pads, depth)
        except CapacityExceeded:
            emptied = None
        if emptied is not None:
            elapsed = int((time.monotonic() - start) * 1000)
            return Certificate(claim, CERTIFIED_EMPTY, emptied, None, None, elapsed)

    m = len(translates)
    survivors = [[((), Fraction(0))] for _ in range(m)]
    pieces = None
    for i in range(m):
        spans = _normalize_spans(
            [_cell_span(Fraction(0), Fraction(1), translates[i], pads[i], reflected)]
        )
        pieces = spans if pieces is None else _intersect_span_unions(pieces, spans)

    used = 0
    cap = get_max_intervals()
    capped = False
    while pieces and used < depth:
        k = used
        qk = system.q(k)
        width = Fraction(1, qk)
        radix = system.radix(k)
        total = 0
        for i in range(m):
            t, p = translates[i], pads[i]
            fresh = []
            for digits, v in survivors[i]:
                allowed = walk_expr.next_digits(digits)
                cand = set()
                for (plo, _), (phi, _) in pieces:
                    if reflected:
                        dlo = floor((plo - t - p - v) * qk) - 1
                        dhi = ceil((phi - t - v) * qk) + 1
                    else:
                        dlo = floor((plo + t - v) * qk) - 1
                        dhi = ceil((phi + t + p - v) * qk) + 1
                    if dhi < 0 or dlo >= radix:
                        continue
                    cand.update(allowed.iter_digits(max(dlo, 0), min(dhi + 1, radix)))
                for d in sorted(cand):
                    cv = v + Fraction(d, qk)
                    if _span_meets(_cell_span(cv, width, t, p, reflected), pieces):
                        fresh.append((digits + (d,), cv))
            total += len(fresh)
            if total > cap:
                capped = True
                break
            survivors[i] = fresh
            if not fresh:
                pieces = []
                break
        if capped:
            # pieces still describes the last fully refined level, so the
            # outcome is an honest inconclusive there, not an error; a level
            # too wide to refine even once stays a hard failure
            if used == 0:
                raise CapacityExceeded(
                    f"{total} survivor cells at depth 1 exceed cap {cap}"
                )
            claim["capped"] = True
            break
        used = k + 1
        if not pieces:
            break
        pieces = None
        for i in range(m):
            t, p = translates[i], pads[i]
            spans = _normalize_spans(
                [_cell_span(v, width, t, p, reflected) for _, v in survivors[i]]
            )
            pieces = spans if pieces is None else _intersect_span_unions(pieces, spans)
            if not pieces:
                break
        if pieces:
            for i in range(m):
                t, p = translates[i], pads[i]
                survivors[i] = [
                    s for s in survivors[i]
                    if _span_meets(_cell_span(s[1], width, t, p, reflected), pieces)
                ]

    elapsed = int((time.monotonic() - start) * 1000)
    if not pieces:
        return Certificate(claim, CERTIFIED_EMPTY, used, None, None, elapsed)
    hull = IntervalUnion([(lo, hi) for (lo, _), (hi, _) in pieces])
    if reflected:
        hull = negate(hull)
    residual = [[_rat(lo), _rat(hi)] for lo, hi in hull]
    return Certificate(claim, INCONCLUSIVE_AT_DEPTH, used, None, residual, elapsed)


# ---------------------------------------------------------------------------
# Witness tuple verification
# ---------------------------------------------------------------------------


def witness_claim(witness) -> dict:
    """Descriptor of a factory-built witness (rebuilds via builders below)."""
    if isinstance(witness, BlockCantorWitness):
        kind = witness.scheme.kind
        if kind == "ternary":
            return {"scheme": "ternary"}
        if kind == "cl":
            return {"scheme": "cl", "l": witness.scheme.start_level}
        return {"scheme": kind}
    raise ValueError(f"witness {witness!r} has no descriptor")


def witness_from_claim(desc: dict):
    scheme = desc["scheme"]
    if scheme == "ternary":
        return build_ternary_haar2_witness()
    if scheme == "cl":
        return build_cl_witness(desc["l"])
    if scheme == "notideal-D":
        return build_notideal_D()
    if scheme == "notideal-E":
        return build_notideal_E()
    raise ValueError(f"unknown witness scheme {scheme!r}")


def _tuple_certificate(expr, witness, members, generation, depth, upto_level,
                       set_name=None):
    if upto_level is None:
        upto = witness.block_bounds(generation)[1]
        values = [witness.branch_value(b, generation) for b in members]
    else:
        upto = upto_level
        values = [witness.branch_value(b, generation, upto_level) for b in members]
    pad = witness.tail_bound(upto)
    claim = {
        "witness": witness_claim(witness),
        "generation": generation,
        "members": list(members),
        "upto_level": upto_level,
    }
    return certify_empty_intersection(
        expr, values, [pad] * len(values), depth, claim, set_name
    )


def verify_haar_n(expr: DigitSetExpr, witness, n: int, generation: int,
                  depth: int, sample=None, upto_level=None,
                  set_name: str | None = None,
                  workers: int = 1) -> VerificationReport:
    """Check every (n+1)-tuple of generation branch points (or a sample).

    Each tuple's branch values, padded by the tail width behind the last
    computed level, must give an empty intersection of set translates.  An
    empty tuple list (generation too small) passes vacuously.  workers > 1
    dispatches tuples across a thread pool; certificates are collected by
    tuple index, so the report does not depend on completion order.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if generation < witness.first_generation:
        raise ValueError(f"generations start at {witness.first_generation}")
    if sample is None:
        tuples = list(combinations(range(2**generation), n + 1)) \
            if 2**generation >= n + 1 else []
    else:
        tuples = [tuple(sorted(t)) for t in sample]
        for t in tuples:
            if len(set(t)) != n + 1 or not all(0 <= b < 2**generation for b in t):
                raise ValueError(f"bad sampled tuple {t}")
    claim = {
        "kind": "haar-n-verification",
        "set": set_claim(expr, set_name),
        "witness": witness_claim(witness),
        "n": n,
        "generation": generation,
        "upto_level": upto_level,
        "sampled": sample is not None,
        "tuples": [list(t) for t in tuples],
        "vacuous": not tuples,
    }
    report = VerificationReport(claim)
    if workers > 1 and len(tuples) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            report.certificates = list(pool.map(
                lambda members: _tuple_certificate(
                    expr, witness, members, generation, depth, upto_level,
                    set_name),
                tuples,
            ))
    else:
        for members in tuples:
            report.certificates.append(
                _tuple_certificate(expr, witness, members, generation, depth,
                                   upto_level, set_name)
            )
    return report


def sampled_tuple_certificate(expr: DigitSetExpr, witness, generation: int,
                              depth: int, members=None,
                              set_name: str | None = None) -> Certificate:
    """One tuple's certificate, truncated just past its designated slot.

    Default members are the lexicographically first tuple-size branches of
    the generation; translates are exact through the slot's last level and
    the tail behind it is absorbed by the half-open pad.
    """
    t = witness.scheme.tuple_size(generation)
    if t is None:
        raise ValueError(f"generation {generation} has no slots")
    if members is None:
        members = tuple(range(t))
    members = tuple(sorted(members))
    p = witness.designated_slot(generation, members)
    _, last = witness.slot_levels(generation, p)
    return _tuple_certificate(expr, witness, members, generation, depth,
                              last + 1, set_name)


# ---------------------------------------------------------------------------
# Haar-1 evidence and refutation
# ---------------------------------------------------------------------------


def certify_haar1_gap_sequence(expr: DigitSetExpr, gaps, depth: int,
                               set_name: str | None = None) -> Certificate:
    """Certify (set - d) ∩ set = ∅ for each gap d in a sequence dropping to 0.

    Every certified gap says d is not a difference of two members; a gap
    sequence converging to 0 then witnesses that the difference set contains
    no neighborhood of 0.
    """
    start = time.monotonic()
    gaps = [Fraction(d) for d in gaps]
    if not gaps:
        raise ValueError("need a nonempty gap list")
    if any(d <= 0 for d in gaps):
        raise ValueError("gaps must be positive")
    if any(b >= a for a, b in zip(gaps, gaps[1:], strict=False)):
        raise ValueError("gaps must be strictly decreasing")
    per_gap = []
    worst = CERTIFIED_EMPTY
    used = 0
    residual = None
    for d in gaps:
        cert = certify_empty_intersection(expr, [Fraction(0), d], None, depth,
                                          set_name=set_name)
        per_gap.append({"gap": _rat(d), "status": cert.status, "depth": cert.depth})
        used = max(used, cert.depth)
        if cert.status != CERTIFIED_EMPTY and worst == CERTIFIED_EMPTY:
            worst = INCONCLUSIVE_AT_DEPTH
            residual = cert.residual
    claim = {
        "kind": "gap-sequence",
        "set": set_claim(expr, set_name),
        "gaps": _rats(gaps),
        "per_gap": per_gap,
        "conclusion": "HAAR1_EVIDENCE" if worst == CERTIFIED_EMPTY else None,
    }
    elapsed = int((time.monotonic() - start) * 1000)
    return Certificate(claim, worst, used, None, residual, elapsed)


def _uniform_digit_runs(expr: DigitSetExpr):
    """Digit runs shared by every level of a constant-base product, or raise."""
    if not isinstance(expr, Product) or expr.system.rule != "constant":
        raise ValueError("need a product on a constant-base system")
    desc = expr_to_descriptor(expr)
    tail = desc["tail"]
    radix = expr.system.radix(0)
    if tail["kind"] == "repeat":
        runs = tuple((d, d + 1) for d in tail["digits"])
    elif tail["kind"] == "full":
        runs = ((0, radix),)
    else:
        raise ValueError("tail must repeat one digit set at every level")
    for level_runs in desc["levels"]:
        if tuple(tuple(r) for r in level_runs) != runs:
            raise ValueError("explicit levels must match the repeating digit set")
    return runs


def refute_haar1_difference_interval(expr: DigitSetExpr,
                                     candidate: IntervalUnion,
                                     set_name: str | None = None) -> Certificate:
    """Decide from an exact difference-set identity whether 0 is interior.

    The set must use one repeating digit set D in a constant base r; its
    difference set is then the unique attractor of x -> (x + delta) / r over
    delta in D - D.  If the candidate is a nonempty exact fixed point it IS
    the difference set; conclusion NOT_HAAR1 when it contains a neighborhood
    of 0, HAAR1_EVIDENCE when it does not.
    """
    start = time.monotonic()
    runs = _uniform_digit_runs(expr)
    digits = [d for lo, hi in runs for d in range(lo, hi)]
    ratio = expr.system.radix(0)
    offsets = sorted({a - b for a in digits for b in digits})
    if len(candidate) == 0:
        raise NotAFixedPoint("an empty candidate cannot be the attractor")
    stepped = ifs_step(candidate, ratio, offsets)
    if stepped != candidate:
        raise NotAFixedPoint(
            f"ifs_step changed the candidate: {stepped!r} != {candidate!r}"
        )
    radius = None
    for lo, hi in candidate:
        if lo < 0 < hi:
            radius = min(-lo, hi)
            break
    conclusion = "NOT_HAAR1" if radius is not None else "HAAR1_EVIDENCE"
    claim = {
        "kind": "difference-attractor",
        "set": set_claim(expr, set_name),
        "candidate": [[_rat(lo), _rat(hi)] for lo, hi in candidate],
        "ratio": ratio,
        "offsets": offsets,
        "conclusion": conclusion,
        "zero_radius": _rat(radius) if radius is not None else None,
    }
    elapsed = int((time.monotonic() - start) * 1000)
    if radius is not None:
        point = {"digits": [], "value": _rat(0)}
        return Certificate(claim, POINT_FOUND, 0, point, None, elapsed)
    return Certificate(claim, CERTIFIED_EMPTY, 0, None, None, elapsed)


# ---------------------------------------------------------------------------
# Greedy common-point finders
# ---------------------------------------------------------------------------


def greedy_common_point(expr: DigitSetExpr, forbidden_families, digit_pools,
                        translates, depth: int, fixed_prefix=(),
                        claim: dict | None = None,
                        set_name: str | None = None) -> Certificate:
    """Build a point avoiding translated cell families level by level.

    forbidden_families(i) yields (family, translate) pairs active at level
    i; digit_pools(i) yields candidate digits.  A digit d is admitted when
    neither prefix+d's value v nor v + 1/q(i) lies in family - trunc(translate)
    for any pair; the true point then avoids family - translate for every
    full translate, since the translate's tail stays below one cell width.
    Digits in fixed_prefix are taken as given and not checked.

    The smallest admissible digit is chosen at each level (deterministic
    certificates).  Exhausting a pool raises NoAdmissibleDigit.  The final
    point is re-verified independently of the search path: the canonical
    digit word of point + t must be an admissible prefix at depth k for
    every t in `translates`.
    """
    start = time.monotonic()
    system = expr.system
    digits = list(fixed_prefix)
    if len(digits) > depth:
        raise ValueError("fixed prefix longer than depth")
    if digits and not expr.admits(tuple(digits)):
        raise ValueError(f"fixed prefix {digits} is not admissible for the set")
    v = eval_word(DigitWord(system, digits)) if digits else Fraction(0)
    for i in range(len(digits), depth):
        qi = system.q(i)
        cell = Fraction(1, qi)
        chosen = None
        for d in sorted(set(digit_pools(i))):
            cand = v + d * cell
            ok = True
            for family, tau in forbidden_families(i):
                tt = Fraction(floor(Fraction(tau) * qi), qi)
                if family.contains_value(cand + tt) or \
                        family.contains_value(cand + tt + cell):
                    ok = False
                    break
            if ok:
                chosen = d
                break
        if chosen is None:
            raise NoAdmissibleDigit(f"no pool digit survives at level {i}")
        digits.append(chosen)
        v += chosen * Fraction(1, qi)

    translates = [Fraction(t) for t in translates]
    memberships = []
    for tau in translates:
        shifted = v + tau
        ok = False
        if 0 <= shifted < 1:
            ok = is_admissible_prefix(expr, expand(system, shifted, depth))
        memberships.append({"translate": _rat(tau), "ok": ok})
        if not ok:
            raise RuntimeError(
                f"membership re-check failed for translate {tau}; "
                "the pigeonhole contract was violated"
            )
    if claim is None:
        claim = {}
    claim = {
        "kind": "common-point",
        "set": set_claim(expr, set_name),
        "translates": _rats(translates),
        "prefix": list(fixed_prefix),
        "memberships": memberships,
        **claim,
    }
    point = {"digits": list(digits), "value": _rat(v)}
    elapsed = int((time.monotonic() - start) * 1000)
    return Certificate(claim, POINT_FOUND, depth, point, None, elapsed)


def refute_haar_finite_X(translates, depth: int) -> Certificate:
    """Common point of X shifted by finitely many admissible translates.

    Digits come from the ladder pools L_i; at level k the point must avoid
    the ladder-coded block families T^k_i shifted by each translate's
    truncation.  Translates must be strictly decreasing positives; the
    documented contract (first below 12/25, later below 1/q(i-1)) is what
    makes the pigeonhole count work, and violating it surfaces naturally as
    NoAdmissibleDigit.
    """
    translates = [Fraction(t) for t in translates]
    if any(t <= 0 for t in translates):
        raise ValueError("translates must be positive")
    if any(b >= a for a, b in zip(translates, translates[1:], strict=False)):
        raise ValueError("translates must be strictly decreasing")
    nc = make("notideal_X")
    n = len(translates)

    def families(k):
        return [(t_cell_family(i, k), translates[i]) for i in range(min(k + 1, n))]

    return greedy_common_point(
        nc.expr, families, l_sets, translates, depth,
        claim={"pools": "ladder"}, set_name=nc.text,
    )


def refute_null_finite(setY: DigitSetExpr, sequence, count: int, depth: int,
                       limit=Fraction(0),
                       set_name: str | None = None) -> Certificate:
    """Point x whose first `count` sequence translates all land in setY.

    setY is the two-sided layer union (the one-sided set with its
    reflection).  A strictly monotone sequence approaching `limit` reduces
    to the one-sided refutation: with gaps c_i between the sequence and its
    limit, a point r common to all X - c_i gives x = limit - r (decreasing
    case) or x = limit + r (increasing case), and sequence_i - x lands in X
    or -X.  Every claimed hit is re-checked against setY itself at the
    stated depth.  count = 0 passes trivially at x = limit - r for the
    leftmost r.
    """
    sequence = [Fraction(x) for x in sequence]
    limit = Fraction(limit)
    if count < 0 or count > len(sequence):
        raise ValueError("count must be between 0 and the sequence length")
    if len(sequence) > 1:
        inc = all(b > a for a, b in zip(sequence, sequence[1:], strict=False))
        dec = all(b < a for a, b in zip(sequence, sequence[1:], strict=False))
        if not (inc or dec):
            raise ValueError("sequence must be strictly monotone")
        direction = "increasing" if inc else "decreasing"
    elif sequence:
        direction = "decreasing" if sequence[0] > limit else "increasing"
    else:
        direction = "decreasing"
    terms = sequence[:count]
    if direction == "decreasing":
        if any(x <= limit for x in terms):
            raise ValueError("decreasing sequence must stay above its limit")
        gaps = [x - limit for x in terms]
    else:
        if any(x >= limit for x in terms):
            raise ValueError("increasing sequence must stay below its limit")
        gaps = [limit - x for x in terms]

    base = refute_haar_finite_X(gaps, depth) if gaps else greedy_common_point(
        make("notideal_X").expr, lambda k: [], l_sets, [], depth,
        set_name="notideal_X",
    )
    r = parse_rational(base.point["value"])
    x = limit - r if direction == "decreasing" else limit + r
    hits = []
    for s in terms:
        ok = contains_at_depth(setY, s - x, depth)
        hits.append({"translate": _rat(s), "ok": ok})
        if not ok:
            raise RuntimeError(
                f"two-sided membership re-check failed for {s}; "
                "the reduction contract was violated"
            )
    claim = dict(base.claim)
    claim.update(
        {
            "kind": "null-finite-point",
            "set": set_claim(setY, set_name),
            "sequence": _rats(sequence),
            "count": count,
            "limit": _rat(limit),
            "direction": direction,
            "found_point": _rat(x),
            "memberships": hits,
        }
    )
    return Certificate(claim, base.status, base.depth, base.point, None,
                       base.elapsed_ms)


def refute_haar_countable(expr: DigitSetExpr, points, depth: int,
                          prefix=(), set_name: str | None = None) -> Certificate:
    """Common point of a null-meager set under countably sampled translates.

    Level pools are the upper-half digits {m+2, ..., 2m+2}; the point must
    avoid the middle-digit cell family shifted by each supplied value.  The
    level after the fixed prefix is pinned to digit 0 (the construction's
    starting convention); pass a prefix to anchor the point inside the
    corresponding cell.
    """
    system = expr.system
    points = [Fraction(e) for e in points]
    fixed = tuple(prefix) + (0,)

    def pools(i):
        radix = system.radix(i)
        mid = (radix - 1) // 2
        return range(mid + 1, radix)

    def families(i):
        return [(middle_cell_family(system, i), e) for e in points]

    return greedy_common_point(
        expr, families, pools, points, depth, fixed,
        claim={"pools": "upper-half", "anchored": bool(prefix)},
        set_name=set_name,
    )


# ---------------------------------------------------------------------------
# Carry construction (base-5 family)
# ---------------------------------------------------------------------------


def carry_intersection_point(n: int, anchors, depth: int) -> Certificate:
    """Common translate point for the base-5 zero-residue family.

    Anchors x_0 < ... < x_n spanning less than 1/5 give differences
    d_m = x_m - x_0; the point a_0 has digit 0 at positions divisible by
    n+1 and 4 - d_{m,i} at positions with residue m, so each carry-corrected
    sum a_m = a_0 + d_m has digits {0, 4} on residue m, hence a_m lies in
    the m-th family member.  Anchors whose expansions do not terminate
    within the depth cannot be carry-checked exactly and yield
    INCONCLUSIVE_AT_DEPTH.
    """
    start = time.monotonic()
    anchors = [Fraction(x) for x in anchors]
    if len(anchors) != n + 1:
        raise ValueError(f"need exactly {n + 1} anchors for n = {n}")
    if any(b <= a for a, b in zip(anchors, anchors[1:], strict=False)):
        raise ValueError("anchors must be strictly increasing")
    if anchors[-1] - anchors[0] >= Fraction(1, 5):
        raise ValueError("anchors must span less than 1/5")
    system = MixedRadixSystem.constant(5)
    diffs = [x - anchors[0] for x in anchors]
    claim = {
        "kind": "carry-tuple",
        "n": n,
        "anchors": _rats(anchors),
        "differences": _rats(diffs),
        "family": f"haar_family({n})",
    }
    nonterm = [d for d in diffs if (d * 5**depth).denominator != 1]
    if nonterm:
        claim["nonterminating"] = _rats(nonterm)
        elapsed = int((time.monotonic() - start) * 1000)
        return Certificate(claim, INCONCLUSIVE_AT_DEPTH, depth, None, None,
                           elapsed)
    words = [expand(system, d, depth) for d in diffs]
    a0_digits = []
    for i in range(depth):
        r = i % (n + 1)
        a0_digits.append(0 if r == 0 else 4 - words[r].digits[i])
    a0 = DigitWord(system, a0_digits)
    sums = []
    for m in range(n + 1):
        trace = add_with_carry(a0, words[m])
        if eval_word(trace.result) != eval_word(a0) + diffs[m]:
            raise RuntimeError("carry addition lost exactness")
        member = make("haar_family", n=n, m=m).expr
        if not is_admissible_prefix(member, trace.result):
            raise RuntimeError(f"carry-corrected word leaves member {m}")
        sums.append(list(trace.result.digits))
    claim["sums"] = sums
    point = {"digits": list(a0_digits), "value": _rat(eval_word(a0))}
    elapsed = int((time.monotonic() - start) * 1000)
    return Certificate(claim, POINT_FOUND, depth, point, None, elapsed)


# ---------------------------------------------------------------------------
# Layer-separation check
# ---------------------------------------------------------------------------


def step4_separation(k_tilde: int, depth: int) -> dict:
    """Distance between the shifted upper layers of A and A itself.

    Projects the union of A's members above k_tilde (with the all-ladder
    collapse standing in for everything beyond the depth), shifts it down
    by floor(m(k_tilde)/2) / q(k_tilde), and measures the distance to A's
    own projection.  Separation >= 1/q(k_tilde) on projections implies the
    same for the underlying sets, since projections only widen.
    """
    if k_tilde < 0 or depth <= k_tilde + 1:
        raise ValueError("need 0 <= k_tilde and depth >= k_tilde + 2")
    family = make("notideal_A").expr
    members = [family.member(nn) for nn in range(k_tilde + 1, depth + 1)]
    upper = FiniteUnion(members + [family.collapse])
    shift = Fraction(m_level(k_tilde) // 2, family.system.q(k_tilde))
    shifted = translate_union(project(upper, depth), -shift)
    base = project(family, depth)
    dist = distance_between(shifted, base)
    bound = Fraction(1, family.system.q(k_tilde))
    return {
        "k": k_tilde,
        "depth": depth,
        "shift": shift,
        "distance": dist,
        "bound": bound,
        "separated": dist is not None and dist >= bound,
    }


# ---------------------------------------------------------------------------
# Pair-avoiding witness for finite point lists
# ---------------------------------------------------------------------------


class ShiftedBinaryCantor:
    """Digits {0, 1} in base 3 starting at a shift level; all smaller scales.

    Scaling the standard two-digit Cantor shape below every nonzero
    difference of the target points makes ALL its internal differences too
    small to hit them; the exhaustive pair check then certifies that no
    translate of the set meets two target points at once.
    """

    def __init__(self, shift: int):
        self.system = MixedRadixSystem.constant(3)
        self.shift = shift
        self.first_generation = 1

    def branch_value(self, b: int, n: int, upto_level=None) -> Fraction:
        bits = branch_bits(b, n)
        total = Fraction(0)
        for i, s in enumerate(bits):
            level = self.shift + i
            if upto_level is not None and level >= upto_level:
                break
            total += Fraction(s, 3 ** (level + 1))
        return total

    def tail_bound(self, level: int) -> Fraction:
        return Fraction(1, 2 * 3 ** max(level, self.shift))

    def expr(self):
        levels = [Digits.of(3, (0,)) for _ in range(self.shift)]
        return Product(self.system, levels, RepeatTail((0, 1)))


def cantor_avoiding_pairs(points, generations: int = 3, depth=None):
    """Witness set whose translates meet at most one of the given points.

    Returns (witness, certificate).  The witness is the two-digit base-3
    shape pushed deep enough that its difference set cannot reach any
    nonzero difference of the points; the certificate records the
    exhaustive padded pair-difference check at the requested generation.
    depth is the level through which branch values are expanded before the
    tail pad takes over; it defaults to the generation's own last level.
    """
    start = time.monotonic()
    points = [Fraction(x) for x in points]
    if len(set(points)) != len(points):
        raise ValueError("points must be distinct")
    deltas = sorted({a - b for a in points for b in points if a != b})
    shift = 0
    if deltas:
        dmin = min(abs(d) for d in deltas)
        while Fraction(1, 3**shift) >= dmin:
            shift += 1
    witness = ShiftedBinaryCantor(shift)
    if depth is None:
        depth = witness.shift + generations
    if depth < witness.shift + generations:
        raise ValueError("depth must reach the requested generation")
    pad = witness.tail_bound(depth)
    values = [witness.branch_value(b, generations, depth)
              for b in range(2**generations)]
    checked = 0
    for va in values:
        for vb in values:
            diff = va - vb
            for delta in deltas:
                checked += 1
                if diff - pad <= delta <= diff + pad:
                    raise RuntimeError(
                        "padded branch difference hits a point difference; "
                        "separation shift was insufficient"
                    )
    claim = {
        "kind": "pair-avoidance",
        "points": _rats(points),
        "generation": generations,
        "shift": shift,
        "pad": _rat(pad),
        "pairs_checked": checked,
        "conclusion": "AT_MOST_ONE_HIT",
    }
    elapsed = int((time.monotonic() - start) * 1000)
    cert = Certificate(claim, CERTIFIED_EMPTY, depth, None, None, elapsed)
    return witness, cert


# ---------------------------------------------------------------------------
# Independent re-verification
# ---------------------------------------------------------------------------


def _recheck_point(data: dict) -> dict:
    claim = data["claim"]
    system, expr = resolve_set_descriptor(claim["set"])
    depth = data["depth"]
    point = data["point"]
    digits = tuple(point["digits"])
    value = parse_rational(point["value"])
    details = []
    ok = True
    if digits:
        word_ok = eval_word(DigitWord(system, digits)) == value
        admissible = expr.admits(digits) if not isinstance(expr, Reflect) else True
        ok &= word_ok and admissible
        details.append(f"digit word evaluates to value: {word_ok}")
        details.append(f"digit word admissible: {admissible}")
    if claim["kind"] == "null-finite-point":
        x = parse_rational(claim["found_point"])
        for s in _unrats(claim["sequence"])[: claim["count"]]:
            hit = contains_at_depth(expr, s - x, depth)
            ok &= hit
            details.append(f"{_rat(s)} - x in two-sided set: {hit}")
    else:
        for t in _unrats(claim["translates"]):
            hit = contains_at_depth(expr, value + t, depth)
            ok &= hit
            details.append(f"point + {_rat(t)} in set at depth {depth}: {hit}")
    return {"ok": ok, "recomputed_status": POINT_FOUND if ok else "FAILED",
            "detail": "; ".join(details)}


def _strip_elapsed(data):
    if isinstance(data, dict):
        return {k: _strip_elapsed(v) for k, v in data.items() if k != "elapsed_ms"}
    if isinstance(data, list):
        return [_strip_elapsed(v) for v in data]
    return data


def reverify_certificate(data: dict) -> dict:
    """Recompute a certificate (or report) and compare, minus elapsed time.

    Returns {"ok": bool, "recomputed_status": str, "detail": str}.  Point
    certificates are re-checked by membership alone (the point IS the
    evidence); emptiness claims are recomputed from their recorded inputs.
    """
    if data.get("kind") == "haar-n-report":
        claim = data["claim"]
        _, expr = resolve_set_descriptor(claim["set"])
        witness = witness_from_claim(claim["witness"])
        depth = max((c["depth"] for c in data["certificates"]), default=1)
        report = verify_haar_n(
            expr, witness, claim["n"], claim["generation"], depth,
            sample=claim["tuples"] if claim["sampled"] else None,
            upto_level=claim["upto_level"],
            set_name=claim["set"]["set"].get("name"),
        )
        same = _strip_elapsed(report.to_jsonable()) == _strip_elapsed(data)
        return {"ok": same, "recomputed_status": report.aggregate,
                "detail": f"recomputed {len(report.certificates)} certificates"}

    if data.get("kind") == "projection":
        _, expr = resolve_set_descriptor(data["set"])
        proj = project(expr, data["depth"])
        got = [[_rat(lo), _rat(hi)] for lo, hi in proj]
        same = got == data["projection"]
        return {"ok": same, "recomputed_status": "PROJECTED",
                "detail": f"{len(got)} intervals at depth {data['depth']}"}

    claim = data["claim"]
    kind = claim["kind"]
    if kind == "empty-intersection":
        _, expr = resolve_set_descriptor(claim["set"])
        cert = certify_empty_intersection(
            expr, _unrats(claim["translates"]), _unrats(claim["pads"]),
            max(data["depth"], 1),
        )
        same = cert.status == data["status"] and cert.residual == data["residual"]
        return {"ok": same, "recomputed_status": cert.status,
                "detail": f"recomputed at depth {cert.depth}"}
    if kind == "gap-sequence":
        _, expr = resolve_set_descriptor(claim["set"])
        depth = max(row["depth"] for row in claim["per_gap"])
        cert = certify_haar1_gap_sequence(expr, _unrats(claim["gaps"]), depth)
        same = cert.status == data["status"]
        return {"ok": same, "recomputed_status": cert.status,
                "detail": f"{len(claim['gaps'])} gaps recertified"}
    if kind == "difference-attractor":
        _, expr = resolve_set_descriptor(claim["set"])
        candidate = IntervalUnion(
            [(parse_rational(lo), parse_rational(hi)) for lo, hi in claim["candidate"]]
        )
        cert = refute_haar1_difference_interval(expr, candidate)
        same = cert.status == data["status"] and \
            cert.claim["conclusion"] == claim["conclusion"]
        return {"ok": same, "recomputed_status": cert.status,
                "detail": f"conclusion {cert.claim['conclusion']}"}
    if kind in ("common-point", "null-finite-point"):
        return _recheck_point(data)
    if kind == "carry-tuple":
        cert = carry_intersection_point(
            claim["n"], _unrats(claim["anchors"]), data["depth"]
        )
        same = _strip_elapsed(cert.to_jsonable()) == _strip_elapsed(data)
        return {"ok": same, "recomputed_status": cert.status,
                "detail": "carry tuple recomputed"}
    if kind == "pair-avoidance":
        _, cert = cantor_avoiding_pairs(_unrats(claim["points"]),
                                        claim["generation"], data["depth"])
        same = _strip_elapsed(cert.to_jsonable()) == _strip_elapsed(data)
        return {"ok": same, "recomputed_status": cert.status,
                "detail": f"{cert.claim['pairs_checked']} pairs rechecked"}
    raise ValueError(f"unknown claim kind {kind!r}")
