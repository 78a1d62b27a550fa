"""Symbolic digit-constrained compact sets and their finite projections.

A digit-set expression describes a compact subset of [0, 1] by constraining
the digits of mixed-radix expansions level by level.  The computable view of
an expression is its depth-k projection: the union of all closed cells
[p/q(k-1), (p+1)/q(k-1)] whose k-digit prefix is admissible.  Projections are
sound over-approximations (the true set is contained in every projection) and
complete at cell granularity (every admissible cell contains a true member,
because every level's allowed-digit set is nonempty).

Node kinds:

* ``Product``      -- independent per-level digit constraints: explicit
                      allowed sets for finitely many levels, then a tail rule
                      giving the allowed set of every later level.
* ``FiniteUnion``  -- union of finitely many member expressions.
* ``Reflect``      -- {-x : x in member}; supports projection and point
                      membership, not digit-word prefixes.
* ``UnionFamily``  -- countable union of members index 0, 1, 2, ... plus a
                      collapse expression with the finitization guarantee:
                      at every prefix length k, members with index > k admit
                      exactly the prefixes the collapse admits.  This is what
                      makes depth-k projection of an infinite union finite.

Allowed-digit sets are stored as sorted runs of consecutive integers, so a
level with radix 25 * 3^40 whose rule forbids one block costs the same to
query as a three-digit level.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from math import floor

from .intervals import IntervalUnion, get_max_intervals, CapacityExceeded
from .numeric import DigitWord, MixedRadixSystem

__all__ = [
    "SystemMismatch",
    "UnprojectableFamily",
    "Digits",
    "TailRule",
    "FullTail",
    "RepeatTail",
    "PeriodicTail",
    "BlockComplementTail",
    "DigitSetExpr",
    "Product",
    "FiniteUnion",
    "Reflect",
    "UnionFamily",
    "reflect",
    "union_of",
    "project",
    "is_admissible_prefix",
    "contains_at_depth",
    "expr_to_descriptor",
    "expr_from_descriptor",
    "register_tail_kind",
]


class SystemMismatch(ValueError):
    """Expressions combined across different mixed-radix systems."""


class UnprojectableFamily(RuntimeError):
    """A union family lacks the collapse rule needed for finite projection."""


class Digits:
    """Allowed digits at one level, kept as sorted runs [lo, hi) of ints."""

    __slots__ = ("radix", "runs")

    def __init__(self, radix: int, runs):
        if radix < 1:
            raise ValueError("radix must be positive")
        clipped = []
        for lo, hi in runs:
            lo, hi = max(0, int(lo)), min(radix, int(hi))
            if lo < hi:
                clipped.append((lo, hi))
        clipped.sort()
        merged = []
        for lo, hi in clipped:
            if merged and lo <= merged[-1][1]:
                if hi > merged[-1][1]:
                    merged[-1] = (merged[-1][0], hi)
            else:
                merged.append((lo, hi))
        self.radix = radix
        self.runs = tuple(merged)

    @classmethod
    def full(cls, radix: int) -> "Digits":
        return cls(radix, ((0, radix),))

    @classmethod
    def of(cls, radix: int, digits) -> "Digits":
        return cls(radix, ((d, d + 1) for d in digits))

    @classmethod
    def excluding(cls, radix: int, excluded_runs) -> "Digits":
        """Complement of the given [lo, hi) runs within {0, ..., radix-1}."""
        banned = cls(radix, excluded_runs)
        out = []
        cursor = 0
        for lo, hi in banned.runs:
            if cursor < lo:
                out.append((cursor, lo))
            cursor = hi
        if cursor < radix:
            out.append((cursor, radix))
        return cls(radix, out)

    def contains(self, d: int) -> bool:
        j = bisect_right(self.runs, (d, self.radix + 1))
        return j > 0 and self.runs[j - 1][0] <= d < self.runs[j - 1][1]

    def count(self) -> int:
        return sum(hi - lo for lo, hi in self.runs)

    def is_empty(self) -> bool:
        return not self.runs

    def min_digit(self) -> int:
        if not self.runs:
            raise ValueError("empty digit set")
        return self.runs[0][0]

    def iter_digits(self, lo: int = 0, hi=None):
        """Yield allowed digits d with lo <= d < hi in increasing order."""
        if hi is None:
            hi = self.radix
        for rlo, rhi in self.runs:
            start, stop = max(rlo, lo), min(rhi, hi)
            if start < stop:
                yield from range(start, stop)
            if rlo >= hi:
                break

    def runs_between(self, lo: int, hi: int):
        """Allowed runs clipped to [lo, hi)."""
        out = []
        for rlo, rhi in self.runs:
            start, stop = max(rlo, lo), min(rhi, hi)
            if start < stop:
                out.append((start, stop))
            if rlo >= hi:
                break
        return out

    def union(self, other: "Digits") -> "Digits":
        self._same_radix(other)
        return Digits(self.radix, self.runs + other.runs)

    def intersect(self, other: "Digits") -> "Digits":
        self._same_radix(other)
        out = []
        a, b = self.runs, other.runs
        i = j = 0
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo < hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return Digits(self.radix, out)

    def subtract(self, other: "Digits") -> "Digits":
        self._same_radix(other)
        return self.intersect(Digits.excluding(self.radix, other.runs))

    def _same_radix(self, other: "Digits") -> None:
        if self.radix != other.radix:
            raise ValueError("digit sets have different radixes")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Digits)
            and self.radix == other.radix
            and self.runs == other.runs
        )

    def __hash__(self) -> int:
        return hash((self.radix, self.runs))

    def __repr__(self) -> str:
        return f"Digits({self.radix}, {list(self.runs)})"


# ---------------------------------------------------------------------------
# Tail rules: the allowed-digit set of every level past a product's explicit
# horizon.  Extensible registry so construction-specific rules can plug in.
# ---------------------------------------------------------------------------


class TailRule:
    kind = "abstract"

    def digits_at(self, system: MixedRadixSystem, i: int) -> Digits:
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class FullTail(TailRule):
    kind = "full"

    def digits_at(self, system, i):
        return Digits.full(system.radix(i))

    def descriptor(self):
        return {"kind": "full"}

    @classmethod
    def from_descriptor(cls, desc):
        return cls()


@dataclass(frozen=True)
class RepeatTail(TailRule):
    """One explicit digit set repeated on every tail level."""

    digits: tuple
    kind = "repeat"

    def digits_at(self, system, i):
        r = system.radix(i)
        if any(d >= r for d in self.digits):
            raise ValueError(f"repeat tail digit out of range at level {i}")
        return Digits.of(r, self.digits)

    def descriptor(self):
        return {"kind": "repeat", "digits": list(self.digits)}

    @classmethod
    def from_descriptor(cls, desc):
        return cls(tuple(int(d) for d in desc["digits"]))


@dataclass(frozen=True)
class PeriodicTail(TailRule):
    """Residue-indexed digit sets: level i uses the entry for i mod period.

    An entry of None leaves the level unconstrained.
    """

    period: int
    entries: tuple  # length == period; each item: tuple of digits or None
    kind = "periodic"

    def digits_at(self, system, i):
        r = system.radix(i)
        entry = self.entries[i % self.period]
        if entry is None:
            return Digits.full(r)
        if any(d >= r for d in entry):
            raise ValueError(f"periodic tail digit out of range at level {i}")
        return Digits.of(r, entry)

    def descriptor(self):
        return {
            "kind": "periodic",
            "period": self.period,
            "entries": [None if e is None else list(e) for e in self.entries],
        }

    @classmethod
    def from_descriptor(cls, desc):
        return cls(
            int(desc["period"]),
            tuple(
                None if e is None else tuple(int(d) for d in e)
                for e in desc["entries"]
            ),
        )


@dataclass(frozen=True)
class BlockComplementTail(TailRule):
    """Exclude the scaled block [m * 3^(i-l), (m+1) * 3^(i-l)) at levels i >= l.

    Levels below l are unconstrained.  The block narrows to the single digit m
    at level l and widens by a factor of 3 per level after it.
    """

    l: int
    m: int
    kind = "block-complement"

    def digits_at(self, system, i):
        r = system.radix(i)
        if i < self.l:
            return Digits.full(r)
        width = 3 ** (i - self.l)
        return Digits.excluding(r, ((self.m * width, (self.m + 1) * width),))

    def descriptor(self):
        return {"kind": "block-complement", "l": self.l, "m": self.m}

    @classmethod
    def from_descriptor(cls, desc):
        return cls(int(desc["l"]), int(desc["m"]))


_TAIL_KINDS = {
    "full": FullTail,
    "repeat": RepeatTail,
    "periodic": PeriodicTail,
    "block-complement": BlockComplementTail,
}


def register_tail_kind(cls) -> None:
    """Register a TailRule subclass for descriptor round-trips."""
    _TAIL_KINDS[cls.kind] = cls


def _tail_from_descriptor(desc: dict) -> TailRule:
    kind = desc["kind"]
    if kind not in _TAIL_KINDS:
        raise ValueError(f"unknown tail rule kind {kind!r}")
    return _TAIL_KINDS[kind].from_descriptor(desc)


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


class DigitSetExpr:
    """Base class: a digit-constrained compact subset of [0, 1]."""

    system: MixedRadixSystem

    # Exact contracts, assuming ``prefix`` is itself admissible:
    #   next_digits(prefix) == {d : admits(prefix + (d,))}
    def next_digits(self, prefix: tuple) -> Digits:
        raise NotImplementedError

    def admits(self, digits: tuple) -> bool:
        raise NotImplementedError

    def project(self, depth: int) -> IntervalUnion:
        """Union of the closed cells of all admissible depth-length prefixes."""
        if depth < 0:
            raise ValueError("depth must be >= 0")
        if depth == 0:
            return IntervalUnion.single(0, 1)
        system = self.system
        width = Fraction(1, system.q(depth - 1))
        cap = get_max_intervals()
        cells = []

        def rec(prefix, val):
            k = len(prefix)
            if k == depth:
                if len(cells) >= cap:
                    raise CapacityExceeded(
                        f"projection at depth {depth} exceeds {cap} cells"
                    )
                cells.append((val, val + width))
                return
            qk = system.q(k)
            for d in self.next_digits(prefix).iter_digits():
                rec(prefix + (d,), val + Fraction(d, qk))

        rec((), Fraction(0))
        return IntervalUnion(cells)

    def contains_at_depth(self, x, depth: int) -> bool:
        """True iff x lies in the depth-k projection (no materialization).

        Boundary points belong to both adjacent cells, so up to two digit
        choices per level are explored.
        """
        x = Fraction(x)
        if not (0 <= x <= 1):
            return False
        system = self.system

        def rec(prefix, rem):
            # invariant: 0 <= rem <= 1/q(len(prefix)-1), rem == x - eval(prefix)
            k = len(prefix)
            if k == depth:
                return True
            qk = system.q(k)
            r = system.radix(k)
            scaled = rem * qk
            d0 = floor(scaled)
            if scaled == d0:
                cands = [d0 - 1, d0]
            else:
                cands = [d0]
            allowed = self.next_digits(prefix)
            for d in cands:
                if 0 <= d < r and allowed.contains(d):
                    if rec(prefix + (d,), rem - Fraction(d, qk)):
                        return True
            return False

        return rec((), x)


class Product(DigitSetExpr):
    """Independent per-level constraints: explicit levels, then a tail rule."""

    def __init__(self, system: MixedRadixSystem, levels, tail: TailRule):
        levels = tuple(levels)
        for i, dig in enumerate(levels):
            if not isinstance(dig, Digits):
                raise TypeError("explicit levels must be Digits instances")
            if dig.radix != system.radix(i):
                raise ValueError(f"level {i} digit set has the wrong radix")
            if dig.is_empty():
                raise ValueError(f"level {i} allows no digits")
        self.system = system
        self.levels = levels
        self.tail = tail

    def digits_at(self, i: int) -> Digits:
        if i < len(self.levels):
            return self.levels[i]
        return self.tail.digits_at(self.system, i)

    def next_digits(self, prefix):
        return self.digits_at(len(prefix))

    def admits(self, digits):
        return all(self.digits_at(i).contains(d) for i, d in enumerate(digits))

    def __repr__(self):
        return f"Product(levels={len(self.levels)}, tail={self.tail.kind})"


class FiniteUnion(DigitSetExpr):
    def __init__(self, members):
        members = tuple(members)
        if not members:
            raise ValueError("union needs at least one member")
        system = members[0].system
        if any(m.system != system for m in members):
            raise SystemMismatch("union members must share one system")
        self.system = system
        self.members = members

    def admits(self, digits):
        # prefix-free members (reflections) cannot veto or supply a prefix
        for m in self.members:
            try:
                if m.admits(digits):
                    return True
            except UnprojectableFamily:
                continue
        return False

    def next_digits(self, prefix):
        out = Digits(self.system.radix(len(prefix)), ())
        for m in self.members:
            try:
                if m.admits(prefix):
                    out = out.union(m.next_digits(prefix))
            except UnprojectableFamily:
                continue
        return out

    def project(self, depth):
        out = IntervalUnion.empty()
        for m in self.members:
            out = out | m.project(depth)
        return out

    def contains_at_depth(self, x, depth):
        return any(m.contains_at_depth(x, depth) for m in self.members)

    def __repr__(self):
        return f"FiniteUnion({len(self.members)} members)"


class Reflect(DigitSetExpr):
    """{-x : x in member}.  Lives in [-1, 0]; has no digit-word prefixes."""

    def __init__(self, member: DigitSetExpr):
        self.system = member.system
        self.member = member

    def admits(self, digits):
        raise UnprojectableFamily("reflected sets have no digit-word prefixes")

    def next_digits(self, prefix):
        raise UnprojectableFamily("reflected sets have no digit-word prefixes")

    def project(self, depth):
        from .intervals import negate

        return negate(self.member.project(depth))

    def contains_at_depth(self, x, depth):
        return self.member.contains_at_depth(-Fraction(x), depth)

    def __repr__(self):
        return f"Reflect({self.member!r})"


class UnionFamily(DigitSetExpr):
    """Countable union of indexed members plus a collapse expression.

    The collapse contract: at every prefix length k, each member with index
    > k admits exactly the prefixes the collapse admits.  Only members with
    index <= k can then matter for length-k questions, which keeps projection
    and admissibility finite.  project() spot-checks the contract at its
    depth each call.
    """

    def __init__(self, system, member_factory, collapse, label=""):
        self.system = system
        self._factory = member_factory
        self._members = {}
        self.collapse = collapse
        self.label = label
        if collapse is not None and collapse.system != system:
            raise SystemMismatch("collapse must share the family's system")

    def member(self, n: int) -> DigitSetExpr:
        if n not in self._members:
            expr = self._factory(n)
            if expr.system != self.system:
                raise SystemMismatch(f"member {n} has a different system")
            self._members[n] = expr
        return self._members[n]

    def _need_collapse(self):
        if self.collapse is None:
            raise UnprojectableFamily(
                f"union family {self.label or '?'} has no collapse rule"
            )
        return self.collapse

    def admits(self, digits):
        collapse = self._need_collapse()
        if collapse.admits(digits):
            return True
        return any(self.member(n).admits(digits) for n in range(len(digits)))

    def next_digits(self, prefix):
        collapse = self._need_collapse()
        k = len(prefix)
        out = Digits(self.system.radix(k), ())
        if collapse.admits(prefix):
            out = out.union(collapse.next_digits(prefix))
        for n in range(k + 1):
            m = self.member(n)
            if m.admits(prefix):
                out = out.union(m.next_digits(prefix))
        return out

    def project(self, depth):
        collapse = self._need_collapse()
        out = super().project(depth)
        # collapse contract spot check: the first member past this depth
        # must project to exactly the collapse cells
        probe = self.member(depth + 1)
        assert probe.project(depth) == collapse.project(depth), (
            f"collapse contract violated at depth {depth} "
            f"for family {self.label or '?'}"
        )
        return out

    def __repr__(self):
        return f"UnionFamily({self.label or '?'})"


# ---------------------------------------------------------------------------
# Module-level wrappers (the operation surface used by the certifier and CLI)
# ---------------------------------------------------------------------------


def reflect(expr: DigitSetExpr) -> Reflect:
    return Reflect(expr)


def union_of(exprs) -> DigitSetExpr:
    return FiniteUnion(exprs)


def project(expr: DigitSetExpr, depth: int) -> IntervalUnion:
    return expr.project(depth)


def is_admissible_prefix(expr: DigitSetExpr, word: DigitWord) -> bool:
    if word.system != expr.system:
        raise SystemMismatch("word and expression use different systems")
    return expr.admits(word.digits)


def contains_at_depth(expr: DigitSetExpr, x, depth: int) -> bool:
    return expr.contains_at_depth(x, depth)


# ---------------------------------------------------------------------------
# Descriptors (JSON-facing structural serialization)
# ---------------------------------------------------------------------------


def expr_to_descriptor(expr: DigitSetExpr) -> dict:
    """Structural descriptor of an expression; fails on union families.

    Union families are only serializable through their construction names
    (see the constructions module); everything else round-trips here.
    """
    if isinstance(expr, Product):
        return {
            "kind": "product",
            "levels": [list(dig.runs) for dig in expr.levels],
            "tail": expr.tail.descriptor(),
        }
    if isinstance(expr, FiniteUnion):
        return {"kind": "union", "members": [expr_to_descriptor(m) for m in expr.members]}
    if isinstance(expr, Reflect):
        return {"kind": "reflect", "member": expr_to_descriptor(expr.member)}
    raise ValueError(f"expression {expr!r} has no structural descriptor")


def expr_from_descriptor(system: MixedRadixSystem, desc: dict) -> DigitSetExpr:
    kind = desc["kind"]
    if kind == "product":
        levels = [
            Digits(system.radix(i), [tuple(run) for run in runs])
            for i, runs in enumerate(desc["levels"])
        ]
        return Product(system, levels, _tail_from_descriptor(desc["tail"]))
    if kind == "union":
        return FiniteUnion(
            expr_from_descriptor(system, m) for m in desc["members"]
        )
    if kind == "reflect":
        return Reflect(expr_from_descriptor(system, desc["member"]))
    raise ValueError(f"unknown set descriptor kind {kind!r}")
