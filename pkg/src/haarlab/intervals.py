"""Canonical finite unions of closed rational intervals.

IntervalUnion is the computable carrier for every depth-k realization of a
digit-constrained set: a sorted tuple of closed intervals [a, b] with exact
rational endpoints, pairwise disjoint and non-touching (touching pieces merge
on construction).  Degenerate intervals [a, a] are allowed; several
constructions keep isolated endpoints after removing an open middle piece.

Everything here is pure and exact.  Operations that can blow up the piece
count (Minkowski differences, IFS steps, large projections) enforce a global
capacity cap and raise CapacityExceeded instead of exhausting memory.
"""

from __future__ import annotations

from bisect import bisect_right
from fractions import Fraction

__all__ = [
    "MalformedInterval",
    "CapacityExceeded",
    "DEFAULT_MAX_INTERVALS",
    "get_max_intervals",
    "set_max_intervals",
    "IntervalUnion",
    "normalize",
    "union",
    "intersect",
    "translate",
    "negate",
    "minkowski_diff",
    "pad",
    "ifs_step",
    "min_gap",
    "is_empty",
    "has_interior",
    "contains_zero_neighborhood",
    "contains_value",
    "distance_between",
    "bounds",
]


class MalformedInterval(ValueError):
    """An input interval had its endpoints out of order."""


class CapacityExceeded(RuntimeError):
    """An operation would exceed the configured interval-count cap."""


DEFAULT_MAX_INTERVALS = 10**6
_max_intervals = DEFAULT_MAX_INTERVALS


def get_max_intervals() -> int:
    return _max_intervals


def set_max_intervals(n: int) -> int:
    """Set the global piece-count cap; returns the previous value."""
    global _max_intervals
    if n < 1:
        raise ValueError("interval cap must be >= 1")
    old = _max_intervals
    _max_intervals = n
    return old


def _check_capacity(n: int) -> None:
    if n > _max_intervals:
        raise CapacityExceeded(f"{n} intervals exceed the cap of {_max_intervals}")


class IntervalUnion:
    """Sorted, disjoint, non-touching closed intervals with exact endpoints."""

    __slots__ = ("intervals",)

    def __init__(self, raw=()):
        pieces = []
        for lo, hi in raw:
            lo, hi = Fraction(lo), Fraction(hi)
            if lo > hi:
                raise MalformedInterval(f"[{lo}, {hi}] has lo > hi")
            pieces.append((lo, hi))
        pieces.sort()
        merged = []
        for lo, hi in pieces:
            if merged and lo <= merged[-1][1]:
                if hi > merged[-1][1]:
                    merged[-1] = (merged[-1][0], hi)
            else:
                merged.append((lo, hi))
        _check_capacity(len(merged))
        self.intervals = tuple(merged)

    @classmethod
    def empty(cls) -> "IntervalUnion":
        return cls(())

    @classmethod
    def single(cls, lo, hi) -> "IntervalUnion":
        return cls(((lo, hi),))

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def __eq__(self, other) -> bool:
        return isinstance(other, IntervalUnion) and self.intervals == other.intervals

    def __hash__(self) -> int:
        return hash(self.intervals)

    def __repr__(self) -> str:
        body = " ".join(f"[{lo},{hi}]" for lo, hi in self.intervals)
        return f"IntervalUnion({body or 'empty'})"

    def __and__(self, other) -> "IntervalUnion":
        return intersect(self, other)

    def __or__(self, other) -> "IntervalUnion":
        return union(self, other)


def normalize(raw) -> IntervalUnion:
    """Canonical sorted disjoint form of an iterable of (lo, hi) pairs."""
    return IntervalUnion(raw)


def union(u: IntervalUnion, v: IntervalUnion) -> IntervalUnion:
    return IntervalUnion(u.intervals + v.intervals)


def intersect(u: IntervalUnion, v: IntervalUnion) -> IntervalUnion:
    a, b = u.intervals, v.intervals
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo <= hi:
            out.append((lo, hi))
        # advance whichever piece ends first
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return IntervalUnion(out)


def translate(u: IntervalUnion, t) -> IntervalUnion:
    t = Fraction(t)
    return IntervalUnion((lo + t, hi + t) for lo, hi in u.intervals)


def negate(u: IntervalUnion) -> IntervalUnion:
    return IntervalUnion((-hi, -lo) for lo, hi in u.intervals)


def minkowski_diff(u: IntervalUnion, v: IntervalUnion) -> IntervalUnion:
    """{x - y : x in u, y in v}, as the union of pairwise interval differences."""
    _check_capacity(len(u.intervals) * len(v.intervals))
    return IntervalUnion(
        (alo - bhi, ahi - blo)
        for alo, ahi in u.intervals
        for blo, bhi in v.intervals
    )


def pad(u: IntervalUnion, eps) -> IntervalUnion:
    """Minkowski sum with [0, eps]: every point gains its right tail."""
    eps = Fraction(eps)
    if eps < 0:
        raise ValueError("pad needs eps >= 0")
    return IntervalUnion((lo, hi + eps) for lo, hi in u.intervals)


def ifs_step(u: IntervalUnion, ratio, offsets) -> IntervalUnion:
    """One step of the iterated function system x -> (x + delta) / ratio."""
    ratio = Fraction(ratio)
    offsets = [Fraction(d) for d in offsets]
    if not offsets:
        raise ValueError("ifs_step needs at least one offset")
    if ratio <= 1:
        raise ValueError("ifs_step needs ratio > 1")
    _check_capacity(len(u.intervals) * len(offsets))
    return IntervalUnion(
        ((lo + d) / ratio, (hi + d) / ratio)
        for lo, hi in u.intervals
        for d in offsets
    )


def min_gap(u: IntervalUnion):
    """Smallest distance between consecutive pieces; None if fewer than two."""
    iv = u.intervals
    if len(iv) < 2:
        return None
    return min(iv[i + 1][0] - iv[i][1] for i in range(len(iv) - 1))


def is_empty(u: IntervalUnion) -> bool:
    return not u.intervals


def has_interior(u: IntervalUnion) -> bool:
    return any(hi > lo for lo, hi in u.intervals)


def contains_zero_neighborhood(u: IntervalUnion, eps) -> bool:
    """True iff [-eps, eps] is contained in u."""
    eps = Fraction(eps)
    if eps < 0:
        raise ValueError("eps must be >= 0")
    # a connected subset must sit inside a single piece
    return any(lo <= -eps and eps <= hi for lo, hi in u.intervals)


def contains_value(u: IntervalUnion, x) -> bool:
    x = Fraction(x)
    iv = u.intervals
    j = bisect_right(iv, (x, x))
    if j < len(iv) and iv[j][0] <= x <= iv[j][1]:
        return True
    return j > 0 and iv[j - 1][0] <= x <= iv[j - 1][1]


def distance_between(u: IntervalUnion, v: IntervalUnion):
    """Minimum distance between the two unions; None if either is empty."""
    a, b = u.intervals, v.intervals
    if not a or not b:
        return None
    best = None
    i = j = 0
    while i < len(a) and j < len(b):
        if a[i][1] < b[j][0]:
            d = b[j][0] - a[i][1]
            i += 1
        elif b[j][1] < a[i][0]:
            d = a[i][0] - b[j][1]
            j += 1
        else:
            return Fraction(0)
        if best is None or d < best:
            best = d
    return best


def bounds(u: IntervalUnion):
    """(min, max) of the union; None if empty."""
    if not u.intervals:
        return None
    return u.intervals[0][0], u.intervals[-1][1]
