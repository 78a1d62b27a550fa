"""Blockwise witness Cantor sets and sparse sub-Cantor extraction.

A block witness is a binary tree of digit blocks.  Each tree node s (a 0/1
string of length n, the generation) owns a block of digits occupying a fixed
level range of the mixed-radix system; a branch point is the value of the
concatenated blocks along a path, with an all-zero tail.  A block is

    [optional marker digits] [slot 0] [slot 1] ... [slot C(2^n, T) - 1]

with one slot per T-subset of the 2^n generation-n nodes, enumerated in
lexicographic order.  Inside its designated slot, the members of the subset
(sorted) receive the scheme's patterns in increasing value order; every
other node gets a filler: the zero pattern below the subset's maximum, the
maximal pattern above it.  This filler choice makes branch values strictly
increasing in the lexicographic order of the nodes: at the first slot where
two nodes' contents differ, the larger node provably carries the larger
content, and slot value gaps dominate everything that follows.

Pattern families:

* triple scheme (slot length 12): zero block, then the two fixed ternary
  patterns y = (0,2,0,0,2,1,0,2,0,0,2) and x = (1,1,1,1,1,0,1,1,1,1,1), each
  with a trailing 1 that absorbs borrows from deeper positions;
* pair scheme (slot length 2): zero pair, then pairs
  (j * 3^(B-l), 25 * 3^(B+1) - 1 - j) for j = 0, 1, ..., T - 2, where B is
  the slot's first level and l the scheme's block parameter.

Blocks are generated lazily; whole blocks are cached only below a size cap,
and individual digits are computed on demand by unranking the slot's subset,
so generation-5 blocks with ~1.8 million digits stay affordable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .constructions import InvalidParams, m_level
from .numeric import MixedRadixSystem

__all__ = [
    "InvalidSchedule",
    "InsufficientDepth",
    "X_BAR",
    "Y_BAR",
    "subset_count",
    "subset_rank",
    "subset_unrank",
    "branch_bits",
    "BlockScheme",
    "BlockCantorWitness",
    "build_ternary_haar2_witness",
    "build_cl_witness",
    "build_notideal_D",
    "build_notideal_E",
    "generation_points",
    "branch_translate_pairs",
    "IncrementTree",
    "scaled_ternary_increment_tree",
    "SparseSubCantor",
    "extract_sparse_subcantor",
]


class InvalidSchedule(ValueError):
    """A width schedule assigns a tuple size its generation cannot host."""


class InsufficientDepth(RuntimeError):
    """The requested object needs more depth than is available or feasible."""


X_BAR = (1, 1, 1, 1, 1, 0, 1, 1, 1, 1, 1)
Y_BAR = (0, 2, 0, 0, 2, 1, 0, 2, 0, 0, 2)

# whole blocks longer than this are never cached; digits come on demand
_BLOCK_CACHE_LIMIT = 300_000
# full branch values are refused beyond this many levels (use upto_level)
_FULL_VALUE_MAX_LEVELS = 10_000


def subset_count(n: int, t: int) -> int:
    return comb(n, t)


def subset_rank(combo, n: int) -> int:
    """Lexicographic rank of a sorted t-subset of range(n)."""
    t = len(combo)
    rank = 0
    prev = -1
    for i, c in enumerate(combo):
        for j in range(prev + 1, c):
            rank += comb(n - 1 - j, t - 1 - i)
        prev = c
    return rank

def subset_unrank(rank: int, n: int, t: int) -> tuple:
    """Sorted t-subset of range(n) with the given lexicographic rank."""
    if not 0 <= rank < comb(n, t):
        raise ValueError("subset rank out of range")
    out = []
    c = 0
    for i in range(t):
        while True:
            cnt = comb(n - 1 - c, t - 1 - i)
            if rank < cnt:
                break
            rank -= cnt
            c += 1
        out.append(c)
        c += 1
    return tuple(out)


def branch_bits(b: int, n: int) -> tuple:
    """n-bit tuple of b, most significant bit first."""
    if not 0 <= b < 2**n:
        raise ValueError("branch index out of range")
    return tuple((b >> (n - 1 - i)) & 1 for i in range(n))


class BlockScheme:
    """Per-generation block layout: marker rule, tuple sizes, patterns."""

    def __init__(self, kind, slot_length, first_generation, start_level, l_index):
        # l_index: generation -> block parameter l, or None for no slots
        self.kind = kind
        self.slot_length = slot_length
        self.first_generation = first_generation
        self.start_level = start_level
        self._l_index = l_index

    def l_at(self, n: int):
        return self._l_index(n)

    def tuple_size(self, n: int):
        l = self.l_at(n)
        if l is None:
            return None
        return 3 if self.kind == "ternary" else 2 * m_level(l) + 2

    def slot_count(self, n: int) -> int:
        t = self.tuple_size(n)
        return 0 if t is None else comb(2**n, t)

    def marker_digits(self, n: int, bits, block_start: int) -> tuple:
        if self.kind == "ternary":
            return (bits[n - 1],) if n == 1 else ()
        if self.kind == "cl":
            return ()
        if self.kind == "notideal-D":
            return (bits[n - 1] * (m_level(block_start) // 2),)
        if self.kind == "notideal-E":
            return (bits[n - 1], 0)
        raise ValueError(f"unknown scheme kind {self.kind!r}")

    def role_digits(self, role: int, first_level: int, l: int) -> tuple:
        """Slot content of tuple member `role` (0 = smallest), value-ordered."""
        if self.kind == "ternary":
            return ((0,) * 12, Y_BAR + (1,), X_BAR + (1,))[role]
        if role == 0:
            return (0, 0)
        j = role - 1
        return (j * 3 ** (first_level - l), 25 * 3 ** (first_level + 1) - 1 - j)


class BlockCantorWitness:
    """Witness Cantor set generated by a block scheme on a binary tree."""

    def __init__(self, system: MixedRadixSystem, scheme: BlockScheme, label=""):
        self.system = system
        self.scheme = scheme
        self.label = label
        self._offsets = [scheme.start_level]  # offset[i] = level after gen (fg-1+i)
        self._block_cache = {}

    @property
    def first_generation(self) -> int:
        return self.scheme.first_generation

    def block_bounds(self, n: int) -> tuple:
        """[start, end) level range of the generation-n blocks."""
        fg = self.first_generation
        if n < fg:
            raise ValueError(f"generations start at {fg}")
        while len(self._offsets) <= n - fg + 1:
            g = fg + len(self._offsets) - 1
            bits_len = len(
                self.scheme.marker_digits(g, branch_bits(0, g), self._offsets[-1])
            )
            length = bits_len + self.scheme.slot_length * self.scheme.slot_count(g)
            self._offsets.append(self._offsets[-1] + length)
        return self._offsets[n - fg], self._offsets[n - fg + 1]

    def slot_levels(self, n: int, p: int) -> tuple:
        """[first, last] level pair of slot p in the generation-n block."""
        start, _ = self.block_bounds(n)
        mlen = len(self.scheme.marker_digits(n, branch_bits(0, n), start))
        first = start + mlen + self.scheme.slot_length * p
        return first, first + self.scheme.slot_length - 1

    def designated_slot(self, n: int, members) -> int:
        """Slot index carrying the patterns for this sorted branch tuple."""
        members = tuple(sorted(members))
        t = self.scheme.tuple_size(n)
        if t is None or len(members) != t:
            raise ValueError(f"generation {n} expects tuples of size {t}")
        return subset_rank(members, 2**n)

    # -- block content -----------------------------------------------------

    def _slot_digits(self, n: int, p: int, b: int, first_level: int) -> tuple:
        members = subset_unrank(p, 2**n, self.scheme.tuple_size(n))
        l = self.scheme.l_at(n)
        if b in members:
            role = members.index(b)
        elif b > members[-1]:
            role = self.scheme.tuple_size(n) - 1
        else:
            role = 0
        return self.scheme.role_digits(role, first_level, l)

    def block_digits(self, n: int, b: int) -> tuple:
        """Full digit block of branch b at generation n (cached when small)."""
        key = (n, b)
        cached = self._block_cache.get(key)
        if cached is not None:
            return cached
        start, end = self.block_bounds(n)
        if end - start > _BLOCK_CACHE_LIMIT:
            raise InsufficientDepth(
                f"generation {n} blocks have {end - start} digits; "
                "use per-level access instead"
            )
        bits = branch_bits(b, n)
        out = list(self.scheme.marker_digits(n, bits, start))
        for p in range(self.scheme.slot_count(n)):
            out.extend(self._slot_digits(n, p, b, start + len(out)))
        digits = tuple(out)
        self._block_cache[key] = digits
        return digits

    def digit(self, n: int, b: int, level: int) -> int:
        """Digit of branch b at an absolute level inside its generation-n block."""
        start, end = self.block_bounds(n)
        if not start <= level < end:
            raise ValueError(f"level {level} outside generation {n} block")
        key = (n, b)
        cached = self._block_cache.get(key)
        if cached is not None:
            return cached[level - start]
        bits = branch_bits(b, n)
        marker = self.scheme.marker_digits(n, bits, start)
        off = level - start
        if off < len(marker):
            return marker[off]
        off -= len(marker)
        p, pos = divmod(off, self.scheme.slot_length)
        first = start + len(marker) + p * self.scheme.slot_length
        return self._slot_digits(n, p, b, first)[pos]

    # -- branch values -------------------------------------------------------

    def branch_value(self, b: int, n: int, upto_level=None) -> Fraction:
        """Exact value of branch b in 2^n, all-zero tail, through upto_level.

        upto_level is exclusive; None sums every level of generations up to n
        (refused beyond a feasibility cap: pass upto_level for deep chains).
        """
        fg = self.first_generation
        if n < fg:
            raise ValueError(f"generations start at {fg}")
        _, chain_end = self.block_bounds(n)
        if upto_level is None:
            if chain_end > _FULL_VALUE_MAX_LEVELS:
                raise InsufficientDepth(
                    f"full values through level {chain_end} are infeasible; "
                    "pass upto_level"
                )
            upto_level = chain_end
        upto_level = min(upto_level, chain_end)
        num = 0
        level = 0
        q = self.system.q
        # integer accumulator: num / q(level - 1) is the running value
        for g in range(fg, n + 1):
            start, end = self.block_bounds(g)
            while level < min(start, upto_level):
                num *= self.system.radix(level)
                level += 1
            if level >= upto_level:
                break
            ancestor = b >> (n - g)
            cached = None
            if end - start <= _BLOCK_CACHE_LIMIT:
                cached = self.block_digits(g, ancestor)
            while level < min(end, upto_level):
                d = cached[level - start] if cached is not None else self.digit(
                    g, ancestor, level
                )
                num = num * self.system.radix(level) + d
                level += 1
            if level >= upto_level:
                break
        return Fraction(num, q(level - 1)) if level else Fraction(0)

    def tail_bound(self, level: int) -> Fraction:
        """Strict upper bound for any branch tail living at levels >= level."""
        return Fraction(1, self.system.q(level - 1))


def generation_points(witness, n: int, upto_level=None) -> list:
    """[(bits, value)] for every generation-n branch, in lexicographic order."""
    out = []
    for b in range(2**n):
        out.append((branch_bits(b, n), witness.branch_value(b, n, upto_level)))
    return out


def branch_translate_pairs(witness, n: int, upto_level=None) -> list:
    """Pairwise differences value(j) - value(i), i < j, at generation n."""
    pts = [v for _, v in generation_points(witness, n, upto_level)]
    return [pts[j] - pts[i] for i in range(len(pts)) for j in range(i + 1, len(pts))]


# ---------------------------------------------------------------------------
# Factories
# ---------------------------------------------------------------------------


def build_ternary_haar2_witness() -> BlockCantorWitness:
    """Triple-scheme witness on base 3; generation 1 is the single digit s_0."""
    scheme = BlockScheme(
        kind="ternary",
        slot_length=12,
        first_generation=1,
        start_level=0,
        l_index=lambda n: 0,  # tuple size fixed at 3; patterns level-free
    )
    return BlockCantorWitness(MixedRadixSystem.constant(3), scheme, "ternary-witness")


def build_cl_witness(l: int) -> BlockCantorWitness:
    """Pair-scheme witness for the level-l block construction.

    Generations start at the first n with 2^n >= 2 m(l) + 2 and the chain is
    shifted to begin at level l so that every slot's pattern exponent
    B - l is nonnegative (levels below l carry digit 0 on every branch).
    """
    if l < 0:
        raise InvalidParams("need l >= 0")
    t = 2 * m_level(l) + 2
    fg = 0
    while 2**fg < t:
        fg += 1
    scheme = BlockScheme(
        kind="cl",
        slot_length=2,
        first_generation=fg,
        start_level=l,
        l_index=lambda n, l=l: l,
    )
    return BlockCantorWitness(MixedRadixSystem.cl(), scheme, f"cl-witness({l})")


def _checked_schedule(w_schedule):
    if w_schedule is None:
        w_schedule = lambda n: 0 if 2**n >= 26 else None  # noqa: E731
    elif isinstance(w_schedule, dict):
        mapping = dict(w_schedule)
        w_schedule = lambda n, m=mapping: m.get(n)  # noqa: E731
    elif not callable(w_schedule):
        raise InvalidSchedule("schedule must be None, a dict, or callable")

    def checked(n):
        l = w_schedule(n)
        if l is None:
            return None
        if 2 * m_level(l) + 2 > 2**n:
            raise InvalidSchedule(
                f"generation {n} cannot host tuple size {2 * m_level(l) + 2}"
            )
        return l

    return checked


def build_notideal_D(w_schedule=None) -> BlockCantorWitness:
    """Marker-plus-pair-slot witness; marker s * floor(m(start)/2).

    The schedule maps generations to block parameters l (width w = m(l));
    None entries give marker-only blocks.  The default uses l = 0 from the
    first generation that can host 26-tuples.
    """
    scheme = BlockScheme(
        kind="notideal-D",
        slot_length=2,
        first_generation=1,
        start_level=0,
        l_index=_checked_schedule(w_schedule),
    )
    return BlockCantorWitness(MixedRadixSystem.not_ideal(), scheme, "notideal-D")


def build_notideal_E(w_schedule=None) -> BlockCantorWitness:
    """Like the D witness but with the two-digit marker (s, 0)."""
    scheme = BlockScheme(
        kind="notideal-E",
        slot_length=2,
        first_generation=1,
        start_level=0,
        l_index=_checked_schedule(w_schedule),
    )
    return BlockCantorWitness(MixedRadixSystem.not_ideal(), scheme, "notideal-E")


# ---------------------------------------------------------------------------
# Sparse sub-Cantor extraction
# ---------------------------------------------------------------------------


class IncrementTree:
    """Node increments of a Cantor set presented as a labeled binary tree.

    increment(bits) is the distance between the left ends of the two
    next-level pieces under the node; it must be 0 for nodes not ending in 1
    and positive otherwise, with each right increment exceeding the sum of
    the left-side tail increments below it.
    """

    def __init__(self, increment_fn, max_depth=None):
        self._fn = increment_fn
        self.max_depth = max_depth

    def increment(self, bits) -> Fraction:
        bits = tuple(bits)
        if self.max_depth is not None and len(bits) > self.max_depth:
            raise InsufficientDepth(
                f"increment tree only reaches depth {self.max_depth}"
            )
        if not bits or bits[-1] == 0:
            return Fraction(0)
        return Fraction(self._fn(bits))


def scaled_ternary_increment_tree(scale=Fraction(2, 3), max_depth=None):
    """Increment tree of scale * (ternary Cantor set): d = 2 scale / 3^depth."""
    scale = Fraction(scale)
    if not 0 < scale <= 1:
        raise ValueError("scale must be in (0, 1]")
    return IncrementTree(lambda bits: 2 * scale / 3 ** len(bits), max_depth)


@dataclass
class SparseSubCantor:
    """Extracted sub-Cantor: selected input paths and their increments."""

    tree: IncrementTree
    system: MixedRadixSystem
    generations: int
    tmap: dict  # our node bits (ending in 1) -> selected input node bits

    def point(self, bits) -> Fraction:
        bits = tuple(bits)
        total = Fraction(0)
        for n in range(1, len(bits) + 1):
            prefix = bits[:n]
            if prefix[-1] == 1:
                total += self.tree.increment(self.tmap[prefix])
        return total

    def input_path(self, bits) -> tuple:
        """Concatenated input-tree path realizing this branch point."""
        bits = tuple(bits)
        path = ()
        for n in range(1, len(bits) + 1):
            prefix = bits[:n]
            if prefix[-1] == 1:
                path = self.tmap[prefix]
        return path

    def branch_value(self, b: int, n: int, upto_level=None) -> Fraction:
        return self.point(branch_bits(b, n))


def _band_start(system: MixedRadixSystem, n: int) -> int:
    """Break level k_n of a null-meager schedule (unit steps past prefix)."""
    if system.rule != "null-meager":
        raise ValueError("band starts are defined for null-meager systems")
    ks = system.params
    if n < len(ks):
        return ks[n]
    return ks[-1] + (n - len(ks) + 1)


def extract_sparse_subcantor(tree: IncrementTree, system: MixedRadixSystem,
                             generations: int) -> SparseSubCantor:
    """Select a sub-Cantor whose increments satisfy the smallness schedule.

    Generation-n nodes (n >= 1) get increments below 1/(2 q(k_{2^(n+1)+1}))
    (the root node uses k_3), start from the leftmost form (0,...,0,1) under
    all-zero prefixes, and extend the longest selected ancestor otherwise.
    """
    if generations < 0:
        raise ValueError("generations must be >= 0")
    q = system.q
    tmap = {}

    def pick_extension(base, threshold, fresh_len_from):
        # shortest extension base + (0,...,0,1) whose increment is small enough
        length = max(len(base) + 1, fresh_len_from)
        while True:
            if tree.max_depth is not None and length > tree.max_depth:
                raise InsufficientDepth(
                    f"no increment below {threshold} within depth {tree.max_depth}"
                )
            cand = base + (0,) * (length - len(base) - 1) + (1,)
            if tree.increment(cand) < threshold:
                return cand
            length += 1

    for n in range(1, generations + 1):
        if n == 1:
            threshold = Fraction(1, 2 * q(_band_start(system, 3)))
            tmap[(1,)] = pick_extension((), threshold, 1)
            continue
        threshold = Fraction(1, 2 * q(_band_start(system, 2 ** (n + 1) + 1)))
        for si in range(2 ** (n - 1)):
            s = branch_bits(si, n - 1)
            ancestor = ()
            for j in range(len(s), 0, -1):
                if s[j - 1] == 1:
                    ancestor = tmap[s[:j]]
                    break
            tmap[s + (1,)] = pick_extension(ancestor, threshold, 1)
    return SparseSubCantor(tree, system, generations, tmap)
