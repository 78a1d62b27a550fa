"""Exact mixed-radix positional arithmetic.

A mixed-radix system assigns every level i >= 0 an integer radix r_i >= 2
and the cumulative denominator q(i) = r_0 * ... * r_i, with q(-1) = 1.
A digit word (x_0, ..., x_{k-1}) with 0 <= x_i < r_i denotes the rational
sum_i x_i / q(i), which always lies in [0, 1).  All arithmetic is exact;
nothing in this module rounds.

Four radix rules are supported:

* ``constant(r)``     -- r_i = r for every level (plain base-r expansion).
* ``cl``              -- q(0) = 25 and q(n) = q(n-1) * 25 * 3^n, so
                         r_i = 25 * 3^i.  Used by the forbidden-block
                         constructions whose level-i digits range over
                         25 * 3^i values.
* ``not-ideal``       -- same radix schedule as ``cl``; kept as a distinct
                         rule name because the layered union constructions
                         are tagged with it in descriptors.
* ``null-meager(ks)`` -- given an increasing break schedule k_0 = 0 < k_1 <
                         ..., r_i = 2n + 3 whenever k_n <= i < k_{n+1}.
                         Past the last explicit break the schedule continues
                         with unit steps, so the default ``(0,)`` gives
                         k_n = n and r_i = 2i + 3.

Digit-word addition carries just like column addition of integers, except
that carries propagate toward level 0 (the most significant position) and a
carry out of level 0 means the sum left [0, 1).  The carry flags beta(i)
(1 when a carry is injected into level i) are first-class data: several
certificates reason segment-by-segment about where carries happen, and the
flags admit an independent characterization by tail sums that the tests
check against the column algorithm.
"""

from __future__ import annotations

import re
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from math import floor

__all__ = [
    "InvalidDigit",
    "OverflowBeyondUnit",
    "MixedRadixSystem",
    "DigitWord",
    "CarryTrace",
    "q_denominator",
    "eval_word",
    "expand",
    "add_with_carry",
    "beta_by_boundary_rule",
    "parse_rational",
    "format_rational",
]


class InvalidDigit(ValueError):
    """A digit fell outside its level's range."""


class OverflowBeyondUnit(ArithmeticError):
    """Digit-word addition produced a carry out of level 0 (sum >= 1)."""


_RULES = ("constant", "cl", "not-ideal", "null-meager")


class MixedRadixSystem:
    """Radix schedule r_i plus cached cumulative denominators q(i)."""

    __slots__ = ("rule", "params", "_q")

    def __init__(self, rule: str, params: tuple = ()):
        if rule not in _RULES:
            raise ValueError(f"unknown radix rule {rule!r}")
        params = tuple(params)
        if rule == "constant":
            if len(params) != 1 or not isinstance(params[0], int) or params[0] < 2:
                raise ValueError("constant rule needs a single integer radix >= 2")
        elif rule == "null-meager":
            if not params:
                params = (0,)
            if params[0] != 0 or any(
                not isinstance(k, int) for k in params
            ) or any(a >= b for a, b in zip(params, params[1:])):
                raise ValueError(
                    "null-meager schedule must be strictly increasing ints starting at 0"
                )
        elif params:
            raise ValueError(f"rule {rule!r} takes no parameters")
        self.rule = rule
        self.params = params
        self._q = [1]  # _q[i + 1] == q(i); _q[0] == q(-1) == 1

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, r: int) -> "MixedRadixSystem":
        return cls("constant", (r,))

    @classmethod
    def cl(cls) -> "MixedRadixSystem":
        return cls("cl")

    @classmethod
    def not_ideal(cls) -> "MixedRadixSystem":
        return cls("not-ideal")

    @classmethod
    def null_meager(cls, schedule=(0,)) -> "MixedRadixSystem":
        return cls("null-meager", tuple(schedule))

    # -- schedule ----------------------------------------------------------

    def radix(self, i: int) -> int:
        if i < 0:
            raise ValueError("level index must be >= 0")
        if self.rule == "constant":
            return self.params[0]
        if self.rule in ("cl", "not-ideal"):
            return 25 * 3**i
        return 2 * self._band(i) + 3

    def _band(self, i: int) -> int:
        # n such that k_n <= i < k_{n+1}, with unit steps past the prefix.
        ks = self.params
        if i >= ks[-1]:
            return len(ks) - 1 + (i - ks[-1])
        return bisect_right(ks, i) - 1

    def q(self, i: int) -> int:
        if i < -1:
            raise ValueError("q is defined for levels >= -1")
        q = self._q
        while len(q) <= i + 1:
            q.append(q[-1] * self.radix(len(q) - 1))
        return q[i + 1]

    def digit_range(self, i: int) -> range:
        return range(self.radix(i))

    def word(self, digits) -> "DigitWord":
        return DigitWord(self, tuple(digits))

    # -- identity ----------------------------------------------------------

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MixedRadixSystem)
            and self.rule == other.rule
            and self.params == other.params
        )

    def __hash__(self) -> int:
        return hash((self.rule, self.params))

    def __repr__(self) -> str:
        if self.params:
            return f"MixedRadixSystem({self.rule!r}, {self.params!r})"
        return f"MixedRadixSystem({self.rule!r})"

    # -- descriptors (JSON-facing) ------------------------------------------

    def descriptor(self) -> dict:
        if self.rule == "constant":
            return {"rule": "constant", "params": {"r": self.params[0]}}
        if self.rule == "null-meager":
            return {"rule": "null-meager", "params": {"schedule": list(self.params)}}
        return {"rule": self.rule, "params": {}}

    @classmethod
    def from_descriptor(cls, desc: dict) -> "MixedRadixSystem":
        rule = desc["rule"]
        params = desc.get("params", {})
        if rule == "constant":
            return cls.constant(int(params["r"]))
        if rule == "null-meager":
            return cls.null_meager(tuple(int(k) for k in params.get("schedule", (0,))))
        return cls(rule)


class DigitWord:
    """Finite digit sequence in a fixed system; immutable and validated."""

    __slots__ = ("system", "digits")

    def __init__(self, system: MixedRadixSystem, digits):
        digits = tuple(digits)
        for i, d in enumerate(digits):
            if not isinstance(d, int) or not (0 <= d < system.radix(i)):
                raise InvalidDigit(
                    f"digit {d!r} out of range at level {i} (radix {system.radix(i)})"
                )
        self.system = system
        self.digits = digits

    def __len__(self) -> int:
        return len(self.digits)

    def __getitem__(self, i):
        return self.digits[i]

    def __iter__(self):
        return iter(self.digits)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DigitWord)
            and self.system == other.system
            and self.digits == other.digits
        )

    def __hash__(self) -> int:
        return hash((self.system, self.digits))

    def __repr__(self) -> str:
        return f"DigitWord({self.system!r}, {self.digits!r})"

    def value(self) -> Fraction:
        return eval_word(self)

    def cell(self) -> tuple[Fraction, Fraction]:
        """Closed interval of all unit-interval points extending this prefix."""
        lo = eval_word(self)
        k = len(self.digits)
        return lo, lo + Fraction(1, self.system.q(k - 1))


@dataclass(frozen=True)
class CarryTrace:
    result: DigitWord
    beta: tuple  # beta[i] == 1 iff a carry was injected into level i


def q_denominator(system: MixedRadixSystem, i: int) -> int:
    """Cumulative denominator q(i) for level i >= 0."""
    if i < 0:
        raise ValueError("level index must be >= 0")
    return system.q(i)


def eval_word(word: DigitWord) -> Fraction:
    """Exact value sum_i x_i / q(i) of a digit word."""
    q = word.system.q
    total = Fraction(0)
    for i, d in enumerate(word.digits):
        if d:
            total += Fraction(d, q(i))
    return total


def expand(system: MixedRadixSystem, x: Fraction, depth: int) -> DigitWord:
    """Greedy digit expansion of x in [0, 1) to the given depth.

    For rationals with a terminating expansion this returns the representative
    ending in zeros, never the one ending in maximal digits.
    """
    x = Fraction(x)
    if not (0 <= x < 1):
        raise ValueError(f"expand needs 0 <= x < 1, got {x}")
    digits = []
    rem = x
    for i in range(depth):
        rem *= system.radix(i)
        d = floor(rem)
        rem -= d
        digits.append(d)
    return DigitWord(system, digits)


def _common_length(a: DigitWord, d: DigitWord) -> tuple[tuple, tuple, int]:
    if a.system != d.system:
        raise ValueError("operands must share one system")
    k = max(len(a), len(d))
    pad = lambda w: w.digits + (0,) * (k - len(w))  # noqa: E731
    return pad(a), pad(d), k


def add_with_carry(a: DigitWord, d: DigitWord) -> CarryTrace:
    """Column addition of two digit words with carries toward level 0.

    The shorter operand is right-padded with zeros.  beta(i) records whether
    a carry was injected into level i (i.e. carried out of level i + 1).  A
    carry out of level 0 means eval(a) + eval(d) >= 1 and raises
    OverflowBeyondUnit.
    """
    xs, ys, k = _common_length(a, d)
    system = a.system
    out = [0] * k
    beta = [0] * k
    carry = 0
    for i in range(k - 1, -1, -1):
        beta[i] = carry
        s = xs[i] + ys[i] + carry
        r = system.radix(i)
        out[i] = s % r
        carry = s // r
    if carry:
        raise OverflowBeyondUnit(f"{eval_word(a)} + {eval_word(d)} >= 1")
    return CarryTrace(DigitWord(system, out), tuple(beta))


def beta_by_boundary_rule(a: DigitWord, d: DigitWord) -> tuple:
    """Carry flags computed independently of the column algorithm.

    A carry enters level i exactly when the raw column sums below level i
    add up to at least one unit of level i:

        beta(i) = 1  iff  sum_{j > i} (a_j + d_j) / q(j) >= 1 / q(i).

    This is the boundary characterization; tests hold it against
    add_with_carry on random word pairs.
    """
    xs, ys, k = _common_length(a, d)
    q = a.system.q
    beta = [0] * k
    tail = Fraction(0)
    for i in range(k - 1, -1, -1):
        beta[i] = 1 if tail >= Fraction(1, q(i)) else 0
        tail += Fraction(xs[i] + ys[i], q(i))
    return tuple(beta)


_RATIONAL_RE = re.compile(r"^[+-]?\d+(?:/\d+)?$")


def parse_rational(text: str) -> Fraction:
    """Parse 'p/q' or 'p' exactly; no decimal or scientific forms."""
    s = text.strip()
    if not _RATIONAL_RE.match(s):
        raise ValueError(f"not an exact rational: {text!r}")
    return Fraction(s)


def format_rational(x: Fraction) -> str:
    """Serialize as 'p/q', always including the denominator."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"
