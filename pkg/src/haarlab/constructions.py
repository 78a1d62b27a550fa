"""Named factories for the concrete digit-defined sets and their companions.

Every construction this package certifies something about is built here, by
name, with its mixed-radix system, digit-set expression, and companion data
(gap sequences, translate formulas, forbidden cell families, digit pools).

Identifier grammar (shared with the CLI and descriptor JSON):

    ternary | gap(m) | haar_family(n[,m]) | cl(l) | w(k,l)
    | notideal_X | notideal_A | notideal_B | notideal_Y
    | nullmeager([k0,k1,...]) | reflect(<identifier>)

The scaled-block constructions live on the level schedule q(0) = 25,
q(i) = q(i-1) * 25 * 3^i.  Their key integer parameters:

* middle digit m(l) = (25 * 3^l - 1) / 2, the center of level l's range;
* ladder sets L(0) = {8, 10}, L(n) = 3 L(n-1) union (3 L(n-1) + 2), which
  mark the gap positions the layered union fills at each level;
* two-sided band(n): digits within 1 of L(n) + floor(m(n)/2) or of
  L(n) - floor(m(n)/2).  The band is taken two-sided at every level,
  including level 0, so that the band-removed layer sits at distance
  at least 1/q(n) from the gap-coded translate in both directions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .digitsets import (
    BlockComplementTail,
    Digits,
    DigitSetExpr,
    FiniteUnion,
    FullTail,
    PeriodicTail,
    Product,
    Reflect,
    RepeatTail,
    TailRule,
    UnionFamily,
    expr_from_descriptor,
    register_tail_kind,
)
from .numeric import MixedRadixSystem, expand

__all__ = [
    "UnknownConstruction",
    "InvalidParams",
    "m_level",
    "l_sets",
    "check_L_bounds",
    "b_digit_band",
    "pigeonhole_margin",
    "lem2_translates",
    "gap_sequence",
    "haar_gap_sequence",
    "CellFamily",
    "z_cell_family",
    "t_cell_family",
    "middle_cell_family",
    "LSetsTail",
    "MiddleExcludedTail",
    "NamedConstruction",
    "make",
    "parse_construction",
    "construction_descriptor",
    "resolve_set_descriptor",
]


class UnknownConstruction(ValueError):
    """No construction is registered under the requested name."""


class InvalidParams(ValueError):
    """Construction parameters outside their documented domain."""


# ---------------------------------------------------------------------------
# Integer parameters of the scaled-block schedule
# ---------------------------------------------------------------------------


def m_level(l: int) -> int:
    """Center digit (25 * 3^l - 1) / 2 of level l's digit range."""
    if l < 0:
        raise InvalidParams("level must be >= 0")
    return (25 * 3**l - 1) // 2


@lru_cache(maxsize=None)
def l_sets(n: int) -> tuple:
    """Ladder set L(n): L(0) = (8, 10), L(n) = 3 L(n-1) union 3 L(n-1) + 2."""
    if n < 0:
        raise InvalidParams("ladder index must be >= 0")
    if n == 0:
        return (8, 10)
    prev = l_sets(n - 1)
    return tuple(sorted({3 * l for l in prev} | {3 * l + 2 for l in prev}))


def check_L_bounds(n_max: int) -> dict:
    """Exact integer verification of the ladder-set bounds up to n_max.

    For each n: max L(n) < m(n) - 1, min L(n) > (m(n) + 1) / 2, and no two
    consecutive integers occur in L(n).
    """
    rows = []
    for n in range(n_max + 1):
        ls = l_sets(n)
        m = m_level(n)
        row = {
            "n": n,
            "max": max(ls),
            "min": min(ls),
            "m": m,
            "max_ok": max(ls) < m - 1,
            # min L(n) > (m + 1)/2 without leaving integers
            "min_ok": 2 * min(ls) > m + 1,
            "no_consecutive": all(b - a >= 2 for a, b in zip(ls, ls[1:])),
        }
        rows.append(row)
    return {
        "n_max": n_max,
        "ok": all(r["max_ok"] and r["min_ok"] and r["no_consecutive"] for r in rows),
        "rows": rows,
    }


def b_digit_band(n: int) -> tuple:
    """Two-sided band at level n: digits within 1 of L(n) +- floor(m(n)/2)."""
    half = m_level(n) // 2
    radix = 25 * 3**n
    vals = set()
    for l in l_sets(n):
        for base in (l + half, l - half):
            for d in (base - 1, base, base + 1):
                if 0 <= d < radix:
                    vals.add(d)
    return tuple(sorted(vals))


def pigeonhole_margin(l: int, n: int) -> tuple:
    """(worst-case excluded count, available count) for level-n greedy picks.

    Each translated block family can exclude at most 3^(n-l) + 1 candidate
    digits; there are m(l) - 1 families and 25 * 3^n - 3^(n-l) non-block
    digits, so the pick succeeds whenever the first number is below the
    second.
    """
    if not 0 <= l <= n:
        raise InvalidParams("need 0 <= l <= n")
    lhs = (3 ** (n - l) + 1) * (m_level(l) - 1)
    rhs = 25 * 3**n - 3 ** (n - l)
    return lhs, rhs


# ---------------------------------------------------------------------------
# Companion sequences
# ---------------------------------------------------------------------------


def lem2_translates(l: int, k: int) -> list:
    """The 2 m(l) + 2 translates that cover the level-k gap structure.

    x_j = j * 3^(k-l) / q(k) + (25 * 3^(k+1) - 1 - j) / q(k+1) for
    j = 0, ..., 2 m(l), plus the zero translate last.
    """
    if k < l:
        raise InvalidParams("need k >= l")
    system = MixedRadixSystem.cl()
    qk, qk1 = system.q(k), system.q(k + 1)
    out = [
        Fraction(j * 3 ** (k - l), qk) + Fraction(25 * 3 ** (k + 1) - 1 - j, qk1)
        for j in range(2 * m_level(l) + 1)
    ]
    out.append(Fraction(0))
    return out


def gap_sequence(m: int, count: int) -> list:
    """Gaps (m - 1) / (2 m^(k+1)), k < count, for the two-digit base-m set."""
    return [Fraction(m - 1, 2 * m ** (k + 1)) for k in range(count)]


def haar_gap_sequence(n: int, m: int, count: int) -> list:
    """Gaps 5 / (2 * 5^((n+1)k + m + 1)) for the residue-m base-5 member."""
    return [Fraction(5, 2 * 5 ** ((n + 1) * k + m + 1)) for k in range(count)]


# ---------------------------------------------------------------------------
# Forbidden cell families (the greedy finders avoid their translated cells)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CellFamily:
    """Union of half-open cells [p/q(level), (p+1)/q(level)) at one level.

    A value belongs to the family when its greedy digit expansion (the
    representative with a trailing-zero tail, never trailing-maximal) has its
    level digit inside ``block`` and, below ``level``, digits inside the
    corresponding ``prefix_sets`` entries.
    """

    system: MixedRadixSystem
    level: int
    block: tuple  # half-open digit range [lo, hi) at `level`
    prefix_sets: tuple = ()  # per-level allowed digit tuples, levels 0..len-1

    def contains_value(self, x) -> bool:
        x = Fraction(x)
        if not 0 <= x < 1:
            return False
        word = expand(self.system, x, self.level + 1)
        for i, allowed in enumerate(self.prefix_sets):
            if word[i] not in allowed:
                return False
        return self.block[0] <= word[self.level] < self.block[1]


def z_cell_family(l: int, k: int) -> CellFamily:
    """Level-k cells whose digit sits in the scaled m(l) block."""
    if k < l:
        raise InvalidParams("need k >= l")
    width = 3 ** (k - l)
    m = m_level(l)
    return CellFamily(MixedRadixSystem.cl(), k, (m * width, (m + 1) * width))


def t_cell_family(n: int, k: int) -> CellFamily:
    """z_cell_family(n, k) restricted to ladder-coded digits below level n."""
    if k < n:
        raise InvalidParams("need k >= n")
    width = 3 ** (k - n)
    m = m_level(n)
    return CellFamily(
        MixedRadixSystem.not_ideal(),
        k,
        (m * width, (m + 1) * width),
        tuple(l_sets(i) for i in range(n)),
    )


def middle_cell_family(system: MixedRadixSystem, i: int) -> CellFamily:
    """Level-i cells whose digit is the excluded middle digit."""
    mid = (system.radix(i) - 1) // 2
    return CellFamily(system, i, (mid, mid + 1))


# ---------------------------------------------------------------------------
# Construction-specific tail rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LSetsTail(TailRule):
    """Every level i restricted to the ladder set L(i)."""

    kind = "ladder"

    def digits_at(self, system, i):
        return Digits.of(system.radix(i), l_sets(i))

    def descriptor(self):
        return {"kind": "ladder"}

    @classmethod
    def from_descriptor(cls, desc):
        return cls()


@dataclass(frozen=True)
class MiddleExcludedTail(TailRule):
    """Every level keeps all digits except the middle one (odd radixes)."""

    kind = "middle-excluded"

    def digits_at(self, system, i):
        r = system.radix(i)
        mid = (r - 1) // 2
        return Digits.excluding(r, ((mid, mid + 1),))

    def descriptor(self):
        return {"kind": "middle-excluded"}

    @classmethod
    def from_descriptor(cls, desc):
        return cls()


register_tail_kind(LSetsTail)
register_tail_kind(MiddleExcludedTail)


# ---------------------------------------------------------------------------
# Layered union members (shared by notideal_X / notideal_A / notideal_B)
# ---------------------------------------------------------------------------


def _layer_level_digits(n: int) -> Digits:
    """Level-n digits of layer n: everything but the ladder set and block."""
    radix = 25 * 3**n
    excluded = [(l, l + 1) for l in l_sets(n)]
    excluded.append((m_level(n), m_level(n) + 1))
    return Digits.excluding(radix, excluded)


def _layer_expr(system: MixedRadixSystem, n: int, variant: str) -> Product:
    """Layer n: ladder digits below n, constrained level n, blocks above.

    variant: "X" keeps the full level-n set, "A" removes the band, "B" keeps
    only the band.
    """
    level_n = _layer_level_digits(n)
    band = Digits.of(25 * 3**n, b_digit_band(n))
    if variant == "A":
        level_n = level_n.subtract(band)
    elif variant == "B":
        level_n = level_n.intersect(band)
    levels = [Digits.of(25 * 3**m, l_sets(m)) for m in range(n)]
    levels.append(level_n)
    return Product(system, levels, BlockComplementTail(n, m_level(n)))


def _all_ladder_collapse(system: MixedRadixSystem) -> Product:
    return Product(system, (), LSetsTail())


def _layer_family(variant: str, text: str) -> UnionFamily:
    system = MixedRadixSystem.not_ideal()
    return UnionFamily(
        system,
        lambda n: _layer_expr(system, n, variant),
        _all_ladder_collapse(system),
        label=text,
    )


# ---------------------------------------------------------------------------
# Named constructions
# ---------------------------------------------------------------------------


@dataclass
class NamedConstruction:
    name: str
    params: dict
    text: str  # canonical identifier, e.g. "gap(5)"
    system: MixedRadixSystem
    expr: DigitSetExpr
    companions: dict = field(default_factory=dict)


def _require_int(params, key, minimum=None):
    v = params.get(key)
    if not isinstance(v, int):
        raise InvalidParams(f"parameter {key!r} must be an integer")
    if minimum is not None and v < minimum:
        raise InvalidParams(f"parameter {key!r} must be >= {minimum}")
    return v


def make(name: str, **params) -> NamedConstruction:
    """Build a named construction with companions populated."""
    if name == "ternary":
        system = MixedRadixSystem.constant(3)
        expr = Product(system, (), RepeatTail((0, 2)))
        comp = {"digits": (0, 2), "gaps": lambda count: gap_sequence(3, count)}
        return NamedConstruction("ternary", {}, "ternary", system, expr, comp)

    if name == "gap":
        m = _require_int(params, "m", 4)
        system = MixedRadixSystem.constant(m)
        expr = Product(system, (), RepeatTail((0, m - 1)))
        comp = {"digits": (0, m - 1), "gaps": lambda count: gap_sequence(m, count)}
        return NamedConstruction("gap", {"m": m}, f"gap({m})", system, expr, comp)

    if name == "haar_family":
        n = _require_int(params, "n", 1)
        system = MixedRadixSystem.constant(5)
        if "m" in params and params["m"] is not None:
            m = _require_int(params, "m", 0)
            if m > n:
                raise InvalidParams("need 0 <= m <= n")
            entries = [None] * (n + 1)
            entries[m] = (0, 4)
            expr = Product(system, (), PeriodicTail(n + 1, tuple(entries)))
            comp = {"gaps": lambda count, n=n, m=m: haar_gap_sequence(n, m, count)}
            return NamedConstruction(
                "haar_family", {"n": n, "m": m}, f"haar_family({n},{m})",
                system, expr, comp,
            )
        members = [make("haar_family", n=n, m=m) for m in range(n + 1)]
        expr = FiniteUnion([mem.expr for mem in members])
        comp = {"members": members}
        return NamedConstruction(
            "haar_family", {"n": n}, f"haar_family({n})", system, expr, comp
        )

    if name == "cl":
        l = _require_int(params, "l", 0)
        system = MixedRadixSystem.cl()
        expr = Product(system, (), BlockComplementTail(l, m_level(l)))
        comp = {
            "m": m_level(l),
            "translates": lambda k, l=l: lem2_translates(l, k),
            "cell_family": lambda k, l=l: z_cell_family(l, k),
        }
        return NamedConstruction("cl", {"l": l}, f"cl({l})", system, expr, comp)

    if name == "w":
        k = _require_int(params, "k", 0)
        l = _require_int(params, "l", 0)
        if k < l:
            raise InvalidParams("need k >= l")
        system = MixedRadixSystem.cl()
        width = 3 ** (k - l)
        m = m_level(l)
        levels = [Digits.full(25 * 3**i) for i in range(k)]
        levels.append(
            Digits.excluding(25 * 3**k, ((m * width, (m + 1) * width),))
        )
        expr = Product(system, levels, FullTail())
        comp = {"m": m, "translates": lem2_translates(l, k)}
        return NamedConstruction(
            "w", {"k": k, "l": l}, f"w({k},{l})", system, expr, comp
        )

    if name in ("notideal_X", "notideal_A", "notideal_B"):
        variant = name[-1]
        expr = _layer_family(variant, name)
        comp = {
            "pools": l_sets,
            "t_family": t_cell_family,
            "band": b_digit_band,
        }
        return NamedConstruction(name, {}, name, expr.system, expr, comp)

    if name == "notideal_Y":
        base = _layer_family("X", "notideal_X")
        expr = FiniteUnion([base, Reflect(base)])
        comp = {"pools": l_sets, "t_family": t_cell_family}
        return NamedConstruction(name, {}, name, expr.system, expr, comp)

    if name == "nullmeager":
        schedule = tuple(params.get("schedule", (0,)))
        try:
            system = MixedRadixSystem.null_meager(schedule)
        except ValueError as exc:
            raise InvalidParams(str(exc)) from None
        expr = Product(system, (), MiddleExcludedTail())
        text = (
            "nullmeager"
            if schedule == (0,)
            else "nullmeager(" + ",".join(str(k) for k in schedule) + ")"
        )
        comp = {
            "middle_family": lambda i, system=system: middle_cell_family(system, i),
        }
        return NamedConstruction(
            "nullmeager", {"schedule": schedule}, text, system, expr, comp
        )

    raise UnknownConstruction(f"unknown construction {name!r}")


_ALIASES = {
    "ternary_cantor": "ternary",
    "gap_set": "gap",
    "cl_set": "cl",
    "w_set": "w",
    "nullmeager_X": "nullmeager",
}

_NAME_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?\s*$")


def parse_construction(text: str) -> NamedConstruction:
    """Parse an identifier like 'gap(5)', 'w(1,0)' or 'reflect(notideal_X)'."""
    match = _NAME_RE.match(text)
    if not match:
        raise UnknownConstruction(f"cannot parse construction {text!r}")
    name, args = match.group(1), match.group(2)
    name = _ALIASES.get(name, name)
    if name == "reflect":
        if args is None:
            raise InvalidParams("reflect needs an inner construction")
        inner = parse_construction(args)
        return NamedConstruction(
            "reflect",
            {"inner": inner},
            f"reflect({inner.text})",
            inner.system,
            Reflect(inner.expr),
            {"inner": inner},
        )
    values = []
    if args is not None and args.strip():
        for piece in args.split(","):
            piece = piece.strip()
            if not re.match(r"^-?\d+$", piece):
                raise InvalidParams(f"non-integer parameter {piece!r} in {text!r}")
            values.append(int(piece))
    if name == "ternary":
        kwargs = {}
    elif name == "gap":
        kwargs = {"m": values[0]} if values else {}
    elif name == "haar_family":
        if len(values) == 1:
            kwargs = {"n": values[0]}
        elif len(values) == 2:
            kwargs = {"n": values[0], "m": values[1]}
        else:
            raise InvalidParams("haar_family takes (n) or (n,m)")
    elif name == "cl":
        kwargs = {"l": values[0]} if values else {}
    elif name == "w":
        if len(values) != 2:
            raise InvalidParams("w takes (k,l)")
        kwargs = {"k": values[0], "l": values[1]}
    elif name == "nullmeager":
        kwargs = {"schedule": tuple(values)} if values else {}
    elif name in ("notideal_X", "notideal_A", "notideal_B", "notideal_Y"):
        kwargs = {}
    else:
        raise UnknownConstruction(f"unknown construction {name!r}")
    if name in ("gap", "cl") and not kwargs:
        raise InvalidParams(f"{name} needs a parameter, e.g. {name}(5)")
    return make(name, **kwargs)


def construction_descriptor(nc: NamedConstruction) -> dict:
    """JSON descriptor naming the construction (round-trips via resolve)."""
    return {
        "system": nc.system.descriptor(),
        "set": {"kind": "named", "name": nc.text},
    }


def resolve_set_descriptor(desc: dict):
    """(system, expr) from a descriptor, named or structural."""
    set_desc = desc["set"]
    if set_desc.get("kind") == "named":
        nc = parse_construction(set_desc["name"])
        return nc.system, nc.expr
    system = MixedRadixSystem.from_descriptor(desc["system"])
    return system, expr_from_descriptor(system, set_desc)
