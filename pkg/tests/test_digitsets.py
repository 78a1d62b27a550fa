"""Digit-set expressions: per-level constraints, unions, reflection, projection."""

import itertools
import random
from fractions import Fraction as F

import pytest

from haarlab.digitsets import (
    BlockComplementTail,
    Digits,
    FiniteUnion,
    FullTail,
    PeriodicTail,
    Product,
    Reflect,
    RepeatTail,
    SystemMismatch,
    UnionFamily,
    UnprojectableFamily,
    contains_at_depth,
    expr_from_descriptor,
    expr_to_descriptor,
    is_admissible_prefix,
    project,
    reflect,
    union_of,
)
from haarlab.intervals import IntervalUnion, contains_value, intersect, negate
from haarlab.numeric import MixedRadixSystem, eval_word

T3 = MixedRadixSystem.constant(3)


def ternary_cantor():
    return Product(T3, (), RepeatTail((0, 2)))


# -- Digits -------------------------------------------------------------------


def test_digits_constructors_and_membership():
    full = Digits.full(3)
    assert full.count() == 3 and full.contains(2)
    two = Digits.of(5, (0, 4))
    assert two.count() == 2
    assert [two.contains(d) for d in range(5)] == [True, False, False, False, True]
    band = Digits.excluding(25, ((1, 6), (13, 18)))
    assert band.count() == 15
    assert band.contains(0) and band.contains(6) and band.contains(12)
    assert not band.contains(3) and not band.contains(15)
    assert band.runs == ((0, 1), (6, 13), (18, 25))


def test_digits_runs_merge_and_clip():
    d = Digits(10, ((3, 5), (5, 7), (-2, 1), (9, 40)))
    assert d.runs == ((0, 1), (3, 7), (9, 10))
    assert d.min_digit() == 0
    assert list(d.iter_digits(4, 10)) == [4, 5, 6, 9]
    assert d.runs_between(4, 10) == [(4, 7), (9, 10)]


def test_digits_set_algebra():
    a = Digits.of(6, (0, 1, 4))
    b = Digits.of(6, (1, 2, 4, 5))
    assert a.union(b).runs == ((0, 3), (4, 6))
    assert a.intersect(b) == Digits.of(6, (1, 4))
    assert a.subtract(b) == Digits.of(6, (0,))
    assert Digits.of(6, ()).is_empty()
    with pytest.raises(ValueError):
        a.union(Digits.full(5))


# -- tail rules ---------------------------------------------------------------


def test_repeat_tail_validates_range():
    t = RepeatTail((0, 2))
    assert t.digits_at(T3, 7) == Digits.of(3, (0, 2))
    with pytest.raises(ValueError):
        RepeatTail((0, 5)).digits_at(T3, 0)


def test_periodic_tail_cycles_and_allows_gaps():
    t = PeriodicTail(2, ((0,), None))
    assert t.digits_at(T3, 0) == Digits.of(3, (0,))
    assert t.digits_at(T3, 1) == Digits.full(3)
    assert t.digits_at(T3, 4) == Digits.of(3, (0,))


def test_block_complement_tail_scales_with_level():
    s = MixedRadixSystem.cl()
    t = BlockComplementTail(l=1, m=37)
    assert t.digits_at(s, 0) == Digits.full(25)
    assert t.digits_at(s, 1) == Digits.excluding(75, ((37, 38),))
    assert t.digits_at(s, 2) == Digits.excluding(225, ((111, 114),))


def test_tail_descriptor_round_trips():
    for t in (FullTail(), RepeatTail((0, 2)), PeriodicTail(2, ((0,), None)),
              BlockComplementTail(3, 12)):
        back = type(t).from_descriptor(t.descriptor())
        assert back == t


# -- projections with hand-checked cells --------------------------------------


def test_ternary_projection_depth_one_and_two():
    c = ternary_cantor()
    assert project(c, 1) == IntervalUnion([(F(0), F(1, 3)), (F(2, 3), F(1))])
    assert project(c, 2) == IntervalUnion([
        (F(0), F(1, 9)), (F(2, 9), F(1, 3)), (F(2, 3), F(7, 9)), (F(8, 9), F(1))])
    assert project(c, 0) == IntervalUnion.single(0, 1)
    with pytest.raises(ValueError):
        project(c, -1)


def test_projection_nesting_is_monotone():
    c = ternary_cantor()
    for k in range(4):
        outer, inner = project(c, k), project(c, k + 1)
        assert intersect(outer, inner) == inner


def test_contains_at_depth_handles_boundary_points():
    c = ternary_cantor()
    # 1/3 is the right endpoint of the cell of (0,); only the 0,2,2,... reading
    # stays admissible
    assert contains_at_depth(c, F(1, 3), 5)
    assert not contains_at_depth(c, F(1, 2), 2)
    assert contains_at_depth(c, F(1, 4), 10)  # 0,2,0,2,... repeating
    assert not contains_at_depth(c, F(7, 2), 1)
    assert not contains_at_depth(c, F(-1, 4), 1)


def test_contains_at_depth_agrees_with_projection():
    rng = random.Random(5)
    c = ternary_cantor()
    for k in (1, 2, 3, 4):
        cells = project(c, k)
        for _ in range(50):
            x = F(rng.randrange(0, 3**k * 4), 3**k * 4)
            if x > 1:
                continue
            assert contains_at_depth(c, x, k) == contains_value(cells, x)


def test_admissible_prefix_uses_digit_words():
    c = ternary_cantor()
    assert is_admissible_prefix(c, T3.word((0, 2)))
    assert not is_admissible_prefix(c, T3.word((0, 1)))
    with pytest.raises(SystemMismatch):
        is_admissible_prefix(c, MixedRadixSystem.constant(5).word((0,)))


def test_prefix_extensibility():
    c = ternary_cantor()
    words = [()]
    for _ in range(3):
        words = [w + (d,) for w in words for d in c.next_digits(w).iter_digits()]
    assert len(words) == 8
    for w in words:
        assert not c.next_digits(w).is_empty()


# -- structural combinators ----------------------------------------------------


def test_finite_union_projects_to_union_of_members():
    left = Product(T3, (Digits.of(3, (0,)),), RepeatTail((0, 2)))
    right = Product(T3, (Digits.of(3, (2,)),), RepeatTail((0, 2)))
    u = union_of((left, right))
    assert isinstance(u, FiniteUnion)
    assert project(u, 2) == project(ternary_cantor(), 2)
    assert u.admits((0, 2)) and u.admits((2, 0)) and not u.admits((1,))
    assert u.next_digits(()) == Digits.of(3, (0, 2))


def test_finite_union_rejects_mixed_systems():
    with pytest.raises(SystemMismatch):
        FiniteUnion((ternary_cantor(),
                     Product(MixedRadixSystem.constant(5), (), FullTail())))
    with pytest.raises(ValueError):
        FiniteUnion(())


def test_reflect_negates_projection_and_membership():
    c = ternary_cantor()
    r = reflect(c)
    assert project(r, 2) == negate(project(c, 2))
    assert contains_at_depth(r, F(-1, 3), 4)
    assert not contains_at_depth(r, F(1, 3), 4)
    with pytest.raises(UnprojectableFamily):
        r.admits((0,))
    with pytest.raises(UnprojectableFamily):
        r.next_digits(())


def test_union_with_reflection_spans_both_signs():
    c = ternary_cantor()
    y = union_of((c, reflect(c)))
    assert contains_at_depth(y, F(1, 3), 4) and contains_at_depth(y, F(-1, 3), 4)
    # digit-word admissibility falls through to the unreflected member
    assert y.admits((0, 2)) and not y.admits((1,))


def test_union_family_needs_collapse_to_project():
    fam = UnionFamily(T3, lambda n: ternary_cantor(), None, label="bare")
    assert fam.member(3) is fam.member(3)
    with pytest.raises(UnprojectableFamily):
        fam.project(1)
    with pytest.raises(UnprojectableFamily):
        fam.admits((0,))


def test_union_family_with_trivial_collapse_projects():
    fam = UnionFamily(T3, lambda n: ternary_cantor(), ternary_cantor())
    assert fam.project(2) == project(ternary_cantor(), 2)
    assert fam.admits((0, 2))


def test_union_family_has_no_structural_descriptor():
    fam = UnionFamily(T3, lambda n: ternary_cantor(), ternary_cantor())
    with pytest.raises(ValueError):
        expr_to_descriptor(fam)


def test_descriptor_round_trip_preserves_projection():
    c = Product(T3, (Digits.of(3, (0, 1)),), RepeatTail((0, 2)))
    exprs = [c, union_of((c, reflect(c))), reflect(c)]
    for expr in exprs:
        back = expr_from_descriptor(T3, expr_to_descriptor(expr))
        for k in (1, 2, 3):
            assert project(back, k) == project(expr, k)


# -- cross-checks against exhaustive enumeration --------------------------------


def enumerate_cells(expr, depth):
    """All admissible depth-length words by brute force over full ranges."""
    system = expr.system
    words = [()]
    for i in range(depth):
        words = [w + (d,) for w in words for d in range(system.radix(i))
                 if expr.admits(w + (d,))]
    width = F(1, system.q(depth - 1))
    cells = []
    for w in words:
        v = sum((F(d, system.q(i)) for i, d in enumerate(w)), F(0))
        cells.append((v, v + width))
    return IntervalUnion(cells), words


def test_projection_matches_brute_force_on_random_small_systems():
    rng = random.Random(13)
    for _ in range(40):
        radix = rng.randint(2, 5)
        system = MixedRadixSystem.constant(radix)
        depth = rng.randint(1, 3)
        levels = []
        for i in range(rng.randint(0, depth)):
            allowed = [d for d in range(radix) if rng.random() < 0.6]
            if not allowed:
                allowed = [rng.randrange(radix)]
            levels.append(Digits.of(radix, allowed))
        tail_digits = tuple(sorted(rng.sample(range(radix), rng.randint(1, radix))))
        expr = Product(system, levels, RepeatTail(tail_digits))
        cells, words = enumerate_cells(expr, depth)
        assert project(expr, depth) == cells
        for w in words:
            assert expr.admits(w)
            assert contains_at_depth(expr, eval_word(system.word(w)), depth)


def test_projection_matches_brute_force_on_geometric_radix_system():
    s = MixedRadixSystem.cl()
    expr = Product(s, (Digits.excluding(25, ((1, 6), (13, 18))),),
                   RepeatTail((0,)))
    cells, _ = enumerate_cells(expr, 2)
    assert project(expr, 2) == cells


def test_sampled_words_land_in_projection():
    rng = random.Random(99)
    c = Product(MixedRadixSystem.null_meager(), (), RepeatTail((0, 2)))
    cells = project(c, 3)
    for _ in range(500):
        w = []
        for i in range(6):
            choices = list(c.next_digits(tuple(w)).iter_digits())
            w.append(rng.choice(choices))
        x = eval_word(c.system.word(w))
        assert contains_value(cells, x)


def test_product_validates_levels():
    with pytest.raises(TypeError):
        Product(T3, ((0, 2),), FullTail())
    with pytest.raises(ValueError):
        Product(T3, (Digits.full(5),), FullTail())
    with pytest.raises(ValueError):
        Product(T3, (Digits.of(3, ()),), FullTail())
