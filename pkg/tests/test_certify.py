"""Certification engine: emptiness proofs, point finders, re-verification."""

import json
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from haarlab.certify import (
    CERTIFIED_EMPTY,
    INCONCLUSIVE_AT_DEPTH,
    POINT_FOUND,
    Certificate,
    NoAdmissibleDigit,
    NotAFixedPoint,
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
    witness_claim,
    witness_from_claim,
)
from haarlab.constructions import gap_sequence, haar_gap_sequence, make
from haarlab.digitsets import FullTail, Product, RepeatTail, is_admissible_prefix
from haarlab.intervals import (
    IntervalUnion,
    get_max_intervals,
    set_max_intervals,
)
from haarlab.numeric import (
    MixedRadixSystem,
    eval_word,
    parse_rational,
)
from haarlab.witness import (
    build_cl_witness,
    build_notideal_D,
    build_notideal_E,
    build_ternary_haar2_witness,
    extract_sparse_subcantor,
    scaled_ternary_increment_tree,
)

T3 = MixedRadixSystem.constant(3)


def round_trip(cert):
    """Serialize, reload, and independently re-verify a certificate."""
    data = json.loads(json.dumps(cert.to_jsonable()))
    return reverify_certificate(data)


def brute_region(expr, translate, pad, depth):
    """(set - [t, t+p]) at one depth by full word enumeration, pure lists."""
    system = expr.system
    width = F(1, system.q(depth - 1))
    words = [((), F(0))]
    for i in range(depth):
        qi = system.q(i)
        words = [(w + (d,), v + F(d, qi)) for w, v in words
                 for d in range(system.radix(i)) if expr.admits(w + (d,))]
    spans = sorted((v - translate - pad, v + width - translate) for _, v in words)
    merged = []
    for lo, hi in spans:
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(hi, merged[-1][1]))
        else:
            merged.append((lo, hi))
    return merged


def brute_intersection_empty(expr, translates, pads, depth):
    regions = [brute_region(expr, t, p, depth) for t, p in zip(translates, pads)]
    acc = regions[0]
    for region in regions[1:]:
        out = []
        i = j = 0
        while i < len(acc) and j < len(region):
            lo = max(acc[i][0], region[j][0])
            hi = min(acc[i][1], region[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if acc[i][1] < region[j][1]:
                i += 1
            else:
                j += 1
        acc = out
    return not acc


# -- certify_empty_intersection ---------------------------------------------------


def test_single_gap_translate_certified_against_brute_force():
    g5 = make("gap", m=5)
    cert = certify_empty_intersection(g5.expr, [F(0), F(2, 5)], depth=8,
                                      set_name="gap(5)")
    assert cert.status == CERTIFIED_EMPTY
    assert cert.depth == 1
    assert cert.residual is None and cert.point is None
    for depth in (1, 2, 3):
        assert brute_intersection_empty(g5.expr, [F(0), F(2, 5)],
                                        [F(0), F(0)], depth)
    assert round_trip(cert)["ok"]


def test_witness_triple_certified_and_matches_brute_force():
    w = build_ternary_haar2_witness()
    tern = make("ternary")
    values = [w.branch_value(b, 2) for b in (0, 1, 2)]
    pad = w.tail_bound(49)
    cert = certify_empty_intersection(tern.expr, values, [pad] * 3, 40,
                                      set_name="ternary")
    assert cert.status == CERTIFIED_EMPTY
    assert cert.depth == 6
    assert brute_intersection_empty(tern.expr, values, [pad] * 3, 6)
    assert not brute_intersection_empty(tern.expr, values, [pad] * 3, 5)
    assert round_trip(cert)["ok"]


def test_certified_depth_is_stable_under_larger_caps():
    g5 = make("gap", m=5)
    first = certify_empty_intersection(g5.expr, [F(0), F(2, 25)], depth=16)
    again = certify_empty_intersection(g5.expr, [F(0), F(2, 25)], depth=64)
    assert first.status == again.status == CERTIFIED_EMPTY
    assert first.depth == again.depth == 2


def test_inconclusive_when_translate_is_a_real_difference():
    tern = make("ternary")
    cert = certify_empty_intersection(tern.expr, [F(0), F(2, 3)], depth=6,
                                      set_name="ternary")
    assert cert.status == INCONCLUSIVE_AT_DEPTH
    assert cert.depth == 6
    # 0 + 0 and 0 + 2/3 both stay members, so 0 survives in the residual
    pieces = [(parse_rational(lo), parse_rational(hi)) for lo, hi in cert.residual]
    assert any(lo <= 0 <= hi for lo, hi in pieces)
    assert not brute_intersection_empty(tern.expr, [F(0), F(2, 3)],
                                        [F(0), F(0)], 6)
    assert round_trip(cert)["ok"]


def test_input_validation():
    tern = make("ternary")
    with pytest.raises(ValueError):
        certify_empty_intersection(tern.expr, [], depth=4)
    with pytest.raises(ValueError):
        certify_empty_intersection(tern.expr, [F(0)], pads=[F(0), F(0)], depth=4)
    with pytest.raises(ValueError):
        certify_empty_intersection(tern.expr, [F(0)], pads=[F(-1, 3)], depth=4)
    with pytest.raises(ValueError):
        certify_empty_intersection(tern.expr, [F(0)], depth=0)


def test_capacity_exhaustion_reports_honest_inconclusive():
    full = Product(T3, (), FullTail())
    old = get_max_intervals()
    try:
        set_max_intervals(32)
        cert = certify_empty_intersection(full, [F(0), F(1, 7)], depth=12)
    finally:
        set_max_intervals(old)
    assert cert.status == INCONCLUSIVE_AT_DEPTH
    assert cert.claim.get("capped") is True
    assert 1 <= cert.depth < 12
    assert cert.residual


# -- witness tuple reports ---------------------------------------------------------


def test_verify_haar_n_generation_two_all_certified():
    w = build_ternary_haar2_witness()
    tern = make("ternary")
    report = verify_haar_n(tern.expr, w, 2, 2, 40, set_name="ternary")
    assert report.aggregate == "ALL_CERTIFIED"
    assert [c.depth for c in report.certificates] == [6, 6, 30, 15]
    assert report.claim["tuples"] == [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]]
    data = json.loads(json.dumps(report.to_jsonable()))
    assert reverify_certificate(data)["ok"]


def test_verify_haar_n_generation_three_all_certified():
    w = build_ternary_haar2_witness()
    tern = make("ternary")
    report = verify_haar_n(tern.expr, w, 2, 3, 200, set_name="ternary")
    assert report.aggregate == "ALL_CERTIFIED"
    assert len(report.certificates) == 56
    assert max(c.depth for c in report.certificates) == 159


def test_verify_haar_n_vacuous_generation():
    w = build_ternary_haar2_witness()
    tern = make("ternary")
    report = verify_haar_n(tern.expr, w, 2, 1, 8, set_name="ternary")
    assert report.claim["vacuous"] is True
    assert report.certificates == []
    assert report.aggregate == "ALL_CERTIFIED"


def test_verify_haar_n_sample_validation():
    w = build_ternary_haar2_witness()
    tern = make("ternary")
    with pytest.raises(ValueError):
        verify_haar_n(tern.expr, w, 2, 2, 8, sample=[(0, 0, 1)])
    with pytest.raises(ValueError):
        verify_haar_n(tern.expr, w, 2, 2, 8, sample=[(0, 1, 9)])
    with pytest.raises(ValueError):
        verify_haar_n(tern.expr, w, 0, 2, 8)
    with pytest.raises(ValueError):
        verify_haar_n(tern.expr, w, 2, 0, 8)


def test_verify_haar_n_workers_match_serial_report():
    w = build_ternary_haar2_witness()
    tern = make("ternary")
    serial = verify_haar_n(tern.expr, w, 2, 2, 40, set_name="ternary")
    threaded = verify_haar_n(tern.expr, w, 2, 2, 40, set_name="ternary",
                             workers=4)
    strip = lambda d: json.loads(  # noqa: E731
        json.dumps(d.to_jsonable()).replace('"elapsed_ms"', '"x"'))

    def drop(d):
        if isinstance(d, dict):
            return {k: drop(v) for k, v in d.items() if k != "elapsed_ms"}
        if isinstance(d, list):
            return [drop(v) for v in d]
        return d

    assert drop(serial.to_jsonable()) == drop(threaded.to_jsonable())


def test_sampled_tuple_certificates_across_witnesses():
    cl0 = make("cl", l=0)
    cases = [
        (build_cl_witness(0), 5, 2),
        (build_notideal_D(), 5, 7),
        (build_notideal_E(), 5, 12),
    ]
    for witness, generation, expected_depth in cases:
        cert = sampled_tuple_certificate(cl0.expr, witness, generation, 16,
                                         set_name="cl(0)")
        assert cert.status == CERTIFIED_EMPTY
        assert cert.depth == expected_depth
        assert round_trip(cert)["ok"]
    with pytest.raises(ValueError):
        sampled_tuple_certificate(cl0.expr, build_notideal_D(), 4, 8)


def test_witness_claim_round_trip():
    for build in (build_ternary_haar2_witness, lambda: build_cl_witness(1),
                  build_notideal_D, build_notideal_E):
        w = build()
        back = witness_from_claim(witness_claim(w))
        assert back.scheme.kind == w.scheme.kind
        assert back.block_bounds(back.first_generation) == \
            w.block_bounds(w.first_generation)


# -- gap sequences and difference attractor ------------------------------------------


def test_gap_sequence_certificates():
    g5 = make("gap", m=5)
    cert = certify_haar1_gap_sequence(g5.expr, gap_sequence(5, 11), 64,
                                      set_name="gap(5)")
    assert cert.status == CERTIFIED_EMPTY
    assert cert.depth == 11
    assert cert.claim["conclusion"] == "HAAR1_EVIDENCE"
    assert len(cert.claim["per_gap"]) == 11
    assert all(row["status"] == CERTIFIED_EMPTY for row in cert.claim["per_gap"])
    assert round_trip(cert)["ok"]


def test_gap_sequence_on_residue_member():
    member = make("haar_family", n=1, m=0)
    cert = certify_haar1_gap_sequence(member.expr, haar_gap_sequence(1, 0, 9),
                                      64, set_name=member.text)
    assert cert.status == CERTIFIED_EMPTY
    assert cert.depth == 17
    assert cert.claim["conclusion"] == "HAAR1_EVIDENCE"


def test_gap_sequence_inconclusive_when_gap_is_a_difference():
    tern = make("ternary")
    cert = certify_haar1_gap_sequence(tern.expr, [F(1, 3)], 5, set_name="ternary")
    assert cert.status == INCONCLUSIVE_AT_DEPTH
    assert cert.claim["conclusion"] is None
    assert cert.residual


def test_gap_sequence_validation():
    tern = make("ternary")
    with pytest.raises(ValueError):
        certify_haar1_gap_sequence(tern.expr, [], 4)
    with pytest.raises(ValueError):
        certify_haar1_gap_sequence(tern.expr, [F(1, 3), F(1, 3)], 4)
    with pytest.raises(ValueError):
        certify_haar1_gap_sequence(tern.expr, [F(0)], 4)


def test_difference_attractor_full_interval_refutes_haar1():
    tern = make("ternary")
    box = IntervalUnion([(F(-1), F(1))])
    cert = refute_haar1_difference_interval(tern.expr, box, set_name="ternary")
    assert cert.status == POINT_FOUND
    assert cert.claim["conclusion"] == "NOT_HAAR1"
    assert cert.claim["zero_radius"] == "1/1"
    assert cert.point["value"] == "0/1"
    assert round_trip(cert)["ok"]


def test_difference_attractor_rejects_non_fixed_candidates():
    g5 = make("gap", m=5)
    with pytest.raises(NotAFixedPoint):
        refute_haar1_difference_interval(g5.expr, IntervalUnion([(F(-1), F(1))]))
    with pytest.raises(NotAFixedPoint):
        refute_haar1_difference_interval(g5.expr, IntervalUnion.empty())


def test_difference_attractor_singleton_gives_haar1_evidence():
    single = Product(T3, (), RepeatTail((0,)))
    cert = refute_haar1_difference_interval(single, IntervalUnion([(F(0), F(0))]))
    assert cert.status == CERTIFIED_EMPTY
    assert cert.claim["conclusion"] == "HAAR1_EVIDENCE"
    assert cert.claim["zero_radius"] is None
    assert round_trip(cert)["ok"]


def test_difference_attractor_needs_uniform_constant_base():
    with pytest.raises(ValueError):
        refute_haar1_difference_interval(make("cl", l=0).expr,
                                         IntervalUnion([(F(-1), F(1))]))


# -- greedy point finders -------------------------------------------------------------


def test_refute_haar_finite_X_frozen_point():
    cert = refute_haar_finite_X([F(1, 25), F(1, 1875), F(1, 421875)], 4)
    assert cert.status == POINT_FOUND
    assert cert.point["value"] == "3511808/10546875"
    assert all(row["ok"] for row in cert.claim["memberships"])
    assert round_trip(cert)["ok"]
    # membership is checked against the layered union itself
    x = make("notideal_X")
    v = parse_rational(cert.point["value"])
    for t in (F(1, 25), F(1, 1875), F(1, 421875)):
        assert x.expr.contains_at_depth(v + t, 4)


def test_refute_haar_finite_X_validation():
    with pytest.raises(ValueError):
        refute_haar_finite_X([F(1, 25), F(1, 25)], 4)
    with pytest.raises(ValueError):
        refute_haar_finite_X([F(-1, 25)], 4)


def test_refute_null_finite_decreasing_to_half():
    y = make("notideal_Y")
    seq = [F(1, 2) + F(1, 25), F(1, 2) + F(1, 1875), F(1, 2) + F(1, 421875)]
    cert = refute_null_finite(y.expr, seq, 3, 4, limit=F(1, 2), set_name=y.text)
    assert cert.status == POINT_FOUND
    assert cert.claim["direction"] == "decreasing"
    assert cert.claim["found_point"] == "3523259/21093750"
    assert all(row["ok"] for row in cert.claim["memberships"])
    assert round_trip(cert)["ok"]


def test_refute_null_finite_increasing_to_half():
    y = make("notideal_Y")
    seq = [F(1, 2) - F(1, 25), F(1, 2) - F(1, 1875), F(1, 2) - F(1, 421875)]
    cert = refute_null_finite(y.expr, seq, 3, 4, limit=F(1, 2), set_name=y.text)
    assert cert.claim["direction"] == "increasing"
    assert cert.claim["found_point"] == "17570491/21093750"
    assert round_trip(cert)["ok"]


def test_refute_null_finite_default_limit_zero():
    y = make("notideal_Y")
    seq = [F(1, 25), F(1, 1875), F(1, 421875)]
    cert = refute_null_finite(y.expr, seq, 3, 4, set_name=y.text)
    assert cert.claim["found_point"] == "-3511808/10546875"
    assert round_trip(cert)["ok"]
    zero_terms = refute_null_finite(y.expr, seq, 0, 4, set_name=y.text)
    assert zero_terms.status == POINT_FOUND
    assert zero_terms.claim["memberships"] == []


def test_refute_null_finite_validation():
    y = make("notideal_Y")
    with pytest.raises(ValueError):
        refute_null_finite(y.expr, [F(1, 4), F(1, 4)], 2, 4)
    with pytest.raises(ValueError):
        refute_null_finite(y.expr, [F(3, 4), F(1, 4)], 2, 4, limit=F(1, 2))
    with pytest.raises(ValueError):
        refute_null_finite(y.expr, [F(1, 4)], 2, 4)


def test_refute_haar_countable_frozen_point():
    nm = make("nullmeager")
    sub = extract_sparse_subcantor(scaled_ternary_increment_tree(),
                                   nm.system, 2)
    pts = [sub.branch_value(b, 2) for b in range(4)]
    cert = refute_haar_countable(nm.expr, pts, 8, set_name=nm.text)
    assert cert.status == POINT_FOUND
    assert cert.point["value"] == "103812/425425"
    assert cert.point["digits"] == [0, 3, 4, 5, 6, 7, 8, 11]
    assert cert.claim["anchored"] is False
    assert round_trip(cert)["ok"]
    v = parse_rational(cert.point["value"])
    for e in pts:
        assert nm.expr.contains_at_depth(v + e, 8)


def test_refute_haar_countable_anchored_prefix():
    nm = make("nullmeager")
    sub = extract_sparse_subcantor(scaled_ternary_increment_tree(),
                                   nm.system, 2)
    pts = [sub.branch_value(b, 2) for b in range(4)]
    cert = refute_haar_countable(nm.expr, pts, 4, prefix=(2,), set_name=nm.text)
    assert cert.point["digits"] == [2, 0, 4, 5]
    assert cert.point["value"] == "671/945"
    assert cert.claim["anchored"] is True
    with pytest.raises(ValueError):
        refute_haar_countable(nm.expr, pts, 4, prefix=(1,))


def test_greedy_common_point_pool_exhaustion():
    nm = make("nullmeager")
    with pytest.raises(NoAdmissibleDigit):
        greedy_common_point(nm.expr, lambda i: [], lambda i: iter(()), [], 3)
    with pytest.raises(ValueError):
        greedy_common_point(nm.expr, lambda i: [], lambda i: (0,), [], 2,
                            fixed_prefix=(0, 0, 0))


# -- carry construction ---------------------------------------------------------------


def test_carry_intersection_point_n1_frozen():
    cert = carry_intersection_point(1, [F(0), F(1, 25)], 8)
    assert cert.status == POINT_FOUND
    assert cert.point["digits"] == [0, 3, 0, 4, 0, 4, 0, 4]
    assert cert.point["value"] == "49479/390625"
    assert cert.claim["sums"] == [
        [0, 3, 0, 4, 0, 4, 0, 4],
        [0, 4, 0, 4, 0, 4, 0, 4],
    ]
    assert round_trip(cert)["ok"]


def test_carry_intersection_point_n2_frozen():
    anchors = [F(0), F(1, 25), F(2, 25)]
    cert = carry_intersection_point(2, anchors, 30)
    assert cert.status == POINT_FOUND
    assert cert.point["value"] == "143003079199021862399/931322574615478515625"
    base = parse_rational(cert.point["value"])
    system = MixedRadixSystem.constant(5)
    for m, digits in enumerate(cert.claim["sums"]):
        word = system.word(digits)
        assert eval_word(word) == base + anchors[m] - anchors[0]
        member = make("haar_family", n=2, m=m).expr
        assert is_admissible_prefix(member, word)
    assert round_trip(cert)["ok"]


def test_carry_intersection_nonterminating_anchor_is_inconclusive():
    cert = carry_intersection_point(1, [F(0), F(1, 7)], 12)
    assert cert.status == INCONCLUSIVE_AT_DEPTH
    assert cert.claim["nonterminating"] == ["1/7"]
    assert cert.point is None


def test_carry_intersection_validation():
    with pytest.raises(ValueError):
        carry_intersection_point(1, [F(0)], 8)
    with pytest.raises(ValueError):
        carry_intersection_point(1, [F(1, 25), F(0)], 8)
    with pytest.raises(ValueError):
        carry_intersection_point(1, [F(0), F(1, 4)], 8)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 124), st.integers(1, 124))
def test_carry_point_translates_land_in_members_property(a, step):
    x0 = F(a, 625)
    x1 = x0 + F(step, 625)
    if x1 - x0 >= F(1, 5):
        return
    cert = carry_intersection_point(1, [x0, x1], 8)
    assert cert.status == POINT_FOUND
    base = parse_rational(cert.point["value"])
    system = MixedRadixSystem.constant(5)
    for m, digits in enumerate(cert.claim["sums"]):
        assert eval_word(system.word(digits)) == base + (x1 - x0) * m
        assert is_admissible_prefix(make("haar_family", n=1, m=m).expr,
                                    system.word(digits))


# -- layer separation ------------------------------------------------------------------


def test_step4_separation_meets_bound():
    out = step4_separation(0, 2)
    assert out["separated"] is True
    assert out["distance"] == out["bound"] == F(1, 25)
    assert out["shift"] == F(6, 25)
    deeper = step4_separation(1, 3)
    assert deeper["separated"] is True
    assert deeper["distance"] == deeper["bound"] == F(1, 1875)


def test_step4_separation_validation():
    with pytest.raises(ValueError):
        step4_separation(1, 2)
    with pytest.raises(ValueError):
        step4_separation(-1, 4)


# -- pair avoidance --------------------------------------------------------------------


def test_cantor_avoiding_pairs_frozen():
    points = [F(i, 13) for i in range(10)]
    witness, cert = cantor_avoiding_pairs(points, 3)
    assert cert.status == CERTIFIED_EMPTY
    assert cert.claim["shift"] == 3
    assert cert.claim["pairs_checked"] == 1152
    assert cert.claim["conclusion"] == "AT_MOST_ONE_HIT"
    assert cert.depth == 6
    # the witness set scale sits below the smallest point difference
    assert witness.tail_bound(witness.shift) < F(1, 13)
    assert round_trip(cert)["ok"]


def test_cantor_avoiding_pairs_edge_cases():
    _, single = cantor_avoiding_pairs([F(1, 2)], 2)
    assert single.claim["shift"] == 0
    assert single.claim["pairs_checked"] == 0
    with pytest.raises(ValueError):
        cantor_avoiding_pairs([F(1, 2), F(1, 2)], 2)
    with pytest.raises(ValueError):
        cantor_avoiding_pairs([F(0), F(1, 2)], 3, depth=2)


# -- re-verification dispatch ------------------------------------------------------------


def test_reverify_detects_tampered_status():
    g5 = make("gap", m=5)
    cert = certify_empty_intersection(g5.expr, [F(0), F(2, 5)], depth=8,
                                      set_name="gap(5)")
    data = cert.to_jsonable()
    data["status"] = INCONCLUSIVE_AT_DEPTH
    assert not reverify_certificate(data)["ok"]


def test_reverify_detects_tampered_point():
    cert = refute_haar_finite_X([F(1, 25), F(1, 1875)], 4)
    data = json.loads(json.dumps(cert.to_jsonable()))
    data["point"]["value"] = "1/2"
    assert not reverify_certificate(data)["ok"]
    data = json.loads(json.dumps(cert.to_jsonable()))
    data["point"]["digits"][0] = 9
    assert not reverify_certificate(data)["ok"]


def test_reverify_detects_tampered_report():
    w = build_ternary_haar2_witness()
    tern = make("ternary")
    report = verify_haar_n(tern.expr, w, 2, 2, 40, set_name="ternary")
    data = json.loads(json.dumps(report.to_jsonable()))
    data["certificates"][0]["depth"] = 1
    assert not reverify_certificate(data)["ok"]


def test_reverify_projection_reports():
    from haarlab.certify import _rat
    from haarlab.constructions import construction_descriptor
    from haarlab.digitsets import project

    nc = make("ternary")
    proj = project(nc.expr, 2)
    data = {
        "kind": "projection",
        "set": construction_descriptor(nc),
        "depth": 2,
        "projection": [[_rat(lo), _rat(hi)] for lo, hi in proj],
    }
    assert reverify_certificate(json.loads(json.dumps(data)))["ok"]
    data["projection"][0][1] = "1/2"
    assert not reverify_certificate(data)["ok"]


def test_reverify_rejects_unknown_kind():
    with pytest.raises(ValueError):
        reverify_certificate({"claim": {"kind": "mystery"}, "status": "?",
                              "depth": 1})
