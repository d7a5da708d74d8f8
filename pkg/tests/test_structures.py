import io
import json

import pytest
from conftest import analyzed_run

from flipping_rotators import MediumSpec, simulate
from flipping_rotators.dynamics import CAP_REACHED, PERIODIC
from flipping_rotators.lattice import SiteCoord, site_key
from flipping_rotators.medium import LEFT, RIGHT
from flipping_rotators.structures import (
    ACTIVE,
    ANNIHILATED,
    ANNIHILATION,
    REFLECTING,
    REFLECTOR_CONFIRMED,
    RETIRED,
    SEMI_REFLECTING,
    SEMI_REFLECTOR_CONFIRMED,
    TRANSFORM_TRAVERSED,
    TRANSFORMED,
    InsufficientLog,
    OutOfOrderInput,
    PreconditionUnmet,
    StructureAnalyzer,
    analyze,
    check_reflecting_property,
    check_transform_property,
    cycle_decomposition,
    period_consistency,
    trapped_period,
    trapping_pair,
)

# Synthetic trajectories: the analyzer only looks at the sequence of site
# keys, so letters stand for arbitrary distinct sites.
_NAMES = "OXBYPZQWVCDEFGHIJKLMN"
K = {ch: site_key(SiteCoord(i, -i, i % 2)) for i, ch in enumerate(_NAMES)}


def keys(text):
    return [K[ch] for ch in text]


def kinds(an):
    return [(e.time, e.kind) for e in an.events if e.kind != "OriginReturn"]


# -- detection on hand-built trajectories -------------------------------------------

REFLECTOR = "OXBYPZBYQZB"  # t1=2, t*=6, t2=10


def test_two_clean_loops_form_a_reflector():
    an = analyze(keys(REFLECTOR))
    assert kinds(an) == [(10, REFLECTOR_CONFIRMED)]
    rec = an.records[0]
    assert (rec.t1, rec.t_star, rec.t2) == (2, 6, 10)
    assert rec.kind == REFLECTING and rec.base == K["B"] and rec.tau is None
    assert rec.sites == frozenset(keys("BYPZQ"))


def test_prior_visit_makes_a_semi_reflector():
    an = analyze(keys("OWXBYPZBYWZB"))
    assert kinds(an) == [(11, SEMI_REFLECTOR_CONFIRMED)]
    assert an.records[0].kind == SEMI_REFLECTING and an.records[0].tau == 1


def test_initial_position_on_the_loops_gives_tau_zero():
    an = analyze(keys("OXBYPZBYOZB"))
    rec = an.records[0]
    assert rec.kind == SEMI_REFLECTING and rec.tau == 0


def test_entry_site_on_the_loops_is_not_a_structure():
    an = analyze(keys("OWXBYPZBYXZB"))
    assert an.records == []


def test_coinciding_base_neighbours_are_not_a_structure():
    an = analyze(keys("OXBYPQBVWYB"))
    assert an.records == []


def test_neighbour_visited_twice_in_a_loop_is_rejected():
    an = analyze(keys("OXBYPYZBYQZB"))
    assert an.records == []


def test_base_at_time_zero_is_not_a_structure():
    an = analyze(keys("BYPZBYQZB"))
    assert an.records == []


def test_reversed_re_traversal_transforms_and_forward_restores():
    # reflect home, wander, re-enter from the same side in reverse
    text = REFLECTOR + "XOWOX" + "BZQYBZPYB" + "XOVOX" + "BYPZBYQZB"
    an = analyze(keys(text))
    got = kinds(an)
    assert got == [(10, REFLECTOR_CONFIRMED), (24, TRANSFORM_TRAVERSED),
                   (38, TRANSFORM_TRAVERSED)]
    trav = [e for e in an.events if e.kind == TRANSFORM_TRAVERSED]
    assert trav[0].span == (16, 24) and trav[0].status == TRANSFORMED
    assert trav[1].span == (30, 38) and trav[1].status == ACTIVE
    assert an.records[0].status == ACTIVE


def test_forward_re_traversal_of_an_untouched_reflector_is_an_entry():
    text = REFLECTOR + "XOWOX" + "BYPZBYQZB"
    an = analyze(keys(text))
    assert an.records[0].status == ANNIHILATED
    assert an.count(TRANSFORM_TRAVERSED) == 0


def test_entering_a_reflector_annihilates_it():
    an = analyze(keys(REFLECTOR + "XOWP"))
    ev = [e for e in an.events if e.kind == ANNIHILATION]
    assert len(ev) == 1 and ev[0].time == 14 and ev[0].status == ANNIHILATED
    assert an.records[0].annihilated_at == 14


def test_reflector_encounter_protects_and_rearms():
    second = "VCDEFCDGFC"  # base C at t=14, loops over D..G, confirmed at 22
    an = analyze(keys(REFLECTOR + "XO" + second + "VP" + "Y"))
    assert an.count(REFLECTOR_CONFIRMED) == 2
    first = an.records[0]
    # P at t=24 is protected by the encounter at t=14; Y at t=25 is not
    ann = [e for e in an.events if e.kind == ANNIHILATION]
    assert [e.time for e in ann] == [25] and ann[0].record is first


def test_out_of_order_input_rejected():
    an = StructureAnalyzer()
    an.feed_key(K["O"], 0)
    with pytest.raises(OutOfOrderInput):
        an.feed_key(K["X"], 2)


def test_loop_events_are_optional():
    quiet = analyze(keys(REFLECTOR))
    loud = analyze(keys(REFLECTOR), emit_loops=True)
    assert quiet.count("LoopClosed") == 0 and loud.count("LoopClosed") == 4  # B twice, Y and Z


def test_jsonl_schema_and_field_order():
    an = analyze(keys(REFLECTOR + "XOWP"))
    an.finish(CAP_REACHED)
    buf = io.StringIO()
    an.write_jsonl(buf)
    rows = [json.loads(line) for line in buf.getvalue().splitlines()]
    assert list(rows[0]) == ["time", "kind", "base", "t1", "tStar", "t2", "tau", "status",
                             "record", "confirmed"]
    assert rows[0]["kind"] == REFLECTOR_CONFIRMED and rows[0]["status"] == ACTIVE
    assert rows[0]["base"] == {"a": 2, "b": -2, "sub": "A"}
    assert rows[-1]["kind"] == ANNIHILATION and rows[-1]["status"] == ANNIHILATED


def test_finish_retires_live_reflectors():
    an = analyze(keys(REFLECTOR))
    an.finish(PERIODIC, 40)
    assert an.records[0].status == RETIRED
    assert an.events[-1].kind == "PeriodDetected" and an.events[-1].time == 40


def test_insufficient_log():
    an = analyze(keys(REFLECTOR))
    with pytest.raises(InsufficientLog):
        check_reflecting_property(an.records[0], keys(REFLECTOR))


def test_transform_property_defined_for_reflectors_only():
    an = analyze(keys("OWXBYPZBYWZB"))
    with pytest.raises(ValueError):
        check_transform_property(an.records[0], [])


# -- the period formula ------------------------------------------------------------

def test_period_formula_worked_values():
    assert trapped_period(1, 23, 24, 46) == 92
    assert trapped_period(944, 998, 3602, 3704) == 10728
    assert trapped_period(944, 998, 3602, 3704) != 10729


def test_trapping_pair_needs_two_survivors():
    with pytest.raises(PreconditionUnmet):
        trapping_pair([])
    with pytest.raises(PreconditionUnmet):
        period_consistency([], None)


# -- real trajectories -----------------------------------------------------------------

def test_reflectors_reflect_exactly(iid_half_runs):
    n = 0
    for seed, res, an, log in iid_half_runs:
        for rec in an.reflectors():
            assert check_reflecting_property(rec, log), (seed, rec.t1, rec.t2)
            assert log[rec.t2 + rec.t1] == log[0]
            n += 1
    assert n > 0


def test_semi_reflectors_reflect_back_to_tau(iid_half_runs):
    n = 0
    for seed, res, an, log in iid_half_runs:
        for rec in an.semi_reflectors():
            if rec.t2 + rec.t1 - rec.tau < len(log):
                assert check_reflecting_property(rec, log), (seed, rec.t1, rec.t2, rec.tau)
                n += 1
    assert n > 0


def test_period_matches_formula_when_two_reflectors_trap(iid_half_runs):
    checked = 0
    for seed, res, an, log in iid_half_runs:
        try:
            assert period_consistency(an, res), seed
            checked += 1
        except PreconditionUnmet:
            pass
    assert checked >= 3


def test_first_trapping_reflector_has_the_transform_property(iid_half_runs):
    checked = 0
    for seed, res, an, log in iid_half_runs:
        try:
            first, _ = trapping_pair(an.records)
        except PreconditionUnmet:
            continue
        assert first.traversals, seed
        assert check_transform_property(first, log), seed
        checked += 1
    assert checked >= 3


def test_at_most_two_live_reflectors(iid_half_runs):
    assert all(an.max_live <= 2 for _, _, an, _ in iid_half_runs)


def test_analysis_is_deterministic():
    res = simulate(MediumSpec.iid(0.5, 3), 10**6, log=True)
    a = [e.to_dict() for e in analyze(res.log).events]
    b = [e.to_dict() for e in analyze(res.log).events]
    assert a == b


@pytest.mark.parametrize("orientation", [LEFT, RIGHT])
def test_homogeneous_media_never_reflect(orientation):
    res, an = analyzed_run(MediumSpec.homogeneous(orientation), 200_000)
    assert an.count(REFLECTOR_CONFIRMED) == 0
    cycles = cycle_decomposition(res.log, res.origin_returns)
    closed = [c for c in cycles if c.closed]
    assert len(closed) > 100
    assert all(c.self_avoiding for c in cycles)
    assert all(c.symmetric for c in closed)


def test_admissible_medium_never_reflects():
    res, an = analyzed_run(MediumSpec.admissible(0.5, 4), 200_000)
    assert an.count(REFLECTOR_CONFIRMED) == 0
    assert all(c.self_avoiding for c in cycle_decomposition(res.log, res.origin_returns))


def test_iid_trajectories_are_not_self_avoiding(iid_half_runs):
    bad = 0
    for _, res, _, log in iid_half_runs:
        cycles = cycle_decomposition(log[:res.period + 1], res.origin_returns)
        bad += not all(c.self_avoiding for c in cycles)
    assert bad > 0
