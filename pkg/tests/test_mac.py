from hypothesis import given, settings, strategies as st

from coexsim.mac import (AI, URLLC, CellScheduler, HarqProcess, HarqResult, SchedRequest,
                         TtiAllocation, Grant, on_harq_feedback, prb_budget_ok,
                         strict_priority_violations)
from coexsim.radio import MCS_TABLE, tb_capacity


def req(dev, cls, nbytes, sinr=20.0):
    return SchedRequest(dev, cls, "DL", nbytes, nbytes, sinr)


def test_urllc_served_before_ai_when_capacity_is_short():
    # at the lowest MCS a 100-PRB band carries ~1,760 bytes
    s = CellScheduler(0, "DL")
    alloc, _ = s.schedule_tti(0, [req(2, AI, 10_000, -20), req(1, URLLC, 1_700, -20)], [])
    assert [g.bearer for g in alloc.grants] == [URLLC]
    assert not strict_priority_violations([alloc])


def test_only_ai_is_granted():
    s = CellScheduler(0, "DL")
    alloc, _ = s.schedule_tti(0, [req(3, AI, 50_000)], [])
    assert len(alloc.grants) == 1 and alloc.grants[0].bearer == AI and alloc.grants[0].new_data


def test_round_robin_alternates_when_one_fits():
    s = CellScheduler(0, "DL")
    reqs = [req(1, URLLC, 1_700, -20), req(2, URLLC, 1_700, -20)]
    first, _ = s.schedule_tti(0, reqs, [])
    second, _ = s.schedule_tti(1, reqs, [])
    assert first.grants[0].device_id == 1
    assert second.grants[0].device_id == 2


def test_retransmission_outranks_new_data():
    s = CellScheduler(0, "DL")
    proc = HarqProcess(tb_capacity(100, MCS_TABLE[0]), MCS_TABLE[0], 100, AI, 9, 10)
    alloc, deferred = s.schedule_tti(0, [req(1, URLLC, 1_700, -20)], [proc])
    assert alloc.grants[0].device_id == 9 and not alloc.grants[0].new_data
    assert deferred == []


def test_harq_limits():
    p = HarqProcess(100, MCS_TABLE[0], 1, URLLC, 0, max_tx=2)
    assert on_harq_feedback(p, False) is HarqResult.RETRANSMIT
    assert on_harq_feedback(p, False) is HarqResult.DROPPED
    assert on_harq_feedback(HarqProcess(100, MCS_TABLE[0], 1, AI, 0, 10), True) is HarqResult.DELIVERED
    q = HarqProcess(100, MCS_TABLE[0], 1, AI, 0, max_tx=10)
    for _ in range(9):
        assert on_harq_feedback(q, False) is HarqResult.RETRANSMIT
    assert q.tx_count == 10
    assert on_harq_feedback(q, True) is HarqResult.DELIVERED


def test_violation_detector_flags_the_literal_condition():
    g = Grant(5, AI, 0, 10, MCS_TABLE[0], 100, True)
    bad = TtiAllocation(0, 0, "DL", [g], urllc_waiting=(1,), free_after_urllc=106)
    assert strict_priority_violations([bad]) == [bad]
    full = TtiAllocation(0, 0, "DL", [g], urllc_waiting=(1,), free_after_urllc=0)
    assert strict_priority_violations([full]) == []


def test_overlapping_grants_fail_budget_check():
    a = Grant(1, AI, 0, 10, MCS_TABLE[0], 1, True)
    b = Grant(2, AI, 5, 10, MCS_TABLE[0], 1, True)
    assert not prb_budget_ok(TtiAllocation(0, 0, "DL", [a, b]))
    assert prb_budget_ok(TtiAllocation(0, 0, "DL", [a]))


requests = st.lists(
    st.tuples(st.integers(0, 15), st.sampled_from([URLLC, AI]), st.integers(1, 40_000),
              st.floats(-15, 30)), max_size=12)


@settings(max_examples=200, deadline=None)
@given(requests, st.integers(0, 105), st.lists(st.integers(1, 60), max_size=3))
def test_scheduler_invariants(raw, offset, retx_sizes):
    s = CellScheduler(0, "UL", prb_offset=offset)
    seen = set()
    reqs = []
    for dev, cls, nbytes, sinr in raw:
        if (dev, cls) in seen:
            continue
        seen.add((dev, cls))
        reqs.append(SchedRequest(dev, cls, "UL", nbytes, nbytes, sinr))
    procs = [HarqProcess(tb_capacity(n, MCS_TABLE[2]), MCS_TABLE[2], n, AI, 100 + i, 10)
             for i, n in enumerate(retx_sizes)]
    alloc, deferred = s.schedule_tti(0, reqs, procs)
    assert prb_budget_ok(alloc)
    assert alloc.used_prbs <= 106
    assert not strict_priority_violations([alloc])
    new = [(g.device_id, g.bearer) for g in alloc.grants if g.new_data]
    assert len(new) == len(set(new))
    assert len(deferred) + sum(1 for g in alloc.grants if not g.new_data) == len(procs)
