"""Per-TTI strict-priority scheduler and HARQ bookkeeping."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from .radio import MCS_TABLE, McsEntry, N_PRB, prbs_for_bits, select_mcs, spans, tb_capacity

URLLC = "URLLC"
AI = "AI"
CLASSES = (URLLC, AI)

# max MAC transmissions per TB (UL, DL)
MAX_TX = {
    (URLLC, "UL"): 3,
    (URLLC, "DL"): 2,
    (AI, "UL"): 10,
    (AI, "DL"): 10,
}
HARQ_RTT_TTI = 4


@dataclass
class SchedRequest:
    device_id: int
    bearer: str
    direction: str
    queued_bytes: int
    pdu_bytes: int = 0  # bytes incl. RLC header for the next PDU
    sinr_est_db: float = 30.0
    key: Any = None


@dataclass
class HarqProcess:
    tb_bits: int
    mcs: McsEntry
    n_prb: int
    bearer: str
    device_id: int
    max_tx: int
    tx_count: int = 1
    pdu: Any = None
    key: Any = None
    epoch: int = 0


@dataclass
class Grant:
    device_id: int
    bearer: str
    prb_start: int
    n_prb: int
    mcs: McsEntry
    tb_bits: int
    new_data: bool
    harq: HarqProcess | None = None
    key: Any = None


@dataclass
class TtiAllocation:
    tti: int
    cell: int
    direction: str
    grants: list[Grant] = field(default_factory=list)
    urllc_waiting: tuple[int, ...] = ()  # devices with URLLC data at TTI start
    free_after_urllc: int = 0

    @property
    def used_prbs(self) -> int:
        return sum(g.n_prb for g in self.grants)


class HarqResult(enum.Enum):
    DELIVERED = "delivered"
    RETRANSMIT = "retransmit scheduled"
    DROPPED = "dropped"


def on_harq_feedback(process: HarqProcess, ack: bool) -> HarqResult:
    if ack:
        return HarqResult.DELIVERED
    if process.tx_count < process.max_tx:
        process.tx_count += 1
        return HarqResult.RETRANSMIT
    return HarqResult.DROPPED


def _rr_order(items: Sequence, pointer: int | None, key: Callable = lambda r: r.device_id) -> list:
    """Device-id order starting just after the last served device."""
    ordered = sorted(items, key=key)
    if pointer is None:
        return ordered
    after = [r for r in ordered if key(r) > pointer]
    before = [r for r in ordered if key(r) <= pointer]
    return after + before


class CellScheduler:
    """Strict-priority scheduler for one (cell, direction).

    Order per TTI: HARQ retransmissions (URLLC before AI), new URLLC data,
    new AI data; round-robin inside each class with persistent pointers.
    PRBs are handed out contiguously starting at a per-cell offset (wrapping
    at the band edge), so the first-served traffic of neighbouring sectors
    lands in different sub-bands.
    """

    def __init__(self, cell: int, direction: str, n_prb: int = N_PRB,
                 bler_targets: dict[str, float] | None = None, overhead: float = 0.14,
                 slope_db: float = 0.5, mcs_table=MCS_TABLE, prb_offset: int = 0):
        self.cell = cell
        self.prb_offset = prb_offset % n_prb
        self.direction = direction
        self.n_prb = n_prb
        self.bler_targets = bler_targets or {URLLC: 0.01, AI: 0.1}
        self.overhead = overhead
        self.slope_db = slope_db
        self.mcs_table = mcs_table
        self.rr_new: dict[str, int | None] = {c: None for c in CLASSES}
        self.rr_retx: dict[str, int | None] = {c: None for c in CLASSES}

    def schedule_tti(self, tti: int, requests: Sequence[SchedRequest],
                     harq_pending: Sequence[HarqProcess]) -> tuple[TtiAllocation, list[HarqProcess]]:
        """Returns the allocation and the retransmissions that did not fit."""
        alloc = TtiAllocation(tti, self.cell, self.direction)
        free = self.n_prb
        cursor = self.prb_offset
        deferred: list[HarqProcess] = []

        for cls in CLASSES:
            procs = [p for p in harq_pending if p.bearer == cls]
            if not procs:
                continue
            served = None
            for p in _rr_order(procs, self.rr_retx[cls]):
                if p.n_prb <= free:
                    alloc.grants.append(Grant(p.device_id, cls, cursor, p.n_prb, p.mcs,
                                              p.tb_bits, False, p, p.key))
                    cursor = (cursor + p.n_prb) % self.n_prb
                    free -= p.n_prb
                    served = p.device_id
                else:
                    deferred.append(p)
            if served is not None:
                self.rr_retx[cls] = served

        busy: set = set()
        urllc_unserved = False
        urllc = [r for r in requests if r.bearer == URLLC and r.queued_bytes > 0]
        alloc.urllc_waiting = tuple(sorted(r.device_id for r in urllc))
        for cls, reqs in ((URLLC, urllc), (AI, [r for r in requests if r.bearer == AI and r.queued_bytes > 0])):
            if cls == AI:
                alloc.free_after_urllc = free
                if urllc_unserved:
                    break
            served = None
            for r in _rr_order(reqs, self.rr_new[cls]):
                if free <= 0:
                    break
                if (r.device_id, cls) in busy:
                    continue
                mcs = select_mcs(r.sinr_est_db, self.bler_targets[cls], self.mcs_table, self.slope_db)
                need_bits = 8 * (r.pdu_bytes or r.queued_bytes)
                n = prbs_for_bits(need_bits, mcs, free, self.overhead)
                tb = tb_capacity(n, mcs, self.overhead)
                if tb < 8 * 6:  # cannot carry header + 1 byte
                    if cls == URLLC:
                        urllc_unserved = True
                    continue
                alloc.grants.append(Grant(r.device_id, cls, cursor, n, mcs, tb, True, None, r.key))
                busy.add((r.device_id, cls))
                cursor = (cursor + n) % self.n_prb
                free -= n
                served = r.device_id
            if served is not None:
                self.rr_new[cls] = served
        return alloc, deferred


def strict_priority_violations(allocations) -> list[TtiAllocation]:
    """Allocations with a new AI grant while a waiting URLLC device got nothing and PRBs were left."""
    bad = []
    for a in allocations:
        if not a.urllc_waiting:
            continue
        granted = {g.device_id for g in a.grants if g.bearer == URLLC}
        unserved = [d for d in a.urllc_waiting if d not in granted]
        ai_new = any(g.bearer == AI and g.new_data for g in a.grants)
        if unserved and ai_new and a.free_after_urllc >= 1:
            bad.append(a)
    return bad


def prb_budget_ok(alloc: TtiAllocation, n_prb: int = N_PRB) -> bool:
    """PRB sets pairwise disjoint and within the band."""
    ranges = sorted(r for g in alloc.grants for r in spans(g.prb_start, g.n_prb, n_prb))
    for (_, e0), (s1, _) in zip(ranges, ranges[1:]):
        if s1 < e0:
            return False
    return sum(e - s for s, e in ranges) <= n_prb and all(0 <= s < e <= n_prb for s, e in ranges)
