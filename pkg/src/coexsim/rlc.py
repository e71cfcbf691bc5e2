"""RLC entities: segmentation, AM retransmission, reassembly.

One PDU carries a contiguous byte range of exactly one SDU (no concatenation).
AM loss detection is driven by MAC drop notifications rather than status PDUs.
"""

from __future__ import annotations

import enum
import logging
from collections import deque
from dataclasses import dataclass
from typing import Any

log = logging.getLogger(__name__)

HEADER_BYTES = 5
AM_MAX_TX = 8


@dataclass
class RlcSdu:
    sdu_id: int
    bearer: str
    size_bytes: int
    enqueue_time: int
    tag: Any = None
    delivery_time: int | None = None

    def __post_init__(self):
        if self.size_bytes < 1:
            raise ValueError("SDU size must be >= 1 byte")


@dataclass(frozen=True)
class RlcPdu:
    sdu_id: int
    offset: int
    length: int
    is_last_segment: bool
    epoch: int = 0


class Outcome(enum.Enum):
    NONE = "none"
    RETX_QUEUED = "retx queued"
    SDU_FAILED = "sdu_failed"


class _TxEntity:
    def __init__(self, bearer: str = "", header: int = HEADER_BYTES, cap_bytes: int | None = None):
        self.bearer = bearer
        self.header = header
        self.cap_bytes = cap_bytes
        self.queue: deque[list] = deque()  # [sdu, next_offset]
        self.sdus: dict[int, RlcSdu] = {}
        self.queued_bytes = 0
        self.epoch = 0
        self.n_enqueued = 0
        self.n_discarded = 0
        self.n_flushed = 0

    def enqueue_sdu(self, sdu: RlcSdu) -> bool:
        if self.cap_bytes is not None and self.queued_bytes + sdu.size_bytes > self.cap_bytes:
            log.warning("RLC buffer overflow on %s, SDU %d discarded", self.bearer, sdu.sdu_id)
            self.n_discarded += 1
            return False
        self.queue.append([sdu, 0])
        self.sdus[sdu.sdu_id] = sdu
        self.queued_bytes += sdu.size_bytes
        self.n_enqueued += 1
        return True

    def has_data(self) -> bool:
        return self.queued_bytes > 0

    def _new_pdu(self, payload: int) -> RlcPdu:
        entry = self.queue[0]
        sdu, off = entry
        length = min(payload, sdu.size_bytes - off)
        entry[1] = off + length
        self.queued_bytes -= length
        last = off + length == sdu.size_bytes
        if last:
            self.queue.popleft()
        return RlcPdu(sdu.sdu_id, off, length, last, self.epoch)

    def next_pdu_bytes(self) -> int:
        """Bytes (header included) needed to send the head-of-line data in one PDU."""
        if not self.queue:
            return 0
        sdu, off = self.queue[0]
        return sdu.size_bytes - off + self.header


class UmEntity(_TxEntity):
    """Unacknowledged mode: a lost PDU is simply gone."""

    mode = "UM"

    def next_pdu(self, max_bytes: int) -> RlcPdu:
        if max_bytes < self.header + 1:
            raise ValueError("budget smaller than header + 1 byte")
        if not self.queue:
            raise LookupError("no data queued")
        pdu = self._new_pdu(max_bytes - self.header)
        if pdu.is_last_segment:
            # UM keeps nothing once the last byte leaves
            self.sdus.pop(pdu.sdu_id, None)
        return pdu

    def on_pdu_outcome(self, pdu: RlcPdu, delivered: bool) -> Outcome:
        return Outcome.NONE

    def flush(self) -> None:
        self.n_flushed += len(self.queue)
        self.queue.clear()
        self.sdus.clear()
        self.queued_bytes = 0
        self.epoch += 1


class AmEntity(_TxEntity):
    """Acknowledged mode transmitter.

    Lost byte ranges go to a retx queue served before new data; a range
    lost ``max_tx`` times fails its SDU.
    """

    mode = "AM"

    def __init__(self, bearer: str = "", header: int = HEADER_BYTES, max_tx: int = AM_MAX_TX,
                 cap_bytes: int | None = None):
        super().__init__(bearer, header, cap_bytes)
        self.max_tx = max_tx
        self.retx: deque[list] = deque()  # [sdu_id, offset, length, losses]
        self.losses: dict[tuple[int, int], int] = {}
        self.outstanding: dict[int, int] = {}  # sdu_id -> bytes not yet acked
        self.delivered: list[int] = []
        self.failed: list[int] = []
        self.flushed: list[int] = []

    def enqueue_sdu(self, sdu: RlcSdu) -> bool:
        ok = super().enqueue_sdu(sdu)
        if ok:
            self.outstanding[sdu.sdu_id] = sdu.size_bytes
        return ok

    def has_data(self) -> bool:
        return self.queued_bytes > 0 or bool(self.retx)

    def next_pdu_bytes(self) -> int:
        if self.retx:
            return self.retx[0][2] + self.header
        return super().next_pdu_bytes()

    @property
    def pending_bytes(self) -> int:
        return self.queued_bytes + sum(r[2] for r in self.retx)

    def next_pdu(self, max_bytes: int) -> RlcPdu:
        if max_bytes < self.header + 1:
            raise ValueError("budget smaller than header + 1 byte")
        payload = max_bytes - self.header
        if self.retx:
            sdu_id, off, length, losses = self.retx[0]
            take = min(payload, length)
            if take == length:
                self.retx.popleft()
            else:
                # re-segment: remainder keeps its loss count
                self.retx[0] = [sdu_id, off + take, length - take, losses]
                self.losses[(sdu_id, off + take)] = losses
            self.losses[(sdu_id, off)] = losses
            size = self.sdus[sdu_id].size_bytes
            return RlcPdu(sdu_id, off, take, off + take == size, self.epoch)
        if not self.queue:
            raise LookupError("no data queued")
        return self._new_pdu(payload)

    def on_pdu_outcome(self, pdu: RlcPdu, delivered: bool) -> Outcome:
        if pdu.epoch != self.epoch or pdu.sdu_id not in self.outstanding:
            return Outcome.NONE
        key = (pdu.sdu_id, pdu.offset)
        if delivered:
            self.losses.pop(key, None)
            left = self.outstanding[pdu.sdu_id] - pdu.length
            self.outstanding[pdu.sdu_id] = left
            if left == 0:
                del self.outstanding[pdu.sdu_id]
                self.delivered.append(pdu.sdu_id)
                self.sdus.pop(pdu.sdu_id, None)
            return Outcome.NONE
        losses = self.losses.pop(key, 0) + 1
        if losses >= self.max_tx:
            self._fail(pdu.sdu_id)
            return Outcome.SDU_FAILED
        self.losses[key] = losses
        self.retx.append([pdu.sdu_id, pdu.offset, pdu.length, losses])
        return Outcome.RETX_QUEUED

    def _fail(self, sdu_id: int) -> None:
        self.outstanding.pop(sdu_id, None)
        self.retx = deque(r for r in self.retx if r[0] != sdu_id)
        for k in [k for k in self.losses if k[0] == sdu_id]:
            del self.losses[k]
        if self.queue and self.queue[0][0].sdu_id == sdu_id:
            sdu, off = self.queue.popleft()
            self.queued_bytes -= sdu.size_bytes - off
        self.sdus.pop(sdu_id, None)
        self.failed.append(sdu_id)

    def flush(self) -> None:
        """Drop queued, retx and in-flight state (stale FL payloads)."""
        self.flushed.extend(self.outstanding)
        self.n_flushed += len(self.outstanding)
        self.queue.clear()
        self.retx.clear()
        self.losses.clear()
        self.outstanding.clear()
        self.sdus.clear()
        self.queued_bytes = 0
        self.epoch += 1

    def in_flight_sdus(self) -> int:
        return len(self.outstanding)


class Reassembler:
    """Receive side. Completes an SDU once every byte has arrived.

    ``in_order=True`` (AM) holds completed SDUs until all earlier SDU ids
    are delivered or skipped.
    """

    def __init__(self, in_order: bool = False):
        self.in_order = in_order
        self._parts: dict[int, dict[int, int]] = {}  # sdu_id -> {offset: length}
        self._got: dict[int, int] = {}
        self._size: dict[int, int] = {}
        self._meta: dict[int, RlcSdu] = {}
        self._done: set[int] = set()
        self._ready: dict[int, RlcSdu] = {}
        self._skipped: set[int] = set()
        self.next_expected: int | None = None
        self.delivered: list[int] = []

    def expect(self, sdu: RlcSdu) -> None:
        """Register SDU metadata (size, tag) known to both ends of the bearer."""
        self._meta[sdu.sdu_id] = sdu
        self._size[sdu.sdu_id] = sdu.size_bytes
        if self.next_expected is None:
            self.next_expected = sdu.sdu_id

    def reassemble(self, pdu: RlcPdu, now: int) -> list[RlcSdu]:
        sid = pdu.sdu_id
        if sid in self._done or sid not in self._size:
            return []
        parts = self._parts.setdefault(sid, {})
        if pdu.offset in parts:
            return []
        parts[pdu.offset] = pdu.length
        got = self._got.get(sid, 0) + pdu.length
        self._got[sid] = got
        if got < self._size[sid]:
            return []
        self._done.add(sid)
        del self._parts[sid]
        del self._got[sid]
        sdu = self._meta.pop(sid)
        sdu.delivery_time = now
        if not self.in_order:
            self.delivered.append(sid)
            return [sdu]
        self._ready[sid] = sdu
        return self._release()

    def skip(self, sdu_id: int) -> list[RlcSdu]:
        """Mark an SDU as never arriving (transmitter gave up or flushed)."""
        self._skipped.add(sdu_id)
        self._parts.pop(sdu_id, None)
        self._got.pop(sdu_id, None)
        self._meta.pop(sdu_id, None)
        return self._release() if self.in_order else []

    def _release(self) -> list[RlcSdu]:
        out = []
        while self.next_expected is not None:
            nxt = self.next_expected
            if nxt in self._ready:
                sdu = self._ready.pop(nxt)
                out.append(sdu)
                self.delivered.append(nxt)
            elif nxt in self._skipped:
                self._skipped.discard(nxt)
            else:
                break
            self.next_expected = self._successor(nxt)
        return out

    def _successor(self, sid: int) -> int | None:
        later = [s for s in self._meta if s > sid] + [s for s in self._ready if s > sid] \
            + [s for s in self._skipped if s > sid]
        return min(later) if later else sid + 1

    def discard_partial(self, older_than: int) -> int:
        """Drop incomplete SDUs enqueued before ``older_than``; returns count dropped."""
        stale = [sid for sid, m in self._meta.items() if m.enqueue_time < older_than]
        for sid in stale:
            self._meta.pop(sid)
            self._parts.pop(sid, None)
            self._got.pop(sid, None)
            self._size.pop(sid, None)
        return len(stale)

    def reset(self) -> None:
        for sid in list(self._meta):
            self._skipped.add(sid)
        self._meta.clear()
        self._parts.clear()
        self._got.clear()
        if self.in_order:
            self._release()


def segment(size_bytes: int, max_bytes: int, header: int = HEADER_BYTES) -> list[RlcPdu]:
    """Segmentation of one SDU under a fixed per-PDU byte budget."""
    ent = UmEntity(header=header)
    ent.enqueue_sdu(RlcSdu(0, "", size_bytes, 0))
    out = []
    while ent.has_data():
        out.append(ent.next_pdu(max_bytes))
    return out
