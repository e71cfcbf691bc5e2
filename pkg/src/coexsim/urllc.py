"""Periodic URLLC flows, per-packet deadlines and the network-layer state signal."""

from __future__ import annotations

from dataclasses import dataclass, field

from .metrics import StateTrace


@dataclass(frozen=True)
class UrllcFlowCfg:
    direction: str
    period: int          # ns
    size_bytes: int
    delay_bound: int     # ns
    survival: int        # ns
    phase: int = 0       # ns

    def __post_init__(self):
        if self.delay_bound <= 0 or self.survival < 0 or self.size_bytes < 1 or self.period <= 0:
            raise ValueError(f"invalid URLLC flow {self}")


@dataclass
class PacketRecord:
    device_id: int
    direction: str
    seq: int
    gen_time: int
    deadline: int
    delivery_time: int | None = None

    @property
    def on_time(self) -> bool:
        return self.delivery_time is not None and self.delivery_time <= self.deadline


def generate(flow: UrllcFlowCfg, horizon: int) -> list[int]:
    """Generation instants ``phase + m * period`` strictly before ``horizon``."""
    if flow.phase >= horizon:
        return []
    return list(range(flow.phase, horizon, flow.period))


def record_outcome(pkt: PacketRecord) -> tuple[int, int]:
    """The ``(time, value)`` observation a resolved packet contributes to X."""
    if pkt.on_time:
        return pkt.delivery_time, 1
    return pkt.deadline, 0


@dataclass
class FlowTracker:
    """All packets of one (device, direction) flow."""

    device_id: int
    flow: UrllcFlowCfg
    packets: list[PacketRecord] = field(default_factory=list)

    def new_packet(self, gen_time: int) -> PacketRecord:
        rec = PacketRecord(self.device_id, self.flow.direction, len(self.packets), gen_time,
                           gen_time + self.flow.delay_bound)
        self.packets.append(rec)
        return rec

    def resolved(self, horizon: int) -> list[PacketRecord]:
        return [p for p in self.packets if p.deadline <= horizon]

    def counts(self, horizon: int) -> tuple[int, int, int]:
        """(on time, failed, generated with deadline <= horizon)."""
        res = self.resolved(horizon)
        ok = sum(1 for p in res if p.on_time)
        return ok, len(res) - ok, len(res)

    def x_trace(self, horizon: int) -> StateTrace:
        obs = sorted((record_outcome(p) + (p.seq,) for p in self.resolved(horizon)),
                     key=lambda o: (o[0], o[2]))
        return StateTrace.from_events(horizon, [(t, v) for t, v, _ in obs],
                                      device_id=self.device_id, direction=self.flow.direction)
