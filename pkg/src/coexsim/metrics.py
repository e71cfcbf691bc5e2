"""Availability KPIs over piecewise-constant state traces, plus sample statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence


@dataclass
class StateTrace:
    """Binary signal on ``[0, horizon)`` given by its value changes.

    ``initial`` holds for ``t < first transition`` (and for ``t < 0``).
    """

    horizon: int
    transitions: list[tuple[int, int]] = field(default_factory=list)
    initial: int = 1
    device_id: int | None = None
    direction: str | None = None

    def __post_init__(self):
        prev_t, prev_v = None, self.initial
        for t, v in self.transitions:
            if v not in (0, 1):
                raise ValueError("trace values must be 0 or 1")
            if prev_t is not None and t <= prev_t:
                raise ValueError("transition times must be strictly increasing")
            if v == prev_v:
                raise ValueError("transition values must alternate")
            prev_t, prev_v = t, v

    @classmethod
    def from_events(cls, horizon: int, events: Iterable[tuple[int, int]], initial: int = 1, **kw) -> "StateTrace":
        """Collapse time-sorted ``(time, value)`` observations; later ones at equal time win."""
        by_time: dict[int, int] = {}
        for t, v in events:
            by_time[t] = v
        out = []
        cur = initial
        for t in sorted(by_time):
            v = by_time[t]
            if v != cur and t < horizon:
                out.append((t, v))
                cur = v
        return cls(horizon, out, initial, **kw)

    def zero_intervals(self) -> list[tuple[int, int]]:
        """Maximal ``[u, v)`` where the signal is 0, clipped to the horizon."""
        out = []
        cur, start = self.initial, 0
        for t, v in self.transitions:
            if v == 1 and cur == 0:
                out.append((start, t))
            elif v == 0:
                start = t
            cur = v
        if cur == 0:
            out.append((start, self.horizon))
        return [(u, min(v, self.horizon)) for u, v in out if u < self.horizon]

    def value_at(self, t: int) -> int:
        cur = self.initial
        for tt, v in self.transitions:
            if tt > t:
                break
            cur = v
        return cur

    @classmethod
    def from_zero_intervals(cls, horizon: int, intervals: Sequence[tuple[int, int]], **kw) -> "StateTrace":
        """Signal that is 0 on the union of ``intervals`` (overlaps and touching runs merge)."""
        merged: list[list[int]] = []
        for u, v in sorted(intervals):
            v = min(v, horizon)
            if v <= u:
                continue
            if merged and u <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], v)
            else:
                merged.append([u, v])
        trans = []
        for u, v in merged:
            trans.append((u, 0))
            if v < horizon:
                trans.append((v, 1))
        return cls(horizon, trans, **kw)


def apply_survival(x: StateTrace, t_sv: int) -> StateTrace:
    """Application-layer state: 0 only once the network state has been 0 for longer than ``t_sv``.

    Each zero run ``[u, v)`` of ``x`` maps to ``[u + t_sv, v)``; shorter runs vanish.
    """
    if t_sv < 0:
        raise ValueError("survival time must be non-negative")
    if t_sv == 0:
        return StateTrace(x.horizon, list(x.transitions), x.initial, x.device_id, x.direction)
    # X = 1 before t = 0, so a run starting at 0 also needs t_sv to elapse
    kept = [(u + t_sv, v) for u, v in x.zero_intervals() if v - u > t_sv]
    return StateTrace.from_zero_intervals(x.horizon, kept, device_id=x.device_id, direction=x.direction)


def uptime(y: StateTrace) -> int:
    return y.horizon - sum(v - u for u, v in y.zero_intervals())


def availability(y: StateTrace, horizon: int | None = None) -> float:
    """Time-average of the signal over ``[0, T)``."""
    T = y.horizon if horizon is None else horizon
    if T <= 0:
        raise ValueError("horizon must be positive")
    down = sum(min(v, T) - u for u, v in y.zero_intervals() if u < T)
    return (T - down) / T


def combine_and(a: StateTrace, b: StateTrace) -> StateTrace:
    """Pointwise AND of two traces (device is up only if both directions are)."""
    if a.horizon != b.horizon:
        raise ValueError("traces must share a horizon")
    return StateTrace.from_zero_intervals(a.horizon, a.zero_intervals() + b.zero_intervals(),
                                          device_id=a.device_id)


@dataclass
class RequirementResult:
    passed: bool
    violation_prob: float
    count: int


def requirement_check(samples: Sequence[float], a_req: float = 0.95, gamma: float = 0.01) -> RequirementResult:
    if not len(samples):
        raise ValueError("no availability samples")
    bad = sum(1 for a in samples if a <= a_req)
    p = bad / len(samples)
    return RequirementResult(p <= gamma, p, len(samples))


def _rank(p: float, n: int) -> int:
    # rounding guards against p*n landing a hair above an integer
    return min(n, max(1, math.ceil(round(p * n, 9))))


def percentile(samples: Sequence[float], p: float) -> float:
    """Nearest-rank percentile, ``p`` in [0, 1]."""
    if not len(samples):
        raise ValueError("percentile of empty sample set")
    s = sorted(samples)
    return s[_rank(p, len(s)) - 1]


@dataclass(frozen=True)
class BoxStats:
    min: float
    q25: float
    median: float
    q75: float
    max: float


def box_stats(samples: Sequence[float]) -> BoxStats:
    if not len(samples):
        raise ValueError("box_stats of empty sample set")
    s = sorted(samples)
    return BoxStats(s[0], percentile(s, 0.25), percentile(s, 0.5), percentile(s, 0.75), s[-1])
