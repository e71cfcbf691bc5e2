"""One coexistence run: URLLC flows and n-sync training over a 3-sector cell.

Radio events are driven by a TTI-boundary event; traffic arrivals, local
compute and global updates are ordinary events. Each TTI:

1. PDUs decoded in the previous TTI reach their receiving RLC entity,
2. HARQ feedback due now is applied (ack / retransmit / drop),
3. every (cell, direction) scheduler builds its allocation,
4. each grant is decoded against the interference of concurrent grants,
5. link-adaptation estimates are refreshed.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import radio
from .config import ScenarioConfig
from .engine import TTI_NS, EventKind, RngFactory, Simulator, ms, seconds
from .fl import LearnerProblem, RoundState, DeviceRound, convergence_check, global_update, \
    iteration_delay, local_update
from .mac import AI, URLLC, CellScheduler, HarqProcess, HarqResult, SchedRequest, TtiAllocation, \
    on_harq_feedback
from .metrics import apply_survival, availability, combine_and
from .rlc import AmEntity, Outcome, Reassembler, RlcSdu, UmEntity
from .urllc import FlowTracker, UrllcFlowCfg

log = logging.getLogger(__name__)

DIRECTIONS = ("UL", "DL")


class InvariantViolation(RuntimeError):
    pass


@dataclass
class Device:
    device_id: int
    kind: str
    index: int
    pos: radio.Position
    link: radio.LinkState
    coupling: np.ndarray  # linear gain towards every sector

    @property
    def cell(self) -> int:
        return self.link.serving_cell


class Bearer:
    """Transmitter and receiver RLC pair for one (device, class, direction)."""

    __slots__ = ("device", "cls", "direction", "cell", "tx", "rx", "next_sdu", "on_sdu", "delivered")

    def __init__(self, device: Device, cls: str, direction: str, tx, rx, on_sdu):
        self.device = device
        self.cls = cls
        self.direction = direction
        self.cell = device.cell
        self.tx = tx
        self.rx = rx
        self.next_sdu = 0
        self.on_sdu = on_sdu
        self.delivered: list[int] = []

    def send(self, size: int, now: int, tag=None) -> RlcSdu:
        sdu = RlcSdu(self.next_sdu, self.cls, size, now, tag)
        self.next_sdu += 1
        if self.tx.enqueue_sdu(sdu):
            self.rx.expect(sdu)
        return sdu

    def flush(self) -> None:
        self.tx.flush()
        self.rx.reset()


@dataclass
class RunResult:
    run_id: str
    seed: int
    config_hash: str
    N: int
    eta: float
    n: int
    model_bytes: int
    urllc_rows: list[dict] = field(default_factory=list)
    ai_rows: list[dict] = field(default_factory=list)
    detail_rows: list[dict] = field(default_factory=list)
    counters: dict = field(default_factory=dict)

    @property
    def availability_samples(self) -> list[float]:
        return [r["avail_combined"] for r in self.urllc_rows]

    @property
    def ai_delays(self) -> list[float]:
        return [r["d_k_ai_s"] for r in self.ai_rows]


class Network:
    def __init__(self, cfg: ScenarioConfig, seed: int, trace_allocations: bool = False,
                 check_invariants: bool = False, forced_pdu_loss: float | None = None,
                 record_events: bool = False):
        self.cfg = cfg
        self.seed = int(seed)
        self.rngs = RngFactory(seed)
        self.sim = Simulator(record_trace=record_events)
        self.horizon = seconds(cfg.sim.horizon_s)
        self.trace_allocations = trace_allocations
        self.allocations: list[TtiAllocation] = []
        self.check_invariants = check_invariants
        self.forced_pdu_loss = forced_pdu_loss
        self.counters: dict[str, int] = defaultdict(int)

        r = cfg.radio
        self.params = radio.RadioParams(
            carrier_ghz=r.carrier_ghz, pl_exponent=r.pl_exponent, shadowing_sigma_db=r.shadowing_sigma_db,
            blockage_loss_db=r.blockage_loss_db, blocker_density=r.blocker_density,
            blocker_mean_width_m=r.blocker_mean_width_m, noise_figure_db=r.noise_figure_db,
            ul_tx_power_w=r.ul_tx_power_w, dl_tx_power_w=r.dl_tx_power_w, n_prb=r.n_prb,
            overhead=r.overhead, bler_slope_db=r.bler_slope_db, antenna_peak_dbi=r.antenna_peak_dbi,
            beamwidth_3db_deg=r.beamwidth_3db_deg, front_to_back_db=r.front_to_back_db,
            bler_target_ai=r.bler_target_ai, bler_target_urllc=r.bler_target_urllc,
            csi_ewma=r.csi_ewma, lossless=r.lossless)
        d = cfg.deployment
        self.geom = radio.CellGeometry(tuple(d.hall_m), d.gnb_height_m, d.device_height_m,
                                       tuple(d.sector_azimuths_deg))
        self.n_cells = len(self.geom.sector_azimuths)
        self.psd = {dr: radio.psd_mw_per_prb(dr, self.params) for dr in DIRECTIONS}
        self.noise_prb = radio.noise_mw(1, self.params)
        self.max_tx = {
            (URLLC, "UL"): cfg.mac.max_tx_urllc_ul, (URLLC, "DL"): cfg.mac.max_tx_urllc_dl,
            (AI, "UL"): cfg.mac.max_tx_ai_ul, (AI, "DL"): cfg.mac.max_tx_ai_dl,
        }
        self.decode_rng = self.rngs.stream("decode")
        self.loss_rng = self.rngs.stream("forced-loss")

        self.devices: list[Device] = []
        self.urllc_devices = [self._make_device("urllc", i) for i in range(d.n_urllc)]
        self.ai_devices = [self._make_device("ai", j) for j in range(cfg.fl.n_devices)]
        self.coupling = np.array([dev.coupling for dev in self.devices]) if self.devices \
            else np.zeros((0, self.n_cells))

        targets = {URLLC: r.bler_target_urllc, AI: r.bler_target_ai}
        self.schedulers = {
            (c, dr): CellScheduler(c, dr, r.n_prb, targets, r.overhead, r.bler_slope_db,
                                   prb_offset=(c * r.n_prb) // self.n_cells)
            for c in range(self.n_cells) for dr in DIRECTIONS}
        self.bearers: dict[tuple[int, str], list[Bearer]] = {k: [] for k in self.schedulers}
        self.retx: dict[tuple[int, str], list[HarqProcess]] = {k: [] for k in self.schedulers}
        self.rx_pending: list[tuple[Bearer, object]] = []
        self.feedback: dict[int, list[tuple[HarqProcess, bool]]] = defaultdict(list)
        self.occ_dl = np.zeros(self.n_cells)
        self.i_ul = np.zeros(self.n_cells)

        self.trackers: dict[tuple[int, str], FlowTracker] = {}
        self._setup_urllc()
        self.ai_bearers: dict[tuple[int, str], Bearer] = {}
        self._setup_fl()

        self.sim.on(EventKind.TTI_BOUNDARY, self._on_tti)
        self.sim.on(EventKind.PACKET_ARRIVAL, self._on_packet)
        self.sim.on(EventKind.COMPUTE_DONE, self._on_compute_done)
        self.sim.on(EventKind.ROUND_TRIGGER, self._on_round_trigger)

    # ------------------------------------------------------------------ setup
    def _make_device(self, kind: str, index: int) -> Device:
        rng = self.rngs.stream(f"placement/{kind}/{index}")
        hx, hy, _ = self.geom.hall
        pos = radio.Position(float(rng.random()) * hx, float(rng.random()) * hy, self.geom.device_height)
        link = radio.draw_link(len(self.devices), pos, self.geom, self.params,
                               self.rngs.stream(f"link/{kind}/{index}"))
        dev = Device(len(self.devices), kind, index, pos, link, link.coupling_mw())
        self.devices.append(dev)
        return dev

    def _bearer(self, dev: Device, cls: str, direction: str, on_sdu) -> Bearer:
        rc = self.cfg.rlc
        if cls == URLLC:
            tx = UmEntity(f"{dev.device_id}/{cls}/{direction}", rc.header_bytes, rc.buffer_cap_bytes)
            rx = Reassembler(in_order=False)
        else:
            tx = AmEntity(f"{dev.device_id}/{cls}/{direction}", rc.header_bytes, rc.am_max_tx,
                          rc.buffer_cap_bytes)
            rx = Reassembler(in_order=True)
        b = Bearer(dev, cls, direction, tx, rx, on_sdu)
        self.bearers[(dev.cell, direction)].append(b)
        return b

    def _setup_urllc(self) -> None:
        u = self.cfg.urllc
        period = ms(u.period_ms)
        for dev in self.urllc_devices:
            phase_rng = self.rngs.stream(f"traffic-phase/{dev.index}")
            for direction in DIRECTIONS:
                phase = int(phase_rng.integers(0, period // 1000)) * 1000 if u.random_phase else 0
                flow = UrllcFlowCfg(
                    direction, period,
                    u.ul_size_bytes if direction == "UL" else u.dl_size_bytes,
                    ms(u.ul_delay_bound_ms if direction == "UL" else u.dl_delay_bound_ms),
                    ms(u.ul_survival_ms if direction == "UL" else u.dl_survival_ms),
                    phase)
                tracker = FlowTracker(dev.device_id, flow)
                self.trackers[(dev.device_id, direction)] = tracker
                bearer = self._bearer(dev, URLLC, direction, self._on_urllc_sdu)
                if phase < self.horizon:
                    self.sim.schedule(phase, EventKind.PACKET_ARRIVAL, (tracker, bearer))

    def _setup_fl(self) -> None:
        f = self.cfg.fl
        self.N = f.n_devices
        self.n_required = f.n_required
        self.rounds: list[RoundState] = []
        self.current: RoundState | None = None
        if self.N == 0:
            return
        for dev in self.ai_devices:
            for direction in DIRECTIONS:
                self.ai_bearers[(dev.device_id, direction)] = self._bearer(dev, AI, direction, self._on_ai_sdu)
        lrng = np.random.default_rng(self.rngs.stream("learner").integers(0, 2**63))
        self.problem = LearnerProblem.random(self.N, f.dim, rng=lrng)
        self.step = f.step_size if f.step_size is not None else 1.0 / self.problem.smoothness()
        self.w = np.zeros(f.dim)
        self.w_star = self.problem.minimizer()
        self.local_compute = int(round((f.compute_c0_s + f.compute_c1_s * f.param_count) * 1e9))
        self.master_compute = int(round(f.master_compute_s * 1e9))

    # ------------------------------------------------------------------ URLLC
    def _on_packet(self, ev) -> None:
        tracker, bearer = ev.payload
        now = self.sim.now
        rec = tracker.new_packet(now)
        bearer.send(tracker.flow.size_bytes, now, rec)
        nxt = now + tracker.flow.period
        if nxt < self.horizon:
            self.sim.schedule(nxt, EventKind.PACKET_ARRIVAL, ev.payload)

    def _on_urllc_sdu(self, bearer: Bearer, sdu: RlcSdu, now: int) -> None:
        rec = sdu.tag
        if rec.delivery_time is None:
            rec.delivery_time = now

    # ------------------------------------------------------------------ FL
    def _ai_index(self, dev: Device) -> int:
        return dev.index

    def start_round(self, k: int) -> None:
        now = self.sim.now
        rs = RoundState(k, now, self.n_required)
        self.current = rs
        self.rounds.append(rs)
        size = self.cfg.fl.model_bytes
        for dev in self.ai_devices:
            for direction in DIRECTIONS:
                b = self.ai_bearers[(dev.device_id, direction)]
                if b.tx.has_data() or b.tx.in_flight_sdus():
                    self.counters[f"flushed_{direction.lower()}"] += 1
                b.flush()
            rs.devices[dev.device_id] = DeviceRound(dev.device_id)
            self.ai_bearers[(dev.device_id, "DL")].send(size, now, (k, "DL"))

    def _on_ai_sdu(self, bearer: Bearer, sdu: RlcSdu, now: int) -> None:
        bearer.delivered.append(sdu.sdu_id)
        rs = self.current
        k, direction = sdu.tag
        if rs is None or k != rs.k:
            self.counters["stale_deliveries"] += 1
            return
        dev = bearer.device
        dr = rs.devices[dev.device_id]
        if direction == "DL":
            dr.dl_done = (now - rs.start) / 1e9
            self.sim.schedule(now + self.local_compute, EventKind.COMPUTE_DONE, (dev, k, now))
            return
        dr.ul = (now - rs.start) / 1e9 - dr.dl_done - dr.compute
        if rs.first_n is not None:
            self.counters["late_uploads"] += 1
            return
        rs.uploads[dev.device_id] = self._pending_upload.pop((dev.device_id, k))
        if rs.record_upload(dev.device_id):
            self.sim.schedule(now + self.master_compute, EventKind.ROUND_TRIGGER, k)

    def _on_compute_done(self, ev) -> None:
        dev, k, dl_time = ev.payload
        rs = self.current
        if rs is None or rs.k != k:
            return
        now = self.sim.now
        dr = rs.devices[dev.device_id]
        dr.compute = (now - dl_time) / 1e9
        f = self.cfg.fl
        c = local_update(self.problem, self._ai_index(dev), self.w, f.learner, self.step, f.local_steps)
        self._pending_upload[(dev.device_id, k)] = c
        self.ai_bearers[(dev.device_id, "UL")].send(f.model_bytes, now, (k, "UL"))

    def _on_round_trigger(self, ev) -> None:
        k = ev.payload
        rs = self.current
        now = self.sim.now
        f = self.cfg.fl
        uploads = [rs.uploads[i] for i in rs.first_n]
        self.w = global_update(self.w, uploads, f.learner, self.step)
        rs.update_time = now
        totals = rs.completed()
        rs.delay_s = iteration_delay(totals, self.n_required, self.master_compute / 1e9)
        if self.check_invariants:
            expect = (now - rs.start) / 1e9
            if abs(expect - rs.delay_s) > 1e-9:
                raise InvariantViolation(f"round {k}: delay {rs.delay_s} != timestamps {expect}")
        rs.n_received = len(totals)
        _, rs.dist = convergence_check(self.w, self.problem, 0.0)
        if f.max_rounds is not None and k + 1 >= f.max_rounds:
            self.current = None
            return
        self.start_round(k + 1)

    # ------------------------------------------------------------------ radio loop
    def _sinr_estimate(self, dev: Device, direction: str) -> float:
        c = dev.cell
        if direction == "DL":
            other = float(self.occ_dl @ dev.coupling) - self.occ_dl[c] * dev.coupling[c]
            denom = self.noise_prb / self.psd["DL"] + other
            return 10.0 * np.log10(dev.coupling[c] / denom)
        denom = self.noise_prb + self.i_ul[c]
        return 10.0 * np.log10(self.psd["UL"] * dev.coupling[c] / denom)

    def _on_tti(self, ev) -> None:
        now = self.sim.now
        tti = now // TTI_NS

        pending, self.rx_pending = self.rx_pending, []
        for bearer, pdu in pending:
            if pdu.epoch != bearer.tx.epoch:
                continue
            for sdu in bearer.rx.reassemble(pdu, now):
                bearer.on_sdu(bearer, sdu, now)

        for proc, ok in self.feedback.pop(tti, ()):
            bearer = proc.key
            if proc.epoch != bearer.tx.epoch:
                continue
            res = on_harq_feedback(proc, ok)
            if res is HarqResult.DELIVERED:
                bearer.tx.on_pdu_outcome(proc.pdu, True)
            elif res is HarqResult.RETRANSMIT:
                self.retx[(bearer.cell, bearer.direction)].append(proc)
                self.counters["harq_retx"] += 1
            else:
                self._pdu_lost(bearer, proc.pdu)

        header = self.cfg.rlc.header_bytes
        live: dict[str, list] = {"UL": [], "DL": []}
        for (cell, direction), sched in self.schedulers.items():
            reqs = []
            for b in self.bearers[(cell, direction)]:
                tx = b.tx
                if tx.has_data():
                    reqs.append(SchedRequest(b.device.device_id, b.cls, direction,
                                             tx.queued_bytes or tx.next_pdu_bytes(), tx.next_pdu_bytes(),
                                             self._sinr_estimate(b.device, direction), b))
            harq = [p for p in self.retx[(cell, direction)] if p.epoch == p.key.tx.epoch]
            if not reqs and not harq:
                self.retx[(cell, direction)] = []
                continue
            alloc, deferred = sched.schedule_tti(tti, reqs, harq)
            self.retx[(cell, direction)] = deferred
            for g in alloc.grants:
                b = g.key
                if g.new_data:
                    if g.tb_bits // 8 < header + 1:
                        continue
                    pdu = b.tx.next_pdu(g.tb_bits // 8)
                    g.harq = HarqProcess(g.tb_bits, g.mcs, g.n_prb, b.cls, b.device.device_id,
                                         self.max_tx[(b.cls, direction)], pdu=pdu, key=b, epoch=b.tx.epoch)
                live[direction].append((cell, g))
            if self.trace_allocations:
                self.allocations.append(alloc)

        self._decode(live, tti)
        self._update_csi(live)
        if self.check_invariants:
            self._check_conservation()
        if tti % 200 == 0:
            self._expire_partials(now)
        nxt = now + TTI_NS
        if nxt <= self.horizon:
            self.sim.schedule(nxt, EventKind.TTI_BOUNDARY)

    def _decode(self, live, tti: int) -> None:
        lossless = self.params.lossless
        slope = self.params.bler_slope_db
        rtt = self.cfg.mac.harq_rtt_tti
        forced = self.forced_pdu_loss
        n_prb = self.params.n_prb
        for direction, grants in live.items():
            if not grants:
                continue
            psd = self.psd[direction]
            for cell, g in grants:
                dev = g.key.device
                if lossless:
                    ok = True
                else:
                    s = psd * dev.coupling[cell]
                    interf = 0.0
                    for c2, g2 in grants:
                        if c2 == cell:
                            continue
                        ov = radio.overlap(g.prb_start, g.n_prb, g2.prb_start, g2.n_prb, n_prb)
                        if ov <= 0:
                            continue
                        if direction == "DL":
                            interf += psd * ov * dev.coupling[c2]
                        else:
                            interf += psd * ov * g2.key.device.coupling[cell]
                    sinr = 10.0 * np.log10(s / (self.noise_prb + interf / g.n_prb))
                    ok = radio.decode(sinr, g.mcs, self.decode_rng, slope)
                    self.counters["tb_tx"] += 1
                    if not ok:
                        self.counters["tb_err"] += 1
                proc = g.harq
                if forced is not None:
                    # injected loss hits the PDU as a whole: MAC gives up on it
                    lost = self.loss_rng.uniform() < forced
                    if lost:
                        self.feedback[tti + rtt].append((proc, False))
                        proc.tx_count = proc.max_tx
                        continue
                    ok = True
                if ok:
                    self.rx_pending.append((g.key, proc.pdu))
                self.feedback[tti + rtt].append((proc, ok))

    def _update_csi(self, live) -> None:
        lam = self.params.csi_ewma
        n_prb = self.params.n_prb
        occ = np.zeros(self.n_cells)
        for cell, g in live["DL"]:
            occ[cell] += g.n_prb
        self.occ_dl += lam * (occ / n_prb - self.occ_dl)
        iul = np.zeros(self.n_cells)
        psd = self.psd["UL"]
        for cell, g in live["UL"]:
            row = g.key.device.coupling
            for c in range(self.n_cells):
                if c != cell:
                    iul[c] += psd * g.n_prb * row[c]
        self.i_ul += lam * (iul / n_prb - self.i_ul)

    def _pdu_lost(self, bearer: Bearer, pdu) -> None:
        self.counters[f"mac_drop_{bearer.cls.lower()}"] += 1
        out = bearer.tx.on_pdu_outcome(pdu, False)
        if out is Outcome.SDU_FAILED:
            self.counters["rlc_sdu_failed"] += 1
            meta = bearer.rx._meta.get(pdu.sdu_id)
            tag = meta.tag if meta is not None else None
            for sdu in bearer.rx.skip(pdu.sdu_id):
                bearer.on_sdu(bearer, sdu, self.sim.now)
            if bearer.cls == AI and tag is not None and self.current is not None and tag[0] == self.current.k:
                # the round cannot finish without this payload: resend it
                bearer.send(self.cfg.fl.model_bytes, self.sim.now, tag)

    def _expire_partials(self, now: int) -> None:
        horizon = ms(max(self.cfg.urllc.ul_delay_bound_ms, self.cfg.urllc.dl_delay_bound_ms)) * 2
        for (cell, direction), bearers in self.bearers.items():
            for b in bearers:
                if b.cls == URLLC:
                    b.rx.discard_partial(now - horizon)

    def _check_conservation(self) -> None:
        for key, b in self.ai_bearers.items():
            tx = b.tx
            if len(tx.delivered) + len(tx.failed) + len(tx.flushed) + len(tx.outstanding) != tx.n_enqueued:
                raise InvariantViolation(f"RLC conservation broken on {key}")

    # ------------------------------------------------------------------ run
    _pending_upload: dict

    def run(self) -> None:
        self._pending_upload = {}
        self.sim.schedule(0, EventKind.TTI_BOUNDARY)
        if self.N > 0:
            self.start_round(0)
        self.sim.run_until(self.horizon)

    def urllc_rows(self) -> list[dict]:
        rows = []
        for dev in self.urllc_devices:
            ys = {}
            for direction in DIRECTIONS:
                tr = self.trackers[(dev.device_id, direction)]
                ys[direction] = apply_survival(tr.x_trace(self.horizon), tr.flow.survival)
            both = combine_and(ys["UL"], ys["DL"])
            rows.append({
                "device_id": dev.device_id,
                "avail_ul": availability(ys["UL"]),
                "avail_dl": availability(ys["DL"]),
                "avail_combined": availability(both),
            })
        return rows

    def completed_rounds(self) -> list[RoundState]:
        return [r for r in self.rounds if r.delay_s is not None]


def run_id_for(cfg: ScenarioConfig, seed: int) -> str:
    f = cfg.fl
    return f"N{f.n_devices}_n{f.n_required}_P{int(f.param_count)}_s{seed}_{cfg.config_hash()[:8]}"


def run_scenario(cfg: ScenarioConfig, seed: int, **kw) -> RunResult:
    """Simulate one (config, seed) pair and reduce it to KPI rows."""
    net = Network(cfg, seed, **kw)
    net.run()
    f = cfg.fl
    res = RunResult(run_id_for(cfg, seed), int(seed), cfg.config_hash(), f.n_devices,
                    f.eta_value, f.n_required, f.model_bytes)
    for row in net.urllc_rows():
        res.urllc_rows.append(row)
    for rs in net.completed_rounds():
        res.ai_rows.append({
            "round_k": rs.k,
            "d_k_ai_s": rs.delay_s,
            "n_received_at_update": rs.n_received,
            "dist_to_wstar": rs.dist,
        })
        for dev_id, dr in sorted(rs.devices.items()):
            res.detail_rows.append({
                "round_k": rs.k,
                "device_id": dev_id,
                "d_dl_s": dr.dl_done,
                "d_compute_s": dr.compute,
                "d_ul_s": dr.ul,
                "in_first_n": dr.in_first_n,
            })
    counts = {"generated": 0, "on_time": 0, "failed": 0}
    for tr in net.trackers.values():
        ok, bad, total = tr.counts(net.horizon)
        counts["on_time"] += ok
        counts["failed"] += bad
        counts["generated"] += total
    res.counters = dict(sorted({**net.counters, **{f"urllc_{k}": v for k, v in counts.items()}}.items()))
    return res
