"""Abstract PHY: geometry, path gain, SINR, link adaptation and decoding.

All powers handled internally in linear milliwatts; dB only at the edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

N_PRB = 106
SUBCARRIERS_PER_PRB = 12
SYMBOLS_PER_SLOT = 14
SCS_HZ = 30_000.0
THERMAL_DBM_HZ = -174.0

# CQI-like spectral efficiencies, bits per resource element
SPECTRAL_EFF = (
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141,
    2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547,
)


def db2lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0) if np.ndim(x) else 10.0 ** (x / 10.0)


def lin2db(x):
    return 10.0 * np.log10(x) if np.ndim(x) else 10.0 * math.log10(x)


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


@dataclass(frozen=True)
class Position:
    x: float
    y: float
    z: float

    def distance(self, other: "Position") -> float:
        return math.sqrt((self.x - other.x) ** 2 + (self.y - other.y) ** 2 + (self.z - other.z) ** 2)


@dataclass(frozen=True)
class McsEntry:
    index: int
    spectral_eff: float
    snr50_db: float


def default_mcs_table(snr50_min: float = -7.0, snr50_max: float = 20.0) -> tuple[McsEntry, ...]:
    step = (snr50_max - snr50_min) / (len(SPECTRAL_EFF) - 1)
    return tuple(
        McsEntry(i + 1, eff, snr50_min + i * step) for i, eff in enumerate(SPECTRAL_EFF)
    )


MCS_TABLE = default_mcs_table()


@dataclass
class RadioParams:
    """Constants of the abstract channel; mirrors the ``radio`` config section."""

    carrier_ghz: float = 2.6
    pl_exponent: float = 2.15
    shadowing_sigma_db: float = 4.0
    blockage_loss_db: float = 15.0
    blocker_density: float = 0.15
    blocker_mean_width_m: float = 1.25
    noise_figure_db: float = 7.0
    ul_tx_power_w: float = 0.2
    dl_tx_power_w: float = 0.5
    n_prb: int = N_PRB
    overhead: float = 0.14
    bler_slope_db: float = 0.5
    antenna_peak_dbi: float = 14.0
    beamwidth_3db_deg: float = 70.0
    front_to_back_db: float = 20.0
    bler_target_ai: float = 0.1
    bler_target_urllc: float = 0.01
    csi_ewma: float = 0.5
    lossless: bool = False

    @property
    def pl0_db(self) -> float:
        return 31.84 + 19.0 * math.log10(self.carrier_ghz)


@dataclass
class CellGeometry:
    hall: tuple[float, float, float] = (15.0, 15.0, 11.0)
    gnb_height: float = 10.0
    device_height: float = 1.5
    sector_azimuths: tuple[float, ...] = (0.0, 120.0, 240.0)

    def __post_init__(self):
        wrapped = [a % 360.0 for a in self.sector_azimuths]
        if len(set(wrapped)) != len(wrapped):
            raise ValueError("sector azimuths must be distinct modulo 360")

    @property
    def gnb(self) -> Position:
        return Position(self.hall[0] / 2, self.hall[1] / 2, self.gnb_height)

    def contains(self, p: Position) -> bool:
        return 0 <= p.x <= self.hall[0] and 0 <= p.y <= self.hall[1] and 0 <= p.z <= self.hall[2]


def path_loss_db(d: float, params: RadioParams) -> float:
    d = max(d, 0.1)
    return params.pl0_db + 10.0 * params.pl_exponent * math.log10(d)


def path_gain(a: Position, b: Position, params: RadioParams,
              shadowing_db: float = 0.0, blocked: bool = False) -> float:
    """Log-distance gain in dB with additive shadowing and blockage penalty."""
    gain = -path_loss_db(a.distance(b), params) - shadowing_db
    if blocked:
        gain -= params.blockage_loss_db
    return gain


def blockage_probability(d: float, params: RadioParams) -> float:
    return 1.0 - math.exp(-params.blocker_density * params.blocker_mean_width_m * d)


def sector_pattern_db(azimuth_deg: float, boresight_deg: float, params: RadioParams) -> float:
    off = (azimuth_deg - boresight_deg + 180.0) % 360.0 - 180.0
    att = min(12.0 * (off / params.beamwidth_3db_deg) ** 2, params.front_to_back_db)
    return params.antenna_peak_dbi - att


def azimuth_deg(gnb: Position, p: Position) -> float:
    return math.degrees(math.atan2(p.y - gnb.y, p.x - gnb.x)) % 360.0


def sector_gains_db(device: Position, geom: CellGeometry, params: RadioParams) -> list[float]:
    az = azimuth_deg(geom.gnb, device)
    return [sector_pattern_db(az, b, params) for b in geom.sector_azimuths]


def assign_cell(device: Position, geom: CellGeometry, params: RadioParams,
                gain_db: float = 0.0) -> int:
    """Serving sector: strongest received power, lowest index on ties."""
    totals = [gain_db + g for g in sector_gains_db(device, geom, params)]
    best = 0
    for i, v in enumerate(totals):
        if v > totals[best]:
            best = i
    return best


@dataclass
class LinkState:
    device_id: int
    serving_cell: int
    path_gain_db: float
    blocked: bool
    shadowing_db: float
    sector_gain_db: tuple[float, ...] = field(default_factory=tuple)

    def coupling_mw(self) -> np.ndarray:
        """Linear gain to every sector including its antenna pattern."""
        return db2lin(self.path_gain_db + np.asarray(self.sector_gain_db))


def draw_link(device_id: int, pos: Position, geom: CellGeometry, params: RadioParams, rng) -> LinkState:
    """Fixed-for-the-run shadowing and blockage for the device-gNB link."""
    d = pos.distance(geom.gnb)
    shadow = float(rng.normal(0.0, params.shadowing_sigma_db)) if params.shadowing_sigma_db > 0 else 0.0
    blocked = bool(rng.random() < blockage_probability(d, params))
    gain = path_gain(pos, geom.gnb, params, shadow, blocked)
    sectors = sector_gains_db(pos, geom, params)
    cell = assign_cell(pos, geom, params, gain)
    return LinkState(device_id, cell, gain, blocked, shadow, tuple(sectors))


def noise_mw(n_prb: int, params: RadioParams) -> float:
    bw = n_prb * SUBCARRIERS_PER_PRB * SCS_HZ
    return dbm_to_mw(THERMAL_DBM_HZ + 10.0 * math.log10(bw) + params.noise_figure_db)


def psd_mw_per_prb(direction: str, params: RadioParams) -> float:
    watts = params.ul_tx_power_w if direction == "UL" else params.dl_tx_power_w
    return watts * 1000.0 / params.n_prb


def sinr_db(signal_mw: float, noise_mw_: float, interference_mw: float = 0.0) -> float:
    return 10.0 * math.log10(signal_mw / (noise_mw_ + interference_mw))


def spans(start: int, length: int, n_prb: int = N_PRB) -> tuple[tuple[int, int], ...]:
    """Half-open PRB ranges of an allocation that may wrap past the band edge."""
    end = start + length
    if end <= n_prb:
        return ((start, end),)
    return ((start, n_prb), (0, end - n_prb))


def overlap(a_start: int, a_len: int, b_start: int, b_len: int, n_prb: int = N_PRB) -> int:
    total = 0
    for s0, e0 in spans(a_start, a_len, n_prb):
        for s1, e1 in spans(b_start, b_len, n_prb):
            total += max(0, min(e0, e1) - max(s0, s1))
    return total


def link_sinr(signal_coupling_mw: float, prb_start: int, n_prb: int, psd_mw: float,
              interferers, params: RadioParams) -> float:
    """SINR over an allocation.

    ``interferers`` yields ``(prb_start, n_prb, psd_mw, coupling_mw)`` for
    co-channel transmissions in other sectors; only overlapping PRBs count.
    """
    if n_prb < 1:
        raise ValueError("allocation must be non-empty")
    s = psd_mw * n_prb * signal_coupling_mw
    i = 0.0
    for start, length, ipsd, coupling in interferers:
        ov = overlap(prb_start, n_prb, start, length, params.n_prb)
        if ov:
            i += ipsd * ov * coupling
    return sinr_db(s, noise_mw(n_prb, params), i)


def bler(sinr: float, mcs: McsEntry, slope_db: float = 0.5) -> float:
    z = (sinr - mcs.snr50_db) / slope_db
    if z > 700:
        return 0.0
    if z < -700:
        return 1.0
    return 1.0 / (1.0 + math.exp(z))


def select_mcs(sinr: float, bler_target: float, table=MCS_TABLE, slope_db: float = 0.5) -> McsEntry:
    """Highest MCS whose predicted BLER meets the target; lowest entry otherwise."""
    if not table:
        raise ValueError("empty MCS table")
    margin = slope_db * math.log(1.0 / bler_target - 1.0)
    chosen = table[0]
    for entry in table:
        if sinr >= entry.snr50_db + margin and bler(sinr, entry, slope_db) <= bler_target:
            chosen = entry
        else:
            break
    return chosen


def re_per_prb(overhead: float = 0.14) -> int:
    return math.floor(SUBCARRIERS_PER_PRB * SYMBOLS_PER_SLOT * (1.0 - overhead))


def tb_capacity(prb_count: int, mcs: McsEntry, overhead: float = 0.14) -> int:
    """Transport block size in bits; REs are floored before scaling by efficiency."""
    if prb_count < 1:
        raise ValueError("prb_count must be >= 1")
    return math.floor(math.floor(prb_count * SUBCARRIERS_PER_PRB * SYMBOLS_PER_SLOT * (1.0 - overhead))
                      * mcs.spectral_eff)


def prbs_for_bits(bits: int, mcs: McsEntry, limit: int, overhead: float = 0.14) -> int:
    """Smallest PRB count whose TB holds ``bits``, capped at ``limit``."""
    per = SUBCARRIERS_PER_PRB * SYMBOLS_PER_SLOT * (1.0 - overhead) * mcs.spectral_eff
    k = max(1, min(limit, math.ceil(bits / per)))
    while k > 1 and tb_capacity(k - 1, mcs, overhead) >= bits:
        k -= 1
    while k < limit and tb_capacity(k, mcs, overhead) < bits:
        k += 1
    return k


def decode(sinr: float, mcs: McsEntry, rng, slope_db: float = 0.5) -> bool:
    return rng.uniform() >= bler(sinr, mcs, slope_db)
