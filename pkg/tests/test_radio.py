import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coexsim import radio
from coexsim.engine import rng_stream
from coexsim.radio import (MCS_TABLE, CellGeometry, McsEntry, Position, RadioParams, assign_cell,
                           bler, blockage_probability, decode, draw_link, link_sinr, noise_mw,
                           path_gain, path_loss_db, select_mcs, tb_capacity)

P = RadioParams()


def test_reference_path_loss_at_one_metre():
    assert path_loss_db(1.0, P) == pytest.approx(31.84 + 19 * math.log10(2.6))
    assert path_loss_db(1.0, P) == pytest.approx(39.72, abs=0.01)


def test_path_gain_examples():
    a = Position(0, 0, 0)
    assert path_gain(a, Position(10, 0, 0), P) == pytest.approx(-61.22, abs=0.01)
    assert path_gain(a, Position(1, 0, 0), P) == pytest.approx(-39.72, abs=0.01)
    assert path_gain(a, Position(10, 0, 0), P, blocked=True) == pytest.approx(-76.22, abs=0.01)


@given(st.tuples(*[st.floats(0, 30)] * 3), st.tuples(*[st.floats(0, 30)] * 3))
def test_path_gain_symmetric(p, q):
    a, b = Position(*p), Position(*q)
    assert path_gain(a, b, P) == path_gain(b, a, P)


def test_blockage_probability_grows_with_distance():
    assert blockage_probability(0.0, P) == 0.0
    assert blockage_probability(10.0, P) == pytest.approx(1 - math.exp(-0.15 * 1.25 * 10))
    assert blockage_probability(20.0, P) > blockage_probability(10.0, P)


def test_link_draws_are_fixed_per_label():
    g = CellGeometry()
    pos = Position(3.0, 4.0, 1.5)
    a = draw_link(0, pos, g, P, rng_stream(5, "link/urllc/0"))
    b = draw_link(0, pos, g, P, rng_stream(5, "link/urllc/0"))
    assert a == b


def test_assign_cell_boresight_and_tie():
    g = CellGeometry()
    gnb = g.gnb
    on0 = Position(gnb.x + 5, gnb.y, 1.5)
    assert assign_cell(on0, g, P) == 0
    # 60 degrees sits midway between sectors 0 and 1
    mid = Position(gnb.x + 5 * math.cos(math.radians(60)), gnb.y + 5 * math.sin(math.radians(60)), 1.5)
    assert assign_cell(mid, g, P) == 0


def test_random_devices_cover_every_sector():
    g = CellGeometry()
    rng = np.random.default_rng(0)
    cells = {assign_cell(Position(rng.uniform(0, 15), rng.uniform(0, 15), 1.5), g, P) for _ in range(100)}
    assert cells == {0, 1, 2}


def test_sinr_definition_and_interference():
    noise = noise_mw(10, P)
    psd = 1e-3  # mW per PRB
    gain = 10 * noise / (psd * 10)  # gives 10 dB SNR
    clean = link_sinr(gain, 0, 10, psd, [], P)
    assert clean == pytest.approx(10.0)
    # interferer delivering exactly the noise power on the same PRBs
    inter = [(0, 10, psd, noise / (psd * 10))]
    assert clean - link_sinr(gain, 0, 10, psd, inter, P) == pytest.approx(10 * math.log10(2), abs=1e-9)
    assert link_sinr(gain, 0, 10, psd, [(50, 10, psd, 1.0)], P) == pytest.approx(clean)


def test_overlap_with_wraparound():
    assert radio.overlap(100, 10, 0, 5) == 4
    assert radio.overlap(0, 10, 10, 10) == 0


def test_bler_examples():
    m = McsEntry(1, 1.0, 3.0)
    assert bler(3.0, m) == pytest.approx(0.5)
    assert bler(5.0, m) == pytest.approx(1 / (1 + math.e ** 4))
    assert bler(5.0, m) == pytest.approx(0.0180, abs=5e-5)


def test_select_mcs_limits_and_midpoint():
    assert select_mcs(1e6, 0.1).index == 15
    assert select_mcs(-1e6, 0.1).index == 1
    assert select_mcs(MCS_TABLE[6].snr50_db, 0.1).index < 7


def test_select_mcs_meets_target_when_possible():
    for s in np.linspace(-10, 30, 81):
        m = select_mcs(s, 0.01)
        if m.index > 1:
            assert bler(s, m) <= 0.01


@given(st.floats(-20, 40), st.floats(0, 10))
def test_select_mcs_monotone(s, ds):
    assert select_mcs(s + ds, 0.1).index >= select_mcs(s, 0.1).index


@given(st.floats(-20, 40), st.floats(0.01, 10))
def test_bler_strictly_decreasing(s, ds):
    m = MCS_TABLE[7]
    lo, hi = bler(s, m), bler(s + ds, m)
    assert hi <= lo
    if 0 < hi < 1 and 0 < lo < 1:
        assert hi < lo


def test_tb_capacity_examples():
    assert tb_capacity(10, McsEntry(0, 2.0, 0.0)) == 2888
    assert tb_capacity(1, McsEntry(0, 1.0, 0.0)) == 144
    with pytest.raises(ValueError):
        tb_capacity(0, MCS_TABLE[0])


@given(st.integers(1, 105), st.integers(0, 13))
def test_tb_capacity_monotone(n, i):
    assert tb_capacity(n + 1, MCS_TABLE[i]) >= tb_capacity(n, MCS_TABLE[i])
    assert tb_capacity(n, MCS_TABLE[i + 1]) >= tb_capacity(n, MCS_TABLE[i])


@given(st.integers(1, 200_000), st.integers(0, 14), st.integers(1, 106))
def test_prbs_for_bits_is_minimal(bits, i, limit):
    m = MCS_TABLE[i]
    k = radio.prbs_for_bits(bits, m, limit)
    assert 1 <= k <= limit
    if tb_capacity(k, m) >= bits and k > 1:
        assert tb_capacity(k - 1, m) < bits
    if tb_capacity(k, m) < bits:
        assert k == limit


def test_decode_failure_rate_matches_bler():
    m = MCS_TABLE[4]
    sinr = m.snr50_db + 0.5
    p = bler(sinr, m)
    rng = rng_stream(0, "decode")
    n = 100_000
    fails = sum(not decode(sinr, m, rng) for _ in range(n))
    sd = math.sqrt(n * p * (1 - p))
    assert abs(fails - n * p) <= 3 * sd
