import pytest
from hypothesis import given, settings, strategies as st

from coexsim.config import ConfigError, desk_profile, dump_config, load_config, parse_config, write_echo


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    cfg = parse_config(path)
    assert cfg.urllc.ul_survival_ms == 5.0 and cfg.urllc.dl_survival_ms == 5.0
    assert cfg.radio.bandwidth_mhz == 40.0
    assert cfg.sim.horizon_s == 100.0 and cfg.sim.seeds == 10
    assert cfg.deployment.n_urllc == 10
    assert cfg.metrics.a_req == 0.95 and cfg.metrics.gamma == 0.01
    assert cfg.mac.max_tx_urllc_ul == 3 and cfg.mac.max_tx_urllc_dl == 2
    assert cfg.rlc.am_max_tx == 8


def test_eta_above_one_rejected():
    with pytest.raises(ConfigError, match="fl.eta"):
        load_config({"fl": {"n_devices": 10, "eta": 1.3}})


def test_inconsistent_n_and_eta_rejected():
    with pytest.raises(ConfigError):
        load_config({"fl": {"n_devices": 10, "eta": 0.5, "n": 4}})


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="radio.bandwith_mhz"):
        load_config({"radio": {"bandwith_mhz": 20}})


def test_non_mapping_rejected(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        parse_config(p)


def test_desk_profile():
    cfg = desk_profile()
    assert cfg.sim.horizon_s == 20.0
    assert cfg.fl.model_bytes == 2_000_000


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 80), st.floats(0.05, 1.0), st.sampled_from(["paper", "desk"]),
       st.floats(0.1, 500))
def test_echo_round_trip(tmp_path_factory, N, eta, profile, dur):
    cfg = load_config({"sim": {"profile": profile, "duration_s": dur},
                       "fl": {"n_devices": N, "eta": eta}})
    d = tmp_path_factory.mktemp("echo")
    back = parse_config(write_echo(cfg, d))
    assert back == cfg
    assert back.config_hash() == cfg.config_hash()
    assert dump_config(back) == dump_config(cfg)
