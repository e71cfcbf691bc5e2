"""Scenario configuration: YAML on disk, validated with pydantic.

Every key has a default taken from the simulation-parameter table, so an
empty file is a complete scenario. Unknown keys are rejected.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .fl import required_uploads


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class SimConfig(_Section):
    profile: Literal["paper", "desk"] = "paper"
    duration_s: Optional[float] = Field(None, gt=0)
    seeds: int = Field(10, ge=1)
    base_seed: int = 0

    @property
    def horizon_s(self) -> float:
        if self.duration_s is not None:
            return self.duration_s
        return 100.0 if self.profile == "paper" else 20.0


class DeploymentConfig(_Section):
    hall_m: tuple[float, float, float] = (15.0, 15.0, 11.0)
    gnb_height_m: float = 10.0
    device_height_m: float = 1.5
    sector_azimuths_deg: tuple[float, float, float] = (0.0, 120.0, 240.0)
    n_urllc: int = Field(10, ge=0)
    placement: Literal["uniform"] = "uniform"


class RadioConfig(_Section):
    carrier_ghz: float = 2.6
    bandwidth_mhz: float = 40.0
    n_prb: int = 106
    pl_exponent: float = 2.15
    shadowing_sigma_db: float = Field(4.0, ge=0)
    blockage_loss_db: float = Field(15.0, ge=0)
    blocker_density: float = Field(0.15, ge=0)
    blocker_mean_width_m: float = 1.25
    noise_figure_db: float = 7.0
    ul_tx_power_w: float = Field(0.2, gt=0)
    dl_tx_power_w: float = Field(0.5, gt=0)
    overhead: float = Field(0.14, ge=0, lt=1)
    bler_slope_db: float = Field(0.5, gt=0)
    antenna_peak_dbi: float = 14.0
    beamwidth_3db_deg: float = 70.0
    front_to_back_db: float = 20.0
    bler_target_ai: float = Field(0.1, gt=0, lt=1)
    bler_target_urllc: float = Field(0.01, gt=0, lt=1)
    csi_ewma: float = Field(0.5, gt=0, le=1)
    lossless: bool = False


class MacConfig(_Section):
    harq_rtt_tti: int = Field(4, ge=1)
    max_tx_urllc_ul: int = Field(3, ge=1)
    max_tx_urllc_dl: int = Field(2, ge=1)
    max_tx_ai_ul: int = Field(10, ge=1)
    max_tx_ai_dl: int = Field(10, ge=1)


class RlcConfig(_Section):
    header_bytes: int = Field(5, ge=0)
    am_max_tx: int = Field(8, ge=1)
    buffer_cap_bytes: Optional[int] = Field(None, ge=1)


class UrllcConfig(_Section):
    period_ms: float = Field(5.0, gt=0)
    ul_size_bytes: int = Field(64, ge=1)
    dl_size_bytes: int = Field(80, ge=1)
    ul_delay_bound_ms: float = Field(6.0, gt=0)
    dl_delay_bound_ms: float = Field(2.0, gt=0)
    ul_survival_ms: float = Field(5.0, ge=0)
    dl_survival_ms: float = Field(5.0, ge=0)
    random_phase: bool = True


class FlConfig(_Section):
    n_devices: int = Field(0, ge=0)
    eta: Optional[float] = None
    n: Optional[int] = None
    param_count: float = Field(0.5e6, gt=0)
    bytes_per_param: int = Field(4, ge=1)
    learner: Literal["fedavg", "gradient"] = "gradient"
    step_size: Optional[float] = Field(None, gt=0)
    local_steps: int = Field(1, ge=1)
    dim: int = Field(10, ge=1)
    compute_c0_s: float = Field(0.05, ge=0)
    compute_c1_s: float = Field(100e-9, ge=0)
    master_compute_s: float = Field(0.02, ge=0)
    max_rounds: Optional[int] = Field(None, ge=1)

    @field_validator("eta")
    @classmethod
    def _eta_range(cls, v):
        if v is not None and not (0 < v <= 1):
            raise ValueError("eta must lie in (0, 1]")
        return v

    @model_validator(mode="after")
    def _consistent_n(self):
        if self.n_devices > 0:
            required_uploads(self.n_devices, self.eta, self.n)
        return self

    @property
    def n_required(self) -> int:
        return required_uploads(self.n_devices, self.eta, self.n) if self.n_devices else 0

    @property
    def eta_value(self) -> float:
        if self.n_devices == 0:
            return 0.0
        return self.eta if self.eta is not None else self.n_required / self.n_devices

    @property
    def model_bytes(self) -> int:
        return int(round(self.param_count)) * self.bytes_per_param


class MetricsConfig(_Section):
    a_req: float = Field(0.95, ge=0, le=1)
    gamma: float = Field(0.01, ge=0, le=1)


class ScenarioConfig(_Section):
    sim: SimConfig = SimConfig()
    deployment: DeploymentConfig = DeploymentConfig()
    radio: RadioConfig = RadioConfig()
    mac: MacConfig = MacConfig()
    rlc: RlcConfig = RlcConfig()
    urllc: UrllcConfig = UrllcConfig()
    fl: FlConfig = FlConfig()
    metrics: MetricsConfig = MetricsConfig()

    def to_dict(self) -> dict:
        return self.model_dump(mode="json")

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_updates(self, **dotted) -> "ScenarioConfig":
        """Copy with ``section__key=value`` style overrides, re-validated."""
        data = self.to_dict()
        for key, value in dotted.items():
            section, name = key.split("__", 1)
            data[section][name] = value
        return ScenarioConfig.model_validate(data)


class ConfigError(ValueError):
    pass


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"])
        lines.append(f"{path}: {e['msg']}")
    return "; ".join(lines)


def load_config(data: dict | None) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data or {})
    except ValidationError as err:
        raise ConfigError(_format_errors(err)) from None


def parse_config(path: str | Path) -> ScenarioConfig:
    text = Path(path).read_text(encoding="utf-8")
    data = yaml.safe_load(text)
    if data is not None and not isinstance(data, dict):
        raise ConfigError("top level of the config file must be a mapping")
    return load_config(data)


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True, default_flow_style=None)


def write_echo(cfg: ScenarioConfig, out_dir: str | Path, name: str = "config_echo.yaml") -> Path:
    path = Path(out_dir) / name
    path.write_text(dump_config(cfg), encoding="utf-8")
    return path


def desk_profile(**overrides) -> ScenarioConfig:
    """The small profile used by the trend checks: 20 s, 0.5M parameters."""
    cfg = load_config({"sim": {"profile": "desk"}, "fl": {"param_count": 0.5e6}})
    return cfg.with_updates(**overrides) if overrides else cfg
