"""URLLC / n-sync distributed learning coexistence simulator."""

from .config import ScenarioConfig, desk_profile, load_config, parse_config
from .scenario import RunResult, run_scenario

__all__ = ["ScenarioConfig", "RunResult", "desk_profile", "load_config", "parse_config", "run_scenario"]
__version__ = "0.1.0"
