"""Simulator and attack suite for a temporal-credential WSN authentication scheme."""

from .errors import ProtocolError, WsnAuthError
from .netsim import Scenario, ScenarioConfig, build_deployment, run_all

__all__ = ["ProtocolError", "WsnAuthError", "Scenario", "ScenarioConfig", "build_deployment", "run_all"]
__version__ = "0.1.0"
