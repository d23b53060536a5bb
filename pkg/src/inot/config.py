"""Application configuration: flat JSON key-value file, env-overridable path.

Model endpoints are all optional; with none configured the service runs the
deterministic route only. Exactly the keys below are recognized:

  store_root              session directory root (default "./inot_sessions")
  detector_endpoint       zero-shot detector adapter URL
  onboarding_llm_endpoint text model URL for inventory extraction
  topology_vlm_endpoint   vision model URL for topology reports
  command_llm_endpoint    text model URL for command synthesis
  fixture_detections      path to a canonical Detection JSON array (offline
                          substitute for the detector)
  confidence_threshold    refinement threshold, default 0.5
  alignment_epsilon       naming alignment tolerance px, default 5.0
  near_threshold          near cutoff as fraction of image diagonal, 0.20
  backend_base_url        real device backend URL
  backend_client_id       backend credentials
  backend_secret
  use_simulator           serve an in-process simulated fleet instead
  simulator_fleet         fleet config path for the simulator
  simulator_seed          fault-plan seed (default 0)
  simulator_fault_rate    transient failure rate (default 0.0)
  room_context            optional scene hint ("kitchen" switches prompts)
  console_dir             serve the web console statically from this
                          directory under /console (optional)
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import ConfigError

ENV_CONFIG = "INOT_CONFIG"

_KNOWN_KEYS = {
    "store_root",
    "detector_endpoint",
    "onboarding_llm_endpoint",
    "topology_vlm_endpoint",
    "command_llm_endpoint",
    "fixture_detections",
    "confidence_threshold",
    "alignment_epsilon",
    "near_threshold",
    "backend_base_url",
    "backend_client_id",
    "backend_secret",
    "use_simulator",
    "simulator_fleet",
    "simulator_seed",
    "simulator_fault_rate",
    "room_context",
    "console_dir",
}


@dataclass(frozen=True)
class AppConfig:
    store_root: str = "./inot_sessions"
    detector_endpoint: Optional[str] = None
    onboarding_llm_endpoint: Optional[str] = None
    topology_vlm_endpoint: Optional[str] = None
    command_llm_endpoint: Optional[str] = None
    fixture_detections: Optional[str] = None
    confidence_threshold: float = 0.5
    alignment_epsilon: float = 5.0
    near_threshold: float = 0.20
    backend_base_url: Optional[str] = None
    backend_client_id: str = "inot-client"
    backend_secret: str = "inot-secret"
    use_simulator: bool = False
    simulator_fleet: Optional[str] = None
    simulator_seed: int = 0
    simulator_fault_rate: float = 0.0
    room_context: Optional[str] = None
    console_dir: Optional[str] = None

    def __post_init__(self):
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ConfigError(f"confidence_threshold outside [0,1]: {self.confidence_threshold}")
        if self.alignment_epsilon < 0:
            raise ConfigError(f"alignment_epsilon must be >= 0: {self.alignment_epsilon}")
        if not 0.0 < self.near_threshold < 1.0:
            raise ConfigError(f"near_threshold outside (0,1): {self.near_threshold}")
        if not self.backend_base_url and not self.use_simulator:
            raise ConfigError("configure backend_base_url or enable use_simulator")


def load_config(path: str | Path | None = None) -> AppConfig:
    """Read config JSON; ``INOT_CONFIG`` overrides an unset path."""
    if path is None:
        path = os.environ.get(ENV_CONFIG)
    if path is None:
        raise ConfigError(f"no config path given and {ENV_CONFIG} is unset")
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file missing: {p}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        return AppConfig(**data)
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
