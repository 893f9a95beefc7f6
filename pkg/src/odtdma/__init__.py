"""Discrete-event simulator of On-demand TDMA over LoRa with wake-up receivers,
plus a Listen-Before-Talk baseline."""

__version__ = "0.1.0"

from .airtime import PRESETS, RadioSetting, WuBParams, lora_time_on_air, slot_width, wub_airtime
from .energy import Battery, PowerModel, PowerState, lifetime, standby_lifetime
from .errors import ConfigError, DomainError, OdtdmaError, ProtocolViolation, TrialAborted
from .lbt import LbtParams
from .metrics import MetricsRow, metrics_row, pdr, round_trip_latency
from .odtdma import TdmaParams, closed_form_latency, compute_slot_start
from .sweep import run_sweep
from .trial import LBT, ODTDMA, TrialConfig, run_trial

__all__ = [
    "PRESETS", "RadioSetting", "WuBParams", "lora_time_on_air", "slot_width", "wub_airtime",
    "Battery", "PowerModel", "PowerState", "lifetime", "standby_lifetime",
    "ConfigError", "DomainError", "OdtdmaError", "ProtocolViolation", "TrialAborted",
    "LbtParams", "MetricsRow", "metrics_row", "pdr", "round_trip_latency",
    "TdmaParams", "closed_form_latency", "compute_slot_start", "run_sweep",
    "LBT", "ODTDMA", "TrialConfig", "run_trial",
]
