"""TOML experiment configuration: schema, validation, overrides, provenance.

Every key has a default. Durations are strings with a unit suffix
(``"6ms"``, ``"2s"``). Unknown sections or keys are rejected with the
nearest valid name. Custom radio settings go in ``[settings.<id>]`` tables
and may shadow the built-in presets 1-3.

Example::

    [tdma]
    guard = "6ms"

    [sweep]
    protocols = ["odtdma", "lbt"]
    ipis = ["10s", "20s", "60s"]
    seeds = [1, 2, 3]
"""

from __future__ import annotations

import difflib
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .airtime import PARAMETRIC, PRESET, PRESETS, RadioSetting, WuBParams
from .energy import Battery, PowerModel
from .engine import ClockSpec
from .errors import ConfigError
from .lbt import LbtParams
from .odtdma import ANCHORS, RADIO_OFF, RADIO_RX, TdmaParams
from .trial import PROTOCOLS, TrialConfig
from .units import format_duration, parse_duration

DEFAULT = "default"
USER = "user"
OVERRIDE = "override"


@dataclass(frozen=True)
class Field:
    parse: Callable[[Any], Any]
    default: Any
    doc: str = ""


def _int(lo=None):
    def parse(v):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"expected an integer, got {v!r}")
        if lo is not None and v < lo:
            raise ConfigError(f"must be >= {lo}, got {v}")
        return v
    return parse


def _float(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}")
    return float(v)


def _bool(v):
    if not isinstance(v, bool):
        raise ConfigError(f"expected true or false, got {v!r}")
    return v


def _choice(*options):
    def parse(v):
        if v not in options:
            raise ConfigError(f"expected one of {list(options)}, got {v!r}")
        return v
    return parse


def _float_or_off(v):
    # false disables the airtime scaling
    if v is False:
        return None
    return _float(v)


def _duration_or(keyword):
    def parse(v):
        if v == keyword:
            return None
        return parse_duration(v)
    return parse


def _list(item):
    def parse(v):
        if isinstance(v, (str, int, float)) and not isinstance(v, bool):
            v = [v]
        if not isinstance(v, list):
            raise ConfigError(f"expected a list, got {v!r}")
        return [item(x) for x in v]
    return parse


SCHEMA: Dict[str, Dict[str, Field]] = {
    "topology": {
        "n_eds": Field(_int(1), 9, "end devices in the cluster"),
    },
    "radio": {
        "preamble_fraction": Field(_float, 0.4, "preamble share of a preset-mode frame, for CAD"),
    },
    "wub": {
        "beacon_bytes": Field(_int(1), 2),
        "bitrate_bps": Field(_float, 1000.0),
        "wakeup_delay": Field(parse_duration, 17_000),
    },
    "tdma": {
        "guard": Field(parse_duration, 6_000),
        "anchor": Field(_choice(*ANCHORS), ANCHORS[0]),
        "ch_processing_delay": Field(parse_duration, 0),
        "cmd_payload_bytes": Field(_int(1), 8),
        "data_payload_bytes": Field(_int(1), 8),
        "ed_radio_policy": Field(_choice(RADIO_OFF, RADIO_RX), RADIO_OFF),
    },
    "lbt": {
        "backoff_min": Field(parse_duration, 0),
        "backoff_max": Field(parse_duration, 2_000_000),
        "backoff_airtimes": Field(_float_or_off, 7.0, "false keeps the full window"),
        "backoff_offset": Field(parse_duration, 60_000),
        "cad_duration": Field(parse_duration, 1_000),
        "cad_airtime_fraction": Field(_float_or_off, 0.5, "false uses cad_duration"),
        "max_attempts": Field(_int(0), 0, "0 means unbounded"),
        "round_deadline": Field(_duration_or("ipi"), None, "'ipi' or a duration"),
    },
    "clock": {
        "drift_ppm_bound": Field(_float, 40.0),
        "jitter_max": Field(parse_duration, 190),
        "jitter_dist": Field(_choice("uniform", "truncnormal"), "uniform"),
        "zero_jitter": Field(_bool, False),
    },
    "power": {
        "p_lora_rx_mw": Field(_float, 50.0),
        "p_lora_tx_mw": Field(_float, 250.0),
        "p_wurx_listen_uw": Field(_float, 1.83),
        "p_wurx_decode_uw": Field(_float, 284.0),
        "i_sleep_ua": Field(_float, 0.56),
        "p_mcu_active_mw": Field(_float, 80.0, "calibration constant"),
        "v_supply": Field(_float, 3.7, "calibration constant"),
    },
    "battery": {
        "capacity_mah": Field(_float, 1200.0),
    },
    "sweep": {
        "protocols": Field(_list(_choice(*PROTOCOLS)), list(PROTOCOLS)),
        "settings": Field(_list(_int(1)), [1, 2, 3]),
        "ipis": Field(_list(parse_duration), [s * 1_000_000 for s in (10, 20, 30, 40, 50, 60)]),
        "n_eds": Field(_list(_int(1)), [], "empty means [topology.n_eds]"),
        "seeds": Field(_list(_int(0)), [1]),
        "min_packets": Field(_int(1), 300),
        "n_rounds": Field(_int(0), 0, "0 derives rounds from min_packets"),
    },
    "output": {
        "dir": Field(str, "results"),
        "traces": Field(_bool, False),
    },
}

SETTING_FIELDS: Dict[str, Field] = {
    "mode": Field(_choice(PRESET, PARAMETRIC), PARAMETRIC),
    "toa_8b": Field(parse_duration, None),
    "bitrate_bps": Field(_float, None),
    "sf": Field(_int(6), None),
    "bw_hz": Field(_int(1), None),
    "cr": Field(_int(1), None),
    "preamble_symbols": Field(_int(6), 8),
    "explicit_header": Field(_bool, True),
    "crc_on": Field(_bool, True),
    "low_data_rate_optimize": Field(_bool, False),
}

ALIASES = {
    "protocol": "sweep.protocols",
    "protocols": "sweep.protocols",
    "setting": "sweep.settings",
    "settings": "sweep.settings",
    "ipi": "sweep.ipis",
    "ipis": "sweep.ipis",
    "seed": "sweep.seeds",
    "seeds": "sweep.seeds",
    "n_eds": "topology.n_eds",
    "n": "sweep.n_eds",
    "guard": "tdma.guard",
    "out": "output.dir",
}


def _all_keys() -> List[str]:
    return [f"{s}.{k}" for s, keys in SCHEMA.items() for k in keys]


def _suggest(name: str, candidates: List[str]) -> str:
    hit = difflib.get_close_matches(name, candidates, n=1, cutoff=0.4)
    return f" (did you mean '{hit[0]}'?)" if hit else ""


@dataclass
class ExperimentConfig:
    values: Dict[str, Any]
    provenance: Dict[str, str]
    settings: Dict[int, RadioSetting] = field(default_factory=dict)
    source: Optional[str] = None

    def __getitem__(self, dotted: str):
        return self.values[dotted]

    def set(self, dotted: str, raw: Any, origin: str = OVERRIDE):
        dotted = ALIASES.get(dotted, dotted)
        section, _, key = dotted.partition(".")
        if section not in SCHEMA:
            raise ConfigError(f"unknown key '{dotted}'" + _suggest(dotted, _all_keys() + list(ALIASES)))
        if key not in SCHEMA[section]:
            hit = difflib.get_close_matches(key, list(SCHEMA[section]), n=1, cutoff=0.4)
            hint = f" (did you mean '{section}.{hit[0]}'?)" if hit else ""
            raise ConfigError(f"unknown key '{dotted}'{hint}")
        try:
            self.values[dotted] = SCHEMA[section][key].parse(raw)
        except ConfigError as exc:
            raise ConfigError(f"{dotted}: {exc}") from None
        self.provenance[dotted] = origin

    # builders

    def power_model(self) -> PowerModel:
        v = self.values
        return PowerModel(
            p_lora_rx=v["power.p_lora_rx_mw"] * 1e-3,
            p_lora_tx=v["power.p_lora_tx_mw"] * 1e-3,
            p_wurx_listen=v["power.p_wurx_listen_uw"] * 1e-6,
            p_wurx_decode=v["power.p_wurx_decode_uw"] * 1e-6,
            i_sleep=v["power.i_sleep_ua"] * 1e-6,
            p_mcu_active=v["power.p_mcu_active_mw"] * 1e-3,
            v_supply=v["power.v_supply"],
        )

    def settings_table(self) -> Dict[int, RadioSetting]:
        table = dict(PRESETS)
        table.update(self.settings)
        return table

    def base_trial(self) -> TrialConfig:
        v = self.values
        n_rounds = v["sweep.n_rounds"] or None
        return TrialConfig(
            n_eds=v["topology.n_eds"],
            n_rounds=n_rounds,
            min_packets=v["sweep.min_packets"],
            tdma=TdmaParams(
                guard_us=v["tdma.guard"],
                anchor=v["tdma.anchor"],
                ch_processing_delay_us=v["tdma.ch_processing_delay"],
                cmd_payload_bytes=v["tdma.cmd_payload_bytes"],
                data_payload_bytes=v["tdma.data_payload_bytes"],
                ed_radio_policy=v["tdma.ed_radio_policy"],
            ),
            wub=WuBParams(
                beacon_bytes=v["wub.beacon_bytes"],
                wub_bitrate_bps=v["wub.bitrate_bps"],
                wakeup_delay_us=v["wub.wakeup_delay"],
            ),
            lbt=LbtParams(
                backoff_min_us=v["lbt.backoff_min"],
                backoff_max_us=v["lbt.backoff_max"],
                backoff_airtimes=v["lbt.backoff_airtimes"],
                backoff_offset_us=v["lbt.backoff_offset"],
                cad_duration_us=v["lbt.cad_duration"],
                cad_airtime_fraction=v["lbt.cad_airtime_fraction"],
                max_attempts=v["lbt.max_attempts"] or None,
                round_deadline_us=v["lbt.round_deadline"],
            ),
            clock=ClockSpec(
                drift_ppm_bound=v["clock.drift_ppm_bound"],
                jitter_max_us=v["clock.jitter_max"],
                jitter_dist=v["clock.jitter_dist"],
                zero_jitter=v["clock.zero_jitter"],
            ),
            preamble_fraction=v["radio.preamble_fraction"],
            power=self.power_model(),
            battery=Battery(capacity_mah=v["battery.capacity_mah"], v_supply=v["power.v_supply"]),
            keep_records=v["output.traces"],
        )

    def sweep_axes(self) -> dict:
        v = self.values
        table = self.settings_table()
        for sid in v["sweep.settings"]:
            if sid not in table:
                raise ConfigError(f"sweep.settings: no radio setting with id {sid}"
                                  + _suggest(str(sid), [str(k) for k in table]))
        return {
            "ipis": v["sweep.ipis"],
            "settings": v["sweep.settings"],
            "protocols": v["sweep.protocols"],
            "seeds": v["sweep.seeds"],
            "n_eds": v["sweep.n_eds"] or [v["topology.n_eds"]],
            "settings_table": table,
        }

    def validate(self):
        """Build every derived object once so bad combinations fail early."""
        self.base_trial()
        self.sweep_axes()
        for name, axis in (("protocols", "sweep.protocols"), ("settings", "sweep.settings"),
                           ("ipis", "sweep.ipis"), ("seeds", "sweep.seeds")):
            if not self.values[axis]:
                raise ConfigError(f"sweep.{name} is empty")
        if any(ipi <= 0 for ipi in self.values["sweep.ipis"]):
            raise ConfigError("sweep.ipis must all be > 0")
        return self

    def resolved(self) -> dict:
        """JSON-ready echo: every value with its origin."""
        out: Dict[str, Any] = {}
        for dotted in _all_keys():
            out[dotted] = {"value": _echo(dotted, self.values[dotted]), "origin": self.provenance[dotted]}
        for sid, s in sorted(self.settings.items()):
            out[f"settings.{sid}"] = {"value": _setting_echo(s), "origin": USER}
        return out

    def describe(self) -> str:
        lines = []
        width = max(len(k) for k in _all_keys())
        for dotted, entry in self.resolved().items():
            lines.append(f"{dotted:<{width}}  {entry['value']!s:<40}  [{entry['origin']}]")
        return "\n".join(lines)


def _echo(dotted: str, value):
    fld = SCHEMA[dotted.split(".")[0]][dotted.split(".")[1]]
    if fld.parse is parse_duration and value is not None:
        return format_duration(value)
    if dotted == "sweep.ipis":
        return [format_duration(x) for x in value]
    if dotted == "lbt.round_deadline":
        return "ipi" if value is None else format_duration(value)
    if dotted in ("lbt.backoff_airtimes", "lbt.cad_airtime_fraction") and value is None:
        return False
    return value


def _setting_echo(s: RadioSetting) -> dict:
    if s.mode == PRESET:
        return {"mode": PRESET, "toa_8b": format_duration(s.preset_toa_8b_us), "bitrate_bps": s.bitrate_bps}
    return {"mode": PARAMETRIC, "sf": s.sf, "bw_hz": s.bw_hz, "cr": s.cr,
            "preamble_symbols": s.preamble_symbols, "explicit_header": s.explicit_header,
            "crc_on": s.crc_on, "low_data_rate_optimize": s.low_data_rate_optimize}


def _parse_setting(sid_raw: str, table: Any) -> RadioSetting:
    try:
        sid = int(sid_raw)
    except ValueError:
        raise ConfigError(f"settings.{sid_raw}: setting ids must be integers") from None
    if not isinstance(table, dict):
        raise ConfigError(f"settings.{sid}: expected a table")
    errors = []
    kw = {}
    for key, raw in table.items():
        if key not in SETTING_FIELDS:
            errors.append(f"unknown key 'settings.{sid}.{key}'" + _suggest(key, list(SETTING_FIELDS)))
            continue
        try:
            kw[key] = SETTING_FIELDS[key].parse(raw)
        except ConfigError as exc:
            errors.append(f"settings.{sid}.{key}: {exc}")
    if errors:
        raise ConfigError("\n".join(errors))
    mode = kw.pop("mode", PARAMETRIC)
    toa = kw.pop("toa_8b", None)
    return RadioSetting(id=sid, mode=mode, preset_toa_8b_us=toa, **kw)


def defaults() -> ExperimentConfig:
    values = {f"{s}.{k}": f.default for s, keys in SCHEMA.items() for k, f in keys.items()}
    # lists must not be shared with the schema
    values = {k: list(v) if isinstance(v, list) else v for k, v in values.items()}
    return ExperimentConfig(values=values, provenance={k: DEFAULT for k in values})


def from_dict(doc: dict, source: Optional[str] = None) -> ExperimentConfig:
    """Validate a parsed document; collects every offending key before failing."""
    cfg = defaults()
    cfg.source = source
    errors = []
    for section, body in doc.items():
        if section == "settings":
            if not isinstance(body, dict):
                errors.append("settings: expected a table of [settings.<id>] tables")
                continue
            for sid, table in body.items():
                try:
                    s = _parse_setting(sid, table)
                    cfg.settings[s.id] = s
                except ConfigError as exc:
                    errors.append(str(exc))
            continue
        if section not in SCHEMA:
            errors.append(f"unknown section '[{section}]'" + _suggest(section, list(SCHEMA) + ["settings"]))
            continue
        if not isinstance(body, dict):
            errors.append(f"[{section}] must be a table")
            continue
        for key, raw in body.items():
            try:
                cfg.set(f"{section}.{key}", raw, origin=USER)
            except ConfigError as exc:
                errors.append(str(exc))
    if errors:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))
    return cfg


def load(path: str | Path) -> ExperimentConfig:
    """Read and validate a TOML file. A missing file raises ``OSError``."""
    path = Path(path)
    with path.open("rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return from_dict(doc, source=str(path))


def parse_override(text: str) -> tuple[str, Any]:
    """Split ``key=value``; the value is read as a TOML literal when it is one,
    else as a bare string. Commas make a list (``protocol=odtdma,lbt``)."""
    key, sep, raw = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"override must look like key=value, got {text!r}")
    raw = raw.strip()

    def literal(s):
        try:
            return tomllib.loads(f"v = {s}")["v"]
        except tomllib.TOMLDecodeError:
            return s

    if "," in raw and not raw.startswith("["):
        return key, [literal(p.strip()) for p in raw.split(",") if p.strip()]
    return key, literal(raw)


def apply_overrides(cfg: ExperimentConfig, overrides: List[str]) -> ExperimentConfig:
    errors = []
    for text in overrides:
        try:
            key, value = parse_override(text)
            cfg.set(key, value, origin=OVERRIDE)
        except ConfigError as exc:
            errors.append(str(exc))
    if errors:
        raise ConfigError("invalid override:\n  " + "\n  ".join(errors))
    return cfg
