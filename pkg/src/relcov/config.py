"""Scenario configuration: YAML load/dump with field-path validation, and figure presets."""

from __future__ import annotations

import copy
import types
import typing
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .channel import ChannelParams
from .errors import ConfigError, RelcovError
from .evt import InterpSpec
from .scenario import Requirements, ResourceConfig, ServiceArea


@dataclass(frozen=True)
class SimulationSettings:
    grid_spacing: float = 1.0
    n_trials: int = 20_000
    n_deployments: int = 1
    seed: int = 0
    ap_locations: list | None = None  # explicit [[x, y], ...] instead of a BPP draw


@dataclass(frozen=True)
class EvtSettings:
    tail_fraction: float = 0.05
    domain: str = "db"
    estimator: str = "evt"
    layout: str = "full-grid"
    interpolator: str = "idw"
    idw_power: float = 2.0
    idw_k: int = 8
    gammas: list | None = None  # deadlines to map; defaults to requirements.gamma_latency
    alpha_stars: list | None = None  # coverage levels to report
    min_samples: int = 2000
    measurements: str | None = None  # CSV/JSON measurement file instead of simulation

    def interp_spec(self) -> InterpSpec:
        return InterpSpec(self.interpolator, self.idw_power, self.idw_k)


@dataclass(frozen=True)
class SweepSettings:
    bandwidths_hz: list = field(default_factory=lambda: [5e6, 10e6, 20e6, 50e6, 100e6])
    densities: list = field(default_factory=lambda: [5])
    alpha_stars: list = field(default_factory=lambda: [0.999])
    n_deployments: int = 20
    n_trials: int = 20_000
    grid_spacing: float = 4.0


@dataclass(frozen=True)
class DimensionSettings:
    run_sweep: bool = True
    search: bool = True
    eta_star: float | None = None  # defaults to requirements.eta_star
    alpha_star: float | None = None  # defaults to requirements.alpha_star
    n_aps: int | None = None  # defaults to resources.n_aps
    w_lo: float = 1e6
    w_hi: float = 1e9
    rel_tol: float = 0.02


@dataclass(frozen=True)
class AllocateSettings:
    epsilon: float | None = None  # defaults to 1 - alpha_star
    error_radius_m: float = 0.0
    reported_locations: list | None = None
    rate_levels: list | None = None
    outage_map: str | None = None  # existing outage-map JSON to check instead of simulating


@dataclass(frozen=True)
class Scenario:
    area: ServiceArea = field(default_factory=ServiceArea)
    requirements: Requirements = field(default_factory=Requirements)
    resources: ResourceConfig = field(default_factory=ResourceConfig)
    channel: ChannelParams = field(default_factory=ChannelParams)
    simulation: SimulationSettings = field(default_factory=SimulationSettings)
    evt: EvtSettings = field(default_factory=EvtSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    dimension: DimensionSettings = field(default_factory=DimensionSettings)
    allocate: AllocateSettings = field(default_factory=AllocateSettings)

    def to_dict(self) -> dict:
        return asdict(self)

    def dump(self, path=None) -> str:
        text = yaml.safe_dump(self.to_dict(), sort_keys=False)
        if path is not None:
            Path(path).write_text(text)
        return text


SECTIONS = {f.name: f.type for f in fields(Scenario)}
_HINTS = {}


def _hints(cls):
    if cls not in _HINTS:
        _HINTS[cls] = typing.get_type_hints(cls)
    return _HINTS[cls]


def _coerce(value, hint, path):
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(value, inner[0], path)
    if hint is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "on", "off", "yes", "no"):
            return value.lower() in ("true", "on", "yes")
        raise ConfigError(f"{path}: expected a boolean, got {value!r}")
    if hint is int:
        try:
            f = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: expected an integer, got {value!r}") from None
        if isinstance(value, bool) or f != int(f):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return int(f)
    if hint is float:
        if isinstance(value, bool):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: expected a number, got {value!r}") from None
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if hint is list or origin is list:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        return list(value)
    return value


def _build(cls, data, path):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping")
    hints = _hints(cls)
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}: unknown field")
    kwargs = {k: _coerce(v, hints[k], f"{path}.{k}") for k, v in data.items()}
    try:
        return cls(**kwargs)
    except RelcovError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def scenario_from_dict(data: dict | None) -> Scenario:
    data = {} if data is None else data
    if not isinstance(data, dict):
        raise ConfigError("scenario: expected a mapping at the top level")
    unknown = sorted(set(data) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"scenario.{unknown[0]}: unknown section")
    hints = _hints(Scenario)
    parts = {name: _build(hints[name], data.get(name), f"scenario.{name}") for name in SECTIONS}
    return Scenario(**parts)


def load_scenario(path) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {p}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{p}: invalid YAML ({exc})") from None
    if isinstance(data, dict) and "subcommand" in data and "config" in data:
        data = data["config"]  # a run manifest
    return scenario_from_dict(data)


def _set_path(data: dict, dotted: str, raw: str) -> None:
    keys = dotted.split(".")
    node = data
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            node[k] = {}
        node = node[k]
    node[keys[-1]] = yaml.safe_load(raw)


def apply_overrides(scn: Scenario, overrides) -> Scenario:
    """Apply ``section.field=value`` strings (values parsed as YAML)."""
    data = scn.to_dict()
    for item in overrides or ():
        key, sep, raw = item.partition("=")
        if not sep or "." not in key:
            raise ConfigError(f"override {item!r}: expected section.field=value")
        _set_path(data, key.strip(), raw)
    return scenario_from_dict(data)


# -- presets -----------------------------------------------------------------

# Link model used by the figure presets: blockage drawn once per deployment,
# log-normal shadowing redrawn per trial, no extra small-scale fading, and the
# strongest link serving.
FIGURE_CHANNEL = {"fading": "none", "large_scale_mode": "static-blockage", "association": "strongest"}

PRESETS = {
    "fig3": {
        "resources": {"n_aps": 20, "bandwidth_hz": 10e6},
        "channel": FIGURE_CHANNEL,
        "requirements": {"alpha_star": 0.99999, "eta_star": 0.99},
        "simulation": {"grid_spacing": 4.0, "n_trials": 100_000},
        "sweep": {"bandwidths_hz": [2e6, 5e6, 10e6, 20e6, 50e6, 100e6, 200e6],
                  "densities": [20], "alpha_stars": [0.9, 0.999, 0.99999],
                  "n_deployments": 10, "n_trials": 100_000, "grid_spacing": 4.0},
        "dimension": {"run_sweep": True, "search": True, "w_lo": 1e6, "w_hi": 1e9, "rel_tol": 0.02},
    },
    "fig4": {
        "resources": {"n_aps": 15},
        "channel": FIGURE_CHANNEL,
        "requirements": {"alpha_star": 0.99999, "eta_star": 0.99},
        "simulation": {"grid_spacing": 4.0, "n_trials": 100_000},
        "sweep": {"bandwidths_hz": [1e6, 2e6, 5e6, 10e6, 20e6, 50e6, 100e6, 200e6, 500e6],
                  "densities": [5, 10, 15, 20], "alpha_stars": [0.99999],
                  "n_deployments": 10, "n_trials": 100_000, "grid_spacing": 4.0},
        "dimension": {"run_sweep": True, "search": True, "w_lo": 1e6, "w_hi": 1e9, "rel_tol": 0.02},
    },
    "fig5": {
        "resources": {"n_aps": 5, "bandwidth_hz": 50e6},
        "channel": FIGURE_CHANNEL,
        "requirements": {"alpha_star": 0.999, "gamma_latency": 1e-3},
        "simulation": {"grid_spacing": 1.0, "n_trials": 100_000},
        "evt": {"alpha_stars": [0.999], "layout": "full-grid"},
    },
    "fig6": {
        "resources": {"n_aps": 5, "bandwidth_hz": 50e6},
        "channel": FIGURE_CHANNEL,
        "requirements": {"alpha_star": 0.99999, "gamma_latency": 1e-3},
        "simulation": {"grid_spacing": 4.0, "n_trials": 100_000},
        "evt": {"gammas": [1e-3, 1e-4], "alpha_stars": [0.999, 0.9999, 0.99999],
                "layout": "full-grid"},
    },
}


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def preset(name: str) -> Scenario:
    if name not in PRESETS:
        raise ConfigError(f"unknown figure preset {name!r}; choose from {sorted(PRESETS)}")
    return scenario_from_dict(_merge(Scenario().to_dict(), PRESETS[name]))


def with_preset(scn: Scenario, name: str) -> Scenario:
    return scenario_from_dict(_merge(scn.to_dict(), PRESETS[name])) if name in PRESETS else preset(name)


__all__ = [
    "AllocateSettings", "DimensionSettings", "EvtSettings", "PRESETS", "Scenario",
    "SimulationSettings", "SweepSettings", "apply_overrides", "load_scenario", "preset",
    "scenario_from_dict", "with_preset",
]
