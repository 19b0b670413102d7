"""Scenario configuration: nested dataclasses loaded from JSON or YAML.

JSON is read through the YAML loader, so one code path serves both formats.
Every section has defaults; unknown keys are rejected with their dotted path.
"""

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Type, TypeVar, Union, get_args, get_origin, get_type_hints

import yaml

from llnsim.errors import ConfigError
from llnsim.mobility import MODELS, BaseMobilityModel, get_model
from llnsim.mobility.base import AreaBounds
from llnsim.power import CpuCostModel, PowerModel
from llnsim.radio import RDC_MODES
from llnsim.radio.base import RdcConfig
from llnsim.radio.mac import MacConfig
from llnsim.radio.medium import FrameSizes, UdgmConfig
from llnsim.rpl.node import RplConfig

STATIC = "static"
APPLIES_TO = ("all", "senders-only")
DEFAULT_DENSITIES = (20, 30, 40, 50)

T = TypeVar("T")


@dataclass(frozen=True)
class MobilitySettings:
    model: str = STATIC
    applies_to: str = "all"
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def is_static(self) -> bool:
        return self.model == STATIC

    def build(self) -> Optional[BaseMobilityModel]:
        """Validated model instance, or None for a static arm."""
        if self.is_static:
            return None
        return get_model(self.model, self.params)

    def validate(self) -> None:
        if self.model != STATIC and self.model not in MODELS:
            raise ConfigError(
                f"mobility.model: unknown model {self.model!r} (choose from static, {', '.join(MODELS)})"
            )
        if self.applies_to not in APPLIES_TO:
            raise ConfigError(f"mobility.applies_to must be one of {APPLIES_TO}, got {self.applies_to!r}")
        if self.is_static and self.params:
            raise ConfigError("mobility.params: a static arm takes no parameters")
        self.build()


@dataclass(frozen=True)
class RadioSettings:
    udgm: UdgmConfig = field(default_factory=UdgmConfig)
    rdc: RdcConfig = field(default_factory=RdcConfig)
    frame_sizes: FrameSizes = field(default_factory=FrameSizes)
    mac: MacConfig = field(default_factory=MacConfig)

    def validate(self) -> None:
        if self.rdc.mode not in RDC_MODES:
            raise ConfigError(f"radio.rdc.mode: unknown mode {self.rdc.mode!r} (choose from {', '.join(RDC_MODES)})")
        self.udgm.validate()
        self.rdc.validate()
        self.frame_sizes.validate()
        self.mac.validate()


@dataclass(frozen=True)
class LogFlags:
    events: bool = False
    radio: bool = False
    control: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    """One scenario: topology, traffic, stack parameters and repetitions."""

    n_nodes: int = 20
    n_sinks: int = 1
    seed: int = 0
    duration: float = 3600.0
    repetitions: int = 20
    data_period: float = 60.0
    data_start: float = 60.0
    densities: Optional[List[int]] = None
    positions: Optional[List[Tuple[float, float]]] = None
    area: AreaBounds = field(default_factory=AreaBounds)
    mobility: MobilitySettings = field(default_factory=MobilitySettings)
    radio: RadioSettings = field(default_factory=RadioSettings)
    rpl: RplConfig = field(default_factory=RplConfig)
    power: PowerModel = field(default_factory=PowerModel)
    cpu_cost: CpuCostModel = field(default_factory=CpuCostModel)
    logs: LogFlags = field(default_factory=LogFlags)

    @property
    def sink_ids(self) -> List[int]:
        return list(range(self.n_sinks))

    @property
    def sweep_densities(self) -> List[int]:
        return list(self.densities) if self.densities else list(DEFAULT_DENSITIES)

    def validate(self) -> None:
        if self.n_nodes < 2:
            raise ConfigError(f"n_nodes must be >= 2, got {self.n_nodes}")
        if not 1 <= self.n_sinks < self.n_nodes:
            raise ConfigError(f"n_sinks must satisfy 1 <= n_sinks < n_nodes, got {self.n_sinks} of {self.n_nodes}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.duration <= 0:
            raise ConfigError(f"duration must be > 0, got {self.duration}")
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.data_period <= 0:
            raise ConfigError(f"data_period must be > 0, got {self.data_period}")
        if self.data_start < 0:
            raise ConfigError(f"data_start must be >= 0, got {self.data_start}")
        if self.densities is not None:
            if not self.densities:
                raise ConfigError("densities must not be empty")
            for d in self.densities:
                if d <= self.n_sinks:
                    raise ConfigError(f"densities: {d} nodes leaves no sender for {self.n_sinks} sink(s)")
        if self.positions is not None:
            if len(self.positions) != self.n_nodes:
                raise ConfigError(f"positions: expected {self.n_nodes} entries, got {len(self.positions)}")
            for i, pos in enumerate(self.positions):
                if len(pos) != 2 or not self.area.contains(tuple(pos), eps=0.0):
                    raise ConfigError(f"positions[{i}] = {pos} is not a point inside the area")
        self.mobility.validate()
        self.radio.validate()
        self.rpl.validate()
        self.power.validate()
        self.cpu_cost.validate()


def _check_scalar(hint: Any, value: Any, path: str) -> Any:
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    return value


def _convert(hint: Any, value: Any, path: str) -> Any:
    if dataclasses.is_dataclass(hint):
        return build_section(hint, value, path)
    origin = get_origin(hint)
    if origin is Union:
        if value is None:
            return None
        inner = [a for a in get_args(hint) if a is not type(None)]
        return _convert(inner[0], value, path)
    if origin in (list, List):
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        (item,) = get_args(hint) or (Any,)
        return [_convert(item, v, f"{path}[{i}]") for i, v in enumerate(value)]
    if origin in (tuple, Tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a pair, got {value!r}")
        args = get_args(hint)
        if len(args) != len(value):
            raise ConfigError(f"{path}: expected {len(args)} values, got {len(value)}")
        return tuple(_convert(a, v, f"{path}[{i}]") for i, (a, v) in enumerate(zip(args, value)))
    if origin in (dict, Dict):
        if not isinstance(value, Mapping):
            raise ConfigError(f"{path}: expected a mapping, got {value!r}")
        return dict(value)
    return _check_scalar(hint, value, path)


def build_section(cls: Type[T], data: Any, path: str = "") -> T:
    """Instantiate dataclass ``cls`` from a mapping, recursing into sections."""
    if data is None:
        data = {}
    if not isinstance(data, Mapping):
        raise ConfigError(f"{path or 'config'}: expected a mapping, got {type(data).__name__}")
    hints = get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    for key in data:
        if key not in names:
            where = f"{path}.{key}" if path else str(key)
            raise ConfigError(f"unknown config key: {where}")
    kwargs = {}
    for key, value in data.items():
        where = f"{path}.{key}" if path else key
        kwargs[key] = _convert(hints[key], value, where)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


def config_from_dict(data: Mapping[str, Any]) -> ScenarioConfig:
    """Build and validate a config; a manifest's ``config`` member is accepted."""
    if isinstance(data, Mapping) and "manifest_version" in data:
        data = data.get("config") or {}
    cfg = build_section(ScenarioConfig, data)
    cfg.validate()
    return cfg


def load_config(path: Path) -> ScenarioConfig:
    """Read, default and validate a JSON or YAML scenario file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid JSON/YAML: {exc}") from exc
    return config_from_dict(data or {})


def config_to_dict(cfg: ScenarioConfig) -> Dict[str, Any]:
    """Fully-defaulted, JSON-ready mapping; ``config_from_dict`` inverts it."""
    data = dataclasses.asdict(cfg)
    if data["positions"] is not None:
        data["positions"] = [list(p) for p in data["positions"]]
    return data


def with_overrides(cfg: ScenarioConfig, **overrides: Any) -> ScenarioConfig:
    """Copy of ``cfg`` with top-level fields replaced (``None`` values skipped)."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    if not changes:
        return cfg
    updated = dataclasses.replace(cfg, **changes)
    updated.validate()
    return updated


def with_logs(cfg: ScenarioConfig, events: bool = False, radio: bool = False, control: bool = False) -> ScenarioConfig:
    """Turn on dump flags (flags already set stay on)."""
    logs = LogFlags(
        events=cfg.logs.events or events,
        radio=cfg.logs.radio or radio,
        control=cfg.logs.control or control,
    )
    return dataclasses.replace(cfg, logs=logs)


def static_arm(cfg: ScenarioConfig) -> ScenarioConfig:
    """Same scenario with mobility switched off."""
    return dataclasses.replace(cfg, mobility=MobilitySettings(applies_to=cfg.mobility.applies_to))
