"""Mobility model registry and factory."""

from typing import Any, Dict, Mapping, Optional, Type

from llnsim.errors import ConfigError
from llnsim.mobility.base import (
    AreaBounds,
    BaseMobilityModel,
    MobilityTrace,
    Waypoint,
    position_at,
    static_trace,
    velocity_at,
)
from llnsim.mobility.bsa import BoundlessArea
from llnsim.mobility.csm import CitySection
from llnsim.mobility.gm import GaussMarkov
from llnsim.mobility.prw import ProbabilisticRandomWalk
from llnsim.mobility.rdm import RandomDirection
from llnsim.mobility.rw import RandomWalk
from llnsim.mobility.rwp import RandomWaypoint

MODELS: Dict[str, Type[BaseMobilityModel]] = {
    "rwp": RandomWaypoint,
    "rw": RandomWalk,
    "rdm": RandomDirection,
    "gm": GaussMarkov,
    "prw": ProbabilisticRandomWalk,
    "bsa": BoundlessArea,
    "csm": CitySection,
}


def get_model(name: str, params: Optional[Mapping[str, Any]] = None) -> BaseMobilityModel:
    """Build a validated model instance by registry name."""
    model_class = MODELS.get(name)
    if not model_class:
        raise ConfigError(f"Unknown mobility model: {name} (choose from {', '.join(MODELS)})")
    try:
        model = model_class(**dict(params or {}))
    except TypeError as exc:
        raise ConfigError(f"mobility.{name}: {exc}") from exc
    model.validate()
    return model


__all__ = [
    "MODELS",
    "AreaBounds",
    "BaseMobilityModel",
    "MobilityTrace",
    "Waypoint",
    "get_model",
    "position_at",
    "static_trace",
    "velocity_at",
]
