"""Radio duty-cycling registry and factory."""

from typing import Dict, Type

from llnsim.errors import ConfigError
from llnsim.radio.always_on import AlwaysOnRdc
from llnsim.radio.base import BaseRdc, MacOutcome, RdcConfig
from llnsim.radio.lpl import LplRdc
from llnsim.radio.lpt import LptRdc
from llnsim.radio.medium import BROADCAST, Frame, FrameKind, FrameSizes, Medium, UdgmConfig

RDC_MODES: Dict[str, Type[BaseRdc]] = {
    "lpl": LplRdc,
    "lpt": LptRdc,
    "always-on": AlwaysOnRdc,
}


def get_rdc(cfg: RdcConfig, sizes: FrameSizes) -> BaseRdc:
    """Get duty-cycling layer instance by mode name."""
    rdc_class = RDC_MODES.get(cfg.mode)
    if not rdc_class:
        raise ConfigError(f"Unknown RDC mode: {cfg.mode} (choose from {', '.join(RDC_MODES)})")
    return rdc_class(cfg, sizes)


__all__ = [
    "BROADCAST",
    "RDC_MODES",
    "BaseRdc",
    "Frame",
    "FrameKind",
    "FrameSizes",
    "MacOutcome",
    "Medium",
    "RdcConfig",
    "UdgmConfig",
    "get_rdc",
]
