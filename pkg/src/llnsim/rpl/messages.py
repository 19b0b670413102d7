"""Control messages and the application data packet."""

from dataclasses import dataclass
from enum import Enum
from typing import Tuple

# Symbolic global prefix handed out in router advertisements.
PREFIX = "fd00::/64"


class Ocp(str, Enum):
    """Objective code points."""

    OF0 = "of0"
    MRHOF = "mrhof"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Dio:
    instance: int
    dodag_id: int
    version: int
    rank: int
    ocp: Ocp


@dataclass(frozen=True)
class Dao:
    instance: int
    target: int
    dao_seq: int
    prefix: str = PREFIX


@dataclass(frozen=True)
class Dis:
    pass


@dataclass(frozen=True)
class Rs:
    pass


@dataclass(frozen=True)
class Ra:
    """Router advertisement with prefix, context and border-router options."""

    pio: str = PREFIX
    co: Tuple[int, str] = (0, PREFIX)
    abro: int = 0


@dataclass(frozen=True)
class Ns:
    """Neighbour solicitation carrying an address registration option."""

    aro: Tuple[int, str]


class NaStatus(str, Enum):
    OK = "ok"
    FULL = "full"


@dataclass(frozen=True)
class Na:
    status: NaStatus


@dataclass
class DataPacket:
    source: int
    seq: int
    created: int
    hops: int = 0


def global_address(prefix: str, node_id: int) -> str:
    """Address derived from an advertised prefix and the node id."""
    return f"{prefix.split('/')[0]}{node_id:x}"
