"""RPL control plane: messages, trickle, ETX, objective functions and the node agent."""

from llnsim.rpl.etx import EtxEstimator
from llnsim.rpl.messages import Dao, DataPacket, Dio, Dis, Na, NaStatus, Ns, Ocp, Ra, Rs
from llnsim.rpl.node import RplAgent, RplConfig
from llnsim.rpl.objective import (
    INFINITE_RANK,
    MIN_HOP_RANK_INCREASE,
    ROOT_RANK,
    ParentEntry,
    compute_rank,
    select_parent,
)
from llnsim.rpl.trickle import TrickleTimer

__all__ = [
    "INFINITE_RANK",
    "MIN_HOP_RANK_INCREASE",
    "ROOT_RANK",
    "Dao",
    "DataPacket",
    "Dio",
    "Dis",
    "EtxEstimator",
    "Na",
    "NaStatus",
    "Ns",
    "Ocp",
    "ParentEntry",
    "Ra",
    "Rs",
    "RplAgent",
    "RplConfig",
    "TrickleTimer",
    "compute_rank",
    "select_parent",
]
