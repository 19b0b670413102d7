"""Rank computation and preferred-parent selection."""

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Callable, Collection, Dict, List, Optional

from llnsim.rpl.messages import Ocp
from llnsim.simtime import SimTime

ROOT_RANK = 256
MIN_HOP_RANK_INCREASE = 256
INFINITE_RANK = 0xFFFF
MAX_RANK = INFINITE_RANK - 1


@dataclass
class ParentEntry:
    """A candidate parent as last advertised in a DIO."""

    node_id: int
    rank: int
    dodag_id: int
    version: int
    last_heard: SimTime


def compute_rank(ocp: Ocp, parent_rank: int, link_etx: float = 1.0) -> int:
    """Rank through a parent; ``INFINITE_RANK`` when the result overflows."""
    if parent_rank < ROOT_RANK:
        raise ValueError(f"parent rank {parent_rank} below ROOT_RANK")
    if link_etx < 1:
        raise ValueError(f"link ETX {link_etx} below 1")
    if parent_rank >= INFINITE_RANK:
        return INFINITE_RANK
    if Ocp(ocp) is Ocp.OF0:
        increase = MIN_HOP_RANK_INCREASE
    else:
        scaled = Decimal(repr(float(link_etx))) * MIN_HOP_RANK_INCREASE
        increase = int(scaled.quantize(Decimal(1), rounding=ROUND_HALF_UP))
    rank = parent_rank + max(increase, 1)
    return rank if rank <= MAX_RANK else INFINITE_RANK


def evict_stale(
    parents: Dict[int, ParentEntry],
    now: SimTime,
    max_age: SimTime,
    keep: Collection[int] = (),
) -> List[int]:
    """Drop entries not refreshed within ``max_age``, except ids in ``keep``."""
    stale = [pid for pid, entry in parents.items() if pid not in keep and now - entry.last_heard > max_age]
    for pid in stale:
        del parents[pid]
    return stale


def select_parent(
    parents: Dict[int, ParentEntry],
    ocp: Ocp,
    etx: Callable[[int], float],
    below: int = INFINITE_RANK,
    exclude: Collection[int] = (),
) -> Optional[ParentEntry]:
    """Candidate giving the smallest rank.

    Only candidates advertising a rank strictly below ``below`` and not in
    ``exclude`` qualify, and the resulting rank must be finite. Ties go to
    the lower DODAG id, then the lower advertised rank, then the lower node
    id.
    """
    best = None
    best_key = None
    for pid in sorted(parents):
        entry = parents[pid]
        if entry.rank >= min(below, INFINITE_RANK) or pid in exclude:
            continue
        rank = compute_rank(ocp, entry.rank, etx(pid))
        if rank >= INFINITE_RANK:
            continue
        key = (rank, entry.dodag_id, entry.rank, pid)
        if best_key is None or key < best_key:
            best, best_key = entry, key
    return best
