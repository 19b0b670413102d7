"""Per-neighbour ETX estimation."""

from typing import Dict, Optional


class EtxEstimator:
    """EWMA of transmissions per delivered unicast.

    A neighbour's estimate starts at ``initial`` on its first unicast result.
    Failed unicasts count as ``noack_penalty`` transmissions.
    """

    def __init__(self, alpha: float = 0.9, initial: float = 1.0, noack_penalty: float = 10.0):
        self.alpha = alpha
        self.initial = initial
        self.noack_penalty = noack_penalty
        self.values: Dict[int, float] = {}

    def get(self, neighbor: int) -> float:
        return self.values.get(neighbor, self.initial)

    def update(self, neighbor: int, attempts: int, success: bool) -> float:
        sample = float(attempts) if success else self.noack_penalty
        sample = max(sample, 1.0)
        current = self.values.get(neighbor, self.initial)
        value = self.alpha * current + (1 - self.alpha) * sample
        self.values[neighbor] = max(value, 1.0)
        return self.values[neighbor]

    def mean(self) -> Optional[float]:
        if not self.values:
            return None
        return sum(self.values[n] for n in sorted(self.values)) / len(self.values)
