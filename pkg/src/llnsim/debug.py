"""Logging for llnsim runs.

Everything goes through the ``llnsim`` logger. Plain runs print bare
messages at INFO and above; ``--verbose`` adds per-repetition diagnostics
with a timestamp and the process that ran the repetition.
"""

import logging
from typing import Any, Mapping

LOGGER_NAME = "llnsim"


def setup_logging(verbose: bool = False) -> logging.Logger:
    """Attach a stderr handler to the ``llnsim`` logger, replacing earlier ones."""
    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    logger.handlers.clear()

    handler = logging.StreamHandler()
    if verbose:
        handler.setFormatter(
            logging.Formatter("[%(asctime)s] %(levelname)s %(processName)s: %(message)s", datefmt="%H:%M:%S")
        )
    else:
        handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)
    return logger


def log_repetition(rep: int, n_nodes: int, stats: Mapping[str, Any]) -> None:
    """DEBUG line for a finished repetition, e.g. ``repetition 3 (20 nodes) events=9120 wall_s=0.41``."""
    logger = logging.getLogger(LOGGER_NAME)
    if not logger.isEnabledFor(logging.DEBUG):
        return
    fields = " ".join(f"{key}={value}" for key, value in stats.items())
    logger.debug(f"repetition {rep} ({n_nodes} nodes) {fields}")
