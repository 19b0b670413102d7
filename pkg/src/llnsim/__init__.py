"""llnsim - discrete-event simulator for RPL networks under mobility."""

__version__ = "0.1.0"
DESCRIPTION = "Power consumption of RPL low-power lossy networks under node mobility."
ENV_THREADS = "LLNSIM_THREADS"
