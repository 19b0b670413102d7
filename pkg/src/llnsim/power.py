"""Per-node energy accounting on the tick clock."""

from dataclasses import dataclass
from enum import Enum

from llnsim.errors import ConfigError, InvariantViolation
from llnsim.simtime import TICKS_PER_SECOND, SimTime


class Domain(str, Enum):
    MCU = "mcu"
    RADIO = "radio"


class PowerState(str, Enum):
    CPU = "cpu"
    LPM = "lpm"
    TRANSMIT = "transmit"
    LISTEN = "listen"
    OFF = "off"


_DOMAIN_STATES = {
    Domain.MCU: {PowerState.CPU, PowerState.LPM},
    Domain.RADIO: {PowerState.TRANSMIT, PowerState.LISTEN, PowerState.OFF},
}


@dataclass(frozen=True)
class PowerModel:
    """Supply currents (mA) and voltage of a Sky-class mote."""

    i_tx: float = 19.5
    i_listen: float = 21.5
    i_cpu: float = 1.8
    i_lpm: float = 0.0545
    voltage: float = 3.0
    ticks_per_second: int = TICKS_PER_SECOND

    def validate(self) -> None:
        currents = (self.i_tx, self.i_listen, self.i_cpu, self.i_lpm)
        if any(c <= 0 for c in currents) or self.voltage <= 0:
            raise ConfigError("power: currents and voltage must be > 0")
        if not self.i_listen > self.i_cpu > self.i_lpm:
            raise ConfigError("power: expected i_listen > i_cpu > i_lpm")
        if self.ticks_per_second <= 0:
            raise ConfigError("power: ticks_per_second must be > 0")


@dataclass(frozen=True)
class CpuCostModel:
    """Synthetic CPU time charged per dispatched event, in seconds."""

    message: float = 0.001
    timer: float = 0.0002

    def validate(self) -> None:
        if self.message < 0 or self.timer < 0:
            raise ConfigError("cpu_cost: costs must be >= 0")


class PowerLedger:
    """Tick counters for the MCU and radio power states of one node.

    CPU, transmit and listen time is accumulated while the run progresses;
    ``finalize`` derives LPM and radio-off time as complements of the
    elapsed run length.
    """

    def __init__(self) -> None:
        self.cpu_ticks = 0
        self.lpm_ticks = 0
        self.tx_ticks = 0
        self.listen_ticks = 0
        self.off_ticks = 0
        self.elapsed_ticks = 0
        self.finalized = False

    def account(self, domain: Domain, state: PowerState, duration: SimTime) -> None:
        """Add ``duration`` ticks to one bucket."""
        if self.finalized:
            raise RuntimeError("ledger already finalized; cannot account past run end")
        if duration < 0:
            raise ValueError(f"negative duration {duration}")
        if state not in _DOMAIN_STATES[Domain(domain)]:
            raise ValueError(f"state {state} does not belong to domain {domain}")
        attr = {
            PowerState.CPU: "cpu_ticks",
            PowerState.LPM: "lpm_ticks",
            PowerState.TRANSMIT: "tx_ticks",
            PowerState.LISTEN: "listen_ticks",
            PowerState.OFF: "off_ticks",
        }[PowerState(state)]
        setattr(self, attr, getattr(self, attr) + duration)

    def add_cpu(self, ticks: SimTime) -> None:
        self.account(Domain.MCU, PowerState.CPU, ticks)

    def add_tx(self, ticks: SimTime) -> None:
        self.account(Domain.RADIO, PowerState.TRANSMIT, ticks)

    def add_listen(self, ticks: SimTime) -> None:
        self.account(Domain.RADIO, PowerState.LISTEN, ticks)

    def finalize(self, elapsed: SimTime) -> "PowerLedger":
        """Close the ledger at ``elapsed`` ticks, filling LPM and radio-off."""
        self.lpm_ticks = elapsed - self.cpu_ticks
        self.off_ticks = elapsed - self.tx_ticks - self.listen_ticks
        self.elapsed_ticks = elapsed
        self.finalized = True
        self.check_partition()
        return self

    def check_partition(self) -> None:
        mcu = self.cpu_ticks + self.lpm_ticks
        radio = self.tx_ticks + self.listen_ticks + self.off_ticks
        negative = min(self.cpu_ticks, self.lpm_ticks, self.tx_ticks,
                       self.listen_ticks, self.off_ticks)
        if mcu != self.elapsed_ticks or radio != self.elapsed_ticks or negative < 0:
            raise InvariantViolation(
                "ledger-partition",
                f"cpu+lpm={mcu}, tx+listen+off={radio}, elapsed={self.elapsed_ticks}",
            )


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy per bucket in millijoules."""

    cpu: float
    lpm: float
    tx: float
    listen: float

    @property
    def total(self) -> float:
        return self.cpu + self.lpm + self.tx + self.listen


def energy_mJ(ledger: PowerLedger, model: PowerModel = PowerModel()) -> EnergyBreakdown:
    """ticks * current (mA) * voltage / ticks_per_second, per bucket."""
    scale = model.voltage / model.ticks_per_second
    return EnergyBreakdown(
        cpu=ledger.cpu_ticks * model.i_cpu * scale,
        lpm=ledger.lpm_ticks * model.i_lpm * scale,
        tx=ledger.tx_ticks * model.i_tx * scale,
        listen=ledger.listen_ticks * model.i_listen * scale,
    )


def avg_power_mW(ledger: PowerLedger, model: PowerModel, elapsed_ticks: SimTime) -> float:
    if elapsed_ticks <= 0:
        raise ValueError(f"elapsed_ticks must be > 0, got {elapsed_ticks}")
    return energy_mJ(ledger, model).total / (elapsed_ticks / model.ticks_per_second)


def pdr(sent: int, received: int) -> float:
    """Delivered over sent; 1.0 for an idle source."""
    if received > sent:
        raise InvariantViolation("pdr-bounds", f"received {received} > sent {sent}")
    if sent == 0:
        return 1.0
    return received / sent
