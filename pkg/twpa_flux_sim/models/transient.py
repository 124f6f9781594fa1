from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from twpa_flux_sim.constants.solver import MIN_STEPS_PER_PERIOD, RAMP_PERIODS
from twpa_flux_sim.exceptions import InvalidParameters

# Spectral extraction discards the first half of the record and needs this many periods
# of the lowest source frequency overall.
MIN_PERIODS = 200


@dataclass(frozen=True)
class Source:
    """Sinusoidal current amplitude * cos(2 pi f t + phase) injected at a port."""

    port: int
    amplitude: float
    frequency: float
    phase: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.frequency) and self.frequency > 0):
            raise InvalidParameters(f"Source frequency must be positive, got {self.frequency}")
        if not np.isfinite(self.amplitude):
            raise InvalidParameters("Source amplitude must be finite")


@dataclass(frozen=True)
class TransientConfig:
    t_stop: float
    dt: float
    sources: tuple[Source, ...] = ()
    dc_flux_current: float = 0.0
    flux_port: int = 3
    record_nodes: tuple[str, ...] = ()
    ramp_periods: int = RAMP_PERIODS

    def __post_init__(self):
        if not (self.dt > 0 and self.t_stop > self.dt):
            raise InvalidParameters(f"Need 0 < dt < t_stop, got dt={self.dt}, t_stop={self.t_stop}")
        if not self.sources:
            return
        f_max = max(s.frequency for s in self.sources)
        if self.dt >= 1 / (MIN_STEPS_PER_PERIOD * f_max):
            raise InvalidParameters(
                f"dt={self.dt:.3g} s resolves {f_max:.4g} Hz with fewer than"
                f" {MIN_STEPS_PER_PERIOD} steps per period",
            )
        periods = self.t_stop * self.base_frequency
        if periods < MIN_PERIODS * (1 - 1e-9):
            raise InvalidParameters(
                f"t_stop covers {periods:.1f} periods of {self.base_frequency:.4g} Hz,"
                f" need {MIN_PERIODS}",
            )

    @property
    def base_frequency(self) -> float:
        return min(s.frequency for s in self.sources)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_stop / self.dt))

    @property
    def ramp_time(self) -> float:
        if not self.sources:
            return 0.0
        return self.ramp_periods / self.base_frequency

    @classmethod
    def periodic(
        cls,
        sources: tuple[Source, ...],
        *,
        f_base: float,
        periods: int = MIN_PERIODS,
        steps_per_period: int = 200,
        **kwargs,
    ) -> "TransientConfig":
        """Fixed step dividing one period of `f_base` exactly, for clean spectra."""
        return cls(
            t_stop=periods / f_base,
            dt=1 / (f_base * steps_per_period),
            sources=sources,
            **kwargs,
        )


@dataclass
class TransientResult:
    """Node fluxes (Wb) at every fixed step plus cumulative energy bookkeeping (J)."""

    time: np.ndarray
    nodes: tuple[str, ...]
    flux: np.ndarray
    source_energy: np.ndarray
    stored_energy: np.ndarray
    port_energy: np.ndarray
    loss_energy: np.ndarray
    substeps: int = 0
    meta: dict[str, float] = field(default_factory=dict)

    def series(self, node: str) -> np.ndarray:
        return self.flux[self.nodes.index(node)]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"time_s": self.time})
        for node, flux in zip(self.nodes, self.flux, strict=True):
            frame[f"flux_{node}"] = flux
        return frame
