import json
from dataclasses import dataclass, field, replace
from math import pi
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from twpa_flux_sim.constants import solver
from twpa_flux_sim.constants.presets import N_HARMONICS, N_MODULATION
from twpa_flux_sim.exceptions import InvalidParameters
from twpa_flux_sim.util.envvar import fd_jacobian_enabled


class SolverConfig(BaseModel):
    """Tolerances, iteration caps and the continuation schedule of the pump solver."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    newton_tol: float = Field(default=solver.NEWTON_TOL, gt=0)
    newton_max_iter: int = Field(default=solver.NEWTON_MAX_ITER, ge=1)
    homotopy_max_bisections: int = Field(default=solver.HOMOTOPY_MAX_BISECTIONS, ge=0)
    dc_flux_steps: int = Field(default=solver.DC_FLUX_STEPS, ge=1)
    fd_jacobian: bool = Field(default_factory=fd_jacobian_enabled)


@dataclass(frozen=True)
class HarmonicGrid:
    """Pump harmonics kept in the steady state and sidebands kept at small signal."""

    f_pump: float
    n_harmonics: int = N_HARMONICS
    n_modulation: int = N_MODULATION
    oversampling: int = solver.OVERSAMPLING

    def __post_init__(self):
        if not (np.isfinite(self.f_pump) and self.f_pump > 0):
            raise InvalidParameters(f"Pump frequency must be positive, got {self.f_pump}")
        if self.n_harmonics < 1:
            raise InvalidParameters("Need at least one pump harmonic")
        if self.n_modulation < 1:
            raise InvalidParameters("Need at least one modulation sideband")
        # Time samples must cover 4x the highest harmonic.
        if self.n_time < 4 * self.n_harmonics:
            raise InvalidParameters(
                f"oversampling={self.oversampling} aliases {self.n_harmonics} harmonics",
            )

    @property
    def omega(self) -> float:
        return 2 * pi * self.f_pump

    @property
    def n_time(self) -> int:
        """Time samples per pump period used by the frequency/time transforms."""
        return 2 * self.oversampling * self.n_harmonics

    @property
    def n_basis(self) -> int:
        """Real unknowns per node: DC plus real and imaginary part of each harmonic."""
        return 2 * self.n_harmonics + 1


@dataclass(frozen=True)
class Drive:
    """Pump current amplitude (A) into the input port plus DC current into the flux port."""

    pump_amplitude: float = 0.0
    dc_flux_current: float = 0.0
    pump_port: int = 1
    flux_port: int = 3

    def __post_init__(self):
        for name in ("pump_amplitude", "dc_flux_current"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise InvalidParameters(f"{name} must be finite and >= 0, got {value}")

    def interpolate(self, other: "Drive", fraction: float) -> "Drive":
        return replace(
            self,
            pump_amplitude=self.pump_amplitude
            + fraction * (other.pump_amplitude - self.pump_amplitude),
            dc_flux_current=self.dc_flux_current
            + fraction * (other.dc_flux_current - self.dc_flux_current),
        )


@dataclass
class HBSolution:
    """Pump steady state.

    `node_amplitudes[n, k]` is the complex amplitude of harmonic k of the flux (Wb) at
    node `nodes[n]`, with Phi_n(t) = Re sum_k X[n, k] exp(j k w_p t). Harmonic 0 is real.
    """

    nodes: tuple[str, ...]
    grid: HarmonicGrid
    drive: Drive
    node_amplitudes: np.ndarray
    residual_norm: float
    newton_iterations: int
    homotopy_steps: int
    converged: bool = True
    failure: str | None = None
    residual_history: list[float] = field(default_factory=list)

    def amplitude(self, node: str, harmonic: int) -> complex:
        return complex(self.node_amplitudes[self.nodes.index(node), harmonic])

    def stats(self) -> dict[str, Any]:
        return {
            "converged": self.converged,
            "residual_norm": self.residual_norm,
            "newton_iterations": self.newton_iterations,
            "homotopy_steps": self.homotopy_steps,
            "failure": self.failure,
        }

    def to_json(self) -> str:
        return json.dumps(
            {
                "nodes": list(self.nodes),
                "grid": {
                    "f_pump": self.grid.f_pump,
                    "n_harmonics": self.grid.n_harmonics,
                    "n_modulation": self.grid.n_modulation,
                    "oversampling": self.grid.oversampling,
                },
                "drive": {
                    "pump_amplitude": self.drive.pump_amplitude,
                    "dc_flux_current": self.drive.dc_flux_current,
                    "pump_port": self.drive.pump_port,
                    "flux_port": self.drive.flux_port,
                },
                "re": self.node_amplitudes.real.tolist(),
                "im": self.node_amplitudes.imag.tolist(),
                "residual_history": self.residual_history,
                **self.stats(),
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "HBSolution":
        data = json.loads(text)
        return cls(
            nodes=tuple(data["nodes"]),
            grid=HarmonicGrid(**data["grid"]),
            drive=Drive(**data["drive"]),
            node_amplitudes=np.array(data["re"]) + 1j * np.array(data["im"]),
            residual_norm=data["residual_norm"],
            newton_iterations=data["newton_iterations"],
            homotopy_steps=data["homotopy_steps"],
            converged=data["converged"],
            failure=data["failure"],
            residual_history=data["residual_history"],
        )
