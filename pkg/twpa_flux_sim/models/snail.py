from dataclasses import dataclass
from math import pi

from twpa_flux_sim.constants.physics import REDUCED_FLUX_QUANTUM
from twpa_flux_sim.exceptions import InvalidParameters


@dataclass(frozen=True)
class SnailParams:
    """Junction parameters of one SNAIL.

    `i_c` is the critical current of the big junctions; the small junction carries
    `r * i_c`. `n_big` big junctions sit in series in the other arm of the loop.
    """

    i_c: float
    r: float
    n_big: int = 3

    def __post_init__(self):
        if not self.i_c > 0:
            raise InvalidParameters(f"Critical current must be positive, got {self.i_c}")
        if not 0 < self.r < 1:
            raise InvalidParameters(f"Junction ratio must be in (0, 1), got {self.r}")
        if self.n_big < 1:
            raise InvalidParameters(f"Need at least one big junction, got {self.n_big}")


@dataclass(frozen=True)
class FluxPoint:
    """External flux threading a SNAIL loop.

    Stored as the normalized ratio Phi_ext/Phi_0; the reduced flux in radians is derived.
    """

    flux_ratio: float

    @classmethod
    def from_phi(cls, phi_ext: float) -> "FluxPoint":
        return cls(phi_ext / (2 * pi))

    @property
    def phi_ext(self) -> float:
        return 2 * pi * self.flux_ratio


@dataclass(frozen=True)
class SnailExpansion:
    flux_ratio: float
    phi_star: float
    alpha_tilde: float
    beta: float
    gamma: float
    l_eff: float


def junction_inductance(i_c: float) -> float:
    """Linear inductance Phi_0 / (2 pi I_c) of an unbiased junction."""
    return REDUCED_FLUX_QUANTUM / i_c
