from math import pi
from typing import Final

from scipy import constants as cst

FLUX_QUANTUM: Final[float] = cst.physical_constants["mag. flux quantum"][0]
REDUCED_FLUX_QUANTUM: Final[float] = FLUX_QUANTUM / (2 * pi)

# Name of the reference node in netlists.
GROUND: Final = "0"
