from typing import Final

from twpa_flux_sim.constants.version import VERSION

__version__: Final[str] = VERSION
