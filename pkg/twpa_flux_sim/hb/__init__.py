from twpa_flux_sim.hb.linear import linear_ac, port_position
from twpa_flux_sim.hb.pump import HarmonicBalance, homotopy_sweep, junction_phases, solve_pump

__all__ = [
    "HarmonicBalance",
    "homotopy_sweep",
    "junction_phases",
    "linear_ac",
    "port_position",
    "solve_pump",
]
