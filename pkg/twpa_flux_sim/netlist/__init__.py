from twpa_flux_sim.netlist.build import (
    build_twpa,
    flux_current_for,
    flux_current_from_netlist,
    flux_ratio_for,
    preset_design,
    reference_design,
    snail_from_netlist,
)
from twpa_flux_sim.netlist.emit import emit_netlist, save_netlist
from twpa_flux_sim.netlist.parse import load_netlist, parse_netlist

__all__ = [
    "build_twpa",
    "emit_netlist",
    "flux_current_for",
    "flux_current_from_netlist",
    "flux_ratio_for",
    "load_netlist",
    "parse_netlist",
    "preset_design",
    "reference_design",
    "save_netlist",
    "snail_from_netlist",
]
