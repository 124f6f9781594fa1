from enum import Enum


class ComponentKind(str, Enum):
    CAPACITOR = "C"
    INDUCTOR = "L"
    MUTUAL_COUPLING = "K"
    JOSEPHSON_JUNCTION = "B"
    PORT = "P"


class CapacitancePlacement(str, Enum):
    """Where the junction capacitance C_J is placed in each cell."""

    # Across the SNAIL branch, i.e. between the two cell nodes.
    SNAIL = "snail"
    # C_J across the small junction plus an area-scaled C_J/r across each big junction.
    JUNCTIONS = "junctions"


class FluxChokePlacement(str, Enum):
    """Where the flux-line inductance L_g is placed."""

    # Between the flux port and the first flux-line node, and from the last flux-line
    # node to ground.
    TERMINATION = "termination"
    # Flux port attached directly; last flux-line node shorted to ground by L_f.
    NONE = "none"
