"""Generate the netlist of the flux-tunable SNAIL amplifier.

Each cell joins signal node `s{i}` to `s{i+1}` with a SNAIL rendered as junctions: the
small junction directly between the cell nodes, and the three big junctions in series
with the small inductance `L{i}add` as the other arm of the loop. `C{i}g` (lossy) takes
`s{i+1}` to ground.

A flux line of `L{i}f` segments runs alongside, with `C{i}f` to ground at every node.
Each `L{i}add` is coupled to the flux-line segment next to it; with alternating polarity
the coupling sign flips from one cell to the next so adjacent loops see opposite flux.
DC current enters the flux line at port 3 through the choke `Lg_in` and leaves to
ground through `Lg_out`.

Ports: 1 at the input end, 2 at the output end, 3 on the flux line.
"""

from math import sqrt

from loguru import logger

from twpa_flux_sim._types import CapacitancePlacement, ComponentKind, FluxChokePlacement
from twpa_flux_sim.constants.physics import FLUX_QUANTUM, GROUND
from twpa_flux_sim.constants.presets import REFERENCE_DEVICE, TAN_DELTA, Z_PORT
from twpa_flux_sim.exceptions import InvalidDesign, ZeroCoupling
from twpa_flux_sim.models.circuit import Component, Netlist, TwpaDesign
from twpa_flux_sim.models.snail import SnailParams

INPUT_PORT = 1
OUTPUT_PORT = 2
FLUX_PORT = 3


def reference_design(**overrides) -> TwpaDesign:
    """The 700-cell device of the gain measurements, with measured loss tangent."""
    params = {
        "snail": SnailParams(i_c=REFERENCE_DEVICE["i_c"], r=REFERENCE_DEVICE["r"]),
        "n_cells": int(REFERENCE_DEVICE["n_cells"]),
        "c_j": REFERENCE_DEVICE["c_j"],
        "c_g": REFERENCE_DEVICE["c_g"],
        "c_f": REFERENCE_DEVICE["c_f"],
        "l_add": REFERENCE_DEVICE["l_add"],
        "l_f": REFERENCE_DEVICE["l_f"],
        "l_g": REFERENCE_DEVICE["l_g"],
        "tan_delta": TAN_DELTA,
        "z_port": Z_PORT,
        **overrides,
    }
    return TwpaDesign(**params)


PRESET_DESIGNS = {"table1": reference_design}


def preset_design(preset: str | None, **overrides) -> TwpaDesign:
    """Design of a named preset, `table1` when none is given."""
    name = preset or "table1"
    try:
        factory = PRESET_DESIGNS[name]
    except KeyError:
        raise InvalidDesign(f"Unknown preset {name!r}; known: {sorted(PRESET_DESIGNS)}") from None
    return factory(**overrides)


def snail_from_netlist(netlist: Netlist) -> SnailParams:
    """SNAIL parameters read back from a netlist's junctions.

    The smallest critical current is the small junction, the largest the big ones; every
    SNAIL in the array is assumed identical.
    """
    currents = [j.value for j in netlist.by_kind(ComponentKind.JOSEPHSON_JUNCTION)]
    if not currents:
        raise InvalidDesign("Netlist has no Josephson junctions")
    small, big = min(currents), max(currents)
    if small == big:
        raise InvalidDesign("Netlist junctions are all equal; no SNAIL to read")
    n_small = sum(1 for c in currents if c == small)
    n_big = sum(1 for c in currents if c == big)
    if n_big % n_small:
        raise InvalidDesign(f"{n_big} big junctions do not split evenly over {n_small} loops")
    return SnailParams(i_c=big, r=small / big, n_big=n_big // n_small)


def build_twpa(design: TwpaDesign) -> Netlist:
    design.check()

    components: list[Component] = []
    n = design.n_cells
    i_c = design.snail.i_c
    choked = design.lg_placement is FluxChokePlacement.TERMINATION

    def add(kind: ComponentKind, name: str, n1: str, n2: str, value: float, **kw):
        components.append(Component(kind, name, (n1, n2), value, **kw))

    def flux_node(i: int) -> str:
        # Without chokes, the far end of the flux line is grounded directly.
        if not choked and i == n:
            return GROUND
        return f"f{i}"

    add(ComponentKind.PORT, "P1", "s0", GROUND, design.z_port, port_number=INPUT_PORT)
    if choked:
        add(ComponentKind.PORT, "P3", "fp", GROUND, design.z_port, port_number=FLUX_PORT)
        add(ComponentKind.INDUCTOR, "Lg_in", "fp", flux_node(0), design.l_g)
    else:
        add(
            ComponentKind.PORT,
            "P3",
            flux_node(0),
            GROUND,
            design.z_port,
            port_number=FLUX_PORT,
        )

    for i in range(n):
        left, right = f"s{i}", f"s{i + 1}"
        arm = [left, f"c{i}a", f"c{i}b", f"c{i}c"]

        add(ComponentKind.JOSEPHSON_JUNCTION, f"B{i}s", left, right, design.snail.r * i_c)
        for j, (n1, n2) in enumerate(zip(arm[:-1], arm[1:], strict=True)):
            add(ComponentKind.JOSEPHSON_JUNCTION, f"B{i}{'abc'[j]}", n1, n2, i_c)
        add(ComponentKind.INDUCTOR, f"L{i}add", arm[-1], right, design.l_add)

        add(ComponentKind.CAPACITOR, f"C{i}j", left, right, design.c_j)
        if design.cj_placement is CapacitancePlacement.JUNCTIONS:
            for j, (n1, n2) in enumerate(zip(arm[:-1], arm[1:], strict=True)):
                add(
                    ComponentKind.CAPACITOR,
                    f"C{i}j{'abc'[j]}",
                    n1,
                    n2,
                    design.c_j / design.snail.r,
                )
        add(
            ComponentKind.CAPACITOR,
            f"C{i}g",
            right,
            GROUND,
            design.c_g,
            loss_tangent=design.tan_delta,
        )

        add(ComponentKind.INDUCTOR, f"L{i}f", flux_node(i), flux_node(i + 1), design.l_f)
        if flux_node(i + 1) != GROUND:
            add(ComponentKind.CAPACITOR, f"C{i}f", flux_node(i + 1), GROUND, design.c_f)

        sign = -1 if design.alternate_polarity and i % 2 else 1
        add(
            ComponentKind.MUTUAL_COUPLING,
            f"K{i}",
            f"L{i}add",
            f"L{i}f",
            sign * design.coupling_k,
        )

    add(ComponentKind.PORT, "P2", f"s{n}", GROUND, design.z_port, port_number=OUTPUT_PORT)
    if choked:
        add(ComponentKind.INDUCTOR, "Lg_out", flux_node(n), GROUND, design.l_g)

    netlist = Netlist.from_components(components)
    logger.debug(
        f"Built {n}-cell amplifier: {len(components)} components, {netlist.n_nodes} nodes.",
    )
    return netlist


def mutual_inductance(design: TwpaDesign) -> float:
    """M = k sqrt(L_add L_f) between a SNAIL loop and its flux-line segment."""
    return design.coupling_k * sqrt(design.l_add * design.l_f)


def flux_current_for(design: TwpaDesign, flux_ratio: float) -> float:
    """DC flux-line current (A) that threads `flux_ratio` flux quanta per loop."""
    m = mutual_inductance(design)
    if m == 0:
        raise ZeroCoupling("Flux line is not coupled to the SNAILs (coupling_k = 0)")
    return flux_ratio * FLUX_QUANTUM / m


def flux_ratio_for(design: TwpaDesign, i_dc: float) -> float:
    """Inverse of `flux_current_for`."""
    m = mutual_inductance(design)
    if m == 0:
        raise ZeroCoupling("Flux line is not coupled to the SNAILs (coupling_k = 0)")
    return i_dc * m / FLUX_QUANTUM


def flux_current_from_netlist(netlist: Netlist, flux_ratio: float) -> float:
    """Like `flux_current_for`, reading M from the netlist's first mutual coupling.

    Used when the device comes from a netlist file rather than a `TwpaDesign`.
    """
    couplings = netlist.by_kind(ComponentKind.MUTUAL_COUPLING)
    if not couplings:
        raise ZeroCoupling("Netlist has no mutual coupling to carry the flux bias")
    k = couplings[0]
    l1, l2 = (netlist.component(name).value for name in k.nodes)
    m = abs(k.value) * sqrt(l1 * l2)
    if m == 0:
        raise ZeroCoupling(f"{k.name} has zero coupling coefficient")
    return flux_ratio * FLUX_QUANTUM / m
