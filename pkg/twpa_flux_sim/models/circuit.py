"""The circuit data model: components, netlists and the amplifier design they come from.

A `Netlist` is immutable once built; `Netlist.from_components` is the only way to get a
validated one and it checks every structural invariant the solvers rely on.
"""

from dataclasses import dataclass, field
from math import sqrt

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from twpa_flux_sim._types import CapacitancePlacement, ComponentKind, FluxChokePlacement
from twpa_flux_sim.constants.physics import FLUX_QUANTUM, GROUND
from twpa_flux_sim.constants.presets import HALF_QUANTUM_I_DC
from twpa_flux_sim.exceptions import InvalidDesign, InvalidParameters, NetlistSemanticError
from twpa_flux_sim.models.snail import SnailParams


@dataclass(frozen=True)
class Component:
    """One circuit element.

    `value` is the element's primary parameter: capacitance (F), inductance (H), junction
    critical current (A), port resistance (Ohm) or, for mutual couplings, the coupling
    coefficient k. A mutual coupling's `nodes` are the names of the two inductors it
    couples.
    """

    kind: ComponentKind
    name: str
    nodes: tuple[str, str]
    value: float
    loss_tangent: float = 0.0
    port_number: int | None = None

    def __post_init__(self):
        if not self.name:
            raise InvalidParameters("Component name must not be empty")
        if len(self.nodes) != 2 or not all(self.nodes):  # noqa: PLR2004
            raise InvalidParameters(f"{self.name}: needs two non-empty node names")
        if not np.isfinite(self.value):
            raise InvalidParameters(f"{self.name}: value must be finite")

        if self.kind is ComponentKind.MUTUAL_COUPLING:
            if abs(self.value) > 1:
                raise InvalidParameters(
                    f"{self.name}: coupling coefficient |k| must be <= 1, got {self.value}",
                )
        elif self.value <= 0:
            raise InvalidParameters(f"{self.name}: value must be positive, got {self.value}")

        if self.loss_tangent and self.kind is not ComponentKind.CAPACITOR:
            raise InvalidParameters(f"{self.name}: only capacitors carry a loss tangent")
        if self.loss_tangent < 0:
            raise InvalidParameters(f"{self.name}: loss tangent must be >= 0")

        if self.kind is ComponentKind.PORT:
            if self.port_number is None or self.port_number < 1:
                raise InvalidParameters(f"{self.name}: ports need a number >= 1")
        elif self.port_number is not None:
            raise InvalidParameters(f"{self.name}: only ports carry a port number")

    @property
    def is_two_terminal(self) -> bool:
        return self.kind is not ComponentKind.MUTUAL_COUPLING


@dataclass(frozen=True)
class Netlist:
    components: tuple[Component, ...]
    # Ground is not in the index; every other node gets a dense integer in order of first
    # appearance.
    node_index: dict[str, int] = field(init=False, compare=False, repr=False)
    ports: tuple[Component, ...] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        node_index: dict[str, int] = {}
        for component in self.components:
            if not component.is_two_terminal:
                continue
            for node in component.nodes:
                if node != GROUND and node not in node_index:
                    node_index[node] = len(node_index)
        ports = sorted(
            (c for c in self.components if c.kind is ComponentKind.PORT),
            key=lambda c: c.port_number or 0,
        )
        object.__setattr__(self, "node_index", node_index)
        object.__setattr__(self, "ports", tuple(ports))

    @classmethod
    def from_components(
        cls,
        components: list[Component] | tuple[Component, ...],
        *,
        lines: dict[str, int] | None = None,
    ) -> "Netlist":
        """Build a netlist and check its structural invariants.

        `lines` optionally maps component names to source line numbers for diagnostics.
        """
        netlist = cls(tuple(components))
        _check_netlist(netlist, lines or {})
        return netlist

    @property
    def n_nodes(self) -> int:
        return len(self.node_index)

    def by_kind(self, kind: ComponentKind) -> list[Component]:
        return [c for c in self.components if c.kind is kind]

    def component(self, name: str) -> Component:
        for c in self.components:
            if c.name == name:
                return c
        raise KeyError(name)

    def index(self, node: str) -> int:
        """Dense index of `node`, -1 for ground."""
        return -1 if node == GROUND else self.node_index[node]

    def port(self, number: int) -> Component:
        for p in self.ports:
            if p.port_number == number:
                return p
        raise KeyError(f"No port {number}")


@dataclass(frozen=True)
class TwpaDesign:
    """Parameters of the N-cell flux-tunable SNAIL amplifier."""

    snail: SnailParams
    n_cells: int = 700
    c_j: float = 50e-15
    c_g: float = 250e-15
    c_f: float = 0.076e-12
    l_add: float = 70e-15
    l_f: float = 190e-12
    l_g: float = 20.0e-9
    coupling_k: float = field(
        default_factory=lambda: default_coupling_k(70e-15, 190e-12),
    )
    tan_delta: float = 0.0
    z_port: float = 50.0
    alternate_polarity: bool = True
    cj_placement: CapacitancePlacement = CapacitancePlacement.SNAIL
    lg_placement: FluxChokePlacement = FluxChokePlacement.TERMINATION

    def check(self) -> None:
        if self.n_cells < 1:
            raise InvalidDesign(f"Need at least one cell, got {self.n_cells}")
        for name in ("c_j", "c_g", "c_f", "l_add", "l_f", "l_g", "z_port"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidDesign(f"{name} must be positive, got {value}")
        if not abs(self.coupling_k) <= 1:
            raise InvalidDesign(f"|coupling_k| must be <= 1, got {self.coupling_k}")
        if not (np.isfinite(self.tan_delta) and self.tan_delta >= 0):
            raise InvalidDesign(f"tan_delta must be >= 0, got {self.tan_delta}")


def default_coupling_k(
    l_add: float,
    l_f: float,
    i_dc_half_quantum: float = HALF_QUANTUM_I_DC,
) -> float:
    """Coupling coefficient for which `i_dc_half_quantum` threads Phi_0/2 per loop."""
    return FLUX_QUANTUM / (2 * i_dc_half_quantum * sqrt(l_add * l_f))


def _check_netlist(netlist: Netlist, lines: dict[str, int]) -> None:
    if not netlist.components:
        raise NetlistSemanticError("Empty netlist")

    seen: set[str] = set()
    for c in netlist.components:
        if c.name in seen:
            raise NetlistSemanticError(
                f"Duplicate component name {c.name}",
                names=[c.name],
                line=lines.get(c.name),
            )
        seen.add(c.name)

    inductors = {c.name for c in netlist.by_kind(ComponentKind.INDUCTOR)}
    for k in netlist.by_kind(ComponentKind.MUTUAL_COUPLING):
        for target in k.nodes:
            if target not in inductors:
                raise NetlistSemanticError(
                    f"{k.name} couples {target}, which is not a defined inductor",
                    names=[k.name, target],
                    line=lines.get(k.name),
                )
        if k.nodes[0] == k.nodes[1]:
            raise NetlistSemanticError(
                f"{k.name} couples {k.nodes[0]} to itself",
                names=[k.name],
                line=lines.get(k.name),
            )

    if not netlist.ports:
        raise NetlistSemanticError("Netlist has no port")
    numbers = [p.port_number for p in netlist.ports]
    if len(set(numbers)) != len(numbers):
        raise NetlistSemanticError(f"Duplicate port numbers {numbers}")

    two_terminal = [c for c in netlist.components if c.is_two_terminal]
    if not any(GROUND in c.nodes for c in two_terminal):
        raise NetlistSemanticError(f"No component touches ground node {GROUND!r}")

    # Connectivity over node graph with ground as vertex n.
    n = netlist.n_nodes + 1
    rows = [netlist.index(c.nodes[0]) % n for c in two_terminal]
    cols = [netlist.index(c.nodes[1]) % n for c in two_terminal]
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    n_parts, labels = connected_components(graph, directed=False)
    if n_parts > 1:
        ground_label = labels[n - 1]
        inverse = {i: name for name, i in netlist.node_index.items()}
        stray = [inverse[i] for i in range(n - 1) if labels[i] != ground_label]
        raise NetlistSemanticError(
            f"Nodes not connected to ground: {', '.join(stray[:5])}",
            names=stray,
        )
