"""Assemble the linear part of a netlist into nodal matrices in flux coordinates.

Unknowns are node fluxes Phi (time integral of node voltage); a matrix Y maps flux
phasors to the current leaving each node. At angular frequency w:

* capacitor:  -w**2 C + j w |w| C tan(delta)   (complex capacitance C(1 - j tan(delta)))
* inductors:  inverse inductance matrix, mutual couplings included
* port:       j w / R
* junction:   I_c 2pi/Phi_0 cos(phase), supplied by the caller

Using |w| in the loss term keeps Y(-w) = conj(Y(w)) for negative sideband frequencies.
"""

from dataclasses import dataclass
from functools import cached_property
from math import sqrt

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from twpa_flux_sim._types import ComponentKind
from twpa_flux_sim.constants.physics import REDUCED_FLUX_QUANTUM
from twpa_flux_sim.exceptions import SingularSystem
from twpa_flux_sim.models.circuit import Component, Netlist


def incidence(netlist: Netlist, components: list[Component]) -> sparse.csr_matrix:
    """Branch-node incidence: +1 at the first node, -1 at the second, ground dropped."""
    rows, cols, vals = [], [], []
    for i, c in enumerate(components):
        for node, sign in zip(c.nodes, (1.0, -1.0), strict=True):
            j = netlist.index(node)
            if j >= 0:
                rows.append(i)
                cols.append(j)
                vals.append(sign)
    return sparse.csr_matrix(
        (vals, (rows, cols)),
        shape=(len(components), netlist.n_nodes),
    )


def inverse_inductance(netlist: Netlist, inductors: list[Component]) -> sparse.csr_matrix:
    """Invert the inductance matrix block by block over groups of coupled inductors."""
    n = len(inductors)
    position = {c.name: i for i, c in enumerate(inductors)}
    rows = list(range(n))
    cols = list(range(n))
    vals = [c.value for c in inductors]

    for k in netlist.by_kind(ComponentKind.MUTUAL_COUPLING):
        a, b = (position[name] for name in k.nodes)
        m = k.value * sqrt(inductors[a].value * inductors[b].value)
        rows += [a, b]
        cols += [b, a]
        vals += [m, m]

    inductance = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    n_groups, labels = connected_components(inductance, directed=False)

    out_rows, out_cols, out_vals = [], [], []
    for group in range(n_groups):
        members = np.flatnonzero(labels == group)
        block = inductance[members][:, members].toarray()
        try:
            inverse = np.linalg.inv(block)
        except np.linalg.LinAlgError as e:
            names = [inductors[i].name for i in members]
            raise SingularSystem(f"Singular inductance matrix for {names}") from e
        r, c = np.meshgrid(members, members, indexing="ij")
        out_rows.append(r.ravel())
        out_cols.append(c.ravel())
        out_vals.append(inverse.ravel())

    if not out_rows:
        return sparse.csr_matrix((n, n))
    return sparse.csr_matrix(
        (np.concatenate(out_vals), (np.concatenate(out_rows), np.concatenate(out_cols))),
        shape=(n, n),
    )


@dataclass
class LinearNetwork:
    """Netlist preprocessed for repeated assembly at many frequencies."""

    netlist: Netlist

    @cached_property
    def capacitors(self) -> list[Component]:
        return self.netlist.by_kind(ComponentKind.CAPACITOR)

    @cached_property
    def inductors(self) -> list[Component]:
        return self.netlist.by_kind(ComponentKind.INDUCTOR)

    @cached_property
    def junctions(self) -> list[Component]:
        return self.netlist.by_kind(ComponentKind.JOSEPHSON_JUNCTION)

    @cached_property
    def ports(self) -> list[Component]:
        return list(self.netlist.ports)

    @cached_property
    def a_cap(self) -> sparse.csr_matrix:
        return incidence(self.netlist, self.capacitors)

    @cached_property
    def a_ind(self) -> sparse.csr_matrix:
        return incidence(self.netlist, self.inductors)

    @cached_property
    def a_jj(self) -> sparse.csr_matrix:
        return incidence(self.netlist, self.junctions)

    @cached_property
    def a_port(self) -> sparse.csr_matrix:
        return incidence(self.netlist, self.ports)

    @cached_property
    def capacitance(self) -> np.ndarray:
        return np.array([c.value for c in self.capacitors])

    @cached_property
    def loss_tangent(self) -> np.ndarray:
        return np.array([c.loss_tangent for c in self.capacitors])

    @cached_property
    def critical_current(self) -> np.ndarray:
        return np.array([c.value for c in self.junctions])

    @cached_property
    def port_resistance(self) -> np.ndarray:
        return np.array([p.value for p in self.ports])

    @cached_property
    def inductive(self) -> sparse.csr_matrix:
        """Nodal stiffness of the linear inductor network (1/H)."""
        gamma = inverse_inductance(self.netlist, self.inductors)
        return (self.a_ind.T @ gamma @ self.a_ind).tocsr()

    @cached_property
    def junction_linear(self) -> sparse.csr_matrix:
        """Nodal stiffness of the junctions replaced by unbiased linear inductances."""
        return self.junction_stiffness(np.ones(len(self.junctions)))

    @cached_property
    def dc_gauge(self) -> sparse.csr_matrix:
        """Pin one node of every subnetwork without an inductive path to ground.

        Such subnetworks have an undetermined DC flux offset; no DC current can flow
        through the pin because no DC source drives them.
        """
        n = self.netlist.n_nodes
        # Branch graph of inductors and junctions, ground as vertex n. Mutual couplings
        # carry no DC current between nodes, so they are not edges.
        branches = self.inductors + self.junctions
        rows = [self.netlist.index(c.nodes[0]) % (n + 1) for c in branches]
        cols = [self.netlist.index(c.nodes[1]) % (n + 1) for c in branches]
        graph = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n + 1, n + 1))
        n_parts, labels = connected_components(graph, directed=False)

        pins = []
        for part in range(n_parts):
            if part == labels[n]:
                continue
            pins.append(np.flatnonzero(labels == part)[0])

        diagonal = np.abs((self.inductive + self.junction_linear).diagonal())
        scale = float(np.median(diagonal[diagonal > 0])) if diagonal.any() else 1.0
        pin = np.zeros(n)
        pin[pins] = scale
        return sparse.diags(pin).tocsr()

    def junction_stiffness(self, cos_phase: np.ndarray) -> sparse.csr_matrix:
        """Nodal stiffness of junctions linearized at phases with the given cosines."""
        k = self.critical_current / REDUCED_FLUX_QUANTUM * cos_phase
        return (self.a_jj.T @ sparse.diags(k) @ self.a_jj).tocsr()

    def nodal_matrix(self, omega: float) -> sparse.csr_matrix:
        """Linear elements only (no junctions) at angular frequency `omega`."""
        c = self.capacitance
        y_cap = -(omega**2) * c + 1j * omega * abs(omega) * c * self.loss_tangent
        y_port = 1j * omega / self.port_resistance
        matrix = (
            self.a_cap.T @ sparse.diags(y_cap) @ self.a_cap
            + self.a_port.T @ sparse.diags(y_port) @ self.a_port
            + self.inductive
        )
        return matrix.tocsr().astype(complex)

    def port_vector(self, number: int) -> np.ndarray:
        """Unit current injected into the first node of port `number`."""
        for i, p in enumerate(self.ports):
            if p.port_number == number:
                return np.asarray(self.a_port[i].todense()).ravel()
        raise KeyError(f"No port {number}")
