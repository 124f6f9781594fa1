"""Single-frequency linear analysis: the pump-off baseline of a gain measurement."""

import numpy as np
from scipy.sparse.linalg import splu

from twpa_flux_sim.constants.physics import REDUCED_FLUX_QUANTUM
from twpa_flux_sim.exceptions import InvalidParameters, SingularSystem
from twpa_flux_sim.hb.stamp import LinearNetwork
from twpa_flux_sim.models.circuit import Netlist
from twpa_flux_sim.models.harmonic import HBSolution


def dc_cosines(network: LinearNetwork, operating_point: HBSolution | None) -> np.ndarray:
    """cos of each junction's DC phase drop; all ones for an unbiased circuit."""
    if operating_point is None:
        return np.ones(len(network.junctions))
    psi = network.a_jj @ operating_point.node_amplitudes[:, 0].real
    return np.cos(psi / REDUCED_FLUX_QUANTUM)


def linear_ac(
    netlist: Netlist,
    frequency: float,
    *,
    operating_point: HBSolution | None = None,
) -> np.ndarray:
    """Scattering matrix at `frequency` with junctions replaced by linear inductances.

    Junctions are linearized around the DC part of `operating_point` when given (a flux
    biased circuit), otherwise around zero phase, i.e. L_J = Phi_0 / (2 pi I_c). Rows and
    columns follow `netlist.ports`, which is sorted by port number. Waves are referenced
    to each port's own resistance.
    """
    if not (np.isfinite(frequency) and frequency > 0):
        raise InvalidParameters(f"Frequency must be positive, got {frequency}")

    network = LinearNetwork(netlist)
    omega = 2 * np.pi * frequency
    y = network.nodal_matrix(omega) + network.junction_stiffness(
        dc_cosines(network, operating_point),
    )

    try:
        lu = splu(y.tocsc())
    except RuntimeError as e:
        raise SingularSystem(f"Linear network is singular at {frequency:.6g} Hz: {e}") from e

    excitation = network.a_port.T.toarray().astype(complex)
    flux = lu.solve(excitation)
    voltage = 1j * omega * (network.a_port @ flux)

    resistance = network.port_resistance
    return 2 * voltage / np.sqrt(np.outer(resistance, resistance)) - np.eye(len(resistance))


def port_position(netlist: Netlist, number: int) -> int:
    """Row of port `number` in a scattering matrix over `netlist.ports`."""
    for i, p in enumerate(netlist.ports):
        if p.port_number == number:
            return i
    raise InvalidParameters(f"No port {number} in netlist")
