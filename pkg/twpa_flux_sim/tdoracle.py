"""Brute-force time-domain integration of a netlist, for checking the frequency-domain
solvers on circuits of a few cells.

In node-flux coordinates the circuit obeys

    M Phi'' + D Phi' + K Phi + A^T I_c sin(A Phi / phi_0) = s(t)

with capacitance matrix M, conductances D (ports plus dielectric loss taken at the
first source frequency) and inductive stiffness K. The trapezoidal rule is applied to
the first-order system (Phi, V = Phi') and V is eliminated, leaving one nonlinear solve
for Phi per step. Nodes with neither capacitance nor conductance (internal SNAIL nodes)
carry no dynamics; their current balance is enforced at the new time point directly.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import pandas as pd
from loguru import logger
from scipy import sparse
from scipy.sparse.linalg import splu

from twpa_flux_sim._types import ComponentKind
from twpa_flux_sim.constants.physics import FLUX_QUANTUM, REDUCED_FLUX_QUANTUM
from twpa_flux_sim.constants.solver import ORACLE_MAX_CELLS
from twpa_flux_sim.exceptions import (
    GuardExceeded,
    InsufficientLength,
    InvalidParameters,
    NoConvergence,
)
from twpa_flux_sim.hb.stamp import LinearNetwork
from twpa_flux_sim.models.circuit import Netlist
from twpa_flux_sim.models.harmonic import HBSolution
from twpa_flux_sim.models.transient import Source, TransientConfig, TransientResult
from twpa_flux_sim.util.envvar import oracle_override_enabled

NEWTON_MAX_ITER = 30
NEWTON_RTOL = 1e-10
# Failed steps are split in two, at most this many times over.
MAX_SUBSTEP_DEPTH = 6


class _StepRejected(Exception):
    pass


def cell_count(netlist: Netlist) -> int:
    """Number of SNAIL cells, judged by one flux coupling or four junctions per cell."""
    return max(
        len(netlist.by_kind(ComponentKind.MUTUAL_COUPLING)),
        len(netlist.by_kind(ComponentKind.JOSEPHSON_JUNCTION)) // 4,
    )


@dataclass
class _Integrator:
    netlist: Netlist
    config: TransientConfig

    @cached_property
    def network(self) -> LinearNetwork:
        return LinearNetwork(self.netlist)

    @cached_property
    def mass(self) -> sparse.csr_matrix:
        net = self.network
        return (net.a_cap.T @ sparse.diags(net.capacitance) @ net.a_cap).tocsr()

    @cached_property
    def port_conductance(self) -> sparse.csr_matrix:
        net = self.network
        return (net.a_port.T @ sparse.diags(1 / net.port_resistance) @ net.a_port).tocsr()

    @cached_property
    def loss_conductance(self) -> sparse.csr_matrix:
        net = self.network
        if not self.config.sources:
            return sparse.csr_matrix((self.netlist.n_nodes, self.netlist.n_nodes))
        omega_ref = 2 * np.pi * self.config.sources[0].frequency
        g = omega_ref * net.capacitance * net.loss_tangent
        return (net.a_cap.T @ sparse.diags(g) @ net.a_cap).tocsr()

    @cached_property
    def damping(self) -> sparse.csr_matrix:
        return (self.port_conductance + self.loss_conductance).tocsr()

    @cached_property
    def dynamic(self) -> np.ndarray:
        """1 on rows with capacitance or conductance, 0 on purely algebraic rows."""
        weight = abs(self.mass) + abs(self.damping)
        return (np.asarray(weight.sum(axis=1)).ravel() > 0).astype(float)

    @cached_property
    def injection(self) -> list[tuple[np.ndarray, Source]]:
        return [(self._port_vector(s.port), s) for s in self.config.sources]

    @cached_property
    def flux_injection(self) -> np.ndarray:
        if not self.config.dc_flux_current:
            return np.zeros(self.netlist.n_nodes)
        return self.config.dc_flux_current * self._port_vector(self.config.flux_port)

    def _port_vector(self, number: int) -> np.ndarray:
        try:
            return self.network.port_vector(number)
        except KeyError:
            raise InvalidParameters(f"Transient source refers to missing port {number}") from None

    def ramp(self, t: float) -> float:
        t_ramp = self.config.ramp_time
        if t_ramp == 0 or t >= t_ramp:
            return 1.0
        return 0.5 * (1 - np.cos(np.pi * t / t_ramp))

    def source(self, t: float) -> np.ndarray:
        s = self.flux_injection.copy()
        for vector, src in self.injection:
            s += src.amplitude * np.cos(2 * np.pi * src.frequency * t + src.phase) * vector
        return self.ramp(t) * s

    def force(self, phi: np.ndarray) -> np.ndarray:
        """Static current K Phi + junction currents leaving each node."""
        net = self.network
        psi = net.a_jj @ phi
        return net.inductive @ phi + net.a_jj.T @ (
            net.critical_current * np.sin(psi / REDUCED_FLUX_QUANTUM)
        )

    def stiffness(self, phi: np.ndarray) -> sparse.csr_matrix:
        cos = np.cos((self.network.a_jj @ phi) / REDUCED_FLUX_QUANTUM)
        return (self.network.inductive + self.network.junction_stiffness(cos)).tocsr()

    def energy(self, phi: np.ndarray, v: np.ndarray) -> float:
        net = self.network
        psi = net.a_jj @ phi
        josephson = np.sum(
            net.critical_current * REDUCED_FLUX_QUANTUM * (1 - np.cos(psi / REDUCED_FLUX_QUANTUM)),
        )
        return float(0.5 * v @ (self.mass @ v) + 0.5 * phi @ (net.inductive @ phi) + josephson)

    def step(
        self,
        phi_n: np.ndarray,
        v_n: np.ndarray,
        t_n: float,
        h: float,
    ) -> tuple[np.ndarray, np.ndarray]:
        """One trapezoidal step; raises `_StepRejected` if Newton does not converge."""
        s1 = self.source(t_n + h)
        history = self.dynamic * (self.force(phi_n) - self.source(t_n))
        linear = ((4 / h**2) * self.mass + (2 / h) * self.damping).tocsr()
        atol = 1e-12 * FLUX_QUANTUM

        phi = phi_n + h * v_n
        for _ in range(NEWTON_MAX_ITER):
            v = (2 / h) * (phi - phi_n) - v_n
            residual = (
                (2 / h) * (self.mass @ (v - v_n))
                + self.damping @ (v + v_n)
                + self.force(phi)
                - s1
                + history
            )
            try:
                dx = splu((linear + self.stiffness(phi)).tocsc()).solve(residual)
            except RuntimeError as e:
                raise _StepRejected(str(e)) from e
            phi = phi - dx
            if np.linalg.norm(dx) <= NEWTON_RTOL * np.linalg.norm(phi) + atol:
                return phi, (2 / h) * (phi - phi_n) - v_n

        raise _StepRejected(f"Newton did not converge in {NEWTON_MAX_ITER} iterations")

    def advance(
        self,
        phi: np.ndarray,
        v: np.ndarray,
        t: float,
        h: float,
        depth: int = 0,
    ) -> tuple[np.ndarray, np.ndarray, int]:
        """Step by `h`, splitting the step in halves on rejection."""
        try:
            phi_new, v_new = self.step(phi, v, t, h)
            return phi_new, v_new, 0
        except _StepRejected as e:
            if depth >= MAX_SUBSTEP_DEPTH:
                raise NoConvergence(
                    f"Transient step at t={t:.6g} s rejected after {depth} halvings: {e}",
                ) from e
        phi_mid, v_mid, n1 = self.advance(phi, v, t, h / 2, depth + 1)
        phi_new, v_new, n2 = self.advance(phi_mid, v_mid, t + h / 2, h / 2, depth + 1)
        return phi_new, v_new, 1 + n1 + n2


def transient(
    netlist: Netlist,
    config: TransientConfig,
    *,
    override: bool | None = None,
) -> TransientResult:
    """Integrate from the zero state with sources ramped up over `config.ramp_periods`."""
    cells = cell_count(netlist)
    if override is None:
        override = oracle_override_enabled()
    if cells > ORACLE_MAX_CELLS and not override:
        raise GuardExceeded(
            f"{cells} cells is beyond the {ORACLE_MAX_CELLS}-cell limit of the transient"
            " oracle; set TWPA_FLUX_SIM_ORACLE_OVERRIDE=true to run anyway",
        )

    integrator = _Integrator(netlist, config)
    nodes = config.record_nodes or tuple(netlist.node_index)
    try:
        rows = [netlist.index(node) for node in nodes]
    except KeyError as e:
        raise InvalidParameters(f"Cannot record unknown node {e}") from None

    n = netlist.n_nodes
    n_steps = config.n_steps
    h = config.dt
    time = np.arange(n_steps + 1) * h

    flux = np.zeros((len(rows), n_steps + 1))
    source_energy = np.zeros(n_steps + 1)
    stored_energy = np.zeros(n_steps + 1)
    port_energy = np.zeros(n_steps + 1)
    loss_energy = np.zeros(n_steps + 1)

    phi, v = np.zeros(n), np.zeros(n)
    s = integrator.source(0.0)
    powers = _powers(integrator, s, v)
    substeps = 0

    logger.debug(f"Transient: {n_steps} steps of {h:.3g} s over {n} nodes.")
    for i in range(1, n_steps + 1):
        phi, v, split = integrator.advance(phi, v, time[i - 1], h)
        substeps += split

        s = integrator.source(time[i])
        new_powers = _powers(integrator, s, v)
        source_energy[i] = source_energy[i - 1] + 0.5 * h * (powers[0] + new_powers[0])
        port_energy[i] = port_energy[i - 1] + 0.5 * h * (powers[1] + new_powers[1])
        loss_energy[i] = loss_energy[i - 1] + 0.5 * h * (powers[2] + new_powers[2])
        stored_energy[i] = integrator.energy(phi, v)
        powers = new_powers
        flux[:, i] = phi[rows]

    if substeps:
        logger.warning(f"Transient needed {substeps} step splits.")
    logger.success(f"Transient finished: {n_steps} steps to t={time[-1]:.4g} s.")
    return TransientResult(
        time=time,
        nodes=nodes,
        flux=flux,
        source_energy=source_energy,
        stored_energy=stored_energy,
        port_energy=port_energy,
        loss_energy=loss_energy,
        substeps=substeps,
    )


def _powers(integrator: _Integrator, s: np.ndarray, v: np.ndarray) -> tuple[float, ...]:
    return (
        float(s @ v),
        float(v @ (integrator.port_conductance @ v)),
        float(v @ (integrator.loss_conductance @ v)),
    )


def spectrum(
    time: np.ndarray,
    series: np.ndarray,
    f_base: float,
    harmonics: int,
) -> np.ndarray:
    """Complex amplitudes X_k, k = 0..harmonics, with x(t) ~ Re sum X_k exp(j k w t).

    Uses the largest whole number of base periods inside the second half of the record,
    ending at its last sample, and evaluates the DFT at exact harmonic frequencies.
    """
    time = np.asarray(time, dtype=float)
    series = np.asarray(series, dtype=float)
    if time.size < 2 or series.shape[-1] != time.size:  # noqa: PLR2004
        raise InsufficientLength("Series and time axis must match and hold two samples")

    dt = time[1] - time[0]
    period = 1 / f_base
    per_period = period / dt
    if abs(per_period - round(per_period)) > 1e-6 * per_period:
        raise InsufficientLength(
            f"Step {dt:.6g} s does not divide the base period {period:.6g} s",
        )
    per_period = int(round(per_period))

    tail = (time.size - 1) // 2
    n_periods = tail // per_period
    if n_periods < 1:
        raise InsufficientLength(
            f"Second half of the record ({tail} samples) is shorter than one base"
            f" period ({per_period} samples)",
        )

    n_window = n_periods * per_period
    t = time[-n_window:]
    x = series[..., -n_window:]
    k = np.arange(harmonics + 1)
    kernel = np.exp(-2j * np.pi * f_base * np.outer(t, k)) * (2 / n_window)
    kernel[:, 0] = 1 / n_window
    return x @ kernel


def energy_balance(result: TransientResult) -> dict[str, float]:
    """Energy injected by sources against energy stored plus dissipated, at the end."""
    injected = float(result.source_energy[-1])
    stored = float(result.stored_energy[-1])
    ports = float(result.port_energy[-1])
    loss = float(result.loss_energy[-1])
    mismatch = injected - stored - ports - loss
    return {
        "source_j": injected,
        "stored_j": stored,
        "ports_j": ports,
        "loss_j": loss,
        "relative_error": abs(mismatch) / abs(injected) if injected else abs(mismatch),
    }


def hb_cross_check(
    netlist: Netlist,
    solution: HBSolution,
    *,
    nodes: tuple[str, ...],
    harmonics: int = 4,
    periods: int = 200,
    steps_per_period: int = 200,
    override: bool | None = None,
) -> pd.DataFrame:
    """Run the transient under the drive of a pump solution and compare harmonics."""
    drive = solution.drive
    f_pump = solution.grid.f_pump
    sources: tuple[Source, ...] = ()
    if drive.pump_amplitude:
        sources = (Source(drive.pump_port, drive.pump_amplitude, f_pump),)
    config = TransientConfig.periodic(
        sources,
        f_base=f_pump,
        periods=periods,
        steps_per_period=steps_per_period,
        dc_flux_current=drive.dc_flux_current,
        flux_port=drive.flux_port,
        record_nodes=nodes,
    )
    result = transient(netlist, config, override=override)
    measured = spectrum(result.time, result.flux, f_pump, harmonics)

    records = []
    for i, node in enumerate(nodes):
        for k in range(harmonics + 1):
            hb = solution.amplitude(node, k)
            td = complex(measured[i, k])
            records.append(
                {
                    "node": node,
                    "harmonic": k,
                    "hb_re": hb.real,
                    "hb_im": hb.imag,
                    "td_re": td.real,
                    "td_im": td.imag,
                    "relative_error": abs(td - hb) / abs(hb) if abs(hb) else abs(td - hb),
                },
            )
    return pd.DataFrame.from_records(records)
