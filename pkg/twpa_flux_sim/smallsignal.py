"""Small-signal scattering of a pumped circuit and the gain sweeps built on it.

Around the pump steady state each junction behaves as a time-varying linear inductance
with stiffness g(t) = I_c/phi_0 cos(psi_pump(t) / phi_0) = sum_m G_m exp(j m w_p t). A
small signal at w_s mixes into the sidebands w_s + k w_p; keeping |k| <= n_modulation,
the coupled sideband equations are

    Y(w_k) dPhi_k + sum_l A^T diag(G_{k-l}) A dPhi_l = I_k

Negative sideband frequencies stand for conjugated idlers; using |w| in the loss term
keeps their admittances consistent with that.
"""

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from loguru import logger
from scipy import sparse
from scipy.sparse.linalg import splu

from twpa_flux_sim.constants.solver import COLLISION_GUARD_HZ
from twpa_flux_sim.exceptions import InvalidParameters, SingularSystem, SolverError
from twpa_flux_sim.hb.aft import Transform, complex_to_coefficients
from twpa_flux_sim.hb.linear import linear_ac, port_position
from twpa_flux_sim.hb.pump import homotopy_sweep, solve_pump
from twpa_flux_sim.hb.stamp import LinearNetwork
from twpa_flux_sim.models.circuit import Netlist
from twpa_flux_sim.models.harmonic import Drive, HarmonicGrid, HBSolution, SolverConfig
from twpa_flux_sim.models.results import ConversionResult, GainResult, GainRow, PowerGainMap
from twpa_flux_sim.netlist.build import OUTPUT_PORT, flux_current_from_netlist
from twpa_flux_sim.util.parallel import ordered_map

# Sideband of the 4WM idler at 2 f_p - f_s, seen as a negative frequency.
IDLER_SIDEBAND = -2


@dataclass
class ConversionProblem:
    """A converged pump state prepared for repeated small-signal solves."""

    netlist: Netlist
    base: HBSolution
    sideband_count: int | None = None
    k_max: int = field(init=False)
    network: LinearNetwork = field(init=False, repr=False)

    def __post_init__(self):
        if not self.base.converged:
            raise InvalidParameters(
                f"Cannot linearize around an unconverged pump: {self.base.failure}",
            )
        self.k_max = (
            self.base.grid.n_modulation if self.sideband_count is None else self.sideband_count
        )
        if self.k_max < 0:
            raise InvalidParameters("sideband_count must be >= 0")
        self.network = LinearNetwork(self.netlist)

    @property
    def sidebands(self) -> np.ndarray:
        return np.arange(-self.k_max, self.k_max + 1)

    @cached_property
    def conductance(self) -> np.ndarray:
        """G_m per junction, m = -2K..2K (column m + 2K)."""
        coefficients = complex_to_coefficients(self.base.node_amplitudes)
        branch = self.network.a_jj @ coefficients
        return Transform(self.base.grid).conductance_spectrum(
            branch,
            self.network.critical_current,
            2 * self.k_max,
        )

    @cached_property
    def mixing_blocks(self) -> dict[int, sparse.csr_matrix]:
        """Nodal stiffness coupling sideband l into sideband l + m."""
        a = self.network.a_jj
        offset = 2 * self.k_max
        return {
            m: (a.T @ sparse.diags(self.conductance[:, m + offset]) @ a).tocsr()
            for m in range(-offset, offset + 1)
        }

    def matrix(self, f_signal: float) -> sparse.csc_matrix:
        omega_s = 2 * np.pi * f_signal
        omega_p = self.base.grid.omega
        blocks = [
            [self.mixing_blocks[int(k - l)] for l in self.sidebands] for k in self.sidebands
        ]
        for i, k in enumerate(self.sidebands):
            blocks[i][i] = blocks[i][i] + self.network.nodal_matrix(omega_s + k * omega_p)
        return sparse.bmat(blocks, format="csc")

    def scatter(self, f_signal: float) -> ConversionResult:
        omega = 2 * np.pi * (f_signal + self.sidebands * self.base.grid.f_pump)
        if np.any(np.isclose(omega, 0, atol=2 * np.pi * 1e-3)):
            raise InvalidParameters(
                f"Signal {f_signal:.6g} Hz puts a sideband at DC; shift it off k*f_pump",
            )

        try:
            lu = splu(self.matrix(f_signal))
        except RuntimeError as e:
            raise SingularSystem(
                f"Conversion matrix is singular at {f_signal:.6g} Hz: {e}",
            ) from e

        n_sb = len(self.sidebands)
        a_port = sparse.block_diag([self.network.a_port] * n_sb, format="csr")
        flux = lu.solve(a_port.T.toarray().astype(complex))

        # Rows/columns ordered sideband-major, port-minor.
        w = np.repeat(omega, len(self.network.ports))
        resistance = np.tile(self.network.port_resistance, n_sb)
        voltage = 1j * w[:, None] * (a_port @ flux)
        s_power = 2 * voltage / np.sqrt(np.outer(resistance, resistance)) - np.eye(len(w))
        s_photon = s_power * np.sqrt(np.abs(w)[None, :] / np.abs(w)[:, None])

        return ConversionResult(
            f_signal=f_signal,
            f_pump=self.base.grid.f_pump,
            sidebands=self.sidebands,
            ports=tuple(p.port_number for p in self.network.ports),  # type: ignore[misc]
            s=s_photon,
        )


def conversion_matrix(
    netlist: Netlist,
    base: HBSolution,
    f_signal: float,
    *,
    sideband_count: int | None = None,
) -> ConversionResult:
    return ConversionProblem(netlist, base, sideband_count).scatter(f_signal)


def guard_collision(f_signal: float, f_pump: float) -> float:
    """Shift `f_signal` off multiples of f_pump/2, where sidebands become degenerate."""
    half = f_pump / 2
    nearest = round(f_signal / half) * half
    if abs(f_signal - nearest) < COLLISION_GUARD_HZ:
        return nearest + COLLISION_GUARD_HZ
    return f_signal


@dataclass
class _GainContext:
    problem: ConversionProblem
    baseline: HBSolution | None
    input_port: int
    output_port: int


def _gain_point(context: _GainContext, f_requested: float) -> GainRow:
    problem = context.problem
    f_signal = guard_collision(f_requested, problem.base.grid.f_pump)
    try:
        on = problem.scatter(f_signal)
        off = linear_ac(problem.netlist, f_signal, operating_point=context.baseline)
    except SolverError as e:
        logger.warning(f"Gain point {f_signal:.6g} Hz failed: {e}")
        return GainRow.failed(f_signal, str(e))

    out = port_position(problem.netlist, context.output_port)
    inp = port_position(problem.netlist, context.input_port)
    return GainRow(
        f_signal=f_signal,
        s21_on=on.element(context.output_port, 0, context.input_port, 0),
        s21_off=complex(off[out, inp]),
        s_idler=on.element(context.output_port, IDLER_SIDEBAND, context.input_port, 0)
        if IDLER_SIDEBAND in on.sidebands
        else complex(np.nan, np.nan),
    )


def gain_rows(
    netlist: Netlist,
    base: HBSolution,
    baseline: HBSolution | None,
    signal_frequencies: list[float],
    *,
    threads: int = 1,
) -> GainResult:
    """Gain of an already solved pump state against `baseline`, rows in ascending frequency."""
    context = _GainContext(
        problem=ConversionProblem(netlist, base),
        baseline=baseline,
        input_port=base.drive.pump_port,
        output_port=OUTPUT_PORT,
    )
    rows = ordered_map(_gain_point, sorted(signal_frequencies), context=context, threads=threads)
    return GainResult(rows=rows, stats=base.stats())


def pump_off_baseline(
    netlist: Netlist,
    grid: HarmonicGrid,
    drive: Drive,
    *,
    config: SolverConfig | None = None,
) -> HBSolution | None:
    """DC operating point with the pump off; None for an unbiased circuit."""
    if drive.dc_flux_current == 0:
        return None
    return solve_pump(netlist, grid, replace(drive, pump_amplitude=0.0), config=config)


def gain_sweep(
    netlist: Netlist,
    grid: HarmonicGrid,
    drive: Drive,
    signal_frequencies: list[float],
    *,
    config: SolverConfig | None = None,
    threads: int = 1,
) -> GainResult:
    """Pump-on over pump-off transmission (dB) from port 1 to port 2 at each frequency.

    A pump that cannot be solved raises `NoConvergence`; individual frequencies that fail
    are recorded on their rows and the sweep carries on.
    """
    base = solve_pump(netlist, grid, drive, config=config)
    baseline = pump_off_baseline(netlist, grid, drive, config=config)
    result = gain_rows(netlist, base, baseline, signal_frequencies, threads=threads)

    n_ok = sum(r.converged for r in result.rows)
    logger.success(
        f"Gain sweep at f_p={grid.f_pump / 1e9:.4g} GHz: {n_ok}/{len(result.rows)} points,"
        f" peak {np.nanmax(result.gain_db) if n_ok else float('nan'):.2f} dB.",
    )
    return result


def power_gain_map(
    netlist: Netlist,
    grid: HarmonicGrid,
    pump_amplitudes: list[float],
    signal_frequencies: list[float],
    flux_ratio: float,
    *,
    config: SolverConfig | None = None,
    threads: int = 1,
    dc_flux_current: float | None = None,
) -> PowerGainMap:
    """Gain over a (pump amplitude, signal frequency) grid, solved in ascending pump order.

    Pump amplitudes whose steady state does not converge give rows of NaN marked
    unconverged. The DC current comes from `flux_ratio` through the netlist's mutual
    coupling unless given explicitly.
    """
    if dc_flux_current is None:
        dc_flux_current = flux_current_from_netlist(netlist, flux_ratio) if flux_ratio else 0.0
    if not pump_amplitudes:
        raise InvalidParameters("Need at least one pump amplitude")
    signal_frequencies = sorted(signal_frequencies)
    drives = [Drive(pump_amplitude=a, dc_flux_current=dc_flux_current) for a in pump_amplitudes]
    solutions = homotopy_sweep(netlist, grid, drives, config=config)
    baseline = pump_off_baseline(netlist, grid, drives[0], config=config)

    results = []
    for solution in solutions:
        if not solution.converged:
            results.append(GainResult.failed(signal_frequencies, solution.failure or ""))
            continue
        results.append(
            gain_rows(netlist, solution, baseline, signal_frequencies, threads=threads),
        )

    return PowerGainMap(
        pump_amplitudes=np.asarray(pump_amplitudes, dtype=float),
        frequencies=np.asarray(signal_frequencies, dtype=float),
        results=results,
    )

