"""Harmonic-balance solver for the pump steady state.

Unknowns are the real harmonic coefficients of every node flux, ordered node-major
(`node * n_basis + basis`, see `hb.aft`). The residual is Kirchhoff's current law at
each retained harmonic:

    F(x) = K x + A_jj^T I_jj(A_jj x) - s

with `K` the block-diagonal linear network, `I_jj` the junction currents evaluated by
alternating frequency/time transforms and `s` the injected pump and DC flux currents.
Newton's method is wrapped in a continuation on the drive: the DC flux current is
ramped first, then the pump amplitude, halving the step on failure.
"""

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
from loguru import logger
from scipy import sparse
from scipy.sparse.linalg import splu

from twpa_flux_sim.constants.physics import REDUCED_FLUX_QUANTUM
from twpa_flux_sim.constants.solver import STAGNATION_ITERATIONS, STAGNATION_RATIO
from twpa_flux_sim.exceptions import (
    InvalidParameters,
    NoConvergence,
    SingularJacobian,
    SolverError,
)
from twpa_flux_sim.hb.aft import Transform, coefficients_to_complex, complex_to_coefficients
from twpa_flux_sim.hb.stamp import LinearNetwork
from twpa_flux_sim.models.circuit import Netlist
from twpa_flux_sim.models.harmonic import Drive, HarmonicGrid, HBSolution, SolverConfig

# Residual growth beyond this factor aborts a Newton run early.
_DIVERGENCE = 1e6
_TINY = 1e-300


@dataclass
class _Path:
    x: np.ndarray
    solves: int
    iterations: int
    history: list[float]


class HarmonicBalance:
    def __init__(
        self,
        netlist: Netlist,
        grid: HarmonicGrid,
        config: SolverConfig | None = None,
    ):
        self.netlist = netlist
        self.grid = grid
        self.config = config or SolverConfig()
        self.network = LinearNetwork(netlist)
        self.transform = Transform(grid)

        nb = grid.n_basis
        self._ja = np.array([netlist.index(c.nodes[0]) for c in self.network.junctions])
        self._jb = np.array([netlist.index(c.nodes[1]) for c in self.network.junctions])
        self._basis = np.arange(nb)
        self.size = netlist.n_nodes * nb

    @cached_property
    def linear_matrix(self) -> sparse.csc_matrix:
        """Block-diagonal linear network over all harmonics in the real layout."""
        nb = self.grid.n_basis
        net = self.network

        e_dc = sparse.coo_matrix(([1.0], ([0], [0])), shape=(nb, nb))
        matrix = sparse.kron(net.inductive + net.dc_gauge, e_dc)

        for k in range(1, self.grid.n_harmonics + 1):
            y = net.nodal_matrix(k * self.grid.omega)
            re, im = 2 * k - 1, 2 * k
            e_real = sparse.coo_matrix(([1.0, 1.0], ([re, im], [re, im])), shape=(nb, nb))
            e_imag = sparse.coo_matrix(([-1.0, 1.0], ([re, im], [im, re])), shape=(nb, nb))
            matrix = matrix + sparse.kron(y.real, e_real) + sparse.kron(y.imag, e_imag)

        return matrix.tocsc()

    def source(self, drive: Drive) -> np.ndarray:
        nb = self.grid.n_basis
        s = np.zeros((self.netlist.n_nodes, nb))
        if drive.pump_amplitude:
            s[:, 1] += drive.pump_amplitude * self._port_vector(drive.pump_port)
        if drive.dc_flux_current:
            s[:, 0] += drive.dc_flux_current * self._port_vector(drive.flux_port)
        return s.ravel()

    def branch_flux(self, x: np.ndarray) -> np.ndarray:
        return self.network.a_jj @ x.reshape(self.netlist.n_nodes, self.grid.n_basis)

    def balance(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Linear and junction current terms of Kirchhoff's law, before subtracting `s`."""
        currents = self.transform.junction_currents(
            self.branch_flux(x),
            self.network.critical_current,
        )
        return self.linear_matrix @ x, (self.network.a_jj.T @ currents).ravel()

    def residual(self, x: np.ndarray, s: np.ndarray) -> np.ndarray:
        linear, nonlinear = self.balance(x)
        return linear + nonlinear - s

    def relative_residual(self, x: np.ndarray, s: np.ndarray) -> tuple[np.ndarray, float]:
        """Residual and its norm relative to the largest current in the balance.

        Reactive currents circulating in a long line exceed the injected current by
        orders of magnitude, so `|s|` alone would put the tolerance below roundoff.
        """
        linear, nonlinear = self.balance(x)
        f = linear + nonlinear - s
        scale = max(
            float(np.linalg.norm(s)),
            float(np.linalg.norm(linear)),
            float(np.linalg.norm(nonlinear)),
        )
        return f, float(np.linalg.norm(f)) / (scale or 1.0)

    def jacobian(self, x: np.ndarray) -> sparse.csc_matrix:
        if self.config.fd_jacobian:
            return self._fd_jacobian(x)

        nb = self.grid.n_basis
        blocks = self.transform.junction_jacobians(
            self.branch_flux(x),
            self.network.critical_current,
        )

        rows, cols, vals = [], [], []
        p = self._basis[None, :, None]
        q = self._basis[None, None, :]
        for row_nodes, col_nodes, sign in (
            (self._ja, self._ja, 1.0),
            (self._jb, self._jb, 1.0),
            (self._ja, self._jb, -1.0),
            (self._jb, self._ja, -1.0),
        ):
            mask = (row_nodes >= 0) & (col_nodes >= 0)
            r = row_nodes[mask][:, None, None] * nb + p
            c = col_nodes[mask][:, None, None] * nb + q
            rows.append(np.broadcast_to(r, blocks[mask].shape).ravel())
            cols.append(np.broadcast_to(c, blocks[mask].shape).ravel())
            vals.append(sign * blocks[mask].ravel())

        nonlinear = sparse.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.size, self.size),
        )
        return (self.linear_matrix + nonlinear).tocsc()

    def newton(
        self,
        x0: np.ndarray,
        s: np.ndarray,
    ) -> tuple[np.ndarray, int, list[float], bool]:
        x = x0.copy()
        history: list[float] = []

        for iteration in range(self.config.newton_max_iter + 1):
            f, relative = self.relative_residual(x, s)
            history.append(relative)
            if relative <= self.config.newton_tol:
                return x, iteration, history, True
            if (
                iteration == self.config.newton_max_iter
                or not np.isfinite(relative)
                or relative > _DIVERGENCE * history[0]
                or _stagnated(history)
            ):
                break

            # Rows mix inverse inductances with junction stiffness; equilibrate them
            # so the pivoting in splu sees comparable magnitudes.
            jacobian = self.jacobian(x)
            rows = 1.0 / np.maximum(abs(jacobian).max(axis=1).toarray().ravel(), _TINY)
            try:
                lu = splu((sparse.diags(rows) @ jacobian).tocsc())
            except RuntimeError as e:
                raise SingularJacobian(f"Harmonic-balance Jacobian is singular: {e}") from e
            x = x - lu.solve(rows * f)

        return x, len(history) - 1, history, False

    def solve(self, drive: Drive, initial: HBSolution | None = None) -> HBSolution:
        """Steady state at `drive`, continuing from `initial` or from rest."""
        if initial is not None and initial.converged:
            x = complex_to_coefficients(initial.node_amplitudes).ravel()
            start = initial.drive
        else:
            x = np.zeros(self.size)
            start = replace(drive, pump_amplitude=0.0, dc_flux_current=0.0)

        solves = iterations = 0
        history: list[float] = []

        if drive.dc_flux_current != start.dc_flux_current:
            dc_target = replace(start, dc_flux_current=drive.dc_flux_current)
            path = self._continue(x, start, dc_target, 1.0 / self.config.dc_flux_steps)
            x, start = path.x, dc_target
            solves += path.solves
            iterations += path.iterations
            history = path.history

        path = self._continue(x, start, drive, 1.0)
        solves += path.solves
        iterations += path.iterations
        history = path.history or history

        amplitudes = coefficients_to_complex(
            path.x.reshape(self.netlist.n_nodes, self.grid.n_basis),
        )
        logger.debug(
            f"Pump solved: {iterations} Newton iterations over {solves} continuation"
            f" points, residual {history[-1]:.2e}.",
        )
        return HBSolution(
            nodes=tuple(self.netlist.node_index),
            grid=self.grid,
            drive=drive,
            node_amplitudes=amplitudes,
            residual_norm=history[-1],
            newton_iterations=iterations,
            homotopy_steps=max(solves - 1, 0),
            residual_history=history,
        )

    def _continue(
        self,
        x0: np.ndarray,
        start: Drive,
        target: Drive,
        max_step: float,
    ) -> _Path:
        """Walk the drive from `start` to `target`, halving the step on failure."""
        done, step = 0.0, max_step
        x = x0
        solves = iterations = bisections = 0
        history: list[float] = []

        while done < 1.0:
            trial = min(1.0, done + step)
            s = self.source(start.interpolate(target, trial))
            x_new, n_iter, history, ok = self.newton(x, s)
            iterations += n_iter
            if ok:
                x, done = x_new, trial
                solves += 1
                bisections = 0
                step = min(max_step, 2 * step)
                continue

            bisections += 1
            logger.debug(f"Continuation step to {trial:.4f} failed; halving step.")
            if bisections > self.config.homotopy_max_bisections:
                raise NoConvergence(
                    f"Pump solve failed at {trial:.4f} of the way from {start} to"
                    f" {target} after {bisections - 1} consecutive bisections",
                    residual_history=history,
                )
            step /= 2

        return _Path(x=x, solves=solves, iterations=iterations, history=history)

    def _port_vector(self, number: int) -> np.ndarray:
        try:
            return self.network.port_vector(number)
        except KeyError:
            raise InvalidParameters(f"Drive refers to missing port {number}") from None

    def _fd_jacobian(self, x: np.ndarray) -> sparse.csc_matrix:
        """Column-by-column finite differences; only practical for small circuits."""
        s = np.zeros(self.size)
        f0 = self.residual(x, s)
        columns = []
        for i in range(self.size):
            h = 1e-7 * max(abs(x[i]), 1e-6 * REDUCED_FLUX_QUANTUM)
            dx = np.zeros(self.size)
            dx[i] = h
            columns.append((self.residual(x + dx, s) - f0) / h)
        return sparse.csc_matrix(np.column_stack(columns))


def solve_pump(
    netlist: Netlist,
    grid: HarmonicGrid,
    drive: Drive,
    *,
    config: SolverConfig | None = None,
    initial: HBSolution | None = None,
) -> HBSolution:
    return HarmonicBalance(netlist, grid, config).solve(drive, initial)


def homotopy_sweep(
    netlist: Netlist,
    grid: HarmonicGrid,
    drives: list[Drive],
    *,
    config: SolverConfig | None = None,
) -> list[HBSolution]:
    """Solve at ascending pump amplitudes, warm-starting each from the last success.

    A point that fails is returned with `converged=False` and NaN amplitudes; the sweep
    carries on from the previous converged point.
    """
    amplitudes = [d.pump_amplitude for d in drives]
    if amplitudes != sorted(amplitudes):
        raise InvalidParameters("Pump amplitudes must be sorted ascending")

    hb = HarmonicBalance(netlist, grid, config)
    solutions: list[HBSolution] = []
    previous: HBSolution | None = None

    for drive in drives:
        try:
            solution = hb.solve(drive, initial=previous)
        except SolverError as e:
            logger.warning(f"No pump steady state at {drive.pump_amplitude:.4g} A: {e}")
            solutions.append(_failed(hb, drive, e))
            continue
        solutions.append(solution)
        previous = solution

    n_ok = sum(s.converged for s in solutions)
    logger.success(f"Pump sweep: {n_ok}/{len(solutions)} amplitudes converged.")
    return solutions


def junction_phases(netlist: Netlist, solution: HBSolution) -> dict[str, np.ndarray]:
    """Harmonics of the reduced phase drop 2 pi psi / Phi_0 across each junction."""
    network = LinearNetwork(netlist)
    branch = network.a_jj @ solution.node_amplitudes
    return {
        c.name: branch[i] / REDUCED_FLUX_QUANTUM for i, c in enumerate(network.junctions)
    }


def _stagnated(history: list[float]) -> bool:
    recent = history[-STAGNATION_ITERATIONS - 1 :]
    if len(recent) <= STAGNATION_ITERATIONS:
        return False
    return all(b > STAGNATION_RATIO * a for a, b in zip(recent, recent[1:], strict=False))


def _failed(hb: HarmonicBalance, drive: Drive, error: SolverError) -> HBSolution:
    history = getattr(error, "residual_history", [])
    return HBSolution(
        nodes=tuple(hb.netlist.node_index),
        grid=hb.grid,
        drive=drive,
        node_amplitudes=np.full(
            (hb.netlist.n_nodes, hb.grid.n_harmonics + 1),
            np.nan + 0j,
        ),
        residual_norm=history[-1] if history else np.nan,
        newton_iterations=0,
        homotopy_steps=0,
        converged=False,
        failure=str(error),
        residual_history=history,
    )
