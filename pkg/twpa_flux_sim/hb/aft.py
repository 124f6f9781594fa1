"""Alternating frequency/time evaluation of the junction nonlinearity.

A periodic quantity is stored as real coefficients
`[x0, Re x1, Im x1, ..., Re xN, Im xN]` of `x(t) = Re sum_k x_k exp(j k theta)`,
`theta = w_p t`. Junction currents are computed by synthesizing branch fluxes at
`n_time` equally spaced phases, applying `I_c sin(2 pi psi / Phi_0)` pointwise and
projecting back.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from twpa_flux_sim.constants.physics import REDUCED_FLUX_QUANTUM
from twpa_flux_sim.models.harmonic import HarmonicGrid


@dataclass(frozen=True)
class Transform:
    grid: HarmonicGrid

    @cached_property
    def theta(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.grid.n_time) / self.grid.n_time

    @cached_property
    def synthesis(self) -> np.ndarray:
        """(n_time, n_basis): coefficients to time samples."""
        k = np.arange(1, self.grid.n_harmonics + 1)
        phase = np.outer(self.theta, k)
        basis = np.empty((self.grid.n_time, self.grid.n_basis))
        basis[:, 0] = 1.0
        basis[:, 1::2] = np.cos(phase)
        basis[:, 2::2] = -np.sin(phase)
        return basis

    @cached_property
    def analysis(self) -> np.ndarray:
        """(n_basis, n_time): time samples to coefficients; inverse of `synthesis`."""
        scale = np.full(self.grid.n_basis, 2.0 / self.grid.n_time)
        scale[0] = 1.0 / self.grid.n_time
        return scale[:, None] * self.synthesis.T

    def to_time(self, coefficients: np.ndarray) -> np.ndarray:
        """(..., n_basis) -> (..., n_time)."""
        return coefficients @ self.synthesis.T

    def to_coefficients(self, samples: np.ndarray) -> np.ndarray:
        """(..., n_time) -> (..., n_basis)."""
        return samples @ self.analysis.T

    def junction_currents(
        self,
        branch_flux: np.ndarray,
        critical_current: np.ndarray,
    ) -> np.ndarray:
        """Current coefficients (n_jj, n_basis) for branch flux coefficients."""
        psi = self.to_time(branch_flux)
        current = critical_current[:, None] * np.sin(psi / REDUCED_FLUX_QUANTUM)
        return self.to_coefficients(current)

    def junction_jacobians(
        self,
        branch_flux: np.ndarray,
        critical_current: np.ndarray,
    ) -> np.ndarray:
        """d(current coefficients)/d(flux coefficients), one square block per junction."""
        g = self.conductance_samples(branch_flux, critical_current)
        return np.einsum("bt,jt,tc->jbc", self.analysis, g, self.synthesis)

    def conductance_samples(
        self,
        branch_flux: np.ndarray,
        critical_current: np.ndarray,
    ) -> np.ndarray:
        """Small-signal junction stiffness I_c/phi_0 cos(psi/phi_0) at each time sample."""
        psi = self.to_time(branch_flux)
        return (critical_current / REDUCED_FLUX_QUANTUM)[:, None] * np.cos(
            psi / REDUCED_FLUX_QUANTUM,
        )

    def conductance_spectrum(
        self,
        branch_flux: np.ndarray,
        critical_current: np.ndarray,
        max_order: int,
    ) -> np.ndarray:
        """Complex Fourier coefficients G_m, m = -max_order..max_order, per junction.

        g(t) = sum_m G_m exp(j m theta); real g gives G_-m = conj(G_m).
        """
        g = self.conductance_samples(branch_flux, critical_current)
        m = np.arange(-max_order, max_order + 1)
        kernel = np.exp(-1j * np.outer(self.theta, m)) / self.grid.n_time
        return g @ kernel


def coefficients_to_complex(coefficients: np.ndarray) -> np.ndarray:
    """(..., n_basis) real layout -> (..., N + 1) complex harmonic amplitudes."""
    out = np.empty((*coefficients.shape[:-1], (coefficients.shape[-1] + 1) // 2), complex)
    out[..., 0] = coefficients[..., 0]
    out[..., 1:] = coefficients[..., 1::2] + 1j * coefficients[..., 2::2]
    return out


def complex_to_coefficients(amplitudes: np.ndarray) -> np.ndarray:
    """Inverse of `coefficients_to_complex`; the imaginary part of harmonic 0 is dropped."""
    n_basis = 2 * amplitudes.shape[-1] - 1
    out = np.empty((*amplitudes.shape[:-1], n_basis))
    out[..., 0] = amplitudes[..., 0].real
    out[..., 1::2] = amplitudes[..., 1:].real
    out[..., 2::2] = amplitudes[..., 1:].imag
    return out
