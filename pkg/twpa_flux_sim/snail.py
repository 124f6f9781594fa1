"""Current-phase relation and flux-dependent expansion of a SNAIL.

The loop holds one small junction (critical current `r * i_c`) in parallel with `n_big`
big junctions (critical current `i_c`) in series. With reduced external flux `phi_ext`
threading the loop, the current through the element at phase drop `phi` is

    I_L(phi) = i_c * [r sin(phi) + sin((phi - phi_ext) / n_big)]

Around the zero-current phase `phi_star`,

    I_L(phi_star + x) / (alpha_tilde i_c) ~ x - beta x**2 - gamma x**3

`phi_ext` is the reduced flux in radians (2 pi Phi_ext / Phi_0) throughout; normalized
flux ratios only appear in `FluxPoint.flux_ratio` and in `flux_map`.
"""

from collections.abc import Iterable
from math import copysign, cos, pi, sin

import numpy as np
from loguru import logger
from scipy.optimize import brentq, newton

from twpa_flux_sim.constants.physics import REDUCED_FLUX_QUANTUM
from twpa_flux_sim.constants.solver import DEGENERATE_ALPHA, PHI_STAR_TOL
from twpa_flux_sim.exceptions import DegenerateExpansion, InvalidParameters, NoConvergence
from twpa_flux_sim.models.snail import FluxPoint, SnailExpansion, SnailParams


def branch_current(params: SnailParams, phi: float, flux: FluxPoint) -> float:
    """Current (A) through the SNAIL at phase drop `phi` (rad)."""
    return params.i_c * _normalized_current(params, phi, flux.phi_ext)


def potential_energy(params: SnailParams, phi: float, flux: FluxPoint) -> float:
    """Josephson energy (J) of the loop; its phase derivative is Phi_0/2pi * I_L."""
    e_j = REDUCED_FLUX_QUANTUM * params.i_c
    n = params.n_big
    return -e_j * (params.r * cos(phi) + n * cos((phi - flux.phi_ext) / n))


def solve_phi_star(
    params: SnailParams,
    flux: FluxPoint,
    *,
    guess: float | None = None,
) -> float:
    """Find the zero-current phase on the branch continuous with phi_star(0) = 0.

    The root is unique inside `phi_ext +/- n_big*pi/3` for the junction ratios of
    interest, so bracketing keeps the continuous branch; `guess` (the root at a nearby
    flux) is tried first with Newton's method.
    """
    phi_ext = flux.phi_ext
    if phi_ext == 0:
        return 0.0

    # Solve at |phi_ext| so that phi_star is exactly odd in the flux.
    sign = copysign(1.0, phi_ext)
    root = _solve_positive_flux(
        params,
        abs(phi_ext),
        None if guess is None else sign * guess,
    )
    return sign * root


def expansion(
    params: SnailParams,
    flux: FluxPoint,
    *,
    phi_star: float | None = None,
) -> SnailExpansion:
    """Linear inductance and nonlinear coefficients of the SNAIL at `flux`."""
    if phi_star is None:
        phi_star = solve_phi_star(params, flux)

    n = params.n_big
    r = params.r
    theta = (phi_star - flux.phi_ext) / n

    alpha_tilde = r * cos(phi_star) + cos(theta) / n
    if abs(alpha_tilde) < DEGENERATE_ALPHA:
        raise DegenerateExpansion(
            f"Linear inductance diverges at flux ratio {flux.flux_ratio}"
            f" ({alpha_tilde=})",
            flux_ratio=flux.flux_ratio,
        )

    beta = 0.5 * (r * sin(phi_star) + sin(theta) / n**2) / alpha_tilde
    gamma = (r * cos(phi_star) + cos(theta) / n**3) / (6 * alpha_tilde)
    l_eff = REDUCED_FLUX_QUANTUM / (alpha_tilde * params.i_c)

    return SnailExpansion(
        flux_ratio=flux.flux_ratio,
        phi_star=phi_star,
        alpha_tilde=alpha_tilde,
        beta=beta,
        gamma=gamma,
        l_eff=l_eff,
    )


def flux_map(params: SnailParams, ratios: Iterable[float]) -> list[SnailExpansion]:
    """Expand the SNAIL at each flux ratio, continuing phi_star along the list."""
    rows: list[SnailExpansion] = []
    previous: float | None = None

    for ratio in ratios:
        if not np.isfinite(ratio):
            raise InvalidParameters(f"Flux ratio must be finite, got {ratio}")
        flux = FluxPoint(float(ratio))
        try:
            phi_star = solve_phi_star(params, flux, guess=previous)
            row = expansion(params, flux, phi_star=phi_star)
        except NoConvergence as e:
            e.flux_ratio = flux.flux_ratio
            raise
        except DegenerateExpansion as e:
            e.flux_ratio = flux.flux_ratio
            raise
        rows.append(row)
        previous = phi_star

    logger.debug(f"Expanded SNAIL at {len(rows)} flux points.")
    return rows


def _normalized_current(params: SnailParams, phi: float, phi_ext: float) -> float:
    n = params.n_big
    return params.r * sin(phi) + sin((phi - phi_ext) / n)


def _normalized_slope(params: SnailParams, phi: float, phi_ext: float) -> float:
    n = params.n_big
    return params.r * cos(phi) + cos((phi - phi_ext) / n) / n


def _solve_positive_flux(
    params: SnailParams,
    phi_ext: float,
    guess: float | None,
) -> float:
    half_width = params.n_big * pi / 3
    lo, hi = phi_ext - half_width, phi_ext + half_width

    def f(phi: float) -> float:
        return _normalized_current(params, phi, phi_ext)

    def fprime(phi: float) -> float:
        return _normalized_slope(params, phi, phi_ext)

    root: float | None = None
    if guess is not None:
        try:
            candidate = newton(f, guess, fprime=fprime, tol=1e-15, maxiter=50)
        except (RuntimeError, ZeroDivisionError):
            candidate = None
        if candidate is not None and lo <= candidate <= hi:
            root = float(candidate)

    if root is None:
        if f(lo) * f(hi) > 0:
            raise NoConvergence(
                f"No zero-current phase bracketed in [{lo}, {hi}] (r={params.r})",
            )
        try:
            root = float(brentq(f, lo, hi, xtol=1e-15, maxiter=200))
        except RuntimeError as e:
            raise NoConvergence(f"Root search for phi_star failed: {e}") from e

    # One Newton polish step; keep it only if it helps.
    slope = fprime(root)
    if slope != 0:
        polished = root - f(root) / slope
        if abs(f(polished)) < abs(f(root)):
            root = polished

    residual = abs(f(root))
    if residual >= PHI_STAR_TOL:
        raise NoConvergence(
            f"phi_star residual {residual:.3e} above tolerance",
            residual_history=[residual],
        )
    return root
