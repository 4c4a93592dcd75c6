"""
Oracle Module for rf-SQUID Escape Simulator
Handles brute-force grid diagonalization used as the reference for levels, gaps and matrix elements.

H/U0 = -(1/eta^2) d^2/dphi^2 + U(phi)/U0 on a uniform grid with the 3-point second difference.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq, minimize_scalar

from src import global_vars
from src.device_potential import (
    DerivedScales,
    DeviceParams,
    geometry_for,
    monostable_minimum,
    reduced_curvature,
    reduced_potential,
    single_well,
)
from src.errors import BistabilityLostError, NoCrossingError, OracleConvergenceError, ParameterDomainError

logger = logging.getLogger(__name__)

# decay exponent eta * int sqrt(U - E) dphi reached at each grid end
DECAY_EXPONENT = 30.0


@dataclass(frozen=True)
class GridSpectrum:
    """Represents the lowest eigenpairs of the grid Hamiltonian."""
    phi_grid: np.ndarray
    reduced_energies: np.ndarray  # in units of U0, Richardson-extrapolated
    states: np.ndarray  # columns normalized so that int |psi|^2 dphi = 1
    U0: float  # joule per unit energy
    grid_points: int  # size of the grid the states come from
    change: float  # largest extrapolated-eigenvalue change under the last doubling

    @property
    def energies(self) -> np.ndarray:
        """Eigenvalues in joule."""
        return self.reduced_energies * self.U0

    @property
    def n_levels(self) -> int:
        return int(self.reduced_energies.size)

    def gram(self) -> np.ndarray:
        return trapezoid(self.states.T[:, :, None].conj() * self.states[None, :, :], self.phi_grid, axis=1)


def _wells(beta_L: float, phi_x: float):
    """Lowest minimum, outermost minima and barrier top (None when monostable)."""
    try:
        geom = geometry_for(beta_L, phi_x)
        return (min(geom.U_min_left, geom.U_min_right), geom.phi_min_left, geom.phi_min_right,
                geom.U_top, max(geom.U1_min_left, geom.U1_min_right))
    except BistabilityLostError:
        if beta_L >= 1.0:
            phi_min = monostable_minimum(beta_L, phi_x)
            u_min = float(reduced_potential(phi_min, beta_L, phi_x))
            curvature = 0.5 * float(reduced_curvature(phi_min, beta_L, phi_x))
            return u_min, phi_min, phi_min, None, curvature
        well = single_well(beta_L, phi_x)
        return well.u_min, well.phi_min, well.phi_min, None, well.curvature


def grid_bounds(beta_L: float, phi_x: float, eta: float, n_levels: int, widen: float = 1.0) -> Tuple[float, float]:
    """
    Coordinate interval holding the lowest n_levels states with exponentially small tails.

    Args:
        beta_L: screening parameter
        phi_x: flux bias
        eta: action scale
        n_levels: number of states the grid must hold
        widen: factor applied to the tail lengths beyond the outer turning points

    Returns:
        (phi_lo, phi_hi)
    """
    u_min, phi_left, phi_right, u_top, curvature = _wells(beta_L, phi_x)
    quantum = 2.0 * math.sqrt(curvature) / eta
    ceiling = u_min + (n_levels + 2) * quantum
    if u_top is not None:
        ceiling = max(ceiling, u_top + quantum)
    reach = math.sqrt(2.0 * (ceiling + beta_L)) + 1.0

    def excess(phi):
        return float(reduced_potential(phi, beta_L, phi_x)) - ceiling

    def tail(turn: float, sign: float) -> float:
        path = turn + sign * np.linspace(0.0, 2.0 * reach, 4000)
        gap = np.maximum(reduced_potential(path, beta_L, phi_x) - ceiling, 0.0)
        exponent = eta * cumulative_trapezoid(np.sqrt(gap), dx=2.0 * reach / 3999, initial=0.0)
        index = int(np.searchsorted(exponent, DECAY_EXPONENT))
        return float(path[min(index, path.size - 1)])

    lo_turn = brentq(excess, phi_x - reach, phi_left) if excess(phi_left) < 0 else phi_left
    hi_turn = brentq(excess, phi_right, phi_x + reach) if excess(phi_right) < 0 else phi_right
    lo, hi = tail(lo_turn, -1.0), tail(hi_turn, 1.0)
    return lo_turn - widen * (lo_turn - lo), hi_turn + widen * (hi - hi_turn)


def _solve_grid(beta_L: float, phi_x: float, eta: float, bounds: Tuple[float, float],
                n_levels: int, N: int):
    phi = np.linspace(bounds[0], bounds[1], N)
    h = phi[1] - phi[0]
    kinetic = 1.0 / (eta * h) ** 2
    diag = 2.0 * kinetic + reduced_potential(phi, beta_L, phi_x)
    off = np.full(N - 1, -kinetic)
    values, vectors = eigh_tridiagonal(diag, off, select="i", select_range=(0, n_levels - 1))
    vectors = vectors / math.sqrt(h)
    # deterministic sign: largest lobe positive
    lobes = vectors[np.argmax(np.abs(vectors), axis=0), np.arange(n_levels)]
    vectors = vectors * np.sign(lobes)[None, :]
    return phi, values, vectors


def diagonalize(params: DeviceParams, scales: DerivedScales, n_levels: int,
                N: int = global_vars.ORACLE_GRID, converge: bool = True, widen: float = 1.0,
                tol_conv: float = global_vars.ORACLE_TOL_CONV) -> GridSpectrum:
    """
    Lowest eigenpairs of the flux Hamiltonian on a uniform grid.

    Args:
        params: device parameters (beta_L, phi_x)
        scales: derived scales (eta, U0)
        n_levels: number of eigenpairs
        N: starting grid size, at least 512
        converge: double the grid until Richardson-extrapolated eigenvalues settle
        widen: tail-length factor passed to grid_bounds
        tol_conv: convergence threshold in units of U0

    Returns:
        GridSpectrum
    """
    if N < 512:
        raise ParameterDomainError(f"oracle grid needs N >= 512, got {N}")
    if n_levels < 1:
        raise ParameterDomainError(f"n_levels must be positive, got {n_levels}")
    bounds = grid_bounds(params.beta_L, params.phi_x, scales.eta, n_levels, widen)
    phi, coarse, states = _solve_grid(params.beta_L, params.phi_x, scales.eta, bounds, n_levels, N)
    if not converge:
        return GridSpectrum(phi_grid=phi, reduced_energies=coarse, states=states, U0=scales.U0,
                            grid_points=N, change=math.nan)

    previous = None
    size = N
    for _ in range(global_vars.ORACLE_MAX_DOUBLINGS):
        size *= 2
        phi, fine, states = _solve_grid(params.beta_L, params.phi_x, scales.eta, bounds, n_levels, size)
        extrapolated = (4.0 * fine - coarse) / 3.0
        if previous is not None:
            change = float(np.max(np.abs(extrapolated - previous)))
            logger.debug(f"oracle N={size}: extrapolated change {change:.3e}")
            if change < tol_conv:
                return GridSpectrum(phi_grid=phi, reduced_energies=extrapolated, states=states, U0=scales.U0,
                                    grid_points=size, change=change)
        previous, coarse = extrapolated, fine
    raise OracleConvergenceError(
        f"eigenvalues not converged to {tol_conv:.1e} U0 after {global_vars.ORACLE_MAX_DOUBLINGS} doublings")


def exact_splitting_scan(params: DeviceParams, scales: DerivedScales, phi_x_range: Tuple[float, float],
                         lower_index: int, N: int = global_vars.ORACLE_GRID) -> Tuple[float, float]:
    """
    Minimize the splitting of one doublet over a bias interval.

    Args:
        params: device parameters
        scales: derived scales
        phi_x_range: (phi_x_lo, phi_x_hi) bracketing the crossing
        lower_index: index of the lower doublet member (levels below it in both wells)
        N: grid size; doubled once so that grid errors cancel in the difference

    Returns:
        (phi_x_min, gap_exact) with the gap in units of U0
    """
    lo, hi = phi_x_range
    n_levels = lower_index + 2

    def splitting(phi_x):
        spectrum = diagonalize(replace(params, phi_x=phi_x), scales, n_levels, 2 * N, converge=False)
        return float(spectrum.reduced_energies[lower_index + 1] - spectrum.reduced_energies[lower_index])

    result = minimize_scalar(splitting, bounds=(lo, hi), method="bounded",
                             options={"xatol": 1e-9 * max(1.0, abs(hi - lo))})
    edge = 1e-3 * (hi - lo)
    if result.x - lo < edge or hi - result.x < edge:
        raise NoCrossingError(f"splitting of doublet {lower_index} has no interior minimum in [{lo:.6g}, {hi:.6g}]")
    logger.info(f"oracle crossing at phi_x={result.x:.10f}, gap={result.fun:.4e} U0")
    return float(result.x), float(result.fun)


def exact_matrix_element(spectrum: GridSpectrum, i: int, j: int,
                         zeta: Callable[[np.ndarray], np.ndarray]) -> complex:
    """Trapezoidal <i|zeta|j> on the oracle grid."""
    values = np.conj(spectrum.states[:, i]) * zeta(spectrum.phi_grid) * spectrum.states[:, j]
    return complex(trapezoid(values, spectrum.phi_grid))


def match_levels(reference: np.ndarray, candidates: np.ndarray, tolerance: float) -> Optional[np.ndarray]:
    """
    Pair every reference level with a distinct candidate within tolerance.

    Returns:
        Index array into candidates, or None when no bijective pairing exists
    """
    chosen = []
    for value in reference:
        distances = np.abs(candidates - value)
        order = np.argsort(distances)
        pick = next((int(k) for k in order if distances[k] <= tolerance and int(k) not in chosen), None)
        if pick is None:
            return None
        chosen.append(pick)
    return np.array(chosen, dtype=int)
