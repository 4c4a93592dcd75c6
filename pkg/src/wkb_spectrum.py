"""
WKB Spectrum Module for rf-SQUID Escape Simulator
Handles well actions, the near-top quantization condition, the level anticrossing and well levels.

Energies are in units of U0 and actions in units of hbar throughout this module.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from src import global_vars
from src.device_potential import (
    DerivedScales,
    DeviceParams,
    PotentialGeometry,
    Well,
    fold_bias,
    geometry_for,
    potential_drop,
)
from src.errors import (
    BistabilityLostError,
    EmptyWellError,
    EnergyDomainError,
    NoCrossingError,
    NotEnoughLevelsError,
)
from src.quadrature import tanh_sinh
from src.specfun import chi_phase, dchi_phase

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ActionPair:
    """Represents the well actions and phases at one energy."""
    E: float  # in units of U0
    Phi1: float
    Phi2: float
    S_left_raw: float
    S_right_raw: float
    lam: float


@dataclass(frozen=True)
class NearTopPair:
    """Represents the two delocalized levels closest below the barrier top."""
    E_f1: float  # upper level, units of U0
    E_f2: float  # lower level, units of U0
    lambda_f1: float
    lambda_f2: float
    B_f1: float
    B_f2: float
    G_f1: float
    G_f2: float
    G_L: float  # left single-well normalization at the pair's mean energy
    G_R: float  # right single-well normalization at the pair's mean energy
    k_left: int  # left-well quantum number carried by the pair
    k_right: int  # right-well quantum number carried by the pair

    @property
    def mean_energy(self) -> float:
        return 0.5 * (self.E_f1 + self.E_f2)


@dataclass(frozen=True)
class CrossingPoint:
    """Represents the anticrossing location and the local linearization of both phases."""
    phi_x0: float
    E0c: float  # in units of U0
    lambda0: float
    k1: int
    k2: int
    alpha1: float  # radian per unit phi_x
    alpha2: float
    beta1: float  # radian per unit of U0
    beta2: float
    gap: float  # minimum splitting, units of U0
    beta1_top: float  # barrier-top limit of beta1
    beta2_top: float
    hbar_omega: float  # left plasma quantum at phi_x0, units of U0

    @property
    def width(self) -> float:
        """Bias range over which the splitting stays close to the gap."""
        return self.gap * self.beta1 / abs(self.alpha1)


@dataclass(frozen=True)
class HyperbolaPoint:
    """Represents both branches of the anticrossing at one bias offset."""
    delta_E_upper: float  # units of U0
    delta_E_lower: float
    extrapolated: bool = False


@dataclass(frozen=True)
class WellLevels:
    """Represents the localized levels entering the five-level scheme."""
    E_0: float  # left ground level, units of U0
    E_L: float
    E_R: float
    n_left: int  # left levels below the pair
    n_right: int
    index_L: int
    index_R: int
    G_0: float
    G_L: float
    G_R: float


def _lambda_terms(lam):
    # lambda/4 (1 + ln(2/lambda)), continuous at lambda = 0
    lam = np.asarray(lam, dtype=float)
    safe = np.where(lam > 0, lam, 1.0)
    return np.where(lam > 0, 0.25 * lam * (1.0 + np.log(2.0 / safe)), 0.0)


def _log_weight(lam):
    # derivative of _lambda_terms with respect to lambda
    lam = np.asarray(lam, dtype=float)
    safe = np.where(lam > 0, lam, 1.0)
    return np.where(lam > 0, 0.25 * np.log(2.0 / safe), 0.0)


def allowed_region_integral(well: Well, energies, kernel: Callable) -> np.ndarray:
    """
    Integrate kernel(E - U, phi) between the two turning points of a well.

    Args:
        well: the well to integrate over
        energies: energies in units of U0
        kernel: callable (gap, phi) -> integrand values

    Returns:
        Array of integrals, one per energy
    """
    low, high = well.turning_pair(energies)
    lo = low[:, None]
    hi = high[:, None]

    def integrand(dl, dr):
        near_low = dl <= dr
        gap = np.where(near_low,
                       potential_drop(lo, dl, well.beta_L, well.phi_x),
                       potential_drop(hi, -dr, well.beta_L, well.phi_x))
        phi = np.where(near_low, lo + dl, hi - dr)
        return kernel(np.maximum(gap, 0.0), phi)

    return tanh_sinh(integrand, low, high)


def well_action(well: Well, energies, eta: float) -> np.ndarray:
    """Raw action eta * integral sqrt(E - U) dphi over the classically allowed region."""
    return eta * allowed_region_integral(well, energies, lambda gap, phi: np.sqrt(gap))


def inverse_velocity_integral(well: Well, energies) -> np.ndarray:
    """Integral of dphi / sqrt(E - U); half-period and normalization kernel."""
    return allowed_region_integral(well, energies, lambda gap, phi: 1.0 / np.sqrt(gap))


def bohr_sommerfeld_levels(well: Well, eta: float, ceiling: float, count: Optional[int] = None) -> np.ndarray:
    """
    Single-well levels from S(E) = pi (n + 1/2).

    Args:
        well: the well
        eta: action scale
        ceiling: upper energy bound, units of U0
        count: number of lowest levels wanted; defaults to all below ceiling

    Returns:
        Ascending array of level energies in units of U0
    """
    top = min(ceiling, well.u_top) if well.u_top is not None else ceiling
    s_top = float(well_action(well, top, eta)[0])
    available = int(math.floor(s_top / math.pi - 0.5)) + 1
    n_levels = available if count is None else count
    if n_levels > available:
        raise EmptyWellError(f"{well.side} well holds {available} levels below {top:.6g}, {n_levels} requested")

    def residual(e, n):
        return float(well_action(well, e, eta)[0]) - math.pi * (n + 0.5)

    levels = []
    for n in range(max(n_levels, 0)):
        levels.append(brentq(residual, well.u_min, top, args=(n,), xtol=1e-14))
    return np.array(levels)


class SpectrumSolver:
    """
    Near-top WKB spectrum of one bias point.
    Evaluates actions, phases, the quantization condition and the level normalizations.
    """

    def __init__(self, geometry: PotentialGeometry, eta: float):
        """Initialize the solver for a geometry and action scale."""
        self.logger = logging.getLogger(__name__)
        self.geometry = geometry
        self.eta = eta
        self.left = geometry.left_well()
        self.right = geometry.right_well()
        self.hbar_omega = 2.0 * math.sqrt(geometry.U1_min_left) / eta
        self._top_terms: Optional[Dict[str, float]] = None

    # -- actions -------------------------------------------------------------

    def _check_energy(self, energies, allow_top: bool = True) -> np.ndarray:
        e = np.atleast_1d(np.asarray(energies, dtype=float))
        upper_ok = e <= self.geometry.U_top if allow_top else e < self.geometry.U_top
        if not np.all((e > self.geometry.floor) & upper_ok):
            raise EnergyDomainError(
                f"energy outside ({self.geometry.floor:.6g}, {self.geometry.U_top:.6g}]: {e.min():.6g}..{e.max():.6g}")
        return e

    def lam(self, energies):
        return self.geometry.lambda_of(energies, self.eta)

    def raw_actions(self, energies) -> Tuple[np.ndarray, np.ndarray]:
        e = self._check_energy(energies)
        return well_action(self.left, e, self.eta), well_action(self.right, e, self.eta)

    def phases(self, energies) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Phases theta_i = Phi_i + chi/2 of both wells.

        Args:
            energies: energies in units of U0

        Returns:
            Tuple (theta1, theta2, lambda) of arrays
        """
        s_left, s_right = self.raw_actions(energies)
        lam = self.lam(np.atleast_1d(energies))
        shift = _lambda_terms(lam) + 0.5 * chi_phase(lam)
        return s_left + shift, s_right + shift, lam

    def left_phase(self, energy: float) -> float:
        lam = self.lam(energy)
        s_left = well_action(self.left, energy, self.eta)[0]
        return float(s_left + _lambda_terms(lam) + 0.5 * chi_phase(lam))

    def right_phase(self, energy: float) -> float:
        lam = self.lam(energy)
        s_right = well_action(self.right, energy, self.eta)[0]
        return float(s_right + _lambda_terms(lam) + 0.5 * chi_phase(lam))

    def action_integrals(self, energy: float) -> ActionPair:
        """
        Exact well actions and the phases Phi1, Phi2 at one energy.

        Args:
            energy: energy in units of U0, floor < E <= U_top

        Returns:
            ActionPair
        """
        s_left, s_right = self.raw_actions(energy)
        lam = float(self.lam(energy))
        extra = float(_lambda_terms(lam))
        return ActionPair(E=float(energy), Phi1=float(s_left[0]) + extra, Phi2=float(s_right[0]) + extra,
                          S_left_raw=float(s_left[0]), S_right_raw=float(s_right[0]), lam=lam)

    def top_terms(self) -> Dict[str, float]:
        """Full-barrier actions and regularized integrals at E = U_top (cached)."""
        if self._top_terms is not None:
            return self._top_terms
        g = self.geometry
        u1 = g.U1
        d_left = g.phi_top - g.tilde_phi1
        d_right = g.tilde_phi4 - g.phi_top

        def left_kernel(dl, dr):
            gap = np.where(dl <= dr,
                           potential_drop(g.tilde_phi1, dl, g.beta_L, g.phi_x),
                           potential_drop(g.phi_top, -dr, g.beta_L, g.phi_x))
            return 1.0 / np.sqrt(gap) - math.sqrt(d_left) / (dr * np.sqrt(u1 * dl))

        def right_kernel(dl, dr):
            gap = np.where(dl <= dr,
                           potential_drop(g.phi_top, dl, g.beta_L, g.phi_x),
                           potential_drop(g.tilde_phi4, -dr, g.beta_L, g.phi_x))
            return 1.0 / np.sqrt(gap) - math.sqrt(d_right) / (dl * np.sqrt(u1 * dr))

        s_left, s_right = self.raw_actions(g.U_top)
        self._top_terms = {
            "S_left": float(s_left[0]),
            "S_right": float(s_right[0]),
            "I_left": float(tanh_sinh(left_kernel, g.tilde_phi1, g.phi_top)[0]),
            "I_right": float(tanh_sinh(right_kernel, g.phi_top, g.tilde_phi4)[0]),
            "D_left": d_left,
            "D_right": d_right,
        }
        return self._top_terms

    def action_expansion(self, energy: float) -> ActionPair:
        """
        First-order singular-subtracted actions around the barrier top.

        Args:
            energy: energy in units of U0, floor < E <= U_top

        Returns:
            ActionPair built from the top expansion instead of direct quadrature
        """
        self._check_energy(energy)
        terms = self.top_terms()
        u1 = self.geometry.U1
        depth = self.geometry.U_top - energy
        lam = float(self.lam(energy))

        def expanded(full, regular, span):
            if depth <= 0:
                return full
            log_term = math.log(8.0 * span * math.sqrt(u1) / math.sqrt(depth)) + 0.5
            return full - 0.5 * self.eta * depth * regular - 0.5 * self.eta * depth / math.sqrt(u1) * log_term

        s_left = expanded(terms["S_left"], terms["I_left"], terms["D_left"])
        s_right = expanded(terms["S_right"], terms["I_right"], terms["D_right"])
        extra = float(_lambda_terms(lam))
        return ActionPair(E=float(energy), Phi1=s_left + extra, Phi2=s_right + extra,
                          S_left_raw=s_left, S_right_raw=s_right, lam=lam)

    # -- quantization --------------------------------------------------------

    def _connection_phase(self, lam):
        lam = np.asarray(lam, dtype=float)
        return chi_phase(lam) + 2.0 * _lambda_terms(lam)

    def quantization_residual(self, energies):
        """
        Residual of the near-top level condition.

        Args:
            energies: energies in units of U0, floor < E < U_top

        Returns:
            cos(S_R - S_L) + sqrt(1 + e^{-pi lam}) cos(chi + lam/2 + (lam/2) ln(2/lam) + S_R + S_L)
        """
        s_left, s_right = self.raw_actions(energies)
        lam = self.lam(np.atleast_1d(energies))
        value = (np.cos(s_right - s_left)
                 + np.sqrt(1.0 + np.exp(-math.pi * lam)) * np.cos(self._connection_phase(lam) + s_right + s_left))
        return value if np.ndim(energies) else float(value[0])

    def right_amplitude(self, energy: float) -> float:
        """Right-well amplitude B of a delocalized level."""
        s_left, s_right = self.raw_actions(energy)
        s_left, s_right = float(s_left[0]), float(s_right[0])
        lam = float(self.lam(energy))
        bracket = (math.sqrt(1.0 + math.exp(-math.pi * lam))
                   * math.sin(float(self._connection_phase(lam)) + s_left + s_right)
                   - math.sin(s_left - s_right))
        return math.exp(0.5 * math.pi * lam) * bracket

    def single_normalization(self, well: Well, energy: float) -> float:
        """G of a state localized in one well."""
        return math.sqrt(float(inverse_velocity_integral(well, energy)[0]) / (2.0 * self.eta))

    def normalization(self, energy: float, amplitude: float) -> float:
        """G of a delocalized state with right-well amplitude B."""
        j_left = float(inverse_velocity_integral(self.left, energy)[0])
        j_right = float(inverse_velocity_integral(self.right, energy)[0])
        return math.sqrt((j_left + amplitude ** 2 * j_right) / (2.0 * self.eta))

    def levels_in_window(self, window: Tuple[float, float]) -> List[float]:
        """
        All roots of the quantization condition inside a window.

        Args:
            window: (E_low, E_high) in units of U0, clipped to the double-well range

        Returns:
            Ascending list of root energies
        """
        e_low = max(window[0], self.geometry.floor + 1e-12)
        e_high = min(window[1], self.geometry.U_top - 10.0 * global_vars.TOL_E)
        if e_high <= e_low:
            raise NotEnoughLevelsError(f"empty window {window}")
        grid = np.linspace(e_low, e_high, global_vars.SCAN_POINTS)
        values = self.quantization_residual(grid)
        brackets = np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) <= 0)[0]
        roots = []
        for i in brackets:
            if values[i] == 0.0:
                roots.append(float(grid[i]))
                continue
            if values[i + 1] == 0.0:
                continue
            roots.append(brentq(self.quantization_residual, grid[i], grid[i + 1], xtol=1e-12))
        roots = sorted(set(roots))
        self.logger.debug(f"{len(roots)} quantization roots in [{e_low:.6g}, {e_high:.6g}]")
        return roots

    def pair_from_roots(self, e_f1: float, e_f2: float,
                        indices: Optional[Tuple[int, int]] = None) -> NearTopPair:
        """Attach amplitudes, normalizations and quantum numbers to two quantization roots."""
        b_f1, b_f2 = self.right_amplitude(e_f1), self.right_amplitude(e_f2)
        mean = 0.5 * (e_f1 + e_f2)
        if indices is None:
            theta1, theta2, _ = self.phases(mean)
            indices = (int(round((theta1[0] - 0.5 * math.pi) / math.pi)),
                       int(round((theta2[0] - 0.5 * math.pi) / math.pi)))
        return NearTopPair(
            E_f1=e_f1, E_f2=e_f2,
            lambda_f1=float(self.lam(e_f1)), lambda_f2=float(self.lam(e_f2)),
            B_f1=b_f1, B_f2=b_f2,
            G_f1=self.normalization(e_f1, b_f1), G_f2=self.normalization(e_f2, b_f2),
            G_L=self.single_normalization(self.left, mean),
            G_R=self.single_normalization(self.right, mean),
            k_left=indices[0], k_right=indices[1],
        )

    def near_top_levels(self, window: Tuple[float, float],
                        indices: Optional[Tuple[int, int]] = None) -> NearTopPair:
        """
        Solve the quantization condition in a window and return its two highest roots.

        Args:
            window: (E_low, E_high) in units of U0
            indices: left/right quantum numbers of the pair, derived from the phases if omitted

        Returns:
            NearTopPair with B and G factors
        """
        roots = self.levels_in_window(window)
        if len(roots) < 2:
            raise NotEnoughLevelsError(f"{len(roots)} root(s) in window [{window[0]:.6g}, {window[1]:.6g}]")
        return self.pair_from_roots(roots[-1], roots[-2], indices)

    def well_levels(self, ceiling: float, left_count: Optional[int] = None,
                    right_count: Optional[int] = None) -> WellLevels:
        """
        Localized levels of both wells below a ceiling.

        Args:
            ceiling: usually E_f2, units of U0
            left_count: number of left levels below the pair (all below ceiling if omitted)
            right_count: number of right levels below the pair (all below ceiling if omitted)

        Returns:
            WellLevels with E_0 from the harmonic ground level
        """
        g = self.geometry
        e_0 = g.U_min_left + 0.5 * self.hbar_omega
        left = bohr_sommerfeld_levels(self.left, self.eta, ceiling, left_count)
        right = bohr_sommerfeld_levels(self.right, self.eta, ceiling, right_count)
        if left.size == 0:
            raise EmptyWellError(f"no left-well level below {ceiling:.6g}")
        if right.size == 0:
            raise EmptyWellError(f"no right-well level below {ceiling:.6g}")
        index_L, index_R = left.size - 1, right.size - 1
        e_L = e_0 if index_L == 0 else float(left[-1])
        hbar_omega_right = 2.0 * math.sqrt(g.U1_min_right) / self.eta
        e_R = g.U_min_right + 0.5 * hbar_omega_right if index_R == 0 else float(right[-1])
        return WellLevels(
            E_0=e_0, E_L=e_L, E_R=e_R,
            n_left=int(left.size), n_right=int(right.size),
            index_L=index_L, index_R=index_R,
            G_0=self.single_normalization(self.left, e_0),
            G_L=self.single_normalization(self.left, e_L),
            G_R=self.single_normalization(self.right, e_R),
        )


def phase_derivatives(solver: SpectrumSolver, energy: float) -> Dict[str, float]:
    """
    Derivatives of theta_i = Phi_i + chi/2 with respect to E and phi_x.

    Args:
        solver: SpectrumSolver at the bias point
        energy: energy in units of U0 below the top

    Returns:
        Dict with alpha1, alpha2, beta1, beta2 and the barrier-top limits beta1_top, beta2_top
    """
    g = solver.geometry
    eta = solver.eta
    lam = float(solver.lam(energy))
    depth = g.U_top - energy
    dchi = float(dchi_phase(lam))
    weight = float(_log_weight(lam)) + 0.5 * dchi

    def moment(gap, phi):
        return (phi - g.phi_x) / np.sqrt(gap)

    j_left = float(inverse_velocity_integral(solver.left, energy)[0])
    j_right = float(inverse_velocity_integral(solver.right, energy)[0])
    k_left = float(allowed_region_integral(solver.left, energy, moment)[0])
    k_right = float(allowed_region_integral(solver.right, energy, moment)[0])

    root_u1 = math.sqrt(g.U1)
    dlam_de = -eta / root_u1
    bend = g.beta_L * math.cos(g.phi_top) - 1.0
    dlam_dphix = eta / root_u1 * (-(g.phi_top - g.phi_x)
                                  - g.beta_L * math.sin(g.phi_top) * depth / (4.0 * g.U1 * bend))

    terms = solver.top_terms()
    scale = (eta ** 2 * g.U1 / 2.0) ** 0.25

    def top_limit(regular, span):
        return (0.5 * eta * regular
                + 0.5 * eta / root_u1 * math.log(8.0 * scale * span / 2.0 ** 0.25)
                - 0.5 * eta / root_u1 * dchi)

    return {
        "alpha1": 0.5 * eta * k_left + weight * dlam_dphix,
        "alpha2": 0.5 * eta * k_right + weight * dlam_dphix,
        "beta1": 0.5 * eta * j_left + weight * dlam_de,
        "beta2": 0.5 * eta * j_right + weight * dlam_de,
        "beta1_top": top_limit(terms["I_left"], terms["D_left"]),
        "beta2_top": top_limit(terms["I_right"], terms["D_right"]),
    }


def _solver_at(beta_L: float, phi_x: float, eta: float) -> SpectrumSolver:
    return SpectrumSolver(geometry_for(beta_L, phi_x), eta)


def _left_resonance(solver: SpectrumSolver, k1: int) -> float:
    """Energy where the left phase equals pi/2 + pi k1."""
    g = solver.geometry
    target = 0.5 * math.pi + math.pi * k1

    def residual(e):
        return solver.left_phase(e) - target

    low = g.U_min_left + 1e-9
    if residual(g.U_top) < 0:
        raise NoCrossingError(f"left level {k1} lies above the barrier top at phi_x={g.phi_x:.6g}")
    if residual(low) > 0:
        raise NoCrossingError(f"left level {k1} below the well bottom at phi_x={g.phi_x:.6g}")
    return brentq(residual, low, g.U_top, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def locate_crossing_seed(params: DeviceParams, scales: DerivedScales, left_level: int = 1,
                         lambda_target: float = global_vars.LAMBDA_TARGET) -> float:
    """
    Find the bias at which left-well level left_level sits at lambda = lambda_target.

    Args:
        params: device parameters (phi_x ignored)
        scales: derived scales
        left_level: left-well quantum number of the crossing level
        lambda_target: barrier proximity at which the level is placed

    Returns:
        phi_x seed for crossing_point
    """
    eta = scales.eta
    fold = fold_bias(params.beta_L)

    def offset(phi_x):
        try:
            solver = _solver_at(params.beta_L, phi_x, eta)
        except BistabilityLostError:
            return -0.5 - left_level
        g = solver.geometry
        energy = g.U_top - lambda_target * math.sqrt(g.U1) / eta
        if energy <= g.U_min_left:
            return -0.5 - left_level
        return (solver.left_phase(energy) - 0.5 * math.pi) / math.pi - left_level

    grid = np.linspace(0.0, 0.98 * fold, 41)
    values = [offset(p) for p in grid]
    for i in range(len(grid) - 1):
        if values[i] * values[i + 1] <= 0:
            seed = brentq(offset, grid[i], grid[i + 1], xtol=1e-10)
            logger.info(f"crossing seed for left level {left_level}: phi_x={seed:.8f}")
            return seed
    raise NoCrossingError(f"left level {left_level} never reaches lambda={lambda_target} inside the bistable window")


def crossing_point(params: DeviceParams, scales: DerivedScales, seed_phi_x: Optional[float] = None,
                   left_level: int = 1, lambda_target: float = global_vars.LAMBDA_TARGET) -> CrossingPoint:
    """
    Locate the anticrossing by solving both phase conditions.

    Args:
        params: device parameters
        scales: derived scales
        seed_phi_x: starting bias; located automatically from left_level when omitted
        left_level: left-well quantum number used for the automatic seed
        lambda_target: barrier proximity used to pick the integers k1, k2 at the seed

    Returns:
        CrossingPoint with the linearization coefficients and the gap
    """
    eta = scales.eta
    beta_L = params.beta_L
    if seed_phi_x is None:
        seed_phi_x = locate_crossing_seed(params, scales, left_level, lambda_target)
    seed_solver = _solver_at(beta_L, seed_phi_x, eta)
    g = seed_solver.geometry
    e_seed = g.U_top - lambda_target * math.sqrt(g.U1) / eta
    theta1, theta2, _ = seed_solver.phases(e_seed)
    k1 = int(round((theta1[0] - 0.5 * math.pi) / math.pi))
    k2 = int(round((theta2[0] - 0.5 * math.pi) / math.pi))
    logger.debug(f"crossing integers at seed {seed_phi_x:.6g}: k1={k1}, k2={k2}")

    def outer(phi_x):
        solver = _solver_at(beta_L, phi_x, eta)
        energy = _left_resonance(solver, k1)
        return solver.right_phase(energy) - (0.5 * math.pi + math.pi * k2)

    fold = fold_bias(beta_L)
    limit = 0.999 * fold
    f_seed = outer(seed_phi_x)
    dphi = 1e-4
    slope = (outer(min(seed_phi_x + dphi, limit)) - f_seed) / dphi
    step = -1.5 * f_seed / slope if slope != 0 else 1e-2
    lo = hi = seed_phi_x
    f_lo = f_hi = f_seed
    for _ in range(12):
        if f_lo * f_hi <= 0 and lo != hi:
            break
        candidate = float(np.clip(seed_phi_x + step, -limit, limit))
        f_candidate = outer(candidate)
        if f_candidate * f_seed <= 0:
            lo, hi, f_lo, f_hi = seed_phi_x, candidate, f_seed, f_candidate
            break
        step *= 1.6
    else:
        raise NoCrossingError(f"no sign change of the right phase condition near phi_x={seed_phi_x:.6g}")
    if f_lo * f_hi > 0:
        raise NoCrossingError(f"no sign change of the right phase condition near phi_x={seed_phi_x:.6g}")
    phi_x0 = brentq(outer, min(lo, hi), max(lo, hi), xtol=1e-13, rtol=4 * np.finfo(float).eps)

    solver = _solver_at(beta_L, phi_x0, eta)
    e0c = _left_resonance(solver, k1)
    lambda0 = float(solver.lam(e0c))
    coeffs = phase_derivatives(solver, e0c)
    gap = math.sqrt(math.exp(-math.pi * lambda0) / (coeffs["beta1"] * coeffs["beta2"]))
    logger.info(f"crossing at phi_x0={phi_x0:.10f}, lambda0={lambda0:.4f}, gap={gap:.4e} U0")
    return CrossingPoint(
        phi_x0=phi_x0, E0c=e0c, lambda0=lambda0, k1=k1, k2=k2,
        alpha1=coeffs["alpha1"], alpha2=coeffs["alpha2"],
        beta1=coeffs["beta1"], beta2=coeffs["beta2"], gap=gap,
        beta1_top=coeffs["beta1_top"], beta2_top=coeffs["beta2_top"],
        hbar_omega=solver.hbar_omega,
    )


def hyperbola_spectrum(delta_phi_x: float, crossing: CrossingPoint) -> HyperbolaPoint:
    """
    Both anticrossing branches from the linearized phase conditions.

    Args:
        delta_phi_x: bias offset from the crossing
        crossing: CrossingPoint

    Returns:
        HyperbolaPoint with delta_E_upper >= delta_E_lower
    """
    a1, a2, b1, b2 = crossing.alpha1, crossing.alpha2, crossing.beta1, crossing.beta2
    coupling = math.exp(-math.pi * crossing.lambda0)
    linear = (a1 * b2 + a2 * b1) * delta_phi_x
    root = math.sqrt((a1 * b2 - a2 * b1) ** 2 * delta_phi_x ** 2 + b1 * b2 * coupling)
    upper = -(linear - root) / (2.0 * b1 * b2)
    lower = -(linear + root) / (2.0 * b1 * b2)
    extrapolated = max(abs(upper), abs(lower)) >= 0.5 * crossing.hbar_omega
    if extrapolated:
        logger.warning(f"hyperbola used outside its range at delta_phi_x={delta_phi_x:.4e}")
    return HyperbolaPoint(delta_E_upper=upper, delta_E_lower=lower, extrapolated=extrapolated)
