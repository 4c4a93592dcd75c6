"""
Matrix Elements Module for rf-SQUID Escape Simulator
Handles classical trajectories and the quasiclassical transition matrix elements built on them.

Time is the dimensionless tau = t * sqrt(U0/M); one unit of tau is DerivedScales.time_unit seconds.
Along a trajectory 1/2 (dphi/dtau)^2 + U(phi)/U0 = E/U0.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.fft import dct, dst
from scipy.integrate import trapezoid

from src import global_vars
from src.device_potential import PotentialGeometry, Well, potential_drop, reduced_potential, reduced_slope
from src.errors import EnergyDomainError
from src.wkb_spectrum import NearTopPair, WellLevels, inverse_velocity_integral

logger = logging.getLogger(__name__)

BOUND_SLACK = 1e-9  # |<a|e^{i phi/2}|b>| <= 1 up to this much

Zeta = Callable[[np.ndarray], np.ndarray]


def half_flux_exponential(phi: np.ndarray) -> np.ndarray:
    """The relaxation operator e^{i phi/2}."""
    return np.exp(0.5j * np.asarray(phi, dtype=float))


def coordinate(phi: np.ndarray) -> np.ndarray:
    """The pumping operator phi."""
    return np.asarray(phi, dtype=float)


@dataclass(frozen=True)
class Trajectory:
    """Represents one half period of classical motion, from the inner to the outer turning point."""
    E: float  # in units of U0
    side: str
    sigma: np.ndarray  # uniform angle grid on [0, pi]
    tau: np.ndarray  # dimensionless time at each sample
    phi: np.ndarray
    velocity: np.ndarray  # dphi/dtau
    dtau_dsigma: np.ndarray
    beta_L: float
    phi_x: float
    time_unit: float = 1.0  # seconds per unit of tau

    @property
    def half_period(self) -> float:
        return float(self.tau[-1])

    @property
    def period_tau(self) -> float:
        return 2.0 * self.half_period

    @property
    def period(self) -> float:
        """Period of the motion in seconds."""
        return self.period_tau * self.time_unit

    @property
    def times(self) -> np.ndarray:
        """Sample times in seconds."""
        return self.tau * self.time_unit

    @property
    def samples(self) -> Tuple[Tuple[float, float], ...]:
        return tuple(zip(self.times.tolist(), self.phi.tolist()))

    def energy_error(self) -> float:
        """Largest |1/2 v^2 + U - E| along the samples, units of U0."""
        well_u = reduced_potential(self.phi, self.beta_L, self.phi_x)
        return float(np.max(np.abs(0.5 * self.velocity ** 2 + well_u - self.E)))

    def time_integral(self, values: np.ndarray) -> complex:
        """Integral of sampled values over the half period."""
        return complex(trapezoid(values * self.dtau_dsigma, self.sigma))


def _trajectory_samples(well: Well, energy: float, samples: int):
    """Angle grid, coordinates, velocities and dtau/dsigma for phi = c +- h cos(sigma)."""
    low, high = well.turning_pair(energy)
    low, high = float(low[0]), float(high[0])
    half_width = 0.5 * (high - low)
    centre = 0.5 * (high + low)
    # the inner turning point is the start of the motion
    start_high = well.outer_is_low
    start, end = (high, low) if start_high else (low, high)
    direction = -1.0 if start_high else 1.0

    sigma = np.linspace(0.0, math.pi, samples)
    d_start = 2.0 * half_width * np.sin(0.5 * sigma) ** 2
    d_end = 2.0 * half_width * np.cos(0.5 * sigma) ** 2
    phi = centre - direction * half_width * np.cos(sigma)
    near_start = sigma <= 0.5 * math.pi
    drop = np.where(near_start,
                    potential_drop(start, direction * d_start, well.beta_L, well.phi_x),
                    potential_drop(end, -direction * d_end, well.beta_L, well.phi_x))
    with np.errstate(divide="ignore", invalid="ignore"):
        q = drop / (d_start * d_end)
    q[0] = abs(float(reduced_slope(start, well.beta_L, well.phi_x))) / (2.0 * half_width)
    q[-1] = abs(float(reduced_slope(end, well.beta_L, well.phi_x))) / (2.0 * half_width)
    dtau_dsigma = 1.0 / np.sqrt(2.0 * q)
    velocity = direction * half_width * np.sin(sigma) * np.sqrt(2.0 * q)
    return sigma, phi, velocity, dtau_dsigma


def _cumulative_time(sigma: np.ndarray, rate: np.ndarray) -> np.ndarray:
    """
    Integrate a rate sampled on [0, pi] from 0 to each sample through its cosine series.

    The series comes from a type-I DCT of the samples; its term-by-term integral is a
    type-I DST over the interior samples.
    """
    n = sigma.size
    coeffs = dct(rate, type=1) / (n - 1)
    coeffs[0] *= 0.5
    coeffs[-1] *= 0.5
    modes = np.arange(1, n - 1)
    interior = 0.5 * dst(coeffs[1:-1] / modes, type=1)
    tau = np.empty_like(sigma)
    tau[0] = 0.0
    tau[1:-1] = coeffs[0] * sigma[1:-1] + interior
    tau[-1] = coeffs[0] * math.pi
    return tau


def classical_trajectory(energy: float, well: Well, time_unit: float = 1.0,
                         samples: int = global_vars.TRAJECTORY_SAMPLES) -> Trajectory:
    """
    Build the half-period trajectory of a well at one energy.

    Args:
        energy: energy in units of U0, inside the well
        well: the well the motion is confined to
        time_unit: seconds per unit of tau, for SI periods
        samples: number of samples on the uniform angle grid

    Returns:
        Trajectory starting at the inner turning point at tau = 0
    """
    ceiling = well.u_top if well.u_top is not None else math.inf
    if not (well.u_min < energy < ceiling):
        raise EnergyDomainError(f"E={energy:.6g} outside the {well.side} well ({well.u_min:.6g}, {ceiling:.6g})")
    sigma, phi, velocity, dtau_dsigma = _trajectory_samples(well, energy, samples)
    tau = _cumulative_time(sigma, dtau_dsigma)
    logger.debug(f"{well.side} trajectory at E={energy:.10g}: half period {tau[-1]:.10g}")
    return Trajectory(E=float(energy), side=well.side, sigma=sigma, tau=tau, phi=phi,
                      velocity=velocity, dtau_dsigma=dtau_dsigma, beta_L=well.beta_L,
                      phi_x=well.phi_x, time_unit=time_unit)


def well_normalization(well: Well, energy: float, eta: float) -> float:
    """G = sqrt(J(E) / (2 eta)) with J the turning-point integral of 1/sqrt(E - U)."""
    return math.sqrt(float(inverse_velocity_integral(well, energy)[0]) / (2.0 * eta))


@dataclass(frozen=True)
class MatrixElementSet:
    """Represents every matrix element entering the rates and the drive."""
    me_0_f1: complex  # <0|phi|f1>
    me_0_f2: complex
    me_exp_f1f2: complex  # <f1|e^{i phi/2}|f2>
    me_exp_Lf1: complex
    me_exp_Lf2: complex
    me_exp_Rf1: complex
    me_exp_Rf2: complex
    me_00_exp: complex  # <0|e^{i phi/2}|0>

    def relaxation_elements(self) -> Dict[str, complex]:
        return {
            "f1f2": self.me_exp_f1f2,
            "Lf1": self.me_exp_Lf1,
            "Lf2": self.me_exp_Lf2,
            "Rf1": self.me_exp_Rf1,
            "Rf2": self.me_exp_Rf2,
            "00": self.me_00_exp,
        }

    def bound_violations(self) -> Dict[str, float]:
        """Relaxation elements whose magnitude exceeds the unitary-operator bound of one."""
        return {name: abs(value) for name, value in self.relaxation_elements().items()
                if abs(value) > 1.0 + BOUND_SLACK}


class MatrixElementCalculator:
    """
    Quasiclassical matrix elements for one bias point.
    Caches trajectories per (well, energy) and combines them with the WKB normalizations.
    """

    def __init__(self, geometry: PotentialGeometry, eta: float, time_unit: float = 1.0):
        """Initialize the calculator for a geometry and action scale."""
        self.logger = logging.getLogger(__name__)
        self.geometry = geometry
        self.eta = eta
        self.time_unit = time_unit
        self.wells = {"left": geometry.left_well(), "right": geometry.right_well()}
        self._trajectories: Dict[Tuple[str, float], Trajectory] = {}

    def trajectory(self, side: str, energy: float) -> Trajectory:
        key = (side, float(energy))
        if key not in self._trajectories:
            self._trajectories[key] = classical_trajectory(energy, self.wells[side], self.time_unit)
        return self._trajectories[key]

    def normalization(self, side: str, energy: float) -> float:
        """G of a state localized in one well."""
        return well_normalization(self.wells[side], energy, self.eta)

    def well_matrix_element(self, E_a: float, E_b: float, side: str, zeta: Zeta, ell: int,
                            G_a: Optional[float] = None, G_b: Optional[float] = None) -> complex:
        """
        Element between two states of the same well from the trajectory at their midpoint energy.

        Args:
            E_a: first energy, units of U0
            E_b: second energy, units of U0
            side: "left" or "right"
            zeta: operator as a function of phi
            ell: quantum-number difference
            G_a: normalization of the first state, evaluated at E_a when omitted
            G_b: normalization of the second state, evaluated at E_b when omitted

        Returns:
            Complex matrix element
        """
        G_a = self.normalization(side, E_a) if G_a is None else G_a
        G_b = self.normalization(side, E_b) if G_b is None else G_b
        return well_matrix_element(self.trajectory(side, 0.5 * (E_a + E_b)), zeta, ell, self.eta, G_a, G_b)

    def delocalized_matrix_element(self, pair: NearTopPair, zeta: Zeta) -> complex:
        """<f2|zeta|f1> with the orthogonality correction between the two wells."""
        mean = pair.mean_energy
        left = self.trajectory("left", mean)
        right = self.trajectory("right", mean)
        t1, t2 = left.period_tau, right.period_tau
        left_part = left.time_integral(zeta(left.phi))
        right_part = right.time_integral(zeta(right.phi))
        bracket = t2 / (t1 + t2) * left_part - t1 / (t1 + t2) * right_part
        prefactor = (1.0 - pair.B_f1 * pair.B_f2) / (math.sqrt(2.0) * self.eta * pair.G_f1 * pair.G_f2)
        return prefactor * bracket

    def localized_to_pair(self, E_loc: float, G_loc: float, side: str, index: int,
                          pair: NearTopPair, which: int, zeta: Zeta) -> complex:
        """
        Element between a localized level and one member of the delocalized pair.

        Args:
            E_loc: energy of the localized level, units of U0
            G_loc: its normalization
            side: well of the localized level
            index: its quantum number in that well
            pair: the delocalized pair
            which: 1 for f1, 2 for f2
            zeta: operator

        Returns:
            Complex matrix element weighted by the pair member's amplitude in that well
        """
        e_f = pair.E_f1 if which == 1 else pair.E_f2
        g_f = pair.G_f1 if which == 1 else pair.G_f2
        amplitude = 1.0
        k = pair.k_left
        if side == "right":
            amplitude = pair.B_f1 if which == 1 else pair.B_f2
            k = pair.k_right
        ell = abs(k - index)
        return amplitude * self.well_matrix_element(E_loc, e_f, side, zeta, ell, G_loc, g_f)

    def build_element_set(self, levels: WellLevels, pair: NearTopPair) -> MatrixElementSet:
        """
        Assemble every element used by the kinetics.

        Args:
            levels: localized levels below the pair
            pair: the delocalized pair

        Returns:
            MatrixElementSet
        """
        ground = self.trajectory("left", levels.E_0)
        me_00 = well_matrix_element(ground, half_flux_exponential, 0, self.eta, levels.G_0, levels.G_0)
        elements = MatrixElementSet(
            me_0_f1=self.localized_to_pair(levels.E_0, levels.G_0, "left", 0, pair, 1, coordinate),
            me_0_f2=self.localized_to_pair(levels.E_0, levels.G_0, "left", 0, pair, 2, coordinate),
            me_exp_f1f2=self.delocalized_matrix_element(pair, half_flux_exponential),
            me_exp_Lf1=self.localized_to_pair(levels.E_L, levels.G_L, "left", levels.index_L, pair, 1,
                                              half_flux_exponential),
            me_exp_Lf2=self.localized_to_pair(levels.E_L, levels.G_L, "left", levels.index_L, pair, 2,
                                              half_flux_exponential),
            me_exp_Rf1=self.localized_to_pair(levels.E_R, levels.G_R, "right", levels.index_R, pair, 1,
                                              half_flux_exponential),
            me_exp_Rf2=self.localized_to_pair(levels.E_R, levels.G_R, "right", levels.index_R, pair, 2,
                                              half_flux_exponential),
            me_00_exp=me_00,
        )
        for name, value in elements.relaxation_elements().items():
            if not np.isfinite(value):
                raise EnergyDomainError(f"matrix element {name} is not finite")
        for name, size in elements.bound_violations().items():
            self.logger.warning(f"|<{name}>| = {size:.4f} exceeds the operator bound")
        return elements


def well_matrix_element(trajectory: Trajectory, zeta: Zeta, ell: int, eta: float,
                        G_a: float, G_b: float) -> complex:
    """
    Time-domain element (1/(sqrt(2) eta G_a G_b)) * int_0^{T/2} dtau zeta(phi) cos(2 pi ell tau / T).

    Args:
        trajectory: trajectory at the midpoint energy
        zeta: operator as a function of phi
        ell: quantum-number difference
        eta: action scale
        G_a: normalization of the bra state
        G_b: normalization of the ket state

    Returns:
        Complex matrix element
    """
    phase = np.cos(2.0 * math.pi * ell * trajectory.tau / trajectory.period_tau)
    integral = trajectory.time_integral(zeta(trajectory.phi) * phase)
    return integral / (math.sqrt(2.0) * eta * G_a * G_b)
