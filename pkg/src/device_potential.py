"""
Device Potential Module for rf-SQUID Escape Simulator
Handles SI device parameters, derived scales and the double-well potential geometry.

Internally every energy is expressed in units of U0 and every coordinate is the
dimensionless flux phi; conversion to SI happens only through DerivedScales.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import constants as sp_const
from scipy.optimize import brentq

from src import global_vars
from src.errors import (
    BistabilityLostError,
    DegenerateTurningPointError,
    EnergyDomainError,
    ParameterDomainError,
)

logger = logging.getLogger(__name__)

HBAR = sp_const.hbar
E_CHARGE = sp_const.e
K_B = sp_const.k
FLUX_QUANTUM = sp_const.physical_constants["mag. flux quantum"][0]

# Above this screening parameter a second pair of wells appears next to the main cell.
MAX_BETA_L = 4.6


@dataclass(frozen=True)
class DeviceParams:
    """Represents the SI inputs of one rf-SQUID operating point."""
    beta_L: float
    L: float  # in henry
    C: float  # in farad
    R_eff: float = global_vars.DEFAULT_R_EFF  # in ohm
    T: float = global_vars.DEFAULT_TEMPERATURE  # in kelvin
    phi_x: float = 0.0
    nu: float = 0.0  # in hertz
    I_amp: float = 0.0  # in ampere

    def validate(self) -> "DeviceParams":
        """Raise ParameterDomainError when a field is outside its physical domain."""
        checks = (
            ("L", self.L > 0),
            ("C", self.C > 0),
            ("R_eff", self.R_eff > 0),
            ("T", self.T >= 0),
            ("nu", self.nu >= 0),
            ("I_amp", self.I_amp >= 0),
            ("beta_L", 0 <= self.beta_L < MAX_BETA_L),
        )
        for name, ok in checks:
            value = getattr(self, name)
            if not ok or not math.isfinite(value):
                raise ParameterDomainError(f"{name}={value!r} is outside its domain")
        if not math.isfinite(self.phi_x):
            raise ParameterDomainError(f"phi_x={self.phi_x!r} is not finite")
        return self

    def with_phi_x(self, phi_x: float) -> "DeviceParams":
        return replace(self, phi_x=float(phi_x))


@dataclass(frozen=True)
class DerivedScales:
    """Represents the energy, mass and action scales derived from DeviceParams."""
    U0: float  # in joule
    M: float  # in joule * second^2
    Ic: float  # in ampere
    eta: float  # sqrt(2 M U0) / hbar
    Omega_p_left: float  # in rad/s
    Omega_p_right: float  # in rad/s

    @property
    def omega0(self) -> float:
        """Angular frequency sqrt(U0/M) of the bare inductive parabola."""
        return math.sqrt(self.U0 / self.M)

    @property
    def time_unit(self) -> float:
        """Seconds per unit of dimensionless time."""
        return math.sqrt(self.M / self.U0)

    @property
    def hbar_omega_left(self) -> float:
        """Left-well plasma quantum in units of U0."""
        return HBAR * self.Omega_p_left / self.U0

    def to_joule(self, energy):
        """Convert an energy in units of U0 to joule."""
        return energy * self.U0


@dataclass(frozen=True)
class Well:
    """Represents one potential well and the wall it is bounded by on each side."""
    side: str  # "left", "right" or "single"
    beta_L: float
    phi_x: float
    phi_min: float
    u_min: float  # in units of U0
    curvature: float  # U1_min in units of U0
    phi_top: Optional[float] = None
    u_top: Optional[float] = None  # in units of U0

    @property
    def outer_is_low(self) -> bool:
        """True when the outer turning point is the lower coordinate."""
        return self.side != "right"

    def _outer_wall(self, energies: np.ndarray, sign: float) -> np.ndarray:
        reach = np.sqrt(2.0 * (np.max(energies) + self.beta_L)) + 0.5
        return np.full_like(energies, self.phi_x + sign * reach)

    def turning_pair(self, energies) -> Tuple[np.ndarray, np.ndarray]:
        """
        Solve U(phi) = E on both sides of the minimum.

        Args:
            energies: scalar or array of energies in units of U0

        Returns:
            Tuple (low, high) of turning-point arrays; low < phi_min < high
        """
        e = np.atleast_1d(np.asarray(energies, dtype=float))
        centre = np.full_like(e, self.phi_min)
        if self.side == "left":
            low_wall, high_wall = self._outer_wall(e, -1.0), np.full_like(e, self.phi_top)
        elif self.side == "right":
            low_wall, high_wall = np.full_like(e, self.phi_top), self._outer_wall(e, 1.0)
        else:
            low_wall, high_wall = self._outer_wall(e, -1.0), self._outer_wall(e, 1.0)

        def residual(phi):
            return reduced_potential(phi, self.beta_L, self.phi_x) - e

        def slope(phi):
            return reduced_slope(phi, self.beta_L, self.phi_x)

        low = _bracketed_newton(residual, slope, low_wall, centre)
        high = _bracketed_newton(residual, slope, centre, high_wall)
        if self.phi_top is not None:
            at_top = e >= self.u_top
            if self.side == "left":
                high = np.where(at_top, self.phi_top, high)
            else:
                low = np.where(at_top, self.phi_top, low)
        return low, high


@dataclass(frozen=True)
class PotentialGeometry:
    """Represents the stationary points of the double well; energies in units of U0."""
    beta_L: float
    phi_x: float
    phi_min_left: float
    phi_min_right: float
    phi_top: float
    U_min_left: float
    U_min_right: float
    U_top: float
    U1: float  # barrier-top curvature parameter
    U1_min_left: float
    U1_min_right: float
    tilde_phi1: float  # left turning point at E = U_top
    tilde_phi4: float  # right turning point at E = U_top

    @property
    def floor(self) -> float:
        return max(self.U_min_left, self.U_min_right)

    def left_well(self) -> Well:
        return Well("left", self.beta_L, self.phi_x, self.phi_min_left, self.U_min_left,
                    self.U1_min_left, self.phi_top, self.U_top)

    def right_well(self) -> Well:
        return Well("right", self.beta_L, self.phi_x, self.phi_min_right, self.U_min_right,
                    self.U1_min_right, self.phi_top, self.U_top)

    def well(self, side: str) -> Well:
        return self.left_well() if side == "left" else self.right_well()

    def lambda_of(self, energies, eta: float):
        """Barrier-proximity parameter for energies in units of U0."""
        return eta * (self.U_top - np.asarray(energies, dtype=float)) / math.sqrt(self.U1)


@dataclass(frozen=True)
class TurningPoints:
    """Represents the four classical turning points at one energy."""
    E: float  # in units of U0
    phi1: float
    phi2: float
    phi3: float
    phi4: float
    tilde_phi1: float
    tilde_phi4: float


def reduced_potential(phi, beta_L: float, phi_x: float):
    """U(phi)/U0 = (phi - phi_x)^2 / 2 + beta_L cos(phi)."""
    phi = np.asarray(phi, dtype=float)
    return 0.5 * (phi - phi_x) ** 2 + beta_L * np.cos(phi)


def reduced_slope(phi, beta_L: float, phi_x: float):
    phi = np.asarray(phi, dtype=float)
    return (phi - phi_x) - beta_L * np.sin(phi)


def reduced_curvature(phi, beta_L: float, phi_x: float):
    phi = np.asarray(phi, dtype=float)
    return 1.0 - beta_L * np.cos(phi)


def potential(phi, params: DeviceParams, scales: DerivedScales):
    """Potential energy in joule."""
    return scales.U0 * reduced_potential(phi, params.beta_L, params.phi_x)


def potential_derivative(phi, params: DeviceParams, scales: DerivedScales):
    """First derivative dU/dphi in joule."""
    return scales.U0 * reduced_slope(phi, params.beta_L, params.phi_x)


def potential_curvature(phi, params: DeviceParams, scales: DerivedScales):
    """Second derivative d2U/dphi2 in joule."""
    return scales.U0 * reduced_curvature(phi, params.beta_L, params.phi_x)


def _sin_minus_identity(x: np.ndarray) -> np.ndarray:
    x2 = x * x
    series = -x * x2 * (1 / 6 - x2 * (1 / 120 - x2 * (1 / 5040 - x2 * (
        1 / 362880 - x2 * (1 / 39916800 - x2 / 6227020800)))))
    return np.where(np.abs(x) < 0.3, series, np.sin(x) - x)


def _cos_remainder(x: np.ndarray) -> np.ndarray:
    # 1 - cos(x) - x^2/2
    x2 = x * x
    series = -x2 * x2 * (1 / 24 - x2 * (1 / 720 - x2 * (1 / 40320 - x2 * (
        1 / 3628800 - x2 * (1 / 479001600 - x2 / 87178291200)))))
    return np.where(np.abs(x) < 0.3, series, 2.0 * np.sin(0.5 * x) ** 2 - 0.5 * x2)


def potential_drop(a, x, beta_L: float, phi_x: float):
    """
    Evaluate U(a) - U(a + x) in units of U0 without cancellation for small x.

    Args:
        a: reference coordinate (a turning point or the barrier top)
        x: signed offset from a
        beta_L: screening parameter
        phi_x: flux bias

    Returns:
        Array of potential drops, same shape as broadcast(a, x)
    """
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    sin_a = np.sin(a)
    cos_a = np.cos(a)
    slope = (a - phi_x) - beta_L * sin_a
    return (-slope * x
            + beta_L * sin_a * _sin_minus_identity(x)
            + 0.5 * (beta_L * cos_a - 1.0) * x * x
            + beta_L * cos_a * _cos_remainder(x))


def _bracketed_newton(func: Callable, dfunc: Callable, end_a: np.ndarray, end_b: np.ndarray,
                      max_iter: int = 200) -> np.ndarray:
    """Vectorised safeguarded Newton on brackets whose ends straddle a sign change."""
    a = np.array(end_a, dtype=float)
    b = np.array(end_b, dtype=float)
    fa = func(a)
    x = 0.5 * (a + b)
    for _ in range(max_iter):
        fx = func(x)
        same = np.sign(fx) == np.sign(fa)
        a, fa = np.where(same, x, a), np.where(same, fx, fa)
        b = np.where(same, b, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = x - fx / dfunc(x)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        inside = np.isfinite(step) & (step > lo) & (step < hi)
        x_new = np.where(inside, step, 0.5 * (a + b))
        done = (np.abs(fx) <= 1e-15) | (hi - lo <= 1e-15 * (1.0 + np.abs(x)))
        x_new = np.where(done, x, x_new)
        if np.all(done):
            break
        x = x_new
    return x


def monostable_minimum(beta_L: float, phi_x: float) -> float:
    """Location of the single minimum when the potential is not bistable."""
    def slope(phi):
        return float(reduced_slope(phi, beta_L, phi_x))

    lo, hi = phi_x - beta_L - 1.0, phi_x + beta_L + 1.0
    if beta_L <= 1.0:
        return brentq(slope, lo, hi, xtol=1e-15)
    a_c = math.acos(1.0 / beta_L)
    if phi_x > 0:
        return brentq(slope, a_c, hi, xtol=1e-15)
    return brentq(slope, lo, -a_c, xtol=1e-15)


def single_well(beta_L: float, phi_x: float = 0.0) -> Well:
    """
    Build the unique well of a monostable potential (beta_L < 1, including beta_L = 0).

    Args:
        beta_L: screening parameter below one
        phi_x: flux bias

    Returns:
        Well with side "single" and no barrier top
    """
    if beta_L >= 1.0:
        raise ParameterDomainError(f"single_well needs beta_L < 1, got {beta_L}")
    phi_min = monostable_minimum(beta_L, phi_x)
    u_min = float(reduced_potential(phi_min, beta_L, phi_x))
    curvature = 0.5 * float(reduced_curvature(phi_min, beta_L, phi_x))
    return Well("single", beta_L, phi_x, phi_min, u_min, curvature)


def fold_bias(beta_L: float) -> float:
    """Half-width of the bistable window in phi_x."""
    if beta_L <= 1.0:
        return 0.0
    a_c = math.acos(1.0 / beta_L)
    return beta_L * math.sin(a_c) - a_c


def geometry_for(beta_L: float, phi_x: float) -> PotentialGeometry:
    """
    Locate the two minima and the barrier top for a dimensionless bias point.

    Args:
        beta_L: screening parameter
        phi_x: flux bias

    Returns:
        PotentialGeometry with energies in units of U0

    Raises:
        BistabilityLostError: when one of the minima has merged with the maximum
    """
    if beta_L <= 1.0 or abs(phi_x) >= fold_bias(beta_L):
        raise BistabilityLostError(phi_x, beta_L)

    def slope(phi):
        return float(reduced_slope(phi, beta_L, phi_x))

    a_c = math.acos(1.0 / beta_L)
    if phi_x == 0.0:
        phi_top = 0.0
        phi_left = brentq(slope, -beta_L - 1.0, -a_c, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        phi_right = -phi_left
    else:
        phi_top = brentq(slope, -a_c, a_c, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        phi_left = brentq(slope, phi_x - beta_L - 1.0, -a_c, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        phi_right = brentq(slope, a_c, phi_x + beta_L + 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)

    for point in (phi_left, phi_top, phi_right):
        if abs(slope(point)) > global_vars.TOL_GRAD:
            raise BistabilityLostError(phi_x, beta_L, f"stationary point {point:.6g} not converged")

    u1 = 0.5 * (beta_L * math.cos(phi_top) - 1.0)
    u1_left = 0.5 * float(reduced_curvature(phi_left, beta_L, phi_x))
    u1_right = 0.5 * float(reduced_curvature(phi_right, beta_L, phi_x))
    if min(u1, u1_left, u1_right) <= global_vars.CURVATURE_FLOOR:
        raise BistabilityLostError(phi_x, beta_L, "well curvature below floor")

    u_top = float(reduced_potential(phi_top, beta_L, phi_x))
    u_left = float(reduced_potential(phi_left, beta_L, phi_x))
    u_right = float(reduced_potential(phi_right, beta_L, phi_x))

    def level(phi):
        return float(reduced_potential(phi, beta_L, phi_x)) - u_top

    reach = math.sqrt(2.0 * (u_top + beta_L)) + 0.5
    tilde1 = brentq(level, phi_x - reach, phi_left, xtol=1e-15)
    if phi_x == 0.0:
        tilde4 = -tilde1
    else:
        tilde4 = brentq(level, phi_right, phi_x + reach, xtol=1e-15)

    return PotentialGeometry(
        beta_L=beta_L, phi_x=phi_x,
        phi_min_left=phi_left, phi_min_right=phi_right, phi_top=phi_top,
        U_min_left=u_left, U_min_right=u_right, U_top=u_top,
        U1=u1, U1_min_left=u1_left, U1_min_right=u1_right,
        tilde_phi1=tilde1, tilde_phi4=tilde4,
    )


def stationary_points(params: DeviceParams, scales: Optional[DerivedScales] = None) -> PotentialGeometry:
    """Geometry of the device at params.phi_x (scales are not needed in reduced units)."""
    return geometry_for(params.beta_L, params.phi_x)


def derive_scales(params: DeviceParams) -> DerivedScales:
    """
    Convert SI device parameters to the internal scales.

    Args:
        params: DeviceParams to convert

    Returns:
        DerivedScales with plasma frequencies taken from the well curvatures
    """
    params.validate()
    U0 = (FLUX_QUANTUM / (2.0 * math.pi)) ** 2 / params.L
    M = (HBAR / (2.0 * E_CHARGE)) ** 2 * params.C
    Ic = params.beta_L * FLUX_QUANTUM / (2.0 * math.pi * params.L)
    eta = math.sqrt(2.0 * M * U0) / HBAR
    try:
        geom = geometry_for(params.beta_L, params.phi_x)
        curv_left, curv_right = geom.U1_min_left, geom.U1_min_right
    except BistabilityLostError:
        phi_min = monostable_minimum(params.beta_L, params.phi_x)
        curv_left = curv_right = 0.5 * float(reduced_curvature(phi_min, params.beta_L, params.phi_x))
        logger.debug(f"monostable bias phi_x={params.phi_x}; using single-well plasma frequency")
    omega_left = math.sqrt(2.0 * curv_left * U0 / M)
    omega_right = math.sqrt(2.0 * curv_right * U0 / M)
    return DerivedScales(U0=U0, M=M, Ic=Ic, eta=eta, Omega_p_left=omega_left, Omega_p_right=omega_right)


def turning_points(energy: float, geom: PotentialGeometry) -> TurningPoints:
    """
    Find the four turning points phi1 < phi2 <= phi_top <= phi3 < phi4.

    Args:
        energy: energy in units of U0, between the higher minimum and the top
        geom: geometry of the bias point

    Returns:
        TurningPoints including the E = U_top limits of phi1 and phi4
    """
    if abs(geom.U_top - energy) < global_vars.TOL_E:
        raise DegenerateTurningPointError(f"E={energy:.15g} sits on the barrier top {geom.U_top:.15g}")
    if not (geom.floor < energy < geom.U_top):
        raise EnergyDomainError(f"E={energy:.6g} outside ({geom.floor:.6g}, {geom.U_top:.6g})")
    phi1, phi2 = geom.left_well().turning_pair(energy)
    phi3, phi4 = geom.right_well().turning_pair(energy)
    return TurningPoints(E=float(energy), phi1=float(phi1[0]), phi2=float(phi2[0]),
                         phi3=float(phi3[0]), phi4=float(phi4[0]),
                         tilde_phi1=geom.tilde_phi1, tilde_phi4=geom.tilde_phi4)
