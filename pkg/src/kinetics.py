"""
Kinetics Module for rf-SQUID Escape Simulator
Handles bath-induced rates, level widths, the driven steady state and the escape rate W.

Rates are in 1/s, energies enter in units of U0 and are converted with DerivedScales.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np
from scipy.special import expit

from src import global_vars
from src.device_potential import E_CHARGE, HBAR, K_B, DerivedScales, DeviceParams
from src.errors import DegenerateKineticsError, ResonanceMismatchError
from src.matrix_elements import MatrixElementSet
from src.wkb_spectrum import NearTopPair, WellLevels

logger = logging.getLogger(__name__)

# |dE_mj - dE_nf| must stay below this fraction of the plasma quantum
RESONANCE_FRACTION = 0.5


@dataclass(frozen=True)
class RateSet:
    """Represents the relaxation rates between the five levels, in 1/s."""
    w_f1f2: float  # f2 -> f1 (uphill)
    w_f2f1: float  # f1 -> f2 (downhill)
    w00_f1f2: float
    w00_f2f1: float
    w_Lf1: float
    w_Lf2: float
    w_Rf1: float
    w_Rf2: float
    gamma1: float
    gamma2: float


@dataclass(frozen=True)
class SteadyState:
    """Represents the driven steady state of the delocalized pair."""
    rho_f1: float
    rho_f2: float
    F1: complex  # oscillating part of rho_f1
    D1: complex  # oscillating part of rho_f2
    A_f1: complex
    A_f2: complex
    B_f1c: complex
    B_f2c: complex
    positivity_ok: bool = True
    perturbative: bool = True

    @property
    def conjugate_amplitudes(self) -> Tuple[complex, complex, complex, complex]:
        """Amplitudes of rho^0_f, the conjugates of the stored rho^f_0 amplitudes."""
        return (self.A_f1.conjugate(), self.A_f2.conjugate(), self.B_f1c.conjugate(), self.B_f2c.conjugate())


@dataclass(frozen=True)
class EscapeResult:
    """Represents the time-averaged escape rate and its oscillating part."""
    W: float  # in 1/s
    w_Rf1_term: float
    w_Rf2_term: float
    oscillation_amplitude: float


def _x_coth_x(x: float) -> float:
    if abs(x) < 1e-8:
        return 1.0 + x * x / 3.0
    return x / math.tanh(x)


def thermal_factor(energy: float, T: float) -> float:
    """
    (1 + tanh(E/2kT)) * (E/pi) * coth(E/2kT) for an energy release E in joule.

    Finite through E = 0; at T = 0 it reduces to 2E/pi for E > 0 and 0 otherwise.
    """
    if T <= 0:
        return 2.0 * energy / math.pi if energy > 0 else 0.0
    x = energy / (2.0 * K_B * T)
    return (2.0 * K_B * T / math.pi) * 2.0 * float(expit(2.0 * x)) * _x_coth_x(x)


def generic_rate(dE_mj: float, dE_nf: float, T: float, R_eff: float, bracket: complex,
                 hbar_omega: float = math.inf) -> float:
    """
    Bath-induced rate W^{jm}_{fn} for a resistively shunted junction.

    Args:
        dE_mj: E_m - E_j in joule
        dE_nf: E_n - E_f in joule
        T: temperature in kelvin
        R_eff: effective shunt resistance in ohm
        bracket: symmetrized product of e^{i phi/2} elements
        hbar_omega: plasma quantum in joule bounding the allowed mismatch

    Returns:
        Rate in 1/s, clamped at zero
    """
    if abs(dE_mj - dE_nf) > RESONANCE_FRACTION * hbar_omega:
        raise ResonanceMismatchError(
            f"energy differences {dE_mj:.4e} J and {dE_nf:.4e} J are not resonant")
    released = 0.5 * (dE_mj + dE_nf)  # hbar * omega_tilde
    rate = math.pi / (2.0 * R_eff * E_CHARGE ** 2) * thermal_factor(released, T) * float(np.real(bracket))
    return max(rate, 0.0)


def decay_rate(E_from: float, E_to: float, R_eff: float, element: complex) -> float:
    """Zero-temperature decay 2(E_from - E_to)/(R e^2) |element|^2, energies in joule."""
    return max(2.0 * (E_from - E_to) / (R_eff * E_CHARGE ** 2) * abs(element) ** 2, 0.0)


def build_rates(levels: WellLevels, pair: NearTopPair, elements: MatrixElementSet,
                params: DeviceParams, scales: DerivedScales) -> RateSet:
    """
    Evaluate every rate of the five-level scheme and the two level widths.

    Args:
        levels: localized levels
        pair: delocalized pair
        elements: matrix elements
        params: device parameters (R_eff, T)
        scales: derived scales for the energy unit

    Returns:
        RateSet
    """
    U0 = scales.U0
    R, T = params.R_eff, params.T
    e_f1, e_f2 = pair.E_f1 * U0, pair.E_f2 * U0
    e_L, e_R = levels.E_L * U0, levels.E_R * U0
    quantum = HBAR * scales.Omega_p_left
    split = e_f1 - e_f2

    transfer = 2.0 * abs(elements.me_exp_f1f2) ** 2
    w_f2f1 = generic_rate(split, split, T, R, transfer, quantum)
    w_f1f2 = generic_rate(-split, -split, T, R, transfer, quantum)

    coherence = 2.0 * complex(elements.me_00_exp * np.conj(elements.me_exp_f1f2))
    # W^{00}_{f1f2} carries dE_nf = E_f2 - E_f1; the reverse term differs by exp(-(E_f2 - E_f1)/2kT)
    try:
        w00_f1f2 = generic_rate(0.0, -split, T, R, coherence, quantum)
        w00_f2f1 = generic_rate(0.0, split, T, R, coherence, quantum)
    except ResonanceMismatchError as e:
        logger.info(f"coherence transfer dropped, pair splitting is non-secular: {e}")
        w00_f1f2 = w00_f2f1 = 0.0

    w_Lf1 = decay_rate(e_f1, e_L, R, elements.me_exp_Lf1)
    w_Lf2 = decay_rate(e_f2, e_L, R, elements.me_exp_Lf2)
    w_Rf1 = decay_rate(e_f1, e_R, R, elements.me_exp_Rf1)
    w_Rf2 = decay_rate(e_f2, e_R, R, elements.me_exp_Rf2)

    return RateSet(
        w_f1f2=w_f1f2, w_f2f1=w_f2f1, w00_f1f2=w00_f1f2, w00_f2f1=w00_f2f1,
        w_Lf1=w_Lf1, w_Lf2=w_Lf2, w_Rf1=w_Rf1, w_Rf2=w_Rf2,
        gamma1=0.5 * (w_f2f1 + w_Lf1 + w_Rf1),
        gamma2=0.5 * (w_f1f2 + w_Lf2 + w_Rf2),
    )


def _drive_terms(levels: WellLevels, pair: NearTopPair, params: DeviceParams, scales: DerivedScales):
    U0 = scales.U0
    omega = 2.0 * math.pi * params.nu
    omega10 = (pair.E_f1 - levels.E_0) * U0 / HBAR
    omega20 = (pair.E_f2 - levels.E_0) * U0 / HBAR
    return omega - omega10, omega - omega20


def offdiag_amplitudes(levels: WellLevels, pair: NearTopPair, elements: MatrixElementSet,
                       rates: RateSet, params: DeviceParams,
                       scales: DerivedScales) -> Tuple[complex, complex, complex, complex]:
    """
    Rotating-frame amplitudes of the ground-to-pair coherences.

    Args:
        levels: localized levels
        pair: delocalized pair
        elements: matrix elements
        rates: relaxation rates
        params: device parameters (nu, I_amp)
        scales: derived scales

    Returns:
        Tuple (A_f1, A_f2, B_f1c, B_f2c)
    """
    d1, d2 = _drive_terms(levels, pair, params, scales)
    g1, g2 = rates.gamma1, rates.gamma2
    product = rates.w00_f1f2 * rates.w00_f2f1
    drive = params.I_amp / (4.0 * E_CHARGE)
    a_f1 = -drive * elements.me_0_f1 / (d1 - 1j * g1 + product / (d1 - 1j * g2))
    a_f2 = -drive * elements.me_0_f2 / (d2 - 1j * g2 + product / (d2 - 1j * g1))
    b_f1 = -1j * rates.w00_f1f2 * a_f2 / (d2 - 1j * g1)
    b_f2 = -1j * rates.w00_f2f1 * a_f1 / (d1 - 1j * g2)
    return complex(a_f1), complex(a_f2), complex(b_f1), complex(b_f2)


def _lorentz_weight(detuning: float, g_own: float, g_other: float, product: float) -> float:
    num = g_own - g_other * product / (detuning ** 2 + g_other ** 2)
    den = (detuning ** 2 + g_own ** 2
           + (product ** 2 + 2.0 * product * (detuning ** 2 - g_own * g_other)) / (detuning ** 2 + g_other ** 2))
    return num / den


def steady_state(levels: WellLevels, pair: NearTopPair, elements: MatrixElementSet,
                 rates: RateSet, params: DeviceParams, scales: DerivedScales) -> SteadyState:
    """
    Steady-state populations of f1, f2 and the coefficients of their oscillating parts.

    Args:
        levels: localized levels
        pair: delocalized pair
        elements: matrix elements
        rates: relaxation rates
        params: device parameters (nu, I_amp)
        scales: derived scales

    Returns:
        SteadyState with positivity and perturbative flags
    """
    g1, g2 = rates.gamma1, rates.gamma2
    w12, w21 = rates.w_f1f2, rates.w_f2f1
    product = rates.w00_f1f2 * rates.w00_f2f1
    scale = g1 * g2
    den = g1 * g2 - 0.25 * w21 * w12
    if not scale > 0 or den < 1e-30 * scale:
        raise DegenerateKineticsError(f"gamma1*gamma2 - w12*w21/4 = {den:.3e} (scale {scale:.3e})")

    d1, d2 = _drive_terms(levels, pair, params, scales)
    x1 = _lorentz_weight(d1, g1, g2, product)
    x2 = _lorentz_weight(d2, g2, g1, product)
    m1, m2 = elements.me_0_f1, elements.me_0_f2
    strength = params.I_amp ** 2 / (16.0 * E_CHARGE ** 2)
    rho_f1 = strength / den * (g2 * abs(m1) ** 2 * x1 + 0.5 * w12 * abs(m2) ** 2 * x2)
    rho_f2 = strength / den * (g1 * abs(m2) ** 2 * x2 + 0.5 * w21 * abs(m1) ** 2 * x1)

    delta = (pair.E_f2 - pair.E_f1) * scales.U0 / HBAR
    shared = delta ** 2 - 4.0 * g1 * g2 - 2j * (g1 + g2) * delta + w12 * w21
    c2 = d2 ** 2 - g1 * g2 + product + 1j * (g1 + g2) * d2
    c1 = d1 ** 2 - g1 * g2 + product - 1j * (g1 + g2) * d1
    common = 1j * strength * m1 * m2 / shared
    F1 = common * ((delta - 2j * g2) * rates.w00_f1f2 / c2 - 1j * w12 * rates.w00_f2f1 / c1)
    D1 = common * ((delta - 2j * g1) * rates.w00_f2f1 / c1 - 1j * w21 * rates.w00_f1f2 / c2)

    a_f1, a_f2, b_f1, b_f2 = offdiag_amplitudes(levels, pair, elements, rates, params, scales)
    positivity_ok = rho_f1 >= 2.0 * abs(F1) and rho_f2 >= 2.0 * abs(D1)
    perturbative = max(rho_f1, rho_f2) <= global_vars.PERTURBATIVE_LIMIT
    if not perturbative:
        logger.warning(f"drive is not perturbative: rho_f1={rho_f1:.3e}, rho_f2={rho_f2:.3e}")
    return SteadyState(
        rho_f1=max(float(rho_f1), 0.0), rho_f2=max(float(rho_f2), 0.0),
        F1=complex(F1), D1=complex(D1),
        A_f1=a_f1, A_f2=a_f2, B_f1c=b_f1, B_f2c=b_f2,
        positivity_ok=bool(positivity_ok), perturbative=bool(perturbative),
    )


def escape_rate(state: SteadyState, rates: RateSet) -> EscapeResult:
    """Time-averaged W = w_Rf1 rho_f1 + w_Rf2 rho_f2 and the amplitude of its beat."""
    term1 = rates.w_Rf1 * state.rho_f1
    term2 = rates.w_Rf2 * state.rho_f2
    oscillation = 2.0 * abs(rates.w_Rf1 * state.F1 + rates.w_Rf2 * state.D1)
    return EscapeResult(W=term1 + term2, w_Rf1_term=term1, w_Rf2_term=term2, oscillation_amplitude=oscillation)


def calibrate_drive(levels: WellLevels, pair: NearTopPair, elements: MatrixElementSet, rates: RateSet,
                    params: DeviceParams, scales: DerivedScales,
                    target: float = global_vars.TARGET_POPULATION) -> float:
    """
    Drive amplitude that puts the on-resonance population of f1 at target.

    One trial evaluation is enough since the populations scale exactly as I_amp^2.

    Args:
        levels: localized levels at the calibration bias
        pair: delocalized pair at the calibration bias
        elements: matrix elements
        rates: relaxation rates
        params: device parameters; nu and I_amp are replaced by the trial values
        scales: derived scales

    Returns:
        I_amp in ampere
    """
    m1 = abs(elements.me_0_f1)
    if m1 == 0.0 or rates.gamma1 <= 0.0:
        raise DegenerateKineticsError("cannot calibrate the drive without a pumping element and a width")
    trial_current = 4.0 * E_CHARGE * rates.gamma1 * math.sqrt(target) / m1
    resonant_nu = (pair.E_f1 - levels.E_0) * scales.U0 / (2.0 * math.pi * HBAR)
    trial = steady_state(levels, pair, elements, rates,
                         replace(params, nu=resonant_nu, I_amp=trial_current),
                         scales)
    peak = max(trial.rho_f1, trial.rho_f2)
    if peak <= 0.0:
        raise DegenerateKineticsError("trial drive produced no population")
    current = trial_current * math.sqrt(target / peak)
    logger.info(f"drive calibrated to I_amp={current:.4e} A for population {target:.1e}")
    return current
