"""
Special Functions Module for rf-SQUID Escape Simulator
Handles the barrier-top phase chi(lambda), its derivative and an independent Gamma-phase check.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.special as SS

PSI_HALF = float(SS.digamma(0.5))  # -C - 2 ln 2
_TAIL_TERMS = 24


@dataclass(frozen=True)
class ChiValue:
    """Represents chi and its derivative at one lambda."""
    lam: float
    chi: float  # in radians
    dchi_dlambda: float


def _head_size(lam_abs_max: float) -> int:
    # keeps lambda / (2K + 1) below 1/4 so the zeta tail converges fast
    return 16 + 2 * int(math.ceil(lam_abs_max))


def chi_phase(lam):
    """
    Vectorised chi(lambda) = (lambda/2) psi(1/2) - sum_k [atan(lambda/(2k+1)) - lambda/(2k+1)].

    The first K terms are summed directly; the remainder is expanded in odd powers of
    lambda with Hurwitz-zeta coefficients.
    """
    lam = np.asarray(lam, dtype=float)
    K = _head_size(float(np.max(np.abs(lam))) if lam.size else 0.0)
    odd = 2.0 * np.arange(K) + 1.0
    ratio = lam[..., None] / odd
    head = np.sum(np.arctan(ratio) - ratio, axis=-1)
    tail = np.zeros_like(lam)
    for j in range(1, _TAIL_TERMS + 1):
        power = 2 * j + 1
        coeff = (-1) ** j / power * 2.0 ** (-power) * SS.zeta(power, K + 0.5)
        tail = tail + coeff * lam ** power
    return 0.5 * lam * PSI_HALF - head - tail


def dchi_phase(lam):
    """Vectorised derivative (1/2) psi(1/2) + lambda^2 sum_k 1/((2k+1)((2k+1)^2 + lambda^2))."""
    lam = np.asarray(lam, dtype=float)
    K = _head_size(float(np.max(np.abs(lam))) if lam.size else 0.0)
    odd = 2.0 * np.arange(K) + 1.0
    head = np.sum(1.0 / (odd * (odd ** 2 + lam[..., None] ** 2)), axis=-1)
    tail = np.zeros_like(lam)
    for j in range(_TAIL_TERMS):
        power = 2 * j + 3
        tail = tail + (-1) ** j * lam ** (2 * j) * 2.0 ** (-power) * SS.zeta(power, K + 0.5)
    return 0.5 * PSI_HALF + lam ** 2 * (head + tail)


def chi(lam: float) -> ChiValue:
    """
    Evaluate the barrier-top phase and its derivative.

    Args:
        lam: dimensionless barrier-proximity parameter, |lam| < 100

    Returns:
        ChiValue with the continuous odd branch (chi(0) = 0)
    """
    return ChiValue(lam=float(lam), chi=float(chi_phase(lam)), dchi_dlambda=float(dchi_phase(lam)))


def gamma_phase_oracle(lam) -> float:
    """arg Gamma((1 + i lam)/2) from the principal log-gamma branch (continuous through 0)."""
    return np.imag(SS.loggamma(0.5 + 0.5j * np.asarray(lam, dtype=float)))


def gamma_modulus_residual(lam) -> float:
    """Relative error of |Gamma((1+i lam)/2)| = sqrt(2 pi) e^{-pi lam/4} / sqrt(1 + e^{-pi lam})."""
    lam = np.asarray(lam, dtype=float)
    modulus = np.exp(np.real(SS.loggamma(0.5 + 0.5j * lam)))
    closed = math.sqrt(2.0 * math.pi) * np.exp(-0.25 * math.pi * lam) / np.sqrt(1.0 + np.exp(-math.pi * lam))
    return np.abs(modulus - closed) / closed
