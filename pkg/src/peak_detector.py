"""
Peak Detector Module for rf-SQUID Escape Simulator
Handles locating and classifying the peaks of W versus phi_x.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np
from scipy.signal import find_peaks, peak_widths

from src.errors import ParameterDomainError
from src.sweep_runner import GHZ, SweepRow

logger = logging.getLogger(__name__)

MIN_ROWS = 16
PROMINENCE_FRACTION = 0.05


@dataclass(frozen=True)
class Peak:
    """Represents one peak of the escape rate."""
    phi_x: float
    W: float  # in 1/s
    width_fwhm: float  # in phi_x units
    kind: str  # tunneling, pump_f1 or pump_f2
    resonance_mismatch_GHz: float = math.nan  # |nu - (E_fi - E_0)/h| for pump peaks


@dataclass(frozen=True)
class PeakReport:
    """Represents the peaks of one sweep and their overall pattern."""
    peaks: List[Peak] = field(default_factory=list)
    classification: str = "other"  # one_peak, three_peak or other
    crossing_phi_x: float = math.nan

    def of_kind(self, kind: str) -> List[Peak]:
        return [p for p in self.peaks if p.kind == kind]


def _classify(kinds: List[str]) -> str:
    if kinds == ["tunneling"]:
        return "one_peak"
    if sorted(kinds) == ["pump_f1", "pump_f2", "tunneling"]:
        return "three_peak"
    return "other"


def detect_peaks(rows: Sequence[SweepRow]) -> PeakReport:
    """
    Find the peaks of W(phi_x) and assign each a physical origin.

    The crossing is taken where the pair splitting E_f1 - E_f2 is smallest; the peak
    nearest to it is the tunneling peak and every other peak is matched to the pump
    resonance it satisfies better.

    Args:
        rows: rows of one frequency in ascending phi_x order

    Returns:
        PeakReport
    """
    if len(rows) < MIN_ROWS:
        raise ParameterDomainError(f"peak detection needs at least {MIN_ROWS} rows, got {len(rows)}")
    phi = np.array([r.phi_x for r in rows])
    W = np.nan_to_num(np.array([r.W for r in rows]), nan=0.0)
    split = np.array([r.E_f1 - r.E_f2 for r in rows])
    crossing_phi = float(phi[np.nanargmin(split)]) if np.any(np.isfinite(split)) else math.nan
    top = float(np.max(W))
    if top <= 0.0:
        return PeakReport(crossing_phi_x=crossing_phi)

    indices, _ = find_peaks(W, prominence=PROMINENCE_FRACTION * top)
    if indices.size == 0:
        return PeakReport(crossing_phi_x=crossing_phi)
    widths = peak_widths(W, indices, rel_height=0.5)[0]
    step = (phi[-1] - phi[0]) / (len(phi) - 1)
    tunneling = int(indices[np.argmin(np.abs(phi[indices] - crossing_phi))])

    peaks = []
    for index, width in zip(indices, widths):
        row = rows[int(index)]
        if int(index) == tunneling:
            kind, mismatch = "tunneling", math.nan
        else:
            nu_GHz = row.nu / GHZ
            miss1 = abs(nu_GHz - row.f1_GHz)
            miss2 = abs(nu_GHz - row.f2_GHz)
            kind, mismatch = ("pump_f1", miss1) if miss1 <= miss2 else ("pump_f2", miss2)
        peaks.append(Peak(phi_x=float(phi[index]), W=float(W[index]), width_fwhm=float(width * step),
                          kind=kind, resonance_mismatch_GHz=mismatch))
    classification = _classify([p.kind for p in peaks])
    logger.info(f"{len(peaks)} peak(s): {classification}")
    return PeakReport(peaks=peaks, classification=classification, crossing_phi_x=crossing_phi)


def linewidth_GHz(row: SweepRow, kind: str) -> float:
    """hbar * gamma of the pumped level at a row, in GHz."""
    gamma = row.gamma1 if kind == "pump_f1" else row.gamma2
    return gamma / (2.0 * math.pi) / GHZ
