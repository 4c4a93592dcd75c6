"""
Sweep Runner Module for rf-SQUID Escape Simulator
Handles the per-bias pipeline from geometry to escape rate and the parallel map over the bias grid.
"""

import logging
import math
from dataclasses import dataclass, fields, replace
from functools import partial
from multiprocessing import Pool
from typing import List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from src.config_parser import SweepConfig
from src.device_potential import HBAR, DerivedScales, DeviceParams, derive_scales, fold_bias, geometry_for
from src.errors import NotEnoughLevelsError, SimulatorError
from src.kinetics import (
    EscapeResult,
    RateSet,
    SteadyState,
    build_rates,
    calibrate_drive,
    escape_rate,
    steady_state,
)
from src.matrix_elements import MatrixElementCalculator, MatrixElementSet
from src.wkb_spectrum import (
    CrossingPoint,
    HyperbolaPoint,
    NearTopPair,
    SpectrumSolver,
    WellLevels,
    crossing_point,
    hyperbola_spectrum,
)

logger = logging.getLogger(__name__)

GHZ = 1e9
WINDOW_HALF_WIDTH = 0.4  # search half-width around the predicted pair, units of hbar * Omega_p
WINDOW_TRIES = 3
AUTO_RANGE_MARGIN = 5.0  # crossing widths added beyond the outermost feature


@dataclass(frozen=True)
class SweepRow:
    """Represents one bias point of an escape-rate sweep; energies in joule, rates in 1/s."""
    phi_x: float
    nu: float  # hertz
    E_f1: float
    E_f2: float
    E_0: float
    E_L: float
    E_R: float
    f1_GHz: float  # (E_f1 - E_0)/h
    f2_GHz: float  # (E_f2 - E_0)/h
    gamma1: float
    gamma2: float
    rho_f1: float
    rho_f2: float
    W: float
    W_osc: float
    flags: str = ""

    @classmethod
    def failed(cls, phi_x: float, nu: float, reason: str) -> "SweepRow":
        values = {f.name: math.nan for f in fields(cls) if f.name not in ("phi_x", "nu", "flags")}
        return cls(phi_x=phi_x, nu=nu, flags=f"error:{reason}", **values)


@dataclass(frozen=True)
class LevelRow:
    """Represents the pair energies at one bias point, relative to the ground level in GHz."""
    phi_x: float
    f1_GHz: float
    f2_GHz: float
    hyperbola_f1_GHz: float
    hyperbola_f2_GHz: float
    flags: str = ""

    @classmethod
    def failed(cls, phi_x: float, reason: str) -> "LevelRow":
        return cls(phi_x=phi_x, f1_GHz=math.nan, f2_GHz=math.nan, hyperbola_f1_GHz=math.nan,
                   hyperbola_f2_GHz=math.nan, flags=f"error:{reason}")


@dataclass(frozen=True)
class PointContext:
    """Represents everything a worker needs to evaluate one bias point."""
    params: DeviceParams  # phi_x replaced per point
    scales: DerivedScales
    crossing: CrossingPoint


@dataclass(frozen=True)
class PointSolution:
    """Represents the full pipeline output at one bias point."""
    params: DeviceParams
    hyperbola: HyperbolaPoint
    pair: NearTopPair
    levels: WellLevels
    elements: Optional[MatrixElementSet] = None
    rates: Optional[RateSet] = None
    state: Optional[SteadyState] = None
    result: Optional[EscapeResult] = None


def _pick_pair(solver: SpectrumSolver, crossing: CrossingPoint,
               hyperbola: HyperbolaPoint) -> NearTopPair:
    """Pair of quantization roots closest to the two predicted anticrossing branches."""
    upper = crossing.E0c + hyperbola.delta_E_upper
    lower = crossing.E0c + hyperbola.delta_E_lower
    half = WINDOW_HALF_WIDTH * solver.hbar_omega
    for _ in range(WINDOW_TRIES):
        roots = np.array(solver.levels_in_window((lower - half, upper + half)))
        if roots.size >= 2:
            i1 = int(np.argmin(np.abs(roots - upper)))
            rest = np.delete(roots, i1)
            i2 = int(np.argmin(np.abs(rest - lower)))
            e_f1, e_f2 = max(roots[i1], rest[i2]), min(roots[i1], rest[i2])
            return solver.pair_from_roots(float(e_f1), float(e_f2), (crossing.k1, crossing.k2))
        half *= 2.0
    raise NotEnoughLevelsError(f"fewer than two levels near the predicted pair at phi_x={solver.geometry.phi_x:.6g}")


def solve_point(context: PointContext, phi_x: float, kinetics: bool = True) -> PointSolution:
    """
    Run the pipeline at one bias point.

    Args:
        context: shared device, scales and crossing
        phi_x: flux bias
        kinetics: also compute elements, rates, steady state and W

    Returns:
        PointSolution
    """
    params = replace(context.params, phi_x=phi_x)
    scales = context.scales
    crossing = context.crossing
    solver = SpectrumSolver(geometry_for(params.beta_L, phi_x), scales.eta)
    hyperbola = hyperbola_spectrum(phi_x - crossing.phi_x0, crossing)
    pair = _pick_pair(solver, crossing, hyperbola)
    levels = solver.well_levels(pair.E_f2, left_count=crossing.k1, right_count=crossing.k2)
    if not kinetics:
        return PointSolution(params=params, hyperbola=hyperbola, pair=pair, levels=levels)
    calculator = MatrixElementCalculator(solver.geometry, scales.eta, scales.time_unit)
    elements = calculator.build_element_set(levels, pair)
    rates = build_rates(levels, pair, elements, params, scales)
    state = steady_state(levels, pair, elements, rates, params, scales)
    return PointSolution(params=params, hyperbola=hyperbola, pair=pair, levels=levels, elements=elements,
                         rates=rates, state=state, result=escape_rate(state, rates))


def _to_ghz(energy: float, scales: DerivedScales) -> float:
    return energy * scales.U0 / (2.0 * math.pi * HBAR) / GHZ


def evaluate_row(context: PointContext, phi_x: float) -> SweepRow:
    """One SweepRow; solver failures become an error-flagged row."""
    nu = context.params.nu
    try:
        sol = solve_point(context, phi_x)
    except SimulatorError as e:
        logger.warning(f"sweep point phi_x={phi_x:.8f} failed: {e}")
        return SweepRow.failed(phi_x, nu, type(e).__name__)
    U0 = context.scales.U0
    flags = []
    if sol.hyperbola.extrapolated:
        flags.append("extrapolated")
    if not sol.state.perturbative:
        flags.append("nonperturbative")
    if not sol.state.positivity_ok:
        flags.append("oscillation_exceeds_mean")
    return SweepRow(
        phi_x=phi_x, nu=nu,
        E_f1=sol.pair.E_f1 * U0, E_f2=sol.pair.E_f2 * U0, E_0=sol.levels.E_0 * U0,
        E_L=sol.levels.E_L * U0, E_R=sol.levels.E_R * U0,
        f1_GHz=_to_ghz(sol.pair.E_f1 - sol.levels.E_0, context.scales),
        f2_GHz=_to_ghz(sol.pair.E_f2 - sol.levels.E_0, context.scales),
        gamma1=sol.rates.gamma1, gamma2=sol.rates.gamma2,
        rho_f1=sol.state.rho_f1, rho_f2=sol.state.rho_f2,
        W=sol.result.W, W_osc=sol.result.oscillation_amplitude,
        flags=";".join(flags),
    )


def evaluate_level_row(context: PointContext, phi_x: float) -> LevelRow:
    """One LevelRow with the direct and the hyperbola pair energies."""
    try:
        sol = solve_point(context, phi_x, kinetics=False)
    except SimulatorError as e:
        logger.warning(f"level point phi_x={phi_x:.8f} failed: {e}")
        return LevelRow.failed(phi_x, type(e).__name__)
    scales = context.scales
    e_0 = sol.levels.E_0
    base = context.crossing.E0c
    return LevelRow(
        phi_x=phi_x,
        f1_GHz=_to_ghz(sol.pair.E_f1 - e_0, scales),
        f2_GHz=_to_ghz(sol.pair.E_f2 - e_0, scales),
        hyperbola_f1_GHz=_to_ghz(base + sol.hyperbola.delta_E_upper - e_0, scales),
        hyperbola_f2_GHz=_to_ghz(base + sol.hyperbola.delta_E_lower - e_0, scales),
        flags="extrapolated" if sol.hyperbola.extrapolated else "",
    )


class SweepRunner:
    """
    Escape-rate sweeps for one configuration.
    Locates the crossing once, calibrates the drive and maps the pipeline over the bias grid.
    """

    def __init__(self, config: SweepConfig, progress: bool = True):
        """Initialize the runner from a validated configuration."""
        self.logger = logging.getLogger(__name__)
        self.config = config
        self.progress = progress
        self.base_params = config.device_params()
        self.scales = derive_scales(self.base_params)
        self._crossing: Optional[CrossingPoint] = None

    @property
    def crossing(self) -> CrossingPoint:
        """Crossing point, computed on first use."""
        if self._crossing is None:
            sweep = self.config.sweep
            self._crossing = crossing_point(self.base_params, self.scales, seed_phi_x=sweep.seed_phi_x,
                                            left_level=sweep.left_level)
        return self._crossing

    def context(self, nu: float = 0.0, I_amp: float = 0.0) -> PointContext:
        return PointContext(params=replace(self.base_params, nu=nu, I_amp=I_amp),
                            scales=self.scales, crossing=self.crossing)

    def drive_amplitude(self) -> float:
        """Configured drive amplitude, or the calibrated one when set to auto."""
        if self.config.drive.I_amp is not None:
            return self.config.drive.I_amp
        crossing = self.crossing
        sol = solve_point(self.context(), crossing.phi_x0)
        return calibrate_drive(sol.levels, sol.pair, sol.elements, sol.rates, sol.params, self.scales)

    def _pump_offset(self, nu: float, branch_slope: float) -> Optional[float]:
        """Bias offset where h nu matches one asymptotic branch above the ground level."""
        crossing = self.crossing
        geom = geometry_for(self.base_params.beta_L, crossing.phi_x0)
        e_0 = geom.U_min_left + 0.5 * crossing.hbar_omega
        ground_slope = -(geom.phi_min_left - crossing.phi_x0)
        photon = 2.0 * math.pi * HBAR * nu / self.scales.U0
        denominator = branch_slope - ground_slope
        if denominator == 0.0:
            return None
        return (photon - (crossing.E0c - e_0)) / denominator

    def phi_x_range(self, nus: Sequence[float]) -> Tuple[float, float]:
        """
        Bias interval of the sweep: configured, or covering the crossing and the pump resonances.

        Args:
            nus: drive frequencies in Hz

        Returns:
            (phi_x_min, phi_x_max)
        """
        sweep = self.config.sweep
        if sweep.phi_x_min is not None:
            return sweep.phi_x_min, sweep.phi_x_max
        crossing = self.crossing
        offsets = [0.0]
        for nu in nus:
            for alpha, beta in ((crossing.alpha1, crossing.beta1), (crossing.alpha2, crossing.beta2)):
                offset = self._pump_offset(nu, -alpha / beta)
                if offset is not None and math.isfinite(offset):
                    offsets.append(offset)
        margin = AUTO_RANGE_MARGIN * crossing.width
        limit = 0.999 * fold_bias(self.base_params.beta_L)
        lo = max(crossing.phi_x0 + min(offsets) - margin, -limit)
        hi = min(crossing.phi_x0 + max(offsets) + margin, limit)
        self.logger.info(f"auto sweep range [{lo:.8f}, {hi:.8f}]")
        return lo, hi

    def grid(self, nus: Sequence[float]) -> np.ndarray:
        lo, hi = self.phi_x_range(nus)
        return np.linspace(lo, hi, self.config.sweep.n_points)

    def _map(self, worker, phi_grid: np.ndarray, label: str) -> list:
        workers = min(self.config.sweep.workers, len(phi_grid))
        points = [float(p) for p in phi_grid]
        bar = tqdm(total=len(points), desc=label, disable=not self.progress)
        results = []
        try:
            if workers <= 1:
                for point in points:
                    results.append(worker(point))
                    bar.update(1)
            else:
                chunk = max(1, len(points) // (8 * workers))
                with Pool(workers) as pool:
                    for row in pool.imap(worker, points, chunksize=chunk):
                        results.append(row)
                        bar.update(1)
        finally:
            bar.close()
        return results

    def run(self, nu: float, phi_grid: Optional[np.ndarray] = None,
            I_amp: Optional[float] = None) -> List[SweepRow]:
        """
        Escape-rate sweep at one drive frequency.

        Args:
            nu: drive frequency in Hz
            phi_grid: bias grid, built from the config when omitted
            I_amp: drive amplitude, resolved from the config when omitted

        Returns:
            One SweepRow per grid point in ascending phi_x order
        """
        phi_grid = self.grid([nu]) if phi_grid is None else phi_grid
        current = self.drive_amplitude() if I_amp is None else I_amp
        self.logger.info(f"sweep at nu={nu / GHZ:.6f} GHz over {len(phi_grid)} points, I_amp={current:.4e} A")
        rows = self._map(partial(evaluate_row, self.context(nu, current)), phi_grid, f"nu={nu / GHZ:.3f} GHz")
        failed = sum(1 for row in rows if row.flags.startswith("error:"))
        if failed:
            self.logger.warning(f"{failed} of {len(rows)} sweep points failed")
        return rows

    def run_levels(self, phi_grid: Optional[np.ndarray] = None) -> List[LevelRow]:
        """Pair energies relative to the ground level over the bias grid."""
        phi_grid = self.grid(self.config.drive.nu) if phi_grid is None else phi_grid
        return self._map(partial(evaluate_level_row, self.context()), phi_grid, "levels")


def run_sweep(config: SweepConfig, progress: bool = True) -> List[SweepRow]:
    """
    Run the escape-rate sweep for every configured frequency.

    Args:
        config: validated configuration
        progress: show a progress bar

    Returns:
        Rows of all frequencies, grouped by frequency in config order
    """
    runner = SweepRunner(config, progress)
    nus = config.drive.nu
    phi_grid = runner.grid(nus)
    current = runner.drive_amplitude()
    rows: List[SweepRow] = []
    for nu in nus:
        rows.extend(runner.run(nu, phi_grid, current))
    return rows
