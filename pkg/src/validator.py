"""
Validator Module for rf-SQUID Escape Simulator
Handles the comparison suite between the semiclassical pipeline and the grid oracle.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional

import numpy as np
import scipy.special as SS

from src.config_parser import SweepConfig
from src.device_potential import derive_scales, geometry_for, single_well
from src.errors import SimulatorError
from src.matrix_elements import (
    BOUND_SLACK,
    classical_trajectory,
    coordinate,
    half_flux_exponential,
    well_matrix_element,
    well_normalization,
)
from src.oracle import GridSpectrum, diagonalize, exact_matrix_element, exact_splitting_scan, match_levels
from src.specfun import chi_phase, gamma_modulus_residual, gamma_phase_oracle
from src.sweep_runner import SweepRunner, solve_point
from src.wkb_spectrum import SpectrumSolver, bohr_sommerfeld_levels, crossing_point

logger = logging.getLogger(__name__)

PSI_HALF_REFERENCE = -1.96351
RESIDUAL_TOL = 0.1  # near-top condition evaluated at oracle eigenvalues


@dataclass(frozen=True)
class CheckResult:
    """Represents one row of the validation table."""
    name: str
    measured: float
    tolerance: float
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    """Represents the outcome of the whole validation suite."""
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def exit_status(self) -> int:
        return 0 if self.passed else 1

    def add(self, name: str, measured: float, tolerance: float, detail: str = "") -> CheckResult:
        result = CheckResult(name=name, measured=float(measured), tolerance=float(tolerance),
                             passed=bool(math.isfinite(measured) and measured <= tolerance), detail=detail)
        self.checks.append(result)
        return result

    def table(self) -> str:
        lines = [f"{'check':<28} {'measured':>12} {'tolerance':>12}  result",
                 "=" * 64]
        for c in self.checks:
            mark = "✅ PASS" if c.passed else "❌ FAIL"
            lines.append(f"{c.name:<28} {c.measured:>12.4e} {c.tolerance:>12.4e}  {mark}"
                         + (f"  ({c.detail})" if c.detail else ""))
        lines.append("=" * 64)
        lines.append(f"{sum(c.passed for c in self.checks)}/{len(self.checks)} checks passed")
        return "\n".join(lines)


def check_special_functions(report: ValidationReport) -> None:
    grid = np.linspace(-10.0, 10.0, 200)
    report.add("chi_vs_gamma_phase", float(np.max(np.abs(chi_phase(grid) - gamma_phase_oracle(grid)))), 1e-9)
    report.add("gamma_modulus_identity", float(np.max(gamma_modulus_residual(grid))), 1e-12)
    report.add("psi_half", abs(float(SS.digamma(0.5)) - PSI_HALF_REFERENCE), 5e-6)


def check_harmonic(config: SweepConfig, report: ValidationReport) -> None:
    """beta_L = 0: oracle levels, Bohr-Sommerfeld levels and the ladder element against the oscillator."""
    params = replace(config.device_params(), beta_L=0.0)
    scales = derive_scales(params)
    eta = scales.eta
    quantum = math.sqrt(2.0) / eta  # hbar * omega in units of U0
    exact = quantum * (np.arange(10) + 0.5)
    spectrum = diagonalize(params, scales, 10, config.validate_.oracle_grid)
    report.add("harmonic_oracle_levels", float(np.max(np.abs(spectrum.reduced_energies - exact) / exact)),
               config.validate_.harmonic_tol)
    well = single_well(0.0)
    levels = bohr_sommerfeld_levels(well, eta, 10.0 * quantum, count=6)
    report.add("harmonic_wkb_levels", float(np.max(np.abs(levels - exact[:6]) / exact[:6])),
               config.validate_.harmonic_tol)
    ladder = math.sqrt(1.0 / (math.sqrt(2.0) * eta))
    G_0 = well_normalization(well, exact[0], eta)
    G_1 = well_normalization(well, exact[1], eta)
    element = well_matrix_element(classical_trajectory(quantum, well), coordinate, 1, eta, G_0, G_1)
    report.add("harmonic_ladder_element", abs(abs(element) - ladder) / ladder, 0.05)
    oracle_ladder = abs(exact_matrix_element(spectrum, 0, 1, coordinate))
    report.add("harmonic_oracle_ladder", abs(oracle_ladder - ladder) / ladder, config.validate_.harmonic_tol)


def _oracle_at(runner: SweepRunner, phi_x: float, n_levels: int, grid: int) -> GridSpectrum:
    return diagonalize(replace(runner.base_params, phi_x=phi_x), runner.scales, n_levels, grid)


def _levels_below_top(solver: SpectrumSolver) -> int:
    g = solver.geometry
    left = bohr_sommerfeld_levels(solver.left, solver.eta, g.U_top).size
    right = bohr_sommerfeld_levels(solver.right, solver.eta, g.U_top).size
    return left + right


def check_levels(runner: SweepRunner, report: ValidationReport, phi_x: Optional[float] = None) -> None:
    """Every quantization root within 3 plasma quanta of the top pairs with an oracle eigenvalue."""
    config = runner.config
    phi_x = runner.crossing.phi_x0 if phi_x is None else phi_x
    solver = SpectrumSolver(geometry_for(runner.base_params.beta_L, phi_x), runner.scales.eta)
    g = solver.geometry
    quantum = solver.hbar_omega
    roots = np.array(solver.levels_in_window((g.U_top - 3.0 * quantum, g.U_top)))
    spectrum = _oracle_at(runner, phi_x, _levels_below_top(solver) + 2, config.validate_.oracle_grid)
    tolerance = config.validate_.level_tol
    pairing = match_levels(roots, spectrum.reduced_energies, tolerance * quantum)
    if pairing is None or roots.size == 0:
        report.add("levels_vs_oracle", math.inf, tolerance, f"{roots.size} roots, no bijective pairing")
        return
    worst = float(np.max(np.abs(spectrum.reduced_energies[pairing] - roots))) / quantum
    report.add("levels_vs_oracle", worst, tolerance, f"{roots.size} roots, units of hbar*Omega_p")
    exact = spectrum.reduced_energies
    window = exact[(exact > g.U_top - 3.0 * quantum) & (exact < g.U_top)]
    residual = float(np.max(np.abs(solver.quantization_residual(window)))) if window.size else math.inf
    report.add("residual_at_oracle", residual, RESIDUAL_TOL, f"{window.size} oracle levels below the top")


def check_gap(runner: SweepRunner, report: ValidationReport) -> None:
    """WKB gap against the oracle's minimal doublet splitting, plus the lambda dependence of the gap."""
    config = runner.config
    tolerance = config.validate_.gap_tol
    lambdas, gaps = [], []
    crossings = [runner.crossing]
    for target in config.validate_.gap_lambdas:
        try:
            crossings.append(crossing_point(runner.base_params, runner.scales,
                                            left_level=config.sweep.left_level, lambda_target=target))
        except SimulatorError as e:
            logger.error(f"crossing for lambda target {target} failed: {e}")
    for index, crossing in enumerate(crossings):
        span = 20.0 * crossing.width
        try:
            phi_min, gap_exact = exact_splitting_scan(runner.base_params, runner.scales,
                                                      (crossing.phi_x0 - span, crossing.phi_x0 + span),
                                                      crossing.k1 + crossing.k2, config.validate_.oracle_grid)
        except SimulatorError as e:
            report.add(f"gap_vs_oracle[{index}]", math.inf, tolerance, str(e))
            continue
        relative = abs(crossing.gap - gap_exact) / gap_exact
        report.add(f"gap_vs_oracle[{index}]", relative, tolerance, f"lambda0={crossing.lambda0:.3f}")
        if index == 0:
            report.add("crossing_position", abs(phi_min - crossing.phi_x0), 1e-3)
        else:
            lambdas.append(crossing.lambda0)
            gaps.append(gap_exact)
    if len(lambdas) >= 2 and np.ptp(lambdas) > 0.5:
        slope = float(np.polyfit(lambdas, np.log(gaps), 1)[0])
        report.add("gap_lambda_slope", abs(slope / (-0.5 * math.pi) - 1.0), 0.10, f"slope={slope:.4f}")


def _nearest_index(spectrum: GridSpectrum, energy: float) -> int:
    return int(np.argmin(np.abs(spectrum.reduced_energies - energy)))


def _element_errors(runner: SweepRunner, phi_x: float) -> Dict[str, float]:
    crossing = runner.crossing
    sol = solve_point(runner.context(), phi_x)
    solver = SpectrumSolver(geometry_for(runner.base_params.beta_L, phi_x), runner.scales.eta)
    spectrum = _oracle_at(runner, phi_x, _levels_below_top(solver) + 2, runner.config.validate_.oracle_grid)
    index_f2 = crossing.k1 + crossing.k2
    index_f1 = index_f2 + 1
    index_0 = _nearest_index(spectrum, sol.levels.E_0)
    index_L = _nearest_index(spectrum, sol.levels.E_L)
    index_R = _nearest_index(spectrum, sol.levels.E_R)
    cases = [
        ("me_0_f1", sol.elements.me_0_f1, index_0, index_f1, coordinate),
        ("me_0_f2", sol.elements.me_0_f2, index_0, index_f2, coordinate),
        ("me_exp_f1f2", sol.elements.me_exp_f1f2, index_f1, index_f2, half_flux_exponential),
        ("me_exp_Lf1", sol.elements.me_exp_Lf1, index_L, index_f1, half_flux_exponential),
        ("me_exp_Lf2", sol.elements.me_exp_Lf2, index_L, index_f2, half_flux_exponential),
        ("me_exp_Rf1", sol.elements.me_exp_Rf1, index_R, index_f1, half_flux_exponential),
        ("me_exp_Rf2", sol.elements.me_exp_Rf2, index_R, index_f2, half_flux_exponential),
        ("me_00_exp", sol.elements.me_00_exp, index_0, index_0, half_flux_exponential),
    ]
    errors = {}
    for name, value, i, j, zeta in cases:
        exact = abs(exact_matrix_element(spectrum, i, j, zeta))
        errors[name] = abs(abs(value) - exact) / exact if exact > 0 else math.inf
    excess = [abs(v) - 1.0 for v in sol.elements.relaxation_elements().values()]
    errors["element_bound"] = max(0.0, *excess)
    return errors


def check_elements(runner: SweepRunner, report: ValidationReport) -> None:
    """Element magnitudes against oracle eigenvector overlaps on a bias grid across the crossing."""
    config = runner.config
    crossing = runner.crossing
    grid = np.linspace(crossing.phi_x0 - crossing.width, crossing.phi_x0 + crossing.width,
                       config.validate_.element_points)
    worst: Dict[str, float] = {}
    where: Dict[str, float] = {}
    for phi_x in grid:
        for name, error in _element_errors(runner, float(phi_x)).items():
            if name not in worst or not error <= worst[name]:
                worst[name], where[name] = error, float(phi_x)
    for name, error in worst.items():
        tolerance = BOUND_SLACK if name == "element_bound" else config.validate_.element_tol
        report.add(name, error, tolerance, f"worst of {grid.size} phi_x points at {where[name]:.6f}")


def check_symmetry(runner: SweepRunner, report: ValidationReport) -> None:
    """At phi_x = 0 both phases coincide and the delocalized pair has |B| = 1."""
    solver = SpectrumSolver(geometry_for(runner.base_params.beta_L, 0.0), runner.scales.eta)
    g = solver.geometry
    energy = g.U_top - 2.0 * math.sqrt(g.U1) / solver.eta
    action = solver.action_integrals(energy)
    report.add("symmetric_phases", abs(action.Phi1 - action.Phi2), 1e-9)
    pair = solver.near_top_levels((g.U_top - 2.0 * solver.hbar_omega, g.U_top))
    report.add("symmetric_amplitudes", max(abs(abs(pair.B_f1) - 1.0), abs(abs(pair.B_f2) - 1.0)), 1e-6)


CHECKS: List[Callable] = [check_levels, check_gap, check_elements, check_symmetry]


def validate_command(config: SweepConfig) -> ValidationReport:
    """
    Run every oracle comparison for a configuration.

    Args:
        config: validated configuration

    Returns:
        ValidationReport; its exit_status is nonzero when any check fails
    """
    report = ValidationReport()
    check_special_functions(report)
    try:
        check_harmonic(config, report)
    except SimulatorError as e:
        logger.error(f"harmonic checks failed: {e}")
        report.add("harmonic", math.inf, 0.0, str(e))
    if config.device.beta_L <= 1.0:
        return report
    runner = SweepRunner(config, progress=False)
    try:
        logger.info(f"validating around phi_x0={runner.crossing.phi_x0:.8f}")
    except SimulatorError as e:
        logger.error(f"crossing search failed: {e}")
        report.add("crossing", math.inf, 0.0, str(e))
        return report
    for check in CHECKS:
        try:
            check(runner, report)
        except SimulatorError as e:
            logger.error(f"{check.__name__} failed: {e}")
            report.add(check.__name__.replace("check_", ""), math.inf, 0.0, str(e))
    return report
