#!/usr/bin/env python3
"""
Test script to verify classical trajectories and the quasiclassical matrix elements.
"""
import logging
import math
import sys
sys.path.append('.')

import numpy as np
import pytest

from src.device_potential import DeviceParams, derive_scales, geometry_for, single_well
from src.errors import EnergyDomainError
from src.matrix_elements import (
    MatrixElementCalculator,
    classical_trajectory,
    coordinate,
    half_flux_exponential,
    well_matrix_element,
    well_normalization,
)
from src.wkb_spectrum import SpectrumSolver, inverse_velocity_integral


@pytest.fixture(scope="module")
def scales():
    return derive_scales(DeviceParams(beta_L=1.75, L=210e-12, C=1e-13))


@pytest.fixture(scope="module")
def symmetric_setup(scales):
    solver = SpectrumSolver(geometry_for(1.75, 0.0), scales.eta)
    g = solver.geometry
    pair = solver.near_top_levels((g.U_top - 3.0 * solver.hbar_omega, g.U_top))
    levels = solver.well_levels(pair.E_f2)
    calculator = MatrixElementCalculator(g, scales.eta, scales.time_unit)
    return solver, pair, levels, calculator


def test_harmonic_period(scales):
    print("Testing the harmonic trajectory period...")
    print("=" * 50)
    well = single_well(0.0)
    for energy in (0.01, 0.3, 2.0):
        trajectory = classical_trajectory(energy, well, scales.time_unit)
        assert trajectory.period_tau == pytest.approx(2.0 * math.pi, rel=1e-12)
        assert trajectory.period == pytest.approx(2.0 * math.pi / scales.omega0, rel=1e-12)
    print("✅ period is 2 pi / omega0")


def test_trajectory_endpoints_and_energy(symmetric_setup):
    solver, _, _, _ = symmetric_setup
    g = solver.geometry
    energy = 0.5 * (g.U_min_left + g.U_top)
    for well in (solver.left, solver.right):
        trajectory = classical_trajectory(energy, well)
        low, high = well.turning_pair(energy)
        inner, outer = (high[0], low[0]) if well.side == "left" else (low[0], high[0])
        assert trajectory.phi[0] == pytest.approx(inner, abs=1e-12)
        assert trajectory.phi[-1] == pytest.approx(outer, abs=1e-12)
        assert trajectory.tau[0] == 0.0
        assert np.all(np.diff(trajectory.tau) > 0)
        assert trajectory.energy_error() < 1e-8
        assert len(trajectory.samples) == trajectory.phi.size


def test_period_matches_turning_point_integral(symmetric_setup):
    solver, _, _, _ = symmetric_setup
    g = solver.geometry
    energy = 0.5 * (g.U_min_left + g.U_top)
    trajectory = classical_trajectory(energy, solver.left)
    j = float(inverse_velocity_integral(solver.left, energy)[0])
    assert trajectory.period_tau == pytest.approx(math.sqrt(2.0) * j, rel=1e-8)


def test_period_grows_toward_top(symmetric_setup):
    solver, _, _, _ = symmetric_setup
    g = solver.geometry
    energies = g.U_min_left + (g.U_top - g.U_min_left) * np.array([0.1, 0.4, 0.7, 0.95, 0.999])
    periods = [classical_trajectory(e, solver.left).period_tau for e in energies]
    assert np.all(np.diff(periods) > 0)


def test_trajectory_domain(symmetric_setup):
    solver, _, _, _ = symmetric_setup
    g = solver.geometry
    with pytest.raises(EnergyDomainError):
        classical_trajectory(g.U_top + 0.01, solver.left)
    with pytest.raises(EnergyDomainError):
        classical_trajectory(g.U_min_left - 0.01, solver.left)


def test_constant_operator_orthogonality(symmetric_setup, scales):
    solver, pair, _, calculator = symmetric_setup
    trajectory = classical_trajectory(0.5 * (solver.geometry.U_min_left + solver.geometry.U_top), solver.left)
    unit = well_matrix_element(trajectory, np.ones_like, 2, scales.eta, 1.0, 1.0)
    assert abs(unit) < 1e-10
    assert abs(calculator.delocalized_matrix_element(pair, np.ones_like)) < 1e-10


def test_harmonic_ladder(scales):
    print("Testing <n|phi|n+1> in the harmonic limit...")
    eta = scales.eta
    quantum = math.sqrt(2.0) / eta
    well = single_well(0.0)
    for n in range(6):
        G_a = well_normalization(well, quantum * (n + 0.5), eta)
        G_b = well_normalization(well, quantum * (n + 1.5), eta)
        midpoint = quantum * (n + 1)
        element = well_matrix_element(classical_trajectory(midpoint, well), coordinate, 1, eta, G_a, G_b)
        exact = math.sqrt((n + 1) / (math.sqrt(2.0) * eta))
        assert abs(abs(element) - exact) / exact < 1e-6
    print("✅ ladder elements are exact")


def test_harmonic_normalization(scales):
    eta = scales.eta
    well = single_well(0.0)
    gaussian = math.sqrt(math.pi / (math.sqrt(2.0) * eta))
    for energy in (0.01, 0.5, 3.0):
        assert well_normalization(well, energy, eta) == pytest.approx(gaussian, rel=1e-9)


def test_calculator_uses_well_normalization(symmetric_setup, scales):
    solver, pair, _, calculator = symmetric_setup
    for side, well in (("left", solver.left), ("right", solver.right)):
        expected = well_normalization(well, pair.E_f2, scales.eta)
        assert calculator.normalization(side, pair.E_f2) == pytest.approx(expected, rel=1e-14)


def test_operator_bound_violation_is_warned(symmetric_setup, monkeypatch, caplog):
    print("Testing the warning for elements above the operator bound...")
    _, pair, levels, calculator = symmetric_setup
    assert calculator.build_element_set(levels, pair).bound_violations() == {}
    monkeypatch.setattr("src.matrix_elements.half_flux_exponential", lambda phi: 4.0 * np.exp(0.5j * phi))
    with caplog.at_level(logging.WARNING, logger="src.matrix_elements"):
        inflated = calculator.build_element_set(levels, pair)
    assert "00" in inflated.bound_violations()
    assert any(r.levelno == logging.WARNING and "exceeds the operator bound" in r.getMessage()
               for r in caplog.records)
    print("✅ |<0|e^{i phi/2}|0>| > 1 is reported")


def test_hermiticity(symmetric_setup):
    _, pair, levels, calculator = symmetric_setup

    def conjugate_exponential(phi):
        return np.exp(-0.5j * phi)

    forward = calculator.well_matrix_element(levels.E_L, pair.E_f1, "left", half_flux_exponential, 1)
    backward = calculator.well_matrix_element(pair.E_f1, levels.E_L, "left", conjugate_exponential, 1)
    assert forward == pytest.approx(np.conj(backward), rel=1e-12)


def test_element_set_symmetric(symmetric_setup):
    print("Testing the matrix element set at phi_x = 0...")
    print("=" * 50)
    _, pair, levels, calculator = symmetric_setup
    elements = calculator.build_element_set(levels, pair)
    for name, value in elements.relaxation_elements().items():
        assert np.isfinite(value), name
        assert abs(value) <= 1.0 + 1e-9, name
    assert abs(elements.me_exp_Rf1) == pytest.approx(abs(elements.me_exp_Lf1), rel=1e-6)
    assert abs(elements.me_exp_Rf2) == pytest.approx(abs(elements.me_exp_Lf2), rel=1e-6)
    assert np.isfinite(elements.me_0_f1) and np.isfinite(elements.me_0_f2)
    print("✅ mirror pairs agree and every element is bounded")


def test_delocalized_coordinate_is_real_at_symmetry(symmetric_setup):
    _, pair, _, calculator = symmetric_setup
    element = calculator.delocalized_matrix_element(pair, coordinate)
    assert abs(element.imag) < 1e-12
    assert abs(element.real) > 0


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
