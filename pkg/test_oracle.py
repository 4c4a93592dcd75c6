#!/usr/bin/env python3
"""
Test script to verify the grid oracle and the agreement of the WKB pipeline with it.
"""
import math
import sys
from dataclasses import replace
sys.path.append('.')

import numpy as np
import pytest

from src.device_potential import DeviceParams, derive_scales, geometry_for
from src.errors import ParameterDomainError
from src.matrix_elements import coordinate
from src.oracle import diagonalize, exact_matrix_element, exact_splitting_scan, grid_bounds, match_levels
from src.wkb_spectrum import SpectrumSolver, bohr_sommerfeld_levels, crossing_point


@pytest.fixture(scope="module")
def params():
    return DeviceParams(beta_L=1.75, L=210e-12, C=1e-13)


@pytest.fixture(scope="module")
def scales(params):
    return derive_scales(params)


@pytest.fixture(scope="module")
def harmonic(params):
    flat = replace(params, beta_L=0.0)
    flat_scales = derive_scales(flat)
    return flat_scales, diagonalize(flat, flat_scales, 10)


@pytest.fixture(scope="module")
def crossing(params, scales):
    return crossing_point(params, scales)


@pytest.fixture(scope="module")
def crossing_spectrum(params, scales, crossing):
    solver = SpectrumSolver(geometry_for(params.beta_L, crossing.phi_x0), scales.eta)
    g = solver.geometry
    count = (bohr_sommerfeld_levels(solver.left, scales.eta, g.U_top).size
             + bohr_sommerfeld_levels(solver.right, scales.eta, g.U_top).size)
    spectrum = diagonalize(replace(params, phi_x=crossing.phi_x0), scales, count + 2)
    return solver, spectrum


def test_harmonic_levels(harmonic):
    print("Testing the oracle on the harmonic oscillator...")
    print("=" * 50)
    flat_scales, spectrum = harmonic
    quantum = math.sqrt(2.0) / flat_scales.eta
    exact = quantum * (np.arange(10) + 0.5)
    assert np.max(np.abs(spectrum.reduced_energies - exact) / exact) < 1e-6
    assert spectrum.change < 1e-7
    assert np.allclose(spectrum.energies, spectrum.reduced_energies * flat_scales.U0)
    print("✅ E_n = hbar omega (n + 1/2)")


def test_harmonic_ladder_element(harmonic):
    flat_scales, spectrum = harmonic
    exact = math.sqrt(1.0 / (math.sqrt(2.0) * flat_scales.eta))
    assert abs(abs(exact_matrix_element(spectrum, 0, 1, coordinate)) - exact) / exact < 1e-6


def test_states_orthonormal(harmonic):
    _, spectrum = harmonic
    assert np.allclose(spectrum.gram(), np.eye(spectrum.n_levels), atol=1e-8)
    peaks = spectrum.states[np.argmax(np.abs(spectrum.states), axis=0), np.arange(spectrum.n_levels)]
    assert np.all(peaks > 0)


def test_grid_bounds_cover_wells(params, scales):
    g = geometry_for(params.beta_L, 0.1)
    lo, hi = grid_bounds(params.beta_L, 0.1, scales.eta, 20)
    assert lo < g.tilde_phi1 < g.tilde_phi4 < hi


def test_small_grid_rejected(params, scales):
    with pytest.raises(ParameterDomainError):
        diagonalize(params, scales, 4, N=128)
    with pytest.raises(ParameterDomainError):
        diagonalize(params, scales, 0)


def test_match_levels():
    reference = np.array([1.0, 2.0, 3.0])
    assert list(match_levels(reference, np.array([0.98, 2.01, 3.03, 5.0]), 0.05)) == [0, 1, 2]
    assert match_levels(reference, np.array([1.0, 1.01, 5.0]), 0.05) is None
    assert match_levels(np.array([1.0, 1.02]), np.array([1.01]), 0.05) is None


def test_near_top_levels_match_oracle(crossing_spectrum):
    print("Testing near-top quantization roots against the oracle...")
    solver, spectrum = crossing_spectrum
    g = solver.geometry
    quantum = solver.hbar_omega
    roots = np.array(solver.levels_in_window((g.U_top - 3.0 * quantum, g.U_top)))
    assert roots.size >= 2
    pairing = match_levels(roots, spectrum.reduced_energies, 0.05 * quantum)
    assert pairing is not None
    worst = np.max(np.abs(spectrum.reduced_energies[pairing] - roots)) / quantum
    print(f"✅ {roots.size} roots matched, worst deviation {worst:.3f} hbar*Omega_p")


def test_quantization_residual_at_oracle_levels(crossing_spectrum):
    print("Testing the near-top condition at oracle eigenvalues...")
    solver, spectrum = crossing_spectrum
    g = solver.geometry
    exact = spectrum.reduced_energies
    window = exact[(exact > g.U_top - 3.0 * solver.hbar_omega) & (exact < g.U_top)]
    assert window.size >= 2
    residual = np.abs(solver.quantization_residual(window))
    assert np.max(residual) < 0.1
    print(f"✅ {window.size} oracle levels, worst residual {np.max(residual):.3f}")


def test_ground_level_matches_oracle(crossing_spectrum):
    solver, spectrum = crossing_spectrum
    g = solver.geometry
    e_0 = g.U_min_left + 0.5 * solver.hbar_omega
    nearest = spectrum.reduced_energies[np.argmin(np.abs(spectrum.reduced_energies - e_0))]
    assert abs(nearest - e_0) < 0.05 * solver.hbar_omega


def test_gap_matches_oracle(params, scales, crossing):
    print("Testing the WKB gap against the oracle splitting...")
    span = 20.0 * crossing.width
    phi_min, gap = exact_splitting_scan(params, scales, (crossing.phi_x0 - span, crossing.phi_x0 + span),
                                        crossing.k1 + crossing.k2)
    assert abs(crossing.gap - gap) / gap < 0.30
    assert abs(phi_min - crossing.phi_x0) < 1e-3
    print(f"✅ gap {crossing.gap:.4e} vs oracle {gap:.4e} U0")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
