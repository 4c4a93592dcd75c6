#!/usr/bin/env python3
"""
Test script to verify the rf-SQUID potential, its scales and its stationary points.
"""
import math
import sys
sys.path.append('.')

import numpy as np
import pytest
from scipy.optimize import brentq

from src.device_potential import (
    DeviceParams,
    derive_scales,
    geometry_for,
    potential,
    potential_curvature,
    potential_derivative,
    potential_drop,
    reduced_potential,
    single_well,
    stationary_points,
    turning_points,
)
from src.errors import (
    BistabilityLostError,
    DegenerateTurningPointError,
    EnergyDomainError,
    ParameterDomainError,
)


@pytest.fixture(scope="module")
def reference_params():
    return DeviceParams(beta_L=1.75, L=210e-12, C=1e-13)


@pytest.fixture(scope="module")
def reference_scales(reference_params):
    return derive_scales(reference_params)


@pytest.fixture(scope="module")
def symmetric_geometry():
    return geometry_for(1.75, 0.0)


def symmetric_minimum():
    return brentq(lambda p: p - 1.75 * math.sin(p), 1.0, 2.5, xtol=1e-15)


def test_derived_scales(reference_scales):
    print("Testing scales of the reference device...")
    print("=" * 50)
    assert reference_scales.U0 == pytest.approx(5.16e-22, rel=5e-3)
    assert reference_scales.M == pytest.approx(1.08e-44, rel=5e-3)
    assert reference_scales.Ic == pytest.approx(2.74e-6, rel=5e-3)
    assert reference_scales.eta == pytest.approx(math.sqrt(2.0 * reference_scales.M * reference_scales.U0) / 1.054571817e-34,
                                             rel=1e-9)
    print("✅ U0, M, Ic and eta match direct evaluation")


def test_invalid_params_rejected():
    with pytest.raises(ParameterDomainError):
        derive_scales(DeviceParams(beta_L=1.75, L=-1.0, C=1e-13))
    with pytest.raises(ParameterDomainError):
        DeviceParams(beta_L=1.75, L=210e-12, C=0.0).validate()
    with pytest.raises(ParameterDomainError):
        DeviceParams(beta_L=5.0, L=210e-12, C=1e-13).validate()


def test_potential_and_derivatives(reference_params, reference_scales):
    parabola = DeviceParams(beta_L=0.0, L=210e-12, C=1e-13, phi_x=0.3)
    assert potential(0.3, parabola, reference_scales) == pytest.approx(0.0, abs=1e-40)
    assert potential_derivative(0.3, parabola, reference_scales) == pytest.approx(0.0, abs=1e-40)

    U0 = reference_scales.U0
    assert potential_derivative(0.0, reference_params, reference_scales) == pytest.approx(0.0, abs=1e-40)
    assert potential_curvature(0.0, reference_params, reference_scales) == pytest.approx(U0 * (1.0 - 1.75), rel=1e-12)
    assert symmetric_minimum() == pytest.approx(1.73, abs=0.01)


def test_potential_drop_matches_direct_difference():
    a = np.array([-1.7, -0.2, 0.4, 1.9])
    for x in (1e-6, 1e-3, 0.2, -0.7):
        direct = reduced_potential(a, 1.75, 0.05) - reduced_potential(a + x, 1.75, 0.05)
        assert np.allclose(potential_drop(a, x, 1.75, 0.05), direct, rtol=1e-9, atol=1e-15)


def test_symmetric_geometry(symmetric_geometry):
    print("Testing mirror symmetry at phi_x = 0...")
    g = symmetric_geometry
    phi_m = symmetric_minimum()
    assert g.phi_top == 0.0
    assert g.phi_min_right == pytest.approx(-g.phi_min_left, rel=1e-10)
    assert g.phi_min_right == pytest.approx(phi_m, rel=1e-10)
    assert g.U_min_left == pytest.approx(g.U_min_right, rel=1e-10)
    barrier = 1.75 - (0.5 * phi_m ** 2 + 1.75 * math.cos(phi_m))
    assert g.U_top - g.U_min_left == pytest.approx(barrier, rel=1e-10)
    assert g.U1 == pytest.approx(0.5 * (1.75 * math.cos(g.phi_top) - 1.0), rel=1e-14)
    assert g.U1 > 0
    print("✅ geometry is mirror symmetric")


def test_stationary_points_biased(reference_params):
    for phi_x in (-0.3, 0.1, 0.25):
        g = stationary_points(DeviceParams(beta_L=1.75, L=210e-12, C=1e-13, phi_x=phi_x))
        assert g.phi_min_left < g.phi_top < g.phi_min_right
        assert g.U1 == pytest.approx(0.5 * (1.75 * math.cos(g.phi_top) - 1.0), rel=1e-12)
        assert g.U1 > 0


def test_monostable_raises():
    with pytest.raises(BistabilityLostError) as info:
        geometry_for(0.5, 0.1)
    assert info.value.phi_x == 0.1
    with pytest.raises(BistabilityLostError):
        geometry_for(1.75, 2.0)


def test_turning_points_symmetric(symmetric_geometry):
    g = symmetric_geometry
    tp = turning_points(g.U_top - 0.1, g)
    assert tp.phi1 == pytest.approx(-tp.phi4, rel=1e-10)
    assert tp.phi2 == pytest.approx(-tp.phi3, rel=1e-10)
    assert tp.tilde_phi1 == pytest.approx(-tp.tilde_phi4, rel=1e-10)


def test_turning_points_against_dense_scan(symmetric_geometry):
    g = symmetric_geometry
    energy = g.U_top - 0.1
    tp = turning_points(energy, g)
    grid = np.linspace(-4.0, 4.0, 100001)
    values = reduced_potential(grid, 1.75, 0.0) - energy
    crossings = grid[np.nonzero(np.sign(values[:-1]) != np.sign(values[1:]))[0]]
    assert crossings.size == 4
    step = grid[1] - grid[0]
    for found, scanned in zip((tp.phi1, tp.phi2, tp.phi3, tp.phi4), crossings):
        assert abs(found - scanned) <= step


def test_turning_points_solve_level_equation():
    rng = np.random.default_rng(7)
    for _ in range(100):
        phi_x = rng.uniform(-0.3, 0.3)
        g = geometry_for(1.75, phi_x)
        energy = rng.uniform(g.floor + 1e-6, g.U_top - 1e-6)
        tp = turning_points(energy, g)
        points = np.array([tp.phi1, tp.phi2, tp.phi3, tp.phi4])
        assert np.all(np.diff(points) >= 0)
        assert np.max(np.abs(reduced_potential(points, 1.75, phi_x) - energy)) < 1e-10


def test_turning_points_near_bottom_collapse(symmetric_geometry):
    g = symmetric_geometry
    tp = turning_points(g.U_min_left + 1e-8, g)
    assert abs(tp.phi2 - tp.phi1) < 1e-3
    assert tp.phi1 == pytest.approx(g.phi_min_left, abs=1e-3)


def test_turning_points_domain_errors(symmetric_geometry):
    g = symmetric_geometry
    with pytest.raises(DegenerateTurningPointError):
        turning_points(g.U_top, g)
    with pytest.raises(EnergyDomainError):
        turning_points(g.U_top + 0.1, g)
    with pytest.raises(EnergyDomainError):
        turning_points(g.floor - 0.1, g)


def test_single_well():
    well = single_well(0.0, 0.2)
    assert well.phi_min == pytest.approx(0.2, abs=1e-14)
    assert well.curvature == pytest.approx(0.5)
    with pytest.raises(ParameterDomainError):
        single_well(1.75)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
