"""
Global Variables Module for rf-SQUID Escape Simulator
Holds process-wide numerical defaults, overridable from the environment or a .env file.
"""

import os

from dotenv import load_dotenv

load_dotenv()


def _env_float(name: str, default: float) -> float:
    value = os.getenv(name)
    return float(value) if value not in (None, "") else default


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    return int(value) if value not in (None, "") else default


# Logging
LOG_LEVEL = os.getenv("RFSQUID_LOG_LEVEL", "INFO")

# Root solves (dimensionless, U'/U0 and E/U0)
TOL_GRAD = _env_float("RFSQUID_TOL_GRAD", 1e-12)
TOL_E = _env_float("RFSQUID_TOL_E", 1e-12)
CURVATURE_FLOOR = 1e-9  # minimum well curvature, units of U0

# Quadrature
QUAD_TOL = _env_float("RFSQUID_QUAD_TOL", 1e-11)
QUAD_MAX_LEVEL = 8

# Spectrum scan and trajectories
SCAN_POINTS = _env_int("RFSQUID_SCAN_POINTS", 2000)
TRAJECTORY_SAMPLES = _env_int("RFSQUID_TRAJECTORY_SAMPLES", 4096)
LAMBDA_TARGET = _env_float("RFSQUID_LAMBDA_TARGET", 1.5)

# Grid oracle
ORACLE_GRID = _env_int("RFSQUID_ORACLE_GRID", 4096)
ORACLE_TOL_CONV = _env_float("RFSQUID_ORACLE_TOL_CONV", 1e-7)  # units of U0
ORACLE_MAX_DOUBLINGS = 3

# Sweeps
SWEEP_POINTS = _env_int("RFSQUID_SWEEP_POINTS", 2001)
WORKERS = _env_int("RFSQUID_WORKERS", os.cpu_count() or 1)
TARGET_POPULATION = _env_float("RFSQUID_TARGET_POPULATION", 1e-3)
PERTURBATIVE_LIMIT = 0.1

# Reference-device defaults used when a config omits them
DEFAULT_R_EFF = 8e6  # ohm
DEFAULT_TEMPERATURE = 0.05  # kelvin
