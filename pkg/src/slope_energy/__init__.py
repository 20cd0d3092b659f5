"""Heading-dependent locomotion energy modeling on sloped terrain.

Calibrates a compact wrench model f(alpha, gamma) -> (fx, fy, tau) from
onboard telemetry (battery power, IMU gravity, odometry), integrates path
energy from body twists, and plans minimum-energy routes on a heading
lattice.
"""

from .errors import SlopeEnergyError
from .se2 import Pose, Twist, body_velocity, compose, exp, inverse, log
from .terrain import (
    GridHeightmap,
    SlopeFrame,
    Terrain,
    UniformPlane,
    heading_relative_to_slope,
    load_terrain,
    slope_frame_at,
    slope_from_gravity,
)
from .wrench_model import Wrench, WrenchModel, export_cost_map
from .telemetry import PreprocessConfig, TelemetrySample, electrical_power, parse_log, preprocess
from .calibration import (
    CalibrationConfig,
    WrenchSample,
    calibrate,
    fit_model,
    repeatability_report,
    segment_windows,
)
from .path_energy import Arc, EnergyReport, PathSpec, Straight, TurnInPlace, energy_of_path, superposition_check
from .planner import Lattice, LatticeConfig, PlanResult, plan
from .synthbench import Leg, NoiseSpec, Scenario, default_scenario, generate_telemetry, oracle_power

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
