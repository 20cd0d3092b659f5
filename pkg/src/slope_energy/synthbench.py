"""Synthetic telemetry with known ground truth.

Builds constant-twist runs over a slope/heading grid, synthesizes the
body-frame gravity vector from each run's (alpha, gamma), and prices every
sample with a ground-truth wrench model, so the full ingest -> calibrate
pipeline can be validated end to end without hardware.

Repeats are laid out round-robin (pass 1 of every leg, then pass 2, ...)
with a short stationary gap between runs, so repeated conditions land in
separate estimation windows and the gap samples fall to the low-speed
filter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .se2 import Pose, Twist, compose, exp, wrap_angle_2pi
from .telemetry import TelemetrySample
from .terrain import SlopeFrame
from .wrench_model import COMPONENTS, WrenchModel, term_values

GRAVITY = 9.81  # m/s^2

MODES = ("forward", "lateral", "rotate")


@dataclass(frozen=True)
class Leg:
    """One test condition: slope, heading, motion axis, duration, repeats."""

    alpha_rad: float
    gamma_rad: float
    mode: str = "forward"
    speed_mps: float = 0.3
    omega_radps: float = 0.5
    duration_s: float = 4.0
    repeats: int = 1

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.speed_mps <= 0.0 or self.omega_radps <= 0.0:
            raise ValueError("speed_mps and omega_radps must be > 0")
        if self.duration_s < 0.0 or self.repeats < 0:
            raise ValueError("duration_s and repeats must be >= 0")

    def twist(self) -> Twist:
        if self.mode == "forward":
            return Twist(self.speed_mps, 0.0, 0.0)
        if self.mode == "lateral":
            return Twist(0.0, self.speed_mps, 0.0)
        return Twist(0.0, 0.0, self.omega_radps)


@dataclass(frozen=True)
class NoiseSpec:
    power_mult_sigma: float = 0.0   # multiplicative, on measured power
    twist_add_sigma: float = 0.0    # additive, on measured twist components
    gravity_add_sigma: float = 0.0  # additive, on gravity components (m/s^2)

    def __post_init__(self) -> None:
        if min(self.power_mult_sigma, self.twist_add_sigma, self.gravity_add_sigma) < 0:
            raise ValueError("noise sigmas must be >= 0")


@dataclass
class Scenario:
    ground_truth: WrenchModel
    legs: list[Leg]
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    sample_rate_hz: float = 50.0
    seed: int = 0
    gap_s: float = 0.5
    battery_voltage_v: float = 50.0

    def __post_init__(self) -> None:
        if self.sample_rate_hz <= 0.0:
            raise ValueError("sample_rate_hz must be > 0")
        if self.battery_voltage_v <= 0.0:
            raise ValueError("battery_voltage_v must be > 0")
        if self.gap_s < 0.0:
            raise ValueError("gap_s must be >= 0")

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "ground_truth": self.ground_truth.to_json_dict(),
            "legs": [
                {
                    "alpha_deg": math.degrees(l.alpha_rad),
                    "gamma_deg": math.degrees(l.gamma_rad),
                    "mode": l.mode,
                    "speed_mps": l.speed_mps,
                    "omega_radps": l.omega_radps,
                    "duration_s": l.duration_s,
                    "repeats": l.repeats,
                }
                for l in self.legs
            ],
            "noise": {
                "power_mult_sigma": self.noise.power_mult_sigma,
                "twist_add_sigma": self.noise.twist_add_sigma,
                "gravity_add_sigma": self.noise.gravity_add_sigma,
            },
            "sample_rate_hz": self.sample_rate_hz,
            "seed": self.seed,
            "gap_s": self.gap_s,
            "battery_voltage_v": self.battery_voltage_v,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Scenario":
        noise = data.get("noise", {})
        return cls(
            ground_truth=WrenchModel.from_json_dict(data["ground_truth"]),
            legs=[
                Leg(
                    math.radians(l["alpha_deg"]),
                    math.radians(l["gamma_deg"]),
                    l.get("mode", "forward"),
                    l.get("speed_mps", 0.3),
                    l.get("omega_radps", 0.5),
                    l.get("duration_s", 4.0),
                    l.get("repeats", 1),
                )
                for l in data["legs"]
            ],
            noise=NoiseSpec(
                noise.get("power_mult_sigma", 0.0),
                noise.get("twist_add_sigma", 0.0),
                noise.get("gravity_add_sigma", 0.0),
            ),
            sample_rate_hz=data.get("sample_rate_hz", 50.0),
            seed=data.get("seed", 0),
            gap_s=data.get("gap_s", 0.5),
            battery_voltage_v=data.get("battery_voltage_v", 50.0),
        )


def default_ground_truth() -> WrenchModel:
    """Shape-plausible fixture coefficients (invented defaults, not measured):
    forward 40 N flat plus 120 N/rad gravity-aligned term, lateral
    70 N + 150 N/rad * alpha, yaw 5 N*m + 20 N*m/rad * alpha."""
    return WrenchModel(
        coeffs={"fx": (40.0, 120.0), "fy": (70.0, 150.0), "tau": (5.0, 20.0)},
        basis_masks={
            "fx": ("1", "alpha_cos_gamma"),
            "fy": ("1", "alpha"),
            "tau": ("1", "alpha"),
        },
    )


DEFAULT_ALPHAS_DEG = (5.0, 10.0, 15.0, 20.0)
DEFAULT_GAMMAS_DEG = (0.0, 45.0, 90.0, 135.0, 180.0)


def default_scenario(seed: int = 0, noise: NoiseSpec | None = None,
                     repeats: int = 3, duration_s: float = 4.0,
                     ground_truth: WrenchModel | None = None) -> Scenario:
    """Protocol grid: forward legs over alpha x gamma, plus lateral and
    rotation legs per slope, all at 0.3 m/s walking speed."""
    legs = [
        Leg(math.radians(a), math.radians(g), "forward",
            duration_s=duration_s, repeats=repeats)
        for a in DEFAULT_ALPHAS_DEG for g in DEFAULT_GAMMAS_DEG
    ]
    legs += [
        Leg(math.radians(a), math.radians(g), "lateral",
            duration_s=duration_s, repeats=repeats)
        for a in DEFAULT_ALPHAS_DEG for g in (0.0, 90.0)
    ]
    legs += [
        Leg(math.radians(a), 0.0, "rotate", duration_s=duration_s, repeats=repeats)
        for a in DEFAULT_ALPHAS_DEG
    ]
    return Scenario(ground_truth or default_ground_truth(), legs,
                    noise or NoiseSpec(), seed=seed)


def oracle_power(ground_truth: WrenchModel, frame: SlopeFrame, twist: Twist) -> float:
    """The generator's integrand: identical contract to WrenchModel.power."""
    return ground_truth.power(frame, twist)


def _power_array(model: WrenchModel, alpha: float, gammas: np.ndarray,
                 twist: Twist) -> np.ndarray:
    comps = {}
    for comp in COMPONENTS:
        v = np.zeros(gammas.shape)
        for term, c in zip(model.basis_masks[comp], model.coeffs[comp]):
            v += c * term_values(term, alpha, gammas)
        comps[comp] = np.clip(v, -model.f_max, model.f_max)
    if model.eval_mode == "literal":
        p = comps["fx"] * twist.vx + comps["fy"] * twist.vy + comps["tau"] * twist.omega
    else:
        p = (comps["fx"] * abs(twist.vx) + comps["fy"] * abs(twist.vy)
             + comps["tau"] * abs(twist.omega))
    return p + model.idle_power_w


def _pose_track(start: Pose, twist: Twist, t: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """World x, y, yaw arrays for a constant twist from a start pose."""
    theta = twist.omega * t
    small = np.abs(theta) < 1e-8
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(small, 1.0 - theta * theta / 6.0, np.sin(theta) / np.where(small, 1.0, theta))
        b = np.where(small, 0.5 * theta, (1.0 - np.cos(theta)) / np.where(small, 1.0, theta))
    ux, uy = twist.vx * t, twist.vy * t
    lx = a * ux - b * uy
    ly = b * ux + a * uy
    c, s = math.cos(start.yaw), math.sin(start.yaw)
    return start.x + c * lx - s * ly, start.y + s * lx + c * ly, start.yaw + theta


def generate_telemetry(scenario: Scenario) -> tuple[list[TelemetrySample], dict]:
    """Deterministic telemetry and a manifest echoing the ground truth."""
    rng = np.random.default_rng(scenario.seed)
    dt = 1.0 / scenario.sample_rate_hz
    volts = scenario.battery_voltage_v
    noise = scenario.noise

    runs: list[Leg] = []
    max_rep = max((leg.repeats for leg in scenario.legs), default=0)
    for rep in range(max_rep):
        runs.extend(leg for leg in scenario.legs if rep < leg.repeats)

    samples: list[TelemetrySample] = []
    pose = Pose.identity()
    t0 = 0.0

    def emit(leg: Leg, twist: Twist, duration: float) -> None:
        nonlocal pose, t0
        n = round(duration * scenario.sample_rate_hz)
        if n == 0:
            return
        tl = np.arange(n) * dt
        if leg.mode == "rotate" and twist.omega != 0.0:
            gammas = np.mod(leg.gamma_rad - twist.omega * tl, 2.0 * math.pi)
        else:
            gammas = np.full(n, leg.gamma_rad)
        sa, ca = math.sin(leg.alpha_rad), math.cos(leg.alpha_rad)
        gx = -GRAVITY * sa * np.cos(gammas)
        gy = -GRAVITY * sa * np.sin(gammas)
        gz = np.full(n, -GRAVITY * ca)
        if noise.gravity_add_sigma > 0.0:
            gx = gx + noise.gravity_add_sigma * rng.standard_normal(n)
            gy = gy + noise.gravity_add_sigma * rng.standard_normal(n)
            gz = gz + noise.gravity_add_sigma * rng.standard_normal(n)
        p_true = _power_array(scenario.ground_truth, leg.alpha_rad, gammas, twist)
        if noise.power_mult_sigma > 0.0:
            p_meas = p_true * (1.0 + noise.power_mult_sigma * rng.standard_normal(n))
        else:
            p_meas = p_true
        if noise.twist_add_sigma > 0.0:
            tw = (twist.vx + noise.twist_add_sigma * rng.standard_normal(n),
                  twist.vy + noise.twist_add_sigma * rng.standard_normal(n),
                  twist.omega + noise.twist_add_sigma * rng.standard_normal(n))
        else:
            tw = (np.full(n, float(twist.vx)), np.full(n, float(twist.vy)),
                  np.full(n, float(twist.omega)))
        xs, ys, yaws = _pose_track(pose, twist, tl)
        # Battery draw convention forces current >= 0, so measured power is
        # floored at zero; ground truths that extrapolate negative saturate.
        current = np.maximum(p_meas, 0.0) / volts
        for row in zip(tl.tolist(), gx.tolist(), gy.tolist(), gz.tolist(),
                       xs.tolist(), ys.tolist(), yaws.tolist(),
                       tw[0].tolist(), tw[1].tolist(), tw[2].tolist(),
                       current.tolist()):
            tk, gxk, gyk, gzk, xk, yk, yawk, vxk, vyk, omk, ck = row
            samples.append(TelemetrySample(
                t0 + tk, (gxk, gyk, gzk), Pose(xk, yk, yawk),
                Twist(vxk, vyk, omk), volts, ck,
            ))
        pose = compose(pose, exp(twist, n * dt))
        t0 += n * dt

    for i, leg in enumerate(runs):
        if i > 0 and scenario.gap_s > 0.0:
            emit(leg, Twist.zero(), scenario.gap_s)
        emit(leg, leg.twist(), leg.duration_s)

    manifest = {
        "schema_version": 1,
        "ground_truth": scenario.ground_truth.to_json_dict(),
        "coefficients_source": "invented synthetic defaults, not field measurements",
        "scenario": scenario.to_json_dict(),
        "n_runs": len(runs),
        "n_samples": len(samples),
    }
    return samples, manifest
