"""Motion-primitive paths and midpoint-rule energy integration."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

from . import se2
from .errors import EndpointMismatch, NonFinitePower
from .se2 import Pose, Twist, wrap_angle
from .terrain import SlopeFrame, Terrain, heading_relative_to_slope
from .wrench_model import WrenchModel

DEFAULT_DT = 0.01  # s; midpoint rule is second-order, this is plenty smooth
ENDPOINT_TOL = 1e-6  # m / rad; primitives are analytic, mismatch is user error


@dataclass(frozen=True)
class Straight:
    """Constant-speed straight along a body axis ("forward" or "lateral")."""

    length_m: float
    speed_mps: float
    axis: str = "forward"

    def __post_init__(self) -> None:
        if self.length_m <= 0.0 or self.speed_mps <= 0.0:
            raise ValueError("length_m and speed_mps must be > 0")
        if self.axis not in ("forward", "lateral"):
            raise ValueError("axis must be 'forward' or 'lateral'")

    def duration(self) -> float:
        return self.length_m / self.speed_mps

    def twist(self) -> Twist:
        if self.axis == "forward":
            return Twist(self.speed_mps, 0.0, 0.0)
        return Twist(0.0, self.speed_mps, 0.0)


@dataclass(frozen=True)
class Arc:
    """Circular arc at constant speed; positive arc_angle_rad turns left."""

    radius_m: float
    arc_angle_rad: float
    speed_mps: float

    def __post_init__(self) -> None:
        if self.radius_m <= 0.0 or self.speed_mps <= 0.0:
            raise ValueError("radius_m and speed_mps must be > 0")
        if self.arc_angle_rad == 0.0:
            raise ValueError("arc_angle_rad must be nonzero")

    def duration(self) -> float:
        return abs(self.arc_angle_rad) * self.radius_m / self.speed_mps

    def twist(self) -> Twist:
        omega = math.copysign(self.speed_mps / self.radius_m, self.arc_angle_rad)
        return Twist(self.speed_mps, 0.0, omega)


@dataclass(frozen=True)
class TurnInPlace:
    """Yaw by delta_yaw_rad (signed) at rate omega_radps (> 0)."""

    delta_yaw_rad: float
    omega_radps: float

    def __post_init__(self) -> None:
        if self.delta_yaw_rad == 0.0:
            raise ValueError("delta_yaw_rad must be nonzero")
        if self.omega_radps <= 0.0:
            raise ValueError("omega_radps must be > 0")

    def duration(self) -> float:
        return abs(self.delta_yaw_rad) / self.omega_radps

    def twist(self) -> Twist:
        return Twist(0.0, 0.0, math.copysign(self.omega_radps, self.delta_yaw_rad))


Primitive = Union[Straight, Arc, TurnInPlace]


@dataclass(frozen=True)
class PathSpec:
    """Ordered motion primitives executed from a start pose."""

    start: Pose
    primitives: tuple[Primitive, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "primitives", tuple(self.primitives))

    def duration(self) -> float:
        return sum(p.duration() for p in self.primitives)

    def end_pose(self) -> Pose:
        pose = self.start
        for p in self.primitives:
            pose = se2.compose(pose, se2.exp(p.twist(), p.duration()))
        return pose

    def to_json_dict(self) -> dict:
        prims = []
        for p in self.primitives:
            if isinstance(p, Straight):
                prims.append({"type": "straight", "length_m": p.length_m,
                              "speed_mps": p.speed_mps, "axis": p.axis})
            elif isinstance(p, Arc):
                prims.append({"type": "arc", "radius_m": p.radius_m,
                              "arc_angle_rad": p.arc_angle_rad, "speed_mps": p.speed_mps})
            else:
                prims.append({"type": "turn", "delta_yaw_rad": p.delta_yaw_rad,
                              "omega_radps": p.omega_radps})
        return {"start": [self.start.x, self.start.y, self.start.yaw], "primitives": prims}

    @classmethod
    def from_json_dict(cls, data: dict) -> "PathSpec":
        x, y, yaw = data["start"]
        prims: list[Primitive] = []
        for p in data["primitives"]:
            kind = p.get("type")
            if kind == "straight":
                prims.append(Straight(p["length_m"], p["speed_mps"], p.get("axis", "forward")))
            elif kind == "arc":
                prims.append(Arc(p["radius_m"], p["arc_angle_rad"], p["speed_mps"]))
            elif kind == "turn":
                prims.append(TurnInPlace(p["delta_yaw_rad"], p["omega_radps"]))
            else:
                raise ValueError(f"unknown primitive type {kind!r}")
        return cls(Pose(x, y, yaw), tuple(prims))


@dataclass
class EnergyReport:
    total_j: float
    per_primitive_j: list[float]
    duration_s: float
    samples_used: int
    warnings: list[str]

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "total_j": self.total_j,
            "per_primitive_j": list(self.per_primitive_j),
            "duration_s": self.duration_s,
            "samples_used": self.samples_used,
            "warnings": list(self.warnings),
        }


def energy_of_path(path: PathSpec, terrain: Terrain, model: WrenchModel,
                   dt: float = DEFAULT_DT) -> EnergyReport:
    """Midpoint-rule energy integral of model power along the path.

    Each primitive is cut into ceil(duration/dt) equal steps; power is
    evaluated at the step-midpoint pose. Raises NonFinitePower when the
    model evaluation hits its f_max cap (extrapolation) or goes non-finite;
    slope angles outside the model's calibrated range only add a warning.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    fit_range = None
    if model.alpha_fit_range_deg is not None:
        lo, hi = model.alpha_fit_range_deg
        fit_range = (math.radians(lo), math.radians(hi))

    seg_start = path.start
    per: list[float] = []
    warnings: list[str] = []
    samples_used = 0
    for idx, prim in enumerate(path.primitives):
        xi = prim.twist()
        duration = prim.duration()
        n = max(1, math.ceil(duration / dt))
        h = duration / n
        extrapolated = False
        terms = []
        for k in range(n):
            pose = se2.compose(seg_start, se2.exp(xi, (k + 0.5) * h))
            alpha, azimuth = terrain.local_slope(pose.x, pose.y)
            frame = SlopeFrame(alpha, heading_relative_to_slope(pose, azimuth))
            wrench = model.evaluate(frame)
            if wrench.capped:
                raise NonFinitePower(
                    f"primitive {idx}: wrench capped at f_max={model.f_max} "
                    f"(alpha={math.degrees(alpha):.2f} deg)"
                )
            p = model.power(frame, xi)
            if not math.isfinite(p):
                raise NonFinitePower(f"primitive {idx}: non-finite power {p!r}")
            if fit_range and not fit_range[0] <= alpha <= fit_range[1]:
                extrapolated = True
            terms.append(p * h)
        per.append(math.fsum(terms))
        samples_used += n
        if extrapolated:
            warnings.append(f"primitive {idx}: slope angle outside calibrated range")
        seg_start = se2.compose(seg_start, se2.exp(xi, duration))
    return EnergyReport(math.fsum(per), per, path.duration(), samples_used, warnings)


def _poses_match(a: Pose, b: Pose, tol: float) -> bool:
    return (abs(a.x - b.x) <= tol and abs(a.y - b.y) <= tol
            and abs(wrap_angle(a.yaw - b.yaw)) <= tol)


def superposition_check(parts: Sequence[PathSpec], whole: PathSpec,
                        terrain: Terrain, model: WrenchModel,
                        dt: float = DEFAULT_DT) -> float:
    """Relative difference |sum E(parts) - E(whole)| / E(whole).

    The parts must chain exactly: first start and last end match the whole's
    endpoints, and consecutive parts connect, all within ENDPOINT_TOL.
    Returns the absolute difference instead when E(whole) is zero.
    """
    if not parts:
        raise EndpointMismatch("no parts given")
    if not _poses_match(parts[0].start, whole.start, ENDPOINT_TOL):
        raise EndpointMismatch("first part does not start at the whole's start")
    cursor = parts[0].start
    for i, part in enumerate(parts):
        if not _poses_match(part.start, cursor, ENDPOINT_TOL):
            raise EndpointMismatch(f"part {i} does not start where part {i - 1} ends")
        cursor = part.end_pose()
    if not _poses_match(cursor, whole.end_pose(), ENDPOINT_TOL):
        raise EndpointMismatch("parts do not end at the whole's endpoint")

    e_parts = math.fsum(energy_of_path(p, terrain, model, dt).total_j for p in parts)
    e_whole = energy_of_path(whole, terrain, model, dt).total_j
    if e_whole == 0.0:
        return abs(e_parts)
    return abs(e_parts - e_whole) / abs(e_whole)
