"""Planar rigid-body geometry: SE(2) poses, body twists, exp/log maps.

Conventions: x forward, y left, yaw counter-clockwise, wrapped to (-pi, pi].
A twist holds body-frame velocity coordinates (vx, vy, omega).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import NonMonotonicTime, YawAtBranchCut

# Below this rotation magnitude exp/log switch the translation part to its
# second-order series; keeps relative error below 1e-12 in both branches.
SMALL_ANGLE = 1e-8

_BRANCH_MARGIN = 1e-6


def wrap_angle(angle: float) -> float:
    """Wrap an angle in radians to (-pi, pi]."""
    a = math.fmod(angle, 2.0 * math.pi)
    if a > math.pi:
        a -= 2.0 * math.pi
    elif a <= -math.pi:
        a += 2.0 * math.pi
    return a


def wrap_angle_2pi(angle: float) -> float:
    """Wrap an angle in radians to [0, 2*pi)."""
    a = math.fmod(angle, 2.0 * math.pi)
    if a < 0.0:
        a += 2.0 * math.pi
    return a if a < 2.0 * math.pi else 0.0


@dataclass(frozen=True)
class Pose:
    """Planar pose; yaw is normalized to (-pi, pi] on construction."""

    x: float
    y: float
    yaw: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    @staticmethod
    def identity() -> "Pose":
        return Pose(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Twist:
    """Body-frame velocity: vx forward (m/s), vy left (m/s), omega (rad/s)."""

    vx: float
    vy: float
    omega: float

    @staticmethod
    def zero() -> "Twist":
        return Twist(0.0, 0.0, 0.0)


def compose(a: Pose, b: Pose) -> Pose:
    """Group composition a * b: apply b expressed in the frame of a."""
    c, s = math.cos(a.yaw), math.sin(a.yaw)
    return Pose(a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, a.yaw + b.yaw)


def inverse(p: Pose) -> Pose:
    c, s = math.cos(p.yaw), math.sin(p.yaw)
    return Pose(-(c * p.x + s * p.y), -(-s * p.x + c * p.y), -p.yaw)


def _translation_factors(theta: float) -> tuple[float, float]:
    # a = sin(t)/t, b = (1 - cos(t))/t, with series below SMALL_ANGLE
    if abs(theta) < SMALL_ANGLE:
        return 1.0 - theta * theta / 6.0, 0.5 * theta - theta**3 / 24.0
    return math.sin(theta) / theta, (1.0 - math.cos(theta)) / theta


def exp(xi: Twist, dt: float) -> Pose:
    """Closed-form SE(2) exponential of the twist integrated over dt seconds."""
    if dt < 0.0:
        raise ValueError("dt must be >= 0")
    ux, uy, theta = xi.vx * dt, xi.vy * dt, xi.omega * dt
    a, b = _translation_factors(theta)
    return Pose(a * ux - b * uy, b * ux + a * uy, theta)


def log(p: Pose) -> Twist:
    """Principal-branch logarithm: exp(log(p), 1) == p.

    Raises YawAtBranchCut within 1e-6 of yaw = +/-pi, where the branch is
    ambiguous.
    """
    theta = p.yaw
    if abs(theta) >= math.pi - _BRANCH_MARGIN:
        raise YawAtBranchCut(f"yaw {theta!r} too close to the +/-pi branch cut")
    a, b = _translation_factors(theta)
    d = a * a + b * b
    return Twist((a * p.x + b * p.y) / d, (-b * p.x + a * p.y) / d, theta)


def body_velocity(timed_poses: Sequence[tuple[float, Pose]]) -> list[tuple[float, Twist]]:
    """Finite-difference body twists from a timed pose sequence.

    The twist stored at t[i] is log(inverse(P[i]) * P[i+1]) / (t[i+1] - t[i]):
    the average body velocity over the interval, so it is centered on the
    interval midpoint. The last entry repeats the previous twist to keep the
    output the same length as the input.
    """
    if len(timed_poses) < 2:
        raise ValueError("need at least two timed poses")
    out: list[tuple[float, Twist]] = []
    for i in range(len(timed_poses) - 1):
        t0, p0 = timed_poses[i]
        t1, p1 = timed_poses[i + 1]
        dt = t1 - t0
        if dt <= 0.0:
            raise NonMonotonicTime(
                f"timestamps not strictly increasing at index {i + 1}", line=i + 1
            )
        rel = log(compose(inverse(p0), p1))
        out.append((t0, Twist(rel.vx / dt, rel.vy / dt, rel.omega / dt)))
    out.append((timed_poses[-1][0], out[-1][1]))
    return out
