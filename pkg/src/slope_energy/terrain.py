"""Terrain models and slope-frame extraction.

Two terrain representations: an unbounded uniform plane (fixed slope angle
plus the world azimuth of steepest ascent) and a grid heightmap with
bilinear interpolation between nodes. Slope queries return the local
inclination alpha and the uphill azimuth; the robot heading gamma relative
to that azimuth (0 uphill, pi downhill, pi/2 cross-slope) is what the
wrench model consumes.

The gravity route mirrors what a tilt-only IMU can provide: with the body
plane assumed parallel to the terrain plane, the measured gravity vector
alone fixes both alpha and gamma.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ImplausibleGravityNorm, OutOfBounds
from .se2 import Pose, wrap_angle_2pi

GRAVITY_NORM_RANGE = (8.0, 11.5)  # m/s^2, plausibility band for IMU gravity


@dataclass(frozen=True)
class SlopeFrame:
    """Local slope angle alpha in [0, pi/2) and heading gamma in [0, 2*pi)."""

    alpha: float
    gamma: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha < math.pi / 2.0:
            raise ValueError(f"alpha {self.alpha!r} outside [0, pi/2)")
        object.__setattr__(self, "gamma", wrap_angle_2pi(self.gamma))


class Terrain:
    """Common query surface for terrain representations."""

    def contains(self, x: float, y: float) -> bool:
        raise NotImplementedError

    def local_slope(self, x: float, y: float) -> tuple[float, float]:
        """Return (alpha, uphill_azimuth) at world point (x, y)."""
        raise NotImplementedError

    def alpha_bounds(self) -> tuple[float, float]:
        """Conservative [lo, hi] range of alpha over the whole domain."""
        raise NotImplementedError


class UniformPlane(Terrain):
    """Unbounded plane with constant slope angle and uphill azimuth."""

    def __init__(self, alpha: float, aspect: float):
        if not 0.0 <= alpha < math.pi / 2.0:
            raise ValueError(f"alpha {alpha!r} outside [0, pi/2)")
        self.alpha = float(alpha)
        self.aspect = wrap_angle_2pi(float(aspect))

    def contains(self, x: float, y: float) -> bool:
        return True

    def local_slope(self, x: float, y: float) -> tuple[float, float]:
        return self.alpha, self.aspect

    def alpha_bounds(self) -> tuple[float, float]:
        return self.alpha, self.alpha


class GridHeightmap(Terrain):
    """Row-major height grid; heights[j, i] sits at origin + (i, j)*cell."""

    def __init__(self, heights, cell_size_m: float, origin_xy=(0.0, 0.0)):
        h = np.asarray(heights, dtype=float)
        if h.ndim != 2 or h.shape[0] < 2 or h.shape[1] < 2:
            raise ValueError("heightmap needs at least a 2x2 grid")
        if not np.isfinite(h).all():
            raise ValueError("heightmap heights must all be finite")
        if cell_size_m <= 0.0:
            raise ValueError("cell_size_m must be > 0")
        self.heights = h
        self.cell_size_m = float(cell_size_m)
        self.origin_xy = (float(origin_xy[0]), float(origin_xy[1]))

    @property
    def x_range(self) -> tuple[float, float]:
        return self.origin_xy[0], self.origin_xy[0] + (self.heights.shape[1] - 1) * self.cell_size_m

    @property
    def y_range(self) -> tuple[float, float]:
        return self.origin_xy[1], self.origin_xy[1] + (self.heights.shape[0] - 1) * self.cell_size_m

    def contains(self, x: float, y: float) -> bool:
        tol = 1e-9 * self.cell_size_m
        (x0, x1), (y0, y1) = self.x_range, self.y_range
        return x0 - tol <= x <= x1 + tol and y0 - tol <= y <= y1 + tol

    def _require_inside(self, x: float, y: float) -> None:
        if not self.contains(x, y):
            raise OutOfBounds(f"point ({x}, {y}) outside heightmap domain")

    def height(self, x: float, y: float) -> float:
        """Bilinear height interpolation."""
        self._require_inside(x, y)
        c = self.cell_size_m
        ny, nx = self.heights.shape
        u = (x - self.origin_xy[0]) / c
        v = (y - self.origin_xy[1]) / c
        i0 = min(max(int(math.floor(u)), 0), nx - 2)
        j0 = min(max(int(math.floor(v)), 0), ny - 2)
        fu, fv = u - i0, v - j0
        h = self.heights
        return (
            h[j0, i0] * (1 - fu) * (1 - fv)
            + h[j0, i0 + 1] * fu * (1 - fv)
            + h[j0 + 1, i0] * (1 - fu) * fv
            + h[j0 + 1, i0 + 1] * fu * fv
        )

    def local_slope(self, x: float, y: float) -> tuple[float, float]:
        # Central differences with a half-cell step on the bilinear surface,
        # clamped to the domain near borders so the quotient stays defined.
        self._require_inside(x, y)
        d = 0.5 * self.cell_size_m
        (x0, x1), (y0, y1) = self.x_range, self.y_range
        xa, xb = max(x - d, x0), min(x + d, x1)
        ya, yb = max(y - d, y0), min(y + d, y1)
        gx = (self.height(xb, y) - self.height(xa, y)) / (xb - xa)
        gy = (self.height(x, yb) - self.height(x, ya)) / (yb - ya)
        mag = math.hypot(gx, gy)
        if mag == 0.0:
            return 0.0, 0.0  # flat: azimuth 0 by convention
        return math.atan(mag), wrap_angle_2pi(math.atan2(gy, gx))

    def alpha_bounds(self) -> tuple[float, float]:
        # The interpolated gradient along each axis is an average of node
        # differences, so the max node difference per axis bounds it.
        c = self.cell_size_m
        mx = float(np.abs(np.diff(self.heights, axis=1)).max()) / c
        my = float(np.abs(np.diff(self.heights, axis=0)).max()) / c
        return 0.0, math.atan(math.hypot(mx, my))


def heading_relative_to_slope(pose: Pose, uphill_azimuth: float) -> float:
    """Heading gamma of the body x-axis relative to steepest ascent."""
    return wrap_angle_2pi(uphill_azimuth - pose.yaw)


def slope_frame_at(terrain: Terrain, pose: Pose) -> SlopeFrame:
    """Slope frame at a pose: terrain slope plus heading relative to it."""
    alpha, azimuth = terrain.local_slope(pose.x, pose.y)
    return SlopeFrame(alpha, heading_relative_to_slope(pose, azimuth))


def slope_from_gravity(gravity_body: Sequence[float]) -> SlopeFrame:
    """Slope frame from a body-frame gravity vector (tilt-only estimate).

    Assumes the body plane is parallel to the local terrain plane, valid for
    quasi-static walking. With u = -g/|g| (unit "up" in body coordinates):
    alpha = arccos(u_z), gamma = atan2(u_y, u_x).
    """
    gx, gy, gz = (float(v) for v in gravity_body)
    norm = math.sqrt(gx * gx + gy * gy + gz * gz)
    lo, hi = GRAVITY_NORM_RANGE
    if not lo <= norm <= hi:
        raise ImplausibleGravityNorm(f"gravity norm {norm:.3f} outside [{lo}, {hi}] m/s^2")
    ux, uy, uz = -gx / norm, -gy / norm, -gz / norm
    alpha = math.acos(min(1.0, max(-1.0, uz)))
    gamma = wrap_angle_2pi(math.atan2(uy, ux)) if math.hypot(ux, uy) > 1e-15 else 0.0
    return SlopeFrame(alpha, gamma)


def load_heightmap_csv(path) -> np.ndarray:
    """Read a row-major heightmap CSV (row 0 = minimum y), meters."""
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    return np.asarray(rows, dtype=float)


def terrain_from_dict(spec: dict, base_dir=None) -> Terrain:
    """Build a terrain from its JSON description.

    {"type": "plane", "alpha_deg": ..., "aspect_deg": ...} or
    {"type": "grid", "cell_size_m": ..., "origin": [x, y], "heights_csv": path}.
    Relative heights_csv paths resolve against base_dir.
    """
    kind = spec.get("type")
    if kind == "plane":
        return UniformPlane(math.radians(spec["alpha_deg"]), math.radians(spec["aspect_deg"]))
    if kind == "grid":
        csv_path = Path(spec["heights_csv"])
        if base_dir is not None and not csv_path.is_absolute():
            csv_path = Path(base_dir) / csv_path
        heights = load_heightmap_csv(csv_path)
        return GridHeightmap(heights, spec["cell_size_m"], tuple(spec.get("origin", (0.0, 0.0))))
    raise ValueError(f"unknown terrain type {kind!r}")


def load_terrain(path) -> Terrain:
    path = Path(path)
    with open(path) as fh:
        return terrain_from_dict(json.load(fh), base_dir=path.parent)
