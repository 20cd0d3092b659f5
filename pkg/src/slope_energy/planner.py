"""Heading-augmented lattice search for minimum-energy paths.

Nodes are (ix, iy, ih): a grid cell plus one of H evenly spaced headings.
Moves are a forward step to the 8-connected neighbor aligned with the
current heading (only headings that line up with a 45-degree multiple can
step) and in-place turns of +/-1 heading increment. Forward edges cost the
per-meter forward cost at the edge midpoint's (alpha, gamma) times edge
length; turns cost tau at the node times the heading increment. Lateral
steps (per-meter lateral cost, heading unchanged) are available behind a
flag.

Edge costs are floored at zero so the search stays a shortest-path problem
even if a fitted model extrapolates negative; with such models the returned
path's re-integrated energy can drift from the graph total, so keep
planning models positive over the terrain's slope range.

A* uses h(n) = euclidean distance to goal x global minimum per-meter cost
over the terrain's alpha range (exact, see WrenchModel.min_cost_per_meter),
which is admissible and consistent. Ties break on fewer heading changes,
then lexicographic node index, so results are deterministic.
"""

from __future__ import annotations

import heapq
import math
import time
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterator

from .errors import NoPath, OutOfBounds
from .se2 import Pose, wrap_angle_2pi
from .terrain import SlopeFrame, Terrain
from .path_energy import PathSpec, Straight, TurnInPlace
from .wrench_model import WrenchModel

# unit steps for the 8 compass octants, index = angle / 45 degrees
_OCTANT_STEPS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))

Node = tuple[int, int, int]


@dataclass(frozen=True)
class LatticeConfig:
    nx: int
    ny: int
    cell_size_m: float = 1.0
    headings: int = 16
    origin_xy: tuple[float, float] = (0.0, 0.0)
    allow_lateral: bool = False
    speed_mps: float = 0.3    # assigned to emitted primitives; energy is speed-free
    omega_radps: float = 0.5

    def __post_init__(self) -> None:
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid must be at least 1x1")
        if self.cell_size_m <= 0.0:
            raise ValueError("cell_size_m must be > 0")
        if self.headings < 4:
            raise ValueError("need at least 4 headings")


class Lattice:
    """Implicit (cell, heading) graph over terrain with model edge costs."""

    def __init__(self, terrain: Terrain, model: WrenchModel, config: LatticeConfig):
        self.terrain = terrain
        self.model = model
        self.config = config
        h = config.headings
        self.delta_theta = 2.0 * math.pi / h
        self._theta = [i * self.delta_theta for i in range(h)]
        # heading -> octant step when aligned to a 45-degree multiple
        self._step: list[tuple[int, int] | None] = []
        for theta in self._theta:
            k = theta / (math.pi / 4.0)
            self._step.append(_OCTANT_STEPS[round(k) % 8] if abs(k - round(k)) < 1e-9 else None)
        lo, hi = terrain.alpha_bounds()
        axes = ("forward", "lateral") if config.allow_lateral else ("forward",)
        self.min_step_cost = max(0.0, model.min_cost_per_meter(lo, hi, axes))

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.config.nx and 0 <= iy < self.config.ny

    def node_xy(self, ix: int, iy: int) -> tuple[float, float]:
        ox, oy = self.config.origin_xy
        return ox + ix * self.config.cell_size_m, oy + iy * self.config.cell_size_m

    def heading_angle(self, ih: int) -> float:
        return self._theta[ih % self.config.headings]

    def node_pose(self, node: Node) -> Pose:
        x, y = self.node_xy(node[0], node[1])
        return Pose(x, y, self.heading_angle(node[2]))

    def _frame(self, x: float, y: float, body_heading: float) -> SlopeFrame:
        alpha, azimuth = self.terrain.local_slope(x, y)
        return SlopeFrame(alpha, wrap_angle_2pi(azimuth - body_heading))

    def _move_cost(self, ix: int, iy: int, jx: int, jy: int,
                   body_heading: float, axis: str) -> float:
        x0, y0 = self.node_xy(ix, iy)
        x1, y1 = self.node_xy(jx, jy)
        frame = self._frame(0.5 * (x0 + x1), 0.5 * (y0 + y1), body_heading)
        per_meter = max(0.0, self.model.cost_per_meter(frame, axis))
        return per_meter * math.hypot(x1 - x0, y1 - y0)

    def edges(self, node: Node) -> Iterator[tuple[Node, float, str]]:
        """Yield (neighbor, cost, kind); kind in turn_ccw/turn_cw/forward/lateral."""
        ix, iy, ih = node
        n_h = self.config.headings
        x, y = self.node_xy(ix, iy)
        theta = self._theta[ih]
        for sign, kind in ((1, "turn_ccw"), (-1, "turn_cw")):
            mid_heading = theta + sign * 0.5 * self.delta_theta
            frame = self._frame(x, y, mid_heading)
            tau = max(0.0, self.model.cost_per_meter(frame, "yaw"))
            yield (ix, iy, (ih + sign) % n_h), tau * self.delta_theta, kind
        step = self._step[ih]
        if step is not None:
            jx, jy = ix + step[0], iy + step[1]
            if self.in_bounds(jx, jy):
                yield (jx, jy, ih), self._move_cost(ix, iy, jx, jy, theta, "forward"), "forward"
        if self.config.allow_lateral:
            for quarter, kind in ((n_h // 4, "lateral_left"), (-(n_h // 4), "lateral_right")):
                if 4 * abs(quarter) != n_h:
                    break  # lateral steps need headings divisible by 4
                side = self._step[(ih + quarter) % n_h]
                if side is None:
                    continue
                jx, jy = ix + side[0], iy + side[1]
                if self.in_bounds(jx, jy):
                    yield (jx, jy, ih), self._move_cost(ix, iy, jx, jy, theta, "lateral"), kind

    def heuristic(self, node: Node, goal_cell: tuple[int, int]) -> float:
        x, y = self.node_xy(node[0], node[1])
        gx, gy = self.node_xy(goal_cell[0], goal_cell[1])
        return math.hypot(gx - x, gy - y) * self.min_step_cost


@dataclass
class PlanResult:
    path: PathSpec
    energy_j: float
    expanded_nodes: int
    runtime_ms: float

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "path": self.path.to_json_dict(),
            "energy_j": self.energy_j,
            "expanded_nodes": self.expanded_nodes,
            "runtime_ms": self.runtime_ms,
        }


def plan(start: Node, goal_cell: tuple[int, int], terrain: Terrain,
         model: WrenchModel, config: LatticeConfig) -> PlanResult:
    """A* over the heading lattice; goal accepts any heading at the goal cell."""
    lattice = Lattice(terrain, model, config)
    start = (int(start[0]), int(start[1]), int(start[2]) % config.headings)
    goal_cell = (int(goal_cell[0]), int(goal_cell[1]))
    if not lattice.in_bounds(start[0], start[1]):
        raise OutOfBounds(f"start cell {start[:2]} outside the {config.nx}x{config.ny} grid")
    if not lattice.in_bounds(*goal_cell):
        raise OutOfBounds(f"goal cell {goal_cell} outside the {config.nx}x{config.ny} grid")

    t0 = time.perf_counter()
    g = {start: 0.0}
    turns = {start: 0}
    parent: dict[Node, tuple[Node, str, float] | None] = {start: None}
    closed: set[Node] = set()
    heap: list[tuple[float, int, Node]] = [(lattice.heuristic(start, goal_cell), 0, start)]
    expanded = 0
    while heap:
        _, n_turns, node = heapq.heappop(heap)
        if node in closed:
            continue
        closed.add(node)
        expanded += 1
        if node[0] == goal_cell[0] and node[1] == goal_cell[1]:
            runtime_ms = (time.perf_counter() - t0) * 1e3
            return PlanResult(_reconstruct(lattice, parent, start, node),
                              g[node], expanded, runtime_ms)
        for nxt, cost, kind in lattice.edges(node):
            if nxt in closed:
                continue
            cand = g[node] + cost
            cand_turns = n_turns + (1 if kind.startswith("turn") else 0)
            old = g.get(nxt)
            if old is None or cand < old or (cand == old and cand_turns < turns[nxt]):
                g[nxt] = cand
                turns[nxt] = cand_turns
                parent[nxt] = (node, kind, cost)
                heapq.heappush(heap, (cand + lattice.heuristic(nxt, goal_cell),
                                      cand_turns, nxt))
    raise NoPath(f"no route from {start} to cell {goal_cell}")


def _reconstruct(lattice: Lattice, parent, start: Node, goal: Node) -> PathSpec:
    edges: list[tuple[str, Node, Node]] = []
    node = goal
    while parent[node] is not None:
        prev, kind, _ = parent[node]
        edges.append((kind, prev, node))
        node = prev
    edges.reverse()

    cell = lattice.config.cell_size_m
    prims: list = []
    for kind, prev, nxt in edges:
        if kind.startswith("turn"):
            sign = 1.0 if kind == "turn_ccw" else -1.0
            delta = sign * lattice.delta_theta
            if prims and isinstance(prims[-1], TurnInPlace) \
                    and math.copysign(1.0, prims[-1].delta_yaw_rad) == sign:
                prims[-1] = TurnInPlace(prims[-1].delta_yaw_rad + delta,
                                        lattice.config.omega_radps)
            else:
                prims.append(TurnInPlace(delta, lattice.config.omega_radps))
        else:
            axis = "forward" if kind == "forward" else "lateral"
            length = cell * math.hypot(nxt[0] - prev[0], nxt[1] - prev[1])
            if prims and isinstance(prims[-1], Straight) and prims[-1].axis == axis \
                    and kind == "forward":
                prims[-1] = Straight(prims[-1].length_m + length,
                                     lattice.config.speed_mps, axis)
            else:
                prims.append(Straight(length, lattice.config.speed_mps, axis))
    return PathSpec(lattice.node_pose(start), tuple(prims))


def cost_to_goal_map(terrain: Terrain, model: WrenchModel, config: LatticeConfig,
                     goal_cell: tuple[int, int]) -> dict[Node, float]:
    """Exact cost-to-goal for every node via reverse Dijkstra.

    Intended for heuristic audits: heuristic(n) must not exceed this map's
    value anywhere.
    """
    lattice = Lattice(terrain, model, config)
    radj: dict[Node, list[tuple[Node, float]]] = defaultdict(list)
    for ix in range(config.nx):
        for iy in range(config.ny):
            for ih in range(config.headings):
                node = (ix, iy, ih)
                for nxt, cost, _ in lattice.edges(node):
                    radj[nxt].append((node, cost))
    dist: dict[Node, float] = {}
    heap = [(0.0, (goal_cell[0], goal_cell[1], ih)) for ih in range(config.headings)]
    heapq.heapify(heap)
    while heap:
        d, node = heapq.heappop(heap)
        if node in dist:
            continue
        dist[node] = d
        for prev, cost in radj[node]:
            if prev not in dist:
                heapq.heappush(heap, (d + cost, prev))
    return dist
