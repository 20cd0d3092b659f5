"""Heading-dependent wrench cost model over (alpha, gamma).

Each generalized-force component (fx forward N, fy lateral N, tau yaw N*m)
is an independent linear combination over the basis

    {1, alpha, alpha*cos(gamma), alpha*|sin(gamma)|}

restricted by a per-component mask. Every gamma-dependent term carries an
alpha factor, so evaluation on flat ground is heading-independent by
construction, and gamma enters only through cos(gamma) and |sin(gamma)|,
which makes predicted power symmetric under gamma -> 2*pi - gamma.

Power evaluation modes:

* "literal": P = fx*vx + fy*vy + tau*omega, the plain inner product.
  Reversed motion yields negative power.
* "dissipative" (default): P = fx*|vx| + fy*|vy| + tau*|omega|. Components
  act as per-axis motion costs, so power keeps its sign when a twist
  component flips.

Both modes add idle_power_w, the standing electrical draw. Component values
are capped at +/-f_max to reject runaway extrapolation outside the
calibrated slope range; a capped evaluation is flagged on the Wrench.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .terrain import SlopeFrame

BASIS_TERMS = ("1", "alpha", "alpha_cos_gamma", "alpha_abs_sin_gamma")
COMPONENTS = ("fx", "fy", "tau")
EVAL_MODES = ("literal", "dissipative")

# Default masks: forward cost carries the gravity-aligned cos(gamma) term,
# lateral and yaw costs grow with slope magnitude alone.
DEFAULT_BASIS_MASKS = {
    "fx": ("1", "alpha", "alpha_cos_gamma"),
    "fy": ("1", "alpha"),
    "tau": ("1", "alpha"),
}

_AXIS_COMPONENT = {"forward": "fx", "lateral": "fy", "yaw": "tau"}


def term_value(term: str, alpha: float, gamma: float) -> float:
    if term == "1":
        return 1.0
    if term == "alpha":
        return alpha
    if term == "alpha_cos_gamma":
        return alpha * math.cos(gamma)
    if term == "alpha_abs_sin_gamma":
        return alpha * abs(math.sin(gamma))
    raise ValueError(f"unknown basis term {term!r}")


def term_values(term: str, alphas, gammas) -> np.ndarray:
    """Vectorized term_value over broadcastable alpha/gamma arrays."""
    alphas = np.asarray(alphas, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    if term == "1":
        return np.ones(np.broadcast(alphas, gammas).shape)
    if term == "alpha":
        return np.broadcast_to(alphas, np.broadcast(alphas, gammas).shape).copy()
    if term == "alpha_cos_gamma":
        return alphas * np.cos(gammas)
    if term == "alpha_abs_sin_gamma":
        return alphas * np.abs(np.sin(gammas))
    raise ValueError(f"unknown basis term {term!r}")


def basis_row(mask: Sequence[str], alpha: float, gamma: float) -> list[float]:
    """Design-matrix row for one (alpha, gamma) condition."""
    return [term_value(t, alpha, gamma) for t in mask]


@dataclass(frozen=True)
class Wrench:
    """Generalized force (fx N, fy N, tau N*m) in the body frame.

    capped is True when any component hit the f_max sanity cap.
    """

    fx: float
    fy: float
    tau: float
    capped: bool = False


@dataclass
class WrenchModel:
    coeffs: dict[str, tuple[float, ...]]
    basis_masks: dict[str, tuple[str, ...]] = field(
        default_factory=lambda: dict(DEFAULT_BASIS_MASKS)
    )
    eval_mode: str = "dissipative"
    idle_power_w: float = 0.0
    f_max: float = 500.0
    alpha_fit_range_deg: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.eval_mode not in EVAL_MODES:
            raise ValueError(f"eval_mode must be one of {EVAL_MODES}")
        if not self.f_max > 0.0:
            raise ValueError("f_max must be > 0")
        if not math.isfinite(self.idle_power_w):
            raise ValueError("idle_power_w must be finite")
        self.basis_masks = {k: tuple(v) for k, v in self.basis_masks.items()}
        self.coeffs = {k: tuple(float(c) for c in v) for k, v in self.coeffs.items()}
        for comp in COMPONENTS:
            mask = self.basis_masks.get(comp)
            vec = self.coeffs.get(comp)
            if mask is None or vec is None:
                raise ValueError(f"missing mask or coefficients for {comp!r}")
            for t in mask:
                if t not in BASIS_TERMS:
                    raise ValueError(f"unknown basis term {t!r} for {comp!r}")
            if len(mask) != len(vec):
                raise ValueError(f"{comp!r}: {len(vec)} coefficients for {len(mask)} terms")
        if self.alpha_fit_range_deg is not None:
            lo, hi = self.alpha_fit_range_deg
            self.alpha_fit_range_deg = (float(lo), float(hi))

    @classmethod
    def constant(cls, fx: float = 0.0, fy: float = 0.0, tau: float = 0.0, **kwargs) -> "WrenchModel":
        """Slope-independent model; handy as a test fixture."""
        return cls(
            coeffs={"fx": (fx,), "fy": (fy,), "tau": (tau,)},
            basis_masks={"fx": ("1",), "fy": ("1",), "tau": ("1",)},
            **kwargs,
        )

    def component_value(self, component: str, frame: SlopeFrame) -> tuple[float, bool]:
        """Raw basis evaluation capped at +/-f_max; returns (value, capped)."""
        v = 0.0
        for term, c in zip(self.basis_masks[component], self.coeffs[component]):
            v += c * term_value(term, frame.alpha, frame.gamma)
        if abs(v) > self.f_max:
            return math.copysign(self.f_max, v), True
        return v, False

    def evaluate(self, frame: SlopeFrame) -> Wrench:
        fx, c1 = self.component_value("fx", frame)
        fy, c2 = self.component_value("fy", frame)
        tau, c3 = self.component_value("tau", frame)
        return Wrench(fx, fy, tau, c1 or c2 or c3)

    def power(self, frame: SlopeFrame, twist) -> float:
        """Instantaneous power (W) for a body twist in the given slope frame."""
        w = self.evaluate(frame)
        if self.eval_mode == "literal":
            p = w.fx * twist.vx + w.fy * twist.vy + w.tau * twist.omega
        else:
            p = w.fx * abs(twist.vx) + w.fy * abs(twist.vy) + w.tau * abs(twist.omega)
        return p + self.idle_power_w

    def cost_per_meter(self, frame: SlopeFrame, axis: str = "forward") -> float:
        """Per-meter (or per-radian for "yaw") motion cost along a body axis."""
        return self.component_value(_AXIS_COMPONENT[axis], frame)[0]

    def min_cost_per_meter(self, alpha_lo: float, alpha_hi: float,
                           axes: Iterable[str] = ("forward",)) -> float:
        """Exact minimum of cost_per_meter over alpha in [lo, hi], gamma free.

        The cost is affine in alpha and in (cos(gamma), |sin(gamma)|), so the
        minimum sits at an alpha endpoint with gamma at an endpoint or the
        interior stationary angle.
        """
        best = math.inf
        for axis in axes:
            comp = _AXIS_COMPONENT[axis]
            c = dict(zip(self.basis_masks[comp], self.coeffs[comp]))
            g_min = _gamma_term_min(c.get("alpha_cos_gamma", 0.0),
                                    c.get("alpha_abs_sin_gamma", 0.0))
            slope = c.get("alpha", 0.0) + g_min
            raw = c.get("1", 0.0) + min(alpha_lo * slope, alpha_hi * slope)
            best = min(best, min(max(raw, -self.f_max), self.f_max))
        return best

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "basis_masks": {k: list(v) for k, v in self.basis_masks.items()},
            "coeffs": {k: list(v) for k, v in self.coeffs.items()},
            "eval_mode": self.eval_mode,
            "idle_power_w": self.idle_power_w,
            "f_max": self.f_max,
            "alpha_fit_range_deg": (
                list(self.alpha_fit_range_deg) if self.alpha_fit_range_deg else None
            ),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "WrenchModel":
        rng = data.get("alpha_fit_range_deg")
        return cls(
            coeffs={k: tuple(v) for k, v in data["coeffs"].items()},
            basis_masks={k: tuple(v) for k, v in data["basis_masks"].items()},
            eval_mode=data.get("eval_mode", "dissipative"),
            idle_power_w=data.get("idle_power_w", 0.0),
            f_max=data.get("f_max", 500.0),
            alpha_fit_range_deg=tuple(rng) if rng else None,
        )


def _gamma_term_min(a_cos: float, a_sin: float) -> float:
    # min over gamma of a_cos*cos(g) + a_sin*|sin(g)|. Mirror symmetry
    # reduces the search to [0, pi], where |sin| = sin and the expression is
    # r*cos(g - phi): minimum -r when g = pi + phi lands in range, else the
    # cheaper endpoint.
    best = min(a_cos, -a_cos)
    phi = math.atan2(a_sin, a_cos)
    if -math.pi <= phi <= 0.0:
        best = min(best, -math.hypot(a_cos, a_sin))
    return best


def export_cost_map(model: WrenchModel, alphas_rad, gammas_rad,
                    axis: str = "forward") -> np.ndarray:
    """Per-meter cost grid: rows follow alphas_rad, columns gammas_rad."""
    alphas = np.asarray(list(alphas_rad), dtype=float)
    gammas = np.asarray(list(gammas_rad), dtype=float)
    if alphas.size == 0 or gammas.size == 0:
        raise ValueError("alpha and gamma ranges must be non-empty")
    comp = _AXIS_COMPONENT[axis]
    grid = np.zeros((alphas.size, gammas.size))
    for term, c in zip(model.basis_masks[comp], model.coeffs[comp]):
        grid += c * term_values(term, alphas[:, None], gammas[None, :])
    return np.clip(grid, -model.f_max, model.f_max)


def cost_map_csv(model: WrenchModel, alphas_rad, gammas_rad,
                 axis: str = "forward") -> str:
    """Cost map as CSV: header row of gamma degrees, first column alpha degrees."""
    alphas = list(alphas_rad)
    grid = export_cost_map(model, alphas, gammas_rad, axis)
    lines = ["alpha_deg," + ",".join(repr(math.degrees(g)) for g in gammas_rad)]
    for a, row in zip(alphas, grid):
        lines.append(repr(math.degrees(a)) + "," + ",".join(repr(v) for v in row))
    return "\n".join(lines) + "\n"
