"""Short-window wrench estimation and least-squares model fitting.

The estimator follows an axis-pure protocol: cleaned telemetry is cut into
maximal contiguous windows where one twist component dominates and the
slope frame holds steady. Each window yields a single wrench-component
sample,

    value = (mean electrical power - idle) / mean |dominant twist component|,

tagged with the window-mean (alpha, gamma). The per-component samples are
then fit independently by ordinary least squares over the enabled basis
terms. Slope frames come either from the IMU gravity vector (default) or
from a terrain map plus odometry poses; the config selects the source.

Heading for lateral runs is defined by body heading, not motion direction.
For rotation-dominant windows the gamma-drift constraint is waived: gamma
sweeps by construction while the robot spins, and yaw cost is modeled as
heading-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import IllConditioned, InsufficientSamples, NoDominantAxis
from .se2 import wrap_angle, wrap_angle_2pi
from .telemetry import TelemetrySample, electrical_power
from .terrain import SlopeFrame, Terrain, slope_frame_at, slope_from_gravity
from .wrench_model import DEFAULT_BASIS_MASKS, COMPONENTS, WrenchModel, basis_row

_COMPONENT_OF_AXIS = {"vx": "fx", "vy": "fy", "omega": "tau"}


@dataclass(frozen=True)
class CalibrationConfig:
    min_duration_s: float = 2.0
    max_twist_cv: float = 0.2
    max_alpha_drift_deg: float = 3.0
    max_gamma_drift_deg: float = 10.0
    dominance_ratio: float = 3.0
    min_window_samples: int = 10
    max_gap_s: float = 0.25          # split windows across recording gaps
    idle_power_w: float = 0.0
    frame_source: str = "gravity"    # "gravity" or "terrain"
    basis_masks: dict | None = None  # None -> DEFAULT_BASIS_MASKS
    eval_mode: str = "dissipative"
    f_max: float = 500.0
    max_condition_number: float = 1e8
    alpha_bin_deg: float = 2.0
    gamma_bin_deg: float = 15.0

    def __post_init__(self) -> None:
        if self.frame_source not in ("gravity", "terrain"):
            raise ValueError("frame_source must be 'gravity' or 'terrain'")
        if self.dominance_ratio < 1.0:
            raise ValueError("dominance_ratio must be >= 1")


@dataclass(frozen=True)
class Window:
    """Contiguous index range [start, stop) with one dominant twist axis."""

    start: int
    stop: int
    axis: str  # "vx", "vy", or "omega"

    def __len__(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True)
class WrenchSample:
    window_id: int
    alpha_rad: float
    gamma_rad: float
    component: str     # "fx", "fy", or "tau"
    value: float       # N, or N*m for tau
    n_samples: int
    twist_cv: float
    power_cv: float


@dataclass
class ComponentFit:
    mask: tuple[str, ...]
    coeffs: tuple[float, ...]
    residual_rms: float
    condition_number: float
    n_samples: int
    residuals: list[tuple[int, float]]  # (window_id, residual)

    def to_json_dict(self) -> dict:
        return {
            "mask": list(self.mask),
            "coeffs": list(self.coeffs),
            "residual_rms": self.residual_rms,
            "condition_number": self.condition_number,
            "n_samples": self.n_samples,
            "residuals": [[wid, r] for wid, r in self.residuals],
        }


@dataclass
class FitReport:
    components: dict[str, ComponentFit]

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "components": {k: v.to_json_dict() for k, v in self.components.items()},
        }


@dataclass
class RepeatabilityBin:
    component: str
    alpha_bin_deg: float  # inclusive lower edge
    gamma_bin_deg: float
    n: int
    mean: float
    std: float
    cv: float
    flagged: bool  # fewer than 2 samples


@dataclass
class CalibrationResult:
    model: WrenchModel
    report: FitReport
    wrench_samples: list[WrenchSample]
    n_windows: int
    n_skipped_windows: int


def slope_frames(samples: Sequence[TelemetrySample], source: str = "gravity",
                 terrain: Terrain | None = None) -> list[SlopeFrame]:
    """Per-sample slope frames from the configured source."""
    if source == "gravity":
        return [slope_from_gravity(s.gravity_body) for s in samples]
    if source == "terrain":
        if terrain is None:
            raise ValueError("terrain frame source requires a terrain")
        return [slope_frame_at(terrain, s.pose) for s in samples]
    raise ValueError(f"unknown frame source {source!r}")


def _axis_value(s: TelemetrySample, axis: str) -> float:
    return getattr(s.twist, axis)


def segment_windows(samples: Sequence[TelemetrySample], frames: Sequence[SlopeFrame],
                    config: CalibrationConfig | None = None) -> list[Window]:
    """Cut samples into maximal steady windows; short ones are discarded.

    A window extends while the same twist axis stays largest sample-to-sample,
    time stays gap-free, window alpha drift and (for translation axes) gamma
    drift stay within bounds, and the dominant component's coefficient of
    variation stays below max_twist_cv.
    """
    cfg = config or CalibrationConfig()
    n = len(samples)
    if n == 0:
        return []
    max_a = math.radians(cfg.max_alpha_drift_deg)
    max_g = math.radians(cfg.max_gamma_drift_deg)
    t = [s.t for s in samples]
    alphas = [f.alpha for f in frames]
    gammas = [f.gamma for f in frames]
    values = {
        "vx": [s.twist.vx for s in samples],
        "vy": [s.twist.vy for s in samples],
        "omega": [s.twist.omega for s in samples],
    }
    axes = []
    for vx, vy, om in zip(values["vx"], values["vy"], values["omega"]):
        ax, ay, aw = abs(vx), abs(vy), abs(om)
        axes.append("vx" if ax >= ay and ax >= aw else ("vy" if ay >= aw else "omega"))

    windows: list[Window] = []
    i = 0
    while i < n:
        axis = axes[i]
        check_gamma = axis != "omega"
        vals = values[axis]
        v0 = vals[i]
        s1, s2 = v0, v0 * v0
        a_min = a_max = alphas[i]
        g_ref = gammas[i]
        g_dev_min = g_dev_max = 0.0
        j = i + 1
        while j < n:
            if axes[j] != axis:
                break
            if t[j] - t[j - 1] > cfg.max_gap_s:
                break
            a = alphas[j]
            na_min, na_max = min(a_min, a), max(a_max, a)
            if na_max - na_min > max_a:
                break
            if check_gamma:
                dev = wrap_angle(gammas[j] - g_ref)
                ng_min, ng_max = min(g_dev_min, dev), max(g_dev_max, dev)
                if ng_max - ng_min > max_g:
                    break
            v = vals[j]
            ns1, ns2 = s1 + v, s2 + v * v
            k = j - i + 1
            mean = ns1 / k
            var = max(ns2 / k - mean * mean, 0.0)
            if abs(mean) > 0.0 and math.sqrt(var) / abs(mean) > cfg.max_twist_cv:
                break
            s1, s2 = ns1, ns2
            a_min, a_max = na_min, na_max
            if check_gamma:
                g_dev_min, g_dev_max = ng_min, ng_max
            j += 1
        duration = t[j - 1] - t[i]
        if duration >= cfg.min_duration_s and (j - i) >= cfg.min_window_samples:
            windows.append(Window(i, j, axis))
        i = j
    return windows


def _circular_mean(angles: np.ndarray) -> float:
    s, c = np.mean(np.sin(angles)), np.mean(np.cos(angles))
    if math.hypot(s, c) < 1e-12:
        return 0.0
    return wrap_angle_2pi(math.atan2(s, c))


def estimate_wrench_sample(samples: Sequence[TelemetrySample],
                           frames: Sequence[SlopeFrame], window: Window,
                           window_id: int,
                           config: CalibrationConfig | None = None) -> WrenchSample:
    """One wrench-component estimate from a steady window.

    Raises NoDominantAxis unless the window's mean twist component exceeds
    the other two by the configured dominance ratio.
    """
    cfg = config or CalibrationConfig()
    sl = slice(window.start, window.stop)
    sub = samples[sl]
    means = {
        "vx": float(np.mean([s.twist.vx for s in sub])),
        "vy": float(np.mean([s.twist.vy for s in sub])),
        "omega": float(np.mean([s.twist.omega for s in sub])),
    }
    dom = abs(means[window.axis])
    for axis, m in means.items():
        if axis != window.axis and dom < cfg.dominance_ratio * abs(m):
            raise NoDominantAxis(
                f"window {window_id}: |mean {window.axis}| = {dom:.4f} not "
                f">= {cfg.dominance_ratio}x |mean {axis}| = {abs(m):.4f}"
            )
    comp_vals = np.array([_axis_value(s, window.axis) for s in sub])
    p = np.array([electrical_power(s) for s in sub])
    denom = float(np.mean(np.abs(comp_vals)))
    value = (float(np.mean(p)) - cfg.idle_power_w) / denom
    alpha = float(np.mean([f.alpha for f in frames[sl]]))
    gamma = _circular_mean(np.array([f.gamma for f in frames[sl]]))
    twist_cv = float(np.std(comp_vals) / max(abs(np.mean(comp_vals)), 1e-300))
    power_cv = float(np.std(p) / max(abs(np.mean(p)), 1e-300))
    return WrenchSample(window_id, alpha, gamma, _COMPONENT_OF_AXIS[window.axis],
                        value, len(sub), twist_cv, power_cv)


def estimate_windows(samples, frames, windows,
                     config: CalibrationConfig | None = None,
                     ) -> tuple[list[WrenchSample], int]:
    """Estimate every window, skipping (and counting) non-dominant ones."""
    out: list[WrenchSample] = []
    skipped = 0
    for wid, w in enumerate(windows):
        try:
            out.append(estimate_wrench_sample(samples, frames, w, wid, config))
        except NoDominantAxis:
            skipped += 1
    return out, skipped


def fit_model(wrench_samples: Sequence[WrenchSample],
              basis_masks: dict | None = None, *,
              eval_mode: str = "dissipative", idle_power_w: float = 0.0,
              f_max: float = 500.0,
              max_condition_number: float = 1e8) -> tuple[WrenchModel, FitReport]:
    """Independent ordinary least squares per component over enabled terms."""
    masks = {k: tuple(v) for k, v in (basis_masks or DEFAULT_BASIS_MASKS).items()}
    coeffs: dict[str, tuple[float, ...]] = {}
    fits: dict[str, ComponentFit] = {}
    for comp in COMPONENTS:
        rows = sorted((ws for ws in wrench_samples if ws.component == comp),
                      key=lambda ws: ws.window_id)
        mask = masks[comp]
        if len(rows) < len(mask):
            raise InsufficientSamples(
                f"{comp}: {len(rows)} samples for {len(mask)} basis terms"
            )
        a = np.array([basis_row(mask, ws.alpha_rad, ws.gamma_rad) for ws in rows])
        y = np.array([ws.value for ws in rows])
        cond = float(np.linalg.cond(a))
        if cond > max_condition_number:
            raise IllConditioned(f"{comp}: condition number {cond:.3e}")
        sol, *_ = np.linalg.lstsq(a, y, rcond=None)
        res = y - a @ sol
        coeffs[comp] = tuple(float(v) for v in sol)
        fits[comp] = ComponentFit(
            mask, coeffs[comp],
            float(np.sqrt(np.mean(res**2))), cond, len(rows),
            [(ws.window_id, float(r)) for ws, r in zip(rows, res)],
        )
    alphas = [ws.alpha_rad for ws in wrench_samples]
    model = WrenchModel(
        coeffs=coeffs, basis_masks=masks, eval_mode=eval_mode,
        idle_power_w=idle_power_w, f_max=f_max,
        alpha_fit_range_deg=(math.degrees(min(alphas)), math.degrees(max(alphas))),
    )
    return model, FitReport(fits)


def repeatability_report(wrench_samples: Sequence[WrenchSample],
                         alpha_bin_deg: float = 2.0,
                         gamma_bin_deg: float = 15.0) -> list[RepeatabilityBin]:
    """Per-(alpha, gamma, component) bin statistics; half-open [lo, hi) bins."""
    groups: dict[tuple, list[float]] = {}
    for ws in wrench_samples:
        key = (
            ws.component,
            math.floor(math.degrees(ws.alpha_rad) / alpha_bin_deg) * alpha_bin_deg,
            math.floor(math.degrees(ws.gamma_rad) / gamma_bin_deg) * gamma_bin_deg,
        )
        groups.setdefault(key, []).append(ws.value)
    bins = []
    for (comp, a_lo, g_lo), vals in sorted(groups.items()):
        arr = np.asarray(vals)
        mean = float(arr.mean())
        std = float(arr.std())  # population std
        cv = std / abs(mean) if mean != 0.0 else math.inf
        bins.append(RepeatabilityBin(comp, a_lo, g_lo, len(vals), mean, std, cv,
                                     flagged=len(vals) < 2))
    return bins


def calibrate(samples: Sequence[TelemetrySample],
              config: CalibrationConfig | None = None,
              terrain: Terrain | None = None) -> CalibrationResult:
    """Window, estimate, and fit in one pass over cleaned telemetry."""
    cfg = config or CalibrationConfig()
    frames = slope_frames(samples, cfg.frame_source, terrain)
    windows = segment_windows(samples, frames, cfg)
    wrench_samples, skipped = estimate_windows(samples, frames, windows, cfg)
    model, report = fit_model(
        wrench_samples, cfg.basis_masks, eval_mode=cfg.eval_mode,
        idle_power_w=cfg.idle_power_w, f_max=cfg.f_max,
        max_condition_number=cfg.max_condition_number,
    )
    return CalibrationResult(model, report, wrench_samples, len(windows), skipped)


WRENCH_SAMPLE_HEADER = "window_id,alpha_rad,gamma_rad,component,value,n_samples,twist_cv,power_cv"


def write_wrench_samples_csv(path, wrench_samples: Sequence[WrenchSample]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(WRENCH_SAMPLE_HEADER + "\n")
        for ws in wrench_samples:
            fh.write(
                f"{ws.window_id},{ws.alpha_rad!r},{ws.gamma_rad!r},{ws.component},"
                f"{ws.value!r},{ws.n_samples},{ws.twist_cv!r},{ws.power_cv!r}\n"
            )


def read_wrench_samples_csv(path) -> list[WrenchSample]:
    with open(path, newline="") as fh:
        header = fh.readline().rstrip("\n")
        if header != WRENCH_SAMPLE_HEADER:
            raise ValueError(f"bad header, expected {WRENCH_SAMPLE_HEADER!r}")
        out = []
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            wid, a, g, comp, val, n, tcv, pcv = line.split(",")
            out.append(WrenchSample(int(wid), float(a), float(g), comp,
                                    float(val), int(n), float(tcv), float(pcv)))
    return out
