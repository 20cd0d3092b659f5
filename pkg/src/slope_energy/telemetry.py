"""Telemetry log parsing and preprocessing.

CSV schema (exact header, UTF-8, LF line endings, '.' decimal separator):

    t_s,gx_mps2,gy_mps2,gz_mps2,x_m,y_m,yaw_rad,vx_mps,vy_mps,omega_radps,voltage_v,current_a

Preprocessing pipeline, fixed order:

1. drop near-stationary samples (planar speed and |omega| both below v_min);
2. reject power outliers against a rolling median using a MAD threshold;
3. exponential moving average on power and twist components, restarted
   across recording gaps longer than ema_reset_gap_s;
4. electrical/mechanical power consistency bound, applied only when a
   wrench-model estimate is supplied (skipped otherwise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence, TYPE_CHECKING

import numpy as np
from scipy.signal import lfilter

from .errors import MalformedRow, NonMonotonicTime, WindowTooShort
from .se2 import Pose, Twist
from .terrain import slope_from_gravity

if TYPE_CHECKING:
    from .wrench_model import WrenchModel

TELEMETRY_COLUMNS = (
    "t_s", "gx_mps2", "gy_mps2", "gz_mps2", "x_m", "y_m", "yaw_rad",
    "vx_mps", "vy_mps", "omega_radps", "voltage_v", "current_a",
)
TELEMETRY_HEADER = ",".join(TELEMETRY_COLUMNS)

MAD_SIGMA = 1.4826  # MAD -> sigma consistency constant for normal data


@dataclass(frozen=True)
class TelemetrySample:
    t: float
    gravity_body: tuple[float, float, float]
    pose: Pose
    twist: Twist
    voltage: float
    current: float


@dataclass(frozen=True)
class PreprocessConfig:
    v_min: float = 0.05              # m/s, reused as rad/s for omega
    median_window: int = 5           # odd sample count
    mad_threshold: float = 3.0
    ema_alpha: float = 0.2           # (0, 1]; 1 disables smoothing
    consistency_eta: float = 5.0     # >= 1
    p_floor_w: float = 1.0           # floor for the consistency upper bound
    ema_reset_gap_s: float = 0.25    # restart the EMA across longer gaps

    def __post_init__(self) -> None:
        if self.v_min < 0.0:
            raise ValueError("v_min must be >= 0")
        if self.median_window < 1 or self.median_window % 2 == 0:
            raise ValueError("median_window must be an odd sample count")
        if self.mad_threshold <= 0.0:
            raise ValueError("mad_threshold must be > 0")
        if not 0.0 < self.ema_alpha <= 1.0:
            raise ValueError("ema_alpha must be in (0, 1]")
        if self.consistency_eta < 1.0:
            raise ValueError("consistency_eta must be >= 1")


@dataclass
class PreprocessReport:
    input_count: int
    output_count: int
    dropped_low_speed: int
    dropped_power_outlier: int
    dropped_inconsistent: int
    consistency_checked: bool

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "input_count": self.input_count,
            "output_count": self.output_count,
            "dropped_low_speed": self.dropped_low_speed,
            "dropped_power_outlier": self.dropped_power_outlier,
            "dropped_inconsistent": self.dropped_inconsistent,
            "consistency_checked": self.consistency_checked,
        }


def electrical_power(sample: TelemetrySample) -> float:
    """Battery electrical power draw, P = V * I (W)."""
    return sample.voltage * sample.current


def parse_log(lines: Iterable[str]) -> list[TelemetrySample]:
    """Parse telemetry CSV lines into samples, validating as it goes."""
    it = iter(lines)
    try:
        header = next(it)
    except StopIteration:
        raise MalformedRow(1, "empty file, expected header") from None
    if header.rstrip("\r\n") != TELEMETRY_HEADER:
        raise MalformedRow(1, f"bad header, expected {TELEMETRY_HEADER!r}")
    samples: list[TelemetrySample] = []
    prev_t = -math.inf
    for line_no, line in enumerate(it, start=2):
        line = line.rstrip("\r\n")
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != len(TELEMETRY_COLUMNS):
            raise MalformedRow(line_no, f"expected {len(TELEMETRY_COLUMNS)} fields, got {len(fields)}")
        try:
            vals = [float(f) for f in fields]
        except ValueError as exc:
            raise MalformedRow(line_no, str(exc)) from None
        t, gx, gy, gz, x, y, yaw, vx, vy, om, volt, cur = vals
        if not all(math.isfinite(v) for v in vals):
            raise MalformedRow(line_no, "non-finite field")
        if volt <= 0.0:
            raise MalformedRow(line_no, f"voltage must be > 0, got {volt}")
        if cur < 0.0:
            raise MalformedRow(line_no, f"current must be >= 0 (draw convention), got {cur}")
        if t <= prev_t:
            raise NonMonotonicTime(f"t {t} <= previous {prev_t}", line=line_no)
        prev_t = t
        samples.append(TelemetrySample(t, (gx, gy, gz), Pose(x, y, yaw),
                                       Twist(vx, vy, om), volt, cur))
    return samples


def read_log(path) -> list[TelemetrySample]:
    with open(path, newline="") as fh:
        return parse_log(fh)


def format_row(s: TelemetrySample) -> str:
    vals = (s.t, *s.gravity_body, s.pose.x, s.pose.y, s.pose.yaw,
            s.twist.vx, s.twist.vy, s.twist.omega, s.voltage, s.current)
    return ",".join(repr(v) for v in vals)


def write_log(path, samples: Sequence[TelemetrySample]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(TELEMETRY_HEADER + "\n")
        for s in samples:
            fh.write(format_row(s) + "\n")


def _rolling_median_mad(values: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Centered rolling median and MAD; windows shrink at the edges."""
    n = values.size
    half = window // 2
    med = np.empty(n)
    mad = np.empty(n)
    if n >= window:
        sw = np.lib.stride_tricks.sliding_window_view(values, window)
        med[half:n - half] = np.median(sw, axis=1)
        mad[half:n - half] = np.median(np.abs(sw - med[half:n - half, None]), axis=1)
        edge = list(range(half)) + list(range(n - half, n))
    else:
        edge = list(range(n))
    for i in edge:
        w = values[max(0, i - half):min(n, i + half + 1)]
        med[i] = np.median(w)
        mad[i] = np.median(np.abs(w - med[i]))
    return med, mad


def _ema(values: np.ndarray, alpha: float, t: np.ndarray, reset_gap_s: float) -> np.ndarray:
    """First-order EMA y[k] = a*x[k] + (1-a)*y[k-1], restarted at time gaps."""
    out = np.empty_like(values)
    breaks = np.flatnonzero(np.diff(t) > reset_gap_s) + 1
    for lo, hi in zip(np.r_[0, breaks], np.r_[breaks, values.size]):
        seg = values[lo:hi]
        zi = [(1.0 - alpha) * seg[0]]
        out[lo:hi] = lfilter([alpha], [1.0, -(1.0 - alpha)], seg, zi=zi)[0]
    return out


def preprocess(samples: Sequence[TelemetrySample],
               config: PreprocessConfig | None = None,
               model: "WrenchModel | None" = None,
               ) -> tuple[list[TelemetrySample], PreprocessReport]:
    """Run the cleaning pipeline; returns (cleaned samples, rejection report).

    Raises WindowTooShort if rule 1 leaves some samples but fewer than the
    median filter window.
    """
    cfg = config or PreprocessConfig()
    n_in = len(samples)
    checked = model is not None
    if n_in == 0:
        return [], PreprocessReport(0, 0, 0, 0, 0, checked)

    vx = np.array([s.twist.vx for s in samples])
    vy = np.array([s.twist.vy for s in samples])
    om = np.array([s.twist.omega for s in samples])

    # rule 1: low-speed discard
    moving = (np.hypot(vx, vy) >= cfg.v_min) | (np.abs(om) >= cfg.v_min)
    kept = [s for s, m in zip(samples, moving) if m]
    n_low = n_in - len(kept)
    if not kept:
        return [], PreprocessReport(n_in, 0, n_low, 0, 0, checked)
    if len(kept) < cfg.median_window:
        raise WindowTooShort(
            f"{len(kept)} samples after low-speed discard, need >= {cfg.median_window}"
        )

    # rule 2: MAD outlier rejection on electrical power
    p = np.array([electrical_power(s) for s in kept])
    med, mad = _rolling_median_mad(p, cfg.median_window)
    inlier = np.abs(p - med) <= cfg.mad_threshold * MAD_SIGMA * mad
    n_outlier = int(np.count_nonzero(~inlier))
    kept = [s for s, m in zip(kept, inlier) if m]
    if not kept:
        return [], PreprocessReport(n_in, 0, n_low, n_outlier, 0, checked)

    # rule 3: EMA smoothing of power and twist components
    t = np.array([s.t for s in kept])
    p = p[inlier]
    vx = np.array([s.twist.vx for s in kept])
    vy = np.array([s.twist.vy for s in kept])
    om = np.array([s.twist.omega for s in kept])
    p_s = _ema(p, cfg.ema_alpha, t, cfg.ema_reset_gap_s)
    vx_s = _ema(vx, cfg.ema_alpha, t, cfg.ema_reset_gap_s)
    vy_s = _ema(vy, cfg.ema_alpha, t, cfg.ema_reset_gap_s)
    om_s = _ema(om, cfg.ema_alpha, t, cfg.ema_reset_gap_s)

    smoothed = [
        replace(s, twist=Twist(vx_s[i], vy_s[i], om_s[i]), current=p_s[i] / s.voltage)
        for i, s in enumerate(kept)
    ]

    # rule 4: electrical/mechanical consistency (needs a model estimate)
    n_inconsistent = 0
    if model is not None:
        out = []
        for s in smoothed:
            p_mech = model.power(slope_from_gravity(s.gravity_body), s.twist)
            p_elec = electrical_power(s)
            hi = cfg.consistency_eta * max(p_mech, cfg.p_floor_w)
            if p_elec < p_mech / cfg.consistency_eta or p_elec > hi:
                n_inconsistent += 1
            else:
                out.append(s)
        smoothed = out

    return smoothed, PreprocessReport(
        n_in, len(smoothed), n_low, n_outlier, n_inconsistent, checked
    )
