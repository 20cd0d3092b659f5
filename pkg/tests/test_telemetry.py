import io
import math

import numpy as np
import pytest

from slope_energy.errors import MalformedRow, NonMonotonicTime, WindowTooShort
from slope_energy.se2 import Pose, Twist
from slope_energy.telemetry import (
    TELEMETRY_HEADER,
    PreprocessConfig,
    TelemetrySample,
    electrical_power,
    format_row,
    parse_log,
    preprocess,
    read_log,
    write_log,
)
from slope_energy.wrench_model import WrenchModel

G = (0.0, 0.0, -9.81)


def sample(t, power_w, vx=0.3, vy=0.0, om=0.0, voltage=50.0, gravity=G):
    return TelemetrySample(t, gravity, Pose(t * vx, 0.0, 0.0),
                           Twist(vx, vy, om), voltage, power_w / voltage)


def constant_log(n, power_w=100.0, dt=0.1, **kw):
    return [sample(k * dt, power_w, **kw) for k in range(n)]


class TestParse:
    def test_header_only(self):
        assert parse_log(io.StringIO(TELEMETRY_HEADER + "\n")) == []

    def test_roundtrip_exact(self, tmp_path):
        samples = [
            sample(0.0, 97.3, vx=0.31, vy=-0.02, om=0.001),
            sample(0.1, 101.7, vx=0.29),
            sample(0.25, 99.9, om=0.4),
        ]
        path = tmp_path / "log.csv"
        write_log(path, samples)
        again = read_log(path)
        assert again == samples  # repr-formatted floats parse back exactly

    def test_non_numeric_voltage(self):
        row = "0.0,0,0,-9.81,0,0,0,0.3,0,0,fifty,1.0"
        with pytest.raises(MalformedRow) as exc:
            parse_log([TELEMETRY_HEADER, row])
        assert exc.value.line == 2

    def test_wrong_field_count(self):
        with pytest.raises(MalformedRow):
            parse_log([TELEMETRY_HEADER, "0.0,1.0"])

    def test_bad_header(self):
        with pytest.raises(MalformedRow) as exc:
            parse_log(["time,stuff", "0,0"])
        assert exc.value.line == 1

    def test_voltage_and_current_conventions(self):
        bad_v = "0.0,0,0,-9.81,0,0,0,0.3,0,0,0.0,1.0"
        bad_i = "0.0,0,0,-9.81,0,0,0,0.3,0,0,50.0,-0.5"
        for row in (bad_v, bad_i):
            with pytest.raises(MalformedRow):
                parse_log([TELEMETRY_HEADER, row])

    def test_non_monotonic_time(self):
        rows = [format_row(sample(0.0, 10.0)), format_row(sample(0.0, 10.0))]
        with pytest.raises(NonMonotonicTime) as exc:
            parse_log([TELEMETRY_HEADER, *rows])
        assert exc.value.line == 3


class TestElectricalPower:
    def test_zero_current(self):
        assert electrical_power(sample(0.0, 0.0)) == 0.0

    def test_product(self):
        s = TelemetrySample(0.0, G, Pose(0, 0, 0), Twist(0.3, 0, 0), 50.0, 2.0)
        assert electrical_power(s) == 100.0

    def test_synthetic_roundtrip(self):
        for p in (17.3, 230.0, 0.001):
            assert electrical_power(sample(0.0, p)) == pytest.approx(p, rel=1e-12)


class TestPreprocess:
    def test_all_stationary_dropped(self):
        log = constant_log(30, vx=0.0)
        out, report = preprocess(log)
        assert out == []
        assert report.dropped_low_speed == 30
        assert report.input_count == 30 and report.output_count == 0

    def test_slow_rotation_is_kept(self):
        # |omega| above v_min keeps a sample even with zero planar speed
        log = constant_log(30, vx=0.0, om=0.5)
        out, _ = preprocess(log, PreprocessConfig(ema_alpha=1.0))
        assert len(out) == 30

    def test_window_too_short(self):
        log = constant_log(3)
        with pytest.raises(WindowTooShort):
            preprocess(log, PreprocessConfig(median_window=5))

    def test_clean_constant_log_unchanged(self):
        # constant power and twist are a fixed point of every stage
        log = constant_log(40)
        out, report = preprocess(log)
        assert out == log
        assert report.output_count == 40

    def test_single_spike_rejected_exactly(self):
        # hand-checked rolling median/MAD: only the 10x spike at index 5 has
        # |p - med| = 900 over threshold 3 * 1.4826 * MAD(=2) = 8.9
        powers = [100, 101, 99, 100, 102, 1000, 98, 100, 101, 99, 100]
        log = [sample(0.1 * k, p) for k, p in enumerate(powers)]
        out, report = preprocess(log, PreprocessConfig(ema_alpha=1.0))
        assert out == log[:5] + log[6:]
        assert report.dropped_power_outlier == 1
        assert report.dropped_low_speed == 0

    def test_ema_constant_fixed_point(self):
        log = constant_log(25, power_w=42.0)
        out, _ = preprocess(log, PreprocessConfig(ema_alpha=0.2))
        assert all(electrical_power(s) == pytest.approx(42.0, rel=1e-15) for s in out)

    def test_ema_smooths_step(self):
        powers = [100.0] * 20 + [200.0] * 20
        log = [sample(0.1 * k, p) for k, p in enumerate(powers)]
        out, _ = preprocess(log, PreprocessConfig(ema_alpha=0.2, mad_threshold=1e12))
        smoothed = [electrical_power(s) for s in out]
        # first sample after the step moves only ema_alpha of the way up
        assert smoothed[20] == pytest.approx(100.0 + 0.2 * 100.0, rel=1e-12)
        assert smoothed[-1] < 200.0

    def test_ema_resets_across_gap(self):
        # two constant-power segments separated by a 1 s hole must both stay
        # exactly constant after smoothing
        log = [sample(0.1 * k, 100.0) for k in range(10)]
        log += [sample(2.0 + 0.1 * k, 300.0) for k in range(10)]
        out, _ = preprocess(log, PreprocessConfig(mad_threshold=1e12))
        powers = [electrical_power(s) for s in out]
        assert powers[:10] == pytest.approx([100.0] * 10)
        assert powers[10:] == pytest.approx([300.0] * 10)

    def test_consistency_bound_with_model(self):
        # fx = 60 N at 0.3 m/s -> P_mech = 18 W; eta = 5 accepts [3.6, 90]
        model = WrenchModel.constant(fx=60.0)
        powers = [18.0, 18.0, 100.0, 18.0, 2.0, 18.0, 18.0]
        log = [sample(0.1 * k, p) for k, p in enumerate(powers)]
        cfg = PreprocessConfig(ema_alpha=1.0, mad_threshold=1e12)
        out, report = preprocess(log, cfg, model)
        assert report.dropped_inconsistent == 2
        assert report.consistency_checked
        assert [electrical_power(s) for s in out] == pytest.approx([18.0] * 5)

    def test_consistency_skipped_without_model(self):
        out, report = preprocess(constant_log(20))
        assert not report.consistency_checked
        assert report.dropped_inconsistent == 0

    def test_counts_sum(self):
        rng = np.random.default_rng(3)
        log = []
        for k in range(200):
            vx = 0.0 if k % 17 == 0 else 0.3
            p = 100.0 * (1 + 0.03 * rng.standard_normal())
            if k % 41 == 0:
                p *= 12.0
            log.append(sample(0.05 * k, p, vx=vx))
        out, report = preprocess(log)
        assert report.input_count == 200
        assert report.output_count == len(out)
        dropped = (report.dropped_low_speed + report.dropped_power_outlier
                   + report.dropped_inconsistent)
        assert report.input_count - report.output_count == dropped

    def test_idempotent_for_rules_1_and_2(self):
        rng = np.random.default_rng(11)
        log = []
        for k in range(150):
            p = 100.0 + rng.standard_normal()
            if k in (40, 90):
                p = 1500.0
            log.append(sample(0.05 * k, p))
        cfg = PreprocessConfig(ema_alpha=1.0)
        once, report1 = preprocess(log, cfg)
        twice, report2 = preprocess(once, cfg)
        assert report1.dropped_power_outlier >= 2
        assert report2.dropped_low_speed == 0
        assert report2.dropped_power_outlier == 0
        assert twice == once

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PreprocessConfig(median_window=4)
        with pytest.raises(ValueError):
            PreprocessConfig(ema_alpha=0.0)
        with pytest.raises(ValueError):
            PreprocessConfig(consistency_eta=0.5)
