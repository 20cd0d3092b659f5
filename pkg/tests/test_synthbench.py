import io
import math

import numpy as np
import pytest

from slope_energy.calibration import CalibrationConfig, calibrate
from slope_energy.se2 import Twist
from slope_energy.synthbench import (
    Leg,
    NoiseSpec,
    Scenario,
    default_ground_truth,
    default_scenario,
    generate_telemetry,
    oracle_power,
)
from slope_energy.telemetry import (
    TELEMETRY_HEADER,
    electrical_power,
    parse_log,
    preprocess,
    write_log,
)
from slope_energy.terrain import SlopeFrame, slope_from_gravity

DEG = math.radians


def csv_text(samples) -> str:
    from slope_energy.telemetry import format_row

    return TELEMETRY_HEADER + "\n" + "".join(format_row(s) + "\n" for s in samples)


class TestGeneration:
    def test_deterministic_given_seed(self):
        sc = default_scenario(seed=5, noise=NoiseSpec(power_mult_sigma=0.05),
                              duration_s=2.5)
        a, _ = generate_telemetry(sc)
        b, _ = generate_telemetry(sc)
        assert csv_text(a) == csv_text(b)

    def test_seed_changes_noisy_output(self):
        noise = NoiseSpec(power_mult_sigma=0.05)
        a, _ = generate_telemetry(default_scenario(seed=1, noise=noise, duration_s=2.5))
        b, _ = generate_telemetry(default_scenario(seed=2, noise=noise, duration_s=2.5))
        assert csv_text(a) != csv_text(b)

    def test_zero_duration_is_empty(self):
        sc = Scenario(default_ground_truth(),
                      [Leg(DEG(10), 0.0, duration_s=0.0, repeats=1)])
        samples, manifest = generate_telemetry(sc)
        assert samples == []
        assert manifest["n_samples"] == 0

    def test_default_grid_run_counts(self):
        sc = default_scenario()
        samples, manifest = generate_telemetry(sc)
        # 20 forward + 8 lateral + 4 rotation conditions, 3 repeats each
        assert manifest["n_runs"] == 96
        forward_legs = [l for l in sc.legs if l.mode == "forward"]
        assert len(forward_legs) * 3 == 60
        assert manifest["n_samples"] == len(samples)

    def test_timestamps_strictly_increase(self):
        samples, _ = generate_telemetry(default_scenario(duration_s=1.0, repeats=2))
        ts = [s.t for s in samples]
        assert all(b > a for a, b in zip(ts, ts[1:]))

    def test_csv_roundtrip(self, tmp_path):
        sc = default_scenario(seed=8, noise=NoiseSpec(0.05, 0.01, 0.02),
                              duration_s=1.0, repeats=1)
        samples, _ = generate_telemetry(sc)
        path = tmp_path / "t.csv"
        write_log(path, samples)
        with open(path) as fh:
            again = parse_log(fh)
        assert again == samples

    def test_gravity_encodes_slope_frame(self):
        sc = Scenario(default_ground_truth(), [
            Leg(DEG(12), DEG(70), "forward", duration_s=1.0, repeats=1),
        ], gap_s=0.0)
        samples, _ = generate_telemetry(sc)
        for s in samples[:10]:
            frame = slope_from_gravity(s.gravity_body)
            assert frame.alpha == pytest.approx(DEG(12), abs=1e-12)
            assert frame.gamma == pytest.approx(DEG(70), abs=1e-12)

    def test_rotation_leg_gamma_sweeps(self):
        sc = Scenario(default_ground_truth(), [
            Leg(DEG(10), DEG(30), "rotate", omega_radps=0.5, duration_s=2.0, repeats=1),
        ], gap_s=0.0)
        samples, _ = generate_telemetry(sc)
        g0 = slope_from_gravity(samples[0].gravity_body).gamma
        g1 = slope_from_gravity(samples[50].gravity_body).gamma
        assert g0 == pytest.approx(DEG(30), abs=1e-12)
        # gamma decreases as yaw increases: gamma(t) = gamma0 - omega*t
        assert g1 == pytest.approx((DEG(30) - 0.5 * 1.0) % (2 * math.pi), abs=1e-12)

    def test_poses_integrate_twists(self):
        sc = Scenario(default_ground_truth(), [
            Leg(DEG(10), 0.0, "forward", duration_s=1.0, repeats=1),
        ], gap_s=0.0)
        samples, _ = generate_telemetry(sc)
        s0, s10 = samples[0], samples[10]
        assert s10.pose.x - s0.pose.x == pytest.approx(0.3 * (s10.t - s0.t), abs=1e-12)

    def test_measured_power_prices_ground_truth(self):
        gt = default_ground_truth()
        sc = Scenario(gt, [Leg(DEG(10), 0.0, "forward", duration_s=1.0, repeats=1)],
                      gap_s=0.0)
        samples, _ = generate_telemetry(sc)
        want = gt.power(SlopeFrame(DEG(10), 0.0), Twist(0.3, 0.0, 0.0))
        assert electrical_power(samples[3]) == pytest.approx(want, rel=1e-12)


class TestOracle:
    def test_oracle_power_is_the_model_power(self):
        gt = default_ground_truth()
        frame = SlopeFrame(DEG(15), DEG(45))
        xi = Twist(0.3, -0.1, 0.2)
        assert oracle_power(gt, frame, xi) == gt.power(frame, xi)

    def test_zero_twist_zero_idle(self):
        assert oracle_power(default_ground_truth(), SlopeFrame(0.2, 1.0), Twist.zero()) == 0.0

    def test_constant_leg_energy_closed_form(self):
        gt = default_ground_truth()
        sc = Scenario(gt, [Leg(DEG(10), 0.0, "forward", duration_s=2.0, repeats=1)],
                      gap_s=0.0)
        samples, _ = generate_telemetry(sc)
        dt = 1.0 / sc.sample_rate_hz
        e_sum = math.fsum(electrical_power(s) * dt for s in samples)
        p = oracle_power(gt, SlopeFrame(DEG(10), 0.0), Twist(0.3, 0.0, 0.0))
        assert e_sum == pytest.approx(p * 2.0, rel=1e-12)


class TestScenarioJson:
    def test_roundtrip(self):
        sc = default_scenario(seed=4, noise=NoiseSpec(0.05, 0.01, 0.0))
        again = Scenario.from_json_dict(sc.to_json_dict())
        assert again.to_json_dict() == sc.to_json_dict()

    def test_validation(self):
        with pytest.raises(ValueError):
            Leg(DEG(10), 0.0, mode="sideways")
        with pytest.raises(ValueError):
            NoiseSpec(power_mult_sigma=-0.1)
        with pytest.raises(ValueError):
            Scenario(default_ground_truth(), [], sample_rate_hz=0.0)


class TestPipelineRoundtrip:
    def test_single_leg_recovers_forward_cost(self):
        gt = default_ground_truth()
        sc = Scenario(gt, [Leg(DEG(10), 0.0, "forward", duration_s=3.0, repeats=1)],
                      gap_s=0.0)
        samples, _ = generate_telemetry(sc)
        cleaned, _ = preprocess(samples)
        from slope_energy.calibration import estimate_windows, segment_windows, slope_frames

        frames = slope_frames(cleaned)
        windows = segment_windows(cleaned, frames)
        ws, _ = estimate_windows(cleaned, frames, windows)
        assert len(ws) == 1
        want = gt.power(SlopeFrame(DEG(10), 0.0), Twist(0.3, 0, 0)) / 0.3
        assert ws[0].value == pytest.approx(want, rel=1e-9)

    def test_repeats_form_separate_windows(self):
        gt = default_ground_truth()
        sc = Scenario(gt, [
            Leg(DEG(10), 0.0, "forward", duration_s=2.5, repeats=3),
            Leg(DEG(15), 0.0, "forward", duration_s=2.5, repeats=3),
        ])
        samples, _ = generate_telemetry(sc)
        cleaned, _ = preprocess(samples)
        from slope_energy.calibration import segment_windows, slope_frames

        windows = segment_windows(cleaned, slope_frames(cleaned))
        assert len(windows) == 6
