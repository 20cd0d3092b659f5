import math

import numpy as np
import pytest
from scipy.integrate import quad

from slope_energy.errors import EndpointMismatch, NonFinitePower, OutOfBounds
from slope_energy.path_energy import (
    Arc,
    PathSpec,
    Straight,
    TurnInPlace,
    energy_of_path,
    superposition_check,
)
from slope_energy.se2 import Pose
from slope_energy.terrain import GridHeightmap, UniformPlane
from slope_energy.wrench_model import WrenchModel

DEG = math.radians

PLANE10 = UniformPlane(DEG(10), 0.0)

SHAPED = WrenchModel(
    coeffs={"fx": (40.0, 120.0), "fy": (70.0, 150.0), "tau": (5.0, 20.0)},
    basis_masks={"fx": ("1", "alpha_cos_gamma"), "fy": ("1", "alpha"),
                 "tau": ("1", "alpha")},
)


def slanted_heightmap(gx=0.2, gy=0.1, n=41, cell=0.5):
    xs = np.arange(n) * cell
    return GridHeightmap(gx * xs[None, :] + gy * xs[:, None], cell)


class TestPrimitives:
    def test_validation(self):
        with pytest.raises(ValueError):
            Straight(0.0, 0.3)
        with pytest.raises(ValueError):
            Straight(1.0, -0.3)
        with pytest.raises(ValueError):
            Straight(1.0, 0.3, axis="backward")
        with pytest.raises(ValueError):
            Arc(0.0, 1.0, 0.3)
        with pytest.raises(ValueError):
            Arc(1.0, 0.0, 0.3)
        with pytest.raises(ValueError):
            TurnInPlace(0.0, 0.5)
        with pytest.raises(ValueError):
            TurnInPlace(1.0, 0.0)

    def test_twists(self):
        assert Straight(3.0, 0.3).twist().vx == 0.3
        assert Straight(3.0, 0.3, "lateral").twist().vy == 0.3
        assert Arc(2.0, -1.0, 0.4).twist().omega == pytest.approx(-0.2)
        assert TurnInPlace(-1.0, 0.5).twist().omega == -0.5

    def test_end_pose_chain(self):
        path = PathSpec(Pose(1.0, 2.0, 0.0), (
            Straight(2.0, 0.5),
            TurnInPlace(math.pi / 2, 0.5),
            Straight(3.0, 0.5),
        ))
        end = path.end_pose()
        assert end.x == pytest.approx(3.0, abs=1e-12)
        assert end.y == pytest.approx(5.0, abs=1e-12)
        assert end.yaw == pytest.approx(math.pi / 2)

    def test_json_roundtrip(self):
        path = PathSpec(Pose(0.5, -1.0, 0.2), (
            Straight(2.0, 0.3), Arc(4.0, 1.2, 0.3),
            TurnInPlace(-0.7, 0.5), Straight(1.0, 0.3, "lateral"),
        ))
        assert PathSpec.from_json_dict(path.to_json_dict()) == path


class TestEnergy:
    def test_empty_path(self):
        report = energy_of_path(PathSpec(Pose.identity(), ()), PLANE10, SHAPED)
        assert report.total_j == 0.0
        assert report.per_primitive_j == []

    def test_straight_force_times_distance(self):
        # speed-independent closed form: E = fx * L
        model = WrenchModel.constant(fx=60.94395102393196)
        path = PathSpec(Pose.identity(), (Straight(10.0, 0.3),))
        report = energy_of_path(path, PLANE10, model)
        assert report.total_j == pytest.approx(609.4395102393196, rel=1e-9)
        # dt refinement does not move a constant integrand
        finer = energy_of_path(path, PLANE10, model, dt=0.001)
        assert finer.total_j == pytest.approx(report.total_j, rel=1e-12)

    def test_turn_in_place_torque_times_angle(self):
        model = WrenchModel.constant(tau=12.0)
        path = PathSpec(Pose.identity(), (TurnInPlace(math.pi / 2, 0.5),))
        report = energy_of_path(path, PLANE10, model)
        assert report.total_j == pytest.approx(12.0 * math.pi / 2, rel=1e-9)

    def test_arc_against_quadrature_oracle(self):
        # independent reference: closed-form integrand + adaptive quadrature
        hm = slanted_heightmap()
        start = Pose(10.0, 6.0, 0.3)
        arc = Arc(4.0, 1.5, 0.3)
        path = PathSpec(start, (arc,))
        alpha = math.atan(math.hypot(0.2, 0.1))
        azimuth = math.atan2(0.1, 0.2)
        omega = 0.3 / 4.0

        def power(t):
            gamma = azimuth - (start.yaw + omega * t)
            fx = 40.0 + 120.0 * alpha * math.cos(gamma)
            fy_unused = 70.0 + 150.0 * alpha
            tau = 5.0 + 20.0 * alpha
            return fx * 0.3 + tau * omega

        e_ref, _ = quad(power, 0.0, arc.duration(), limit=200)
        got = energy_of_path(path, hm, SHAPED, dt=0.005).total_j
        assert got == pytest.approx(e_ref, rel=1e-8)

    def test_per_primitive_sums_to_total(self):
        path = PathSpec(Pose(2.0, 2.0, 0.4), (
            Straight(3.0, 0.3), TurnInPlace(0.8, 0.5), Arc(3.0, 0.9, 0.3),
        ))
        report = energy_of_path(path, PLANE10, SHAPED)
        assert math.fsum(report.per_primitive_j) == pytest.approx(report.total_j, rel=1e-12)
        assert report.duration_s == pytest.approx(path.duration())

    def test_midpoint_convergence_is_second_order(self):
        hm = slanted_heightmap()
        path = PathSpec(Pose(10.0, 6.0, 0.3), (Arc(4.0, 1.5, 0.3),))
        e1 = energy_of_path(path, hm, SHAPED, dt=0.1).total_j
        e2 = energy_of_path(path, hm, SHAPED, dt=0.05).total_j
        e_ref = energy_of_path(path, hm, SHAPED, dt=0.1 / 64).total_j
        ratio = (e1 - e_ref) / (e2 - e_ref)
        assert 3.5 <= ratio <= 4.5

    def test_speed_rescaling_invariance_dissipative(self):
        # dt scales with speed so both runs sample identical poses; without
        # that, midpoint error differs O(dt^2) between the two time grids
        def build(scale):
            return PathSpec(Pose(0, 0, 0.7), (
                Straight(4.0, 0.3 * scale),
                TurnInPlace(1.1, 0.5 * scale),
                Arc(3.0, -0.8, 0.3 * scale),
            ))
        e1 = energy_of_path(build(1.0), PLANE10, SHAPED, dt=0.01).total_j
        e2 = energy_of_path(build(2.0), PLANE10, SHAPED, dt=0.005).total_j
        assert e2 == pytest.approx(e1, rel=1e-9)

    def test_literal_mode_signs(self):
        model = WrenchModel.constant(tau=12.0, eval_mode="literal")
        fwd = PathSpec(Pose.identity(), (TurnInPlace(1.0, 0.5),))
        rev = PathSpec(Pose.identity(), (TurnInPlace(-1.0, 0.5),))
        assert energy_of_path(fwd, PLANE10, model).total_j == pytest.approx(12.0, rel=1e-9)
        assert energy_of_path(rev, PLANE10, model).total_j == pytest.approx(-12.0, rel=1e-9)

    def test_out_of_bounds(self):
        hm = slanted_heightmap(n=5, cell=0.5)  # 2 m square
        path = PathSpec(Pose(1.0, 1.0, 0.0), (Straight(5.0, 0.3),))
        with pytest.raises(OutOfBounds):
            energy_of_path(path, hm, SHAPED)

    def test_extrapolation_cap_raises(self):
        model = WrenchModel.constant(fx=80.0, f_max=50.0)
        path = PathSpec(Pose.identity(), (Straight(1.0, 0.3),))
        with pytest.raises(NonFinitePower):
            energy_of_path(path, PLANE10, model)

    def test_alpha_outside_fit_range_warns(self):
        model = WrenchModel(
            coeffs=SHAPED.coeffs, basis_masks=SHAPED.basis_masks,
            alpha_fit_range_deg=(5.0, 8.0),
        )
        report = energy_of_path(PathSpec(Pose.identity(), (Straight(1.0, 0.3),)),
                                PLANE10, model)
        assert report.warnings and "outside calibrated range" in report.warnings[0]

    def test_bad_dt(self):
        with pytest.raises(ValueError):
            energy_of_path(PathSpec(Pose.identity(), ()), PLANE10, SHAPED, dt=0.0)


class TestSuperposition:
    def test_midpoint_split_is_exact(self):
        whole = PathSpec(Pose(0, 0, 0.4), (Straight(10.0, 0.3),))
        first = PathSpec(Pose(0, 0, 0.4), (Straight(5.0, 0.3),))
        second = PathSpec(first.end_pose(), (Straight(5.0, 0.3),))
        rel = superposition_check([first, second], whole, PLANE10, SHAPED)
        assert rel <= 1e-9

    def test_collinear_segments_match_single(self):
        start = Pose(1.0, -2.0, 1.1)
        a = PathSpec(start, (Straight(5.0, 0.3),))
        b = PathSpec(a.end_pose(), (Straight(5.0, 0.3),))
        c = PathSpec(start, (Straight(10.0, 0.3),))
        assert superposition_check([a, b], c, PLANE10, SHAPED) <= 1e-6

    def test_turn_chord_turn_vs_arc_is_moderate(self):
        # same endpoints two ways; the difference reflects turn cost plus the
        # chord/arc length gap, a plausibility analog of field measurements
        model = WrenchModel(
            coeffs={"fx": (40.0, 120.0), "fy": (70.0, 150.0), "tau": (15.0, 40.0)},
            basis_masks=SHAPED.basis_masks,
        )
        theta, r = math.pi / 2, 2.0
        whole = PathSpec(Pose.identity(), (Arc(r, theta, 0.3),))
        chord = 2 * r * math.sin(theta / 2)
        parts = [PathSpec(Pose.identity(), (
            TurnInPlace(theta / 2, 0.5), Straight(chord, 0.3), TurnInPlace(theta / 2, 0.5),
        ))]
        rel = superposition_check(parts, whole, PLANE10, model)
        assert 0.0 < rel < 0.15

    def test_endpoint_mismatch_raises(self):
        whole = PathSpec(Pose.identity(), (Straight(10.0, 0.3),))
        short = PathSpec(Pose.identity(), (Straight(9.0, 0.3),))
        with pytest.raises(EndpointMismatch):
            superposition_check([short], whole, PLANE10, SHAPED)

    def test_disconnected_parts_raise(self):
        whole = PathSpec(Pose.identity(), (Straight(10.0, 0.3),))
        a = PathSpec(Pose.identity(), (Straight(5.0, 0.3),))
        b = PathSpec(Pose(5.5, 0.0, 0.0), (Straight(4.5, 0.3),))
        with pytest.raises(EndpointMismatch):
            superposition_check([a, b], whole, PLANE10, SHAPED)
