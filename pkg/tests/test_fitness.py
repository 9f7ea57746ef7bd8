"""Fitness oracles: brute-force nearest-point scans, constructed traces
with hand-computed values, and analytic circle formulas."""
import math

import numpy as np
import pytest

from linksynth.fitness import (EMPTY_PATH_DISTANCE, TargetPointSet,
                               angle_error, default_target_points,
                               fitness_fp, fitness_fp_mo, fitness_fsl,
                               fitness_fsl_mo, lift, load_target_points,
                               nearest_point_distances, step_length)
from linksynth.kinematics import Linkage, solve

from conftest import circle_path, rectangle_path, synthetic_trace


def brute_force_fp(path, targets, error_count):
    """Plain-loop oracle for the point-set fitness."""
    total = 0.0
    for tx, ty in targets:
        best = EMPTY_PATH_DISTANCE
        for px, py in path:
            best = min(best, math.sqrt((tx - px) ** 2 + (ty - py) ** 2))
        total += best
    return -total - error_count


class TestFitnessFp:
    def test_perfect_path_scores_zero(self):
        points = default_target_points()
        trace = synthetic_trace(points.all_points)
        assert fitness_fp(trace, points) == 0.0

    def test_single_point_path_equidistant_targets(self):
        # 15 targets on a radius-5 circle around the only path point
        angles = 2 * np.pi * np.arange(15) / 15
        ring = np.column_stack([5 * np.cos(angles), 5 * np.sin(angles)])
        points = TargetPointSet(ring[:10], ring[10:])
        trace = synthetic_trace([(0.0, 0.0)])
        assert fitness_fp(trace, points) == pytest.approx(-75.0, abs=1e-9)

    def test_matches_brute_force_scan(self, rng):
        for _ in range(200):
            path = rng.uniform(-80, 80, (int(rng.integers(1, 60)), 2))
            pts = TargetPointSet(rng.uniform(-80, 80, (int(rng.integers(1, 12)), 2)),
                                 rng.uniform(-80, 80, (int(rng.integers(1, 6)), 2)))
            err = int(rng.integers(0, 5))
            trace = synthetic_trace(path, error_count=err)
            expected = brute_force_fp(path, pts.all_points, err)
            assert fitness_fp(trace, pts) == pytest.approx(expected, abs=1e-12)

    def test_empty_path_uses_sentinel(self):
        points = default_target_points()
        trace = synthetic_trace(np.empty((0, 2)), error_count=72)
        n = len(points.all_points)
        assert fitness_fp(trace, points) == -n * EMPTY_PATH_DISTANCE - 72

    def test_translation_covariance(self, rng):
        path = rng.uniform(-50, 50, (30, 2))
        pts = TargetPointSet(rng.uniform(-50, 50, (8, 2)), rng.uniform(-50, 50, (4, 2)))
        shift = np.array([17.0, -40.0])
        a = fitness_fp(synthetic_trace(path), pts)
        b = fitness_fp(synthetic_trace(path + shift),
                       TargetPointSet(pts.step_points + shift, pts.lift_points + shift))
        assert a == pytest.approx(b, abs=1e-9)


class TestFitnessFpMo:
    def test_perfect_path(self):
        points = default_target_points()
        trace = synthetic_trace(points.all_points)
        assert fitness_fp_mo(trace, points) == (0.0, 0.0)

    def test_step_points_only_touched(self):
        points = default_target_points()
        trace = synthetic_trace(points.step_points)
        step_obj, lift_obj = fitness_fp_mo(trace, points)
        assert step_obj == 0.0
        assert lift_obj < 0.0

    def test_objective_sum_identity(self, rng):
        # step_obj + lift_obj + error_count == fitness_fp, since the error
        # term appears once per objective and once in the scalar
        for _ in range(50):
            path = rng.uniform(-80, 80, (25, 2))
            pts = TargetPointSet(rng.uniform(-80, 80, (7, 2)),
                                 rng.uniform(-80, 80, (5, 2)))
            err = int(rng.integers(0, 6))
            trace = synthetic_trace(path, error_count=err)
            step_obj, lift_obj = fitness_fp_mo(trace, pts)
            assert step_obj + lift_obj + err == pytest.approx(
                fitness_fp(trace, pts), abs=1e-9)


class TestStepLengthAndLift:
    def test_rectangle_bottom_edge(self):
        trace = synthetic_trace(rectangle_path(40.0, 20.0, spacing=5.0))
        assert step_length(trace) == pytest.approx(40.0, abs=1e-12)
        assert lift(trace) == pytest.approx(20.0, abs=1e-12)

    def test_circle_band_arc_against_analytic_formula(self):
        # band y <= y_bottom + 5 on a radius-100 circle spans
        # r*(pi - 2*asin((r-5)/r)); all of it moves in the bottom direction
        r, n = 100.0, 720
        trace = synthetic_trace(circle_path(r, n))
        expected = r * (math.pi - 2.0 * math.asin((r - 5.0) / r))
        assert step_length(trace) == pytest.approx(expected, abs=2.0 * r * (2 * math.pi / n))

    def test_circle_lift_is_diameter(self):
        trace = synthetic_trace(circle_path(100.0, 720))
        assert lift(trace) == pytest.approx(200.0, abs=1e-9)

    def test_vertical_oscillation_has_no_step(self):
        y = np.concatenate([np.linspace(0, 30, 8), np.linspace(30, 0, 8)[1:-1]])
        path = np.column_stack([np.zeros_like(y), y])
        trace = synthetic_trace(path)
        assert step_length(trace) == 0.0

    def test_flat_monotone_path_has_no_lift(self):
        path = np.column_stack([np.linspace(0, 50, 20), np.zeros(20)])
        trace = synthetic_trace(path)
        assert lift(trace) == 0.0

    def test_single_point_path(self):
        trace = synthetic_trace([(0.0, 0.0)])
        assert step_length(trace) == 0.0
        assert lift(trace) == 0.0


class TestAngleError:
    def test_foot_always_lowest(self):
        trace = synthetic_trace(circle_path(30.0, 72))
        assert angle_error(trace) == 0

    def test_single_moving_node_never_errors(self):
        trace = synthetic_trace(rectangle_path())
        assert angle_error(trace) == 0

    def test_counts_steps_where_other_node_dips_below(self):
        path = circle_path(30.0, 72)
        other = np.column_stack([path[:, 0], np.full(72, 100.0)])
        other[:10, 1] = path[:10, 1] - 1.0  # below the foot at 10 steps
        trace = synthetic_trace(path, other_node=other)
        assert angle_error(trace) == 10

    def test_touching_does_not_count(self):
        path = circle_path(30.0, 36)
        trace = synthetic_trace(path, other_node=path.copy())
        assert angle_error(trace) == 0


class TestFitnessFsl:
    def test_rectangle_value(self):
        trace = synthetic_trace(rectangle_path(40.0, 20.0))
        assert fitness_fsl(trace) == pytest.approx(-36.0, abs=1e-12)

    def test_rectangle_multiobjective(self):
        trace = synthetic_trace(rectangle_path(40.0, 20.0))
        assert fitness_fsl_mo(trace) == pytest.approx((-40.0, -20.0), abs=1e-12)

    def test_empty_path_is_pure_error_penalty(self):
        trace = synthetic_trace(np.empty((0, 2)), error_count=72)
        assert fitness_fsl(trace) == 72.0
        assert fitness_fsl_mo(trace) == (72.0, 72.0)

    def test_weight_linearity(self):
        a = synthetic_trace(rectangle_path(40.0, 20.0))
        b = synthetic_trace(rectangle_path(80.0, 20.0, spacing=5.0))
        delta_step = step_length(b) - step_length(a)
        assert delta_step == pytest.approx(40.0, abs=1e-12)
        assert (fitness_fsl(b) - fitness_fsl(a)) == pytest.approx(
            -0.8 * delta_step, abs=1e-12)

    def test_scalar_recoverable_from_objectives(self, rng):
        for _ in range(30):
            path = rng.uniform(-60, 60, (40, 2))
            err = int(rng.integers(0, 4))
            trace = synthetic_trace(path, error_count=err)
            ms, ml = fitness_fsl_mo(trace)
            assert 0.8 * ms + 0.2 * ml == pytest.approx(fitness_fsl(trace), abs=1e-9)


class TestTargetPoints:
    def test_even_spacing(self):
        pts = default_target_points(n_step=10, width=60.0)
        xs = pts.step_points[:, 0]
        assert xs[0] == 0.0 and xs[-1] == 60.0
        assert np.allclose(np.diff(xs), 60.0 / 9.0)
        assert np.all(pts.step_points[:, 1] == 0.0)

    def test_flat_arc_collapses_to_step_line(self):
        pts = default_target_points(height=0.0)
        assert np.all(pts.lift_points[:, 1] == 0.0)

    def test_symmetry_about_center(self):
        pts = default_target_points(width=60.0)
        for arr in (pts.step_points, pts.lift_points):
            mirrored = np.column_stack([60.0 - arr[:, 0], arr[:, 1]])
            assert np.allclose(np.sort(arr[:, 0]), np.sort(mirrored[:, 0]), atol=1e-9)
            assert np.allclose(arr[:, 1], mirrored[::-1, 1], atol=1e-9)

    def test_load_from_file(self, tmp_path):
        f = tmp_path / "points.txt"
        f.write_text("# custom shape\n0 0 step\n10, 0, step\n5 8 lift\n")
        pts = load_target_points(f)
        assert pts.step_points.tolist() == [[0.0, 0.0], [10.0, 0.0]]
        assert pts.lift_points.tolist() == [[5.0, 8.0]]

    def test_load_rejects_bad_rows(self, tmp_path):
        f = tmp_path / "points.txt"
        f.write_text("0 0 walk\n")
        with pytest.raises(ValueError):
            load_target_points(f)

    def test_both_sets_required(self):
        with pytest.raises(ValueError):
            TargetPointSet(np.empty((0, 2)), np.array([[0.0, 0.0]]))
