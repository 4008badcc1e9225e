import math

import numpy as np
import pytest

from conftest import random_rotation
from preplace.geometry import (
    GAZE_TILT_RAD,
    GazeAway,
    GazeParallel,
    NonMonotonicTime,
    RawFrame,
    TablePlane,
    build_features,
    feature_sequence,
    gaze_table_intersection,
    rotation_about,
    rotation_aligning,
    tilt_head_norm,
)


def _frame(t, palm, head_pos=(0.2, 1.0, 0.5), head_rot=None):
    if head_rot is None:
        # face straight down the -y axis, the usual posture over the table
        head_rot = rotation_aligning(np.array([1.0, 0.0, 0.0]), np.array([0.0, -1.0, 0.0]))
    palm = np.asarray(palm, dtype=np.float64)
    return RawFrame(
        t=t,
        palm=palm,
        elbow=palm + (0.0, 0.1, 0.1),
        shoulder=palm + (0.0, 0.2, 0.2),
        head_pos=np.asarray(head_pos, dtype=np.float64),
        head_rot=head_rot,
    )


class TestIntersection:
    def test_straight_down(self, plane):
        psi = gaze_table_intersection(
            np.array([0.3, 0.2, 0.5]), np.array([0.0, 0.0, -1.0]), plane
        )
        assert np.allclose(psi, [0.3, 0.2], atol=1e-15)

    def test_oblique_hand_case(self, plane):
        # 45-degree descent from (0.2, -0.5, 0.6) travels 0.6 in y and z
        psi = gaze_table_intersection(
            np.array([0.2, -0.5, 0.6]), np.array([0.0, 0.6, -0.6]), plane
        )
        assert np.allclose(psi, [0.2, 0.1], atol=1e-12)

    def test_parallel_raises(self, plane):
        with pytest.raises(GazeParallel):
            gaze_table_intersection(
                np.array([0.0, 0.0, 0.5]), np.array([1.0, 0.0, 0.0]), plane
            )

    def test_upward_raises(self, plane):
        with pytest.raises(GazeAway):
            gaze_table_intersection(
                np.array([0.0, 0.0, 0.5]), np.array([0.0, 0.0, 1.0]), plane
            )

    def test_residual_and_tilt_on_random_cases(self, plane):
        # the acceptance bar runs 1000 of these; keep a fast spot check here
        rng = np.random.default_rng(7)
        checked = 0
        for _ in range(200):
            rot = random_rotation(rng)
            head = rng.uniform([-.5, -.5, .1], [.5, .5, 1.0])
            gaze = tilt_head_norm(rot)
            face = rot @ np.array([1.0, 0.0, 0.0])
            ang = math.acos(np.clip(face @ gaze, -1, 1))
            assert abs(ang - GAZE_TILT_RAD) < 1e-9
            try:
                psi = gaze_table_intersection(head, gaze, plane)
            except (GazeParallel, GazeAway):
                continue
            hit3 = np.array([psi[0], psi[1], 0.0])
            # the hit must sit on the ray: zero cross product with the dir
            assert np.linalg.norm(np.cross(hit3 - head, gaze)) < 1e-9
            checked += 1
        assert checked > 50


class TestRotations:
    def test_rotation_about_z_quarter_turn(self):
        r = rotation_about(np.array([0.0, 0.0, 1.0]), math.pi / 2)
        assert np.allclose(r @ [1, 0, 0], [0, 1, 0], atol=1e-12)

    def test_rotation_aligning_maps_src_to_dst(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            s = rng.normal(size=3)
            d = rng.normal(size=3)
            s /= np.linalg.norm(s)
            d /= np.linalg.norm(d)
            r = rotation_aligning(s, d)
            assert np.allclose(r @ s, d, atol=1e-9)
            assert np.allclose(r.T @ r, np.eye(3), atol=1e-9)

    def test_rotation_aligning_antiparallel(self):
        s = np.array([0.0, 0.0, 1.0])
        r = rotation_aligning(s, -s)
        assert np.allclose(r @ s, -s, atol=1e-12)


class TestFeatures:
    def test_first_frame_velocities_zero(self, plane):
        f = build_features(None, _frame(0.0, (0.2, 0.8, 0.3)), plane)
        assert f.input.shape == (28,)
        assert np.all(f.velocities == 0.0)
        assert np.array_equal(f.input[:14], f.positions)

    def test_velocity_is_finite_difference(self, plane):
        f0 = build_features(None, _frame(0.0, (0.2, 0.8, 0.3)), plane)
        f1 = build_features(f0, _frame(0.05, (0.2, 0.7, 0.3)), plane)
        expect = (f1.positions - f0.positions) / 0.05
        assert np.allclose(f1.velocities, expect, rtol=0, atol=1e-12)

    def test_non_monotonic_time_rejected(self, plane):
        f0 = build_features(None, _frame(0.1, (0.2, 0.8, 0.3)), plane)
        with pytest.raises(NonMonotonicTime):
            build_features(f0, _frame(0.1, (0.2, 0.7, 0.3)), plane)

    def test_gaze_miss_reuses_previous_hit(self, plane):
        f0 = build_features(None, _frame(0.0, (0.2, 0.8, 0.3)), plane)
        # stare at the ceiling: tilted norm points up, ray leaves the table
        up = rotation_aligning(np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0]))
        f1 = build_features(f0, _frame(0.05, (0.2, 0.7, 0.3), head_rot=up), plane)
        assert np.array_equal(f1.gaze_hit, f0.gaze_hit)

    def test_gaze_miss_on_first_frame_uses_fallback(self, plane):
        up = rotation_aligning(np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0]))
        f = build_features(None, _frame(0.0, (0.2, 0.8, 0.3), head_rot=up), plane,
                           fallback_gaze_hit=np.array([0.3, 0.4]))
        assert np.allclose(f.gaze_hit, [0.3, 0.4])
        f_default = build_features(None, _frame(0.0, (0.2, 0.8, 0.3), head_rot=up), plane)
        assert np.array_equal(f_default.gaze_hit, np.zeros(2))

    def test_feature_sequence_matches_stepwise(self, plane):
        frames = [_frame(0.05 * k, (0.2, 0.9 - 0.05 * k, 0.3)) for k in range(6)]
        seq = feature_sequence(frames, plane)
        prev = None
        for raw, got in zip(frames, seq):
            prev = build_features(prev, raw, plane)
            assert np.array_equal(prev.input, got.input)

    def test_raw_frame_validation(self):
        with pytest.raises(ValueError):
            _frame(0.0, (0.2, 0.8))  # palm must be 3-d
        with pytest.raises(ValueError):
            RawFrame(0.0, np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3),
                     np.eye(3) * 2.0)  # not orthonormal
