from pathlib import Path

import numpy as np
import pytest

from footnav.errors import InfeasibleGait, NoStandstill, TooShort
from footnav.estimator import FootTrajectory
from footnav.mechanization import NavState, integrate_series
from footnav.verification import (GaitParams, QualityThresholds, closure_error,
                                  inject_bias, inject_dropout, inject_noise,
                                  quality_gate, reference_step_periods,
                                  smartphone_step_periods, synth_gait,
                                  transform_to_nav_frame)

G0 = 9.81


class TestGaitParams:
    def test_rejects_too_short_flight(self):
        with pytest.raises(InfeasibleGait):
            GaitParams(cadence=3.0, stance_fraction=0.8)  # flight 0.133 s

    def test_rejects_bad_shape(self):
        with pytest.raises(InfeasibleGait):
            GaitParams(shape="hexagon")

    def test_rejects_no_room_for_strides(self):
        with pytest.raises(InfeasibleGait):
            GaitParams(duration=25.0, standstill=12.0, cadence=0.3)

    def test_strides_fill_the_walk(self):
        p = GaitParams(duration=60.0, cadence=1.8)
        assert p.strides_per_foot == 32


class TestSynthGait:
    def test_stationary_params_invert_gravity_exactly(self):
        params = GaitParams(cadence=0.0, duration=10.0, standstill=3.0)
        walk = synth_gait(params, seed=0)
        np.testing.assert_array_equal(walk.left_imu.w, np.zeros_like(walk.left_imu.w))
        f = walk.left_imu.f
        np.testing.assert_allclose(f, np.tile([0.0, 0.0, G0], (len(f), 1)), atol=1e-12)
        assert walk.left_truth.stationary.all()

    def test_self_consistency_keystone(self, circle_walk):
        """Integrating the emitted IMU recovers the truth."""
        for truth, imu in ((circle_walk.left_truth, circle_walk.left_imu),
                           (circle_walk.right_truth, circle_walk.right_imu)):
            init = NavState(t=float(imu.t[0]), p=truth.p[0].copy(),
                            v=truth.v[0].copy(), C=truth.C[0].copy())
            track = integrate_series(imu, init, renorm_every=0)
            assert np.linalg.norm(track.v - truth.v, axis=1).max() < 1e-9
            assert np.linalg.norm(track.p - truth.p, axis=1).max() < 0.02
            assert np.linalg.norm(track.p[-1] - truth.p[-1]) < 1e-3

    def test_seeds_change_noise_not_truth(self):
        params = GaitParams(duration=30.0, accel_noise=0.05, gyro_noise=0.005)
        w1 = synth_gait(params, seed=1)
        w2 = synth_gait(params, seed=2)
        np.testing.assert_array_equal(w1.left_truth.p, w2.left_truth.p)
        np.testing.assert_array_equal(w1.left_truth.C, w2.left_truth.C)
        assert not np.array_equal(w1.left_imu.f, w2.left_imu.f)
        w1b = synth_gait(params, seed=1)
        np.testing.assert_array_equal(w1.left_imu.f, w1b.left_imu.f)

    def test_closed_loop_truth(self, circle_walk):
        for truth in (circle_walk.left_truth, circle_walk.right_truth):
            np.testing.assert_array_equal(truth.p[0], truth.p[-1])

    def test_stance_labels_match_zero_velocity(self, circle_walk):
        truth = circle_walk.left_truth
        speeds = np.linalg.norm(truth.v, axis=1)
        assert speeds[truth.stationary].max() == 0.0
        assert speeds[~truth.stationary].min() > 0.0

    def test_line_shape_strides_exact(self, line_walk):
        truth = line_walk.left_truth
        params = line_walk.params
        moving = ~truth.stationary
        landings = np.flatnonzero(moving[:-1] & ~moving[1:]) + 1
        strides = np.diff(truth.p[landings][:, 0:2], axis=0)
        np.testing.assert_allclose(np.linalg.norm(strides, axis=1), params.stride,
                                   atol=1e-12)

    def test_nav_frame_transform(self, circle_walk):
        nav = transform_to_nav_frame(circle_walk.left_truth)
        np.testing.assert_allclose(nav.p[0], np.zeros(3), atol=1e-15)
        r0 = nav.C[0].T
        assert abs(np.arctan2(r0[1, 0], r0[0, 0])) < 1e-12


class TestFaultInjection:
    def test_bias(self, short_walk):
        biased = inject_bias(short_walk.left_imu, gyro_bias=[0.01, 0.0, 0.0],
                             accel_bias=[0.0, 0.1, 0.0])
        np.testing.assert_allclose(biased.w[:, 0] - short_walk.left_imu.w[:, 0], 0.01)
        np.testing.assert_allclose(biased.f[:, 1] - short_walk.left_imu.f[:, 1], 0.1)

    def test_noise_deterministic(self, short_walk):
        a = inject_noise(short_walk.left_imu, accel_sigma=0.1, seed=9)
        b = inject_noise(short_walk.left_imu, accel_sigma=0.1, seed=9)
        np.testing.assert_array_equal(a.f, b.f)

    def test_dropout_creates_gap(self, short_walk):
        cut = inject_dropout(short_walk.left_imu, 14.0, 15.0)
        assert len(cut) < len(short_walk.left_imu)
        assert np.diff(cut.t).max() > 0.5

    def test_dropout_aborts_reconstruction(self, short_walk):
        # dropped samples must abort loudly, never be interpolated over
        from footnav.errors import GapTooLarge
        from footnav.estimator import reconstruct_foot

        cut = inject_dropout(short_walk.left_imu, 14.0, 15.0)
        with pytest.raises(GapTooLarge):
            reconstruct_foot(cut)


class TestClosureError:
    def test_clean_run_closes(self, circle_left_reconstruction):
        assert closure_error(circle_left_reconstruction) < 1e-3

    def test_injected_offset_detected(self, circle_left_reconstruction):
        traj = circle_left_reconstruction
        # offset grows across the walk and is constant through both pauses
        ramp = np.clip((traj.t - 12.0) / (traj.t[-1] - 24.0), 0, 1)
        shifted = FootTrajectory(t=traj.t, p=traj.p + np.outer(ramp, [0.3, 0.0, 0.0]),
                                 v=traj.v, C=traj.C, stationary=traj.stationary)
        assert closure_error(shifted) == pytest.approx(0.3, abs=0.01)

    def test_no_standstill(self):
        n = 100
        traj = FootTrajectory(t=np.arange(n) * 0.008, p=np.zeros((n, 3)),
                              v=np.zeros((n, 3)),
                              C=np.broadcast_to(np.eye(3), (n, 3, 3)).copy(),
                              stationary=np.zeros(n, dtype=bool))
        with pytest.raises(NoStandstill):
            closure_error(traj)


class TestQualityGate:
    def test_clean_run_passes(self, circle_bundle):
        assert quality_gate(circle_bundle).passed

    def test_dtw_gate_matches_checked_in_corpus(self):
        from footnav.verification import DTW_MAX_DEFAULT

        vals = np.loadtxt(Path(__file__).parent / "data" / "dtw_calibration.csv")
        assert vals.size == 50
        assert DTW_MAX_DEFAULT == pytest.approx(vals.mean() + 3 * vals.std(), abs=0.1)

    def test_closure_threshold_is_five_centimeters(self, circle_bundle):
        assert QualityThresholds().closure_max == 0.05

    def test_bias_ladder_monotone(self, circle_walk):
        from footnav.pipeline import reconstruct_walk

        outcomes = []
        for bias in (0.0, 0.02, 0.05):
            left = inject_bias(circle_walk.left_imu, gyro_bias=[0.0, 0.0, bias])
            bundle = reconstruct_walk(left, circle_walk.right_imu)
            outcomes.append(quality_gate(bundle).passed)
        assert outcomes[0] is True
        # once failing, more bias never flips back to passing
        for earlier, later in zip(outcomes, outcomes[1:]):
            assert not (later and not earlier)
        assert outcomes[-1] is False

    def test_csv_row_shape(self, circle_bundle):
        rep = quality_gate(circle_bundle)
        assert len(rep.csv_row().split(",")) == len(rep.CSV_HEADER.split(","))


class TestStepPeriods:
    def test_interleaved_union(self):
        out = reference_step_periods(np.array([0.0, 1.0]), np.array([0.5, 1.5]))
        np.testing.assert_allclose(out, [0.5, 0.5, 0.5])

    def test_single_foot(self):
        out = reference_step_periods(np.array([0.0, 0.8, 1.7]), np.array([]))
        np.testing.assert_allclose(out, [0.8, 0.9])

    def test_telescoping_to_span(self):
        left = np.sort(np.random.default_rng(3).uniform(0, 30, size=20))
        right = np.sort(np.random.default_rng(4).uniform(0, 30, size=20))
        out = reference_step_periods(left, right)
        union = np.sort(np.concatenate([left, right]))
        assert out.sum() == pytest.approx(union[-1] - union[0])

    def test_oracle_cadence(self, circle_walk):
        from footnav.detectors import detect_steps

        starts_l = detect_steps(circle_walk.left_truth.stationary,
                                circle_walk.left_truth.t, 0.2)
        starts_r = detect_steps(circle_walk.right_truth.stationary,
                                circle_walk.right_truth.t, 0.2)
        # drop the terminal emissions at the walk end
        periods = reference_step_periods(starts_l[:-1], starts_r[:-1])
        assert periods.mean() == pytest.approx(1.0 / 1.8, abs=0.01)


class TestSmartphoneStepPeriods:
    def test_two_hertz_sinusoid(self):
        t_ms = np.arange(0, 20_000, 10.0)
        acc = np.zeros((t_ms.size, 3))
        acc[:, 2] = G0 + 1.0 * np.sin(2 * np.pi * 2.0 * t_ms / 1000.0)
        events, durations = smartphone_step_periods(t_ms, acc)
        assert durations.size > 30
        np.testing.assert_allclose(durations, 0.5, atol=0.02)

    def test_constant_signal_gives_nothing(self):
        t_ms = np.arange(0, 10_000, 10.0)
        acc = np.tile([0.0, 0.0, G0], (t_ms.size, 1))
        events, durations = smartphone_step_periods(t_ms, acc)
        assert durations.size == 0

    def test_too_short(self):
        t_ms = np.arange(0, 3_000, 10.0)
        with pytest.raises(TooShort):
            smartphone_step_periods(t_ms, np.zeros((t_ms.size, 3)))

    def test_synthetic_phone_within_ten_percent(self, circle_walk):
        from footnav.fixtures import synth_phone_trace

        params = circle_walk.params
        t_ms, acc, _ = synth_phone_trace(params, seed=5, epoch_ms=0.0)
        walk_mask = (t_ms / 1000.0 >= params.standstill) & \
                    (t_ms / 1000.0 <= params.duration - params.standstill)
        events, durations = smartphone_step_periods(t_ms[walk_mask], acc[walk_mask])
        assert durations.mean() == pytest.approx(1.0 / params.cadence, rel=0.10)
