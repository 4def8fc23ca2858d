import itertools

import numpy as np
import pytest

from footnav.detectors import (DetectorConfig, detect_steps, glrt_statistic,
                               gyro_leveled_orientations, motionless_flags,
                               stance_gate, standstill_windows)
from footnav.errors import EmptyWindow, LengthMismatch
from footnav.mechanization import ImuSeries

from _oracles import (naive_step_scan, naive_step_scan_batch,
                      step_indices_fingerprint)

G0 = 9.81


def _series(f_rows, w_rows, dt=0.008):
    n = len(f_rows)
    return ImuSeries(t=np.arange(n) * dt, f=np.asarray(f_rows, dtype=float),
                     w=np.asarray(w_rows, dtype=float))


class TestMotionlessFlags:
    def _flags_for(self, f, w):
        series = _series([[0, 0, G0]] * 4 + [f], [[0, 0, 0]] * 4 + [w])
        orient = np.tile(np.eye(3), (5, 1, 1))
        return motionless_flags(series, orient)

    def test_perfect_stance(self):
        assert self._flags_for([0, 0, G0], [0, 0, 0])[-1]

    def test_rate_above_half_radian_rejected(self):
        # 0.6 rad/s exceeds the 0.5 rad/s threshold regardless of force
        assert not self._flags_for([0, 0, G0], [0.6, 0, 0])[-1]
        assert self._flags_for([0, 0, G0], [0.49, 0, 0])[-1]

    def test_force_residual_above_quarter_g_rejected(self):
        # |1.3 g - g| = 0.3 g > 0.25 g
        assert not self._flags_for([0, 0, G0 * 1.3], [0, 0, 0])[-1]
        assert self._flags_for([0, 0, G0 * 1.2], [0, 0, 0])[-1]

    def test_first_flag_copies_second(self):
        series = _series([[0, 0, G0]] * 3, [[0, 0, 0]] * 3)
        orient = np.tile(np.eye(3), (3, 1, 1))
        flags = motionless_flags(series, orient)
        assert flags[0] == flags[1]

    def test_threshold_sharpness_at_quarter_g(self):
        # the accept/reject boundary sits exactly at (1 + alpha) * g: scaling
        # the force a hair below it keeps the flag, a hair above drops it
        cfg = DetectorConfig()
        boundary = (1.0 + cfg.alpha) * G0
        assert self._flags_for([0, 0, boundary * (1 - 1e-9)], [0, 0, 0])[-1]
        assert not self._flags_for([0, 0, boundary * (1 + 1e-9)], [0, 0, 0])[-1]

    def test_length_mismatch(self):
        series = _series([[0, 0, G0]] * 3, [[0, 0, 0]] * 3)
        with pytest.raises(LengthMismatch):
            motionless_flags(series, np.tile(np.eye(3), (2, 1, 1)))

    def test_agrees_with_truth_on_synthetic_walk(self, circle_walk):
        series = circle_walk.left_imu
        orient = gyro_leveled_orientations(series)
        flags = motionless_flags(series, orient)
        truth = circle_walk.left_truth.stationary
        agreement = np.mean(flags == truth)
        assert agreement > 0.95


class TestGlrtStatistic:
    def test_zero_on_perfect_stance(self):
        f = np.tile([0.0, 0.0, G0], (11, 1))
        w = np.zeros((11, 3))
        assert glrt_statistic(f, w) == 0.0

    def test_constant_rate_term(self):
        f = np.tile([0.0, 0.0, G0], (11, 1))
        c = np.array([0.02, -0.01, 0.03])
        w = np.tile(c, (11, 1))
        cfg = DetectorConfig()
        expected = float(c @ c) / cfg.sigma_w**2
        assert glrt_statistic(f, w, cfg) == pytest.approx(expected, rel=1e-12)

    def test_empty_window(self):
        with pytest.raises(EmptyWindow):
            glrt_statistic(np.zeros((0, 3)), np.zeros((0, 3)))

    def test_swing_window_exceeds_gamma(self, circle_walk):
        series = circle_walk.left_imu
        truth = circle_walk.left_truth.stationary
        cfg = DetectorConfig()
        edges = np.flatnonzero(np.diff(truth.astype(np.int8)))
        mid = (edges[4] + 1 + edges[5] + 1) // 2
        t_stat = glrt_statistic(series.f[mid - 5:mid + 6], series.w[mid - 5:mid + 6], cfg)
        assert t_stat > cfg.gamma


class TestStanceGate:
    def test_all_stationary(self):
        series = _series([[0, 0, G0]] * 50, [[0, 0, 0]] * 50)
        assert stance_gate(series).all()

    def test_all_swing(self, circle_walk):
        series = circle_walk.left_imu
        truth = circle_walk.left_truth.stationary
        # centre of one maximal swing run, so the carved window is pure swing
        edges = np.flatnonzero(np.diff(truth.astype(np.int8)))
        run_start, run_stop = edges[4] + 1, edges[5] + 1
        mid = (run_start + run_stop) // 2
        sub = ImuSeries(t=series.t[mid - 15:mid + 15], f=series.f[mid - 15:mid + 15],
                        w=series.w[mid - 15:mid + 15])
        assert not stance_gate(sub).any()

    def test_high_agreement_with_truth_labels(self, circle_walk):
        flags = stance_gate(circle_walk.left_imu)
        truth = circle_walk.left_truth.stationary
        assert np.mean(flags == truth) >= 0.99
        # and the gate never fires while the foot genuinely moves
        assert not np.any(flags & ~truth & (np.abs(
            np.linalg.norm(circle_walk.left_truth.v, axis=1)) > 0.05))

    def test_matches_per_window_statistic(self, circle_walk):
        series = circle_walk.left_imu
        cfg = DetectorConfig()
        gate = stance_gate(series, cfg)
        rng = np.random.default_rng(5)
        h = cfg.half_window
        n = len(series)
        for i in rng.integers(0, n, size=60):
            lo, hi = max(i - h, 0), min(i + h + 1, n)
            expected = glrt_statistic(series.f[lo:hi], series.w[lo:hi], cfg) < cfg.gamma
            assert gate[i] == expected

    def test_monotone_in_gamma(self, circle_walk):
        series = circle_walk.left_imu
        lo = stance_gate(series, DetectorConfig(gamma=5.0))
        hi = stance_gate(series, DetectorConfig(gamma=500.0))
        assert not np.any(lo & ~hi)


class TestDetectSteps:
    def test_midwalk_step_and_terminal(self):
        # flight lasts 0.3 s >= 0.2 s: one step at the last stationary sample,
        # plus the terminal emission
        flags = np.array([1, 1, 0, 0, 0, 1], dtype=bool)
        times = np.arange(6) * 0.1
        taus = detect_steps(flags, times, 0.2)
        np.testing.assert_allclose(taus, [times[1], times[5]])

    def test_short_flight_suppressed(self):
        flags = np.array([1, 1, 0, 1, 1, 1], dtype=bool)
        times = np.arange(6) * 0.1
        taus = detect_steps(flags, times, 0.2)
        np.testing.assert_allclose(taus, [times[5]])

    def test_all_stationary_terminal_only(self):
        flags = np.ones(7, dtype=bool)
        times = np.arange(7) * 0.1
        np.testing.assert_allclose(detect_steps(flags, times, 0.2), [times[6]])

    def test_matches_naive_scanner_random(self):
        rng = np.random.default_rng(11)
        for _ in range(2000):
            n = int(rng.integers(1, 51))
            flags = rng.random(n) < 0.6
            times = np.cumsum(rng.uniform(0.05, 0.15, size=n))
            got = detect_steps(flags, times, 0.2)
            expected = naive_step_scan(flags, times, 0.2)
            np.testing.assert_allclose(got, expected)

    def test_exhaustive_short_sequences(self):
        # exhaustive over lengths 1..14 here; the acceptance suite goes to 20.
        # dt is a power of two so accumulated flight times are exact and the
        # threshold comparison has no representation ambiguity
        dt = 0.125
        for n in range(1, 15):
            combos = np.array(list(itertools.product([False, True], repeat=n)))
            times = np.arange(n) * dt
            batch = naive_step_scan_batch(combos, dt, 0.2)
            for row, fp in zip(combos, batch):
                taus = detect_steps(row, times, 0.2)
                assert step_indices_fingerprint(taus, times) == fp

    def test_non_terminal_steps_sit_on_falling_edges(self, circle_walk):
        truth = circle_walk.left_truth
        taus = detect_steps(truth.stationary, truth.t, 0.2)
        t = truth.t
        for tau in taus[:-1]:
            i = int(np.argmin(np.abs(t - tau)))
            assert truth.stationary[i] and not truth.stationary[i + 1]

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            detect_steps(np.ones(3, dtype=bool), np.zeros(2), 0.2)


class TestStandstillWindows:
    def test_protocol_prefix(self):
        n = 12 * 125 + 100
        flags = np.ones(n, dtype=bool)
        flags[12 * 125:] = False
        times = np.arange(n) / 125.0
        windows = standstill_windows(flags, times, 5.0)
        assert windows == [(0, 12 * 125)]

    def test_short_midwalk_stance_excluded(self):
        flags = np.zeros(1000, dtype=bool)
        flags[400:450] = True  # 0.4 s at 125 Hz
        times = np.arange(1000) / 125.0
        assert standstill_windows(flags, times, 5.0) == []

    def test_empty(self):
        assert standstill_windows(np.zeros(0, dtype=bool), np.zeros(0), 5.0) == []

    def test_multiple_windows(self, circle_walk):
        truth = circle_walk.left_truth
        windows = standstill_windows(truth.stationary, truth.t, 5.0)
        assert len(windows) == 2
        assert windows[0][0] == 0
        assert windows[1][1] == len(truth)
