"""Synthetic-gait oracle, quality gating, and step-period comparison.

The oracle builds closed-loop walks from closed-form pose profiles: foot
positions move between stance keyframes along quintic ramps with vanishing
velocity *and* acceleration at both ends, so stance phases are exactly
stationary and the whole pose is twice continuously differentiable.  The
emitted IMU samples are the exact inversion of the discrete motion model
over each sampling interval (the rotation and velocity increments an
ideal integrating IMU would report), so stepping the mechanization through
them recovers the true orientation and velocity to machine precision and
the true position up to the position integrator's own truncation, which
cancels over complete swings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as ssig

from . import geometry
from .detectors import standstill_windows
from .errors import InfeasibleGait, NoStandstill, TooShort
from .estimator import FootTrajectory
from .fusion import dtw_distance
from .mechanization import ImuSeries

# Quality-gate default for the unnormalized DTW distance between the fused
# feet: mean + 3 sigma over the bundled 50-run clean synthetic corpus
# (60 s walks at 125 Hz; see tests/data/dtw_calibration.csv).  Longer walks
# accumulate proportionally more cost, so override for other durations.
DTW_MAX_DEFAULT = 1409.7

CLOSURE_MAX_DEFAULT = 0.05  # m, the protocol's floor-marker tolerance

_SHAPES = ("circle", "rectangle", "figure_eight", "line")


@dataclass
class GaitParams:
    """Parameters of a synthetic walk.

    ``cadence`` counts steps of *both* feet per second (the union rate), so
    each foot cycles at half that.  Closed shapes scale themselves so the
    loop closes after an integral number of strides; the open ``line``
    shape walks straight and is meant for step-geometry tests only.
    """

    stride: float = 0.7            # m
    cadence: float = 1.8           # union steps/s
    stance_fraction: float = 0.6   # fraction of a foot cycle on the ground
    shape: str = "circle"
    duration: float = 60.0         # s, including both standstills
    sample_rate: float = 125.0     # Hz
    standstill: float = 12.0       # s of immobility at each end
    foot_separation: float = 0.2   # m between the feet, normal to the path
    lift_height: float = 0.05      # m of swing-phase foot lift
    pitch_amplitude: float = 0.3   # rad of swing-phase foot pitch
    initial_heading: float = 0.0   # rad, used by the line shape
    first_foot: str = "left"
    accel_noise: float = 0.0       # m/s^2 white noise sigma
    gyro_noise: float = 0.0        # rad/s white noise sigma
    accel_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gyro_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    g0: float = geometry.DEFAULT_GRAVITY

    def __post_init__(self):
        self.accel_bias = np.asarray(self.accel_bias, dtype=float)
        self.gyro_bias = np.asarray(self.gyro_bias, dtype=float)
        if self.shape not in _SHAPES:
            raise InfeasibleGait(f"unknown shape {self.shape!r}; pick one of {_SHAPES}")
        if not 0.0 < self.stance_fraction < 1.0:
            raise InfeasibleGait("stance_fraction must lie in (0, 1)")
        if min(self.stride, self.duration, self.sample_rate) <= 0 or self.cadence < 0:
            raise InfeasibleGait("stride, duration and sample_rate must be positive")
        if self.first_foot not in ("left", "right"):
            raise InfeasibleGait("first_foot must be 'left' or 'right'")
        if self.cadence > 0:
            if self.flight_time < 0.2:
                raise InfeasibleGait(
                    f"flight time {self.flight_time:.3f} s below the 0.2 s step-detector "
                    "floor; lower stance_fraction or cadence")
            if self.strides_per_foot < 1:
                raise InfeasibleGait("duration leaves no room for a full stride")

    @property
    def foot_period(self) -> float:
        return 2.0 / self.cadence if self.cadence > 0 else math.inf

    @property
    def flight_time(self) -> float:
        return (1.0 - self.stance_fraction) * self.foot_period if self.cadence > 0 else 0.0

    @property
    def walk_time(self) -> float:
        return self.duration - 2.0 * self.standstill

    @property
    def strides_per_foot(self) -> int:
        if self.cadence == 0:
            return 0
        usable = self.walk_time - self.flight_time
        return max(int(math.floor(usable / self.foot_period + 0.5)), 0)


# --- smooth profiles: value, first and second derivative on [0, 1] --------

def _ramp(xi: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Quintic smoothstep with zero slope and curvature at both ends."""
    v = ((6.0 * xi - 15.0) * xi + 10.0) * xi**3
    d1 = 30.0 * xi**2 * (xi - 1.0) ** 2
    d2 = ((120.0 * xi - 180.0) * xi + 60.0) * xi
    return v, d1, d2


def _lift(xi: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """sin^4 bump: zero value, slope and curvature at both ends."""
    s, c = np.sin(np.pi * xi), np.cos(np.pi * xi)
    v = s**4
    d1 = 4.0 * np.pi * s**3 * c
    d2 = np.pi**2 * (12.0 * s**2 * c**2 - 4.0 * s**4)
    return v, d1, d2


def _pitch_shape(xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Signed swing-pitch profile, flat to second order at both ends."""
    s2, c2 = np.sin(2.0 * np.pi * xi), np.cos(2.0 * np.pi * xi)
    s1 = np.sin(np.pi * xi)
    v = s2 * s1**2
    d1 = 2.0 * np.pi * c2 * s1**2 + np.pi * s2**2
    return v, d1


# --- shape keyframes -------------------------------------------------------

def _unit_curve(shape: str, q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if shape == "circle":
        ang = 2.0 * np.pi * q
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if shape == "figure_eight":
        ang = 2.0 * np.pi * q
        return np.column_stack([np.sin(ang), 0.5 * np.sin(2.0 * ang)])
    if shape == "rectangle":
        # aspect 2:1, perimeter 6 in unit scale, counter-clockwise from a corner
        s = (q % 1.0) * 6.0
        x = np.empty_like(s)
        y = np.empty_like(s)
        for i, si in enumerate(s):
            if si < 2.0:
                x[i], y[i] = si, 0.0
            elif si < 3.0:
                x[i], y[i] = 2.0, si - 2.0
            elif si < 5.0:
                x[i], y[i] = 2.0 - (si - 3.0), 1.0
            else:
                x[i], y[i] = 0.0, 1.0 - (si - 5.0)
        return np.column_stack([x, y])
    raise InfeasibleGait(f"shape {shape!r} has no closed curve")


def _keyframes(params: GaitParams, foot: str) -> np.ndarray:
    """Stance positions of one foot, arc-length spaced along the scaled shape."""
    k = params.strides_per_foot
    half = 0.5 * params.foot_separation
    side = 1.0 if foot == "left" else -1.0
    phase = 0.0 if foot == params.first_foot else 0.5
    if params.shape == "line":
        h = params.initial_heading
        ahead = np.array([math.cos(h), math.sin(h)])
        normal = np.array([-math.sin(h), math.cos(h)])
        ks = (np.arange(k + 1) + phase) * params.stride
        return ks[:, None] * ahead[None, :] + side * half * normal[None, :]

    dense_q = np.linspace(0.0, 1.0, 20001)
    pts = _unit_curve(params.shape, dense_q)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    scale = k * params.stride / arc[-1]
    frac = ((np.arange(k + 1) + phase) / max(k, 1)) % 1.0
    targets = frac * arc[-1]
    q_at = np.interp(targets, arc, dense_q)
    kf = _unit_curve(params.shape, q_at) * scale
    # path normal from a central difference on the unit curve
    eps = 1e-4
    fwd = _unit_curve(params.shape, (q_at + eps) % 1.0)
    back = _unit_curve(params.shape, (q_at - eps) % 1.0)
    tang = fwd - back
    norms = np.linalg.norm(tang, axis=1)
    norms[norms == 0] = 1.0
    tang /= norms[:, None]
    normal = np.column_stack([-tang[:, 1], tang[:, 0]])
    kf += side * half * normal
    # exact closure for closed shapes: end keyframe is the start keyframe
    kf[-1] = kf[0]
    return kf


@dataclass
class SyntheticWalk:
    """Everything the oracle knows about one generated experiment."""

    params: GaitParams
    left_truth: FootTrajectory
    right_truth: FootTrajectory
    left_imu: ImuSeries
    right_imu: ImuSeries


def _foot_profile(params: GaitParams, foot: str, t: np.ndarray):
    """Analytic pose and derivatives of one foot over the sample times."""
    kf = _keyframes(params, foot)
    k = params.strides_per_foot
    n = t.size
    if k == 0:  # stationary series: feet stay put at their first keyframe
        p = np.column_stack([np.broadcast_to(kf[0], (n, 2)).copy(), np.zeros(n)])
        zeros = np.zeros(n)
        psi = np.full(n, params.initial_heading)
        return (p, np.zeros((n, 3)), np.zeros((n, 3)), psi, zeros,
                zeros.copy(), zeros.copy(), np.ones(n, dtype=bool))

    phase = 0.0 if foot == params.first_foot else 0.5
    swing_starts = params.standstill + (np.arange(k) + phase) * params.foot_period
    t_swing = params.flight_time

    chords = np.diff(kf, axis=0)
    headings = np.unwrap(np.arctan2(chords[:, 1], chords[:, 0]))
    psi_k = np.append(headings, headings[-1])  # heading held through the last stance
    p = np.empty((n, 3))
    v = np.zeros((n, 3))
    a = np.zeros((n, 3))
    psi = np.empty(n)
    psi_dot = np.zeros(n)
    theta = np.zeros(n)
    theta_dot = np.zeros(n)

    stride_idx = np.clip(np.searchsorted(swing_starts, t, side="right") - 1, -1, k - 1)
    completed = np.where(stride_idx < 0, 0, stride_idx)
    start_of = swing_starts[np.maximum(stride_idx, 0)]
    in_swing = (stride_idx >= 0) & (t < start_of + t_swing)
    # a sample exactly on a swing start still has zero velocity
    moving = in_swing & (t > start_of)

    rest = ~in_swing
    at_kf = completed + np.where(rest & (stride_idx >= 0), 1, 0)
    p[:, 0:2] = kf[at_kf]
    p[:, 2] = 0.0
    psi[:] = psi_k[at_kf]

    idx = np.flatnonzero(in_swing)
    if idx.size:
        ks = stride_idx[idx]
        xi = (t[idx] - swing_starts[ks]) / t_swing
        r, r1, r2 = _ramp(xi)
        l, l1, l2 = _lift(xi)
        ps, ps1 = _pitch_shape(xi)
        delta = chords[ks]
        p[idx, 0:2] = kf[ks] + delta * r[:, None]
        p[idx, 2] = params.lift_height * l
        v[idx, 0:2] = delta * (r1 / t_swing)[:, None]
        v[idx, 2] = params.lift_height * l1 / t_swing
        a[idx, 0:2] = delta * (r2 / t_swing**2)[:, None]
        a[idx, 2] = params.lift_height * l2 / t_swing**2
        dpsi = psi_k[ks + 1] - psi_k[ks]
        psi[idx] = psi_k[ks] + dpsi * r
        psi_dot[idx] = dpsi * r1 / t_swing
        theta[idx] = params.pitch_amplitude * ps
        theta_dot[idx] = params.pitch_amplitude * ps1 / t_swing

    stationary = ~moving
    return p, v, a, psi, psi_dot, theta, theta_dot, stationary


def _pose_to_imu(p, v, a, psi, psi_dot, theta, theta_dot, g0):
    """Instantaneous inversion of the motion model at each sample."""
    n = p.shape[0]
    c = np.empty((n, 3, 3))
    f = np.empty((n, 3))
    w = np.empty((n, 3))
    sin_p, cos_p = np.sin(psi), np.cos(psi)
    sin_t, cos_t = np.sin(theta), np.cos(theta)
    g = geometry.gravity_vector(g0)
    for i in range(n):
        rz = np.array([[cos_p[i], -sin_p[i], 0.0],
                       [sin_p[i], cos_p[i], 0.0],
                       [0.0, 0.0, 1.0]])
        ry = np.array([[cos_t[i], 0.0, sin_t[i]],
                       [0.0, 1.0, 0.0],
                       [-sin_t[i], 0.0, cos_t[i]]])
        r = rz @ ry  # body-to-world
        c[i] = r.T
        f[i] = c[i] @ (a[i] - g)
        # ZYX Euler rates with zero roll
        w[i] = np.array([-psi_dot[i] * sin_t[i], theta_dot[i], psi_dot[i] * cos_t[i]])
    return c, f, w


def _discretize_imu(t, c, v, f_point, w_point, g0):
    """Exact inversion of the *discrete* motion model, sample by sample.

    A real IMU delivers integrated increments over each sampling interval,
    so the emitted rate is the exact rotation increment divided by the
    interval and the specific force is the one that reproduces the exact
    velocity increment.  With these samples the discrete mechanization
    recovers orientation and velocity exactly; only position keeps its
    first-order-integrator truncation, which vanishes over complete swings.
    """
    n = t.size
    f = f_point.copy()
    w = w_point.copy()
    g = geometry.gravity_vector(g0)
    for i in range(1, n):
        dt = t[i] - t[i - 1]
        rel = c[i] @ c[i - 1].T
        w[i] = geometry.rotation_to_vector_angle(rel) / dt
        f[i] = c[i] @ ((v[i] - v[i - 1]) / dt - g)
    return f, w


def synth_gait(params: GaitParams | None = None, seed: int = 0) -> SyntheticWalk:
    """Generate one synthetic two-foot walk with exact ground truth.

    Noise and biases from ``params`` are applied to the emitted IMU series
    only; the truth depends solely on the gait parameters, so two seeds
    share identical truth and differ in noise alone.
    """
    params = params or GaitParams()
    dt = 1.0 / params.sample_rate
    n = int(round(params.duration * params.sample_rate))
    t = np.arange(n) * dt
    rng = np.random.default_rng(seed)

    walk = SyntheticWalk(params=params, left_truth=None, right_truth=None,
                         left_imu=None, right_imu=None)
    for foot in ("left", "right"):
        p, v, a, psi, psi_dot, theta, theta_dot, stationary = _foot_profile(params, foot, t)
        c, f_point, w_point = _pose_to_imu(p, v, a, psi, psi_dot, theta, theta_dot, params.g0)
        f, w = _discretize_imu(t, c, v, f_point, w_point, params.g0)
        truth = FootTrajectory(t=t.copy(), p=p, v=v, C=c, stationary=stationary)
        f_meas = f + params.accel_bias
        w_meas = w + params.gyro_bias
        if params.accel_noise > 0:
            f_meas = f_meas + rng.normal(0.0, params.accel_noise, size=f.shape)
        if params.gyro_noise > 0:
            w_meas = w_meas + rng.normal(0.0, params.gyro_noise, size=w.shape)
        imu = ImuSeries(t=t.copy(), f=f_meas, w=w_meas)
        if foot == "left":
            walk.left_truth, walk.left_imu = truth, imu
        else:
            walk.right_truth, walk.right_imu = truth, imu
    return walk


def transform_to_nav_frame(traj: FootTrajectory) -> FootTrajectory:
    """Express a trajectory in the frame the reconstruction uses.

    The per-foot filter starts at the origin with zero yaw, so truth must
    be translated to its own start and de-rotated by its initial heading
    before the two can be compared sample by sample.
    """
    r0 = traj.C[0].T
    psi0 = math.atan2(r0[1, 0], r0[0, 0])
    c, s = math.cos(-psi0), math.sin(-psi0)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    p = (traj.p - traj.p[0]) @ rot.T
    v = traj.v @ rot.T
    c_new = np.einsum("nij,kj->nik", traj.C, rot)
    return FootTrajectory(t=traj.t.copy(), p=p, v=v, C=c_new,
                          stationary=traj.stationary.copy(),
                          gate=None if traj.gate is None else traj.gate.copy(),
                          trace_p=None if traj.trace_p is None else traj.trace_p.copy())


# --- fault injection --------------------------------------------------------

def inject_bias(series: ImuSeries, gyro_bias=None, accel_bias=None) -> ImuSeries:
    """Series with constant sensor biases added."""
    f = series.f + (0.0 if accel_bias is None else np.asarray(accel_bias, dtype=float))
    w = series.w + (0.0 if gyro_bias is None else np.asarray(gyro_bias, dtype=float))
    return ImuSeries(t=series.t.copy(), f=f, w=w)


def inject_noise(series: ImuSeries, accel_sigma: float = 0.0, gyro_sigma: float = 0.0,
                 seed: int = 0) -> ImuSeries:
    """Series with white noise added, deterministic in the seed."""
    rng = np.random.default_rng(seed)
    f = series.f + rng.normal(0.0, accel_sigma, size=series.f.shape) if accel_sigma > 0 else series.f.copy()
    w = series.w + rng.normal(0.0, gyro_sigma, size=series.w.shape) if gyro_sigma > 0 else series.w.copy()
    return ImuSeries(t=series.t.copy(), f=f, w=w)


def inject_dropout(series: ImuSeries, t_from: float, t_to: float) -> ImuSeries:
    """Series with all samples in ``[t_from, t_to)`` removed."""
    keep = (series.t < t_from) | (series.t >= t_to)
    return ImuSeries(t=series.t[keep], f=series.f[keep], w=series.w[keep])


# --- quality gating ----------------------------------------------------------

def closure_error(traj: FootTrajectory, min_standstill: float = 5.0) -> float:
    """Planar distance between the first and last standstill mean positions."""
    if len(traj) == 0:
        raise NoStandstill("empty trajectory")
    windows = standstill_windows(traj.stationary, traj.t, min_standstill)
    if not windows:
        raise NoStandstill("trajectory has no standstill window")
    a0, b0 = windows[0]
    a1, b1 = windows[-1]
    start = traj.p[a0:b0, 0:2].mean(axis=0)
    end = traj.p[a1:b1, 0:2].mean(axis=0)
    return float(np.linalg.norm(end - start))


@dataclass
class QualityThresholds:
    dtw_max: float = DTW_MAX_DEFAULT
    closure_max: float = CLOSURE_MAX_DEFAULT
    step_count_diff_max: int = 2


@dataclass
class QualityReport:
    """Machine-checkable verdict on one reconstructed experiment."""

    dtw: float
    dtw_normalized: float
    closure_left: float
    closure_right: float
    step_count_left: int
    step_count_right: int
    passed: bool

    CSV_HEADER = ("dtw,dtw_normalized,closure_left[m],closure_right[m],"
                  "steps_left,steps_right,pass")

    def csv_row(self) -> str:
        return (f"{self.dtw:.6f},{self.dtw_normalized:.9f},{self.closure_left:.6f},"
                f"{self.closure_right:.6f},{self.step_count_left},"
                f"{self.step_count_right},{int(self.passed)}")

    def summary(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict}: dtw={self.dtw:.2f} (per-sample {self.dtw_normalized:.4f}) "
                f"closure L={self.closure_left * 100:.1f}cm R={self.closure_right * 100:.1f}cm "
                f"steps L={self.step_count_left} R={self.step_count_right}")


def quality_gate(bundle, thresholds: QualityThresholds | None = None) -> QualityReport:
    """Gate a reconstructed experiment on DTW, closure and step-count parity.

    ``bundle`` needs fused planar paths, per-foot trajectories and step
    records (see :class:`footnav.pipeline.ReferenceBundle`).
    """
    thresholds = thresholds or QualityThresholds()
    dtw = dtw_distance(bundle.fused_left, bundle.fused_right)
    dtw_norm = dtw / max(len(bundle.fused_left), len(bundle.fused_right))
    c_left = closure_error(bundle.left)
    c_right = closure_error(bundle.right)
    n_left = len(bundle.left_steps)
    n_right = len(bundle.right_steps)
    passed = (dtw < thresholds.dtw_max
              and c_left < thresholds.closure_max
              and c_right < thresholds.closure_max
              and abs(n_left - n_right) <= thresholds.step_count_diff_max)
    return QualityReport(dtw=dtw, dtw_normalized=dtw_norm,
                         closure_left=c_left, closure_right=c_right,
                         step_count_left=n_left, step_count_right=n_right,
                         passed=passed)


# --- step periods ------------------------------------------------------------

def reference_step_periods(left_starts: np.ndarray, right_starts: np.ndarray) -> np.ndarray:
    """Durations between consecutive step starts of either foot."""
    union = np.sort(np.concatenate([np.asarray(left_starts, dtype=float),
                                    np.asarray(right_starts, dtype=float)]))
    if union.size == 0:
        raise TooShort("no step starts to difference")
    return np.diff(union)


def smartphone_step_periods(t_ms: np.ndarray, acc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Step durations estimated from a smartphone accelerometer log.

    Band-passes the acceleration magnitude to the 0.5-3 Hz gait band and
    picks peaks at least 0.25 s apart.  Returns ``(event_times_s,
    durations_s)``; a constant signal yields no events.  This is a demo
    estimator for dataset-usage comparisons, not a ground-truth source.
    """
    t = np.asarray(t_ms, dtype=float) / 1000.0
    acc = np.atleast_2d(np.asarray(acc, dtype=float))
    if t.size < 2 or t[-1] - t[0] < 5.0:
        raise TooShort("need at least 5 s of accelerometer data")
    mag = np.linalg.norm(acc, axis=1)
    mag = mag - mag.mean()
    fs = 1.0 / float(np.median(np.diff(t)))
    high = min(3.0, 0.45 * fs)
    sos = ssig.butter(2, [0.5, high], btype="bandpass", fs=fs, output="sos")
    filtered = ssig.sosfiltfilt(sos, mag)
    prominence = max(0.1, 0.5 * float(np.std(filtered)))
    peaks, _ = ssig.find_peaks(filtered, distance=max(int(round(0.25 * fs)), 1),
                               prominence=prominence)
    events = t[peaks]
    return events, np.diff(events)


def calibrate_dtw_gate(n_runs: int = 50, seed: int = 0) -> np.ndarray:
    """DTW distances of clean synthetic runs, for gate calibration.

    Varies shape and cadence deterministically across runs and reconstructs
    each with the default pipeline; the gate default is the mean plus three
    standard deviations of the returned values.
    """
    from .pipeline import reconstruct_walk  # deferred, pipeline imports this module

    shapes = ("circle", "rectangle", "figure_eight")
    cadences = (1.5, 1.8, 2.1)
    values = []
    for i in range(n_runs):
        params = GaitParams(shape=shapes[i % 3], cadence=cadences[(i // 3) % 3],
                            stride=0.6 + 0.02 * (i % 5))
        walk = synth_gait(params, seed=seed + i)
        bundle = reconstruct_walk(walk.left_imu, walk.right_imu)
        values.append(dtw_distance(bundle.fused_left, bundle.fused_right))
    return np.asarray(values)
