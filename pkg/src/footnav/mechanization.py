"""Strapdown integration of foot-mounted IMU samples into navigation states.

One integration step advances position with the previous velocity, rotates
the orientation by the gyro increment, and then advances velocity with the
specific force resolved through the *new* orientation:

    p_n = p_{n-1} + v_{n-1} * dt
    C_n = V(w_n * dt) @ C_{n-1}
    v_n = v_{n-1} + (C_n^T @ f_n + g) * dt

The orientation subscripts pair the sample with the attitude at the same
instant; the linearized transition in :mod:`footnav.estimator` uses the
identical convention so its Jacobian matches this integrator exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import GapTooLarge, NonMonotonicTime, NotStationary

# Dropped-sample guard: reference IMUs log at 125 Hz, so a step longer than
# this means samples were lost and the series must not be integrated.
MAX_TIME_STEP = 0.1

# Re-orthonormalize the attitude every this many integration steps.
RENORM_INTERVAL = 100

# Sanity bounds on sensor magnitudes (configurable at ingest).
MAX_SPECIFIC_FORCE = 200.0  # m/s^2
MAX_ANGULAR_RATE = 50.0  # rad/s


@dataclass(frozen=True)
class ImuSample:
    """One timestamped IMU sample: specific force and angular rate, body frame."""

    t: float  # seconds
    f: np.ndarray  # (3,) m/s^2, gravity included
    w: np.ndarray  # (3,) rad/s


@dataclass(frozen=True)
class ImuSeries:
    """A time-ordered block of IMU samples.

    ``t`` is strictly increasing, in seconds; ``f`` and ``w`` are ``(n, 3)``
    arrays aligned with ``t``.
    """

    t: np.ndarray
    f: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        f = np.asarray(self.f, dtype=float)
        w = np.asarray(self.w, dtype=float)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "w", w)
        if t.ndim != 1 or f.shape != (t.size, 3) or w.shape != (t.size, 3):
            raise ValueError("ImuSeries arrays must be (n,), (n, 3), (n, 3)")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(f)) and np.all(np.isfinite(w))):
            raise ValueError("ImuSeries contains non-finite values")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise NonMonotonicTime("ImuSeries timestamps must strictly increase")

    def __len__(self) -> int:
        return int(self.t.size)

    def sample(self, i: int) -> ImuSample:
        return ImuSample(t=float(self.t[i]), f=self.f[i], w=self.w[i])

    def check_magnitudes(self, max_f: float = MAX_SPECIFIC_FORCE,
                         max_w: float = MAX_ANGULAR_RATE) -> None:
        if np.any(np.linalg.norm(self.f, axis=1) >= max_f):
            raise ValueError(f"specific force exceeds {max_f} m/s^2")
        if np.any(np.linalg.norm(self.w, axis=1) >= max_w):
            raise ValueError(f"angular rate exceeds {max_w} rad/s")


@dataclass(frozen=True)
class NavState:
    """Navigation state at one instant: position, velocity, orientation."""

    t: float
    p: np.ndarray  # (3,) m, world frame
    v: np.ndarray  # (3,) m/s, world frame
    C: np.ndarray  # (3, 3) world-to-body rotation

    @staticmethod
    def at_rest(t: float = 0.0, C: np.ndarray | None = None) -> "NavState":
        return NavState(t=t, p=np.zeros(3), v=np.zeros(3),
                        C=np.eye(3) if C is None else np.asarray(C, dtype=float))


def propagate(prev: NavState, sample: ImuSample, g0: float = geometry.DEFAULT_GRAVITY,
              max_dt: float = MAX_TIME_STEP) -> NavState:
    """Advance ``prev`` by one IMU sample.

    Raises :class:`NonMonotonicTime` if the sample does not move time
    forward and :class:`GapTooLarge` if the step exceeds ``max_dt`` (which
    signals dropped samples; the series must not be silently interpolated).
    """
    dt = sample.t - prev.t
    if dt <= 0.0:
        raise NonMonotonicTime(f"dt = {dt} at t = {sample.t}")
    if dt > max_dt:
        raise GapTooLarge(f"dt = {dt} s at t = {sample.t} exceeds {max_dt} s")
    c_new = geometry.rotation_from_vector_angle(np.asarray(sample.w) * dt) @ prev.C
    p_new = prev.p + prev.v * dt
    v_new = prev.v + (c_new.T @ np.asarray(sample.f) + geometry.gravity_vector(g0)) * dt
    return NavState(t=sample.t, p=p_new, v=v_new, C=c_new)


@dataclass
class IntegratedTrack:
    """Dense output of :func:`integrate_series`: arrays aligned with the series."""

    t: np.ndarray  # (n,)
    p: np.ndarray  # (n, 3)
    v: np.ndarray  # (n, 3)
    C: np.ndarray  # (n, 3, 3)


def integrate_series(series: ImuSeries, init: NavState,
                     g0: float = geometry.DEFAULT_GRAVITY,
                     renorm_every: int = RENORM_INTERVAL) -> IntegratedTrack:
    """Integrate a whole series from ``init``, re-orthonormalizing periodically.

    ``init.t`` must equal the first timestamp; the first output row is the
    initial state itself.
    """
    n = len(series)
    if n == 0:
        raise ValueError("cannot integrate an empty series")
    if abs(init.t - series.t[0]) > 1e-12:
        raise ValueError("initial state time must match the first sample")
    track = IntegratedTrack(
        t=series.t.copy(),
        p=np.empty((n, 3)),
        v=np.empty((n, 3)),
        C=np.empty((n, 3, 3)),
    )
    state = init
    track.p[0], track.v[0], track.C[0] = state.p, state.v, state.C
    for i in range(1, n):
        state = propagate(state, series.sample(i), g0=g0)
        if renorm_every and i % renorm_every == 0:
            state = NavState(state.t, state.p, state.v, geometry.orthonormalize(state.C))
        track.p[i], track.v[i], track.C[i] = state.p, state.v, state.C
    return track


def initial_orientation(series: ImuSeries, window: tuple[int, int],
                        g0: float = geometry.DEFAULT_GRAVITY,
                        alpha: float = 0.25,
                        eps: float = 0.5) -> np.ndarray:
    """Level the sensor from a stationary window; yaw is zero by convention.

    The returned world-to-body matrix aligns the averaged specific force
    with the upward axis through the smallest (horizontal-axis) rotation.
    Raises :class:`NotStationary` when the window's mean force magnitude
    deviates from ``g0`` by more than ``alpha`` or any rate exceeds ``eps``
    (the same thresholds the motionless detector uses).
    """
    lo, hi = window
    if not 0 <= lo < hi <= len(series):
        raise ValueError(f"window {window} outside series of length {len(series)}")
    f_mean = series.f[lo:hi].mean(axis=0)
    f_norm = float(np.linalg.norm(f_mean))
    if abs(f_norm - g0) > alpha * g0:
        raise NotStationary(
            f"mean specific force {f_norm:.3f} m/s^2 deviates from {g0} by more than {alpha:.0%}")
    if np.max(np.linalg.norm(series.w[lo:hi], axis=1)) > eps:
        raise NotStationary(f"angular rate in window exceeds {eps} rad/s")
    f_hat = f_mean / f_norm
    up = np.array([0.0, 0.0, 1.0])
    axis = np.cross(f_hat, up)
    sin_a = float(np.linalg.norm(axis))
    cos_a = float(np.dot(f_hat, up))
    if sin_a < 1e-12:
        if cos_a > 0:
            return np.eye(3)
        # upside down: roll by pi about the first axis by convention
        m = geometry.rotation_from_vector_angle([np.pi, 0.0, 0.0])
        return m.T
    angle = np.arctan2(sin_a, cos_a)
    # m maps f_hat onto +U; skew(a) rotates by -a about a, hence the sign
    m = geometry.rotation_from_vector_angle(-axis / sin_a * angle)
    return m.T
