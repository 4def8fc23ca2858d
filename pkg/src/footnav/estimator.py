"""Error-state Kalman filter with zero-velocity updates and RTS smoothing.

The filter estimates the 9-dimensional deviation ``dx = [dp, dv, beta]`` of
the true state from the mechanized nominal trajectory, where ``beta`` is a
small world-frame rotation relating the true attitude to the nominal one
through ``C_true^T = (I + skew(beta)) @ C^T``.  The linearized transition

    F = [[I, I*dt,          0],
         [0,    I, -skew(u)*dt],      u = C^T @ f  (resolved specific force)
         [0,    0,          I]]

    G = [[      0,        0],
         [C^T * dt,        0],
         [      0, -C^T * dt]]

is the exact Jacobian of one mechanization step with respect to ``dx``,
which the test suite verifies by central finite differences.

Two pseudo-measurements drive the filter whenever the stance gate fires:
zero velocity during ordinary stance, and position-plus-velocity during the
protocol standstill pauses (position anchored to the known start point at
the beginning and, thanks to the closed-loop protocol, to the same point at
the end).  Attitude deviations are folded into the nominal orientation
right after each update; position and velocity deviations stay in the error
state until the backward smoothing pass so the forward trajectory remains
continuous.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from . import geometry
from .detectors import (DetectorConfig, gyro_leveled_orientations,
                        motionless_flags, stance_gate, standstill_windows)
from .errors import DivergedFilter, NotStationary, SingularPrediction
from .mechanization import ImuSample, ImuSeries, NavState, initial_orientation, propagate

# First-order validity guard on the attitude error estimate.
MAX_BETA = 0.5  # rad

# PSD tolerance: covariance eigenvalues may dip this far below zero.
PSD_TOL = 1e-9

_I9 = np.eye(9)


def _default_q() -> np.ndarray:
    return np.diag([0.05**2] * 3 + [0.005**2] * 3)


def _default_r_pv() -> np.ndarray:
    return np.diag([0.01**2] * 3 + [0.01**2] * 3)


def _default_r_v() -> np.ndarray:
    return np.diag([0.01**2] * 3)


def _default_p0() -> np.ndarray:
    return np.diag([1e-3**2] * 3 + [1e-3**2] * 3 + [5e-3**2, 5e-3**2, 1e-6**2])


@dataclass
class NoiseConfig:
    """Covariances of the filter: process, pseudo-measurements, initial state.

    ``q`` is the 6x6 per-sample sensor noise covariance (accelerometer block
    then gyro block), ``r_pv`` the 6x6 position+velocity pseudo-measurement
    covariance used inside standstill windows, ``r_v`` the 3x3 zero-velocity
    covariance used during ordinary stance.  Defaults are engineering
    choices tuned on the synthetic gait corpus; every entry can be
    overridden from the run config.
    """

    q: np.ndarray = field(default_factory=_default_q)
    r_pv: np.ndarray = field(default_factory=_default_r_pv)
    r_v: np.ndarray = field(default_factory=_default_r_v)
    p0: np.ndarray = field(default_factory=_default_p0)

    def __post_init__(self):
        for name, mat, dim in (("q", self.q, 6), ("r_pv", self.r_pv, 6),
                               ("r_v", self.r_v, 3), ("p0", self.p0, 9)):
            mat = np.asarray(mat, dtype=float)
            setattr(self, name, mat)
            if mat.shape != (dim, dim):
                raise ValueError(f"{name} must be {dim}x{dim}")
            if np.linalg.norm(mat - mat.T) > 1e-12:
                raise ValueError(f"{name} must be symmetric")
            if np.min(np.linalg.eigvalsh(mat)) < -PSD_TOL:
                raise ValueError(f"{name} must be positive semidefinite")

    @staticmethod
    def from_sigmas(accel_noise: float = 0.05, gyro_noise: float = 0.005,
                    zupt_sigma: float = 0.01, anchor_sigma: float = 0.01,
                    p0_pos: float = 1e-3, p0_vel: float = 1e-3,
                    p0_tilt: float = 5e-3, p0_yaw: float = 1e-6) -> "NoiseConfig":
        return NoiseConfig(
            q=np.diag([accel_noise**2] * 3 + [gyro_noise**2] * 3),
            r_pv=np.diag([anchor_sigma**2] * 3 + [zupt_sigma**2] * 3),
            r_v=np.diag([zupt_sigma**2] * 3),
            p0=np.diag([p0_pos**2] * 3 + [p0_vel**2] * 3
                       + [p0_tilt**2, p0_tilt**2, p0_yaw**2]),
        )


@dataclass
class TransitionMatrices:
    """Linearized one-step model: ``dx_n = F @ dx_{n-1} + G @ [df, dw]`` plus drift ``L``."""

    F: np.ndarray  # (9, 9)
    G: np.ndarray  # (9, 6)
    L: np.ndarray  # (9,)


def build_transition(prev: NavState, sample: ImuSample,
                     g0: float = geometry.DEFAULT_GRAVITY) -> TransitionMatrices:
    """Transition matrices for the step from ``prev`` to ``sample``.

    The orientation entering the velocity rows is the propagated one at the
    sample time, matching :func:`footnav.mechanization.propagate`; a zero
    time step degenerates to ``F = I``, ``G = 0``, ``L = 0``.
    """
    dt = sample.t - prev.t
    c_new = geometry.rotation_from_vector_angle(np.asarray(sample.w) * dt) @ prev.C
    return _transition(c_new, np.asarray(sample.f, dtype=float), dt, g0)


def _transition(c_new: np.ndarray, f: np.ndarray, dt: float, g0: float) -> TransitionMatrices:
    ct = c_new.T
    u = ct @ f
    F = np.eye(9)
    F[0:3, 3:6] = np.eye(3) * dt
    F[3:6, 6:9] = -geometry.skew(u) * dt
    G = np.zeros((9, 6))
    G[3:6, 0:3] = ct * dt
    G[6:9, 3:6] = -ct * dt
    L = np.zeros(9)
    L[3:6] = (u + geometry.gravity_vector(g0)) * dt
    return TransitionMatrices(F=F, G=G, L=L)


@dataclass
class ForwardResult:
    """Everything the forward pass produces, retained for smoothing."""

    t: np.ndarray        # (n,)
    p: np.ndarray        # (n, 3) nominal positions
    v: np.ndarray        # (n, 3) nominal velocities
    C: np.ndarray        # (n, 3, 3) nominal orientations (attitude already folded)
    dx: np.ndarray       # (n, 9) filtered error states dx_{n|n}
    dx_pred: np.ndarray  # (n, 9) predicted error states dx_{n|n-1}
    P_filt: np.ndarray   # (n, 9, 9) P_{n|n}
    P_pred: np.ndarray   # (n, 9, 9) P_{n|n-1}
    F: np.ndarray        # (n, 9, 9), F[i] propagates i-1 -> i
    gate: np.ndarray     # (n,) bool, stance gate
    updated: np.ndarray  # (n,) bool, where a measurement update ran


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _check_psd(p: np.ndarray, where: str) -> None:
    try:
        np.linalg.cholesky(p + PSD_TOL * _I9)
    except np.linalg.LinAlgError:
        raise DivergedFilter(f"covariance lost positive semidefiniteness at {where}")


def _fold_attitude(c: np.ndarray, beta: np.ndarray, where: str) -> np.ndarray:
    if np.linalg.norm(beta) >= MAX_BETA:
        raise DivergedFilter(f"attitude error {np.linalg.norm(beta):.3f} rad at {where}")
    return geometry.orthonormalize(c @ (np.eye(3) + geometry.skew(beta)).T)


def forward_filter(series: ImuSeries, init: NavState, gate: np.ndarray,
                   standstills: list[tuple[int, int]],
                   noise: NoiseConfig | None = None,
                   g0: float = geometry.DEFAULT_GRAVITY,
                   start_anchor: np.ndarray | None = None,
                   final_anchor: np.ndarray | None = None,
                   closed_loop: bool = True) -> ForwardResult:
    """Run the forward error-state filter over one series.

    ``gate`` marks the samples where a pseudo-measurement applies;
    ``standstills`` (from :func:`footnav.detectors.standstill_windows`)
    marks where that measurement includes position.  Position anchors
    default to the origin at both ends of the closed loop; standstill
    windows other than the first and last get velocity-only updates since
    their positions are unknown.  With ``closed_loop`` false the final
    window also gets velocity-only updates (open walks end at an unknown
    point).
    """
    noise = noise or NoiseConfig()
    n = len(series)
    if n < 2:
        raise ValueError("series too short to filter")
    gate = np.asarray(gate, dtype=bool)
    if gate.shape != (n,):
        raise ValueError("gate must align with the series")
    start_anchor = np.zeros(3) if start_anchor is None else np.asarray(start_anchor, float)
    final_anchor = np.zeros(3) if final_anchor is None else np.asarray(final_anchor, float)

    res = ForwardResult(
        t=series.t.copy(),
        p=np.empty((n, 3)), v=np.empty((n, 3)), C=np.empty((n, 3, 3)),
        dx=np.zeros((n, 9)), dx_pred=np.zeros((n, 9)),
        P_filt=np.empty((n, 9, 9)), P_pred=np.empty((n, 9, 9)),
        F=np.empty((n, 9, 9)),
        gate=gate.copy(), updated=np.zeros(n, dtype=bool),
    )
    # Only the first and last standstill windows carry known positions;
    # any mid-walk pause gets velocity-only updates like ordinary stance.
    anchored = {}
    if standstills:
        for idx in range(*standstills[0]):
            anchored[idx] = start_anchor
        if closed_loop:
            for idx in range(*standstills[-1]):
                anchored[idx] = final_anchor

    state = init
    res.p[0], res.v[0], res.C[0] = state.p, state.v, state.C
    res.P_filt[0] = res.P_pred[0] = noise.p0
    res.F[0] = _I9
    dx = np.zeros(9)

    for i in range(1, n):
        state = propagate(state, series.sample(i), g0=g0)
        if i % 100 == 0:
            state = NavState(state.t, state.p, state.v, geometry.orthonormalize(state.C))
        dt = series.t[i] - series.t[i - 1]
        tm = _transition(state.C, series.f[i], dt, g0)
        dx_pred = tm.F @ dx
        p_pred = _symmetrize(tm.F @ res.P_filt[i - 1] @ tm.F.T + tm.G @ noise.q @ tm.G.T)
        res.F[i] = tm.F
        res.dx_pred[i] = dx_pred
        res.P_pred[i] = p_pred

        if gate[i]:
            if i in anchored:
                # position + velocity pseudo-measurement against the anchor
                innov = np.concatenate([
                    state.p + dx_pred[0:3] - anchored[i],
                    state.v + dx_pred[3:6],
                ])
                pht = p_pred[:, 0:6]
                s = p_pred[0:6, 0:6] + noise.r_pv
                k = np.linalg.solve(s, pht.T).T
                dx = dx_pred - k @ innov
                p_new = _symmetrize(p_pred - k @ p_pred[0:6, :])
            else:
                # zero-velocity pseudo-measurement
                innov = state.v + dx_pred[3:6]
                pht = p_pred[:, 3:6]
                s = p_pred[3:6, 3:6] + noise.r_v
                k = np.linalg.solve(s, pht.T).T
                dx = dx_pred - k @ innov
                p_new = _symmetrize(p_pred - k @ p_pred[3:6, :])
            _check_psd(p_new, f"update {i}")
            state = NavState(state.t, state.p, state.v,
                             _fold_attitude(state.C, dx[6:9], f"update {i}"))
            dx[6:9] = 0.0
            res.updated[i] = True
        else:
            dx = dx_pred
            p_new = p_pred

        res.dx[i] = dx
        res.P_filt[i] = p_new
        res.p[i], res.v[i], res.C[i] = state.p, state.v, state.C

    return res


def rts_smooth(dx_filt: np.ndarray, P_filt: np.ndarray, P_pred: np.ndarray,
               F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Backward Rauch-Tung-Striebel pass over the stored forward quantities.

    ``F[i]`` must be the transition from ``i-1`` to ``i`` and ``P_pred[i]``
    the prior at ``i``, exactly as :func:`forward_filter` stores them.
    Returns smoothed error states and covariances.  The prior inversion is
    a symmetric positive-definite solve with one round of jitter before
    giving up with :class:`SingularPrediction`.
    """
    dx_filt = np.asarray(dx_filt, dtype=float)
    n = dx_filt.shape[0]
    dx_s = dx_filt.copy()
    p_s = np.asarray(P_filt, dtype=float).copy()
    for i in range(n - 2, -1, -1):
        p_next_pred = P_pred[i + 1]
        f_next = F[i + 1]
        try:
            cf = sla.cho_factor(p_next_pred, lower=True, check_finite=False)
        except (np.linalg.LinAlgError, sla.LinAlgError):
            jitter = 1e-12 * np.trace(p_next_pred) / 9.0
            p_next_pred = p_next_pred + jitter * _I9
            try:
                cf = sla.cho_factor(p_next_pred, lower=True, check_finite=False)
            except (np.linalg.LinAlgError, sla.LinAlgError):
                raise SingularPrediction(f"prior covariance not factorizable at step {i + 1}")
            eig = np.linalg.eigvalsh(p_next_pred)
            if eig[0] <= 0 or eig[-1] / eig[0] > 1e12:
                raise SingularPrediction(
                    f"prior covariance condition number exceeds 1e12 at step {i + 1}")
        a = sla.cho_solve(cf, f_next @ P_filt[i], check_finite=False).T
        dx_s[i] = dx_filt[i] + a @ (dx_s[i + 1] - f_next @ dx_filt[i])
        p_s[i] = _symmetrize(P_filt[i] + a @ (p_s[i + 1] - P_pred[i + 1]) @ a.T)
    return dx_s, p_s


@dataclass
class FootTrajectory:
    """Smoothed navigation history of one foot plus its stationarity flags."""

    t: np.ndarray           # (n,)
    p: np.ndarray           # (n, 3)
    v: np.ndarray           # (n, 3)
    C: np.ndarray           # (n, 3, 3)
    stationary: np.ndarray  # (n,) bool, instantaneous motionless flags
    gate: np.ndarray | None = None     # (n,) bool, filter stance gate
    trace_p: np.ndarray | None = None  # (n,) smoothed covariance trace

    def __len__(self) -> int:
        return int(self.t.size)

    def planar(self):
        from .fusion import PlanarPath
        return PlanarPath(t=self.t.copy(), xy=self.p[:, 0:2].copy(),
                          stationary=None if self.stationary is None else self.stationary.copy())


def apply_smoothed_corrections(forward: ForwardResult, dx_smooth: np.ndarray,
                               stationary: np.ndarray | None = None,
                               trace_p: np.ndarray | None = None) -> FootTrajectory:
    """Fold smoothed error states into the nominal trajectory.

    Positions and velocities are corrected additively; attitudes by the
    first-order rotation followed by orthonormalization.
    """
    dx_smooth = np.asarray(dx_smooth, dtype=float)
    n = forward.t.size
    if dx_smooth.shape != (n, 9):
        raise ValueError("smoothed corrections must align with the forward result")
    c = np.empty_like(forward.C)
    for i in range(n):
        beta = dx_smooth[i, 6:9]
        if np.any(beta):
            c[i] = _fold_attitude(forward.C[i], beta, f"smoothed sample {i}")
        else:
            c[i] = forward.C[i]
    flags = (np.zeros(n, dtype=bool) if stationary is None
             else np.asarray(stationary, dtype=bool))
    return FootTrajectory(
        t=forward.t.copy(),
        p=forward.p + dx_smooth[:, 0:3],
        v=forward.v + dx_smooth[:, 3:6],
        C=c,
        stationary=flags,
        gate=forward.gate.copy(),
        trace_p=trace_p,
    )


def reconstruct_foot(series: ImuSeries, det_cfg: DetectorConfig | None = None,
                     noise: NoiseConfig | None = None,
                     g0: float = geometry.DEFAULT_GRAVITY,
                     closed_loop: bool = True) -> FootTrajectory:
    """Full single-foot pipeline: level, gate, filter, smooth, correct, flag.

    The series must follow the collection protocol: a standstill pause at
    the start (used for leveling and the start anchor) and one at the end
    (used for the closed-loop position anchor; pass ``closed_loop=False``
    for walks that end away from their start).
    """
    det_cfg = det_cfg or DetectorConfig()
    noise = noise or NoiseConfig()
    series.check_magnitudes()

    gate = stance_gate(series, det_cfg)
    windows = standstill_windows(gate, series.t, det_cfg.min_standstill)
    if not windows:
        raise NotStationary("no standstill window found; series violates the protocol")
    w_start, w_stop = windows[0]
    if series.t[w_start] - series.t[0] > 1.0:
        raise NotStationary("series does not begin inside a standstill window")

    lev_stop = int(np.searchsorted(series.t, series.t[w_start] + 1.0, side="right"))
    lev_window = (w_start, max(min(lev_stop, w_stop), w_start + 2))
    c0 = initial_orientation(series, lev_window, g0=g0, alpha=det_cfg.alpha, eps=det_cfg.eps)
    init = NavState(t=float(series.t[0]), p=np.zeros(3), v=np.zeros(3), C=c0)

    fwd = forward_filter(series, init, gate, windows, noise, g0=g0,
                         closed_loop=closed_loop)
    dx_s, p_s = rts_smooth(fwd.dx, fwd.P_filt, fwd.P_pred, fwd.F)
    flags = motionless_flags(
        series, gyro_leveled_orientations(series, lev_window, det_cfg), det_cfg)
    return apply_smoothed_corrections(
        fwd, dx_s, stationary=flags, trace_p=np.trace(p_s, axis1=1, axis2=2))


def dump_diagnostics(traj: FootTrajectory, path) -> None:
    """Write per-sample smoothing diagnostics as CSV (t, trace(P), gate flag)."""
    trace = traj.trace_p if traj.trace_p is not None else np.zeros(len(traj))
    gate = traj.gate if traj.gate is not None else np.zeros(len(traj), dtype=bool)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t[s],trace_P,gate\n")
        for t, tr, gt in zip(traj.t, trace, gate):
            fh.write(f"{t:.6f},{tr:.9e},{int(gt)}\n")
