"""Dual-foot alignment, fusion, common-grid interpolation and step records.

Per-foot reconstructions share the yaw-is-zero-at-start convention, so the
two feet come out in frames that differ by an unknown rotation about the
vertical.  That angle is recovered by brute-force minimization of the DTW
distance between the planar paths, after which the feet are fused: at every
completed step the feet exchange position information and a pseudo-
measurement caps their separation, with the corrections smoothed over the
whole walk so clean data passes through untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .errors import EmptyPath, LengthMismatch, OutOfRange, StepOffGrid


@dataclass
class PlanarPath:
    """Timestamped planar track: ``t`` (n,) seconds and ``xy`` (n, 2) meters."""

    t: np.ndarray
    xy: np.ndarray
    stationary: np.ndarray | None = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.xy = np.asarray(self.xy, dtype=float)
        if self.t.ndim != 1 or self.xy.shape != (self.t.size, 2):
            raise ValueError("PlanarPath needs t (n,) and xy (n, 2)")
        if self.t.size > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("PlanarPath timestamps must strictly increase")
        if self.stationary is not None:
            self.stationary = np.asarray(self.stationary, dtype=bool)
            if self.stationary.shape != self.t.shape:
                raise LengthMismatch("stationary flags must align with t")

    def __len__(self) -> int:
        return int(self.t.size)


@dataclass(frozen=True)
class StepRecord:
    """One completed step: start time, horizontal length, unwrapped heading."""

    t: float
    length: float
    theta: float
    shift: np.ndarray  # (3,) full 3D shift over the step


@dataclass
class FusionConfig:
    """Knobs of the heading search and the inter-foot fusion."""

    heading_resolution: float = math.radians(0.5)
    heading_refine: int = 10          # refinement factor of the local second pass
    search_rate: float = 10.0         # Hz the paths are decimated to for the search
    max_separation: float = 1.0       # m, inter-foot separation bound
    separation_sigma: float = 0.02    # m, strength of the separation pull
    anchor_sigma: float = 1e-4        # m, endpoint pinning of the corrections
    drift_rate: float = 0.05          # m/sqrt(s), random-walk scale of corrections


@njit(cache=True)
def _dtw_accumulate(a: np.ndarray, b: np.ndarray) -> float:
    n, m = a.shape[0], b.shape[0]
    prev = np.empty(m)
    cur = np.empty(m)
    for j in range(m):
        dx = a[0, 0] - b[j, 0]
        dy = a[0, 1] - b[j, 1]
        c = math.sqrt(dx * dx + dy * dy)
        prev[j] = c if j == 0 else prev[j - 1] + c
    for i in range(1, n):
        for j in range(m):
            dx = a[i, 0] - b[j, 0]
            dy = a[i, 1] - b[j, 1]
            c = math.sqrt(dx * dx + dy * dy)
            if j == 0:
                cur[j] = prev[0] + c
            else:
                best = prev[j]
                if prev[j - 1] < best:
                    best = prev[j - 1]
                if cur[j - 1] < best:
                    best = cur[j - 1]
                cur[j] = best + c
        prev, cur = cur, prev
    return prev[m - 1]


def dtw_distance(a: PlanarPath, b: PlanarPath, normalized: bool = False) -> float:
    """Dynamic-time-warping distance between two planar paths.

    Classic boundary-matched dynamic programme with the symmetric
    match/insert/delete step pattern and Euclidean point cost.  With
    ``normalized`` the accumulated cost is divided by the length of the
    longer path, which makes walks of different durations comparable.
    """
    if len(a) == 0 or len(b) == 0:
        raise EmptyPath("DTW needs two non-empty paths")
    cost = float(_dtw_accumulate(np.ascontiguousarray(a.xy), np.ascontiguousarray(b.xy)))
    if normalized:
        cost /= max(len(a), len(b))
    return cost


def rotate_path(path: PlanarPath, angle: float, center: np.ndarray | None = None) -> PlanarPath:
    """Rotate a path about the vertical axis through ``center`` (default: its start)."""
    if len(path) == 0:
        raise EmptyPath("cannot rotate an empty path")
    center = path.xy[0] if center is None else np.asarray(center, dtype=float)
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return PlanarPath(t=path.t.copy(), xy=(path.xy - center) @ rot.T + center,
                      stationary=None if path.stationary is None else path.stationary.copy())


def _decimate(path: PlanarPath, rate: float) -> PlanarPath:
    if rate <= 0 or len(path) < 3:
        return path
    span = path.t[-1] - path.t[0]
    if span <= 0:
        return path
    native = (len(path) - 1) / span
    stride = max(int(round(native / rate)), 1)
    if stride == 1:
        return path
    idx = np.arange(0, len(path), stride)
    if idx[-1] != len(path) - 1:
        idx = np.append(idx, len(path) - 1)
    return PlanarPath(t=path.t[idx], xy=path.xy[idx])


def align_headings(left: PlanarPath, right: PlanarPath,
                   resolution: float = math.radians(0.5),
                   cfg: FusionConfig | None = None) -> float:
    """Angle to rotate ``right`` by so it best overlays ``left``.

    Brute-force search of the DTW distance over a full turn at
    ``resolution``, then one local pass ten times finer around the coarse
    minimum.  Ties resolve to the lowest angle; the result is wrapped to
    (-pi, pi].
    """
    cfg = cfg or FusionConfig(heading_resolution=resolution)
    a = _decimate(left, cfg.search_rate)
    b = _decimate(right, cfg.search_rate)

    def cost(angle: float) -> float:
        return dtw_distance(a, rotate_path(b, angle))

    coarse = np.arange(0.0, 2.0 * math.pi, resolution)
    costs = [cost(phi) for phi in coarse]
    best = coarse[int(np.argmin(costs))]

    fine_step = resolution / cfg.heading_refine
    fine = best + np.arange(-cfg.heading_refine, cfg.heading_refine + 1) * fine_step
    fine_costs = [cost(phi) for phi in fine]
    best = float(fine[int(np.argmin(fine_costs))])
    wrapped = math.remainder(best, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def interpolate_to_grid(traj, grid: np.ndarray) -> PlanarPath:
    """Linear planar interpolation of a foot trajectory onto a time grid.

    Stationarity flags travel by nearest neighbour.  Raises
    :class:`OutOfRange` when the grid leaves the trajectory's span.
    """
    grid = np.asarray(grid, dtype=float)
    t = np.asarray(traj.t, dtype=float)
    if grid.size == 0:
        raise OutOfRange("empty interpolation grid")
    if grid[0] < t[0] - 1e-9 or grid[-1] > t[-1] + 1e-9:
        raise OutOfRange(
            f"grid [{grid[0]}, {grid[-1]}] outside trajectory span [{t[0]}, {t[-1]}]")
    xy = np.column_stack([np.interp(grid, t, traj.p[:, 0]), np.interp(grid, t, traj.p[:, 1])]) \
        if hasattr(traj, "p") else \
        np.column_stack([np.interp(grid, t, traj.xy[:, 0]), np.interp(grid, t, traj.xy[:, 1])])
    flags = getattr(traj, "stationary", None)
    out_flags = None
    if flags is not None:
        nearest = np.clip(np.searchsorted(t, grid), 1, t.size - 1)
        nearest = np.where(np.abs(t[nearest] - grid) <= np.abs(grid - t[nearest - 1]),
                           nearest, nearest - 1)
        out_flags = np.asarray(flags, dtype=bool)[nearest]
    return PlanarPath(t=grid.copy(), xy=xy, stationary=out_flags)


def center_of_gravity(left: PlanarPath, right: PlanarPath) -> PlanarPath:
    """Per-sample midpoint of the two feet on their common grid."""
    if len(left) != len(right) or np.any(np.abs(left.t - right.t) > 1e-9):
        raise LengthMismatch("feet must share the common time grid")
    return PlanarPath(t=left.t.copy(), xy=0.5 * (left.xy + right.xy))


def step_records(traj, starts: np.ndarray) -> list[StepRecord]:
    """Step geometry between consecutive step starts of one foot.

    Each record's shift runs from one step start to the next; the length is
    its horizontal norm and the heading is the planar argument, unwrapped
    so consecutive headings never jump by more than pi.  Step starts must
    coincide with trajectory timestamps.
    """
    starts = np.asarray(starts, dtype=float)
    t = np.asarray(traj.t, dtype=float)
    idx = np.searchsorted(t, starts)
    idx = np.clip(idx, 0, t.size - 1)
    left_ok = np.abs(t[idx] - starts) <= 1e-9
    back = np.clip(idx - 1, 0, t.size - 1)
    use_back = ~left_ok & (np.abs(t[back] - starts) <= 1e-9)
    idx = np.where(use_back, back, idx)
    if np.any(~(left_ok | use_back)):
        bad = starts[~(left_ok | use_back)][0]
        raise StepOffGrid(f"step start {bad} matches no trajectory timestamp")

    records: list[StepRecord] = []
    prev_theta = None
    for k in range(starts.size - 1):
        shift = traj.p[idx[k + 1]] - traj.p[idx[k]]
        length = math.hypot(shift[0], shift[1])
        theta = math.atan2(shift[1], shift[0])
        if prev_theta is not None:
            theta += 2.0 * math.pi * round((prev_theta - theta) / (2.0 * math.pi))
        records.append(StepRecord(t=float(starts[k]), length=length, theta=theta,
                                  shift=np.asarray(shift, dtype=float)))
        prev_theta = theta
    return records


def first_moving_foot(left_gate: np.ndarray, right_gate: np.ndarray) -> str:
    """Which foot's stance gate releases first ('left' on ties)."""
    left_gate = np.asarray(left_gate, dtype=bool)
    right_gate = np.asarray(right_gate, dtype=bool)
    left_idx = np.flatnonzero(~left_gate)
    right_idx = np.flatnonzero(~right_gate)
    li = left_idx[0] if left_idx.size else np.iinfo(np.int64).max
    ri = right_idx[0] if right_idx.size else np.iinfo(np.int64).max
    return "left" if li <= ri else "right"


def _landing_events(stationary: np.ndarray) -> np.ndarray:
    """Indices where a foot completes a step (flags rising 0 -> 1)."""
    s = np.asarray(stationary, dtype=bool)
    if s.size < 2:
        return np.zeros(0, dtype=int)
    return np.flatnonzero(~s[:-1] & s[1:]) + 1


def fuse_corrections(left, right, cfg: FusionConfig | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Planar corrections bounding inter-foot separation, one per foot.

    Runs a joint linear smoother over the per-foot correction fields: the
    corrections follow a slow random walk (frozen while the respective foot
    is planted), are pinned to zero at both ends of the walk, and receive a
    pull toward ``max_separation`` whenever, at a completed step of either
    foot, the corrected feet are further apart than allowed.  With no
    violations the corrections are identically zero and fusion is a no-op.

    Both trajectories must share the common time grid.  Returns ``(n, 2)``
    corrections for the left and right foot.
    """
    cfg = cfg or FusionConfig()
    t = np.asarray(left.t, dtype=float)
    if len(right.t) != t.size or np.any(np.abs(right.t - t) > 1e-9):
        raise LengthMismatch("fusion expects both feet on the common time grid")
    n = t.size
    pl = left.p[:, 0:2]
    pr = right.p[:, 0:2]

    events = np.zeros(n, dtype=bool)
    events[_landing_events(left.stationary)] = True
    events[_landing_events(right.stationary)] = True

    sep = np.linalg.norm(pl - pr, axis=1)
    if not np.any(events & (sep > cfg.max_separation)):
        return np.zeros((n, 2)), np.zeros((n, 2))

    # 4-state joint random walk [dxL, dyL, dxR, dyR] with RTS smoothing
    still_l = np.asarray(left.stationary, dtype=bool)
    still_r = np.asarray(right.stationary, dtype=bool)
    x = np.zeros(4)
    p = np.eye(4) * cfg.anchor_sigma**2
    xs = np.zeros((n, 4))
    ps = np.zeros((n, 4, 4))
    ps_pred = np.zeros((n, 4, 4))
    xs[0], ps[0], ps_pred[0] = x, p, p
    r_anchor = cfg.anchor_sigma**2
    r_sep = cfg.separation_sigma**2
    anchor_zone = np.zeros(n, dtype=bool)
    walk = np.flatnonzero(~(still_l & still_r))
    if walk.size:
        anchor_zone[:walk[0]] = True
        anchor_zone[walk[-1] + 1:] = True
    else:
        anchor_zone[:] = True

    for i in range(1, n):
        dt = t[i] - t[i - 1]
        q = cfg.drift_rate**2 * dt
        p = p.copy()
        if not still_l[i]:
            p[0, 0] += q
            p[1, 1] += q
        if not still_r[i]:
            p[2, 2] += q
            p[3, 3] += q
        ps_pred[i] = p
        if anchor_zone[i]:
            # pin corrections to zero while both feet rest at the loop ends
            s = p + r_anchor * np.eye(4)
            k = np.linalg.solve(s, p).T
            x = x - k @ x
            p = (np.eye(4) - k) @ p
        elif events[i]:
            d = (pl[i] + x[0:2]) - (pr[i] + x[2:4])
            dist = np.linalg.norm(d)
            if dist > cfg.max_separation and dist > 0:
                u = d / dist
                h = np.concatenate([u, -u])  # d(dist)/dx
                innov = dist - cfg.max_separation
                s = float(h @ p @ h) + r_sep
                k = (p @ h) / s
                x = x - k * innov
                p = p - np.outer(k, h @ p)
        p = 0.5 * (p + p.T)
        xs[i], ps[i] = x, p

    # backward pass
    xs_s = xs.copy()
    for i in range(n - 2, -1, -1):
        a = ps[i] @ np.linalg.solve(ps_pred[i + 1], np.eye(4))
        xs_s[i] = xs[i] + a @ (xs_s[i + 1] - xs[i])
    return xs_s[:, 0:2], xs_s[:, 2:4]


def fuse_feet(left, right, phi: float, max_separation: float = 1.0,
              cfg: FusionConfig | None = None) -> tuple[PlanarPath, PlanarPath]:
    """Fused planar paths of both feet on the common time grid.

    ``phi`` is the heading-alignment angle from :func:`align_headings`,
    applied to the right foot before the separation-bounding corrections
    are estimated and folded in.
    """
    cfg = replace(cfg or FusionConfig(), max_separation=max_separation)
    rotated = rotate_right_foot(right, phi)
    dl, dr = fuse_corrections(left, rotated, cfg)
    fused_left = PlanarPath(t=left.t.copy(), xy=left.p[:, 0:2] + dl,
                            stationary=left.stationary.copy())
    fused_right = PlanarPath(t=rotated.t.copy(), xy=rotated.p[:, 0:2] + dr,
                             stationary=rotated.stationary.copy())
    return fused_left, fused_right


def rotate_right_foot(traj, phi: float):
    """Foot trajectory rotated about the vertical through its start point."""
    from .estimator import FootTrajectory

    c, s = math.cos(phi), math.sin(phi)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    start = traj.p[0].copy()
    p = (traj.p - start) @ rot.T + start
    v = traj.v @ rot.T
    c_rot = np.einsum("nij,kj->nik", traj.C, rot)  # C @ rot.T: world axes rotate
    return FootTrajectory(t=traj.t.copy(), p=p, v=v, C=c_rot,
                          stationary=traj.stationary.copy(),
                          gate=None if traj.gate is None else traj.gate.copy(),
                          trace_p=None if traj.trace_p is None else traj.trace_p.copy())
