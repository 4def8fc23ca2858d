"""End-to-end reconstruction of one experiment from two foot IMU series."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry
from .detectors import DetectorConfig, detect_steps
from .errors import LengthMismatch
from .estimator import FootTrajectory, NoiseConfig, reconstruct_foot
from .fusion import (FusionConfig, PlanarPath, StepRecord, align_headings,
                     center_of_gravity, first_moving_foot, fuse_corrections,
                     interpolate_to_grid, rotate_right_foot, step_records)


@dataclass
class ReferenceBundle:
    """Everything the reference outputs are written from.

    ``left``/``right`` are the corrected foot trajectories in the common
    frame (the right foot rotated by ``heading_offset`` and both feet with
    fusion corrections applied), so the step records telescope exactly with
    the published positions.
    """

    left: FootTrajectory
    right: FootTrajectory
    fused_left: PlanarPath
    fused_right: PlanarPath
    cog: PlanarPath
    left_steps: list[StepRecord]
    right_steps: list[StepRecord]
    left_step_starts: np.ndarray
    right_step_starts: np.ndarray
    heading_offset: float
    first_mover: str


def common_time_grid(left: FootTrajectory, right: FootTrajectory) -> np.ndarray:
    """Shared time grid of the two feet.

    Reference IMUs sample simultaneously, so identical grids pass through
    unchanged; otherwise the left grid restricted to the common span is
    used and both feet are interpolated onto it.
    """
    if len(left) == len(right) and np.all(np.abs(left.t - right.t) <= 1e-9):
        return left.t.copy()
    lo = max(left.t[0], right.t[0])
    hi = min(left.t[-1], right.t[-1])
    if hi <= lo:
        raise LengthMismatch("foot trajectories do not overlap in time")
    keep = (left.t >= lo) & (left.t <= hi)
    return left.t[keep].copy()


def reconstruct_walk(left_imu, right_imu, det_cfg: DetectorConfig | None = None,
                     noise: NoiseConfig | None = None,
                     fusion_cfg: FusionConfig | None = None,
                     g0: float = geometry.DEFAULT_GRAVITY) -> ReferenceBundle:
    """Reconstruct both feet, align their headings, fuse, and segment steps."""
    det_cfg = det_cfg or DetectorConfig()
    fusion_cfg = fusion_cfg or FusionConfig()

    left = reconstruct_foot(left_imu, det_cfg, noise, g0=g0)
    right = reconstruct_foot(right_imu, det_cfg, noise, g0=g0)

    phi = align_headings(left.planar(), right.planar(),
                         resolution=fusion_cfg.heading_resolution, cfg=fusion_cfg)
    right_aligned = rotate_right_foot(right, phi)

    corr_left, corr_right = fuse_corrections(left, right_aligned, fusion_cfg)
    left_fused = FootTrajectory(t=left.t, p=left.p + np.column_stack([corr_left, np.zeros(len(left))]),
                                v=left.v, C=left.C, stationary=left.stationary,
                                gate=left.gate, trace_p=left.trace_p)
    right_fused = FootTrajectory(t=right_aligned.t,
                                 p=right_aligned.p + np.column_stack([corr_right, np.zeros(len(right_aligned))]),
                                 v=right_aligned.v, C=right_aligned.C,
                                 stationary=right_aligned.stationary,
                                 gate=right_aligned.gate, trace_p=right_aligned.trace_p)

    grid = common_time_grid(left_fused, right_fused)
    path_left = interpolate_to_grid(left_fused, grid)
    path_right = interpolate_to_grid(right_fused, grid)
    cog = center_of_gravity(path_left, path_right)

    starts_left = detect_steps(left_fused.stationary, left_fused.t, det_cfg.min_flight_time)
    starts_right = detect_steps(right_fused.stationary, right_fused.t, det_cfg.min_flight_time)

    return ReferenceBundle(
        left=left_fused,
        right=right_fused,
        fused_left=path_left,
        fused_right=path_right,
        cog=cog,
        left_steps=step_records(left_fused, starts_left),
        right_steps=step_records(right_fused, starts_right),
        left_step_starts=starts_left,
        right_step_starts=starts_right,
        heading_offset=phi,
        first_mover=first_moving_foot(left.gate, right.gate),
    )
