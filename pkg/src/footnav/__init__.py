"""Trajectory reconstruction for dual foot-mounted IMUs.

Strapdown mechanization, zero-velocity-aided error-state Kalman filtering
with RTS smoothing, dual-foot heading alignment and fusion, step
segmentation, dataset readers/writers, and a synthetic-gait oracle.
"""

from .detectors import (DetectorConfig, detect_steps, glrt_statistic,
                        motionless_flags, stance_gate, standstill_windows)
from .errors import FootnavError
from .estimator import (FootTrajectory, NoiseConfig, apply_smoothed_corrections,
                        build_transition, forward_filter, reconstruct_foot, rts_smooth)
from .fusion import (FusionConfig, PlanarPath, StepRecord, align_headings,
                     center_of_gravity, dtw_distance, fuse_feet,
                     interpolate_to_grid, step_records)
from .geometry import (DEFAULT_GRAVITY, gravity_vector, orthonormalize,
                       rotation_from_vector_angle, skew)
from .mechanization import (ImuSample, ImuSeries, NavState, initial_orientation,
                            integrate_series, propagate)
from .pipeline import ReferenceBundle, reconstruct_walk
from .verification import (GaitParams, QualityReport, QualityThresholds,
                           closure_error, quality_gate, reference_step_periods,
                           smartphone_step_periods, synth_gait)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_GRAVITY", "DetectorConfig", "FootTrajectory", "FootnavError",
    "FusionConfig", "GaitParams", "ImuSample", "ImuSeries", "NavState",
    "NoiseConfig", "PlanarPath", "QualityReport", "QualityThresholds",
    "ReferenceBundle", "StepRecord", "align_headings",
    "apply_smoothed_corrections", "build_transition", "center_of_gravity",
    "closure_error", "detect_steps", "dtw_distance", "forward_filter",
    "fuse_feet", "glrt_statistic", "gravity_vector", "initial_orientation",
    "integrate_series", "interpolate_to_grid", "motionless_flags",
    "orthonormalize", "propagate", "quality_gate", "reconstruct_foot",
    "reconstruct_walk", "reference_step_periods", "rotation_from_vector_angle",
    "rts_smooth", "skew", "smartphone_step_periods", "stance_gate",
    "standstill_windows", "step_records", "synth_gait",
]
