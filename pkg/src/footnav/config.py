"""Run configuration: one flat ``key: value`` file drives every command.

The file format mirrors meta.txt (``Key: value`` per line) so the whole
toolkit needs a single dictionary parser.  Unknown keys are rejected loudly
rather than silently ignored; the effective configuration is archived next
to every run's outputs so results stay reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dataset_io import parse_meta
from .detectors import DetectorConfig
from .estimator import NoiseConfig
from .fusion import FusionConfig
from .geometry import DEFAULT_GRAVITY
from .verification import GaitParams, QualityThresholds


@dataclass
class RunConfig:
    """Everything a reconstruction run depends on."""

    detector: DetectorConfig = field(default_factory=DetectorConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    gate: QualityThresholds = field(default_factory=QualityThresholds)
    gait: GaitParams = field(default_factory=GaitParams)
    g0: float = DEFAULT_GRAVITY
    seed: int = 0
    jobs: int = 1
    plot: bool = True
    # noise sigmas, expanded to NoiseConfig matrices on demand
    accel_noise: float = 0.05
    gyro_noise: float = 0.005
    zupt_sigma: float = 0.01
    anchor_sigma: float = 0.01
    p0_pos: float = 1e-3
    p0_vel: float = 1e-3
    p0_tilt: float = 5e-3
    p0_yaw: float = 1e-6
    phone_rate: float = 100.0
    phone_amplitude: float = 1.5
    phone_noise: float = 0.05

    def noise(self) -> NoiseConfig:
        return NoiseConfig.from_sigmas(
            accel_noise=self.accel_noise, gyro_noise=self.gyro_noise,
            zupt_sigma=self.zupt_sigma, anchor_sigma=self.anchor_sigma,
            p0_pos=self.p0_pos, p0_vel=self.p0_vel,
            p0_tilt=self.p0_tilt, p0_yaw=self.p0_yaw)


_BOOL = {"1": True, "true": True, "yes": True, "0": False, "false": False, "no": False}


def _coerce(value: str, like) -> object:
    if isinstance(like, bool):
        try:
            return _BOOL[value.strip().lower()]
        except KeyError:
            raise ValueError(f"expected a boolean, got {value!r}") from None
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    if isinstance(like, np.ndarray):
        parts = [float(x) for x in value.split(",")]
        return np.asarray(parts)
    return value.strip()


# config key -> (section attribute on RunConfig or None, field name)
_KEYS: dict[str, tuple[str | None, str]] = {}
for _f in ("eps", "alpha", "gamma", "half_window", "sigma_a", "sigma_w",
           "min_flight_time", "min_standstill"):
    _KEYS[f"detector.{_f}"] = ("detector", _f)
for _f in ("heading_resolution", "heading_refine", "search_rate",
           "max_separation", "separation_sigma", "anchor_sigma", "drift_rate"):
    _KEYS[f"fusion.{_f}"] = ("fusion", _f)
for _f in ("dtw_max", "closure_max", "step_count_diff_max"):
    _KEYS[f"gate.{_f}"] = ("gate", _f)
for _f in ("stride", "cadence", "stance_fraction", "shape", "duration",
           "sample_rate", "standstill", "foot_separation", "lift_height",
           "pitch_amplitude", "initial_heading", "first_foot",
           "accel_noise", "gyro_noise", "accel_bias", "gyro_bias"):
    _KEYS[f"gait.{_f}"] = ("gait", _f)
for _f in ("g0", "seed", "jobs", "plot", "accel_noise", "gyro_noise",
           "zupt_sigma", "anchor_sigma", "p0_pos", "p0_vel", "p0_tilt",
           "p0_yaw", "phone_rate", "phone_amplitude", "phone_noise"):
    _KEYS[_f] = (None, _f)


def load_config(path=None) -> RunConfig:
    """Build a :class:`RunConfig` from a flat key-value file (or defaults)."""
    cfg = RunConfig()
    if path is None:
        return cfg
    raw = parse_meta(path)
    for key, value in raw.items():
        if key not in _KEYS:
            raise KeyError(f"unknown config key {key!r}")
        section, name = _KEYS[key]
        target = cfg if section is None else getattr(cfg, section)
        current = getattr(target, name)
        try:
            setattr(target, name, _coerce(value, current))
        except ValueError as exc:
            raise ValueError(f"config key {key!r}: {exc}") from None
    # detector and gait share gravity with the run
    cfg.detector.g0 = cfg.g0
    cfg.gait.g0 = cfg.g0
    # rebuild the sections so their validation sees the overridden values
    cfg.detector = replace(cfg.detector)
    cfg.fusion = replace(cfg.fusion)
    cfg.gate = replace(cfg.gate)
    cfg.gait = replace(cfg.gait)
    return cfg


def dump_config(cfg: RunConfig, path) -> None:
    """Archive the effective configuration in the same flat format."""
    lines = []
    for key in sorted(_KEYS):
        section, name = _KEYS[key]
        target = cfg if section is None else getattr(cfg, section)
        value = getattr(target, name)
        if isinstance(value, bool):
            value = int(value)
        elif isinstance(value, np.ndarray):
            value = ",".join(f"{x:.17g}" for x in value)
        elif isinstance(value, float):
            value = f"{value:.17g}"
        lines.append(f"{key}: {value}\n")
    Path(path).write_text("".join(lines), encoding="utf-8")
