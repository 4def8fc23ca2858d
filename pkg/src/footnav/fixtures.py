"""Synthetic experiment folders: the oracle dumped in the dataset layout.

A generated experiment looks exactly like a collected one (reference folder
with raw per-foot IMU logs, smartphone folders with Table-I CSVs and sync
keys in meta.txt) plus ``truth_*.csv`` files that collected data cannot
have.  Everything is deterministic in the gait parameters and seed.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .dataset_io import write_meta, write_reference_imu
from .verification import GaitParams, SyntheticWalk, synth_gait

DEFAULT_DATE = "2018-08-27"
DEFAULT_START = "18-20-06.730"
MASTER_EPOCH_MS = 1_000_000.0
SLAVE_EPOCH_MS = 2_000_000.0

TRUTH_HEADER = "t[s],x[m],y[m],z[m],vx[m/s],vy[m/s],vz[m/s],stationary"


def synth_phone_trace(params: GaitParams, rate: float = 100.0, amplitude: float = 1.5,
                      noise_sigma: float = 0.05, seed: int = 0,
                      epoch_ms: float = MASTER_EPOCH_MS) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Body-mounted accelerometer/gyro trace with one bounce per step.

    Returns ``(t_ms, acc, gyro)`` with raw (unsynchronized) millisecond
    timestamps starting at ``epoch_ms``; subtracting the epoch aligns the
    trace with the reference time grid.
    """
    n = int(round(params.duration * rate))
    t = np.arange(n) / rate
    rng = np.random.default_rng(seed)
    walk_start = params.standstill
    walk_stop = params.duration - params.standstill
    walking = (t >= walk_start) & (t < walk_stop)
    tau = t - walk_start
    bounce = np.where(walking, amplitude * np.sin(2.0 * np.pi * params.cadence * tau), 0.0)
    sway = np.where(walking, 0.3 * amplitude
                    * np.sin(np.pi * params.cadence * tau), 0.0)
    acc = np.column_stack([sway, np.zeros(n), params.g0 + bounce])
    gyro = np.column_stack([np.zeros(n), np.zeros(n),
                            np.where(walking, 0.1 * np.sin(np.pi * params.cadence * tau), 0.0)])
    if noise_sigma > 0:
        acc = acc + rng.normal(0.0, noise_sigma, size=acc.shape)
        gyro = gyro + rng.normal(0.0, 0.2 * noise_sigma, size=gyro.shape)
    t_ms = epoch_ms + np.round(t * 1000.0, 3)
    return t_ms, acc, gyro


def _write_phone_csv(path, t_ms: np.ndarray, values: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i in range(t_ms.size):
            row = [t_ms[i], *values[i]]
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def _write_truth(path, truth) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(TRUTH_HEADER + "\n")
        for i in range(len(truth)):
            vals = [truth.t[i], *truth.p[i], *truth.v[i]]
            fh.write(",".join(f"{x:.17g}" for x in vals)
                     + f",{int(truth.stationary[i])}\n")


def write_synthetic_experiment(walk: SyntheticWalk, out_root,
                               date: str = DEFAULT_DATE, start: str = DEFAULT_START,
                               phone_rate: float = 100.0, phone_amplitude: float = 1.5,
                               phone_noise: float = 0.05, seed: int = 0) -> Path:
    """Write one synthetic experiment under ``out_root``; returns its root.

    Emits the reference folder (raw foot IMU logs, truth files, gait echo)
    plus a master and a slave smartphone folder carrying bounce traces and
    the synchronization keys.
    """
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    params = walk.params

    ref_dir = out_root / f"{date}_{start}_reference"
    ref_dir.mkdir(exist_ok=True)
    write_reference_imu(ref_dir, walk.left_imu, walk.right_imu)
    _write_truth(ref_dir / "truth_left.csv", walk.left_truth)
    _write_truth(ref_dir / "truth_right.csv", walk.right_truth)
    write_meta(ref_dir / "meta.txt", {
        "Placement": "both midfeet",
        "Note": "synthetic gait fixture",
        "Shape": params.shape,
        "Stride": f"{params.stride:.17g}",
        "Cadence": f"{params.cadence:.17g}",
        "Duration": f"{params.duration:.17g}",
        "Seed": str(seed),
    })

    for device_id, epoch, extra_keys, phone_seed in (
            ("100000000000001", MASTER_EPOCH_MS,
             {"MasterSendStartRealtime": f"{MASTER_EPOCH_MS:.17g}"}, seed + 101),
            ("100000000000002", SLAVE_EPOCH_MS,
             {"MasterSendStartRealtime": f"{MASTER_EPOCH_MS:.17g}",
              "SlaveReceiveStartRealtime": f"{SLAVE_EPOCH_MS:.17g}"}, seed + 102)):
        dev_dir = out_root / f"{date}_{start}_{device_id}"
        dev_dir.mkdir(exist_ok=True)
        t_ms, acc, gyro = synth_phone_trace(params, rate=phone_rate,
                                            amplitude=phone_amplitude,
                                            noise_sigma=phone_noise,
                                            seed=phone_seed, epoch_ms=epoch)
        _write_phone_csv(dev_dir / "accelerometer_1.csv", t_ms, acc)
        _write_phone_csv(dev_dir / "gyroscope_1.csv", t_ms, gyro)
        meta = {"Placement": "in jeans front pocket" if epoch == SLAVE_EPOCH_MS
                else "left hand, navigation position",
                "Note": "synthetic phone fixture"}
        meta.update(extra_keys)
        write_meta(dev_dir / "meta.txt", meta)

    return out_root


def make_fixture(params: GaitParams | None = None, out_root=None, seed: int = 0,
                 **phone_kw) -> Path:
    """Generate a walk and write it as an experiment folder in one call."""
    walk = synth_gait(params or GaitParams(), seed=seed)
    return write_synthetic_experiment(walk, out_root, seed=seed, **phone_kw)
