"""Readers and writers for the experiment folder layout.

An experiment is a set of sibling folders named
``YYYY-MM-DD_HH-MM-SS.ms_<identifier>`` sharing their date and start time;
the identifier is the literal word ``reference`` for the foot-IMU folder
and the device number for each smartphone.  Smartphone folders carry the
raw sensor CSVs of Table I plus a ``meta.txt`` dictionary; the reference
folder carries the per-foot raw IMU logs and receives the reconstructed
``Trajectory.csv``/``*_steps.csv`` outputs.  See FORMATS.md for byte-level
examples of every file.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (ColumnCountMismatch, IoFailure, MalformedFolderName,
                     MissingReference, MissingSyncKey, NonMonotonicTimestamps)
from .mechanization import ImuSeries

log = logging.getLogger(__name__)

REFERENCE_ID = "reference"

# Table I: filename stem -> (number of value columns, number of extra columns)
SENSOR_KINDS = {
    "accelerometer": (3, 0),
    "gyroscope": (3, 0),
    "gyroscope_uncalibrated": (3, 3),   # extras: estimated drift per axis
    "magnetic_field": (3, 0),
    "magnetic_field_uncalibrated": (3, 3),  # extras: iron bias per axis
}

MASTER_KEY = "MasterSendStartRealtime"
SLAVE_KEY = "SlaveReceiveStartRealtime"

TRAJECTORY_HEADER = ("t[s],x_left[m],y_left[m],left_stationary,"
                     "x_right[m],y_right[m],right_stationary,x_avg[m],y_avg[m]")
STEPS_HEADER = "t[s],length[m],theta[rad]"
RAW_IMU_HEADER = "t[s],fx[m/s2],fy[m/s2],fu[m/s2],wx[rad/s],wy[rad/s],wu[rad/s]"

RAW_IMU_FILES = {"left": "imu_left.csv", "right": "imu_right.csv"}

_FOLDER_RE = re.compile(
    r"^(\d{4}-\d{2}-\d{2})_(\d{2}-\d{2}-\d{2}\.\d{1,6})_(.+)$")


@dataclass(frozen=True)
class ExperimentFolder:
    """One dataset folder, decomposed from its name."""

    date: str
    start_time: str
    identifier: str
    path: Path

    @property
    def experiment_key(self) -> str:
        return f"{self.date}_{self.start_time}"

    @property
    def is_reference(self) -> bool:
        return self.identifier == REFERENCE_ID


def parse_folder_name(path) -> ExperimentFolder:
    """Split a folder name into date, start time and identifier."""
    path = Path(path)
    m = _FOLDER_RE.match(path.name)
    if not m:
        raise MalformedFolderName(
            f"{path.name!r} is not date_time_identifier (e.g. "
            "2018-08-27_18-20-06.730_358351080456283)")
    return ExperimentFolder(date=m.group(1), start_time=m.group(2),
                            identifier=m.group(3), path=path)


def is_experiment_folder(path) -> bool:
    """True when the path's name follows the experiment-folder convention."""
    return _FOLDER_RE.match(Path(path).name) is not None


# --- meta.txt ---------------------------------------------------------------

def parse_meta(path) -> dict[str, str]:
    """Read a ``key: value`` dictionary file, preserving unknown keys."""
    out: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition(":")
        if not sep:
            continue
        out[key.strip()] = value.strip()
    return out


def write_meta(path, meta: dict[str, str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in meta.items():
            fh.write(f"{key}: {value}\n")


# --- sensor CSVs (Table I) ----------------------------------------------------

@dataclass
class SensorTable:
    """One parsed sensor CSV: millisecond timestamps plus value columns."""

    kind: str
    t_ms: np.ndarray            # (n,)
    values: np.ndarray          # (n, 3)
    extras: np.ndarray | None   # (n, 3) drift/bias estimates, where present

    def __len__(self) -> int:
        return int(self.t_ms.size)


def parse_sensor_csv(path, kind: str) -> SensorTable:
    """Parse one Table-I CSV; column counts are enforced per sensor kind."""
    if kind not in SENSOR_KINDS:
        raise ValueError(f"unknown sensor kind {kind!r}")
    n_values, n_extras = SENSOR_KINDS[kind]
    expected = 1 + n_values + n_extras
    rows = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != expected:
            raise ColumnCountMismatch(
                f"{Path(path).name}:{lineno}: {kind} rows need {expected} columns, got {len(parts)}")
        try:
            rows.append([float(x) for x in parts])
        except ValueError as exc:
            raise ColumnCountMismatch(f"{Path(path).name}:{lineno}: {exc}") from None
    if not rows:
        return SensorTable(kind=kind, t_ms=np.zeros(0),
                           values=np.zeros((0, 3)),
                           extras=np.zeros((0, 3)) if n_extras else None)
    data = np.asarray(rows, dtype=float)
    t_ms = data[:, 0]
    if t_ms.size > 1 and np.any(np.diff(t_ms) <= 0):
        raise NonMonotonicTimestamps(f"{Path(path).name}: timestamps must strictly increase")
    extras = data[:, 1 + n_values:] if n_extras else None
    return SensorTable(kind=kind, t_ms=t_ms, values=data[:, 1:1 + n_values], extras=extras)


def write_sensor_csv(path, table: SensorTable) -> None:
    cols = [table.t_ms[:, None], table.values]
    if table.extras is not None:
        cols.append(table.extras)
    data = np.hstack(cols)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in data:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


@dataclass
class CoreDataSet:
    """All sensor tables of one smartphone folder, keyed by Table-I kind."""

    tables: dict[str, SensorTable] = field(default_factory=dict)
    meta: dict[str, str] = field(default_factory=dict)

    @property
    def accelerometer(self) -> SensorTable | None:
        return self.tables.get("accelerometer")

    @property
    def gyroscope(self) -> SensorTable | None:
        return self.tables.get("gyroscope")


def parse_device_folder(path) -> CoreDataSet:
    """Parse the core data of one smartphone folder."""
    path = Path(path)
    core = CoreDataSet()
    meta_path = path / "meta.txt"
    if meta_path.exists():
        core.meta = parse_meta(meta_path)
    for file in sorted(path.glob("*.csv")):
        stem = file.stem
        m = re.match(r"^([a-z_]+?)_(\d+)$", stem)
        if not m or m.group(1) not in SENSOR_KINDS:
            continue
        kind = m.group(1)
        if kind in core.tables:
            log.warning("duplicate %s table in %s; keeping the first", kind, path.name)
            continue
        core.tables[kind] = parse_sensor_csv(file, kind)
    return core


# --- synchronization (meta-key rule) -----------------------------------------

def sync_shift_ms(meta: dict[str, str], is_master: bool) -> float:
    """Shift to subtract from a device's timestamps to reach the common grid."""
    key = MASTER_KEY if is_master else SLAVE_KEY
    if key not in meta:
        raise MissingSyncKey(f"meta.txt lacks {key}")
    try:
        return float(meta[key])
    except ValueError:
        raise MissingSyncKey(f"meta.txt key {key} is not numeric: {meta[key]!r}") from None


def synchronize(master_meta: dict[str, str], slave_meta: dict[str, str] | None,
                timestamps_ms: np.ndarray) -> np.ndarray:
    """Move one device's timestamps onto the experiment's common grid.

    The master subtracts its send time; a slave subtracts its receive time.
    Only a constant shift is applied, so sample spacing is preserved; the
    residual skew between devices is typically under a millisecond and is
    not corrected.
    """
    timestamps_ms = np.asarray(timestamps_ms, dtype=float)
    if slave_meta is None:
        return timestamps_ms - sync_shift_ms(master_meta, is_master=True)
    return timestamps_ms - sync_shift_ms(slave_meta, is_master=False)


# --- raw reference IMU logs ---------------------------------------------------

def _read_raw_imu(path) -> ImuSeries:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or text[0].strip() != RAW_IMU_HEADER:
        raise ColumnCountMismatch(f"{Path(path).name}: expected header {RAW_IMU_HEADER!r}")
    rows = []
    for lineno, line in enumerate(text[1:], 2):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise ColumnCountMismatch(f"{Path(path).name}:{lineno}: need 7 columns, got {len(parts)}")
        rows.append([float(x) for x in parts])
    if not rows:
        return ImuSeries(t=np.zeros(0), f=np.zeros((0, 3)), w=np.zeros((0, 3)))
    data = np.asarray(rows, dtype=float)
    if data.shape[0] > 1 and np.any(np.diff(data[:, 0]) <= 0):
        raise NonMonotonicTimestamps(f"{Path(path).name}: timestamps must strictly increase")
    return ImuSeries(t=data[:, 0], f=data[:, 1:4], w=data[:, 4:7])


def reference_imu_ingest(reference_folder) -> tuple[ImuSeries, ImuSeries]:
    """Load the two per-foot raw IMU logs from a reference folder."""
    folder = Path(reference_folder)
    series = []
    for foot in ("left", "right"):
        path = folder / RAW_IMU_FILES[foot]
        if not path.exists():
            raise MissingReference(f"{path} is missing")
        one = _read_raw_imu(path)
        if len(one) > 1:
            rate = 1.0 / float(np.median(np.diff(one.t)))
            if not 100.0 <= rate <= 150.0:
                log.warning("%s samples at %.1f Hz; reference IMUs are nominally 125 Hz",
                            path.name, rate)
        series.append(one)
    return series[0], series[1]


def write_reference_imu(reference_folder, left: ImuSeries, right: ImuSeries) -> None:
    """Write the per-foot raw IMU logs (full float precision, lossless)."""
    folder = Path(reference_folder)
    for foot, series in (("left", left), ("right", right)):
        with open(folder / RAW_IMU_FILES[foot], "w", encoding="utf-8", newline="\n") as fh:
            fh.write(RAW_IMU_HEADER + "\n")
            for i in range(len(series)):
                vals = [series.t[i], *series.f[i], *series.w[i]]
                fh.write(",".join(f"{x:.17g}" for x in vals) + "\n")


# --- reference outputs (Tables II and III) -----------------------------------

def write_reference(bundle, out_dir) -> dict[str, Path]:
    """Write Trajectory.csv and the two step files for one experiment.

    Headers and column order follow the dataset layout exactly; booleans
    are 0/1 and reals carry six decimals, so a write/read round trip agrees
    to 1e-6.
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {}
        traj_path = out_dir / "Trajectory.csv"
        with open(traj_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(TRAJECTORY_HEADER + "\n")
            left, right, cog = bundle.fused_left, bundle.fused_right, bundle.cog
            s_left = left.stationary if left.stationary is not None else np.zeros(len(left), bool)
            s_right = right.stationary if right.stationary is not None else np.zeros(len(right), bool)
            for i in range(len(left)):
                fh.write(f"{left.t[i]:.6f},{left.xy[i, 0]:.6f},{left.xy[i, 1]:.6f},"
                         f"{int(s_left[i])},{right.xy[i, 0]:.6f},{right.xy[i, 1]:.6f},"
                         f"{int(s_right[i])},{cog.xy[i, 0]:.6f},{cog.xy[i, 1]:.6f}\n")
        paths["trajectory"] = traj_path
        for name, steps in (("Left_steps.csv", bundle.left_steps),
                            ("Right_steps.csv", bundle.right_steps)):
            path = out_dir / name
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(STEPS_HEADER + "\n")
                for rec in steps:
                    fh.write(f"{rec.t:.6f},{rec.length:.6f},{rec.theta:.6f}\n")
            paths[name.split("_")[0].lower() + "_steps"] = path
        return paths
    except OSError as exc:
        raise IoFailure(f"cannot write reference outputs to {out_dir}: {exc}") from exc


@dataclass
class ReferenceTables:
    """Parsed reference outputs, column for column."""

    t: np.ndarray
    x_left: np.ndarray
    y_left: np.ndarray
    left_stationary: np.ndarray
    x_right: np.ndarray
    y_right: np.ndarray
    right_stationary: np.ndarray
    x_avg: np.ndarray
    y_avg: np.ndarray
    left_steps: np.ndarray   # (k, 3): t, length, theta
    right_steps: np.ndarray


def _read_table(path, header: str, n_cols: int) -> np.ndarray:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != header:
        raise ColumnCountMismatch(f"{Path(path).name}: expected header {header!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], 2):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != n_cols:
            raise ColumnCountMismatch(
                f"{Path(path).name}:{lineno}: need {n_cols} columns, got {len(parts)}")
        rows.append([float(x) for x in parts])
    return np.asarray(rows, dtype=float) if rows else np.zeros((0, n_cols))


def read_reference(out_dir) -> ReferenceTables:
    """Read back the three reference output files."""
    out_dir = Path(out_dir)
    traj = _read_table(out_dir / "Trajectory.csv", TRAJECTORY_HEADER, 9)
    left = _read_table(out_dir / "Left_steps.csv", STEPS_HEADER, 3)
    right = _read_table(out_dir / "Right_steps.csv", STEPS_HEADER, 3)
    return ReferenceTables(
        t=traj[:, 0], x_left=traj[:, 1], y_left=traj[:, 2],
        left_stationary=traj[:, 3].astype(bool),
        x_right=traj[:, 4], y_right=traj[:, 5],
        right_stationary=traj[:, 6].astype(bool),
        x_avg=traj[:, 7], y_avg=traj[:, 8],
        left_steps=left, right_steps=right,
    )


# --- experiment discovery ------------------------------------------------------

@dataclass
class DeviceData:
    """One smartphone folder: parsed core data plus its sync shift."""

    folder: ExperimentFolder
    core: CoreDataSet
    is_master: bool
    shift_ms: float | None  # None when the sync key is absent


@dataclass
class ExperimentBundle:
    """One experiment: reference folder plus its smartphone folders."""

    key: str
    date: str
    start_time: str
    devices: dict[str, DeviceData]
    reference: ExperimentFolder | None

    @property
    def reference_path(self) -> Path:
        if self.reference is None:
            raise MissingReference(f"experiment {self.key} has no reference folder")
        return self.reference.path


def discover_experiments(root) -> dict[str, list[ExperimentFolder]]:
    """Group the experiment folders under ``root`` by date and start time.

    Every folder lands in exactly one experiment; folders with malformed
    names are skipped with a warning so a stray file cannot break a batch.
    """
    root = Path(root)
    groups: dict[str, list[ExperimentFolder]] = {}
    for child in sorted(root.iterdir()):
        if not child.is_dir():
            continue
        try:
            folder = parse_folder_name(child)
        except MalformedFolderName as exc:
            log.warning("skipping %s: %s", child.name, exc)
            continue
        groups.setdefault(folder.experiment_key, []).append(folder)
    return groups


def parse_experiment(root, key: str | None = None) -> ExperimentBundle:
    """Parse one experiment from a root of sibling folders.

    ``root`` may also point directly at a single experiment folder, in
    which case its parent is scanned for the siblings.  A missing reference
    folder is only a warning; core-only processing stays legal.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"{root} is not a directory")
    direct = _FOLDER_RE.match(root.name)
    if direct:
        key = parse_folder_name(root).experiment_key
        root = root.parent
    groups = discover_experiments(root)
    if not groups:
        raise MalformedFolderName(f"no experiment folders under {root}")
    if key is None:
        if len(groups) > 1:
            raise ValueError(
                f"{root} holds {len(groups)} experiments; pick one of {sorted(groups)}")
        key = next(iter(groups))
    if key not in groups:
        raise KeyError(f"experiment {key!r} not found under {root}")

    folders = groups[key]
    reference = None
    devices: dict[str, DeviceData] = {}
    for folder in folders:
        if folder.is_reference:
            reference = folder
            continue
        core = parse_device_folder(folder.path)
        is_master = SLAVE_KEY not in core.meta
        try:
            shift = sync_shift_ms(core.meta, is_master)
        except MissingSyncKey:
            shift = None
        devices[folder.identifier] = DeviceData(folder=folder, core=core,
                                                is_master=is_master, shift_ms=shift)
    if reference is None:
        log.warning("experiment %s has no reference folder; core-only processing", key)
    date, start_time = key.split("_", 1)
    return ExperimentBundle(key=key, date=date, start_time=start_time,
                            devices=devices, reference=reference)
