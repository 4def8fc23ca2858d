"""Batch command-line front end.

Subcommands
-----------
reconstruct   ingest an experiment, rebuild both feet, write reference files
synth         generate a synthetic fixture experiment from gait parameters
compare-steps smartphone step durations against the reference (per device)
sync          report the time-synchronization shift of every device
validate      re-check written reference outputs against the quality gate

Exit codes: 0 success/pass, 2 quality-gate failure, 1 any error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import dataset_io, plots
from .config import RunConfig, dump_config, load_config
from .errors import FootnavError, MissingReference, MissingSyncKey, TooShort
from .estimator import FootTrajectory, dump_diagnostics
from .fusion import PlanarPath, StepRecord
from .pipeline import ReferenceBundle, reconstruct_walk
from .verification import (QualityReport, quality_gate, reference_step_periods,
                           smartphone_step_periods)

log = logging.getLogger("footnav")


def _write_quality(report: QualityReport, out_dir: Path) -> None:
    with open(out_dir / "quality_report.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.CSV_HEADER + "\n")
        fh.write(report.csv_row() + "\n")


def _reconstruct_one(experiment: str, cfg: RunConfig, out: str | None,
                     plot: bool, diagnostics: bool) -> int:
    bundle_exp = dataset_io.parse_experiment(experiment)
    ref_path = bundle_exp.reference_path
    left_imu, right_imu = dataset_io.reference_imu_ingest(ref_path)
    result = reconstruct_walk(left_imu, right_imu, det_cfg=cfg.detector,
                              noise=cfg.noise(), fusion_cfg=cfg.fusion, g0=cfg.g0)
    out_dir = Path(out) if out else ref_path
    paths = dataset_io.write_reference(result, out_dir)
    report = quality_gate(result, cfg.gate)
    _write_quality(report, out_dir)
    dump_config(cfg, out_dir / "run_config.txt")
    if diagnostics:
        dump_diagnostics(result.left, out_dir / "diagnostics_left.csv")
        dump_diagnostics(result.right, out_dir / "diagnostics_right.csv")
    if plot:
        plots.save_trajectory_figure(result, out_dir / "trajectory_overview.png")
        if diagnostics:
            plots.save_diagnostics_figure(result.left, out_dir / "diagnostics_left.png")
    print(f"{bundle_exp.key}: {report.summary()}")
    print(f"  wrote {paths['trajectory']}")
    return 0 if report.passed else 2


def cmd_reconstruct(args) -> int:
    cfg = load_config(args.config)
    root = Path(args.experiment)
    if dataset_io.is_experiment_folder(root):
        keys = [None]
    else:
        groups = dataset_io.discover_experiments(root)
        keys = sorted(groups) if len(groups) > 1 else [None]
    if len(keys) == 1:
        return _reconstruct_one(args.experiment, cfg, args.out, not args.no_plot,
                                args.diagnostics)
    # batch mode over every experiment under the root
    codes = []
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(_batch_worker, str(root), key, args.config,
                                   not args.no_plot, args.diagnostics)
                       for key in keys]
            codes = [f.result() for f in futures]
    else:
        for key in keys:
            codes.append(_batch_worker(str(root), key, args.config,
                                       not args.no_plot, args.diagnostics))
    return max(codes)


def _batch_worker(root: str, key: str, config_path: str | None,
                  plot: bool, diagnostics: bool) -> int:
    cfg = load_config(config_path)
    bundle_exp = dataset_io.parse_experiment(root, key=key)
    try:
        return _reconstruct_one(str(bundle_exp.reference_path), cfg, None, plot, diagnostics)
    except FootnavError as exc:
        print(f"{key}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def cmd_synth(args) -> int:
    from .fixtures import make_fixture

    cfg = load_config(args.config)
    root = make_fixture(cfg.gait, args.out, seed=cfg.seed,
                        phone_rate=cfg.phone_rate,
                        phone_amplitude=cfg.phone_amplitude,
                        phone_noise=cfg.phone_noise)
    dump_config(cfg, Path(root) / "run_config.txt")
    print(f"wrote synthetic experiment under {root}")
    return 0


def _reference_step_starts(bundle_exp, cfg: RunConfig):
    """Step starts of both feet, from written outputs or by reconstructing."""
    ref_path = bundle_exp.reference_path
    left_csv = ref_path / "Left_steps.csv"
    right_csv = ref_path / "Right_steps.csv"
    if left_csv.exists() and right_csv.exists():
        tables = dataset_io.read_reference(ref_path)
        return tables.left_steps[:, 0], tables.right_steps[:, 0]
    left_imu, right_imu = dataset_io.reference_imu_ingest(ref_path)
    result = reconstruct_walk(left_imu, right_imu, det_cfg=cfg.detector,
                              noise=cfg.noise(), fusion_cfg=cfg.fusion, g0=cfg.g0)
    return result.left_step_starts, result.right_step_starts


def cmd_compare_steps(args) -> int:
    cfg = load_config(args.config)
    bundle_exp = dataset_io.parse_experiment(args.experiment)
    starts_l, starts_r = _reference_step_starts(bundle_exp, cfg)
    union = np.sort(np.concatenate([starts_l, starts_r]))
    ref_durations = reference_step_periods(starts_l, starts_r)
    ref_events = union[1:]
    out_dir = Path(args.out) if args.out else Path(args.experiment)
    out_dir.mkdir(parents=True, exist_ok=True)

    per_device = {}
    for device_id, device in sorted(bundle_exp.devices.items()):
        table = device.core.accelerometer
        if table is None or len(table) == 0:
            continue
        if device.shift_ms is None:
            raise MissingSyncKey(f"device {device_id} lacks its synchronization key")
        t_sync = table.t_ms - device.shift_ms
        try:
            events, durations = smartphone_step_periods(t_sync, table.values)
        except TooShort as exc:
            log.warning("device %s: %s", device_id, exc)
            continue
        per_device[device_id] = (events, durations)
        path = out_dir / f"step_durations_{device_id}.csv"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("t[s],smartphone_duration[s],reference_duration[s]\n")
            for i in range(durations.size):
                t_evt = events[i + 1]
                nearest = ref_durations[np.argmin(np.abs(ref_events - t_evt))] \
                    if ref_durations.size else float("nan")
                fh.write(f"{t_evt:.6f},{durations[i]:.6f},{nearest:.6f}\n")
        print(f"device {device_id}: {durations.size} steps, "
              f"mean duration {durations.mean():.3f} s "
              f"(reference {ref_durations.mean():.3f} s)")

    if not per_device:
        path = out_dir / "step_durations_reference.csv"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("t[s],smartphone_duration[s],reference_duration[s]\n")
            for i in range(ref_durations.size):
                fh.write(f"{ref_events[i]:.6f},,{ref_durations[i]:.6f}\n")
        print(f"no smartphone data; wrote reference durations to {path}")
    if not args.no_plot:
        plots.save_step_duration_figure(per_device, (union, ref_durations),
                                        out_dir / "step_durations.png")
    return 0


def cmd_sync(args) -> int:
    bundle_exp = dataset_io.parse_experiment(args.experiment)
    if not bundle_exp.devices:
        raise MissingReference(f"experiment {bundle_exp.key} has no smartphone folders")
    masters = [d for d, dev in sorted(bundle_exp.devices.items()) if dev.is_master]
    if len(masters) > 1:
        # a slave without its receive key is indistinguishable from a master
        raise MissingSyncKey(
            f"devices {', '.join(masters)} all lack {dataset_io.SLAVE_KEY}; "
            "an experiment has one master, so some slave is missing its key")
    for device_id, device in sorted(bundle_exp.devices.items()):
        role = "master" if device.is_master else "slave"
        if device.shift_ms is None:
            key = dataset_io.MASTER_KEY if device.is_master else dataset_io.SLAVE_KEY
            raise MissingSyncKey(f"device {device_id} ({role}) lacks {key}")
        print(f"device {device_id}: role={role} shift_ms={device.shift_ms:.3f}")
    return 0


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    bundle_exp = dataset_io.parse_experiment(args.experiment)
    ref_path = bundle_exp.reference_path
    tables = dataset_io.read_reference(ref_path)
    bundle = _bundle_from_tables(tables)
    report = quality_gate(bundle, cfg.gate)
    _write_quality(report, ref_path)
    print(f"{bundle_exp.key}: {report.summary()}")
    return 0 if report.passed else 2


def _bundle_from_tables(tables: dataset_io.ReferenceTables) -> ReferenceBundle:
    """Rebuild just enough of a bundle from written outputs to re-gate them."""
    n = tables.t.size

    def foot(x, y, flags):
        p = np.column_stack([x, y, np.zeros(n)])
        return FootTrajectory(t=tables.t.copy(), p=p, v=np.zeros((n, 3)),
                              C=np.broadcast_to(np.eye(3), (n, 3, 3)).copy(),
                              stationary=flags.copy())

    def steps(rows):
        return [StepRecord(t=float(r[0]), length=float(r[1]), theta=float(r[2]),
                           shift=np.array([r[1] * np.cos(r[2]), r[1] * np.sin(r[2]), 0.0]))
                for r in rows]

    left = foot(tables.x_left, tables.y_left, tables.left_stationary)
    right = foot(tables.x_right, tables.y_right, tables.right_stationary)
    return ReferenceBundle(
        left=left, right=right,
        fused_left=PlanarPath(t=tables.t.copy(),
                              xy=np.column_stack([tables.x_left, tables.y_left]),
                              stationary=tables.left_stationary.copy()),
        fused_right=PlanarPath(t=tables.t.copy(),
                               xy=np.column_stack([tables.x_right, tables.y_right]),
                               stationary=tables.right_stationary.copy()),
        cog=PlanarPath(t=tables.t.copy(),
                       xy=np.column_stack([tables.x_avg, tables.y_avg])),
        left_steps=steps(tables.left_steps), right_steps=steps(tables.right_steps),
        left_step_starts=tables.left_steps[:, 0], right_step_starts=tables.right_steps[:, 0],
        heading_offset=0.0, first_mover="left",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="footnav",
        description="Foot-mounted IMU trajectory reconstruction toolkit")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reconstruct", help="rebuild reference trajectories for an experiment")
    p.add_argument("experiment", help="experiment folder or root of experiment folders")
    p.add_argument("--config", help="flat key-value config file")
    p.add_argument("--out", help="output directory (default: the reference folder)")
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    p.add_argument("--diagnostics", action="store_true",
                   help="dump per-sample covariance traces")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("synth", help="write a synthetic fixture experiment")
    p.add_argument("out", help="directory to create the experiment under")
    p.add_argument("--config", help="flat key-value config file (gait.* keys)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("compare-steps", help="smartphone vs reference step durations")
    p.add_argument("experiment")
    p.add_argument("--config")
    p.add_argument("--out", help="output directory (default: the experiment root)")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_compare_steps)

    p = sub.add_parser("sync", help="report per-device synchronization shifts")
    p.add_argument("experiment")
    p.set_defaults(func=cmd_sync)

    p = sub.add_parser("validate", help="re-run the quality gate on written outputs")
    p.add_argument("experiment")
    p.add_argument("--config")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FootnavError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
