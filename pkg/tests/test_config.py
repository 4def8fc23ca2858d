import math

import numpy as np
import pytest

from footnav.config import RunConfig, dump_config, load_config


def test_defaults_without_file():
    cfg = load_config(None)
    assert cfg.detector.eps == 0.5
    assert cfg.detector.alpha == 0.25
    assert cfg.detector.min_flight_time == 0.2
    assert cfg.gate.closure_max == 0.05
    assert cfg.plot is True


def test_file_overrides(tmp_path):
    path = tmp_path / "run.txt"
    path.write_text(
        "detector.gamma: 123.5\n"
        "gait.shape: figure_eight\n"
        "gait.cadence: 2.0\n"
        "gate.dtw_max: 900\n"
        "seed: 7\n"
        "plot: no\n"
        "gyro_noise: 0.01\n")
    cfg = load_config(path)
    assert cfg.detector.gamma == 123.5
    assert cfg.gait.shape == "figure_eight"
    assert cfg.gait.cadence == 2.0
    assert cfg.gate.dtw_max == 900.0
    assert cfg.seed == 7
    assert cfg.plot is False
    assert cfg.noise().q[3, 3] == pytest.approx(1e-4)


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "run.txt"
    path.write_text("detector.turbo: 1\n")
    with pytest.raises(KeyError):
        load_config(path)


def test_vector_coercion(tmp_path):
    path = tmp_path / "run.txt"
    path.write_text("gait.gyro_bias: 0.001,0.002,0.003\n")
    cfg = load_config(path)
    np.testing.assert_allclose(cfg.gait.gyro_bias, [0.001, 0.002, 0.003])


def test_dump_load_roundtrip(tmp_path):
    cfg = RunConfig()
    cfg.detector.gamma = 77.0
    cfg.gait.shape = "line"
    cfg.gait.initial_heading = math.pi / 4
    cfg.seed = 42
    path = tmp_path / "archived.txt"
    dump_config(cfg, path)
    back = load_config(path)
    assert back.detector.gamma == 77.0
    assert back.gait.shape == "line"
    assert back.gait.initial_heading == pytest.approx(math.pi / 4)
    assert back.seed == 42
    # archival is itself deterministic
    path2 = tmp_path / "again.txt"
    dump_config(back, path2)
    assert path.read_text() == path2.read_text()


def test_gravity_propagates_to_sections(tmp_path):
    path = tmp_path / "run.txt"
    path.write_text("g0: 9.80665\n")
    cfg = load_config(path)
    assert cfg.detector.g0 == 9.80665
    assert cfg.gait.g0 == 9.80665
