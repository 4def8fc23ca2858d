"""Shared fixtures: synthetic walks are expensive, so build each once."""

from __future__ import annotations

import numpy as np
import pytest

from footnav.estimator import reconstruct_foot
from footnav.pipeline import reconstruct_walk
from footnav.verification import GaitParams, synth_gait, transform_to_nav_frame


@pytest.fixture(scope="session")
def circle_walk():
    return synth_gait(GaitParams(duration=60.0, shape="circle", cadence=1.8), seed=0)


@pytest.fixture(scope="session")
def line_walk():
    return synth_gait(GaitParams(duration=40.0, shape="line", cadence=1.8,
                                 initial_heading=np.pi / 4), seed=0)


@pytest.fixture(scope="session")
def short_walk():
    """A 30 s circle walk, cheap enough for filter-internals tests."""
    return synth_gait(GaitParams(duration=30.0, shape="circle", cadence=1.8), seed=3)


@pytest.fixture(scope="session")
def circle_left_reconstruction(circle_walk):
    return reconstruct_foot(circle_walk.left_imu)


@pytest.fixture(scope="session")
def circle_bundle(circle_walk):
    return reconstruct_walk(circle_walk.left_imu, circle_walk.right_imu)


@pytest.fixture(scope="session")
def circle_truth_nav(circle_walk):
    return (transform_to_nav_frame(circle_walk.left_truth),
            transform_to_nav_frame(circle_walk.right_truth))
