import math

import pytest

from rearrange.geometry import Calibration, OrientedBox
from rearrange.scene import ObjectRecord, Scene, Workspace, validate_scene


def box(cx, cy, w, h, theta=0.0):
    return OrientedBox(cx, cy, w, h, theta)


def record(oid, cx, cy, w, h, theta=0.0, category=None, movable=True, stacked_on=None):
    return ObjectRecord(oid, category or oid.split("_")[0], box(cx, cy, w, h, theta), movable, stacked_on)


def make_scene(*objects, width=640, height=480):
    scene = Scene(Workspace(width, height, Calibration(1000.0, (0.0, 0.0), 0.75)), tuple(objects))
    validate_scene(scene)
    return scene


@pytest.fixture
def workspace():
    return Workspace(640, 480, Calibration(1000.0, (0.0, 0.0), 0.75))


def random_box(rng, cx, cy, min_side=0.5, max_side=3.0):
    w = rng.uniform(min_side, max_side)
    h = rng.uniform(min_side, max_side)
    theta = rng.uniform(-math.pi / 2, math.pi / 2)
    return OrientedBox(cx, cy, w, h, theta)


def random_box_pair(rng, width=640, height=480):
    """A pair concentrated around the contact boundary, anywhere in the workspace."""
    cx = rng.uniform(5, width - 5)
    cy = rng.uniform(5, height - 5)
    a = random_box(rng, cx, cy)
    b_shape = random_box(rng, 0, 0)
    reach = a.half_diagonal + b_shape.half_diagonal
    regime = rng.random()
    if regime < 0.3:
        t = rng.uniform(0.0, 0.8)
    elif regime < 0.8:
        t = rng.uniform(0.8, 1.1)
    else:
        t = rng.uniform(1.1, 1.4)
    ang = rng.uniform(0, 2 * math.pi)
    b = b_shape.moved(cx + t * reach * math.cos(ang), cy + t * reach * math.sin(ang))
    return a, b
