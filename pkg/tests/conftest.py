"""Shared helpers: random geometry generators used across test modules."""

import math

import numpy as np
import pytest

from radarkit.grid import Box3D


def make_random_box(
    rng: np.random.Generator,
    center_span: float = 20.0,
    size_range: tuple[float, float] = (0.5, 5.0),
) -> Box3D:
    """A box with uniform center, sizes, and yaw, for property tests."""
    return Box3D(
        cx=float(rng.uniform(-center_span, center_span)),
        cy=float(rng.uniform(-center_span, center_span)),
        cz=float(rng.uniform(-2.0, 2.0)),
        l=float(rng.uniform(*size_range)),
        w=float(rng.uniform(*size_range)),
        h=float(rng.uniform(*size_range)),
        yaw=float(rng.uniform(-math.pi, math.pi)),
    )


def make_overlapping_pair(rng: np.random.Generator) -> tuple[Box3D, Box3D]:
    """Two boxes whose centers are close enough to plausibly intersect."""
    a = make_random_box(rng, center_span=5.0, size_range=(1.0, 4.0))
    b = Box3D(
        cx=a.cx + float(rng.uniform(-2.0, 2.0)),
        cy=a.cy + float(rng.uniform(-2.0, 2.0)),
        cz=a.cz + float(rng.uniform(-1.0, 1.0)),
        l=float(rng.uniform(1.0, 4.0)),
        w=float(rng.uniform(1.0, 4.0)),
        h=float(rng.uniform(1.0, 4.0)),
        yaw=float(rng.uniform(-math.pi, math.pi)),
    )
    return a, b


@pytest.fixture(name="make_random_box")
def make_random_box_fixture():
    return make_random_box


@pytest.fixture(name="make_overlapping_pair")
def make_overlapping_pair_fixture():
    return make_overlapping_pair


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
