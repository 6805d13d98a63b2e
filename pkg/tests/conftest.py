"""Shared fixtures for the weightlab test suite"""

import numpy as np
import pytest

from weightlab.config import AnalysisSettings
from weightlab.models import DISC, PLANE, LogProfile
from weightlab.weights import make_builtin


@pytest.fixture
def settings() -> AnalysisSettings:
    return AnalysisSettings()


@pytest.fixture
def power_disc():
    def build(alpha: float):
        return make_builtin('power_disc', [alpha], DISC)
    return build


@pytest.fixture
def exp_plane():
    def build(p: float):
        return make_builtin('exp_plane', [p], PLANE)
    return build


def random_profile(rng: np.random.Generator, convex: bool, size: int = 40) -> LogProfile:
    """Plane profile on a random increasing grid; nondecreasing slopes when convex"""
    xs = np.sort(rng.uniform(-1.0, 12.0, size))
    xs = xs[np.concatenate([[True], np.diff(xs) > 1e-3])]
    steps = rng.uniform(0.01, 3.0, xs.size - 1)
    slopes = np.sort(steps) if convex else steps
    phis = np.concatenate([[rng.uniform(0.0, 1.0)], np.cumsum(slopes * np.diff(xs))])
    phis[1:] += phis[0]
    return LogProfile(xs=xs, phis=phis, domain=PLANE, levels=np.zeros(xs.size, dtype=int))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def make_profile(rng):
    def build(convex: bool, size: int = 40) -> LogProfile:
        return random_profile(rng, convex, size)
    return build
