"""Shared fixtures."""
import numpy as np
import pytest

from src.channel.generator import flatten, generate, normalize_energy
from src.channel.models import ChannelParams, PathList
from src.services.equivalent_channel import SystemConfig


@pytest.fixture
def system():
    return SystemConfig(chip_period=1.0, spread_length=12)


@pytest.fixture
def cm1():
    return ChannelParams.preset(1)


@pytest.fixture
def cm1_paths(cm1):
    """Factory for energy-normalized CM1 path lists from consecutive seeds."""

    def make(count: int, base_seed: int = 100) -> list[PathList]:
        return [normalize_energy(flatten(generate(cm1, base_seed + i))) for i in range(count)]

    return make


@pytest.fixture
def three_paths():
    return PathList(np.array([0.0, 5.0, 7.0]), np.array([0.3, -0.9, 0.5]))
