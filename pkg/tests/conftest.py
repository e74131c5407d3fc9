"""Pytest configuration for randcurve tests."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent))


@pytest.fixture(autouse=True)
def fresh_settings():
    """Re-read RANDCURVE_* settings for every test."""
    from src.randcurve.models.settings import reset_settings

    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def small_noise():
    """A reproducible 4x4 discretized white-noise sample."""
    from src.randcurve.tools.noise import sample_discretized_wn

    return sample_discretized_wn(4, 4, seed=7)


@pytest.fixture
def half_plane_spin():
    """8x8 configuration: -1 on the left half, +1 on the right half."""
    from src.randcurve.models.fields import SpinField

    values = np.ones((8, 8), dtype=np.int8)
    values[:, :4] = -1
    return SpinField.from_array(values)


@pytest.fixture
def bubble_spin():
    """8x8 all-plus configuration with the single cell (3, 3) flipped."""
    from src.randcurve.models.fields import SpinField

    values = np.ones((8, 8), dtype=np.int8)
    values[3, 3] = -1
    return SpinField.from_array(values)
