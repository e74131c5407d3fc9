"""Tests for noise sampling, integrals, covariance oracles and dumps."""

import math

import numpy as np
import pandas as pd
import pytest

from src.randcurve.errors import InvalidArgumentError
from src.randcurve.models.data_models import NoiseKind
from src.randcurve.models.fields import NoiseField
from src.randcurve.tools.noise import (
    covariance_by_quadrature,
    dump_noise,
    empirical_covariance,
    export_noise_csv,
    field_integral,
    load_noise,
    regularized_covariance,
    sample_discretized_wn,
    sample_noise,
    sample_regularized_wn,
    synthesis_covariance,
)


class TestDiscretizedWhiteNoise:
    """Test the cellwise Gaussian sampler."""

    def test_same_seed_same_field(self):
        """Two draws with the same seed are bitwise identical."""
        a = sample_discretized_wn(4, 4, seed=7)
        b = sample_discretized_wn(4, 4, seed=7)
        assert np.array_equal(a.values, b.values)
        assert a.seed == 7

    def test_different_seed_different_field(self):
        """Distinct seeds give distinct fields."""
        a = sample_discretized_wn(4, 4, seed=7)
        b = sample_discretized_wn(4, 4, seed=8)
        assert not np.array_equal(a.values, b.values)

    def test_moments(self):
        """Cell values are standard normal."""
        values = sample_discretized_wn(256, 256, seed=1).values
        assert abs(values.mean()) < 0.02
        assert abs(values.var() - 1.0) < 0.03

    def test_origin_and_extent(self):
        """The field covers the requested cells."""
        field = sample_discretized_wn(5, 3, seed=0, origin=(-2, 4))
        assert field.shape == (3, 5)
        assert field.contains(-2, 4)
        assert field.contains(2, 6)
        assert not field.contains(3, 6)

    def test_values_are_read_only(self):
        """Sampled arrays cannot be mutated in place."""
        field = sample_discretized_wn(3, 3, seed=0)
        with pytest.raises(ValueError):
            field.values[0, 0] = 1.0

    def test_invalid_extent(self):
        """Empty extents are rejected."""
        with pytest.raises(InvalidArgumentError):
            sample_discretized_wn(0, 4, seed=0)

    def test_negative_seed(self):
        """Seeds must be non-negative."""
        with pytest.raises(InvalidArgumentError):
            sample_discretized_wn(4, 4, seed=-1)


class TestRegularizedWhiteNoise:
    """Test the spectrally cut-off field."""

    def test_unit_variance(self):
        """Pointwise variance is one."""
        stack = np.stack([sample_regularized_wn(32, 32, seed=s).values for s in range(20)])
        assert abs(stack.var() - 1.0) < 0.1

    def test_deterministic(self):
        """Same seed, same field."""
        a = sample_regularized_wn(8, 8, seed=3)
        b = sample_regularized_wn(8, 8, seed=3)
        assert np.array_equal(a.values, b.values)
        assert a.kind == NoiseKind.REGULARIZED_WN

    def test_lag_covariance_matches_synthesis(self):
        """Empirical lag products follow the exact synthesis covariance."""
        stack = np.stack([sample_regularized_wn(32, 32, seed=s).values for s in range(40)])
        expected = synthesis_covariance(32, 32, (1, 0))
        assert abs(empirical_covariance(stack, (1, 0)) - expected) < 0.1

    def test_dispatch(self):
        """sample_noise routes on the kind."""
        field = sample_noise("regularized-wn", 4, 4, seed=2)
        assert field.kind == NoiseKind.REGULARIZED_WN
        assert sample_noise(NoiseKind.DISCRETIZED_WN, 4, 4, seed=2).kind == NoiseKind.DISCRETIZED_WN

    def test_too_small(self):
        """A single cell cannot be synthesized."""
        with pytest.raises(InvalidArgumentError):
            sample_regularized_wn(1, 1, seed=0)


class TestCovarianceOracles:
    """Test the closed-form, quadrature and synthesis covariances."""

    def test_closed_form_at_zero(self):
        """Covariance at the origin is one."""
        assert regularized_covariance(0.0) == 1.0

    @pytest.mark.parametrize("r", [0.5, 1.0])
    def test_closed_form_matches_quadrature(self, r):
        """The Bessel closed form agrees with direct integration."""
        assert regularized_covariance(r) == pytest.approx(covariance_by_quadrature(r), abs=1e-6)

    def test_vectorized(self):
        """Arrays of radii are accepted."""
        values = regularized_covariance(np.array([0.0, 1.0]))
        assert values.shape == (2,)
        assert values[0] == 1.0

    def test_synthesis_lag_zero(self):
        """The discrete synthesis has unit variance."""
        assert synthesis_covariance(16, 16, (0, 0)) == pytest.approx(1.0)

    def test_synthesis_close_to_continuum(self):
        """The periodic synthesis approximates the continuum covariance."""
        assert synthesis_covariance(32, 32, (1, 0)) == pytest.approx(
            regularized_covariance(1.0), abs=0.05
        )

    def test_empirical_lag_too_large(self):
        """Lags must fit the field."""
        with pytest.raises(InvalidArgumentError):
            empirical_covariance(np.zeros((1, 3, 3)), (3, 0))


class TestFieldIntegral:
    """Test integration over cell sets."""

    def test_empty_set(self):
        """The empty set integrates to zero."""
        assert field_integral(sample_discretized_wn(3, 3, seed=0), []) == 0.0

    def test_single_cell(self):
        """One cell contributes its value."""
        field = NoiseField.from_array(np.array([[2.5]]))
        assert field_integral(field, [(0, 0)]) == 2.5

    def test_block(self):
        """Values add up over the cells."""
        field = NoiseField.from_array(np.array([[1.0, -1.0], [0.5, 0.5]]))
        assert field_integral(field, [(0, 0), (1, 0), (0, 1), (1, 1)]) == pytest.approx(1.0)

    def test_origin_offset(self):
        """Cells are addressed in lattice coordinates."""
        field = NoiseField.from_array(np.array([[1.0, 2.0]]), origin=(-1, 5))
        assert field_integral(field, [(0, 5)]) == 2.0

    def test_cell_outside(self):
        """Cells outside the extent are rejected."""
        with pytest.raises(InvalidArgumentError):
            field_integral(sample_discretized_wn(2, 2, seed=0), [(2, 0)])


class TestDumpLoad:
    """Test the binary dump format and CSV export."""

    def test_round_trip(self, tmp_path, small_noise):
        """Dumped fields load back with values, kind and seed."""
        path = tmp_path / "noise.bin"
        dump_noise(small_noise, path)
        loaded = load_noise(path)
        assert np.array_equal(loaded.values, small_noise.values)
        assert loaded.seed == 7
        assert loaded.kind == NoiseKind.DISCRETIZED_WN
        assert path.stat().st_size == 32 + 8 * 16

    def test_truncated_dump(self, tmp_path, small_noise):
        """A dump missing values is rejected."""
        path = tmp_path / "noise.bin"
        dump_noise(small_noise, path)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(InvalidArgumentError):
            load_noise(path)

    def test_bad_magic(self, tmp_path):
        """Arbitrary bytes are not a dump."""
        path = tmp_path / "noise.bin"
        path.write_bytes(b"x" * 64)
        with pytest.raises(InvalidArgumentError):
            load_noise(path)

    def test_csv_export(self, tmp_path):
        """CSV rows carry lattice coordinates."""
        field = NoiseField.from_array(np.array([[1.0, 2.0], [3.0, 4.0]]), origin=(10, 20))
        path = tmp_path / "noise.csv"
        export_noise_csv(field, path)
        frame = pd.read_csv(path)
        assert list(frame.columns) == ["x", "y", "value"]
        row = frame[(frame.x == 11) & (frame.y == 21)]
        assert math.isclose(row.value.iloc[0], 4.0)
