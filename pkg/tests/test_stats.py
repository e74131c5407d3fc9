"""Tests for sample summaries, scaling fits and the tail envelope."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.randcurve.errors import InvalidArgumentError
from src.randcurve.tools.stats import (
    binomial_standard_error,
    fit_log_power,
    monotone_within,
    subgaussian_envelope_check,
    summarize_samples,
    sup_field_scaling,
)


class TestSummaries:
    """Test summary statistics."""

    def test_summary(self):
        """Mean, unbiased variance and quantiles."""
        summary = summarize_samples([1.0, 2.0, 3.0, 4.0])
        assert summary.n == 4
        assert summary.mean == 2.5
        assert summary.variance == pytest.approx(5 / 3)
        assert summary.std_err == pytest.approx(math.sqrt(5 / 12))
        assert summary.quantiles["q50"] == 2.5
        assert summary.normalized_mean is None

    def test_normalized_mean(self):
        """With R the mean is divided by (log R)^(3/4)."""
        summary = summarize_samples([2.0, 2.0], R=math.e)
        assert summary.normalized_mean == pytest.approx(2.0)
        assert summary.variance == 0.0

    def test_single_sample(self):
        """One sample has zero variance."""
        assert summarize_samples([1.5]).variance == 0.0

    def test_empty(self):
        """Empty lists are rejected."""
        with pytest.raises(InvalidArgumentError):
            summarize_samples([])

    def test_binomial_standard_error(self):
        """√(p(1-p)/n), zero at the ends."""
        assert binomial_standard_error(0.5, 100) == pytest.approx(0.05)
        assert binomial_standard_error(1.0, 10) == 0.0


class TestFitLogPower:
    """Test the a·(log R)^b fit."""

    def test_exact_power(self):
        """2·(log R)^(3/4) is recovered exactly."""
        points = [(R, 2.0 * math.log(R) ** 0.75) for R in (8, 64, 512)]
        fit = fit_log_power(points)
        assert fit.exponent == pytest.approx(0.75)
        assert fit.prefactor == pytest.approx(2.0)
        assert fit.residual == pytest.approx(0.0, abs=1e-9)

    def test_constant(self):
        """Constant data has exponent 0."""
        fit = fit_log_power([(8, 3.0), (64, 3.0), (512, 3.0)])
        assert fit.exponent == pytest.approx(0.0, abs=1e-12)
        assert fit.prefactor == pytest.approx(3.0)

    @settings(max_examples=50, deadline=None)
    @given(
        a=st.floats(min_value=0.1, max_value=10.0),
        b=st.floats(min_value=-1.0, max_value=2.0),
    )
    def test_recovers_any_power(self, a, b):
        """Noiseless data of any exponent is fitted exactly."""
        points = [(R, a * math.log(R) ** b) for R in (4, 16, 256, 4096)]
        fit = fit_log_power(points)
        assert fit.exponent == pytest.approx(b, abs=1e-8)
        assert fit.prefactor == pytest.approx(a, rel=1e-8)

    def test_too_few_points(self):
        """Three points are the minimum."""
        with pytest.raises(InvalidArgumentError):
            fit_log_power([(8, 1.0), (16, 1.0)])

    def test_small_r(self):
        """R below 3 makes log log R non-positive."""
        with pytest.raises(InvalidArgumentError):
            fit_log_power([(2, 1.0), (8, 1.0), (16, 1.0)])

    def test_non_positive_value(self):
        """Values must be positive."""
        with pytest.raises(InvalidArgumentError):
            fit_log_power([(4, 1.0), (8, 0.0), (16, 1.0)])

    def test_repeated_r(self):
        """Three distinct R are needed."""
        with pytest.raises(InvalidArgumentError):
            fit_log_power([(8, 1.0), (8, 2.0), (16, 1.0)])


class TestEnvelope:
    """Test the sub-Gaussian tail comparison."""

    T_GRID = [0.5, 1.0, 2.0, 3.0, 15.0]

    def test_constant_samples(self):
        """No deviation never violates the bound."""
        result = subgaussian_envelope_check([1.0] * 200, self.T_GRID)
        assert result.ok
        assert all(row.empirical == 0.0 for row in result.rows)

    def test_normal_samples(self):
        """Unit Gaussians sit well inside a 4π envelope."""
        samples = np.random.default_rng(0).standard_normal(2000)
        result = subgaussian_envelope_check(samples, self.T_GRID)
        assert result.ok
        assert result.sigma2 == pytest.approx(4 * math.pi)

    def test_heavy_tails(self):
        """Wide Cauchy samples break the envelope far out."""
        samples = 10.0 * np.random.default_rng(0).standard_cauchy(1000)
        result = subgaussian_envelope_check(samples, self.T_GRID)
        assert not result.ok
        assert result.rows[-1].violation > 0

    def test_needs_samples(self):
        """Small samples are not checked."""
        with pytest.raises(InvalidArgumentError):
            subgaussian_envelope_check([0.0] * 10, self.T_GRID)

    def test_sigma2_positive(self):
        """The variance proxy must be positive."""
        with pytest.raises(InvalidArgumentError):
            subgaussian_envelope_check([0.0] * 200, self.T_GRID, sigma2=0.0)


class TestMonotone:
    """Test monotonicity up to error bars."""

    def test_decreasing(self):
        """Strictly decreasing values pass."""
        assert monotone_within([0.9, 0.5, 0.1], [0.01, 0.01, 0.01])

    def test_small_increase_tolerated(self):
        """Increases within 2 combined errors pass."""
        assert monotone_within([0.5, 0.52], [0.01, 0.01])

    def test_large_increase(self):
        """Increases beyond the error bars fail."""
        assert not monotone_within([0.5, 0.6], [0.01, 0.01])

    def test_increasing_mode(self):
        """decreasing=False flips the direction."""
        assert monotone_within([0.1, 0.5], [0.0, 0.0], decreasing=False)

    def test_length_mismatch(self):
        """Values and errors pair up."""
        with pytest.raises(InvalidArgumentError):
            monotone_within([1.0, 2.0], [0.1])


class TestSupField:
    """Test the sup-of-noise scaling."""

    def test_nested_boxes(self):
        """Sups over nested boxes grow with R."""
        result = sup_field_scaling("discretized-wn", [2, 4, 8], 5, master_seed=1)
        assert result.means == sorted(result.means)
        assert len(result.ratios) == 3
        assert result.fit is None

    def test_invalid_grid(self):
        """R lists increase and start at 2."""
        with pytest.raises(InvalidArgumentError):
            sup_field_scaling("discretized-wn", [1, 4], 5, master_seed=1)
        with pytest.raises(InvalidArgumentError):
            sup_field_scaling("discretized-wn", [4, 2], 5, master_seed=1)
