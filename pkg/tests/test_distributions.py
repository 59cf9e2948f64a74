"""Unit tests for distributions module."""

import math

import numpy as np
import pytest

from laa_coexistence.distributions import DistributionSpec, Family, sample


class FixedUniform:
    """Random stream that always returns the same uniform."""

    def __init__(self, value):
        self.value = value

    def random(self):
        return self.value


class TestDistributionSpec:
    """Tests for DistributionSpec dataclass."""

    def test_exponential_from_rate(self):
        """Test the exponential constructor inverts the rate."""
        dist = DistributionSpec.exponential(40.0)
        assert dist.family is Family.EXPONENTIAL
        assert dist.mean == pytest.approx(1 / 40)

    def test_validate_valid(self):
        """Test a valid lognormal passes validation."""
        assert DistributionSpec(Family.LOGNORMAL, 1.0, 0.5).validate() == []

    def test_validate_non_positive_mean(self):
        """Test a zero mean is rejected."""
        errors = DistributionSpec(Family.DETERMINISTIC, 0.0).validate()
        assert any("mean" in error for error in errors)

    def test_validate_lognormal_requires_cv(self):
        """Test lognormal without cv is rejected."""
        errors = DistributionSpec(Family.LOGNORMAL, 1.0).validate()
        assert any("cv" in error for error in errors)

    def test_with_family_keeps_mean(self):
        """Test switching family keeps the mean."""
        dist = DistributionSpec.exponential(4.0).with_family(Family.LOGNORMAL, 2.0)
        assert dist.mean == pytest.approx(0.25)
        assert dist.cv == 2.0


class TestSample:
    """Tests for sample function."""

    def test_exponential_inverse_cdf(self):
        """Test the exponential draw for a uniform of 0.5."""
        value = sample(DistributionSpec.exponential(40.0), FixedUniform(0.5))
        assert value == pytest.approx(-math.log(0.5) / 40, rel=1e-12)
        assert value == pytest.approx(0.0173286, abs=1e-7)

    def test_deterministic(self):
        """Test deterministic draws return the mean."""
        rng = np.random.default_rng(1)
        dist = DistributionSpec(Family.DETERMINISTIC, 2.0)
        assert all(sample(dist, rng) == 2.0 for _ in range(10))

    def test_exponential_mean(self):
        """Test the exponential sample mean."""
        rng = np.random.default_rng(2)
        dist = DistributionSpec.exponential(0.5)
        draws = [sample(dist, rng) for _ in range(100_000)]
        assert np.mean(draws) == pytest.approx(2.0, rel=0.02)

    def test_lognormal_moments(self):
        """Test lognormal draws reproduce the requested mean and cv."""
        rng = np.random.default_rng(3)
        dist = DistributionSpec(Family.LOGNORMAL, 3.0, 0.5)
        draws = np.array([sample(dist, rng) for _ in range(200_000)])
        assert draws.mean() == pytest.approx(3.0, rel=0.01)
        assert draws.std() / draws.mean() == pytest.approx(0.5, rel=0.03)
        assert np.all(draws > 0)

    def test_str(self):
        """Test the printed form names the family and its parameters."""
        assert str(DistributionSpec.exponential(4.0)) == "exponential(mean=0.25)"
        assert str(DistributionSpec(Family.LOGNORMAL, 0.04, 2.0)) == "lognormal(mean=0.04, cv=2)"
