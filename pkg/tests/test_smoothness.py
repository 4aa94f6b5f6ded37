"""Certifiers for smoothness ladders and gradient lower bounds."""

import math

import numpy as np
import pytest

from descent_lab import (
    CapabilityError,
    Dataset,
    Geometry,
    certify_gradient_lower_bound,
    certify_strong_smoothness,
    derive_constants_from_strong_smoothness,
    make_logistic_loss,
    make_lp_regression_loss,
    make_power_norm_loss,
    sample_points,
)
from descent_lab.errors import ConfigError


def test_sample_points_deterministic_and_radius_cycled():
    pts = sample_points(3, 9, seed=42)
    np.testing.assert_array_equal(pts, sample_points(3, 9, seed=42))
    assert pts.shape == (9, 3)
    norms = np.linalg.norm(pts, axis=1)
    # Radii cycle 0.1, 1, 10, so consecutive triples differ by decades.
    assert norms[2] / norms[0] > 10.0
    assert not np.array_equal(pts, sample_points(3, 9, seed=43))


class TestStrongSmoothness:
    def test_power_norm_ladder_certifies_in_gradient_form(self):
        obj = make_power_norm_loss(4, Geometry.identity(3))
        points = sample_points(3, 120, seed=1)
        report = certify_strong_smoothness(obj, 4, obj.smoothness_constants, points)
        assert report.certified
        assert report.max_violation_ratio <= 1.0 + 1e-9
        assert report.checked == 120

    def test_shrunken_constants_are_rejected_with_a_witness(self):
        obj = make_power_norm_loss(4, Geometry.identity(3))
        points = sample_points(3, 60, seed=2)
        weak = [c / 4.0 for c in obj.smoothness_constants]
        report = certify_strong_smoothness(obj, 4, weak, points)
        assert not report.certified
        assert report.max_violation_ratio > 1.0
        assert report.worst_point is not None
        assert obj.value(report.worst_point) >= 0.0

    def test_minimizer_samples_are_skipped_not_failed(self):
        obj = make_power_norm_loss(4, Geometry.identity(2))
        points = np.vstack([np.zeros(2), sample_points(2, 5, seed=3)])
        report = certify_strong_smoothness(obj, 4, obj.smoothness_constants, points)
        assert report.certified
        assert report.skipped == 1
        assert report.checked == 5

    def test_logistic_operator_form_with_factorial_ladder(self):
        obj = make_logistic_loss(Dataset([[0.48, 0.64]], [1.0]))
        points = sample_points(2, 80, seed=4)
        report = certify_strong_smoothness(
            obj, math.inf, obj.smoothness_constants[:4], points, form="operator"
        )
        assert report.certified
        assert report.per_order  # one worst-ratio entry per derivative order
        assert max(report.per_order.values()) <= 1.0 + 1e-9

    def test_rejects_unknown_form(self):
        obj = make_power_norm_loss(3, Geometry.identity(2))
        with pytest.raises(ConfigError):
            certify_strong_smoothness(
                obj, 3, obj.smoothness_constants, sample_points(2, 3, seed=5), form="hessian"
            )


class TestGradientLowerBound:
    def test_lp_loss_with_lemma_constants(self):
        targets = np.array([0.3, -0.7, 1.1])
        obj = make_lp_regression_loss(Dataset(np.eye(3), targets), 4)
        constants = derive_constants_from_strong_smoothness(obj.smoothness_constants, 4)
        points = sample_points(3, 80, seed=6)
        report = certify_gradient_lower_bound(obj, 4, constants, points)
        assert report.certified
        assert report.max_violation_ratio <= 1.0 + 1e-9

    def test_requires_a_known_minimum(self):
        data = Dataset(np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([0.0, 1.0, 0.0]))
        obj = make_lp_regression_loss(data, 4)
        assert obj.known_minimum is None
        with pytest.raises(CapabilityError):
            certify_gradient_lower_bound(obj, 4, [1.0], sample_points(2, 3, seed=7))

    def test_tiny_constants_fail(self):
        obj = make_power_norm_loss(4, Geometry.identity(2))
        report = certify_gradient_lower_bound(
            obj, 4, [1e-6, 1e-6, 1e-6], sample_points(2, 30, seed=8)
        )
        assert not report.certified


class TestDerivedConstants:
    def test_worked_example(self):
        # L = [1, 2, 3] at order 3: the factorial series is 2/2 + 3/6 = 1.5,
        # so C_m = 6 L_m^{3/(3-m)} gives [6, 48].
        assert derive_constants_from_strong_smoothness([1.0, 2.0, 3.0], 3) == [6.0, 48.0]

    def test_infinite_order_needs_explicit_series(self):
        with pytest.raises(ConfigError):
            derive_constants_from_strong_smoothness([1.0, 1.0], math.inf)
        u = 0.8
        series = (-math.log(1.0 - u) - u) / u
        out = derive_constants_from_strong_smoothness([1.0, u], math.inf, series_sum=series)
        assert out == [4.0 * series, 4.0 * series * u]

    def test_short_ladder_is_rejected(self):
        with pytest.raises(ConfigError):
            derive_constants_from_strong_smoothness([1.0, 2.0], 4)
