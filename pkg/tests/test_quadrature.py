import math

import numpy as np
import pytest
from scipy import integrate

from denseout.quadrature import (
    apply_rule,
    cc_single,
    composite,
    composite_with_points,
    weight_sq_norm,
)


def test_three_point_weights():
    nodes, weights = cc_single(2)
    assert np.allclose(nodes, [1.0, 0.0, -1.0], atol=1e-15)
    assert np.max(np.abs(weights - np.array([1.0, 4.0, 1.0]) / 3.0)) <= 1e-14


@pytest.mark.parametrize("M", [2, 4, 8, 16, 32])
def test_polynomial_exactness(M):
    x, w = cc_single(M)
    for d in range(M + 1):
        exact = 0.0 if d % 2 else 2.0 / (d + 1)
        assert abs(float(w @ x**d) - exact) <= 1e-13


def test_weights_positive_and_bounded():
    for M in range(2, 65, 2):
        _, w = cc_single(M)
        assert np.all(w > 0)
        assert math.isclose(float(w.sum()), 2.0, rel_tol=1e-13)
        assert float(np.sum(w**2)) <= 36.0 * (M + 1) / M**2


@pytest.mark.parametrize("M", [0, 3, 7, -2])
def test_single_rule_rejects_bad_m(M):
    with pytest.raises(ValueError):
        cc_single(M)


def test_composite_structure():
    rule = composite(3.7, 0.01)
    assert rule.segments == 4
    assert rule.points_per_segment == 2 * math.ceil(math.log2(100))
    assert rule.n_t == rule.segments * rule.points_per_segment + 1
    assert rule.nodes[0] == 0.0
    assert rule.nodes[-1] == 3.7
    assert np.all(np.diff(rule.nodes) > 0)
    assert np.all(rule.weights > 0)
    assert math.isclose(float(rule.weights.sum()), 3.7, rel_tol=1e-12)


def test_composite_rejects_bad_args():
    with pytest.raises(ValueError):
        composite(-1.0, 0.1)
    with pytest.raises(ValueError):
        composite(1.0, 1.5)
    with pytest.raises(ValueError):
        composite_with_points(0.0, 4)


@pytest.mark.parametrize("eps", [1e-2, 1e-4, 1e-6])
def test_composite_error_budget(eps):
    T = 3.0
    rule = composite(T, eps)
    for fn in (lambda t: math.cos(t) ** 2, lambda t: math.exp(-t) * math.sin(3 * t)):
        exact, _ = integrate.quad(fn, 0.0, T, epsabs=1e-13, epsrel=1e-13)
        approx = apply_rule(rule, np.array([fn(t) for t in rule.nodes]))
        assert abs(approx - exact) <= eps / 2.0


def test_apply_rule_shape_check():
    rule = composite(2.0, 0.1)
    with pytest.raises(ValueError):
        apply_rule(rule, np.zeros(rule.n_t + 1))


def test_node_count_cap():
    with pytest.raises(ValueError, match="cap"):
        composite_with_points(600.0, 4, segments=600)


def test_weight_sq_norm_matches_manual():
    rule = composite(2.0, 0.05)
    assert weight_sq_norm(rule) == pytest.approx(float(np.sum(rule.weights**2)))


def test_explicit_point_count():
    rule = composite_with_points(2.0, 30, segments=1)
    assert rule.n_t == 31
    assert rule.segment_length == 2.0
    f = rule.nodes**4
    assert float(rule.weights @ f) == pytest.approx(2.0**5 / 5.0, abs=1e-12)
