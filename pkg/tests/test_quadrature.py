"""Integration rules: exactness against closed-form monomial integrals."""

import math

import numpy as np
import pytest

from gekplate.quadrature import edge_rule, map_to_triangle, triangle_rule


def tri_monomial_integral(a, b):
    # int_T x^a y^b over the reference triangle = a! b! / (a + b + 2)!
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


def test_triangle_rule_exact_through_stated_degree():
    for degree in range(13):
        rule = triangle_rule(degree)
        for a in range(degree + 1):
            for b in range(degree + 1 - a):
                approx = np.sum(
                    rule.weights * rule.points[:, 0] ** a * rule.points[:, 1] ** b
                )
                exact = tri_monomial_integral(a, b)
                assert abs(approx - exact) < 1e-14, (degree, a, b)


def test_triangle_rule_weights_and_points():
    for degree in (0, 3, 8, 15):
        rule = triangle_rule(degree)
        assert (rule.weights > 0).all()
        assert abs(rule.weights.sum() - 0.5) < 1e-14
        x, y = rule.points[:, 0], rule.points[:, 1]
        assert (x > 0).all() and (y > 0).all() and (x + y < 1).all()
        assert rule.degree >= degree


def test_triangle_rule_cached_and_frozen():
    rule = triangle_rule(6)
    assert rule is triangle_rule(6)
    with pytest.raises(ValueError):
        rule.points[0, 0] = 0.0
    with pytest.raises(ValueError):
        triangle_rule(-1)


def test_edge_rule_gauss_exactness():
    for m in (1, 2, 4, 8):
        rule = edge_rule(m)
        assert abs(rule.weights.sum() - 1.0) < 1e-14
        for k in range(2 * m):
            approx = np.sum(rule.weights * rule.points**k)
            assert abs(approx - 1.0 / (k + 1)) < 1e-14, (m, k)
        # degree 2m is the first the rule misses
        beyond = np.sum(rule.weights * rule.points ** (2 * m))
        assert abs(beyond - 1.0 / (2 * m + 1)) > 1e-12
    with pytest.raises(ValueError):
        edge_rule(0)


def test_map_to_triangle_single_and_batched():
    rng = np.random.default_rng(42)
    corners = rng.standard_normal((5, 3, 2))
    ref = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1 / 3, 1 / 3]])
    batched = map_to_triangle(corners, ref)
    assert batched.shape == (5, 4, 2)
    for t in range(5):
        single = map_to_triangle(corners[t], ref)
        assert np.allclose(single, batched[t], atol=1e-15)
        assert np.allclose(single[0], corners[t, 0], atol=1e-15)
        assert np.allclose(single[1], corners[t, 1], atol=1e-15)
        assert np.allclose(single[2], corners[t, 2], atol=1e-15)
        assert np.allclose(single[3], corners[t].mean(axis=0), atol=1e-15)


def test_mapped_rule_integrates_area():
    rule = triangle_rule(2)
    corners = np.array([[1.0, 1.0], [3.0, 1.5], [1.5, 4.0]])
    e1 = corners[1] - corners[0]
    e2 = corners[2] - corners[0]
    area = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])
    pts = map_to_triangle(corners, rule.points)
    assert pts.shape == (rule.points.shape[0], 2)
    one = 2.0 * area * rule.weights.sum()
    assert abs(one - area) < 1e-13 * area
