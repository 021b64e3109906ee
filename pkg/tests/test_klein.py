import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypconvex import DomainError
from hypconvex.bodies import HalfspaceBody, ball_body, random_body
from hypconvex.klein import (distortion_factors, hyp_radius, hyperbolic_distance, hyperbolic_volume_mc,
                             klein_radius, omega_K_measure_bound, omega_K_measure_rigorous)
from hypconvex.space_volumes import ball_volume


def _point(rng, n, rmax=0.95):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v) * rmax * rng.random() ** (1 / n)


def test_distance_examples():
    p = np.array([0.3, -0.2, 0.1])
    assert hyperbolic_distance(p, p) == 0.0
    q = np.array([math.tanh(1), 0, 0])
    assert hyperbolic_distance(np.zeros(3), q) == pytest.approx(1.0, rel=1e-14)
    with pytest.raises(DomainError):
        hyperbolic_distance(np.zeros(2), np.array([1.0, 0.0]))


def test_distance_matches_acosh_formula():
    rng = np.random.default_rng(1)
    for _ in range(50):
        p, q = _point(rng, 4), _point(rng, 4)
        ref = math.acosh((1 - p @ q) / math.sqrt((1 - p @ p) * (1 - q @ q)))
        assert hyperbolic_distance(p, q) == pytest.approx(ref, rel=1e-9)


def test_distance_from_origin_formula():
    q = np.array([0.2, 0.5])
    d = np.linalg.norm(q)
    assert hyperbolic_distance(np.zeros(2), q) == pytest.approx(0.5 * math.log((1 + d) / (1 - d)))


def test_triangle_inequality_and_symmetry():
    rng = np.random.default_rng(2)
    for _ in range(2000):
        p, q, s = (_point(rng, 3) for _ in range(3))
        assert hyperbolic_distance(p, q) == hyperbolic_distance(q, p)
        assert hyperbolic_distance(p, s) <= hyperbolic_distance(p, q) + hyperbolic_distance(q, s) + 1e-12


def test_radius_conversions():
    assert klein_radius(0) == 0 and hyp_radius(0) == 0
    assert klein_radius(1) == pytest.approx(0.761594, abs=1e-6)
    assert hyp_radius(math.tanh(1)) == pytest.approx(1.0, rel=1e-14)
    d = 1 - 1e-12
    ref = float(mpmath.atanh(mpmath.mpf(1) - mpmath.mpf("1e-12")))
    assert hyp_radius(d) == pytest.approx(ref, rel=1e-6)
    assert klein_radius(hyp_radius(d)) == pytest.approx(d, rel=1e-12)
    with pytest.raises(DomainError):
        hyp_radius(1.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 0.999999))
def test_radius_roundtrip(d):
    assert klein_radius(hyp_radius(d)) == pytest.approx(d, abs=1e-12)


def test_distortion_examples():
    f = distortion_factors(np.array([0.6, 0.0]))
    assert (f.radial, f.spherical) == pytest.approx((1.5625, 0.75))
    f0 = distortion_factors(np.zeros(3))
    assert (f0.radial, f0.spherical, f0.degenerate) == (1.0, 0.0, True)


@pytest.mark.parametrize("r", [0.3, 0.6, 0.85])
def test_distortion_finite_differences(r):
    q = np.array([r, 0.0, 0.0])
    f = distortion_factors(q)
    h = 1e-6
    radial = hyperbolic_distance(q, q + np.array([h, 0, 0])) / h
    assert radial == pytest.approx(f.radial, rel=1e-4)
    # a small visual angle h moves the point by r*h
    tang = hyperbolic_distance(q, r * np.array([math.cos(h), math.sin(h), 0])) / h
    assert tang == pytest.approx(f.spherical, rel=1e-4)


@pytest.mark.parametrize("n, oracle", [(2, 2 * math.pi * (math.cosh(1) - 1)),
                                       (3, math.pi * (math.sinh(2) - 2))])
def test_mc_volume_of_round_ball(n, oracle):
    body = HalfspaceBody(n, np.zeros((0, n)), np.zeros(0), 0.5, cap=math.tanh(1))
    est = hyperbolic_volume_mc(body, 2000, 0)
    # rays all have the same length, so the estimator is exact
    assert est.estimate == pytest.approx(oracle, rel=1e-9)
    assert est.stderr < 1e-9


@pytest.mark.parametrize("n", [2, 3, 4])
def test_mc_volume_of_polytope_within_three_stderr(n):
    # independent seeds and sample sizes must agree
    body = random_body(n, 40, 0.2, n, outer=0.9, lo=0.4, cap=0.95)
    a = hyperbolic_volume_mc(body, 20000, 1)
    b = hyperbolic_volume_mc(body, 400000, 2)
    assert abs(a.estimate - b.estimate) < 3 * math.hypot(a.stderr, b.stderr)


def test_mc_volume_flags_unbounded_body():
    est = hyperbolic_volume_mc(ball_body(3), 1000, 0)
    assert est.infinite and math.isinf(est.estimate)


def test_mc_volume_deterministic_across_threads():
    body = random_body(3, 30, 0.1, 5, lo=0.3, outer=0.9, cap=0.9)
    a = hyperbolic_volume_mc(body, 50000, 11, threads=1)
    b = hyperbolic_volume_mc(body, 50000, 11, threads=4)
    assert (a.estimate, a.stderr) == (b.estimate, b.stderr)


def test_measure_bound_examples():
    b = omega_K_measure_bound(3, 10, 0.9)
    assert b.exact == pytest.approx(2 * 4 * 10 / (4 * math.pi) * (0.1 / 1.9), rel=1e-12)
    assert b.exact == pytest.approx(0.3351, abs=1e-4)
    assert omega_K_measure_bound(5, 10, 1 - 1e-12).exact < 1e-20


def test_measure_bound_exact_at_least_relaxed():
    # 2^(n-1) ((1-d)/(1+d))^h >= 2^h (1-d)^h because 2/(1+d) >= 1
    for n in (2, 3, 6):
        for d in np.linspace(0.01, 0.99, 50):
            b = omega_K_measure_bound(n, 5.0, d)
            assert b.exact >= b.relaxed * (1 - 1e-12)


def test_measured_direction_measure_below_rigorous_bound():
    from hypconvex.bodies import omega_set
    from hypconvex._parallel import uniform_sphere
    rng = np.random.default_rng(0)
    dirs = uniform_sphere(rng, 100000, 3)
    for seed in range(5):
        body = random_body(3, 30, 0.1, seed, lo=0.3, outer=0.99, cap=0.99)
        V = hyperbolic_volume_mc(body, 100000, seed)
        for d in (0.8, 0.9, 0.95):
            meas, err = omega_set(body, d, dirs).measure()
            bound = omega_K_measure_rigorous(3, V.estimate + 3 * V.stderr, d)
            assert meas <= bound + 3 * err
