import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from oracles import aligned_mee_grid, mec_cvx, mee_cvx
from isacsim.ellipse import (AlignedEllipse, DegenerateInputError, Ellipse, aligned_semi_axes,
                             axis_aligned_mee, chi2_quantile, convex_hull, discretize,
                             error_ellipse, mec, mee)


def _rand_ellipse(rng, scale=1.0):
    a, b = sorted(rng.uniform(0.1, 2.0, 2) * scale)[::-1]
    return Ellipse(tuple(rng.normal(size=2) * scale), a, b, rng.uniform(-1.5, 1.5))


def _residual(e, pts):
    return float(np.max(e.value(pts)) - 1.0)


def test_chi2_quantile():
    assert chi2_quantile(0.99, 2) == pytest.approx(-2 * math.log(0.01))
    assert chi2_quantile(0.99, 2) == pytest.approx(9.21, abs=5e-3)


def test_error_ellipse_axes_and_orientation():
    e = error_ellipse(np.diag([4.0, 1.0]), 0.99)
    q = -2 * math.log(0.01)
    assert (e.a, e.b, e.orientation) == pytest.approx((2 * math.sqrt(q), math.sqrt(q), 0.0))
    R = np.array([[math.cos(0.4), -math.sin(0.4)], [math.sin(0.4), math.cos(0.4)]])
    e = error_ellipse(R @ np.diag([4.0, 1.0]) @ R.T, 0.99, center=(1.0, 2.0))
    assert e.orientation == pytest.approx(0.4)
    assert e.center == (1.0, 2.0)
    # isotropic covariance has no preferred direction
    assert error_ellipse(np.eye(2) * 3.0).orientation == 0.0


def test_error_ellipse_coverage(rng):
    S = np.array([[2.0, 0.8], [0.8, 1.0]])
    e = error_ellipse(S, 0.9)
    x = rng.multivariate_normal([0, 0], S, 40000)
    assert np.mean(e.contains(x)) == pytest.approx(0.9, abs=0.006)


def test_error_ellipse_rejects_bad_sigma():
    with pytest.raises(ValueError):
        error_ellipse(np.array([[1.0, 0.5], [0.4, 1.0]]))
    with pytest.raises(ValueError):
        error_ellipse(np.diag([1.0, -1.0]))
    with pytest.raises(ValueError):
        error_ellipse(np.eye(2), confidence=1.0)


def test_central_form_round_trip(rng):
    for _ in range(50):
        e = _rand_ellipse(rng)
        A, B, C, F = e.central_form
        assert F == 1.0
        back = Ellipse.from_central_form(A, B, C, F, center=e.center)
        assert (back.a, back.b) == pytest.approx((e.a, e.b), rel=1e-10)
        assert back.value(discretize(e, 16)) == pytest.approx(np.ones(16), rel=1e-10)


def test_discretize_on_boundary(rng):
    e = _rand_ellipse(rng)
    pts = discretize(e, 200)
    assert pts.shape == (200, 2)
    assert np.allclose(e.value(pts), 1.0)
    with pytest.raises(ValueError):
        discretize(e, 3)


def test_convex_hull_square():
    pts = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5], [0.2, 0.7]], dtype=float)
    idx = convex_hull(pts)
    assert sorted(idx) == [0, 1, 2, 3]
    h = pts[idx]
    # counter-clockwise orientation
    area2 = np.sum(h[:, 0] * np.roll(h[:, 1], -1) - h[:, 1] * np.roll(h[:, 0], -1))
    assert area2 > 0


def test_mee_of_rectangle_corners():
    pts = np.array([[-2, -1], [2, -1], [2, 1], [-2, 1]], dtype=float)
    e = mee(pts)
    assert e.center == pytest.approx((0.0, 0.0), abs=1e-9)
    assert (e.a, e.b) == pytest.approx((2 * math.sqrt(2), math.sqrt(2)), rel=1e-6)


def test_mee_recovers_ellipse(rng):
    for _ in range(20):
        e0 = _rand_ellipse(rng)
        e = mee(discretize(e0, 400))
        assert e.area == pytest.approx(e0.area, rel=1e-4)
        assert e.center == pytest.approx(e0.center, abs=1e-6)


def test_mee_matches_convex_oracle(rng):
    for _ in range(10):
        pts = np.vstack([discretize(_rand_ellipse(rng), 100), discretize(_rand_ellipse(rng), 100)])
        area, center = mee_cvx(pts)
        e = mee(pts)
        assert e.area == pytest.approx(area, rel=1e-6)
        assert np.allclose(e.center, center, atol=1e-5)


def test_aligned_mee_matches_grid_oracle(rng):
    for _ in range(5):
        pts = np.vstack([discretize(_rand_ellipse(rng), 100), discretize(_rand_ellipse(rng), 100)])
        assert axis_aligned_mee(pts).area == pytest.approx(aligned_mee_grid(pts), rel=1e-2)


def test_aligned_mee_returns_axis_order():
    pts = discretize(Ellipse((1.0, -1.0), 3.0, 0.5, math.pi / 2), 100)
    e = axis_aligned_mee(pts)
    assert isinstance(e, AlignedEllipse)
    ax, by = aligned_semi_axes(e)
    assert (ax, by) == pytest.approx((0.5, 3.0), rel=1e-5)
    assert aligned_semi_axes(Ellipse((0, 0), 2.0, 1.0, math.pi / 2)) == pytest.approx((1.0, 2.0))
    with pytest.raises(ValueError):
        aligned_semi_axes(Ellipse((0, 0), 2.0, 1.0, 0.3))


def test_mec_matches_cone_oracle(rng):
    for _ in range(10):
        pts = rng.normal(size=(60, 2)) * rng.uniform(0.1, 5, 2)
        (cx, cy), r = mec(pts)
        assert r == pytest.approx(mec_cvx(pts), rel=1e-6)
        assert np.all(np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) <= r * (1 + 1e-12))


def test_mec_deterministic_given_seed(rng):
    pts = rng.normal(size=(100, 2))
    assert mec(pts, seed=3) == mec(pts, seed=3)


@pytest.mark.parametrize("pts", [
    np.zeros((5, 2)),
    np.column_stack((np.linspace(0, 1, 10), np.linspace(0, 2, 10))),
    np.array([[0.0, 0.0], [1.0, 1.0]]),
])
def test_degenerate_sets_rejected(pts):
    with pytest.raises(DegenerateInputError, match="rank-deficient"):
        mee(pts)
    with pytest.raises(DegenerateInputError):
        axis_aligned_mee(pts)


def test_r_star_cap_detects_failure():
    pts = np.array([[-1, 0], [1, 0], [0, 1], [0, -1.0]])
    mee(pts, r_star=1.0)
    with pytest.raises(RuntimeError, match="exceeds"):
        mee(pts, r_star=0.5)


point_sets = st.integers(0, 2**32 - 1).map(
    lambda s: np.random.default_rng(s).normal(size=(int(np.random.default_rng(s).integers(3, 60)), 2))
    * np.random.default_rng(s + 1).uniform(1e-3, 1e3, 2))


@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(point_sets)
def test_containment_and_area_chain(pts):
    e = mee(pts)
    ea = axis_aligned_mee(pts)
    _, r = mec(pts)
    assert _residual(e, pts) <= 1e-7
    assert _residual(ea, pts) <= 1e-7
    assert e.area <= ea.area * (1 + 1e-7)
    assert ea.area <= math.pi * r * r * (1 + 1e-7)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 10), st.floats(-math.pi, math.pi))
def test_affine_equivariance(tx, ty, s, ang):
    rng = np.random.default_rng(7)
    pts = rng.normal(size=(30, 2))
    R = np.array([[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]])
    moved = s * pts @ R.T + (tx, ty)
    assert mee(moved).area == pytest.approx(s * s * mee(pts).area, rel=1e-6)
