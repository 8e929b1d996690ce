"""Confidence ellipses and minimum enclosing circles/ellipses in the plane.

An :class:`Ellipse` is stored geometrically (centre, semi-axes, orientation)
and exposes the equivalent central form ``A dx^2 + B dx dy + C dy^2 = F``
with ``F`` normalised to 1.  Point sets are plain ``(n, 2)`` float arrays.
"""

from __future__ import annotations

import math
import random
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import chi2

from . import _kernels

P_NUM_DEFAULT = 200
CONFIDENCE_DEFAULT = 0.99


class DegenerateInputError(ValueError):
    pass


@dataclass(frozen=True)
class Ellipse:
    center: tuple[float, float]
    a: float
    b: float
    orientation: float = 0.0

    def __post_init__(self):
        if not (self.a >= self.b > 0):
            raise ValueError(f"need a >= b > 0, got a={self.a}, b={self.b}")

    @property
    def central_form(self) -> tuple[float, float, float, float]:
        """(A, B, C, F) with F = 1."""
        c, s = math.cos(self.orientation), math.sin(self.orientation)
        ia2, ib2 = 1.0 / self.a**2, 1.0 / self.b**2
        A = c * c * ia2 + s * s * ib2
        B = 2.0 * c * s * (ia2 - ib2)
        C = s * s * ia2 + c * c * ib2
        return A, B, C, 1.0

    @property
    def shape_matrix(self) -> np.ndarray:
        A, B, C, _ = self.central_form
        return np.array([[A, B / 2], [B / 2, C]])

    @property
    def area(self) -> float:
        return math.pi * self.a * self.b

    def value(self, points) -> np.ndarray:
        """Central-form value of each point; <= 1 means inside."""
        A, B, C, _ = self.central_form
        p = np.atleast_2d(np.asarray(points, dtype=float))
        dx = p[:, 0] - self.center[0]
        dy = p[:, 1] - self.center[1]
        return A * dx * dx + B * dx * dy + C * dy * dy

    def contains(self, points, tol: float = 1e-9) -> np.ndarray:
        return self.value(points) <= 1.0 + tol

    @classmethod
    def from_shape_matrix(cls, center, M) -> "Ellipse":
        """Build from ``(x - c)^T M (x - c) <= 1`` with M symmetric PD."""
        M = np.asarray(M, dtype=float)
        M = 0.5 * (M + M.T)
        lam, vec = np.linalg.eigh(M)
        if lam[0] <= 0:
            raise DegenerateInputError("shape matrix is not positive definite")
        # smallest eigenvalue of M <-> semi-major axis
        a, b = 1.0 / math.sqrt(lam[0]), 1.0 / math.sqrt(lam[1])
        major = vec[:, 0]
        return cls((float(center[0]), float(center[1])), a, min(a, b),
                   _wrap_orientation(math.atan2(major[1], major[0])))

    @classmethod
    def from_central_form(cls, A, B, C, F=1.0, center=(0.0, 0.0)) -> "Ellipse":
        if not (4 * A * C - B * B > 0 and A > 0 and C > 0 and F > 0):
            raise DegenerateInputError("central form does not describe an ellipse")
        return cls.from_shape_matrix(center, np.array([[A, B / 2], [B / 2, C]]) / F)


def _wrap_orientation(t: float) -> float:
    # axis direction is defined modulo pi
    t = math.fmod(t, math.pi)
    if t > math.pi / 2:
        t -= math.pi
    elif t <= -math.pi / 2:
        t += math.pi
    return t


@lru_cache(maxsize=64)
def chi2_quantile(confidence: float, dof: int = 2) -> float:
    return float(chi2.ppf(confidence, dof))


def error_ellipse(sigma, confidence: float = CONFIDENCE_DEFAULT, center=(0.0, 0.0)) -> Ellipse:
    """Confidence ellipse of a bivariate Gaussian with covariance ``sigma``.

    Semi-axes are sqrt(q * lambda) for the eigenvalues of ``sigma`` with q the
    chi-square (2 dof) quantile; orientation follows the leading eigenvector.
    """
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    S = np.asarray(sigma, dtype=float)
    if S.shape != (2, 2) or abs(S[0, 1] - S[1, 0]) > 1e-10 * max(abs(S[0, 1]), abs(S[1, 0])):
        raise ValueError("sigma must be a symmetric 2x2 matrix")
    lam, vec = np.linalg.eigh(S)
    if lam[0] <= 0:
        raise ValueError("sigma is not positive definite")
    q = chi2_quantile(confidence, 2)
    lam_b, lam_a = lam
    if lam_a - lam_b <= 1e-12 * lam_a:
        orientation = 0.0
    else:
        v = vec[:, 1]
        orientation = math.atan(v[1] / v[0]) if v[0] != 0 else math.pi / 2
        orientation = _wrap_orientation(orientation)
    return Ellipse((float(center[0]), float(center[1])), math.sqrt(q * lam_a),
                   math.sqrt(q * lam_b), orientation)


def discretize(e: Ellipse, p_num: int = P_NUM_DEFAULT) -> np.ndarray:
    """``p_num`` boundary points at uniform parameter spacing."""
    if p_num < 4:
        raise ValueError("p_num must be at least 4")
    t = 2.0 * np.pi * np.arange(p_num) / p_num
    c, s = math.cos(e.orientation), math.sin(e.orientation)
    x = e.a * np.cos(t)
    y = e.b * np.sin(t)
    return np.column_stack((e.center[0] + c * x - s * y, e.center[1] + s * x + c * y))


def convex_hull(points) -> np.ndarray:
    """Indices of the convex hull vertices, counter-clockwise."""
    p = np.ascontiguousarray(points, dtype=float)
    return _kernels.convex_hull_indices(p)


# ---------------------------------------------------------------------------
# minimum enclosing circle (randomised incremental, expected linear time)


def _circle_two(p, q):
    cx, cy = (p[0] + q[0]) / 2, (p[1] + q[1]) / 2
    return cx, cy, math.hypot(p[0] - cx, p[1] - cy)


def _circle_three(a, b, c):
    ox = (min(a[0], b[0], c[0]) + max(a[0], b[0], c[0])) / 2
    oy = (min(a[1], b[1], c[1]) + max(a[1], b[1], c[1])) / 2
    ax, ay = a[0] - ox, a[1] - oy
    bx, by = b[0] - ox, b[1] - oy
    cx, cy = c[0] - ox, c[1] - oy
    d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if d == 0.0:
        return None
    x = ox + ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay)
              + (cx * cx + cy * cy) * (ay - by)) / d
    y = oy + ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx)
              + (cx * cx + cy * cy) * (bx - ax)) / d
    r = max(math.hypot(x - a[0], y - a[1]), math.hypot(x - b[0], y - b[1]),
            math.hypot(x - c[0], y - c[1]))
    return x, y, r


def _inside(c, p, eps=1e-12):
    return c is not None and math.hypot(p[0] - c[0], p[1] - c[1]) <= c[2] * (1 + eps) + eps


def _circle_with_two(pts, p, q):
    circ = _circle_two(p, q)
    left = right = None
    px, py = p
    qx, qy = q
    for r in pts:
        if _inside(circ, r):
            continue
        cross = (qx - px) * (r[1] - py) - (qy - py) * (r[0] - px)
        c = _circle_three(p, q, r)
        if c is None:
            continue
        ccross = (qx - px) * (c[1] - py) - (qy - py) * (c[0] - px)
        if cross > 0 and (left is None or ccross > (qx - px) * (left[1] - py) - (qy - py) * (left[0] - px)):
            left = c
        elif cross < 0 and (right is None or ccross < (qx - px) * (right[1] - py) - (qy - py) * (right[0] - px)):
            right = c
    if left is None and right is None:
        return circ
    if left is None:
        return right
    if right is None:
        return left
    return left if left[2] <= right[2] else right


def _circle_with_one(pts, p):
    c = (p[0], p[1], 0.0)
    for i, q in enumerate(pts):
        if not _inside(c, q):
            c = _circle_two(p, q) if c[2] == 0.0 else _circle_with_two(pts[: i + 1], p, q)
    return c


def mec(points, seed: int = 0) -> tuple[tuple[float, float], float]:
    """Smallest circle containing every point: ((cx, cy), radius)."""
    pts = [(float(x), float(y)) for x, y in np.asarray(points, dtype=float).reshape(-1, 2)]
    if not pts:
        raise ValueError("mec needs at least one point")
    random.Random(seed).shuffle(pts)
    c = None
    for i, p in enumerate(pts):
        if c is None or not _inside(c, p):
            c = _circle_with_one(pts[: i + 1], p)
    return (c[0], c[1]), c[2]


# ---------------------------------------------------------------------------
# minimum-area enclosing ellipses


def _prepare(points):
    p = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 2))
    if p.shape[0] < 3:
        raise DegenerateInputError("rank-deficient point set")
    hull = p[convex_hull(p)]
    if hull.shape[0] < 3:
        raise DegenerateInputError("rank-deficient point set")
    # normalise for conditioning; the problem is affine equivariant
    lo, hi = hull.min(axis=0), hull.max(axis=0)
    shift = 0.5 * (lo + hi)
    scale = hi - lo
    if np.any(scale <= 1e-12 * max(1.0, np.abs(shift).max())):
        raise DegenerateInputError("rank-deficient point set")
    q = (hull - shift) / scale
    r = q[1:] - q[0]
    area2 = abs(np.sum(r[:-1, 0] * r[1:, 1] - r[:-1, 1] * r[1:, 0]))
    if area2 < 1e-12:
        raise DegenerateInputError("rank-deficient point set")
    return p, q, shift, scale


def _finish(p, center, M) -> Ellipse:
    # rescale so the farthest input point lies exactly on the boundary
    d = p - center
    vals = np.einsum("ij,jk,ik->i", d, M, d)
    M = M / vals.max()
    return Ellipse.from_shape_matrix(center, M)


def _check_converged(gap, tol, it, max_iter, what):
    if gap > tol and it >= max_iter:
        warnings.warn(f"{what}: optimality gap {gap:.2e} after {it} iterations",
                      RuntimeWarning, stacklevel=3)


def mee(points, r_star: float | None = None, tol: float = 1e-7,
        max_iter: int = 10_000) -> Ellipse:
    """Minimum-area ellipse containing all points, any orientation.

    ``r_star`` (the enclosing-circle radius) caps the admissible area at
    pi * r_star**2; exceeding it means the solver failed and raises.
    """
    p, q, shift, scale = _prepare(points)
    u, it, gap = _kernels.mvee_weights(q, tol, max_iter)
    _check_converged(gap, tol, it, max_iter, "mee")
    c = u @ q
    S = (q * u[:, None]).T @ q - np.outer(c, c)
    M = 0.5 * np.linalg.inv(S)
    # undo the normalisation: x = shift + scale * q
    center = shift + scale * c
    M = M / np.outer(scale, scale)
    e = _finish(p, center, M)
    if r_star is not None and e.area > math.pi * r_star**2 * (1 + 1e-9):
        raise RuntimeError(
            f"mee area {e.area:.6g} exceeds enclosing-circle area {math.pi * r_star**2:.6g}")
    return e


def axis_aligned_mee(points, tol: float = 1e-7, max_iter: int = 10_000) -> Ellipse:
    """Minimum-area enclosing ellipse with axes along x and y (B = 0).

    The returned ellipse keeps orientation 0 so ``a`` is the x semi-axis and
    ``b`` the y semi-axis, even when b > a; see :func:`aligned_semi_axes`.
    """
    p, q, shift, scale = _prepare(points)
    u, it, gap = _kernels.mvee_diag_weights(q, tol, max_iter)
    _check_converged(gap, tol, it, max_iter, "axis_aligned_mee")
    c = u @ q
    var = u @ (q * q) - c * c
    center = shift + scale * c
    M = np.diag(1.0 / (2.0 * var * scale**2))
    d = p - center
    vals = (d * d) @ np.diag(M)
    M = M / vals.max()
    return AlignedEllipse((float(center[0]), float(center[1])),
                          1.0 / math.sqrt(M[0, 0]), 1.0 / math.sqrt(M[1, 1]))


@dataclass(frozen=True)
class AlignedEllipse(Ellipse):
    """Axis-aligned ellipse; ``a`` along x, ``b`` along y, either may be larger."""

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("semi-axes must be positive")
        if self.orientation != 0.0:
            raise ValueError("axis-aligned ellipse has orientation 0")


def aligned_semi_axes(e: Ellipse) -> tuple[float, float]:
    """Semi-axes of ``e`` along x and y; ``e`` must be axis-aligned."""
    if isinstance(e, AlignedEllipse):
        return e.a, e.b
    if abs(math.sin(e.orientation)) < 1e-12:
        return e.a, e.b
    if abs(math.cos(e.orientation)) < 1e-12:
        return e.b, e.a
    raise ValueError("ellipse is not axis-aligned")
