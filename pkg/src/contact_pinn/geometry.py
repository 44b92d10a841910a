"""Quadrature-point generation and boundary sampling for 2D domains.

Domains are meshless: interior integrals use tensor-product Gauss-Legendre
rules mapped through analytic parameterizations (rectangles, polar maps),
so quadrature weights are exact.  Boundaries are sampled as uniformly
spaced midpoints whose segment lengths double as surface quadrature
weights for traction and contact integrals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError


@dataclass
class QuadratureCloud:
    """Interior sample points with quadrature weights [m^2] for one body."""

    points: np.ndarray
    weights: np.ndarray
    body_id: int = 0

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if np.any(self.weights <= 0.0):
            raise ConfigurationError("quadrature weights must be positive")

    @property
    def area(self):
        return float(self.weights.sum())

    def __len__(self):
        return self.points.shape[0]


def merge_clouds(clouds):
    """Concatenate clouds of one body into a single cloud."""
    body = clouds[0].body_id
    return QuadratureCloud(
        np.concatenate([c.points for c in clouds]),
        np.concatenate([c.weights for c in clouds]),
        body_id=body)


@dataclass
class ContactSurface:
    """Ordered boundary samples of one body's candidate contact boundary."""

    points: np.ndarray
    segment_length: np.ndarray
    outward_normal: np.ndarray
    body_id: int = 0
    spacing: float = 0.0

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.segment_length = np.asarray(self.segment_length, dtype=np.float64)
        self.outward_normal = np.asarray(self.outward_normal, dtype=np.float64)
        norms = np.linalg.norm(self.outward_normal, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ConfigurationError("outward normals must be unit length")

    def __len__(self):
        return self.points.shape[0]


@dataclass
class BoundarySegment:
    """Boundary quadrature for traction integration on the loaded boundary."""

    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.normals = np.asarray(self.normals, dtype=np.float64)


# -- curves -----------------------------------------------------------------

@dataclass
class Line:
    """Straight segment from p0 to p1 with a prescribed outward normal."""

    p0: tuple
    p1: tuple
    outward: tuple

    def length(self):
        return float(np.hypot(self.p1[0] - self.p0[0], self.p1[1] - self.p0[1]))


@dataclass
class Arc:
    """Circular arc, angles in radians measured from the +x axis.

    ``orientation`` is +1 when the body lies inside the circle (outward
    normal points radially out) and -1 for the inner surface of a ring.
    """

    center: tuple
    radius: float
    theta0: float
    theta1: float
    orientation: int = 1

    def length(self):
        return abs(self.radius * (self.theta1 - self.theta0))


def _uniform_partition(total, spacing):
    if spacing <= 0.0:
        raise ConfigurationError("spacing must be positive")
    if spacing > total * (1.0 + 1e-12):
        raise ConfigurationError("spacing exceeds curve length")
    n = int(np.ceil(total / spacing - 1e-9))
    lengths = np.full(n, spacing)
    lengths[-1] = total - spacing * (n - 1)
    edges = np.concatenate([[0.0], np.cumsum(lengths)])
    mids = 0.5 * (edges[:-1] + edges[1:])
    return mids, lengths


def boundary_samples(curve, spacing, body_id=0, as_segment=False):
    """Uniformly spaced midpoint samples of a line or arc.

    Segment lengths sum exactly to the curve length (the last segment is
    shortened when the length is not a multiple of ``spacing``).
    """
    if isinstance(curve, Line):
        p0 = np.asarray(curve.p0, dtype=np.float64)
        p1 = np.asarray(curve.p1, dtype=np.float64)
        total = curve.length()
        mids, lengths = _uniform_partition(total, spacing)
        t = (mids / total)[:, None]
        pts = p0[None, :] * (1.0 - t) + p1[None, :] * t
        n = np.asarray(curve.outward, dtype=np.float64)
        n = n / np.linalg.norm(n)
        normals = np.broadcast_to(n, pts.shape).copy()
    elif isinstance(curve, Arc):
        total = curve.length()
        mids, lengths = _uniform_partition(total, spacing)
        sgn = 1.0 if curve.theta1 >= curve.theta0 else -1.0
        theta = curve.theta0 + sgn * mids / curve.radius
        c = np.asarray(curve.center, dtype=np.float64)
        radial = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        pts = c[None, :] + curve.radius * radial
        normals = curve.orientation * radial
    else:
        raise ConfigurationError(f"unsupported curve type {type(curve).__name__}")
    if as_segment:
        return BoundarySegment(pts, lengths, normals)
    return ContactSurface(pts, lengths, normals, body_id=body_id, spacing=spacing)


def gauss_segment(curve, n):
    """Gauss-Legendre quadrature along a curve, for traction integrals.

    Exact for polynomial traction profiles up to degree 2n-1 (the midpoint
    sampling of :func:`boundary_samples` is only second order).
    """
    if n < 1:
        raise ConfigurationError("need at least one Gauss point")
    if isinstance(curve, Line):
        p0 = np.asarray(curve.p0, dtype=np.float64)
        p1 = np.asarray(curve.p1, dtype=np.float64)
        t, w = _gauss_1d(0.0, 1.0, n)
        pts = p0[None, :] + t[:, None] * (p1 - p0)[None, :]
        weights = w * curve.length()
        nvec = np.asarray(curve.outward, dtype=np.float64)
        nvec = nvec / np.linalg.norm(nvec)
        normals = np.broadcast_to(nvec, pts.shape).copy()
    elif isinstance(curve, Arc):
        th, w = _gauss_1d(curve.theta0, curve.theta1, n)
        c = np.asarray(curve.center, dtype=np.float64)
        radial = np.stack([np.cos(th), np.sin(th)], axis=1)
        pts = c[None, :] + curve.radius * radial
        weights = np.abs(w) * curve.radius
        normals = curve.orientation * radial
    else:
        raise ConfigurationError(f"unsupported curve type {type(curve).__name__}")
    return BoundarySegment(pts, weights, normals)


# -- interior quadrature ------------------------------------------------------

def _gauss_1d(a, b, n):
    if n < 1:
        raise ConfigurationError("need at least one Gauss point")
    x, w = np.polynomial.legendre.leggauss(int(n))
    xm, xr = 0.5 * (a + b), 0.5 * (b - a)
    return xm + xr * x, xr * w


def gauss_rectangle(x_range, y_range, nx, ny, body_id=0):
    """Tensor-product Gauss-Legendre cloud on an axis-aligned rectangle."""
    x0, x1 = map(float, x_range)
    y0, y1 = map(float, y_range)
    if not (x1 > x0 and y1 > y0):
        raise ConfigurationError("degenerate rectangle range")
    if nx < 1 or ny < 1:
        raise ConfigurationError("nx and ny must be >= 1")
    gx, wx = _gauss_1d(x0, x1, nx)
    gy, wy = _gauss_1d(y0, y1, ny)
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    W = np.outer(wx, wy)
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    return QuadratureCloud(pts, W.ravel(), body_id=body_id)


def _polar_block_half_disc(center, R, psi_range, rho_range, n_psi, n_rho,
                           upper=False):
    """Gauss cloud of a polar box of the half disc, pole on the y axis.

    Parameterization x = cx + rho sin(psi), y = cy -/+ rho cos(psi); the
    area Jacobian rho is folded into the weights.
    """
    psi, wpsi = _gauss_1d(psi_range[0], psi_range[1], n_psi)
    rho, wrho = _gauss_1d(rho_range[0], rho_range[1], n_rho)
    P, Rho = np.meshgrid(psi, rho, indexing="ij")
    W = np.outer(wpsi, wrho) * Rho
    sign = 1.0 if upper else -1.0
    x = center[0] + Rho * np.sin(P)
    y = center[1] + sign * Rho * np.cos(P)
    pts = np.stack([x.ravel(), y.ravel()], axis=1)
    return pts, W.ravel()


@dataclass
class RefineBands:
    """Nested refinement bands toward the contact pole of a half disc.

    Each level carves an angular band ``|psi| <= half_angle`` restricted to
    ``rho >= rho_frac * R`` and doubles the linear point density (4x points
    per area and level).
    """

    half_angles: tuple = (0.24, 0.12, 0.06)
    rho_fracs: tuple = (0.75, 0.87, 0.94)
    factor: float = 2.0

    def __post_init__(self):
        if len(self.half_angles) != len(self.rho_fracs):
            raise ConfigurationError("band lists must have equal length")
        if any(a2 >= a1 for a1, a2 in zip(self.half_angles, self.half_angles[1:])):
            raise ConfigurationError("half angles must strictly decrease")
        if any(r2 <= r1 for r1, r2 in zip(self.rho_fracs, self.rho_fracs[1:])):
            raise ConfigurationError("rho fractions must strictly increase")


def gauss_half_disc(R, n_r, n_theta, refine: Optional[RefineBands] = None,
                    center=(0.0, 0.0), upper=False, body_id=0):
    """Polar Gauss cloud of a half disc (flat side up by default).

    With ``refine`` the region around the pole (the candidate contact zone)
    is covered by nested bands of geometrically increasing point density.
    """
    if R <= 0.0:
        raise ConfigurationError("radius must be positive")
    if n_r < 1 or n_theta < 1:
        raise ConfigurationError("n_r and n_theta must be >= 1")
    dens_psi = n_theta / np.pi
    dens_rho = n_r / R

    def block(psi0, psi1, rho0, rho1, level):
        if psi1 <= psi0 + 1e-14 or rho1 <= rho0 + 1e-14:
            return None
        mult = 1 if refine is None else int(round(refine.factor ** level))
        n_psi = max(2, int(np.ceil((psi1 - psi0) * dens_psi))) * mult
        n_rho = max(2, int(np.ceil((rho1 - rho0) * dens_rho))) * mult
        return _polar_block_half_disc(center, R, (psi0, psi1), (rho0, rho1),
                                      n_psi, n_rho, upper=upper)

    blocks = []
    if refine is None:
        blocks.append(block(-np.pi / 2, np.pi / 2, 0.0, R, 0))
    else:
        prev_a, prev_r = np.pi / 2, 0.0
        for lvl, (a, rf) in enumerate(zip(refine.half_angles, refine.rho_fracs)):
            r = rf * R
            # side wings at the previous level's density
            blocks.append(block(-prev_a, -a, prev_r, R, lvl))
            blocks.append(block(a, prev_a, prev_r, R, lvl))
            # region below the refined band
            blocks.append(block(-a, a, prev_r, r, lvl))
            prev_a, prev_r = a, r
        blocks.append(block(-prev_a, prev_a, prev_r, R,
                            len(refine.half_angles)))
    blocks = [b for b in blocks if b is not None]
    pts = np.concatenate([b[0] for b in blocks])
    w = np.concatenate([b[1] for b in blocks])
    return QuadratureCloud(pts, w, body_id=body_id)


def gauss_disc(R, n_r, n_theta, center=(0.0, 0.0), body_id=0):
    """Full disc as two mirrored half-disc clouds."""
    lower = gauss_half_disc(R, n_r, n_theta, center=center, body_id=body_id)
    upper = gauss_half_disc(R, n_r, n_theta, center=center, upper=True,
                            body_id=body_id)
    return merge_clouds([lower, upper])


def gauss_ring_segment(r_in, r_out, theta0, theta1, n_r, n_theta,
                       center=(0.0, 0.0), body_id=0):
    """Polar tensor-product cloud of an annulus sector."""
    if not 0.0 < r_in < r_out:
        raise ConfigurationError("need 0 < r_in < r_out")
    if theta1 <= theta0:
        raise ConfigurationError("need theta0 < theta1")
    if n_r < 1 or n_theta < 1:
        raise ConfigurationError("n_r and n_theta must be >= 1")
    th, wth = _gauss_1d(theta0, theta1, n_theta)
    r, wr = _gauss_1d(r_in, r_out, n_r)
    T, Rr = np.meshgrid(th, r, indexing="ij")
    W = np.outer(wth, wr) * Rr
    x = center[0] + Rr * np.cos(T)
    y = center[1] + Rr * np.sin(T)
    pts = np.stack([x.ravel(), y.ravel()], axis=1)
    return QuadratureCloud(pts, W.ravel(), body_id=body_id)


# -- distance utilities -------------------------------------------------------

def _dist_to_line(x, curve):
    p0 = np.asarray(curve.p0, dtype=np.float64)
    p1 = np.asarray(curve.p1, dtype=np.float64)
    d = p1 - p0
    t = np.clip(np.dot(x - p0, d) / np.dot(d, d), 0.0, 1.0)
    return float(np.linalg.norm(x - (p0 + t * d)))


def _dist_to_arc(x, curve):
    c = np.asarray(curve.center, dtype=np.float64)
    v = x - c
    r = np.linalg.norm(v)
    lo, hi = sorted((curve.theta0, curve.theta1))
    if hi - lo >= 2.0 * np.pi - 1e-12:
        return abs(r - curve.radius)
    ang = np.arctan2(v[1], v[0])
    for cand in (ang, ang + 2.0 * np.pi, ang - 2.0 * np.pi):
        if lo - 1e-12 <= cand <= hi + 1e-12:
            return abs(r - curve.radius)
    ends = [c + curve.radius * np.array([np.cos(t), np.sin(t)])
            for t in (curve.theta0, curve.theta1)]
    return min(float(np.linalg.norm(x - e)) for e in ends)


def min_distance_to_boundary(x, curves):
    """Exact shortest distance from ``x`` to a set of line/arc primitives.

    This is the general distance-factor construction for hard boundary
    conditions on composite boundaries; the built-in scenes use simpler
    per-scene analytic factors instead.
    """
    if not curves:
        raise ConfigurationError("boundary curve set is empty")
    x = np.asarray(x, dtype=np.float64)
    best = np.inf
    for c in curves:
        if isinstance(c, Line):
            best = min(best, _dist_to_line(x, c))
        elif isinstance(c, Arc):
            best = min(best, _dist_to_arc(x, c))
        else:
            raise ConfigurationError(f"unsupported curve type {type(c).__name__}")
    return best


def export_cloud_csv(path, clouds):
    """Write clouds as CSV rows (x, y, w, body_id) for inspection."""
    if isinstance(clouds, QuadratureCloud):
        clouds = [clouds]
    with open(path, "w") as f:
        f.write("x,y,w,body_id\n")
        for c in clouds:
            for (x, y), w in zip(c.points, c.weights):
                f.write(f"{x:.17g},{y:.17g},{w:.17g},{c.body_id}\n")
