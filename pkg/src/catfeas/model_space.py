"""Geometry of the positive-curvature model space.

Points are unit vectors in R^(n+1) for every curvature; the curvature only
enters through the ``1/sqrt(kappa)`` rescaling of the great-circle angle.
The ambient space is a closed spherical cap of angular radius below pi/4, so
its diameter stays under half the model diameter ``D_kappa = pi/sqrt(kappa)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import combinations_with_replacement
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DegenerateSideError,
    MissingCMError,
    NotUnitVectorError,
    ParameterOutOfRangeError,
    InvalidCapError,
    PointOutsideCapError,
)

#: A point of the model space: a unit vector of shape (n+1,).
SpherePoint = np.ndarray

UNIT_TOL = 1e-12
CAP_TOL = 1e-10
MAX_CAP_RADIUS = math.pi / 4


def as_point(coords, tol: float = UNIT_TOL) -> SpherePoint:
    """Validate ``coords`` as a unit vector and return a read-only float copy.

    The copy is renormalised so downstream arithmetic sees an exact unit norm.
    """
    p = np.array(coords, dtype=float).reshape(-1)
    if p.size < 2 or not np.all(np.isfinite(p)):
        raise NotUnitVectorError(f"not a point of a sphere: {coords!r}")
    norm = np.linalg.norm(p)
    if abs(norm - 1.0) > tol:
        raise NotUnitVectorError(f"norm {norm!r} differs from 1 by more than {tol:g}")
    p = p / norm
    p.setflags(write=False)
    return p


def angle(x, y):
    """Great-circle angle between unit vectors, broadcasting over leading axes.

    Uses ``2*atan2(|x-y|, |x+y|)``, which agrees with ``arccos(clip(<x,y>))``
    but keeps full relative precision for nearly coincident points.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return 2.0 * np.arctan2(np.linalg.norm(x - y, axis=-1), np.linalg.norm(x + y, axis=-1))


def slerp(x, y, t):
    """Constant-speed great-circle interpolation, vectorised over ``t`` or points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    theta = np.asarray(angle(x, y))
    th = theta[..., None]
    tt = t[..., None]
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.sin(th)
        p = (np.sin((1.0 - tt) * th) * x + np.sin(tt * th) * y) / s
    small = th < 1e-9
    if np.any(small):
        lin = (1.0 - tt) * x + tt * y
        p = np.where(small, lin, p)
    return p / np.linalg.norm(p, axis=-1, keepdims=True)


@dataclass(frozen=True, eq=False)
class ModelSpace:
    """Closed spherical cap of the model space of curvature ``kappa``.

    Parameters
    ----------
    kappa : float
        Curvature, strictly positive.
    dim : int
        Sphere dimension ``n``; points live in R^(n+1).
    cap_center : array_like
        Unit vector at the centre of the ambient cap.
    cap_radius : float
        Angular radius of the cap on the unit sphere, in (0, pi/4).
    c_m : float, optional
        Convexity constant in (0, 1]. ``None`` until estimated or supplied.
    """

    kappa: float
    dim: int
    cap_center: SpherePoint
    cap_radius: float
    c_m: Optional[float] = None
    cap_tol: float = field(default=CAP_TOL, repr=False)

    def __post_init__(self):
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ValueError(f"kappa must be positive, got {self.kappa!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be an integer >= 1, got {self.dim!r}")
        center = as_point(self.cap_center)
        if center.size != self.dim + 1:
            raise ValueError(f"cap_center must have {self.dim + 1} coordinates, got {center.size}")
        object.__setattr__(self, "cap_center", center)
        object.__setattr__(self, "dim", int(self.dim))
        if not (0 < self.cap_radius < MAX_CAP_RADIUS):
            raise InvalidCapError(f"cap_radius must lie in (0, pi/4), got {self.cap_radius!r}")
        if self.c_m is not None and not (0 < self.c_m <= 1):
            raise ValueError(f"c_m must lie in (0, 1], got {self.c_m!r}")

    @property
    def scale(self) -> float:
        """Factor turning unit-sphere angles into space distances."""
        return 1.0 / math.sqrt(self.kappa)

    @property
    def model_diameter(self) -> float:
        """``D_kappa = pi / sqrt(kappa)``."""
        return math.pi / math.sqrt(self.kappa)

    @property
    def diameter(self) -> float:
        """Diameter of the cap in space units (strictly below ``D_kappa / 2``)."""
        return 2.0 * self.cap_radius * self.scale

    def with_c_m(self, c_m: float) -> "ModelSpace":
        return replace(self, c_m=c_m)

    def require_c_m(self) -> float:
        if self.c_m is None:
            raise MissingCMError("the convexity constant c_m is not set on this space")
        return self.c_m

    def in_cap(self, x, tol: Optional[float] = None):
        """Vectorised cap membership."""
        tol = self.cap_tol if tol is None else tol
        return angle(x, self.cap_center) <= self.cap_radius + tol

    def require_in_cap(self, *points):
        for p in points:
            p = np.asarray(p, dtype=float)
            if p.shape[-1] != self.dim + 1:
                raise PointOutsideCapError(
                    f"point has {p.shape[-1]} coordinates, space needs {self.dim + 1}"
                )
            if not np.all(self.in_cap(p)):
                rho = np.max(angle(p, self.cap_center))
                raise PointOutsideCapError(
                    f"point at angle {rho:.6g} from the cap centre exceeds the cap radius "
                    f"{self.cap_radius:.6g}"
                )

    def tangent_basis(self) -> np.ndarray:
        """Orthonormal basis (n, n+1) of the tangent space at the cap centre."""
        c = self.cap_center
        q, _ = np.linalg.qr(np.column_stack([c, np.eye(self.dim + 1)]))
        basis = q[:, 1:].T
        return basis

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw ``count`` points uniformly (by volume) from the cap."""
        n = self.dim
        r = self.cap_radius
        thetas = np.empty(0)
        while thetas.size < count:
            s = rng.uniform(0.0, r, size=2 * count + 8)
            w = (np.sin(s) / math.sin(r)) ** (n - 1)
            thetas = np.concatenate([thetas, s[rng.uniform(size=s.size) < w]])
        thetas = thetas[:count]
        d = rng.normal(size=(count, n)) @ self.tangent_basis()
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return np.cos(thetas)[:, None] * self.cap_center + np.sin(thetas)[:, None] * d


def distance(space: ModelSpace, x, y) -> float:
    """Space distance ``arccos(<x,y>) / sqrt(kappa)`` between two cap points."""
    space.require_in_cap(x, y)
    return float(angle(x, y)) * space.scale


@dataclass(frozen=True, eq=False)
class Geodesic:
    """The unique geodesic between two non-antipodal points."""

    start: SpherePoint
    end: SpherePoint
    angle: float

    @classmethod
    def between(cls, start, end) -> "Geodesic":
        a = as_point(start)
        b = as_point(end)
        theta = float(angle(a, b))
        if theta >= math.pi - 1e-12:
            raise ValueError("antipodal endpoints do not determine a unique geodesic")
        return cls(a, b, theta)


def geodesic_eval(g: Geodesic, t: float) -> SpherePoint:
    """Point at parameter ``t`` in [0, 1] along ``g``."""
    if not (0.0 <= t <= 1.0):
        raise ParameterOutOfRangeError(f"geodesic parameter {t!r} outside [0, 1]")
    if g.angle == 0.0 or t == 0.0:
        return np.array(g.start)
    if t == 1.0:
        return np.array(g.end)
    s = math.sin(g.angle)
    p = (math.sin((1.0 - t) * g.angle) * g.start + math.sin(t * g.angle) * g.end) / s
    return p / np.linalg.norm(p)


def comparison_triangle(space: ModelSpace, triangle: Sequence) -> np.ndarray:
    """Vertices (3, 3) of the comparison triangle in the model plane.

    Vertex 0 sits at the pole, vertex 1 on the meridian through (1, 0, 0) and
    vertex 2 is placed with a nonnegative second coordinate.
    """
    pts = [np.asarray(p, dtype=float) for p in triangle]
    space.require_in_cap(*pts)
    # unit-sphere side lengths; the comparison plane has the same curvature
    a01 = float(angle(pts[0], pts[1]))
    a02 = float(angle(pts[0], pts[2]))
    a12 = float(angle(pts[1], pts[2]))
    v0 = np.array([0.0, 0.0, 1.0])
    v1 = np.array([math.sin(a01), 0.0, math.cos(a01)])
    if a01 == 0.0 or a02 == 0.0:
        gamma = 0.0
    else:
        cos_g = (math.cos(a12) - math.cos(a01) * math.cos(a02)) / (math.sin(a01) * math.sin(a02))
        gamma = math.acos(min(1.0, max(-1.0, cos_g)))
    v2 = np.array([math.sin(a02) * math.cos(gamma), math.sin(a02) * math.sin(gamma), math.cos(a02)])
    return np.vstack([v0, v1, v2])


def _side_endpoints(side: int) -> Tuple[int, int]:
    if side not in (0, 1, 2):
        raise ParameterOutOfRangeError(f"side must be 0, 1 or 2, got {side!r}")
    return side, (side + 1) % 3


def comparison_point(space: ModelSpace, triangle: Sequence, side: int, s: float) -> np.ndarray:
    """Comparison point in the model plane for the point at fraction ``s`` of a side.

    Side ``i`` joins vertex ``i`` to vertex ``(i + 1) % 3``.
    """
    if not (0.0 <= s <= 1.0):
        raise ParameterOutOfRangeError(f"side fraction {s!r} outside [0, 1]")
    i, j = _side_endpoints(side)
    verts = comparison_triangle(space, triangle)
    if float(angle(verts[i], verts[j])) == 0.0 and s not in (0.0, 1.0):
        raise DegenerateSideError(f"side {side} has zero length")
    return slerp(verts[i], verts[j], s)


@dataclass(frozen=True)
class CatInequalityReport:
    min_margin: float
    pairs_checked: int
    worst_pair: Tuple[Tuple[int, float], Tuple[int, float]]


def check_cat_inequality(space: ModelSpace, triangle: Sequence, samples: int = 10) -> CatInequalityReport:
    """Sample pairs of points on the triangle and compare with their comparison points.

    Returns the smallest ``rho(p_bar, q_bar) - d(p, q)`` over a ``samples``-point
    grid on each side; nonnegative for a CAT(kappa) triangle.
    """
    pts = [np.asarray(p, dtype=float) for p in triangle]
    verts = comparison_triangle(space, pts)
    s = np.linspace(0.0, 1.0, samples)
    on_side = {}
    for side in range(3):
        i, j = _side_endpoints(side)
        if float(angle(pts[i], pts[j])) == 0.0:
            on_side[side] = (np.repeat(pts[i][None], samples, 0), np.repeat(verts[i][None], samples, 0))
        else:
            on_side[side] = (slerp(pts[i], pts[j], s), slerp(verts[i], verts[j], s))
    best = (math.inf, None)
    count = 0
    for a, b in combinations_with_replacement(range(3), 2):
        p, pb = on_side[a]
        q, qb = on_side[b]
        d = angle(p[:, None, :], q[None, :, :]) * space.scale
        rho = angle(pb[:, None, :], qb[None, :, :]) * space.scale
        margin = rho - d
        k = np.unravel_index(np.argmin(margin), margin.shape)
        count += margin.size
        if margin[k] < best[0]:
            best = (float(margin[k]), ((a, float(s[k[0]])), (b, float(s[k[1]]))))
    return CatInequalityReport(best[0], count, best[1])


def check_convexity_inequality(space: ModelSpace, x, y, z, t: float) -> float:
    """Slack of the 2-uniform convexity inequality at ``gamma_xy(t)`` seen from ``z``.

    Returns ``(1-t) d(z,x)^2 + t d(z,y)^2 - c_m t(1-t) d(x,y)^2 - d(z, gamma(t))^2``.
    """
    c_m = space.require_c_m()
    space.require_in_cap(x, y, z)
    if not (0.0 <= t <= 1.0):
        raise ParameterOutOfRangeError(f"geodesic parameter {t!r} outside [0, 1]")
    g = geodesic_eval(Geodesic.between(x, y), t)
    k = space.scale
    dzx = float(angle(z, x)) * k
    dzy = float(angle(z, y)) * k
    dxy = float(angle(x, y)) * k
    dzg = float(angle(z, g)) * k
    return (1.0 - t) * dzx**2 + t * dzy**2 - c_m * t * (1.0 - t) * dxy**2 - dzg**2
