"""Closed convex subsets of the cap and their metric projections.

Three kinds of set are supported: geodesic balls, geodesic segments and
spherical hulls of finitely many generators. Each has an exact projection and
a brute-force grid oracle that shares no code with it, so the two routes can
be compared.

Internally every set is parametrised by a small coordinate vector ``u``:
tangent coordinates at the centre for a ball, the geodesic parameter for a
segment and barycentric weights for a hull. The grid oracle, the local
refinement and the intersection sweep all work in these coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import combinations, product
from typing import Union

import numpy as np

from .errors import EmptyGeneratorListError, EmptyIntersectionError, NotInSetError, PointOutsideCapError
from .model_space import ModelSpace, SpherePoint, angle, as_point, slerp

MEMBER_TOL = 1e-9
FALLBACK_TOL = 1e-6
REFINE_LEVELS = 20
_MAX_HULL_GRID_POINTS = 60_000


def _tangent_frame(p: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(np.column_stack([p, np.eye(p.size)]))
    return q[:, 1:].T


def _exp(center: np.ndarray, frame: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Exponential map at ``center`` applied to rows of tangent coordinates ``u``."""
    r = np.linalg.norm(u, axis=-1, keepdims=True)
    v = u @ frame
    with np.errstate(invalid="ignore", divide="ignore"):
        direction = np.where(r > 0, v / np.where(r > 0, r, 1.0), 0.0)
    p = np.cos(r) * center + np.sin(r) * direction
    return p / np.linalg.norm(p, axis=-1, keepdims=True)


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Row-wise Euclidean projection onto the probability simplex."""
    v = np.atleast_2d(v)
    k = v.shape[1]
    s = -np.sort(-v, axis=1)
    css = np.cumsum(s, axis=1) - 1.0
    idx = np.arange(1, k + 1)
    cond = s - css / idx > 0
    rho = k - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(v.shape[0]), rho] / (rho + 1)
    return np.maximum(v - theta[:, None], 0.0)


@lru_cache(maxsize=32)
def _compositions(k: int, m: int) -> np.ndarray:
    """All barycentric points with denominator ``m`` on the (k-1)-simplex."""
    if k == 1:
        return np.ones((1, 1))
    if k == 2:
        i = np.arange(m + 1)
        return np.column_stack([i, m - i]) / m
    if k == 3:
        i, j = np.triu_indices(m + 1)
        return np.column_stack([i, j - i, m - j]) / m
    rows = []
    for bars in combinations(range(m + k - 1), k - 1):
        edges = (-1,) + bars + (m + k - 1,)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(k)])
    return np.asarray(rows, dtype=float) / m


@dataclass(frozen=True, eq=False)
class GeodesicBall:
    """Closed ball ``{x : d(x, center) <= radius}``; radius in space units."""

    center: SpherePoint
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not (self.radius >= 0 and math.isfinite(self.radius)):
            raise ValueError(f"ball radius must be nonnegative, got {self.radius!r}")

    kind = "ball"

    def angular_radius(self, space: ModelSpace) -> float:
        return self.radius * math.sqrt(space.kappa)

    def _frame(self):
        return _tangent_frame(self.center)

    def _points(self, space, u):
        return _exp(self.center, self._frame(), u)

    def _clip(self, space, u):
        r = self.angular_radius(space)
        norm = np.linalg.norm(u, axis=1, keepdims=True)
        return np.where(norm > r, u * (r / np.where(norm > 0, norm, 1.0)), u)

    def _directions(self, space):
        n = space.dim
        if n <= 4:
            d = np.array([s for s in product((-1.0, 0.0, 1.0), repeat=n) if any(s)])
        else:
            d = np.vstack([np.eye(n), -np.eye(n)])
        return d

    def _grid(self, space, grid):
        r = self.angular_radius(space)
        n = space.dim
        radii = np.linspace(0.0, r, grid + 1)[1:]
        if n == 1:
            dirs = np.array([[1.0], [-1.0]])
        elif n == 2:
            phi = 2.0 * math.pi * np.arange(grid) / grid
            dirs = np.column_stack([np.cos(phi), np.sin(phi)])
        else:
            q = max(3, int(round((4000 / (2 * n)) ** (1.0 / (n - 1)))))
            ticks = np.linspace(-1.0, 1.0, q)
            lattice = np.array(list(product(ticks, repeat=n)))
            lattice = lattice[np.max(np.abs(lattice), axis=1) == 1.0]
            dirs = lattice / np.linalg.norm(lattice, axis=1, keepdims=True)
        u = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, n)
        u = np.vstack([np.zeros((1, n)), u])
        return u, (r / grid if r > 0 else 1.0)

    def _contains_many(self, space, pts, tol):
        return angle(pts, self.center) * space.scale <= self.radius + tol

    def _project_many(self, space, pts):
        pts = np.atleast_2d(pts)
        r = self.angular_radius(space)
        d = angle(pts, self.center)
        out = pts.copy()
        outside = d > r
        if np.any(outside):
            t = r / d[outside]
            out[outside] = slerp(self.center, pts[outside], t)
        return out

    def _in_space(self, space, tol):
        return float(angle(self.center, space.cap_center)) + self.angular_radius(space) <= space.cap_radius + tol


@dataclass(frozen=True, eq=False)
class GeodesicSegment:
    """The geodesic segment ``[a, b]``."""

    a: SpherePoint
    b: SpherePoint

    def __post_init__(self):
        object.__setattr__(self, "a", as_point(self.a))
        object.__setattr__(self, "b", as_point(self.b))

    kind = "segment"

    def _points(self, space, u):
        return slerp(self.a, self.b, u[:, 0])

    def _clip(self, space, u):
        return np.clip(u, 0.0, 1.0)

    def _directions(self, space):
        return np.array([[1.0], [-1.0]])

    def _grid(self, space, grid):
        return np.linspace(0.0, 1.0, grid + 1)[:, None], 1.0 / grid

    def _contains_many(self, space, pts, tol):
        proj = self._project_many(space, pts)
        return angle(pts, proj) * space.scale <= tol

    def _project_many(self, space, pts):
        """Bracketing search on the sign of the derivative of ``<x, gamma(t)>``.

        On an arc shorter than pi/2 the inner product has at most one interior
        critical point, so bisection on the derivative sign brackets it down
        to machine precision.
        """
        pts = np.atleast_2d(pts)
        theta = float(angle(self.a, self.b))
        if theta == 0.0:
            return np.repeat(self.a[None], pts.shape[0], axis=0)
        ca = pts @ self.a
        cb = pts @ self.b

        def slope(t):
            return -np.cos((1.0 - t) * theta) * ca + np.cos(t * theta) * cb

        lo = np.zeros(pts.shape[0])
        hi = np.ones(pts.shape[0])
        interior = (slope(lo) > 0) & (slope(hi) < 0)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            up = slope(mid) > 0
            lo = np.where(up, mid, lo)
            hi = np.where(up, hi, mid)
            if np.all(hi - lo <= 1e-16):
                break
        t_star = 0.5 * (lo + hi)
        # candidates: interior critical point when bracketed, otherwise the better endpoint
        cand_t = np.column_stack([np.zeros_like(t_star), np.ones_like(t_star), t_star])
        cand = slerp(self.a, self.b, cand_t.reshape(-1)).reshape(pts.shape[0], 3, -1)
        scores = np.einsum("ijk,ik->ij", cand, pts)
        scores[~interior, 2] = -np.inf
        best = np.argmax(scores, axis=1)
        return cand[np.arange(pts.shape[0]), best]

    def _in_space(self, space, tol):
        return bool(np.all(space.in_cap(np.vstack([self.a, self.b]), tol)))


@dataclass(frozen=True, eq=False)
class SphericalHull:
    """Closed convex hull of finitely many generators.

    Represented as the central projection of the Euclidean hull of the
    generators, which is exact because the cap lies in an open hemisphere.
    """

    generators: np.ndarray

    def __post_init__(self):
        gens = list(self.generators)
        if len(gens) == 0:
            raise EmptyGeneratorListError("a spherical hull needs at least one generator")
        g = np.vstack([as_point(p) for p in gens])
        g.setflags(write=False)
        object.__setattr__(self, "generators", g)

    kind = "hull"

    def _points(self, space, u):
        v = u @ self.generators
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    def _clip(self, space, u):
        return _project_simplex(u)

    def _directions(self, space):
        k = self.generators.shape[0]
        if k == 1:
            return np.zeros((1, 1))
        eye = np.eye(k)
        moves = [eye[i] - eye[j] for i in range(k) for j in range(k) if i != j]
        pairs = {tuple(m1 + m2) for m1, m2 in combinations(moves, 2) if np.any(m1 + m2)}
        return np.vstack(moves + [np.array(p) for p in sorted(pairs)])

    def _grid(self, space, grid):
        k = self.generators.shape[0]
        m = grid
        while m > 1 and math.comb(m + k - 1, k - 1) > _MAX_HULL_GRID_POINTS:
            m -= 1
        return _compositions(k, m), 1.0 / m

    @cached_property
    def _coordinate_map(self):
        """Pseudo-inverse of the generator matrix when generators are independent, else None."""
        g = self.generators
        if g.shape[0] <= g.shape[1] and np.linalg.matrix_rank(g) == g.shape[0]:
            return np.linalg.pinv(g)
        return None

    def _contains_many(self, space, pts, tol):
        pts = np.atleast_2d(pts)
        g = self.generators
        if self._coordinate_map is not None:
            lam = pts @ self._coordinate_map
            resid = np.linalg.norm(lam @ g - pts, axis=1)
            return (lam.min(axis=1) >= -tol) & (resid <= tol)
        # Dependent generators: fall back on the exact projection. (scipy's
        # nnls is not used here; it can report a zero residual on wide systems.)
        return np.array([float(angle(p, self._project_one(p))) <= tol for p in pts], dtype=bool)

    def _project_one(self, x):
        """Enumerate faces; on each, the best direction is the normalised projection onto its span."""
        g = self.generators
        n1 = g.shape[1]
        best_p, best_a = None, math.inf
        for size in range(1, min(g.shape[0], n1) + 1):
            for s in combinations(range(g.shape[0]), size):
                gs = g[list(s)]
                lam, _, rank, _ = np.linalg.lstsq(gs.T, x, rcond=None)
                if rank < size or lam.min() < -1e-12:
                    continue
                v = np.maximum(lam, 0.0) @ gs
                nv = np.linalg.norm(v)
                if nv == 0.0:
                    continue
                p = v / nv
                a = float(angle(x, p))
                if a < best_a:
                    best_p, best_a = p, a
        return best_p

    def _project_many(self, space, pts):
        pts = np.atleast_2d(pts)
        inside = self._contains_many(space, pts, 0.0)
        out = pts.copy()
        for i in np.flatnonzero(~inside):
            out[i] = self._project_one(pts[i])
        return out

    def _in_space(self, space, tol):
        return bool(np.all(space.in_cap(self.generators, tol)))


ConvexSet = Union[GeodesicBall, GeodesicSegment, SphericalHull]


def check_set_in_space(space: ModelSpace, s: ConvexSet, tol: float = 1e-12) -> None:
    """Raise ``PointOutsideCapError`` unless ``s`` lives in the cap of ``space``."""
    pts = {"ball": lambda: s.center, "segment": lambda: s.a, "hull": lambda: s.generators[0]}[s.kind]()
    if np.asarray(pts).shape[-1] != space.dim + 1:
        raise PointOutsideCapError(f"{s.kind} has points of the wrong dimension for this space")
    if not s._in_space(space, tol):
        raise PointOutsideCapError(f"{s.kind} is not contained in the ambient cap")


def contains(space: ModelSpace, s: ConvexSet, x, tol: float = MEMBER_TOL) -> bool:
    """Membership test at tolerance ``tol``."""
    space.require_in_cap(x)
    return bool(s._contains_many(space, np.asarray(x, dtype=float)[None], tol)[0])


def project(space: ModelSpace, s: ConvexSet, x) -> SpherePoint:
    """Metric projection ``P_C(x)``: the unique nearest point of ``s`` to ``x``."""
    space.require_in_cap(x)
    return s._project_many(space, np.asarray(x, dtype=float)[None])[0]


def project_many(space: ModelSpace, s: ConvexSet, pts) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    space.require_in_cap(pts)
    return s._project_many(space, pts)


def distance_to_set(space: ModelSpace, s: ConvexSet, x) -> float:
    """``d(x, C)``."""
    p = project(space, s, x)
    return float(angle(x, p)) * space.scale


def _refine(space, s, objective, u0, h0, levels=REFINE_LEVELS, accept=None, max_moves=200):
    """Pattern search on the set's coordinates, halving the step ``levels`` times."""
    directions = s._directions(space)
    u = np.asarray(u0, dtype=float)
    f = float(objective(s._points(space, u[None]))[0])
    h = h0
    for _ in range(levels):
        for _ in range(max_moves):
            cand = s._clip(space, u[None] + h * directions)
            pts = s._points(space, cand)
            vals = objective(pts)
            if accept is not None:
                vals = np.where(accept(pts), vals, np.inf)
            k = int(np.argmin(vals))
            if vals[k] < f:
                u, f = cand[k], float(vals[k])
            else:
                break
        h *= 0.5
    return u, f


def oracle_project(space: ModelSpace, s: ConvexSet, x, grid: int = 200) -> SpherePoint:
    """Brute-force nearest point of ``s``: dense grid, then local cell halving.

    Shares no code with :func:`project`; used to certify it.
    """
    if grid < 2:
        raise ValueError("grid must be at least 2")
    space.require_in_cap(x)
    x = np.asarray(x, dtype=float)
    u, h0 = s._grid(space, grid)
    vals = angle(s._points(space, u), x)
    k = int(np.argmin(vals))
    u_best, _ = _refine(space, s, lambda p: angle(p, x), u[k], h0)
    return s._points(space, u_best[None])[0]


def _require_member(space, s, z, tol, what):
    if not contains(space, s, z, tol):
        raise NotInSetError(f"{what} is not in the {s.kind} (tolerance {tol:g})")


def check_projection_inequality(space: ModelSpace, s: ConvexSet, x, z, tol: float = MEMBER_TOL) -> float:
    """Slack ``d(x,z)^2 - d(z,P(x))^2 - c_m d(x,P(x))^2`` for ``z`` in the set."""
    c_m = space.require_c_m()
    _require_member(space, s, z, tol, "z")
    p = project(space, s, x)
    k = space.scale
    dxz = float(angle(x, z)) * k
    dzp = float(angle(z, p)) * k
    dxp = float(angle(x, p)) * k
    return dxz**2 - dzp**2 - c_m * dxp**2


def check_p1_property(space: ModelSpace, s: ConvexSet, x, u, tol: float = MEMBER_TOL) -> float:
    """Slack of property (P1) for ``T = P_C`` with exponent 2 and ``beta = c_m``.

    ``d(x,u)^2 - beta d(Tx,x)^2 - d(Tx,u)^2`` for a fixed point ``u`` of ``T``.
    """
    beta = space.require_c_m()
    _require_member(space, s, u, tol, "u")
    tx = project(space, s, x)
    k = space.scale
    dxu = float(angle(x, u)) * k
    dtx = float(angle(tx, x)) * k
    dtu = float(angle(tx, u)) * k
    return dxu**2 - dtu**2 - beta * dtx**2


class IntersectionOracle:
    """Brute-force ``d(x, A ∩ B)`` without ever representing ``A ∩ B``.

    Each set is sampled on its grid and the samples lying in the other set are
    kept. A query takes the nearest kept sample and refines it locally, only
    accepting points that stay in the other set; the better of the two sweeps
    is returned. The kept samples do not depend on ``x`` and are computed once.

    Raises
    ------
    EmptyIntersectionError
        If no sample of either set lies in the other, even after a refinement
        that drives a sample toward the other set.
    """

    def __init__(self, space: ModelSpace, a: ConvexSet, b: ConvexSet, grid: int = 200,
                 member_tol: float = MEMBER_TOL, fallback_tol: float = FALLBACK_TOL,
                 levels: int = REFINE_LEVELS):
        self.space, self.a, self.b = space, a, b
        self.member_tol = member_tol
        self.levels = levels
        self._sweeps = []
        for s, other in ((a, b), (b, a)):
            u, h0 = s._grid(space, grid)
            pts = s._points(space, u)
            keep = other._contains_many(space, pts, member_tol)
            if np.any(keep):
                accept = self._member_test(other, member_tol)
                self._sweeps.append((s, u[keep], pts[keep], h0, accept))
        if not self._sweeps:
            for s, other in ((a, b), (b, a)):
                seed = self._feasible_seed(s, other, grid, fallback_tol)
                if seed is not None:
                    u, h0 = seed
                    accept = self._violation_test(other, fallback_tol)
                    self._sweeps.append((s, u[None], s._points(space, u[None]), h0, accept))
        if not self._sweeps:
            raise EmptyIntersectionError(
                f"no sample of either set lies in the other at tolerance {fallback_tol:g}"
            )

    def _member_test(self, other, tol):
        return lambda p: other._contains_many(self.space, p, tol)

    def _violation_test(self, other, tol):
        space = self.space

        def accept(p):
            return angle(p, other._project_many(space, p)) * space.scale <= tol

        return accept

    def _feasible_seed(self, s, other, grid, tol):
        space = self.space
        u, h0 = s._grid(space, grid)
        pts = s._points(space, u)

        def violation(p):
            return angle(p, other._project_many(space, p))

        k = int(np.argmin(violation(pts)))
        u_best, f = _refine(space, s, violation, u[k], h0, levels=40)
        if f * space.scale <= tol:
            return u_best, h0
        return None

    def distance(self, x) -> float:
        space = self.space
        x = np.asarray(x, dtype=float)
        space.require_in_cap(x)
        if contains(space, self.a, x, self.member_tol) and contains(space, self.b, x, self.member_tol):
            return 0.0
        best = math.inf
        for s, u, pts, h0, accept in self._sweeps:
            k = int(np.argmin(angle(pts, x)))
            _, f = _refine(space, s, lambda p: angle(p, x), u[k], h0, levels=self.levels, accept=accept)
            best = min(best, f)
        return best * space.scale


def distance_to_intersection(space: ModelSpace, a: ConvexSet, b: ConvexSet, x, grid: int = 200) -> float:
    """Brute-force ``d(x, A ∩ B)``; see :class:`IntersectionOracle`."""
    return IntersectionOracle(space, a, b, grid).distance(x)
