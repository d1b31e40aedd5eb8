"""Canonical problem instances.

``paper_example`` is the two-triangle problem on S^2 that is carried into
SU(2) by ``phi_embed``; ``random_ball_pair`` builds ball pairs around a known
common point for property tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .convex_sets import ConvexSet, GeodesicBall, SphericalHull, contains
from .errors import InfeasibleOverlapError, InvariantViolationError, NotUnitVectorError
from .model_space import MAX_CAP_RADIUS, ModelSpace, SpherePoint, angle, as_point

EMBED_TOL = 1e-9
SU2_TOL = 1e-12


@dataclass(frozen=True)
class Su2Element:
    """Special unitary matrix ``[[x, -y+iz], [y+iz, x]]`` with real diagonal."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if abs(self.x**2 + self.y**2 + self.z**2 - 1.0) > EMBED_TOL:
            raise InvariantViolationError(
                f"x^2 + y^2 + z^2 = {self.x**2 + self.y**2 + self.z**2!r} is not 1"
            )

    @property
    def matrix(self) -> np.ndarray:
        b = complex(self.y, self.z)
        return np.array([[self.x, -b.conjugate()], [b, self.x]], dtype=complex)

    @property
    def determinant(self) -> float:
        return self.x**2 + self.y**2 + self.z**2


def phi_embed(x: float, y: float, z: float) -> Su2Element:
    norm2 = x * x + y * y + z * z
    if not all(map(math.isfinite, (x, y, z))) or abs(norm2 - 1.0) > EMBED_TOL:
        raise NotUnitVectorError(f"({x}, {y}, {z}) is not on the unit sphere")
    return Su2Element(float(x), float(y), float(z))


def phi_extract(m) -> SpherePoint:
    """Inverse of :func:`phi_embed`. Accepts an ``Su2Element`` or a 2x2 complex array."""
    if isinstance(m, Su2Element):
        return np.array([m.x, m.y, m.z])
    a = np.asarray(m, dtype=complex)
    if a.shape != (2, 2):
        raise InvariantViolationError(f"expected a 2x2 matrix, got shape {a.shape}")
    x = a[0, 0]
    b = a[1, 0]
    if (abs(x.imag) > SU2_TOL or abs(a[1, 1] - x) > SU2_TOL
            or abs(a[0, 1] + b.conjugate()) > SU2_TOL):
        raise InvariantViolationError("matrix is not of the form [[x, -y+iz], [y+iz, x]]")
    p = np.array([x.real, b.real, b.imag])
    if abs(p @ p - 1.0) > SU2_TOL:
        raise InvariantViolationError(f"determinant {p @ p!r} is not 1")
    return p


def su2_inner(m1: Su2Element, m2: Su2Element) -> float:
    """Real inner product ``Re tr(m1^H m2) / 2`` on SU(2) viewed inside R^4."""
    return float(np.real(np.trace(m1.matrix.conj().T @ m2.matrix)) / 2.0)


def su2_distance(m1: Su2Element, m2: Su2Element) -> float:
    """Great-circle distance on S^3 between two elements."""
    return float(math.acos(max(-1.0, min(1.0, su2_inner(m1, m2)))))


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    space: ModelSpace
    set_a: ConvexSet
    set_b: ConvexSet
    x0: SpherePoint
    witnesses: Tuple[SpherePoint, ...]

    def __post_init__(self):
        for i, w in enumerate(self.witnesses):
            if not (contains(self.space, self.set_a, w) and contains(self.space, self.set_b, w)):
                raise InvariantViolationError(f"witness {i} is not in A ∩ B")


TRIANGLE_A = ((0.0, 0.0, 1.0), (0.5, 0.0, math.sqrt(3) / 2), (0.0, 0.5, math.sqrt(3) / 2))
TRIANGLE_B = ((1 / 3, 0.0, 2 * math.sqrt(2) / 3), (2 / 3, 1 / 3, 2 / 3), (2 / 3, 2 / 3, 1 / 3))
CAP_MARGIN = 0.05


def paper_example() -> ScenarioSpec:
    """Two spherical triangles on S^2 that share the vertex-on-edge point (1/3, 0, 2*sqrt(2)/3).

    The cap is centred at the normalised mean of the six generators with
    radius 0.05 beyond the farthest one. The start point is the generator
    (0, 1/2, sqrt(3)/2) of ``A``, which lies outside ``B``.
    """
    gens = np.array(TRIANGLE_A + TRIANGLE_B)
    center = gens.mean(axis=0)
    center /= np.linalg.norm(center)
    radius = float(np.max(angle(gens, center))) + CAP_MARGIN
    if radius >= MAX_CAP_RADIUS:
        raise InvariantViolationError(f"generators need a cap of radius {radius:.6g} >= pi/4")
    space = ModelSpace(1.0, 2, center, radius)
    witness = as_point(TRIANGLE_B[0])
    return ScenarioSpec("paper-su2", space, SphericalHull(TRIANGLE_A), SphericalHull(TRIANGLE_B),
                        as_point(TRIANGLE_A[2]), (witness,))


def random_ball_pair(seed: int, overlap: float = 0.05, dim: int = 2, cap_radius: float = 0.75) -> ScenarioSpec:
    """Two geodesic balls that both contain a designated witness ``w``.

    Radii are drawn from [0.1, 0.25] and each centre sits at distance
    ``max(r - overlap, 0)`` from ``w``, so ``w`` is inside both balls with a
    margin of at least ``overlap``. An overlap at or beyond the radii makes
    the balls concentric. The start point is uniform in the cap.
    """
    if not (overlap > 0 and math.isfinite(overlap)):
        raise InfeasibleOverlapError(f"overlap must be positive, got {overlap!r}")
    if cap_radius < 0.7:
        raise InfeasibleOverlapError("cap_radius must be at least 0.7 to fit the balls")
    rng = np.random.default_rng(seed)
    center = np.zeros(dim + 1)
    center[-1] = 1.0
    space = ModelSpace(1.0, dim, center, cap_radius)
    inner = ModelSpace(1.0, dim, center, 0.15)
    w = inner.sample(rng, 1)[0]
    basis = _tangent_at(w)
    balls = []
    for _ in range(2):
        r = float(rng.uniform(0.1, 0.25))
        offset = max(r - overlap, 0.0)
        v = rng.normal(size=dim) @ basis
        v /= np.linalg.norm(v)
        c = math.cos(offset) * w + math.sin(offset) * v
        balls.append(GeodesicBall(c / np.linalg.norm(c), r))
    x0 = space.sample(rng, 1)[0]
    return ScenarioSpec(f"ball-pair-{seed}", space, balls[0], balls[1], x0, (w,))


def _tangent_at(p):
    q, _ = np.linalg.qr(np.column_stack([p, np.eye(p.size)]))
    return q[:, 1:].T


BUILTIN = {
    "paper-su2": lambda seed=0: paper_example(),
    "ball-pair": lambda seed=0: random_ball_pair(seed),
}
