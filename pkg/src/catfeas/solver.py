"""Alternating projections with full trace capture and convergence diagnostics.

The engine itself is :func:`alternate`. Everything else checks a finished
trace against the inequalities that govern the method (Fejér monotonicity,
the projection inequality, the asymptotic-regularity bound, the maximum
inequality and the linear rate under regularity) or estimates the constants
those inequalities need (``c_m`` and the regularity constant ``k``).

Quantities involving ``A ∩ B`` come from the brute-force
:class:`~catfeas.convex_sets.IntersectionOracle`, so checks that use them are
held to an explicit oracle budget instead of a floating-point tolerance.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .convex_sets import (
    GeodesicBall,
    IntersectionOracle,
    ConvexSet,
    contains,
    project_many,
)
from .errors import (
    EmptyTailError,
    InsufficientValidSamplesError,
    MissingIntersectionDistancesError,
    NotInSetError,
    RegularityConstantError,
    TraceTooShortError,
)
from .model_space import ModelSpace, SpherePoint, angle, slerp

log = logging.getLogger(__name__)

EXACT_TOL = 1e-10
MONOTONE_TOL = 1e-12
ORACLE_BUDGET = 1e-4
RATE_BUDGET = 1e-3
ORACLE_TOL = 1e-6
MEMBER_TOL = 1e-9


class StopReason(str, enum.Enum):
    STEP_TOLERANCE = "step-tolerance"
    MAX_ITERATIONS = "max-iterations"


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 10_000
    step_tolerance: float = 1e-10
    record_set_distances: bool = True
    oracle_grid: Optional[int] = None

    def __post_init__(self):
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError("max_iterations must be an integer >= 1")
        if not self.step_tolerance > 0:
            raise ValueError("step_tolerance must be positive")
        if self.oracle_grid is not None and self.oracle_grid < 2:
            raise ValueError("oracle_grid must be at least 2")


@dataclass
class IterationTrace:
    """Iterates ``x_0, x_1, ...`` with odd indices in ``A`` and even ones (>= 2) in ``B``.

    ``step_distances[n]`` is ``d(x_n, x_{n+1})``; the per-iterate distance
    arrays have one entry per iterate.
    """

    iterates: np.ndarray
    step_distances: np.ndarray
    dist_to_a: Optional[np.ndarray]
    dist_to_b: Optional[np.ndarray]
    dist_to_intersection: Optional[np.ndarray]
    stop_reason: StopReason
    set_a: ConvexSet = field(repr=False)
    set_b: ConvexSet = field(repr=False)

    @property
    def final(self) -> SpherePoint:
        return self.iterates[-1]

    def __len__(self):
        return self.iterates.shape[0]


def alternate(space: ModelSpace, a: ConvexSet, b: ConvexSet, x0, cfg: SolverConfig = SolverConfig()) -> IterationTrace:
    """Run ``x_{2m-1} = P_A(x_{2m-2})``, ``x_{2m} = P_B(x_{2m-1})`` from ``x0``.

    Stops once a step taken from ``x_n`` with ``n >= 1`` is shorter than
    ``cfg.step_tolerance``; the very first step is excluded because ``x_0``
    need not belong to either set. Never performs more than
    ``cfg.max_iterations`` projections.
    """
    x = np.asarray(x0, dtype=float)
    space.require_in_cap(x)
    iterates = [x]
    steps = []
    stop = StopReason.MAX_ITERATIONS
    sets = (a, b)
    for n in range(cfg.max_iterations):
        x = project_many(space, sets[n % 2], x[None])[0]
        steps.append(float(angle(iterates[-1], x)) * space.scale)
        iterates.append(x)
        if n >= 1 and steps[-1] < cfg.step_tolerance:
            stop = StopReason.STEP_TOLERANCE
            break
    pts = np.vstack(iterates)
    log.info("alternate: %d projections, stop=%s, last step %.3e", len(steps), stop.value, steps[-1])
    dist_a = dist_b = dist_ab = None
    if cfg.record_set_distances:
        dist_a = angle(pts, project_many(space, a, pts)) * space.scale
        dist_b = angle(pts, project_many(space, b, pts)) * space.scale
        if cfg.oracle_grid is not None:
            oracle = IntersectionOracle(space, a, b, cfg.oracle_grid)
            dist_ab = np.array([oracle.distance(p) for p in pts])
    return IterationTrace(pts, np.asarray(steps), dist_a, dist_b, dist_ab, stop, a, b)


def _check_witnesses(space, trace, witnesses, tol=MEMBER_TOL):
    ws = np.atleast_2d(np.asarray(witnesses, dtype=float))
    for i, w in enumerate(ws):
        if not (contains(space, trace.set_a, w, tol) and contains(space, trace.set_b, w, tol)):
            raise NotInSetError(f"witness {i} is not in A ∩ B (tolerance {tol:g})")
    return ws


def check_fejer(space: ModelSpace, trace: IterationTrace, witnesses) -> float:
    """Smallest ``d(x_n, z) - d(x_{n+1}, z)`` over the trace and witnesses ``z``."""
    ws = _check_witnesses(space, trace, witnesses)
    d = angle(trace.iterates[:, None, :], ws[None, :, :]) * space.scale
    if d.shape[0] < 2:
        return 0.0
    return float(np.min(d[:-1] - d[1:]))


def check_projection_steps(space: ModelSpace, trace: IterationTrace, witnesses) -> float:
    """Smallest slack of ``d(x_{n+1},z)^2 + c_m d(x_n,x_{n+1})^2 <= d(x_n,z)^2`` along the trace."""
    c_m = space.require_c_m()
    ws = _check_witnesses(space, trace, witnesses)
    d = angle(trace.iterates[:, None, :], ws[None, :, :]) * space.scale
    if d.shape[0] < 2:
        return 0.0
    step2 = trace.step_distances[:, None] ** 2
    return float(np.min(d[:-1] ** 2 - d[1:] ** 2 - c_m * step2))


def check_telescoping(space: ModelSpace, trace: IterationTrace, witnesses) -> float:
    """Slack of ``c_m * sum_{i>=1} d(x_i, x_{i+1})^2 <= d(x_1, z)^2`` (worst witness)."""
    c_m = space.require_c_m()
    ws = _check_witnesses(space, trace, witnesses)
    if len(trace) < 2:
        return 0.0
    d1 = angle(ws, trace.iterates[1]) * space.scale
    total = c_m * float(np.sum(trace.step_distances[1:] ** 2))
    return float(np.min(d1**2) - total)


def check_membership(space: ModelSpace, trace: IterationTrace, tol: float = MEMBER_TOL) -> bool:
    """Odd iterates lie in ``A`` and even iterates from ``x_2`` on lie in ``B``."""
    a_ok = trace.set_a._contains_many(space, trace.iterates[1::2], tol)
    b_ok = trace.set_b._contains_many(space, trace.iterates[2::2], tol)
    return bool(np.all(a_ok) and np.all(b_ok))


def rate_bound_n_epsilon(space: ModelSpace, epsilon: float, conservative: bool = False) -> int:
    """Iteration count after which every step is at most ``epsilon``.

    ``floor(D^2 / (4 eps c_m))`` for ``eps < D_kappa`` and 0 otherwise. With
    ``conservative=True`` the denominator uses ``eps**2``, which is what the
    summation argument behind the bound actually yields.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    c_m = space.require_c_m()
    d = space.model_diameter
    if epsilon >= d:
        return 0
    e = epsilon**2 if conservative else epsilon
    return int(math.floor(d**2 / (4.0 * e * c_m)))


@dataclass(frozen=True)
class AsymptoticRegularity:
    epsilon: float
    n_epsilon: int
    n_epsilon_conservative: int
    satisfied_at: int
    steps_monotone: bool
    passed: bool


def _steps_monotone(trace: IterationTrace, tol: float = MONOTONE_TOL) -> bool:
    s = trace.step_distances[1:]
    return bool(np.all(s[1:] <= s[:-1] + tol))


def check_asymptotic_regularity(space: ModelSpace, trace: IterationTrace, epsilon: float) -> AsymptoticRegularity:
    """First index from which every step is at most ``epsilon``, against the bound.

    ``satisfied_at`` is the smallest ``m`` with ``d(x_n, x_{n+1}) <= epsilon``
    for all recorded ``n >= m``. The check passes when it does not exceed the
    conservative bound and the steps from ``x_1`` on are non-increasing.
    """
    n_eps = rate_bound_n_epsilon(space, epsilon)
    n_cons = rate_bound_n_epsilon(space, epsilon, conservative=True)
    steps = trace.step_distances
    above = np.flatnonzero(steps > epsilon)
    if above.size and above[-1] == steps.size - 1:
        if steps.size <= n_cons:
            raise TraceTooShortError(
                f"the trace ends with steps above {epsilon:g} after {steps.size} steps, "
                f"before the bound {n_cons} is reached"
            )
        satisfied_at = steps.size
    else:
        satisfied_at = int(above[-1] + 1) if above.size else 0
    monotone = _steps_monotone(trace)
    return AsymptoticRegularity(epsilon, n_eps, n_cons, satisfied_at, monotone,
                                monotone and satisfied_at <= n_cons)


def _require_intersection(trace):
    if trace.dist_to_intersection is None:
        raise MissingIntersectionDistancesError(
            "intersection distances were not recorded; set record_set_distances and oracle_grid"
        )
    return trace.dist_to_intersection


def record_intersection_distances(space: ModelSpace, trace: IterationTrace, grid: int = 200) -> IterationTrace:
    """Fill in ``dist_to_intersection`` (and the set distances) on a finished trace."""
    pts = trace.iterates
    if trace.dist_to_a is None:
        trace.dist_to_a = angle(pts, project_many(space, trace.set_a, pts)) * space.scale
        trace.dist_to_b = angle(pts, project_many(space, trace.set_b, pts)) * space.scale
    oracle = IntersectionOracle(space, trace.set_a, trace.set_b, grid)
    trace.dist_to_intersection = np.array([oracle.distance(p) for p in pts])
    return trace


def check_max_inequality(space: ModelSpace, trace: IterationTrace, cfg: Optional[SolverConfig] = None) -> float:
    """Smallest slack of ``max{d(x_n,A)^2, d(x_n,B)^2} <= (D_n^2 - D_{n+1}^2) / c_m``.

    ``D_n`` is the oracle distance to ``A ∩ B``. Evaluated for ``n >= 1``, where
    ``x_n`` already lies in one of the sets. When the trace carries no
    intersection distances they are computed with ``cfg.oracle_grid``.
    """
    c_m = space.require_c_m()
    if trace.dist_to_intersection is None and cfg is not None and cfg.oracle_grid is not None:
        record_intersection_distances(space, trace, cfg.oracle_grid)
    dab = _require_intersection(trace)
    if trace.dist_to_a is None or trace.dist_to_b is None:
        raise MissingIntersectionDistancesError("set distances were not recorded")
    if len(trace) < 3:
        return 0.0
    lhs = np.maximum(trace.dist_to_a, trace.dist_to_b)[1:-1] ** 2
    rhs = (dab[1:-1] ** 2 - dab[2:] ** 2) / c_m
    return float(np.min(rhs - lhs))


@dataclass(frozen=True)
class FejerClosureReport:
    cauchy_min_slack: float
    monotone_min_slack: float
    passed: bool


def check_fejer_closure_properties(space: ModelSpace, trace: IterationTrace, witnesses,
                                   budget: float = ORACLE_BUDGET, max_pairs: int = 20_000) -> FejerClosureReport:
    """Cauchy bound ``d(x_{n+k}, x_n) <= 2 d(x_n, A ∩ B)`` and monotone ``d(x_n, A ∩ B)``."""
    _check_witnesses(space, trace, witnesses)
    dab = _require_intersection(trace)
    pts = trace.iterates
    m = len(pts)
    idx = np.arange(m)
    if m * m > max_pairs:
        idx = np.unique(np.linspace(0, m - 1, int(math.sqrt(max_pairs))).astype(int))
    sub = pts[idx]
    d = angle(sub[:, None, :], sub[None, :, :]) * space.scale
    later = idx[None, :] > idx[:, None]
    bound = 2.0 * dab[idx][:, None] - d
    cauchy = float(np.min(bound[later])) if np.any(later) else 0.0
    mono = float(np.min(dab[:-1] - dab[1:])) if m > 1 else 0.0
    return FejerClosureReport(cauchy, mono, cauchy >= -budget and mono >= -budget)


# -- convexity constant -----------------------------------------------------

_DENOM_FLOOR = 1e-12
_REFINE_DENOM_FLOOR = 1e-6
C_M_SAFETY = 1e-5


def convexity_constants(space: ModelSpace, x, y, z, t) -> np.ndarray:
    """Per-sample largest constant for which the convexity inequality holds.

    Samples with ``t(1-t)d(x,y)^2 <= 1e-12`` are dropped.
    """
    x, y, z = (np.atleast_2d(np.asarray(v, dtype=float)) for v in (x, y, z))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    k = space.scale
    dxy = angle(x, y) * k
    den = t * (1.0 - t) * dxy**2
    ok = den > _DENOM_FLOOR
    if np.count_nonzero(ok) < 10:
        raise InsufficientValidSamplesError(
            f"only {np.count_nonzero(ok)} samples have a usable denominator; need at least 10"
        )
    x, y, z, t, den = x[ok], y[ok], z[ok], t[ok], den[ok]
    g = slerp(x, y, t)
    num = (1.0 - t) * (angle(z, x) * k) ** 2 + t * (angle(z, y) * k) ** 2 - (angle(z, g) * k) ** 2
    return num / den


def _cap_chart(space):
    basis = space.tangent_basis()
    c = space.cap_center
    r = space.cap_radius
    n = space.dim

    def to_point(u):
        nu = np.linalg.norm(u)
        if nu > r:
            u = u * (r / nu)
            nu = r
        if nu == 0.0:
            return c.copy()
        p = math.cos(nu) * c + math.sin(nu) * (u @ basis) / nu
        return p / np.linalg.norm(p)

    def to_coords(p):
        rho = float(angle(p, c))
        v = (p - math.cos(rho) * c) @ basis.T
        nv = np.linalg.norm(v)
        return np.zeros(n) if nv == 0.0 else v * (rho / nv)

    return to_point, to_coords


def _refine_c_m(space, x, y, z, t):
    """Nelder-Mead descent on one sample, keeping the denominator away from round-off."""
    n = space.dim
    to_point, to_coords = _cap_chart(space)
    k = space.scale

    def objective(p):
        xp, yp, zp = to_point(p[:n]), to_point(p[n:2 * n]), to_point(p[2 * n:3 * n])
        tt = min(max(p[-1], 1e-6), 1.0 - 1e-6)
        dxy = float(angle(xp, yp)) * k
        den = tt * (1.0 - tt) * dxy**2
        if den <= _REFINE_DENOM_FLOOR:
            return 10.0
        g = slerp(xp, yp, tt)
        num = ((1.0 - tt) * (float(angle(zp, xp)) * k) ** 2 + tt * (float(angle(zp, yp)) * k) ** 2
               - (float(angle(zp, g)) * k) ** 2)
        return num / den

    p0 = np.concatenate([to_coords(x), to_coords(y), to_coords(z), [t]])
    best = objective(p0)
    for _ in range(3):
        res = minimize(objective, p0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxfev": 4000, "maxiter": 4000})
        p0 = res.x
        best = min(best, float(res.fun))
    return best


@lru_cache(maxsize=64)
def _estimate_c_m_cached(kappa, dim, center, radius, samples, seed, refine_starts):
    space = ModelSpace(kappa, dim, np.array(center), radius)
    rng = np.random.default_rng(seed)
    x = space.sample(rng, samples)
    y = space.sample(rng, samples)
    z = space.sample(rng, samples)
    t = rng.uniform(0.0, 1.0, size=samples)
    k = space.scale
    den = t * (1.0 - t) * (angle(x, y) * k) ** 2
    keep = den > _DENOM_FLOOR
    c = convexity_constants(space, x, y, z, t)
    best = float(np.min(c))
    x, y, z, t = x[keep], y[keep], z[keep], t[keep]
    for i in np.argsort(c, kind="stable")[:refine_starts]:
        best = min(best, _refine_c_m(space, x[i], y[i], z[i], t[i]))
    log.debug("estimate_c_m: sampled min %.6g, refined %.6g", float(np.min(c)), best)
    return float(min(1.0, max(best - C_M_SAFETY, 1e-12)))


def estimate_c_m(space: ModelSpace, samples: int = 10_000, seed: int = 0, refine_starts: int = 3) -> float:
    """Empirical infimum of the convexity constant over the cap.

    Draws ``(x, y, z, t)`` uniformly from cap^3 x [0, 1], takes the smallest
    per-sample constant, then polishes the ``refine_starts`` worst samples with
    a deterministic Nelder-Mead descent. Uniform sampling alone rarely reaches
    the extremal configurations (points on opposite sides of the cap rim), so
    the polish matters on large caps. A margin of ``1e-5`` is subtracted and
    the result is clamped to (0, 1]. Deterministic for a given seed.
    """
    if samples < 100:
        raise ValueError("estimate_c_m needs at least 100 samples")
    return _estimate_c_m_cached(space.kappa, space.dim, tuple(space.cap_center.tolist()),
                                space.cap_radius, int(samples), int(seed), int(refine_starts))


def ensure_c_m(space: ModelSpace, samples: int = 10_000, seed: int = 0) -> ModelSpace:
    """Return ``space`` with ``c_m`` filled in by :func:`estimate_c_m` when missing."""
    if space.c_m is not None:
        return space
    return space.with_c_m(estimate_c_m(space, samples, seed))


def check_convexity_resample(space: ModelSpace, samples: int = 100_000, seed: int = 1) -> float:
    """Smallest convexity-inequality slack on fresh uniform samples, using ``space.c_m``."""
    c_m = space.require_c_m()
    rng = np.random.default_rng(seed)
    x = space.sample(rng, samples)
    y = space.sample(rng, samples)
    z = space.sample(rng, samples)
    t = rng.uniform(0.0, 1.0, size=samples)
    k = space.scale
    g = slerp(x, y, t)
    rhs = (1.0 - t) * (angle(z, x) * k) ** 2 + t * (angle(z, y) * k) ** 2 - c_m * t * (1.0 - t) * (angle(x, y) * k) ** 2
    return float(np.min(rhs - (angle(z, g) * k) ** 2))


# -- regularity and linear rate ----------------------------------------------

@dataclass(frozen=True)
class RegularityEstimate:
    k_hat: float
    sample_count: int
    worst_point: Optional[SpherePoint]


def estimate_regularity_k(space: ModelSpace, a: ConvexSet, b: ConvexSet, samples: int = 1000,
                          seed: int = 0, grid: int = 200) -> RegularityEstimate:
    """Largest sampled ratio ``d(x, A ∩ B) / max{d(x, A), d(x, B)}`` over the cap.

    Points whose denominator is below ``1e-8`` are skipped.
    """
    oracle = IntersectionOracle(space, a, b, grid)
    rng = np.random.default_rng(seed)
    pts = space.sample(rng, samples)
    da = angle(pts, project_many(space, a, pts)) * space.scale
    db = angle(pts, project_many(space, b, pts)) * space.scale
    den = np.maximum(da, db)
    k_hat, worst, used = 1.0, None, 0
    for p, d in zip(pts, den):
        if d < 1e-8:
            continue
        used += 1
        ratio = oracle.distance(p) / d
        if ratio > k_hat or worst is None:
            k_hat, worst = max(k_hat, ratio), p
    return RegularityEstimate(float(k_hat), used, worst)


@dataclass(frozen=True)
class LinearRate:
    observed: float
    theoretical: float
    passed: bool


def check_linear_rate(space: ModelSpace, trace: IterationTrace, k: float,
                      oracle_tol: float = ORACLE_TOL, budget: float = RATE_BUDGET) -> LinearRate:
    """Observed per-step contraction of ``d(x_n, A ∩ B)`` against ``sqrt(1 - c_m / k^2)``.

    Only steps ``n >= 1`` whose new distance exceeds ``oracle_tol`` count; with
    no such step the observed rate is 0.
    """
    c_m = space.require_c_m()
    if k < math.sqrt(c_m):
        raise RegularityConstantError(f"k = {k!r} is below sqrt(c_m) = {math.sqrt(c_m)!r}")
    dab = _require_intersection(trace)
    theoretical = math.sqrt(1.0 - c_m / k**2)
    num, den = dab[2:], dab[1:-1]
    use = num > oracle_tol
    observed = float(np.max(num[use] / den[use])) if np.any(use) else 0.0
    return LinearRate(observed, theoretical, observed <= theoretical + budget)


# -- asymptotic centre ---------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticCenter:
    center: SpherePoint
    radius: float


def _enclosing_cap_center(points: np.ndarray, start: np.ndarray) -> Optional[np.ndarray]:
    """Centre of the smallest cap holding ``points``.

    Minimises ``|w|^2`` subject to ``<w, q> >= 1`` for every point ``q``; the
    centre is ``w / |w|`` and ``1 / |w|`` is the cosine of the cap radius. The
    quadratic program is solved with SLSQP from a feasible start.
    """
    lo = float(np.min(points @ start))
    if lo <= 0:
        return None
    res = minimize(lambda w: w @ w, start / lo, jac=lambda w: 2.0 * w, method="SLSQP",
                   constraints=[{"type": "ineq", "fun": lambda w: points @ w - 1.0, "jac": lambda w: points}],
                   options={"ftol": 1e-16, "maxiter": 500})
    w = res.x
    nw = np.linalg.norm(w)
    return w / nw if nw > 0 and np.all(np.isfinite(w)) else None


def asymptotic_center(space: ModelSpace, points, tail_start: int = 0, grid: int = 32) -> AsymptoticCenter:
    """Minimiser of ``x -> max_{n >= tail_start} d(x, x_n)`` over the cap.

    A polar grid over the cap gives a starting incumbent; the minimiser is then
    computed exactly as the centre of the smallest enclosing cap of the tail.
    Grid ties break to the lowest index.
    """
    if grid < 8:
        raise ValueError("grid must be at least 8")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if tail_start >= pts.shape[0] or tail_start < 0:
        raise EmptyTailError(f"tail_start {tail_start} leaves no points out of {pts.shape[0]}")
    tail = np.unique(pts[tail_start:], axis=0)
    cap = GeodesicBall(space.cap_center, space.cap_radius * space.scale)
    u, _ = cap._grid(space, grid)
    cand = cap._points(space, u)
    radii = np.max(angle(cand[:, None, :], tail[None, :, :]), axis=1)
    k = int(np.argmin(radii))
    best, best_r = cand[k], float(radii[k])
    exact = _enclosing_cap_center(tail, best)
    if exact is not None and bool(space.in_cap(exact)):
        r = float(np.max(angle(tail, exact)))
        if r <= best_r:
            best, best_r = exact, r
    return AsymptoticCenter(best, best_r * space.scale)


# -- aggregate report -----------------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    inequality: str
    value: float
    tolerance: float
    passed: bool


@dataclass
class DiagnosticsReport:
    """Outcome of every check on one trace, plus the constants they used."""

    fejer_min_slack: float
    projection_ineq_min_slack: float
    max_ineq_min_slack: Optional[float]
    asymptotic_regularity: List[dict]
    regularity_constant_k: Optional[float]
    observed_linear_rate: Optional[float]
    theoretical_linear_rate: Optional[float]
    asymptotic_center: SpherePoint
    limit_point: Optional[SpherePoint]
    c_m: float
    convexity_min_slack: float
    telescoping_min_slack: float
    stop_reason: str
    iterations: int
    checks: List[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        def conv(v):
            if isinstance(v, np.ndarray):
                return [float(t) for t in v]
            if isinstance(v, Check):
                return {k: conv(getattr(v, k)) for k in ("name", "inequality", "value", "tolerance", "passed")}
            if isinstance(v, list):
                return [conv(t) for t in v]
            if isinstance(v, dict):
                return {k: conv(t) for k, t in v.items()}
            if isinstance(v, (np.floating, np.integer, np.bool_)):
                return v.item()
            return v

        return {name: conv(getattr(self, name)) for name in self.__dataclass_fields__}


INEQUALITIES = {
    "convexity inequality": "d(z,g(t))^2 <= (1-t) d(z,x)^2 + t d(z,y)^2 - c_M t(1-t) d(x,y)^2",
    "iterate membership": "x_{2m-1} in A, x_{2m} in B",
    "Fejer monotonicity": "d(x_{n+1},z) <= d(x_n,z) for z in A∩B",
    "projection inequality": "d(z,P_C(x))^2 + c_M d(x,P_C(x))^2 <= d(x,z)^2",
    "telescoping bound": "c_M sum_{i>=1} d(x_i,x_{i+1})^2 <= d(x_1,z)^2",
    "asymptotic regularity": "d(x_n,x_{n+1}) <= eps for n >= N(eps); steps non-increasing",
    "maximum inequality": "max{d(x_n,A)^2, d(x_n,B)^2} <= (d(x_n,A∩B)^2 - d(x_{n+1},A∩B)^2) / c_M",
    "linear rate": "d(x_{n+1},A∩B) <= sqrt(1 - c_M/k^2) d(x_n,A∩B)",
    "Fejer closure": "d(x_{n+k},x_n) <= 2 d(x_n,A∩B); d(x_n,A∩B) non-increasing",
    "asymptotic center": "asymptotic centre of the tail equals the limit",
}


def diagnose(space: ModelSpace, a: ConvexSet, b: ConvexSet, x0, witnesses,
             cfg: SolverConfig = SolverConfig(oracle_grid=200), epsilons: Sequence[float] = (1e-2, 1e-3),
             seed: int = 0, c_m_samples: int = 10_000, resample_count: int = 100_000,
             k_samples: int = 1000, k_grid: Optional[int] = None, tail_fraction: float = 0.75):
    """Solve, then run every check. Returns ``(space, trace, report)``.

    ``space.c_m`` is estimated with ``seed`` when missing; a user-supplied value
    is used as given and is itself audited by the convexity resample check.
    """
    space = ensure_c_m(space, c_m_samples, seed)
    c_m = space.c_m
    if cfg.oracle_grid is None or not cfg.record_set_distances:
        cfg = SolverConfig(cfg.max_iterations, cfg.step_tolerance, True, cfg.oracle_grid or 200)
    trace = alternate(space, a, b, x0, cfg)
    checks = []

    def add(name, value, tol, passed=None):
        ok = (value >= -tol) if passed is None else passed
        checks.append(Check(name, INEQUALITIES[name], float(value), float(tol), bool(ok)))

    convex = check_convexity_resample(space, resample_count, seed + 1)
    add("convexity inequality", convex, EXACT_TOL)
    add("iterate membership", 0.0, MEMBER_TOL, check_membership(space, trace))
    fejer = check_fejer(space, trace, witnesses)
    add("Fejer monotonicity", fejer, EXACT_TOL)
    proj = check_projection_steps(space, trace, witnesses)
    add("projection inequality", proj, EXACT_TOL)
    tele = check_telescoping(space, trace, witnesses)
    add("telescoping bound", tele, EXACT_TOL)

    regs = []
    for eps in epsilons:
        try:
            r = check_asymptotic_regularity(space, trace, eps)
        except TraceTooShortError:
            log.warning("trace too short to judge asymptotic regularity at eps=%g", eps)
            continue
        regs.append({"epsilon": eps, "n_epsilon": r.n_epsilon, "n_epsilon_conservative": r.n_epsilon_conservative,
                     "satisfied_at": r.satisfied_at, "steps_monotone": r.steps_monotone, "passed": r.passed})
        add("asymptotic regularity", float(r.n_epsilon_conservative - r.satisfied_at), 0.0, r.passed)

    max_ineq = check_max_inequality(space, trace, cfg)
    add("maximum inequality", max_ineq, ORACLE_BUDGET)

    reg = estimate_regularity_k(space, a, b, k_samples, seed, k_grid or cfg.oracle_grid)
    rate = check_linear_rate(space, trace, max(reg.k_hat, math.sqrt(c_m)))
    add("linear rate", rate.theoretical + RATE_BUDGET - rate.observed, 0.0, rate.passed)

    closure = check_fejer_closure_properties(space, trace, witnesses)
    add("Fejer closure", min(closure.cauchy_min_slack, closure.monotone_min_slack), ORACLE_BUDGET, closure.passed)

    tail_start = int(len(trace) * tail_fraction)
    center = asymptotic_center(space, trace.iterates, min(tail_start, len(trace) - 1))
    limit = None
    if trace.stop_reason == StopReason.STEP_TOLERANCE:
        limit = trace.final
        gap = float(angle(center.center, limit)) * space.scale
        add("asymptotic center", ORACLE_BUDGET - gap, 0.0, gap <= ORACLE_BUDGET)

    report = DiagnosticsReport(
        fejer_min_slack=fejer,
        projection_ineq_min_slack=proj,
        max_ineq_min_slack=max_ineq,
        asymptotic_regularity=regs,
        regularity_constant_k=reg.k_hat,
        observed_linear_rate=rate.observed,
        theoretical_linear_rate=rate.theoretical,
        asymptotic_center=center.center,
        limit_point=limit,
        c_m=c_m,
        convexity_min_slack=convex,
        telescoping_min_slack=tele,
        stop_reason=trace.stop_reason.value,
        iterations=len(trace) - 1,
        checks=checks,
    )
    return space, trace, report
