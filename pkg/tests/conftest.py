import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from catfeas.model_space import ModelSpace
from catfeas.scenarios import paper_example
from catfeas.solver import SolverConfig, alternate, ensure_c_m

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

NORTH = np.array([0.0, 0.0, 1.0])


def cap_space(radius=0.75, kappa=1.0, dim=2, c_m=None):
    center = np.zeros(dim + 1)
    center[-1] = 1.0
    return ModelSpace(kappa, dim, center, radius, c_m)


def exact_c_m(radius):
    """Infimum of the convexity constant on a cap of angular radius ``radius`` (kappa = 1)."""
    return 2 * radius / math.tan(2 * radius)


@pytest.fixture(scope="session")
def paper():
    return paper_example()


@pytest.fixture(scope="session")
def paper_space(paper):
    return ensure_c_m(paper.space)


@pytest.fixture(scope="session")
def paper_trace(paper, paper_space):
    cfg = SolverConfig(step_tolerance=1e-10, oracle_grid=200)
    return alternate(paper_space, paper.set_a, paper.set_b, paper.x0, cfg)


def random_set(rng, space, kind):
    """A random convex set of the given kind that fits inside ``space``'s cap."""
    from catfeas.convex_sets import GeodesicBall, GeodesicSegment, SphericalHull

    if kind == "ball":
        r = rng.uniform(0.02, 0.3)
        inner = ModelSpace(space.kappa, space.dim, space.cap_center, space.cap_radius - r)
        return GeodesicBall(inner.sample(rng, 1)[0], r * space.scale)
    if kind == "segment":
        a, b = space.sample(rng, 2)
        return GeodesicSegment(a, b)
    return SphericalHull(space.sample(rng, int(rng.integers(3, 5))))


def random_members(rng, space, s, count):
    """Points of ``s`` drawn from a simple parametrisation (not uniform)."""
    from catfeas.convex_sets import GeodesicBall, GeodesicSegment
    from catfeas.model_space import slerp

    if isinstance(s, GeodesicBall):
        ball = ModelSpace(1.0, space.dim, s.center, max(s.angular_radius(space), 1e-9))
        return ball.sample(rng, count)
    if isinstance(s, GeodesicSegment):
        return slerp(s.a, s.b, rng.uniform(0, 1, count))
    w = rng.dirichlet(np.ones(s.generators.shape[0]), count)
    v = w @ s.generators
    return v / np.linalg.norm(v, axis=1, keepdims=True)
