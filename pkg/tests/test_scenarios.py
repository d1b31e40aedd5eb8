import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from catfeas.convex_sets import contains
from catfeas.errors import InfeasibleOverlapError, InvariantViolationError, NotUnitVectorError
from catfeas.model_space import MAX_CAP_RADIUS, angle
from catfeas.scenarios import (
    Su2Element,
    paper_example,
    phi_embed,
    phi_extract,
    random_ball_pair,
    su2_distance,
)
from catfeas.solver import SolverConfig, StopReason, alternate

S2, S3 = math.sqrt(2), math.sqrt(3)


def test_phi_embed_matrices():
    np.testing.assert_array_equal(phi_embed(0, 0, 1).matrix, [[0, 1j], [1j, 0]])
    m2 = phi_embed(0.5, 0, S3 / 2).matrix
    np.testing.assert_allclose(m2, [[0.5, 1j * S3 / 2], [1j * S3 / 2, 0.5]], atol=0)
    m4 = phi_embed(1 / 3, 0, 2 * S2 / 3).matrix
    np.testing.assert_allclose(m4, [[1 / 3, 2j * S2 / 3], [2j * S2 / 3, 1 / 3]], atol=0)


def test_phi_matrices_are_special_unitary():
    m = phi_embed(2 / 3, 1 / 3, 2 / 3).matrix
    np.testing.assert_allclose(m.conj().T @ m, np.eye(2), atol=1e-15)
    assert np.linalg.det(m) == pytest.approx(1.0, abs=1e-15)


def test_phi_extract_examples():
    np.testing.assert_array_equal(phi_extract(np.array([[0, 1j], [1j, 0]])), [0, 0, 1])
    m6 = phi_embed(2 / 3, 2 / 3, 1 / 3)
    np.testing.assert_array_equal(phi_extract(m6), [2 / 3, 2 / 3, 1 / 3])
    np.testing.assert_array_equal(phi_extract(m6.matrix), [2 / 3, 2 / 3, 1 / 3])


def test_phi_rejects_bad_inputs():
    with pytest.raises(NotUnitVectorError):
        phi_embed(1, 1, 0)
    with pytest.raises(InvariantViolationError):
        phi_extract(np.array([[1j, 0], [0, -1j]]))
    with pytest.raises(InvariantViolationError):
        phi_extract(np.eye(2) * 2)
    with pytest.raises(InvariantViolationError):
        Su2Element(1.0, 1.0, 0.0)


def test_phi_round_trip_random():
    pts = np.random.default_rng(0).normal(size=(100, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    for p in pts:
        q = phi_extract(phi_embed(*p))
        np.testing.assert_array_equal(q, p)
        np.testing.assert_array_equal(phi_extract(phi_embed(*p).matrix), p)


@given(st.integers(0, 2**31 - 1))
def test_phi_preserves_distance(seed):
    p, q = np.random.default_rng(seed).normal(size=(2, 3))
    p /= np.linalg.norm(p)
    q /= np.linalg.norm(q)
    assert su2_distance(phi_embed(*p), phi_embed(*q)) == pytest.approx(float(angle(p, q)), abs=1e-7)


def test_paper_example_geometry():
    sc = paper_example()
    assert sc.space.kappa == 1.0
    assert sc.space.cap_radius < MAX_CAP_RADIUS
    gens = np.vstack([sc.set_a.generators, sc.set_b.generators])
    assert np.max(angle(gens[:, None], gens[None])) < math.pi / 2
    w = sc.witnesses[0]
    np.testing.assert_allclose(w, [1 / 3, 0, 2 * S2 / 3], atol=1e-15)
    assert contains(sc.space, sc.set_a, w, 1e-12) and contains(sc.space, sc.set_b, w, 1e-12)
    np.testing.assert_allclose(sc.x0, [0, 0.5, S3 / 2], atol=1e-15)
    assert not contains(sc.space, sc.set_b, sc.x0, 1e-6)


def test_paper_example_solves():
    sc = paper_example()
    tr = alternate(sc.space, sc.set_a, sc.set_b, sc.x0, SolverConfig(step_tolerance=1e-10))
    assert tr.stop_reason is StopReason.STEP_TOLERANCE
    assert tr.dist_to_a[-1] <= 1e-8 and tr.dist_to_b[-1] <= 1e-8
    for x in tr.iterates:
        np.testing.assert_array_equal(phi_extract(phi_embed(*x)), x)


@given(st.integers(0, 2**31 - 1), st.floats(1e-6, 0.3))
def test_ball_pair_witness(seed, overlap):
    sc = random_ball_pair(seed, overlap)
    w = sc.witnesses[0]
    assert contains(sc.space, sc.set_a, w, 1e-12) and contains(sc.space, sc.set_b, w, 1e-12)
    assert sc.space.in_cap(sc.x0)


def test_ball_pair_is_seeded():
    a, b = random_ball_pair(7), random_ball_pair(7)
    np.testing.assert_array_equal(a.x0, b.x0)
    np.testing.assert_array_equal(a.set_a.center, b.set_a.center)


def test_concentric_ball_pair_gives_constant_trace():
    sc = random_ball_pair(1, overlap=1.0)
    small = min(sc.set_a, sc.set_b, key=lambda s: s.radius)
    x0 = sc.witnesses[0]
    assert float(angle(sc.set_a.center, sc.set_b.center)) == 0.0
    tr = alternate(sc.space, sc.set_a, sc.set_b, x0, SolverConfig())
    assert contains(sc.space, small, x0)
    assert len(tr) == 3 and np.all(tr.iterates == x0)


def test_near_tangent_ball_pair_terminates():
    sc = random_ball_pair(2, overlap=1e-6)
    tr = alternate(sc.space, sc.set_a, sc.set_b, sc.x0, SolverConfig(max_iterations=5000))
    assert tr.stop_reason in (StopReason.STEP_TOLERANCE, StopReason.MAX_ITERATIONS)
    assert len(tr) <= 5001


def test_ball_pair_rejects_bad_overlap():
    with pytest.raises(InfeasibleOverlapError):
        random_ball_pair(0, overlap=0.0)
