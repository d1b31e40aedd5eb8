import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from catfeas.convex_sets import GeodesicBall, IntersectionOracle, contains, distance_to_set
from catfeas.errors import (
    EmptyTailError,
    InsufficientValidSamplesError,
    MissingCMError,
    MissingIntersectionDistancesError,
    NotInSetError,
    RegularityConstantError,
    TraceTooShortError,
)
from catfeas.model_space import angle, slerp
from catfeas.scenarios import random_ball_pair
from catfeas.solver import (
    SolverConfig,
    StopReason,
    alternate,
    asymptotic_center,
    check_asymptotic_regularity,
    check_convexity_resample,
    check_fejer,
    check_fejer_closure_properties,
    check_linear_rate,
    check_max_inequality,
    check_membership,
    check_projection_steps,
    check_telescoping,
    convexity_constants,
    diagnose,
    estimate_c_m,
    estimate_regularity_k,
    rate_bound_n_epsilon,
)

from conftest import NORTH, cap_space, exact_c_m

seeds = st.integers(0, 2**31 - 1)
ORACLE = SolverConfig(oracle_grid=120)


def concentric():
    sp = cap_space(0.75, c_m=0.1)
    return sp, GeodesicBall(NORTH, 0.3), GeodesicBall(NORTH, 0.2)


def test_start_in_intersection_gives_constant_trace():
    sp, a, b = concentric()
    x0 = np.array([0.1, 0, math.sqrt(0.99)])
    tr = alternate(sp, a, b, x0, ORACLE)
    assert tr.stop_reason is StopReason.STEP_TOLERANCE
    assert len(tr) == 3
    assert np.all(tr.iterates == x0)
    assert np.all(tr.dist_to_intersection == 0)


def test_paper_example_converges(paper, paper_trace):
    tr = paper_trace
    assert tr.stop_reason is StopReason.STEP_TOLERANCE
    assert tr.step_distances[-1] < 1e-10
    x = tr.final
    assert distance_to_set(paper.space, paper.set_a, x) <= 1e-8
    assert distance_to_set(paper.space, paper.set_b, x) <= 1e-8
    assert check_membership(paper.space, tr)


def test_max_iterations_is_respected(paper):
    tr = alternate(paper.space, paper.set_a, paper.set_b, paper.x0, SolverConfig(max_iterations=3))
    assert tr.stop_reason is StopReason.MAX_ITERATIONS
    assert len(tr) == 4
    assert tr.dist_to_intersection is None


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(max_iterations=0)
    with pytest.raises(ValueError):
        SolverConfig(step_tolerance=0.0)


@given(seeds, st.floats(1e-3, 0.2))
def test_ball_pair_trace_invariants(seed, overlap):
    sc = random_ball_pair(seed, overlap)
    sp = sc.space.with_c_m(exact_c_m(sc.space.cap_radius) - 1e-9)
    tr = alternate(sp, sc.set_a, sc.set_b, sc.x0, SolverConfig(max_iterations=2000))
    assert check_membership(sp, tr)
    assert check_fejer(sp, tr, sc.witnesses) >= -1e-10
    assert check_projection_steps(sp, tr, sc.witnesses) >= -1e-10
    assert check_telescoping(sp, tr, sc.witnesses) >= -1e-10
    s = tr.step_distances[1:]
    assert np.all(s[1:] <= s[:-1] + 1e-12)
    if tr.stop_reason is StopReason.STEP_TOLERANCE:
        assert tr.step_distances[-1] < 1e-10


def test_fejer_rejects_bad_witness(paper, paper_space, paper_trace):
    with pytest.raises(NotInSetError):
        check_fejer(paper_space, paper_trace, [NORTH])


def test_fejer_constant_trace():
    sp, a, b = concentric()
    x0 = np.array([0.1, 0, math.sqrt(0.99)])
    tr = alternate(sp, a, b, x0, ORACLE)
    assert check_fejer(sp, tr, [NORTH, x0]) == 0.0
    assert check_max_inequality(sp, tr) == 0.0
    rep = check_fejer_closure_properties(sp, tr, [NORTH])
    assert rep.cauchy_min_slack == 0.0 and rep.monotone_min_slack == 0.0 and rep.passed


def test_rate_bound_examples():
    sp = cap_space(0.5, c_m=0.5)
    assert rate_bound_n_epsilon(sp, 0.1) == 49
    assert rate_bound_n_epsilon(sp, 0.1, conservative=True) == 493
    assert rate_bound_n_epsilon(sp, math.pi) == 0
    assert rate_bound_n_epsilon(sp, 4.0) == 0
    with pytest.raises(ValueError):
        rate_bound_n_epsilon(sp, 0.0)
    with pytest.raises(MissingCMError):
        rate_bound_n_epsilon(cap_space(0.5), 0.1)


def test_rate_bound_scales_with_curvature():
    # D_kappa = pi / 2 for kappa = 4
    sp = cap_space(0.5, kappa=4.0, c_m=0.5)
    assert rate_bound_n_epsilon(sp, 0.1) == math.floor((math.pi / 2) ** 2 / 0.2)


def test_asymptotic_regularity_trivial_cases():
    sp, a, b = concentric()
    tr = alternate(sp, a, b, [0.1, 0, math.sqrt(0.99)])
    for eps in (1.0, 1e-3, 1e-9):
        assert check_asymptotic_regularity(sp, tr, eps).satisfied_at == 0


def test_asymptotic_regularity_paper(paper_space, paper_trace):
    for eps in (1e-2, 1e-3):
        r = check_asymptotic_regularity(paper_space, paper_trace, eps)
        assert r.passed and r.steps_monotone
        assert r.satisfied_at <= r.n_epsilon_conservative
        assert r.n_epsilon <= r.n_epsilon_conservative


def test_asymptotic_regularity_trace_too_short(paper, paper_space):
    tr = alternate(paper_space, paper.set_a, paper.set_b, paper.x0, SolverConfig(max_iterations=2))
    with pytest.raises(TraceTooShortError):
        check_asymptotic_regularity(paper_space, tr, 1e-3)


def test_max_inequality_needs_intersection_distances(paper, paper_space):
    tr = alternate(paper_space, paper.set_a, paper.set_b, paper.x0, SolverConfig())
    with pytest.raises(MissingIntersectionDistancesError):
        check_max_inequality(paper_space, tr)
    # supplying an oracle grid fills them in
    assert check_max_inequality(paper_space, tr, SolverConfig(oracle_grid=200)) >= -1e-4
    assert tr.dist_to_intersection is not None


def test_max_inequality_paper(paper_space, paper_trace):
    assert check_max_inequality(paper_space, paper_trace) >= -1e-4


def test_max_inequality_ball_pair():
    sc = random_ball_pair(3, 0.05)
    sp = sc.space.with_c_m(estimate_c_m(sc.space))
    tr = alternate(sp, sc.set_a, sc.set_b, sc.x0, ORACLE)
    assert check_max_inequality(sp, tr) >= -1e-4
    assert check_fejer_closure_properties(sp, tr, sc.witnesses).passed


def test_estimate_c_m_small_cap():
    c = estimate_c_m(cap_space(0.01), samples=10_000, seed=0)
    assert 0.999 <= c <= 1.0


def test_estimate_c_m_near_limit_cap():
    sp = cap_space(math.pi / 4 - 1e-3)
    c = estimate_c_m(sp)
    assert 0 < c < 1
    assert check_convexity_resample(sp.with_c_m(c), 100_000, seed=11) >= -1e-10


@pytest.mark.parametrize("radius", [0.05, 0.3, 0.6, 0.78])
def test_estimate_c_m_tracks_exact_infimum(radius):
    c = estimate_c_m(cap_space(radius))
    exact = exact_c_m(radius)
    assert exact - 1e-4 <= c <= exact


def test_estimate_c_m_is_deterministic():
    sp = cap_space(0.4)
    assert estimate_c_m(sp, 500, seed=4) == estimate_c_m(cap_space(0.4), 500, seed=4)


def test_estimate_c_m_validates_samples():
    with pytest.raises(ValueError):
        estimate_c_m(cap_space(0.4), samples=50)


def test_convexity_constants_degenerate_samples():
    sp = cap_space(0.4)
    x = np.repeat(NORTH[None], 100, axis=0)
    with pytest.raises(InsufficientValidSamplesError):
        convexity_constants(sp, x, x, x, np.full(100, 0.5))


def test_regularity_same_ball():
    sp = cap_space(0.75)
    a = GeodesicBall([0.1, 0, math.sqrt(0.99)], 0.2)
    reg = estimate_regularity_k(sp, a, a, samples=200, grid=100)
    assert reg.k_hat == pytest.approx(1.0, abs=1e-6)
    assert reg.sample_count > 0


def test_regularity_paper(paper, paper_space):
    reg = estimate_regularity_k(paper_space, paper.set_a, paper.set_b, samples=200)
    assert 1.0 - 1e-9 <= reg.k_hat < 10
    assert contains(paper_space, paper.set_a, paper.set_a.generators[0])


def test_regularity_tangent_balls_is_large():
    sp = cap_space(0.75)
    a = GeodesicBall([math.sin(0.2), 0, math.cos(0.2)], 0.2)
    b = GeodesicBall([-math.sin(0.2), 0, math.cos(0.2)], 0.2)
    reg = estimate_regularity_k(sp, a, b, samples=300, grid=60)
    assert math.isfinite(reg.k_hat) and reg.k_hat > 1.5
    # along the common tangent the ratio behaves like 2r/s
    oracle = IntersectionOracle(sp, a, b, 60)
    ratios = []
    for s in (0.05, 0.02):
        x = np.array([0, math.sin(s), math.cos(s)])
        ratios.append(oracle.distance(x) / max(distance_to_set(sp, a, x), distance_to_set(sp, b, x)))
    assert ratios[0] > 6 and ratios[1] > 15


def test_linear_rate_same_ball():
    sp = cap_space(0.75, c_m=0.1)
    a = GeodesicBall(NORTH, 0.2)
    tr = alternate(sp, a, a, [math.sin(0.5), 0, math.cos(0.5)], ORACLE)
    r = check_linear_rate(sp, tr, 1.0)
    assert r.observed == 0.0
    assert r.theoretical == pytest.approx(math.sqrt(0.9))
    with pytest.raises(RegularityConstantError):
        check_linear_rate(sp, tr, 0.1)
    assert check_linear_rate(sp.with_c_m(1.0), tr, 1.0).theoretical == 0.0


def test_linear_rate_paper(paper, paper_space, paper_trace):
    reg = estimate_regularity_k(paper_space, paper.set_a, paper.set_b, samples=200)
    r = check_linear_rate(paper_space, paper_trace, reg.k_hat)
    assert r.passed and r.observed <= r.theoretical + 1e-3
    assert 0 <= r.theoretical < 1


def test_asymptotic_center_constant_tail():
    sp = cap_space(0.75)
    p = np.array([0.2, 0.1, math.sqrt(0.95)])
    c = asymptotic_center(sp, [p] * 4)
    assert float(angle(c.center, p)) <= 1e-12
    assert c.radius <= 1e-12


@given(seeds, st.integers(1, 6))
def test_asymptotic_center_two_points(seed, reps):
    sp = cap_space(0.75)
    p, q = sp.sample(np.random.default_rng(seed), 2)
    c = asymptotic_center(sp, [p, q] * reps, tail_start=0, grid=16)
    assert float(angle(c.center, slerp(p, q, 0.5))) <= 1e-6
    assert c.radius == pytest.approx(float(angle(p, q)) / 2, abs=1e-6)


def test_asymptotic_center_against_grid_oracle():
    # the exact refinement must beat any grid point
    sp = cap_space(0.75)
    pts = sp.sample(np.random.default_rng(2), 7)
    c = asymptotic_center(sp, pts)
    grid = sp.sample(np.random.default_rng(3), 50_000)
    best = np.min(np.max(angle(grid[:, None, :], pts[None, :, :]), axis=1))
    assert c.radius <= best + 1e-12


def test_asymptotic_center_errors():
    sp = cap_space(0.75)
    with pytest.raises(EmptyTailError):
        asymptotic_center(sp, [NORTH], tail_start=1)
    with pytest.raises(ValueError):
        asymptotic_center(sp, [NORTH], grid=4)


def test_asymptotic_center_paper_tail(paper_space, paper_trace):
    n = len(paper_trace)
    c = asymptotic_center(paper_space, paper_trace.iterates, tail_start=3 * n // 4)
    assert float(angle(c.center, paper_trace.final)) <= 1e-4


def test_fejer_closure_paper(paper, paper_space, paper_trace):
    rep = check_fejer_closure_properties(paper_space, paper_trace, paper.witnesses)
    assert rep.passed
    assert rep.cauchy_min_slack >= -1e-4 and rep.monotone_min_slack >= -1e-4


def test_diagnose_report_is_json_ready(paper):
    _, tr, rep = diagnose(paper.space, paper.set_a, paper.set_b, paper.x0, paper.witnesses,
                          k_samples=100, resample_count=10_000)
    assert rep.passed
    doc = json.loads(json.dumps(rep.to_dict()))
    for key in ("fejer_min_slack", "projection_ineq_min_slack", "max_ineq_min_slack", "asymptotic_regularity",
                "regularity_constant_k", "observed_linear_rate", "theoretical_linear_rate",
                "asymptotic_center", "limit_point"):
        assert key in doc
    assert 0 <= doc["theoretical_linear_rate"] < 1
    assert {c["name"] for c in doc["checks"]} >= {"convexity inequality", "Fejer monotonicity", "linear rate"}


def test_diagnose_flags_overclaimed_c_m(paper):
    sp = paper.space.with_c_m(0.9999)
    _, _, rep = diagnose(sp, paper.set_a, paper.set_b, paper.x0, paper.witnesses,
                         k_samples=50, resample_count=10_000)
    assert not rep.passed
    assert rep.failures[0].name == "convexity inequality"
