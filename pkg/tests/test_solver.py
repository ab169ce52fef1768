import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ghpflex.solver import (
    QuadraticProgram,
    SolverSettings,
    Status,
    polygon_vertices,
    polygonize_disk,
    solve,
)

from oracles import eq_qp_closed_form, lp_vertex_enumeration


def test_active_bound():
    res = solve(QuadraticProgram(1, [[2.0]], [0.0], var_lower=[3.0]))
    assert res.status is Status.OPTIMAL
    assert res.x[0] == pytest.approx(3.0, abs=1e-8)
    assert res.objective_value == pytest.approx(9.0, abs=1e-7)


def test_empty_box_is_infeasible():
    res = solve(QuadraticProgram(1, objective_linear=[0.0], var_lower=[2.0], var_upper=[1.0]))
    assert res.status is Status.INFEASIBLE


def test_contradictory_rows_are_infeasible():
    res = solve(QuadraticProgram(1, ineq_matrix=[[1.0], [-1.0]], ineq_rhs=[1.0, -2.0]))
    assert res.status is Status.INFEASIBLE


def test_infeasible_equalities_against_box():
    qp = QuadraticProgram(
        2,
        objective_linear=[1.0, 1.0],
        eq_matrix=[[1.0, 1.0]],
        eq_rhs=[5.0],
        var_lower=[0.0, 0.0],
        var_upper=[1.0, 1.0],
    )
    res = solve(qp)
    assert res.status is Status.INFEASIBLE


def test_projection_onto_line():
    qp = QuadraticProgram(2, 2 * np.eye(2), [-2.0, -2.0], eq_matrix=[[1.0, 1.0]], eq_rhs=[1.0])
    res = solve(qp)
    assert res.status is Status.OPTIMAL
    np.testing.assert_allclose(res.x, [0.5, 0.5], atol=1e-9)
    # constant 2 dropped from (x-1)^2 + (y-1)^2
    assert res.objective_value + 2.0 == pytest.approx(0.5, abs=1e-9)


def test_unbounded_lp():
    res = solve(QuadraticProgram(1, objective_linear=[-1.0], var_lower=[0.0]))
    assert res.status is Status.UNBOUNDED


def test_iteration_cap_reports_numerical_failure():
    qp = QuadraticProgram(
        2, objective_linear=[-1.0, -1.0], ineq_matrix=[[1.0, 2.0], [3.0, 1.0]], ineq_rhs=[4.0, 6.0],
        var_lower=[0.0, 0.0],
    )
    res = solve(qp, SolverSettings(max_iterations=1))
    assert res.status is Status.NUMERICAL_FAILURE


def test_rejects_indefinite_quadratic():
    with pytest.raises(ValueError, match="PSD"):
        QuadraticProgram(2, np.diag([1.0, -1.0]))


def test_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        QuadraticProgram(2, eq_matrix=[[1.0, 2.0, 3.0]], eq_rhs=[1.0])


def test_optimal_contract_on_random_qp():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = rng.integers(2, 8)
        L = rng.normal(size=(n, n))
        qp = QuadraticProgram(
            n,
            L @ L.T,
            rng.normal(size=n),
            ineq_matrix=rng.normal(size=(4, n)),
            ineq_rhs=rng.uniform(0.5, 2.0, size=4),
            var_lower=-np.ones(n),
            var_upper=np.ones(n),
        )
        res = solve(qp)
        assert res.status is Status.OPTIMAL
        assert res.max_primal_residual <= 1e-8
        assert res.stationarity_residual <= 1e-6


def _random_lp(rng, n):
    m = int(rng.integers(1, 5))
    G = rng.normal(size=(m, n))
    x0 = rng.uniform(-1, 1, size=n)
    h = G @ x0 + rng.uniform(0.0, 1.0, size=m)
    c = rng.normal(size=n)
    box = rng.uniform(1.0, 3.0, size=n)
    return c, G, h, box


@pytest.mark.parametrize("seed", range(10))
def test_lp_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    c, G, h, box = _random_lp(rng, n)
    res = solve(QuadraticProgram(n, objective_linear=c, ineq_matrix=G, ineq_rhs=h, var_lower=-box, var_upper=box))
    Gfull = np.vstack([G, np.eye(n), -np.eye(n)])
    hfull = np.concatenate([h, box, box])
    ref, _ = lp_vertex_enumeration(c, Gfull, hfull)
    assert res.status is Status.OPTIMAL
    assert res.objective_value == pytest.approx(ref, rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_equality_qp_matches_kkt_solve(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(2, 9))
    p = int(rng.integers(1, n))
    L = rng.normal(size=(n, n))
    H = L @ L.T + 0.1 * np.eye(n)
    c = rng.normal(size=n)
    A = rng.normal(size=(p, n))
    b = rng.normal(size=p)
    res = solve(QuadraticProgram(n, H, c, eq_matrix=A, eq_rhs=b))
    assert res.status is Status.OPTIMAL
    np.testing.assert_allclose(res.x, eq_qp_closed_form(H, c, A, b), atol=1e-8)


def test_lp_with_equality_matches_enumeration():
    rng = np.random.default_rng(7)
    n = 4
    c, G, h, box = _random_lp(rng, n)
    x0 = np.zeros(n)
    A = rng.normal(size=(1, n))
    b = A @ x0
    res = solve(QuadraticProgram(n, objective_linear=c, eq_matrix=A, eq_rhs=b, ineq_matrix=G, ineq_rhs=np.maximum(h, G @ x0 + 0.1),
                                 var_lower=-box, var_upper=box))
    Gfull = np.vstack([G, np.eye(n), -np.eye(n)])
    hfull = np.concatenate([np.maximum(h, G @ x0 + 0.1), box, box])
    ref, _ = lp_vertex_enumeration(c, Gfull, hfull, A, b)
    assert res.objective_value == pytest.approx(ref, rel=1e-6, abs=1e-9)


# --- polygonization -------------------------------------------------------


def test_square_polygon():
    planes = polygonize_disk(1.0, 4)
    assert len(planes) == 4
    verts = polygon_vertices(1.0, 4)
    ang = np.sort(np.mod(np.arctan2(verts[:, 1], verts[:, 0]), 2 * np.pi))
    np.testing.assert_allclose(ang, np.pi / 4 + np.arange(4) * np.pi / 2)
    np.testing.assert_allclose(np.hypot(verts[:, 0], verts[:, 1]), 1.0)
    for a, b, c in planes:
        assert c == pytest.approx(math.sqrt(2) / 2)
        # every vertex lies on or inside every edge
        assert np.all(verts @ [a, b] <= c + 1e-12)


def test_octagon_radius_error():
    planes = polygonize_disk(1.0, 8)
    inner_radius = planes[0][2]
    assert 1.0 - inner_radius == pytest.approx(1 - math.cos(math.pi / 8))
    assert 1.0 - inner_radius == pytest.approx(0.0761, abs=5e-5)


@pytest.mark.parametrize("radius,segments", [(0.0, 8), (-1.0, 8), (1.0, 3), (1.0, 4.5)])
def test_polygon_preconditions(radius, segments):
    with pytest.raises(ValueError):
        polygonize_disk(radius, segments)


@settings(max_examples=50, deadline=None)
@given(radius=st.floats(1e-3, 1e3), segments=st.integers(4, 64))
def test_polygon_is_inner_approximation(radius, segments):
    planes = np.array(polygonize_disk(radius, segments))
    verts = polygon_vertices(radius, segments)
    assert np.all(np.hypot(verts[:, 0], verts[:, 1]) <= radius * (1 + 1e-12))
    # random convex combinations of vertices land inside both sets
    rng = np.random.default_rng(segments)
    w = rng.dirichlet(np.ones(segments), size=2000)
    pts = w @ verts
    assert np.all(pts @ planes[:, :2].T <= planes[:, 2] + 1e-9 * radius)
    assert np.all(pts[:, 0] ** 2 + pts[:, 1] ** 2 <= radius**2 + 1e-12 * max(1.0, radius**2))
