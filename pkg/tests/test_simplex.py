import math

import numpy as np
import pytest

from coopt.linear import EQ, GE, LE, MAX, MIN, Constraint, LinearModel, Variable
from coopt.simplex import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    SimplexSolver,
    check_certificates,
    solve_lp,
)

from oracles import best_vertex_objective


def lp(variables, constraints, objective, sense=MIN):
    return LinearModel(variables, constraints, objective, sense)


def test_min_x_with_floor():
    model = lp([Variable("x", 0.0, math.inf)], [Constraint({0: 1.0}, GE, 3.0)], {0: 1.0})
    sol = solve_lp(model)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(3.0, abs=1e-9)
    assert sol.primal[0] == pytest.approx(3.0, abs=1e-9)


def test_trivially_infeasible():
    model = lp(
        [Variable("x", 0.0, math.inf)],
        [Constraint({0: 1.0}, LE, -1.0)],
        {},
    )
    sol = solve_lp(model)
    assert sol.status == INFEASIBLE


def test_unbounded_direction():
    model = lp([Variable("x", 0.0, math.inf)], [], {0: -1.0})
    sol = solve_lp(model)
    assert sol.status == UNBOUNDED


def test_max_sense_and_bounds_only():
    model = lp([Variable("x", -2.0, 7.0), Variable("y", 0.0, 3.0)], [], {0: 1.0, 1: 2.0}, MAX)
    sol = solve_lp(model)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(13.0, abs=1e-9)


def test_equality_row_with_negative_prices():
    # min -x - y  s.t.  x + y = 4, x <= 3, y <= 3
    model = lp(
        [Variable("x", 0.0, 3.0), Variable("y", 0.0, 3.0)],
        [Constraint({0: 1.0, 1: 1.0}, EQ, 4.0)],
        {0: -1.0, 1: -1.0},
    )
    sol = solve_lp(model)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(-4.0, abs=1e-9)


def test_free_variable():
    model = lp(
        [Variable("x", -math.inf, math.inf), Variable("y", 0.0, 10.0)],
        [Constraint({0: 1.0, 1: 1.0}, GE, 2.0), Constraint({0: 1.0}, GE, -5.0)],
        {0: 2.0, 1: 1.0},
    )
    sol = solve_lp(model)
    assert sol.status == OPTIMAL
    # x sinks to -5, y covers the balance up to 7
    assert sol.objective == pytest.approx(-3.0, abs=1e-8)


def random_box_lp(rng):
    n = int(rng.integers(1, 5))
    m = int(rng.integers(0, 5))
    variables = []
    for j in range(n):
        lo = float(rng.choice([0.0, -2.0, -5.0]))
        hi = lo + float(rng.integers(1, 10))
        variables.append(Variable(f"v{j}", lo, hi))
    constraints = []
    for i in range(m):
        coeffs = {}
        for j in range(n):
            c = int(rng.integers(-3, 4))
            if c:
                coeffs[j] = float(c)
        if not coeffs:
            coeffs[int(rng.integers(0, n))] = 1.0
        sense = LE if rng.random() < 0.5 else GE
        rhs = float(rng.integers(-6, 10))
        constraints.append(Constraint(coeffs, sense, rhs))
    objective = {j: float(rng.integers(-5, 6)) for j in range(n)}
    sense = MIN if rng.random() < 0.5 else MAX
    return lp(variables, constraints, objective, sense)


def test_random_lps_match_vertex_enumeration():
    rng = np.random.default_rng(20240902)
    solved = 0
    for _ in range(250):
        model = random_box_lp(rng)
        expect = best_vertex_objective(model)
        sol = solve_lp(model)
        if expect is None:
            assert sol.status == INFEASIBLE
        else:
            assert sol.status == OPTIMAL
            assert sol.objective == pytest.approx(expect, abs=1e-6)
            solved += 1
    assert solved > 100


def test_determinism_same_bytes():
    rng = np.random.default_rng(7)
    model = random_box_lp(rng)
    a = solve_lp(model)
    b = solve_lp(model)
    assert a.status == b.status
    if a.status == OPTIMAL:
        assert np.array_equal(a.primal, b.primal)
        assert np.array_equal(a.dual, b.dual)
        assert a.objective == b.objective
        assert a.iterations == b.iterations


def test_row_scaling_equivariance():
    model = lp(
        [Variable("x", 0.0, 10.0), Variable("y", 0.0, 10.0)],
        [
            Constraint({0: 1.0, 1: 2.0}, GE, 4.0),
            Constraint({0: 3.0, 1: 1.0}, GE, 6.0),
        ],
        {0: 1.0, 1: 1.0},
    )
    base = solve_lp(model)
    s = 8.0
    scaled = lp(
        [Variable("x", 0.0, 10.0), Variable("y", 0.0, 10.0)],
        [
            Constraint({0: s, 1: 2.0 * s}, GE, 4.0 * s),
            Constraint({0: 3.0, 1: 1.0}, GE, 6.0),
        ],
        {0: 1.0, 1: 1.0},
    )
    other = solve_lp(scaled)
    assert other.objective == pytest.approx(base.objective, abs=1e-9)
    assert other.primal == pytest.approx(base.primal, abs=1e-8)
    assert other.dual[0] == pytest.approx(base.dual[0] / s, abs=1e-9)
    assert other.dual[1] == pytest.approx(base.dual[1], abs=1e-9)


def test_certificates_on_optimal_solution():
    model = lp(
        [Variable("x", 0.0, 10.0), Variable("y", 0.0, 10.0)],
        [
            Constraint({0: 1.0, 1: 1.0}, GE, 3.0),
            Constraint({0: 2.0, 1: 1.0}, LE, 14.0),
        ],
        {0: 3.0, 1: 1.0},
    )
    sol = solve_lp(model)
    report = check_certificates(model, sol)
    assert report.within(1e-6)


def test_certificates_flag_perturbed_primal():
    model = lp(
        [Variable("x", 0.0, 10.0), Variable("y", 0.0, 10.0)],
        [Constraint({0: 1.0, 1: 1.0}, EQ, 5.0)],
        {0: 1.0, 1: 2.0},
    )
    sol = solve_lp(model)
    sol.primal[0] += 1e-3
    report = check_certificates(model, sol)
    assert report.primal_residual >= 1e-4


def test_duplicate_rows_degenerate_dual_gap():
    # duplicate rows make the dual non-unique; gap must still close
    model = lp(
        [Variable("x", 0.0, 10.0), Variable("y", 0.0, 10.0)],
        [
            Constraint({0: 1.0, 1: 1.0}, GE, 4.0),
            Constraint({0: 1.0, 1: 1.0}, GE, 4.0),
            Constraint({0: 1.0}, LE, 9.0),
        ],
        {0: 2.0, 1: 3.0},
    )
    sol = solve_lp(model)
    assert sol.status == OPTIMAL
    report = check_certificates(model, sol)
    assert report.duality_gap <= 1e-6


def test_warm_start_after_bound_change():
    model = lp(
        [Variable("x", 0.0, 4.0), Variable("y", 0.0, 4.0)],
        [
            Constraint({0: 1.0, 1: 1.0}, GE, 3.0),
            Constraint({0: 1.0, 1: -1.0}, LE, 2.0),
        ],
        {0: 2.0, 1: 1.0},
    )
    solver = SimplexSolver(model)
    first = solver.solve()
    assert first.status == OPTIMAL
    ub = np.array([0.0, 4.0])  # pin x to zero, like a branch-and-bound child
    second = solver.solve(ub=ub, warm=first.warm)
    assert second.status == OPTIMAL
    assert second.objective == pytest.approx(3.0, abs=1e-8)
    cold = solver.solve(ub=ub)
    assert cold.objective == pytest.approx(second.objective, abs=1e-9)


def test_warm_start_infeasible_child():
    model = lp(
        [Variable("x", 0.0, 1.0), Variable("y", 0.0, 1.0)],
        [Constraint({0: 1.0, 1: 1.0}, GE, 1.5)],
        {0: 1.0, 1: 1.0},
    )
    solver = SimplexSolver(model)
    first = solver.solve()
    assert first.status == OPTIMAL
    ub = np.array([0.0, 0.0])
    child = solver.solve(ub=ub, warm=first.warm)
    assert child.status == INFEASIBLE
