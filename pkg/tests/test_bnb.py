import io
import math

import numpy as np
import pytest

from coopt.bnb import (
    BUDGET_EXHAUSTED,
    OPTIMAL_WITHIN_GAP,
    enumerate_binaries,
    exclusivity_pairs,
    solve_milp,
)
from coopt.linear import GE, LE, MAX, MIN, Constraint, LinearModel, Variable
from coopt.simplex import INFEASIBLE, solve_lp


def test_no_binaries_equals_lp():
    model = LinearModel(
        [Variable("x", 0.0, 10.0), Variable("y", 0.0, 10.0)],
        [Constraint({0: 1.0, 1: 1.0}, GE, 3.0)],
        {0: 2.0, 1: 1.0},
        MIN,
    )
    milp = solve_milp(model, gap_target=1e-9)
    ref = solve_lp(model)
    assert milp.status == OPTIMAL_WITHIN_GAP
    assert milp.nodes == 1
    assert milp.objective == pytest.approx(ref.objective, abs=1e-9)
    assert milp.gap == 0.0


def knapsack_model():
    # LP relaxation is fractional by construction
    values = [10.0, 6.0, 5.0]
    weights = [5.0, 4.0, 3.0]
    variables = [Variable(f"take{i}", 0.0, 1.0, binary=True) for i in range(3)]
    cons = [Constraint({i: weights[i] for i in range(3)}, LE, 7.0)]
    return LinearModel(variables, cons, {i: values[i] for i in range(3)}, MAX)


def test_fractional_knapsack_exact():
    model = knapsack_model()
    relax = solve_lp(
        LinearModel(
            [Variable(v.name, v.lb, v.ub) for v in model.variables],
            model.constraints,
            model.objective,
            model.sense,
        )
    )
    milp = solve_milp(model, gap_target=1e-9)
    exact = enumerate_binaries(model)
    assert milp.objective == pytest.approx(exact.objective, abs=1e-9)
    assert relax.objective > milp.objective + 1e-6  # relaxation strictly above
    assert milp.bound >= milp.objective - 1e-9


def test_enumerate_binaries_guard():
    variables = [Variable(f"b{i}", 0.0, 1.0, binary=True) for i in range(21)]
    model = LinearModel(variables, [], {0: 1.0}, MAX)
    with pytest.raises(ValueError):
        enumerate_binaries(model)


def test_enumerate_no_binaries_equals_lp():
    model = LinearModel(
        [Variable("x", 0.0, 4.0)],
        [Constraint({0: 1.0}, GE, 1.0)],
        {0: 1.0},
        MIN,
    )
    exact = enumerate_binaries(model)
    ref = solve_lp(model)
    assert exact.objective == pytest.approx(ref.objective, abs=1e-12)


def test_infeasible_root():
    model = LinearModel(
        [Variable("b", 0.0, 1.0, binary=True)],
        [Constraint({0: 1.0}, GE, 2.0)],
        {0: 1.0},
        MIN,
    )
    assert solve_milp(model).status == INFEASIBLE


def random_milp(rng):
    n = int(rng.integers(2, 7))
    variables = []
    n_bin = 0
    for j in range(n):
        if rng.random() < 0.6 and n_bin < 8:
            variables.append(Variable(f"v{j}", 0.0, 1.0, binary=True))
            n_bin += 1
        else:
            variables.append(Variable(f"v{j}", 0.0, float(rng.integers(1, 5))))
    constraints = []
    for _ in range(int(rng.integers(1, 6))):
        coeffs = {j: float(rng.integers(-3, 4)) for j in range(n)}
        coeffs = {j: c for j, c in coeffs.items() if c} or {0: 1.0}
        sense = LE if rng.random() < 0.6 else GE
        constraints.append(Constraint(coeffs, sense, float(rng.integers(-3, 8))))
    objective = {j: float(rng.integers(-5, 6)) for j in range(n)}
    sense = MIN if rng.random() < 0.5 else MAX
    return LinearModel(variables, constraints, objective, sense)


def test_random_milps_match_enumeration():
    rng = np.random.default_rng(42)
    matched = 0
    for _ in range(120):
        model = random_milp(rng)
        exact = enumerate_binaries(model)
        milp = solve_milp(model, gap_target=1e-9)
        assert milp.status == exact.status
        if exact.status == OPTIMAL_WITHIN_GAP:
            assert milp.objective == pytest.approx(exact.objective, abs=1e-6)
            matched += 1
    assert matched > 60


def test_bound_monotone_in_progress_log():
    rng = np.random.default_rng(3)
    log = io.StringIO()
    for _ in range(20):
        model = random_milp(rng)
        log.seek(0)
        log.truncate()
        solve_milp(model, gap_target=1e-9, progress=log)
        bounds = [float(line.split(",")[1]) for line in log.getvalue().splitlines()]
        bounds = [b for b in bounds if not math.isnan(b)]
        if len(bounds) < 2:
            continue
        sign = 1.0 if model.sense == MIN else -1.0
        seq = [sign * b for b in bounds]
        assert all(b2 >= b1 - 1e-9 for b1, b2 in zip(seq, seq[1:]))


def test_exclusivity_pairs_detected():
    variables = [
        Variable("x", 0.0, 1.0, binary=True),
        Variable("y", 0.0, 1.0, binary=True),
        Variable("z", 0.0, 5.0),
    ]
    cons = [
        Constraint({0: 1.0, 1: 1.0}, LE, 1.0),
        Constraint({0: 1.0, 2: 1.0}, LE, 4.0),
    ]
    model = LinearModel(variables, cons, {2: 1.0}, MAX)
    pairs = exclusivity_pairs(model)
    assert pairs == {0: [1], 1: [0]}


def test_budget_exhaustion_reports_valid_bound():
    rng = np.random.default_rng(11)
    found = False
    for _ in range(60):
        model = random_milp(rng)
        exact = enumerate_binaries(model)
        if exact.status != OPTIMAL_WITHIN_GAP:
            continue
        milp = solve_milp(model, gap_target=1e-12, node_budget=2)
        sign = 1.0 if model.sense == MIN else -1.0
        # bound must still bracket the true optimum
        assert sign * milp.bound <= sign * exact.objective + 1e-6
        if milp.status == BUDGET_EXHAUSTED:
            found = True
    assert found
