"""Independent brute-force oracles the solver tests are checked against.

These deliberately avoid the production code paths: the LP oracle enumerates
candidate vertices from active-set linear systems, and the hub-commitment
oracle scans a 1-kWh grid.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from coopt.linear import EQ, GE, LE, MIN, LinearModel


def enumerate_vertices(model: LinearModel):
    """All basic feasible points of a box-bounded model via active-set systems.

    Requires every variable to carry finite bounds so the feasible set is a
    polytope; rows may be any sense.
    """
    n = model.n
    rows = []
    rhs = []
    eq_rows = []
    for con in model.constraints:
        a = np.zeros(n)
        for j, c in con.coeffs.items():
            a[j] += c
        if con.sense == EQ:
            eq_rows.append((a, con.rhs))
        else:
            rows.append((a, con.rhs, con.sense))
    # candidate active hyperplanes: inequality rows + both bounds per variable
    planes = [(a, r) for a, r, _ in rows]
    for j, v in enumerate(model.variables):
        if math.isinf(v.lb) or math.isinf(v.ub):
            raise ValueError("oracle needs finite bounds on every variable")
        e = np.zeros(n)
        e[j] = 1.0
        planes.append((e, v.lb))
        planes.append((e, v.ub))

    need = n - len(eq_rows)
    if need < 0:
        need = 0
    vertices = []
    for combo in itertools.combinations(range(len(planes)), need):
        Aact = np.array([planes[i][0] for i in combo] + [a for a, _ in eq_rows])
        bact = np.array([planes[i][1] for i in combo] + [r for _, r in eq_rows])
        if Aact.shape[0] != n:
            continue
        if abs(np.linalg.det(Aact)) < 1e-10:
            continue
        x = np.linalg.solve(Aact, bact)
        if _feasible(model, rows, eq_rows, x):
            vertices.append(x)
    return vertices


def _feasible(model: LinearModel, rows, eq_rows, x, tol: float = 1e-7) -> bool:
    for j, v in enumerate(model.variables):
        if x[j] < v.lb - tol or x[j] > v.ub + tol:
            return False
    for a, r, sense in rows:
        lhs = float(a @ x)
        if sense == LE and lhs > r + tol:
            return False
        if sense == GE and lhs < r - tol:
            return False
    for a, r in eq_rows:
        if abs(float(a @ x) - r) > tol:
            return False
    return True


def best_vertex_objective(model: LinearModel):
    """Optimal objective by exhaustive vertex enumeration; None if infeasible."""
    vertices = enumerate_vertices(model)
    if not vertices:
        return None
    c = np.zeros(model.n)
    for j, cv in model.objective.items():
        c[j] = cv
    values = [float(c @ x) for x in vertices]
    return min(values) if model.sense == MIN else max(values)


def hub_commitment_grid_cost(lam_da, lam_rt, demand, cap, step=1.0):
    """Single-hour hub cost by scanning commitments on a fixed grid."""
    best = math.inf
    commit = 0.0
    while commit <= cap + 1e-9:
        for da_ev in (0.0, min(commit, demand)):
            da_rt = commit - da_ev
            rt_ev = demand - da_ev
            cost = lam_da * da_ev + (lam_da - lam_rt) * da_rt + lam_rt * rt_ev
            best = min(best, cost)
        commit += step
    return best


def single_hour_bss_profit(
    lam_up,
    lam_dn,
    lam_rt,
    acc_up,
    acc_dn,
    dep_up,
    dep_dn,
    cap,
    min_level,
    max_charge,
    max_discharge,
    initial_level,
    deg_rate,
    steps=60,
    deployment_scaled_twice=True,
):
    """Exhaustive single-hour, single-compartment reserve profit over a bid grid."""
    best = -math.inf
    for x_mode, y_mode in ((0, 0), (0, 1), (1, 0)):
        bid_ups = np.linspace(0.0, max_discharge * y_mode, steps + 1)
        bid_dns = np.linspace(0.0, max_charge * x_mode, steps + 1)
        for bid_up in bid_ups:
            p_up = dep_up * bid_up
            if p_up > max_discharge * y_mode + 1e-9:
                continue
            for bid_dn in bid_dns:
                p_dn = dep_dn * bid_dn
                rt_cap = max_charge * x_mode - p_dn
                if rt_cap < -1e-9:
                    continue
                for rt_buy in np.linspace(0.0, max(rt_cap, 0.0), steps + 1):
                    level = initial_level + p_dn + rt_buy - p_up
                    if level < min_level - 1e-9 or level > cap + 1e-9:
                        continue
                    r_cap = lam_up * acc_up * bid_up + lam_dn * acc_dn * bid_dn
                    if deployment_scaled_twice:
                        r_dep = lam_rt * dep_up * p_up + lam_rt * dep_dn * p_dn
                    else:
                        r_dep = lam_rt * (p_up + p_dn)
                    c_phi = lam_rt * rt_buy
                    c_deg = deg_rate * (p_up + p_dn)
                    best = max(best, r_cap + r_dep - c_phi - c_deg)
    return best
