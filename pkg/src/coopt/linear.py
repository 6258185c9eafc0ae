"""Linear model containers consumed by the simplex and branch-and-bound solvers.

A :class:`LinearModel` is a plain description: named variables with bounds and
integrality flags, linear rows with a sense and right-hand side, and one linear
objective.  A :class:`BiObjectiveModel` shares one constraint set between a
minimized and a maximized objective and is scalarized by the bargaining layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

LE = "<="
EQ = "="
GE = ">="
MIN = "min"
MAX = "max"

INF = math.inf


@dataclass
class Variable:
    name: str
    lb: float = 0.0
    ub: float = INF
    binary: bool = False

    def __post_init__(self):
        if self.lb > self.ub:
            raise ValueError(f"variable {self.name}: lb {self.lb} > ub {self.ub}")
        if self.binary and not (self.lb >= 0.0 and self.ub <= 1.0):
            raise ValueError(f"binary variable {self.name} must have bounds within [0, 1]")


@dataclass
class Constraint:
    coeffs: dict[int, float]
    sense: str
    rhs: float
    name: str = ""

    def __post_init__(self):
        if self.sense not in (LE, EQ, GE):
            raise ValueError(f"constraint {self.name}: bad sense {self.sense!r}")


@dataclass
class LinearModel:
    variables: list[Variable]
    constraints: list[Constraint]
    objective: dict[int, float]
    sense: str = MIN
    context: object | None = None

    def __post_init__(self):
        if self.sense not in (MIN, MAX):
            raise ValueError(f"bad objective sense {self.sense!r}")
        n = len(self.variables)
        for con in self.constraints:
            for j in con.coeffs:
                if not 0 <= j < n:
                    raise ValueError(f"constraint {con.name} references unknown variable {j}")
        for j in self.objective:
            if not 0 <= j < n:
                raise ValueError(f"objective references unknown variable {j}")

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def m(self) -> int:
        return len(self.constraints)

    @property
    def var_layout(self) -> dict[str, int]:
        """Bijection from variable name to column index."""
        layout = {v.name: j for j, v in enumerate(self.variables)}
        if len(layout) != len(self.variables):
            raise ValueError("variable names are not unique")
        return layout

    def binary_indices(self) -> list[int]:
        return [j for j, v in enumerate(self.variables) if v.binary]

    def index(self, name: str) -> int:
        return self.var_layout[name]


def clone(model: LinearModel) -> LinearModel:
    """Copy a model so rows/bounds/objective can be edited independently."""
    return LinearModel(
        variables=[replace(v) for v in model.variables],
        constraints=[Constraint(dict(c.coeffs), c.sense, c.rhs, c.name) for c in model.constraints],
        objective=dict(model.objective),
        sense=model.sense,
        context=model.context,
    )


def with_objective(model: LinearModel, coeffs: Mapping[int, float], sense: str) -> LinearModel:
    out = clone(model)
    out.objective = dict(coeffs)
    out.sense = sense
    return out


def add_constraint(
    model: LinearModel, coeffs: Mapping[int, float], sense: str, rhs: float, name: str = ""
) -> None:
    model.constraints.append(Constraint(dict(coeffs), sense, float(rhs), name))


def fix_variables(model: LinearModel, names: Iterable[str], value: float = 0.0) -> None:
    """Pin the named variables to a constant by collapsing their bounds."""
    layout = model.var_layout
    for name in names:
        var = model.variables[layout[name]]
        var.lb = value
        var.ub = value


def objective_value(coeffs: Mapping[int, float], x) -> float:
    return float(sum(c * x[j] for j, c in coeffs.items()))


def constraint_violation(model: LinearModel, x) -> float:
    """Largest row/bound violation of an assignment (0 when feasible)."""
    worst = 0.0
    for con in model.constraints:
        lhs = sum(c * x[j] for j, c in con.coeffs.items())
        if con.sense == LE:
            worst = max(worst, lhs - con.rhs)
        elif con.sense == GE:
            worst = max(worst, con.rhs - lhs)
        else:
            worst = max(worst, abs(lhs - con.rhs))
    for j, var in enumerate(model.variables):
        worst = max(worst, var.lb - x[j], x[j] - var.ub)
    return float(worst)


def assignment_map(model: LinearModel, x) -> dict[str, float]:
    return {v.name: float(x[j]) for j, v in enumerate(model.variables)}


@dataclass
class BiObjectiveModel:
    """Shared feasible set with a minimized objective and a maximized one."""

    base: LinearModel
    obj_a: dict[int, float] = field(default_factory=dict)
    obj_b: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        n = self.base.n
        for label, obj in (("obj_a", self.obj_a), ("obj_b", self.obj_b)):
            for j in obj:
                if not 0 <= j < n:
                    raise ValueError(f"{label} references unknown variable {j}")

    def minimize_a(self) -> LinearModel:
        return with_objective(self.base, self.obj_a, MIN)

    def maximize_b(self) -> LinearModel:
        return with_objective(self.base, self.obj_b, MAX)

    def value_a(self, x) -> float:
        return objective_value(self.obj_a, x)

    def value_b(self, x) -> float:
        return objective_value(self.obj_b, x)

    def copy(self) -> "BiObjectiveModel":
        return BiObjectiveModel(clone(self.base), dict(self.obj_a), dict(self.obj_b))


def write_lp_format(model: LinearModel, path) -> None:
    """Dump a model as CPLEX-style LP text for cross-checks with other solvers."""
    lines = []
    lines.append("Minimize" if model.sense == MIN else "Maximize")
    lines.append(" obj: " + _lp_expr(model.objective, model))
    lines.append("Subject To")
    for i, con in enumerate(model.constraints):
        name = con.name or f"c{i}"
        op = {LE: "<=", EQ: "=", GE: ">="}[con.sense]
        lines.append(f" {_lp_name(name)}: {_lp_expr(con.coeffs, model)} {op} {con.rhs!r}")
    lines.append("Bounds")
    for var in model.variables:
        lb = "-inf" if var.lb == -INF else repr(var.lb)
        ub = "+inf" if var.ub == INF else repr(var.ub)
        lines.append(f" {lb} <= {_lp_name(var.name)} <= {ub}")
    binaries = [v.name for v in model.variables if v.binary]
    if binaries:
        lines.append("Binary")
        lines.extend(f" {_lp_name(name)}" for name in binaries)
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _lp_name(name: str) -> str:
    return name.replace("[", "(").replace("]", ")").replace(",", "_").replace(" ", "")


def _lp_expr(coeffs: Mapping[int, float], model: LinearModel) -> str:
    if not coeffs:
        return "0 " + _lp_name(model.variables[0].name) if model.variables else "0"
    parts = []
    for j in sorted(coeffs):
        c = coeffs[j]
        sign = "-" if c < 0 else "+"
        parts.append(f"{sign} {abs(c)!r} {_lp_name(model.variables[j].name)}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text
