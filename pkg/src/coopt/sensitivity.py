"""Sensitivity studies: the 3x3x3 price/demand sweep and the 2^(6-1) ANOVA.

The F-distribution quantile is computed in-house from the regularized
incomplete beta function (continued fraction plus bisection inversion), so the
significance threshold does not depend on an external statistics stack.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .bargain import DisagreementPoints, disagreement_points, solve_nbs
from .models import build_p1, build_p2, build_p3
from .scenario import DemandProfile, HubSpec, PriceProfiles, ReserveProbabilities, ScenarioInputs

# ---------------------------------------------------------------------------
# F distribution via the regularized incomplete beta function


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    return h


def regularized_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValueError("beta parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = math.exp(
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_cdf(x: float, df1: float, df2: float) -> float:
    if x <= 0.0:
        return 0.0
    w = df1 * x / (df1 * x + df2)
    return regularized_beta(df1 / 2.0, df2 / 2.0, w)


def f_survival(x: float, df1: float, df2: float) -> float:
    return 1.0 - f_cdf(x, df1, df2)


def f_critical(alpha: float, df1: float, df2: float) -> float:
    """Upper-alpha quantile of the F(df1, df2) distribution."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if df1 < 1 or df2 < 1:
        raise ValueError(f"degrees of freedom must be >= 1, got ({df1}, {df2})")
    target = 1.0 - alpha
    lo, hi = 0.0, 1.0
    for _ in range(200):  # bisection on w = df1 x / (df1 x + df2)
        mid = 0.5 * (lo + hi)
        if regularized_beta(df1 / 2.0, df2 / 2.0, mid) < target:
            lo = mid
        else:
            hi = mid
    w = 0.5 * (lo + hi)
    return df2 * w / (df1 * (1.0 - w))


# ---------------------------------------------------------------------------
# fractional factorial design and ANOVA


@dataclass(frozen=True)
class FactorSpec:
    name: str
    levels: tuple
    role: str = "reserve-side"

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if len(self.levels) < 2:
            raise ValueError(f"factor {self.name} needs >= 2 levels")


@dataclass(frozen=True)
class DesignMatrix:
    """Half-fraction two-level design: 32 runs over 6 factors."""

    factors: tuple[FactorSpec, ...]
    signs: np.ndarray  # (32, 6) of +-1
    generator: str

    def runs(self):
        """Level assignment per run, mapping -1 to levels[0] and +1 to levels[1]."""
        out = []
        for row in self.signs:
            out.append(
                {
                    f.name: f.levels[0] if s < 0 else f.levels[1]
                    for f, s in zip(self.factors, row)
                }
            )
        return out


def fractional_factorial_design(factors) -> DesignMatrix:
    factors = tuple(factors)
    if len(factors) != 6:
        raise ValueError(f"expected exactly 6 factors, got {len(factors)}")
    names = [f.name for f in factors]
    if len(set(names)) != 6:
        raise ValueError("factor names must be unique")
    for f in factors:
        if len(f.levels) != 2:
            raise ValueError(f"factor {f.name} must have exactly 2 levels")
    n = 32
    signs = np.empty((n, 6), dtype=int)
    for i in range(n):
        for j in range(5):
            signs[i, j] = 1 if (i >> j) & 1 else -1
        signs[i, 5] = int(np.prod(signs[i, :5]))  # generator: five-way interaction
    return DesignMatrix(factors, signs, "sixth column = product of the first five")


@dataclass(frozen=True)
class AnovaRow:
    term: str
    effect: float
    sum_sq: float
    df: int
    f_stat: float
    p_value: float
    significant: bool


@dataclass(frozen=True)
class AnovaTable:
    rows: tuple[AnovaRow, ...]
    residual_ss: float
    residual_df: int
    total_ss: float
    f_crit: float
    alpha: float

    @property
    def model_ss(self) -> float:
        return sum(r.sum_sq for r in self.rows)


def default_model_terms(factors) -> list:
    """Six mains plus the two cross terms the profit response reacts to:
    up price x up deployment and up deployment x down deployment."""
    names = [f.name for f in factors]
    return list(names) + [(names[0], names[4]), (names[4], names[5])]


def anova(design: DesignMatrix, responses, model_terms, alpha: float = 0.05) -> AnovaTable:
    """Orthogonal-contrast ANOVA of a two-level design.

    ``model_terms`` lists factor names and 2-tuples of names for interactions;
    everything else is pooled into the residual.
    """
    y = np.asarray(responses, dtype=float)
    n = design.signs.shape[0]
    if y.shape != (n,):
        raise ValueError(f"expected {n} responses, got shape {y.shape}")
    index = {f.name: j for j, f in enumerate(design.factors)}

    columns = []
    labels = []
    for term in model_terms:
        if isinstance(term, str):
            col = design.signs[:, index[term]].astype(float)
            labels.append(term)
        else:
            a, b = term
            col = (design.signs[:, index[a]] * design.signs[:, index[b]]).astype(float)
            labels.append(f"{a} x {b}")
        columns.append(col)

    residual_df = (n - 1) - len(columns)
    if residual_df <= 0:
        raise ValueError(f"residual degrees of freedom {residual_df} <= 0")

    total_ss = float(np.sum((y - y.mean()) ** 2))
    crit = f_critical(alpha, 1, residual_df)

    effects = []
    sums = []
    for col in columns:
        contrast = float(col @ y)
        effect = contrast / (n / 2)
        effects.append(effect)
        sums.append(contrast**2 / n)  # = (n/4) * effect^2
    residual_ss = max(total_ss - sum(sums), 0.0)
    ms_resid = residual_ss / residual_df

    rows = []
    for label, effect, ss in zip(labels, effects, sums):
        if ms_resid > 0:
            f_stat = ss / ms_resid
            p = f_survival(f_stat, 1, residual_df)
        else:
            f_stat = math.inf if ss > 0 else 0.0
            p = 0.0 if ss > 0 else 1.0
        rows.append(AnovaRow(label, effect, ss, 1, f_stat, p, f_stat > crit))
    return AnovaTable(tuple(rows), residual_ss, residual_df, total_ss, crit, alpha)


# ---------------------------------------------------------------------------
# scenario-level studies


@dataclass(frozen=True)
class SweepResult:
    """Hub cost-reduction percentage per (DA, RT, demand) level combination."""

    reductions: np.ndarray  # (3, 3, 3), NaN where flagged
    flags: np.ndarray  # bool, True where the cell failed
    labels: tuple[str, str, str]


def _apply_price_levels(scn: ScenarioInputs, lam_da, lam_rt) -> ScenarioInputs:
    prices = PriceProfiles(
        tuple(lam_da), tuple(lam_rt), scn.prices.lambda_up, scn.prices.lambda_dn
    )
    return replace(scn, prices=prices)


def _apply_demand_level(scn: ScenarioInputs, demand, commit_cap_factor: float) -> ScenarioInputs:
    dem = DemandProfile(tuple(demand))
    hub = HubSpec(
        tuple(commit_cap_factor * v for v in dem.ev_load),
        scn.hub.station_count,
        scn.hub.station_rate,
    )
    return replace(scn, demand=dem, hub=hub)


def _cell_reduction(args):
    scn, gap, grid_points, refine_tol, node_budget = args
    try:
        p1 = build_p1(scn.hub, scn.prices, scn.demand)
        p2 = build_p2(scn.bss, scn.prices, scn.probabilities)
        p3 = build_p3(scn.hub, scn.bss, scn.prices, scn.probabilities, scn.demand, scn.joint)
        d = disagreement_points(p1, p2, gap, node_budget)
        result = solve_nbs(
            p3, d, grid_points=grid_points, refine_tol=refine_tol, gap=gap, node_budget=node_budget
        )
        if abs(d.d1) < 1e-9:
            return math.nan
        return 100.0 * (d.d1 - result.nbs.f_a) / d.d1
    except (ValueError, RuntimeError):
        return math.nan


def sweep_grid(
    template: ScenarioInputs,
    da_levels,
    rt_levels,
    demand_levels,
    *,
    gap: float = 5e-4,
    grid_points: int = 9,
    refine_tol: float = 1e-6,
    node_budget: int = 200_000,
    workers: int = 1,
    commit_cap_factor: float = 2.0,
    labels: tuple[str, str, str] = ("low", "median", "high"),
) -> SweepResult:
    """27-cell sensitivity of the bargain's hub cost reduction to price and
    demand levels, with reserve-side inputs pinned at the template's values."""
    for name, levels in (("da", da_levels), ("rt", rt_levels), ("demand", demand_levels)):
        if len(levels) != 3:
            raise ValueError(f"{name}_levels must have exactly 3 entries")
    template.require_joint()

    cells = []
    for lam_da in da_levels:
        for lam_rt in rt_levels:
            for demand in demand_levels:
                scn = _apply_price_levels(template, lam_da, lam_rt)
                scn = _apply_demand_level(scn, demand, commit_cap_factor)
                cells.append((scn, gap, grid_points, refine_tol, node_budget))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(_cell_reduction, cells))
    else:
        values = [_cell_reduction(cell) for cell in cells]

    grid = np.array(values).reshape(3, 3, 3)
    return SweepResult(grid, np.isnan(grid), labels)


RESERVE_FACTOR_NAMES = ("lambda_up", "lambda_dn", "acc_up", "acc_dn", "dep_up", "dep_dn")


def apply_reserve_levels(scn: ScenarioInputs, assignment: dict) -> ScenarioInputs:
    """Swap the six reserve-side series of a scenario for the given profiles."""
    prices = PriceProfiles(
        scn.prices.lambda_da,
        scn.prices.lambda_rt,
        tuple(assignment["lambda_up"]),
        tuple(assignment["lambda_dn"]),
    )
    probs = ReserveProbabilities(
        tuple(assignment["acc_up"]),
        tuple(assignment["acc_dn"]),
        tuple(assignment["dep_up"]),
        tuple(assignment["dep_dn"]),
    )
    return replace(scn, prices=prices, probabilities=probs)


def _factorial_response(args):
    scn, gap, grid_points, refine_tol, node_budget = args
    p1 = build_p1(scn.hub, scn.prices, scn.demand)
    p2 = build_p2(scn.bss, scn.prices, scn.probabilities)
    p3 = build_p3(scn.hub, scn.bss, scn.prices, scn.probabilities, scn.demand, scn.joint)
    d = disagreement_points(p1, p2, gap, node_budget)
    result = solve_nbs(
        p3, d, grid_points=grid_points, refine_tol=refine_tol, gap=gap, node_budget=node_budget
    )
    if abs(d.d2) < 1e-9:
        return math.nan
    return 100.0 * (result.nbs.f_b - d.d2) / d.d2


def factorial_profit_study(
    template: ScenarioInputs,
    factors,
    *,
    gap: float = 5e-4,
    grid_points: int = 9,
    refine_tol: float = 1e-6,
    node_budget: int = 200_000,
    workers: int = 1,
):
    """Run the 32 design cells and return (design, profit-increase responses)."""
    design = fractional_factorial_design(factors)
    jobs = []
    for assignment in design.runs():
        jobs.append(
            (apply_reserve_levels(template, assignment), gap, grid_points, refine_tol, node_budget)
        )
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            responses = list(pool.map(_factorial_response, jobs))
    else:
        responses = [_factorial_response(job) for job in jobs]
    return design, np.array(responses)
