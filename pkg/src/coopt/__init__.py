"""Joint EV-hub / battery-storage operation study toolkit.

Model builders, an exact LP/MILP solver stack, Nash bargaining over the joint
bi-objective model, scenario simulation, and sensitivity studies.
"""

__version__ = "0.1.0"

from .bargain import (
    BargainResult,
    DisagreementPoints,
    ParetoPoint,
    disagreement_points,
    pareto_frontier,
    solve_nbs,
    solve_tcm,
    verify_axioms,
)
from .bnb import MilpSolution, enumerate_binaries, solve_milp
from .io import ResultsBundle, ScenarioError, emit_report, load_scenario, save_scenario
from .linear import BiObjectiveModel, Constraint, LinearModel, Variable
from .models import (
    ObjectiveBreakdown,
    build_p1,
    build_p2,
    build_p3,
    degradation_cost,
    objective_breakdown,
)
from .scenario import (
    BssSpec,
    CompartmentSpec,
    DemandProfile,
    HubSpec,
    JointTerms,
    PriceProfiles,
    ReserveProbabilities,
    ScenarioInputs,
    TimeGrid,
)
from .sensitivity import AnovaTable, FactorSpec, anova, f_critical, fractional_factorial_design, sweep_grid
from .simplex import LpSolution, check_certificates, solve_lp
from .simulate import (
    BidStack,
    ClearingOutcome,
    DemandGenConfig,
    MarketRecord,
    clear_reserve_market,
    estimate_probabilities,
    generate_demand,
    percentile_profiles,
)

__all__ = [
    "AnovaTable",
    "BargainResult",
    "BidStack",
    "BiObjectiveModel",
    "BssSpec",
    "ClearingOutcome",
    "CompartmentSpec",
    "Constraint",
    "DemandGenConfig",
    "DemandProfile",
    "DisagreementPoints",
    "FactorSpec",
    "HubSpec",
    "JointTerms",
    "LinearModel",
    "LpSolution",
    "MarketRecord",
    "MilpSolution",
    "ObjectiveBreakdown",
    "ParetoPoint",
    "PriceProfiles",
    "ReserveProbabilities",
    "ResultsBundle",
    "ScenarioError",
    "ScenarioInputs",
    "TimeGrid",
    "Variable",
    "anova",
    "build_p1",
    "build_p2",
    "build_p3",
    "check_certificates",
    "clear_reserve_market",
    "degradation_cost",
    "disagreement_points",
    "emit_report",
    "enumerate_binaries",
    "estimate_probabilities",
    "f_critical",
    "fractional_factorial_design",
    "generate_demand",
    "load_scenario",
    "objective_breakdown",
    "pareto_frontier",
    "percentile_profiles",
    "save_scenario",
    "solve_lp",
    "solve_milp",
    "solve_nbs",
    "solve_tcm",
    "sweep_grid",
    "verify_axioms",
    "__version__",
]
