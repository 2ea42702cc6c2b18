"""Equilibrium computation and sensitivity analysis for constrained network
aggregative games.

The package is organized around a small pipeline:

- :mod:`nagsens.model` — game data (networks, polyhedral strategy sets, cost
  models) and the game operator / Jacobian assembly.
- :mod:`nagsens.solver` — projected-gradient equilibrium solver with
  warm-started active-set projections and KKT multiplier recovery.
- :mod:`nagsens.monotonicity` — curvature bounds and the strong-monotonicity
  certificate that backs solver step sizes and uniqueness claims.
- :mod:`nagsens.sensitivity` — active-set detection and the equilibrium
  derivative with respect to the exogenous parameters.
- :mod:`nagsens.quadratic` — scalar quadratic network games: walk-sum
  centralities, shock targeting, opinion dynamics, rumor spread estimates.
- :mod:`nagsens.routing` — atomic splittable routing games on road networks,
  total-travel-time sensitivities, and the bundled four-node fixture.
- :mod:`nagsens.cli` — the ``nagsens`` command line (CSV/JSON reports plus
  rendered figures).
"""

from .errors import (
    ConfigurationError,
    ConstraintQualificationError,
    DimensionError,
    IllConditionedError,
    InfeasibleSetError,
    ModelViolationError,
    NagsensError,
    NonConvergenceError,
    StepTooLargeError,
    UnsupportedRegimeError,
    ValidationError,
)
from .model import (
    AffineRoutingCost,
    FriedkinJohnsenCost,
    GameSpec,
    Interaction,
    LinearInteraction,
    Network,
    ParametricCostModel,
    PolyhedralSet,
    QuadraticShockCost,
    StrategyProfile,
)
from .solver import EquilibriumResult, SolverConfig, project, recover_multipliers, solve_nash
from .monotonicity import MonotonicityCertificate, certify, direct_margin, network_weight
from .sensitivity import (
    ActiveSetReport,
    SensitivityResult,
    detect_active_set,
    finite_difference_oracle,
    sensitivity_matrix,
)
from .quadratic import (
    CentralityReport,
    QuadraticGameSpec,
    RumorReport,
    TargetSelection,
    blocked_centrality,
    bonacich,
    centrality_report,
    fj_simulate,
    fj_to_game,
    fj_trajectory,
    keyplayer,
    leontief,
    rumor_output,
    rumor_pipeline,
    select_target,
    shock_sensitivity,
)
from .routing import (
    AffineTravelTime,
    AgentSpec,
    RoadNetwork,
    RoutingReport,
    RoutingScenario,
    build_feasible_set,
    flow_and_ttt_sensitivity,
    routing_operator,
    total_travel_time,
    wheatstone_scenario,
)
from .config import ConfigDocument, parse_config

__version__ = "0.1.0"

__all__ = [
    "AffineRoutingCost",
    "FriedkinJohnsenCost",
    "GameSpec",
    "Interaction",
    "LinearInteraction",
    "Network",
    "ParametricCostModel",
    "PolyhedralSet",
    "QuadraticShockCost",
    "StrategyProfile",
    "SolverConfig",
    "EquilibriumResult",
    "project",
    "solve_nash",
    "recover_multipliers",
    "MonotonicityCertificate",
    "certify",
    "direct_margin",
    "network_weight",
    "ActiveSetReport",
    "SensitivityResult",
    "detect_active_set",
    "sensitivity_matrix",
    "finite_difference_oracle",
    "CentralityReport",
    "QuadraticGameSpec",
    "RumorReport",
    "TargetSelection",
    "leontief",
    "bonacich",
    "blocked_centrality",
    "keyplayer",
    "centrality_report",
    "shock_sensitivity",
    "select_target",
    "fj_trajectory",
    "fj_simulate",
    "fj_to_game",
    "rumor_output",
    "rumor_pipeline",
    "RoadNetwork",
    "AgentSpec",
    "AffineTravelTime",
    "RoutingScenario",
    "RoutingReport",
    "build_feasible_set",
    "routing_operator",
    "total_travel_time",
    "flow_and_ttt_sensitivity",
    "wheatstone_scenario",
    "ConfigDocument",
    "parse_config",
    "NagsensError",
    "DimensionError",
    "ConfigurationError",
    "ValidationError",
    "ModelViolationError",
    "InfeasibleSetError",
    "NonConvergenceError",
    "StepTooLargeError",
    "ConstraintQualificationError",
    "IllConditionedError",
    "UnsupportedRegimeError",
]
