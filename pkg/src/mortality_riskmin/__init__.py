"""Exact quadratic risk-minimization of life-insurance claims on finite
trees, with the death time observed through a progressively enlarged
filtration."""

from .calculus import (
    GkwParts,
    angle_bracket,
    are_orthogonal,
    bracket,
    conditional_moment_ratio,
    dual_projection,
    gkw,
    integrate,
    is_martingale,
)
from .enlargement import (
    EnlargementBundle,
    ModelReport,
    RandomTime,
    azema_bundle,
    compensator_identity_check,
    enlarge_filtration,
    hat_transform,
    is_independent,
    is_pseudo_stopping,
    survival_surface,
    validate_model,
)
from .estimators import RiskMinimizingHedger
from .hedging import (
    Claim,
    HedgeReport,
    ModelAssumptionError,
    annuity_split,
    endowment_split,
    evaluate_strategy,
    hedge_F,
    hedge_G,
    hedge_G_direct,
    hedge_G_predictable,
    independent_annuity_formula,
    independent_endowment_formula,
    phi_m,
    pseudo_stopping_formula,
    special_case_formulas,
    value_closed_form,
)
from .linalg import SingularSystemError, solve_min_norm
from .oracle import OracleSolution, brute_force_hedge, random_benefits, random_scenario
from .representation import Representation, claim_martingale, optional_representation
from .scenario import (
    Branch,
    ExplicitDeath,
    HazardDeath,
    IndependentDeath,
    Market,
    Scenario,
    ScenarioError,
    StoppingRule,
    binomial,
    build_space,
    explicit_tree,
    product_market,
    two_driver,
)
from .scenario_io import Expression, load_scenario_file, parse_scenario, parse_scenario_text
from .securitization import (
    Security,
    SecurityDecomposition,
    SecurityPrice,
    hedge_with_securities,
    independent_endowment_price,
    price_security,
    security_gkw,
)
from .space import (
    ADAPTED,
    PREDICTABLE,
    RAW,
    Diagnostic,
    FilteredSpace,
    Filtration,
    InvariantError,
    MeasurabilityError,
    Process,
    conditional_expectation,
    exact,
    project,
    validate_space,
)

__version__ = "0.1.0"

__all__ = [
    "ADAPTED",
    "Branch",
    "Claim",
    "Diagnostic",
    "EnlargementBundle",
    "ExplicitDeath",
    "Expression",
    "FilteredSpace",
    "Filtration",
    "GkwParts",
    "HazardDeath",
    "HedgeReport",
    "IndependentDeath",
    "InvariantError",
    "Market",
    "MeasurabilityError",
    "ModelAssumptionError",
    "ModelReport",
    "OracleSolution",
    "PREDICTABLE",
    "Process",
    "RAW",
    "RandomTime",
    "Representation",
    "RiskMinimizingHedger",
    "Scenario",
    "ScenarioError",
    "Security",
    "SecurityDecomposition",
    "SecurityPrice",
    "SingularSystemError",
    "StoppingRule",
    "angle_bracket",
    "annuity_split",
    "are_orthogonal",
    "azema_bundle",
    "binomial",
    "bracket",
    "brute_force_hedge",
    "build_space",
    "claim_martingale",
    "compensator_identity_check",
    "conditional_expectation",
    "conditional_moment_ratio",
    "dual_projection",
    "endowment_split",
    "enlarge_filtration",
    "evaluate_strategy",
    "exact",
    "explicit_tree",
    "gkw",
    "hat_transform",
    "hedge_F",
    "hedge_G",
    "hedge_G_direct",
    "hedge_G_predictable",
    "hedge_with_securities",
    "independent_annuity_formula",
    "independent_endowment_formula",
    "independent_endowment_price",
    "integrate",
    "is_independent",
    "is_martingale",
    "is_pseudo_stopping",
    "load_scenario_file",
    "optional_representation",
    "parse_scenario",
    "parse_scenario_text",
    "phi_m",
    "price_security",
    "product_market",
    "project",
    "pseudo_stopping_formula",
    "random_benefits",
    "random_scenario",
    "security_gkw",
    "solve_min_norm",
    "special_case_formulas",
    "survival_surface",
    "two_driver",
    "validate_model",
    "validate_space",
    "value_closed_form",
]
