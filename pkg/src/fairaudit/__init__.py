"""fairaudit: decision-theoretic discrimination audits over declared data-generating processes.

Declare the true process p(y, x) with feature roles, fit the estimated model,
apply a decision policy, and run the staged audit: data legitimacy, direct
discrimination, indirect discrimination, estimation disparity, and
justification.
"""

from .dgp import (
    Bernoulli,
    Categorical,
    Dataset,
    Dependence,
    DgpSpec,
    FeatureRole,
    FeatureSpec,
    Gaussian,
    OutcomeSpec,
    ProxyLabelSpec,
    sample,
    true_group_parity_check,
    true_prob,
    validate,
)
from .decision import (
    DecisionPolicy,
    UtilityMatrix,
    decide,
    decide_threshold,
    decide_utility,
    selection_rates,
)
from .errors import (
    ConfigurationError,
    FairauditError,
    InputError,
    IOFailure,
    NotApplicableError,
)
from .estimation import (
    FittedModel,
    ModelSpec,
    estimation_error,
    fit,
    log_loss,
    oracle_model,
    predict,
    predict_dataset,
)
from .legal_audit import (
    Alternative,
    AuditConfig,
    AuditFinding,
    ContextDeclaration,
    assess_justification,
    classify,
    counterfactual_flip_rate,
    detect_direct,
    detect_indirect,
    run_audit,
)
from .metrics import (
    Interval,
    ParityReport,
    Strata,
    bootstrap_ci,
    build_strata,
    conditional_estimation_disparity,
    conditional_statistical_parity_gap,
    gamma_group_disparity,
    parity_report,
    statistical_parity_gap,
    target_mismatch_gamma,
)
from .scenarios import (
    Scenario,
    finnish_credit_scenario,
    get_scenario,
    label_bias_scenario,
    neutral_baseline_scenario,
    run_scenario,
    scenario_names,
    true_difference_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # dgp
    "Bernoulli",
    "Categorical",
    "Dataset",
    "Dependence",
    "DgpSpec",
    "FeatureRole",
    "FeatureSpec",
    "Gaussian",
    "OutcomeSpec",
    "ProxyLabelSpec",
    "sample",
    "true_group_parity_check",
    "true_prob",
    "validate",
    # decision
    "DecisionPolicy",
    "UtilityMatrix",
    "decide",
    "decide_threshold",
    "decide_utility",
    "selection_rates",
    # errors
    "ConfigurationError",
    "FairauditError",
    "InputError",
    "IOFailure",
    "NotApplicableError",
    # estimation
    "FittedModel",
    "ModelSpec",
    "estimation_error",
    "fit",
    "log_loss",
    "oracle_model",
    "predict",
    "predict_dataset",
    # legal audit
    "Alternative",
    "AuditConfig",
    "AuditFinding",
    "ContextDeclaration",
    "assess_justification",
    "classify",
    "counterfactual_flip_rate",
    "detect_direct",
    "detect_indirect",
    "run_audit",
    # metrics
    "Interval",
    "ParityReport",
    "Strata",
    "bootstrap_ci",
    "build_strata",
    "conditional_estimation_disparity",
    "conditional_statistical_parity_gap",
    "gamma_group_disparity",
    "parity_report",
    "statistical_parity_gap",
    "target_mismatch_gamma",
    # scenarios
    "Scenario",
    "finnish_credit_scenario",
    "get_scenario",
    "label_bias_scenario",
    "neutral_baseline_scenario",
    "run_scenario",
    "scenario_names",
    "true_difference_scenario",
]
