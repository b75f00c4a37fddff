"""Executable, seeded end-to-end audit fixtures.

Each scenario bundles a declared process, the audited model and policy, the
declared legal context, and the classification the audit is expected to
reach under the shipped seed. Parameters are stylized: they reproduce the
qualitative findings of the cases they echo (direction of group ranking,
counterfactual flips, justified risk pricing), not any real dataset.
"""

from __future__ import annotations

from dataclasses import dataclass

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
)
from .decision import DecisionPolicy
from .errors import InputError
from .estimation import ModelSpec
from .legal_audit import (
    Alternative,
    AuditConfig,
    AuditFinding,
    ContextDeclaration,
    run_audit,
)


@dataclass(frozen=True)
class Scenario:
    name: str
    dgp: DgpSpec
    model: ModelSpec
    policy: DecisionPolicy
    context: ContextDeclaration
    alternatives: tuple[Alternative, ...]
    expected_classification: str
    notes: str
    n: int
    seed: int
    fit_target: str = "y"

    def audit_config(self, workers: int = 1) -> AuditConfig:
        return AuditConfig(seed=self.seed, workers=workers)


def run_scenario(scenario: Scenario, workers: int = 1) -> tuple[Dataset, AuditFinding]:
    """Sample the scenario's population and execute the full audit."""
    data = sample(scenario.dgp, scenario.n, scenario.seed)
    finding = run_audit(
        scenario.dgp,
        data,
        scenario.model,
        scenario.policy,
        scenario.context,
        scenario.alternatives,
        scenario.audit_config(workers=workers),
        fit_target=scenario.fit_target,
    )
    return data, finding


def finnish_credit_scenario() -> Scenario:
    """Credit scoring from population-level protected attributes alone.

    True creditworthiness is driven by income, debt, and employment. The
    audited scorer never sees those: it scores on gender, first language,
    age, and residence, the attributes correlated with the legitimate
    drivers at the population level. Flipping gender shows men losing credit
    they would have received as women, so the audit flags direct
    discrimination risk, which no justification can cure.
    """
    dgp = DgpSpec(
        features=(
            FeatureSpec("gender", FeatureRole("protected"), Categorical(("male", "female"), (0.5, 0.5))),
            FeatureSpec(
                "language",
                FeatureRole("protected"),
                Categorical(("finnish", "swedish", "other"), (0.86, 0.05, 0.09)),
            ),
            FeatureSpec("age", FeatureRole("protected"), Gaussian(45.0, 12.0)),
            FeatureSpec("residence", FeatureRole("protected"), Categorical(("urban", "rural"), (0.7, 0.3))),
            FeatureSpec("employment", FeatureRole("legitimate"), Bernoulli(0.85)),
            FeatureSpec(
                "income",
                FeatureRole("legitimate"),
                Gaussian(0.0, 1.0),
                Dependence(
                    parents={
                        "gender": {"male": -0.35, "female": 0.0},
                        "language": {"finnish": -0.25, "swedish": 0.35, "other": -0.5},
                        "employment": 0.8,
                    },
                    noise_sd=0.9,
                ),
            ),
            FeatureSpec("debt", FeatureRole("legitimate"), Gaussian(0.0, 1.0)),
        ),
        outcome=OutcomeSpec(
            true_features=("income", "debt", "employment"),
            intercept=-1.1,
            coefficients={"income": -0.9, "debt": 0.6, "employment": -0.7},
        ),
    )
    # grant when predicted risk is at or below the portfolio's base default rate
    policy = DecisionPolicy.threshold(0.17)
    return Scenario(
        name="finnish_credit",
        dgp=dgp,
        model=ModelSpec(("gender", "language", "age", "residence"), l2_strength=1e-4),
        policy=policy,
        context=ContextDeclaration(
            protected_context="credit",
            stated_aim="assess individual creditworthiness to protect loan repayment",
            aim_asserted_legitimate=True,
            feature_rationale={
                "gender": "population-level repayment statistics only; no individual relevance",
                "language": "population-level repayment statistics only; segregates on ethnic lines",
                "age": "no individual credit-history use declared",
                "residence": "group-level stereotype without individual evidence",
            },
        ),
        alternatives=(
            Alternative(
                name="legitimate_features_model",
                model=ModelSpec(("income", "debt", "employment"), l2_strength=1e-4),
                policy=policy,
            ),
        ),
        expected_classification="DirectDiscriminationRisk",
        notes=(
            "Stylized replication of the first tribunal decision on automated credit scoring: "
            "the lender scored applicants by how common bad credit was in their demographic "
            "groups instead of assessing income, debts, or employment. A male applicant would "
            "have been granted the credit had he been a woman."
        ),
        n=20000,
        seed=20240601,
    )


def true_difference_scenario() -> Scenario:
    """Risk pricing on an age band that genuinely drives the outcome.

    Claim risk truly depends on the young-driver indicator, so true
    conditional parity fails: the scenario is the canonical case where
    estimation parity and outcome parity part ways. The insurer prices on
    the age band under a declared statutory exemption; the audit finds the
    disparity but also that the only supplied alternative (dropping the age
    band to force parity) costs real accuracy, leaving the case justifiable.
    """
    dgp = DgpSpec(
        features=(
            FeatureSpec("young", FeatureRole("protected"), Bernoulli(0.35)),
            FeatureSpec("mileage", FeatureRole("legitimate"), Gaussian(0.0, 1.0)),
        ),
        outcome=OutcomeSpec(
            true_features=("young", "mileage"),
            intercept=-1.6,
            coefficients={"young": 0.9, "mileage": 0.55},
        ),
    )
    policy = DecisionPolicy.threshold(0.25)
    return Scenario(
        name="true_difference",
        dgp=dgp,
        model=ModelSpec(("young", "mileage"), l2_strength=1e-4),
        policy=policy,
        context=ContextDeclaration(
            protected_context="credit",
            stated_aim="price motor finance risk from expected claim frequency",
            aim_asserted_legitimate=True,
            feature_rationale={
                "young": "age band is a key risk factor for claim frequency",
                "mileage": "exposure proxy with direct effect on claim frequency",
            },
            exemptions={
                "young": "financial services may use age as a risk-pricing criterion backed by "
                "reliable actuarial evidence"
            },
        ),
        alternatives=(
            Alternative(
                name="parity_forced_drop_age",
                model=ModelSpec(("mileage",), l2_strength=1e-4),
                policy=policy,
            ),
        ),
        expected_classification="IndirectJustifiable",
        notes=(
            "Age genuinely enters the true risk process, so forcing outcome parity on the age "
            "band measurably harms accuracy. With the statutory risk-pricing exemption declared, "
            "the disparity is anchored to a true difference rather than estimation error."
        ),
        n=20000,
        seed=20240602,
    )


def label_bias_scenario() -> Scenario:
    """Training labels corrupted against one group through its postcode profile.

    The true outcome depends only on income, so true parity holds. Recorded
    defaults, however, over-report one group (15% of its good outcomes are
    stamped bad), and the scorer is trained on the recorded labels with a
    postcode band that proxies group membership. The audit surfaces the
    target mismatch, the group's elevated estimation error, and a dominating
    alternative (training on the true outcome), leaving a prima facie
    indirect case that cannot be justified.
    """
    dgp = DgpSpec(
        features=(
            FeatureSpec("group", FeatureRole("protected"), Categorical(("blue", "green"), (0.65, 0.35))),
            FeatureSpec("income", FeatureRole("legitimate"), Gaussian(0.0, 1.0)),
            FeatureSpec(
                "postcode_band",
                FeatureRole("non_legitimate"),
                Gaussian(0.0, 1.0),
                Dependence(parents={"group": {"blue": 0.0, "green": 1.2}}, noise_sd=1.0),
            ),
        ),
        outcome=OutcomeSpec(
            true_features=("income",),
            intercept=-0.8,
            coefficients={"income": -0.85},
        ),
        proxy=ProxyLabelSpec(
            group_feature="group",
            flip0={"blue": 0.0, "green": 0.15},
            flip1={},
        ),
    )
    policy = DecisionPolicy.threshold(0.38)
    model = ModelSpec(("income", "postcode_band"), l2_strength=1e-4)
    return Scenario(
        name="label_bias",
        dgp=dgp,
        model=model,
        policy=policy,
        context=ContextDeclaration(
            protected_context="credit",
            stated_aim="predict default risk from repayment capacity",
            aim_asserted_legitimate=True,
            feature_rationale={
                "income": "direct driver of repayment capacity",
                "postcode_band": "no causal story linking the band to individual repayment",
            },
        ),
        alternatives=(
            Alternative(
                name="true_outcome_labels",
                model=model,
                policy=policy,
                fit_target="y",
            ),
        ),
        expected_classification="IndirectPrimaFacie",
        notes=(
            "Group disadvantage here is manufactured by the recorded label, not by true "
            "differences: the disadvantaged group's recorded default rate is inflated by "
            "group-dependent mislabeling, and the postcode band carries that bias into a "
            "facially neutral scorer."
        ),
        n=20000,
        seed=20240603,
        fit_target="y_proxy",
    )


def neutral_baseline_scenario() -> Scenario:
    """A clean control: legitimate scoring, true parity, no proxy label."""
    dgp = DgpSpec(
        features=(
            FeatureSpec("group", FeatureRole("protected"), Categorical(("a", "b"), (0.5, 0.5))),
            FeatureSpec("score", FeatureRole("legitimate"), Gaussian(0.0, 1.0)),
        ),
        outcome=OutcomeSpec(
            true_features=("score",),
            intercept=-1.0,
            coefficients={"score": 0.8},
        ),
    )
    policy = DecisionPolicy.threshold(0.3)
    return Scenario(
        name="neutral_baseline",
        dgp=dgp,
        model=ModelSpec(("score",), l2_strength=1e-4),
        policy=policy,
        context=ContextDeclaration(
            protected_context="credit",
            stated_aim="score repayment risk from verified financial standing",
            aim_asserted_legitimate=True,
        ),
        alternatives=(),
        expected_classification="NoProhibitedConduct",
        notes="Control fixture: outcome driven by a legitimate score independent of the group.",
        n=10000,
        seed=20240604,
    )


_BUILDERS = {
    "finnish_credit": finnish_credit_scenario,
    "true_difference": true_difference_scenario,
    "label_bias": label_bias_scenario,
    "neutral_baseline": neutral_baseline_scenario,
}


def scenario_names() -> tuple[str, ...]:
    return tuple(_BUILDERS)


def get_scenario(name: str) -> Scenario:
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise InputError(f"unknown scenario {name!r}; available: {sorted(_BUILDERS)}") from None
