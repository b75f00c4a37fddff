"""Staged audit turning metric evidence into a legal classification.

The stages run in a fixed order that mirrors how a claim is examined:

  1. data legitimacy (declared roles, proxy-target mismatch)
  2. direct discrimination (protected or exact-proxy inputs plus
     counterfactual decision flips)
  3. indirect discrimination (group disadvantage from a facially neutral
     rule, conditional on legitimate features)
  4. estimation analysis (group disparity in estimation error)
  5. justification (only for an indirect case; a direct finding admits no
     defence and is never downgraded)

Classification labels deliberately say "Risk" and "PrimaFacie": the engine
reports evidence, it does not adjudicate.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

import numpy as np

from . import dgp as dgp_mod
from .dgp import Dataset, DgpSpec, take
from .decision import DecisionPolicy, SelectionRates, decide, selection_rates
from .errors import ConfigurationError, FairauditError, InputError
from .estimation import FittedModel, ModelSpec, fit, log_loss, predict_columns, predict_dataset
from .metrics import (
    GammaDisparity,
    ParityReport,
    Strata,
    build_strata,
    conditional_statistical_parity_gap,
    gamma_group_disparity,
    parity_report,
    target_mismatch_gamma,
)
from .rng import substream

NO_PROHIBITED_CONDUCT = "NoProhibitedConduct"
DIRECT_DISCRIMINATION_RISK = "DirectDiscriminationRisk"
INDIRECT_PRIMA_FACIE = "IndirectPrimaFacie"
INDIRECT_JUSTIFIABLE = "IndirectJustifiable"
INCONCLUSIVE = "Inconclusive"

CLASSIFICATIONS = (
    NO_PROHIBITED_CONDUCT,
    DIRECT_DISCRIMINATION_RISK,
    INDIRECT_PRIMA_FACIE,
    INDIRECT_JUSTIFIABLE,
    INCONCLUSIVE,
)

PROTECTED_CONTEXTS = ("employment", "credit", "housing", "goods_and_services", "education", "other")


@dataclass(frozen=True)
class ContextDeclaration:
    """Declared legal context: the aim, the domain, and per-feature rationale.

    Legitimacy of the aim is normative and therefore declared, never
    inferred. ``exemptions`` records statutory carve-outs (e.g. the use of
    age as a risk-pricing criterion in financial services); an exempted
    feature does not trigger the direct stage but stays under indirect and
    justification scrutiny.
    """

    protected_context: str
    stated_aim: str
    aim_asserted_legitimate: bool
    feature_rationale: Mapping[str, str] = field(default_factory=dict)
    exemptions: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.protected_context not in PROTECTED_CONTEXTS:
            raise InputError(f"unknown protected context {self.protected_context!r}")
        if self.aim_asserted_legitimate and not self.stated_aim.strip():
            raise InputError("an aim asserted legitimate must be stated")


@dataclass(frozen=True)
class AuditConfig:
    """Tolerances and sampling parameters. Thresholds are configuration, never constants."""

    bins: int = 5
    bootstrap_replicates: int = 200
    confidence_level: float = 0.95
    gap_tolerance: float = 0.02
    min_group_n: int = 30
    min_flip_rate: float = 0.0  # any adverse flip rate above this flags the direct stage
    true_parity_tolerance: float = 0.02
    accuracy_margin: float = 0.01  # holdout log-loss margin for "comparable accuracy"
    disparity_reduction_tolerance: float = 0.02
    holdout_fraction: float = 0.3
    seed: int = 0
    workers: int = 1
    fit_max_iterations: int = 200
    fit_tolerance: float = 1e-8


@dataclass(frozen=True)
class Alternative:
    """A candidate (model, policy) supplied as justification evidence."""

    name: str
    model: ModelSpec
    policy: DecisionPolicy
    fit_target: str = "y"


@dataclass(frozen=True)
class FlipEvidence:
    """Counterfactual input-flip result for one protected (or proxy) feature.

    This is a model-input intervention, not a full legal counterfactual:
    other features are held fixed while the flipped column takes each
    alternative level.
    """

    feature: str
    attributed_to: str
    in_model: bool
    rate: float
    adverse_rates: Mapping[Any, float]
    adverse_direction: Any | None
    exempted: bool = False
    note: str | None = None


@dataclass(frozen=True)
class DirectFinding:
    flagged: bool
    evidence: tuple[FlipEvidence, ...]
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class IndirectFinding:
    flagged: bool
    pcp_description: str
    reports: Mapping[str, ParityReport]  # protected feature -> conditional favourable-rate gaps
    selection: Mapping[str, SelectionRates]
    flagged_groups: tuple[tuple[str, Any], ...]
    insufficient_groups: tuple[tuple[str, Any], ...]
    warnings: tuple[str, ...] = ()

    @property
    def inconclusive(self) -> bool:
        return bool(self.insufficient_groups) and not self.flagged


@dataclass(frozen=True)
class EstimationFinding:
    omega: Mapping[str, ParityReport]  # protected feature -> conditional estimation disparity
    gamma: Mapping[str, GammaDisparity]  # empty when no proxy label is declared
    gamma_applicable: bool
    gamma_flagged: bool
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class AlternativeOutcome:
    name: str
    log_loss: float
    decision_utility: float | None
    disparity: float
    disparity_reduction: float
    accuracy_cost: float
    dominates: bool


@dataclass(frozen=True)
class JustificationFinding:
    assessed: bool
    aim_asserted_legitimate: bool
    primary_log_loss: float | None = None
    primary_disparity: float | None = None
    primary_utility: float | None = None
    alternatives: tuple[AlternativeOutcome, ...] = ()
    less_discriminatory_alternative_found: bool = False
    accuracy_cost: float | None = None
    caveats: tuple[str, ...] = ()


@dataclass(frozen=True)
class AuditFinding:
    classification: str
    direct: DirectFinding
    indirect: IndirectFinding
    estimation: EstimationFinding
    justification: JustificationFinding
    narrative: tuple[str, ...]
    warnings: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# Counterfactual flips and direct discrimination


def counterfactual_flip_rate(
    model: FittedModel,
    policy: DecisionPolicy,
    data: Dataset,
    feature: str,
    levels: Sequence[Any] | None = None,
) -> FlipEvidence:
    """Re-predict and re-decide with the feature switched to each alternative level.

    The rate is the fraction of rows whose decision changes under some
    alternative level; adverse rates count, per group, the rows denied the
    favourable action that would have received it as a member of another
    group. A feature outside the model's inputs has rate 0 by construction.
    """
    col = data.column(feature)
    if levels is None:
        levels = [lv for lv in np.unique(col).tolist()]
    if len(levels) < 2:
        raise InputError(f"flip test needs at least two levels for feature {feature!r}")

    if feature not in model.spec.feature_names:
        return FlipEvidence(
            feature=feature,
            attributed_to=feature,
            in_model=False,
            rate=0.0,
            adverse_rates={lv: 0.0 for lv in levels},
            adverse_direction=None,
            note="feature is not a model input; predictions are unchanged by construction",
        )

    factual = decide(policy, predict_dataset(model, data))
    granted_somewhere = np.zeros(data.n, dtype=bool)
    changed = np.zeros(data.n, dtype=bool)
    for lv in levels:
        mod_columns = dict(data.columns)
        mod_columns[feature] = np.full(data.n, lv)
        d_lv = decide(policy, predict_columns(model, mod_columns))
        changed |= d_lv != factual
        granted_somewhere |= d_lv == 1

    adverse_rates: dict[Any, float] = {}
    for lv in levels:
        mask = col == np.asarray(lv)
        k = int(mask.sum())
        if k == 0:
            adverse_rates[lv] = 0.0
            continue
        harmed = mask & (factual == 0) & granted_somewhere
        adverse_rates[lv] = float(harmed.sum() / k)

    direction = None
    worst = 0.0
    for lv in levels:
        if adverse_rates[lv] > worst:
            worst = adverse_rates[lv]
            direction = lv
    return FlipEvidence(
        feature=feature,
        attributed_to=feature,
        in_model=True,
        rate=float(changed.mean()) if data.n else 0.0,
        adverse_rates=adverse_rates,
        adverse_direction=direction,
    )


def detect_direct(
    model: FittedModel,
    policy: DecisionPolicy,
    data: Dataset,
    spec: DgpSpec,
    context: ContextDeclaration,
    config: AuditConfig = AuditConfig(),
) -> DirectFinding:
    """Flag when the model takes a protected or exact-proxy input and flipping it
    costs some group the favourable action.

    Intent is irrelevant to the flag; exact proxies are attributed to their
    protected target, so dropping the protected column alone does not clear
    the stage. Declared statutory exemptions are recorded and excluded from
    the flag but not from the evidence.
    """
    evidence: list[FlipEvidence] = []
    notes: list[str] = [
        "direct stage notes: no hostile or malicious motive is required; a justification provides no defence"
    ]
    flagged = False
    for f in spec.features:
        if f.role.kind not in (dgp_mod.PROTECTED, dgp_mod.EXACT_PROXY):
            continue
        if f.name not in model.spec.feature_names:
            continue
        target = f.role.proxy_target if f.role.kind == dgp_mod.EXACT_PROXY else f.name
        exempted = f.name in context.exemptions or (target in context.exemptions)
        try:
            levels = spec.levels_of(f.name)
        except InputError:
            evidence.append(
                FlipEvidence(
                    feature=f.name,
                    attributed_to=target or f.name,
                    in_model=True,
                    rate=0.0,
                    adverse_rates={},
                    adverse_direction=None,
                    exempted=exempted,
                    note="continuous protected input; flip test undefined, recorded for review",
                )
            )
            continue
        ev = counterfactual_flip_rate(model, policy, data, f.name, levels)
        ev = replace(ev, attributed_to=target or f.name, exempted=exempted)
        if exempted:
            ev = replace(
                ev,
                note=f"declared exemption: {context.exemptions.get(f.name) or context.exemptions.get(target)}",
            )
        evidence.append(ev)
        if not exempted and any(r > config.min_flip_rate for r in ev.adverse_rates.values()):
            flagged = True
    return DirectFinding(flagged=flagged, evidence=tuple(evidence), notes=tuple(notes))


# ---------------------------------------------------------------------------
# Indirect discrimination


def detect_indirect(
    decisions: np.ndarray,
    data: Dataset,
    spec: DgpSpec,
    strata: Strata,
    pcp_description: str,
    config: AuditConfig = AuditConfig(),
    protected_features: Sequence[str] | None = None,
) -> IndirectFinding:
    """Flag groups whose conditional favourable-action rate gap is material.

    A group flags when its gap exceeds the configured tolerance and the
    bootstrap interval excludes zero. Groups below the minimum sample size
    contribute an inconclusive warning instead of a flag.
    """
    protected = (
        tuple(protected_features)
        if protected_features is not None
        else spec.names_with_role(dgp_mod.PROTECTED)
    )
    decisions = np.asarray(decisions, dtype=np.float64)

    reports: dict[str, ParityReport] = {}
    selection: dict[str, SelectionRates] = {}
    flagged_groups: list[tuple[str, Any]] = []
    insufficient: list[tuple[str, Any]] = []
    warnings: list[str] = []

    for name in protected:
        groups = data.column(name)
        report = parity_report(
            "conditional_favourable_rate_gap",
            decisions,
            groups,
            strata,
            replicates=config.bootstrap_replicates,
            level=config.confidence_level,
            seed=config.seed,
            workers=config.workers,
        )
        reports[name] = report
        selection[name] = selection_rates(decisions.astype(np.int64), groups)
        for lv, gap in report.per_group.items():
            if report.group_sizes.get(lv, 0) < config.min_group_n:
                insufficient.append((name, lv))
                warnings.append(
                    f"group {name}={lv!r} has {report.group_sizes.get(lv, 0)} rows "
                    f"(minimum {config.min_group_n}); contribution inconclusive"
                )
                continue
            if gap > config.gap_tolerance and report.cis[lv].lower > 0.0:
                flagged_groups.append((name, lv))
        warnings.extend(report.warnings)

    return IndirectFinding(
        flagged=bool(flagged_groups),
        pcp_description=pcp_description,
        reports=reports,
        selection=selection,
        flagged_groups=tuple(flagged_groups),
        insufficient_groups=tuple(insufficient),
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# Justification


def _holdout_split(n: int, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    k = int(round(fraction * n))
    perm = substream(seed, "holdout").permutation(n)
    return perm[k:], perm[:k]  # train, holdout


def _candidate_outcome(
    model_spec: ModelSpec,
    policy: DecisionPolicy,
    fit_target: str,
    train: Dataset,
    holdout: Dataset,
    spec: DgpSpec,
    protected: Sequence[str],
    config: AuditConfig,
) -> tuple[float, float | None, float]:
    fitted = fit(
        train,
        model_spec,
        target=fit_target,
        max_iterations=config.fit_max_iterations,
        tolerance=config.fit_tolerance,
    )
    pi = predict_dataset(fitted, holdout)
    loss = log_loss(holdout.y.astype(np.float64), pi)
    actions = decide(policy, pi)
    utility = None
    if policy.kind == "expected_utility" and policy.utility is not None:
        u = policy.utility.as_array()
        utility = float(u[holdout.y, actions].mean())
    legit = spec.names_with_role(dgp_mod.LEGITIMATE)
    strata = build_strata(holdout, legit, config.bins)
    disparity = 0.0
    for name in protected:
        gaps = conditional_statistical_parity_gap(
            actions.astype(np.float64), holdout.column(name), strata
        )
        if gaps.per_group:
            disparity = max(disparity, max(gaps.per_group.values()))
    return loss, utility, disparity


def assess_justification(
    context: ContextDeclaration,
    primary: tuple[ModelSpec, DecisionPolicy],
    alternatives: Sequence[Alternative],
    spec: DgpSpec,
    data: Dataset,
    config: AuditConfig = AuditConfig(),
    fit_target: str = "y",
    protected_features: Sequence[str] | None = None,
) -> JustificationFinding:
    """Compare the primary against supplied alternatives on accuracy and disparity.

    Candidates are refit on a deterministic train split and scored on the
    holdout: log-loss against the true outcome, realized decision utility
    (when the policy carries a utility matrix), and the worst conditional
    favourable-rate gap. An alternative dominates when it cuts disparity by
    more than the tolerance at accuracy within the configured margin.
    """
    if not context.aim_asserted_legitimate:
        return JustificationFinding(
            assessed=False,
            aim_asserted_legitimate=False,
            caveats=("aim not asserted legitimate; an indirect case cannot be justified",),
        )

    protected = (
        tuple(protected_features)
        if protected_features is not None
        else spec.names_with_role(dgp_mod.PROTECTED)
    )
    train_idx, holdout_idx = _holdout_split(data.n, config.holdout_fraction, config.seed)
    train, holdout = take(data, train_idx), take(data, holdout_idx)

    p_loss, p_utility, p_disparity = _candidate_outcome(
        primary[0], primary[1], fit_target, train, holdout, spec, protected, config
    )

    outcomes: list[AlternativeOutcome] = []
    found = False
    best_cost: float | None = None
    for alt in alternatives:
        loss, utility, disparity = _candidate_outcome(
            alt.model, alt.policy, alt.fit_target, train, holdout, spec, protected, config
        )
        reduction = p_disparity - disparity
        cost = loss - p_loss
        dominates = reduction > config.disparity_reduction_tolerance and cost <= config.accuracy_margin
        outcomes.append(
            AlternativeOutcome(
                name=alt.name,
                log_loss=loss,
                decision_utility=utility,
                disparity=disparity,
                disparity_reduction=reduction,
                accuracy_cost=cost,
                dominates=dominates,
            )
        )
        if dominates:
            found = True
            best_cost = cost if best_cost is None else min(best_cost, cost)

    caveats: tuple[str, ...] = ()
    if not alternatives:
        caveats = ("no alternatives supplied; justification evidence is inconclusive",)

    return JustificationFinding(
        assessed=True,
        aim_asserted_legitimate=True,
        primary_log_loss=p_loss,
        primary_disparity=p_disparity,
        primary_utility=p_utility,
        alternatives=tuple(outcomes),
        less_discriminatory_alternative_found=found,
        accuracy_cost=best_cost,
        caveats=caveats,
    )


# ---------------------------------------------------------------------------
# Classification and the full audit


def classify(
    direct: DirectFinding,
    indirect: IndirectFinding,
    justification: JustificationFinding,
) -> str:
    """Combine stage findings into the audit classification.

    A direct flag is never downgraded: the law admits no defence for direct
    discrimination. An indirect case is justifiable only when alternatives
    were actually assessed, none dominated, and the aim is asserted
    legitimate.
    """
    if direct.flagged:
        return DIRECT_DISCRIMINATION_RISK
    if indirect.flagged:
        if (
            justification.assessed
            and justification.aim_asserted_legitimate
            and len(justification.alternatives) > 0
            and not justification.less_discriminatory_alternative_found
        ):
            return INDIRECT_JUSTIFIABLE
        return INDIRECT_PRIMA_FACIE
    if indirect.inconclusive:
        return INCONCLUSIVE
    return NO_PROHIBITED_CONDUCT


def run_audit(
    spec: DgpSpec,
    data: Dataset,
    model: ModelSpec,
    policy: DecisionPolicy,
    context: ContextDeclaration,
    alternatives: Sequence[Alternative] = (),
    config: AuditConfig = AuditConfig(),
    fit_target: str = "y",
) -> AuditFinding:
    """Execute the staged audit and return the finding with its narrative log."""
    dgp_mod.require_valid(spec)
    protected = spec.names_with_role(dgp_mod.PROTECTED)
    legit = spec.names_with_role(dgp_mod.LEGITIMATE)
    if not protected or not legit:
        raise ConfigurationError(
            "audit requires at least one protected and one legitimate feature in the DGP"
        )

    groupable: list[str] = []
    continuous_protected: list[str] = []
    for name in protected:
        try:
            spec.levels_of(name)
            groupable.append(name)
        except InputError:
            continuous_protected.append(name)

    narrative: list[str] = []
    warnings: list[str] = []

    try:
        fitted = fit(
            data,
            model,
            target=fit_target,
            max_iterations=config.fit_max_iterations,
            tolerance=config.fit_tolerance,
        )
        warnings.extend(fitted.warnings)
        pi_hat = predict_dataset(fitted, data)
        decisions = decide(policy, pi_hat)
        strata = build_strata(data, legit, config.bins)
        warnings.extend(strata.warnings)

        # Stage 1: data legitimacy
        roles = {
            "protected": protected,
            "exact_proxy": spec.names_with_role(dgp_mod.EXACT_PROXY),
            "legitimate": legit,
            "non_legitimate": spec.names_with_role(dgp_mod.NON_LEGITIMATE),
        }
        narrative.append(
            "stage 1 (data legitimacy): roles - "
            + "; ".join(f"{k}: {list(v)}" for k, v in roles.items())
        )
        for name, rationale in sorted(context.exemptions.items()):
            narrative.append(f"stage 1: declared exemption on {name!r}: {rationale}")
        if continuous_protected:
            narrative.append(
                f"stage 1: continuous protected feature(s) {continuous_protected} have no "
                "enumerable groups; group metrics computed on the categorical protected features"
            )

        gamma_reports: dict[str, GammaDisparity] = {}
        gamma_applicable = spec.proxy is not None
        gamma_flagged = False
        if gamma_applicable:
            gamma = target_mismatch_gamma(spec, data)
            for name in groupable:
                gamma_reports[name] = gamma_group_disparity(
                    gamma,
                    data.column(name),
                    strata,
                    tolerance=config.gap_tolerance,
                    replicates=config.bootstrap_replicates,
                    level=config.confidence_level,
                    seed=config.seed,
                    workers=config.workers,
                )
            raw_flag = any(g.flagged for g in gamma_reports.values())
            # The legal flag attaches to actually training on the proxy target.
            gamma_flagged = raw_flag and fit_target == "y_proxy"
            if gamma_flagged:
                worst = max(g.gaps.max_gap for g in gamma_reports.values())
                narrative.append(
                    f"stage 1: model is trained on the proxy target; max target-mismatch disparity "
                    f"{worst:.4f} exceeds tolerance {config.gap_tolerance}: "
                    "use of proxy target may be discriminatory"
                )
            elif raw_flag:
                narrative.append(
                    "stage 1: proxy label shows group-dependent mismatch, but the model is trained "
                    "on the true outcome; no proxy-target flag"
                )
            else:
                narrative.append("stage 1: proxy label declared; no material target-mismatch disparity")
        else:
            narrative.append("stage 1: no proxy target declared; target-mismatch check not applicable")

        # Stage 2: direct discrimination
        direct = detect_direct(fitted, policy, data, spec, context, config)
        for ev in direct.evidence:
            line = (
                f"stage 2 (direct): input {ev.feature!r} (protected characteristic {ev.attributed_to!r}) "
                f"flip rate {ev.rate:.4f}"
            )
            if ev.adverse_direction is not None:
                line += f", adverse to {ev.adverse_direction!r}"
            if ev.exempted:
                line += " [declared exemption, excluded from the direct flag]"
            narrative.append(line)
        if not direct.evidence:
            narrative.append("stage 2 (direct): no protected or exact-proxy feature among model inputs")
        narrative.append(
            "stage 2 (direct): "
            + ("flagged; intent is irrelevant and no justification defence applies" if direct.flagged else "not flagged")
        )

        # Stage 3: indirect discrimination
        pcp = f"(logistic model on {list(model.feature_names)}; {policy.describe()})"
        indirect = detect_indirect(decisions, data, spec, strata, pcp, config, protected_features=groupable)
        warnings.extend(indirect.warnings)
        narrative.append(f"stage 3 (indirect): PCP = {pcp}")
        for name, report in indirect.reports.items():
            gaps = ", ".join(
                f"{lv!r}: {gap:.4f} [{report.cis[lv].lower:.4f}, {report.cis[lv].upper:.4f}]"
                for lv, gap in report.per_group.items()
            )
            narrative.append(f"stage 3: conditional favourable-rate gap for {name!r}: {gaps}")
        narrative.append(
            "stage 3 (indirect): "
            + (
                f"flagged for {[f'{f}={lv!r}' for f, lv in indirect.flagged_groups]}"
                if indirect.flagged
                else "not flagged"
            )
        )

        # Stage 4: estimation analysis
        eps = pi_hat - dgp_mod.true_probs(spec, data.columns, data.n)
        omega_reports: dict[str, ParityReport] = {}
        for name in groupable:
            omega_reports[name] = parity_report(
                "conditional_estimation_disparity",
                eps,
                data.column(name),
                strata,
                replicates=config.bootstrap_replicates,
                level=config.confidence_level,
                seed=config.seed,
                workers=config.workers,
            )
            narrative.append(
                f"stage 4 (estimation): omega for {name!r}: "
                + ", ".join(f"{lv!r}: {g:.4f}" for lv, g in omega_reports[name].per_group.items())
            )
        estimation = EstimationFinding(
            omega=omega_reports,
            gamma=gamma_reports,
            gamma_applicable=gamma_applicable,
            gamma_flagged=gamma_flagged,
        )

        # Stage 5: justification (reachable only through an indirect case)
        if indirect.flagged:
            justification = assess_justification(
                context,
                (model, policy),
                alternatives,
                spec,
                data,
                config,
                fit_target=fit_target,
                protected_features=groupable,
            )
            if justification.assessed:
                narrative.append(
                    f"stage 5 (justification): primary holdout log-loss {justification.primary_log_loss:.4f}, "
                    f"disparity {justification.primary_disparity:.4f}"
                )
                for alt in justification.alternatives:
                    narrative.append(
                        f"stage 5: alternative {alt.name!r}: log-loss {alt.log_loss:.4f} "
                        f"(cost {alt.accuracy_cost:+.4f}), disparity {alt.disparity:.4f} "
                        f"(reduction {alt.disparity_reduction:+.4f})"
                        + (" -> dominates" if alt.dominates else "")
                    )
                for caveat in justification.caveats:
                    narrative.append(f"stage 5: caveat: {caveat}")
            else:
                for caveat in justification.caveats:
                    narrative.append(f"stage 5 (justification): not assessed: {caveat}")
        else:
            justification = JustificationFinding(
                assessed=False,
                aim_asserted_legitimate=context.aim_asserted_legitimate,
                caveats=("no indirect case to justify",),
            )
            narrative.append("stage 5 (justification): not reached (no indirect finding)")
        if direct.flagged:
            narrative.append(
                "stage 5: note: the direct finding stands regardless of justification evidence"
            )

    except FairauditError as exc:
        narrative.append(f"stage failure: {exc}")
        empty_direct = DirectFinding(flagged=False, evidence=())
        empty_indirect = IndirectFinding(
            flagged=False, pcp_description="", reports={}, selection={},
            flagged_groups=(), insufficient_groups=(),
        )
        empty_est = EstimationFinding(omega={}, gamma={}, gamma_applicable=False, gamma_flagged=False)
        empty_just = JustificationFinding(assessed=False, aim_asserted_legitimate=False)
        return AuditFinding(
            classification=INCONCLUSIVE,
            direct=empty_direct,
            indirect=empty_indirect,
            estimation=empty_est,
            justification=empty_just,
            narrative=tuple(narrative),
            warnings=tuple(warnings) + (str(exc),),
        )

    classification = classify(direct, indirect, justification)
    narrative.append(f"classification: {classification}")
    return AuditFinding(
        classification=classification,
        direct=direct,
        indirect=indirect,
        estimation=estimation,
        justification=justification,
        narrative=tuple(narrative),
        warnings=tuple(warnings),
    )
