"""Declared data-generating processes.

The package treats the joint distribution p(y, x) as something the user
*declares* rather than estimates: feature roles (protected / exact proxy /
legitimate / non-legitimate), marginal distributions, linear structural
equations in declaration order, a logistic true-outcome model, and an
optional group-dependent label corruption that produces proxy labels.

Declaring the process makes the quantities that audits reason about (true
probabilities, estimation error, label corruption) computable row by row.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.special import expit, ndtri

from .errors import ConfigurationError, InputError
from .rng import substream

PROTECTED = "protected"
EXACT_PROXY = "exact_proxy"
LEGITIMATE = "legitimate"
NON_LEGITIMATE = "non_legitimate"

_ROLE_KINDS = (PROTECTED, EXACT_PROXY, LEGITIMATE, NON_LEGITIMATE)

_PROB_TOL = 1e-12


@dataclass(frozen=True)
class FeatureRole:
    """Role of a feature under the audit. ``proxy_target`` only for exact proxies."""

    kind: str
    proxy_target: str | None = None


@dataclass(frozen=True)
class Categorical:
    levels: tuple[Any, ...]
    probabilities: tuple[float, ...]

    @property
    def is_numeric(self) -> bool:
        return all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in self.levels)


@dataclass(frozen=True)
class Bernoulli:
    p: float


@dataclass(frozen=True)
class Gaussian:
    mean: float
    sd: float


@dataclass(frozen=True)
class Dependence:
    """Linear structural equation for a Gaussian feature.

    ``parents`` maps an earlier feature name to either a linear coefficient
    (numeric parents) or a level->offset mapping (categorical parents).
    The child's value is ``mean + sum(contributions) + Normal(0, noise_sd)``.
    """

    parents: Mapping[str, Any]
    noise_sd: float


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    role: FeatureRole
    distribution: Categorical | Bernoulli | Gaussian
    dependence: Dependence | None = None


@dataclass(frozen=True)
class OutcomeSpec:
    """Logistic true model: P(y=1 | x_true) = expit(intercept + sum(beta * x))."""

    true_features: tuple[str, ...]
    intercept: float
    coefficients: Mapping[str, float]
    link: str = "logistic"


@dataclass(frozen=True)
class ProxyLabelSpec:
    """Group-dependent label corruption producing the proxy label.

    ``flip0[g]`` is P(proxy=1 | y=0, group=g); ``flip1[g]`` is
    P(proxy=0 | y=1, group=g). Levels absent from a map flip with
    probability 0.
    """

    group_feature: str
    flip0: Mapping[Any, float]
    flip1: Mapping[Any, float]


@dataclass(frozen=True)
class DgpSpec:
    features: tuple[FeatureSpec, ...]
    outcome: OutcomeSpec
    proxy: ProxyLabelSpec | None = None

    def feature(self, name: str) -> FeatureSpec:
        for f in self.features:
            if f.name == name:
                return f
        raise InputError(f"unknown feature {name!r}")

    def feature_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def names_with_role(self, kind: str) -> tuple[str, ...]:
        return tuple(f.name for f in self.features if f.role.kind == kind)

    def levels_of(self, name: str) -> tuple[Any, ...]:
        """Enumerable levels of a categorical or Bernoulli feature."""
        dist = self.feature(name).distribution
        if isinstance(dist, Categorical):
            return dist.levels
        if isinstance(dist, Bernoulli):
            return (0, 1)
        raise InputError(f"feature {name!r} is continuous and has no levels")


@dataclass(frozen=True)
class Dataset:
    """A sampled population. All vectors have length ``n``; arrays are read-only."""

    n: int
    columns: Mapping[str, np.ndarray]
    y: np.ndarray
    y_proxy: np.ndarray | None
    pi_true: np.ndarray

    def __post_init__(self) -> None:
        for arr in list(self.columns.values()) + [self.y, self.pi_true]:
            arr.flags.writeable = False
        if self.y_proxy is not None:
            self.y_proxy.flags.writeable = False

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise InputError(f"dataset has no column {name!r}") from None


@dataclass(frozen=True)
class Violation:
    feature: str
    rule: str
    message: str

    def __str__(self) -> str:
        return f"[{self.feature}] {self.rule}: {self.message}"


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _numeric_valued(spec_feature: FeatureSpec) -> bool:
    dist = spec_feature.distribution
    if isinstance(dist, (Bernoulli, Gaussian)):
        return True
    return dist.is_numeric


def validate(spec: DgpSpec) -> list[Violation]:
    """Check every declaration invariant. Violations are data, not exceptions."""
    out: list[Violation] = []
    seen: dict[str, FeatureSpec] = {}

    for f in spec.features:
        if not f.name or not f.name.replace("_", "").isalnum():
            out.append(Violation(f.name, "identifier", "feature name must be a plain identifier"))
        if f.name in seen:
            out.append(Violation(f.name, "uniqueness", "feature declared twice"))

        if f.role.kind not in _ROLE_KINDS:
            out.append(Violation(f.name, "role", f"unknown role kind {f.role.kind!r}"))
        if f.role.kind == EXACT_PROXY:
            target = f.role.proxy_target
            if target is None or target not in seen or seen[target].role.kind != PROTECTED:
                out.append(
                    Violation(
                        f.name,
                        "unknown proxy target",
                        f"exact proxy must target an earlier protected feature, got {target!r}",
                    )
                )
        elif f.role.proxy_target is not None:
            out.append(Violation(f.name, "role", "proxy_target is only valid for exact proxies"))

        dist = f.distribution
        if isinstance(dist, Categorical):
            if len(dist.levels) == 0:
                out.append(Violation(f.name, "levels", "categorical needs at least one level"))
            if len(set(dist.levels)) != len(dist.levels):
                out.append(Violation(f.name, "levels", "categorical levels must be distinct"))
            if len(dist.levels) != len(dist.probabilities):
                out.append(Violation(f.name, "levels", "levels and probabilities differ in length"))
            if any(p < 0.0 or p > 1.0 for p in dist.probabilities):
                out.append(Violation(f.name, "probability range", "probabilities must lie in [0,1]"))
            if dist.probabilities and abs(sum(dist.probabilities) - 1.0) > _PROB_TOL:
                out.append(
                    Violation(
                        f.name,
                        "probabilities sum != 1",
                        f"sum is {sum(dist.probabilities)!r}",
                    )
                )
        elif isinstance(dist, Bernoulli):
            if not 0.0 <= dist.p <= 1.0:
                out.append(Violation(f.name, "probability range", f"p={dist.p} outside [0,1]"))
        elif isinstance(dist, Gaussian):
            if dist.sd < 0.0:
                out.append(Violation(f.name, "sd >= 0", f"sd={dist.sd}"))
        else:
            out.append(Violation(f.name, "distribution", f"unknown distribution {dist!r}"))

        dep = f.dependence
        if dep is not None:
            if not isinstance(dist, Gaussian):
                out.append(
                    Violation(f.name, "structural equation", "only Gaussian features may have parents")
                )
            if dep.noise_sd < 0.0:
                out.append(Violation(f.name, "sd >= 0", f"noise_sd={dep.noise_sd}"))
            for parent, coeff in dep.parents.items():
                if parent not in seen:
                    out.append(
                        Violation(
                            f.name,
                            "parent order",
                            f"parent {parent!r} must be declared before {f.name!r}",
                        )
                    )
                    continue
                pdist = seen[parent].distribution
                if isinstance(coeff, Mapping):
                    if not isinstance(pdist, Categorical):
                        out.append(
                            Violation(
                                f.name,
                                "structural equation",
                                f"level offsets require a categorical parent, {parent!r} is not",
                            )
                        )
                    else:
                        missing = set(pdist.levels) - set(coeff.keys())
                        if missing:
                            out.append(
                                Violation(
                                    f.name,
                                    "structural equation",
                                    f"offsets for parent {parent!r} miss levels {sorted(map(str, missing))}",
                                )
                            )
                elif _is_number(coeff):
                    if not _numeric_valued(seen[parent]):
                        out.append(
                            Violation(
                                f.name,
                                "structural equation",
                                f"linear coefficient on non-numeric parent {parent!r}",
                            )
                        )
                else:
                    out.append(
                        Violation(f.name, "structural equation", f"bad coefficient {coeff!r}")
                    )
        seen[f.name] = f

    if len(spec.outcome.true_features) == 0:
        out.append(Violation("<outcome>", "true features", "true feature set must be non-empty"))
    for name in spec.outcome.true_features:
        if name not in seen:
            out.append(Violation("<outcome>", "unknown feature", f"true feature {name!r} undeclared"))
        elif not _numeric_valued(seen[name]):
            out.append(
                Violation("<outcome>", "numeric feature", f"true feature {name!r} is not numeric-valued")
            )
    for name in spec.outcome.coefficients:
        if name not in spec.outcome.true_features:
            out.append(
                Violation("<outcome>", "coefficient scope", f"coefficient on {name!r} outside true features")
            )
    if spec.outcome.link != "logistic":
        out.append(Violation("<outcome>", "link", f"unsupported link {spec.outcome.link!r}"))

    if spec.proxy is not None:
        g = spec.proxy.group_feature
        if g not in seen:
            out.append(Violation("<proxy>", "unknown feature", f"group feature {g!r} undeclared"))
        else:
            gdist = seen[g].distribution
            if isinstance(gdist, Categorical):
                levels: set[Any] | None = set(gdist.levels)
            elif isinstance(gdist, Bernoulli):
                levels = {0, 1}
            else:
                levels = None
                out.append(Violation("<proxy>", "group feature", f"{g!r} has no enumerable levels"))
            for label, flips in (("flip0", spec.proxy.flip0), ("flip1", spec.proxy.flip1)):
                for level, p in flips.items():
                    if not 0.0 <= p <= 1.0:
                        out.append(
                            Violation("<proxy>", "probability range", f"{label}[{level!r}]={p} outside [0,1]")
                        )
                    if levels is not None and level not in levels:
                        out.append(
                            Violation("<proxy>", "unknown level", f"{label} keyed by unknown level {level!r}")
                        )
    return out


def require_valid(spec: DgpSpec) -> None:
    violations = validate(spec)
    if violations:
        raise ConfigurationError(f"invalid DGP spec: {violations[0]}")


def _column_values(f: FeatureSpec, dist: Categorical, idx: np.ndarray) -> np.ndarray:
    if dist.is_numeric:
        return np.asarray(dist.levels, dtype=np.float64)[idx]
    return np.asarray(dist.levels, dtype=np.str_)[idx]


def _parent_contribution(coeff: Any, parent_spec: FeatureSpec, col: np.ndarray) -> np.ndarray:
    if isinstance(coeff, Mapping):
        dist = parent_spec.distribution
        assert isinstance(dist, Categorical)
        offsets = np.asarray([float(coeff[lv]) for lv in dist.levels], dtype=np.float64)
        idx = np.zeros(col.shape[0], dtype=np.intp)
        for i, lv in enumerate(dist.levels):
            idx[col == np.asarray(lv)] = i
        return offsets[idx]
    return float(coeff) * col.astype(np.float64)


def sample(spec: DgpSpec, n: int, seed: int) -> Dataset:
    """Draw ``n`` rows from the declared process, deterministically in ``(spec, n, seed)``.

    Each feature, the outcome draw, and the proxy flips use their own
    counter-derived substream, so adding a feature never perturbs the draws
    of another and row i's value is independent of evaluation order.
    """
    require_valid(spec)
    if n < 0:
        raise InputError("n must be >= 0")

    columns: dict[str, np.ndarray] = {}
    specs: dict[str, FeatureSpec] = {}
    for j, f in enumerate(spec.features):
        u = substream(seed, "feature", j).random(n)
        dist = f.distribution
        if isinstance(dist, Gaussian):
            if f.dependence is None:
                col = dist.mean + dist.sd * ndtri(u)
            else:
                col = np.full(n, dist.mean, dtype=np.float64)
                for parent, coeff in f.dependence.parents.items():
                    col = col + _parent_contribution(coeff, specs[parent], columns[parent])
                col = col + f.dependence.noise_sd * ndtri(u)
            columns[f.name] = np.asarray(col, dtype=np.float64)
        elif isinstance(dist, Bernoulli):
            columns[f.name] = (u < dist.p).astype(np.int64)
        else:
            cum = np.cumsum(np.asarray(dist.probabilities, dtype=np.float64))
            idx = np.minimum(np.searchsorted(cum, u, side="right"), len(dist.levels) - 1)
            columns[f.name] = _column_values(f, dist, idx)
        specs[f.name] = f

    pi = true_probs(spec, columns, n)
    y = (substream(seed, "outcome").random(n) < pi).astype(np.int64)

    y_proxy = None
    if spec.proxy is not None:
        group = columns[spec.proxy.group_feature]
        flip_p = np.zeros(n, dtype=np.float64)
        for level in spec.levels_of(spec.proxy.group_feature):
            mask = group == np.asarray(level)
            p0 = float(spec.proxy.flip0.get(level, 0.0))
            p1 = float(spec.proxy.flip1.get(level, 0.0))
            flip_p[mask & (y == 0)] = p0
            flip_p[mask & (y == 1)] = p1
        flipped = substream(seed, "proxy").random(n) < flip_p
        y_proxy = np.where(flipped, 1 - y, y).astype(np.int64)

    return Dataset(n=n, columns=columns, y=y, y_proxy=y_proxy, pi_true=pi)


def take(data: Dataset, idx: np.ndarray) -> Dataset:
    """Row subset of a dataset (used for deterministic train/holdout splits)."""
    return Dataset(
        n=len(idx),
        columns={name: col[idx].copy() for name, col in data.columns.items()},
        y=data.y[idx].copy(),
        y_proxy=None if data.y_proxy is None else data.y_proxy[idx].copy(),
        pi_true=data.pi_true[idx].copy(),
    )


def true_probs(spec: DgpSpec, columns: Mapping[str, np.ndarray], n: int | None = None) -> np.ndarray:
    """Vectorized P(y=1 | x_true) for every row of ``columns``."""
    if n is None:
        n = len(next(iter(columns.values()))) if columns else 0
    eta = np.full(n, spec.outcome.intercept, dtype=np.float64)
    for name in spec.outcome.true_features:
        if name not in columns:
            raise InputError(f"missing true feature {name!r}")
        beta = float(spec.outcome.coefficients.get(name, 0.0))
        eta = eta + beta * columns[name].astype(np.float64)
    return expit(eta)


def true_prob(spec: DgpSpec, x: Mapping[str, Any]) -> float:
    """P(y=1 | x_true) for a single feature assignment.

    Features outside the declared true set are ignored; by definition they
    cannot move the true probability.
    """
    eta = spec.outcome.intercept
    for name in spec.outcome.true_features:
        if name not in x:
            raise InputError(f"missing true feature {name!r}")
        eta += float(spec.outcome.coefficients.get(name, 0.0)) * float(x[name])
    return float(expit(eta))


def proxy_positive_probs(spec: DgpSpec, columns: Mapping[str, np.ndarray], pi: np.ndarray) -> np.ndarray:
    """Analytic P(proxy=1 | x_true) implied by the declared flip probabilities."""
    if spec.proxy is None:
        raise InputError("no proxy label declared")
    group = columns[spec.proxy.group_feature]
    n = len(group)
    p0 = np.zeros(n, dtype=np.float64)
    p1 = np.zeros(n, dtype=np.float64)
    for level in spec.levels_of(spec.proxy.group_feature):
        mask = group == np.asarray(level)
        p0[mask] = float(spec.proxy.flip0.get(level, 0.0))
        p1[mask] = float(spec.proxy.flip1.get(level, 0.0))
    return pi * (1.0 - p1) + (1.0 - pi) * p0


@dataclass(frozen=True)
class TrueParityCheck:
    """Monte Carlo check of whether the declared truth satisfies conditional parity."""

    per_feature: Mapping[str, "Any"]  # feature -> metrics.StratifiedGaps
    max_gap: float
    tolerance: float
    verdict: str  # "true parity holds" | "true differences exist"
    warnings: tuple[str, ...] = field(default=())

    @property
    def holds(self) -> bool:
        return self.verdict == "true parity holds"


def true_group_parity_check(
    spec: DgpSpec,
    n_mc: int,
    seed: int,
    bins: int = 5,
    tolerance: float = 0.02,
    legitimate_features: Sequence[str] | None = None,
    protected_features: Sequence[str] | None = None,
) -> TrueParityCheck:
    """Estimate |E[pi | x_l, x_p] - E[pi | x_l]| per protected group by Monte Carlo.

    Strata are built on the legitimate features of a fresh sample of size
    ``n_mc``. The scenario is classified as "true parity holds" when every
    group gap stays below ``tolerance``.
    """
    from .metrics import build_strata, conditional_statistical_parity_gap

    require_valid(spec)
    legit = tuple(legitimate_features) if legitimate_features is not None else spec.names_with_role(LEGITIMATE)
    protected = (
        tuple(protected_features) if protected_features is not None else spec.names_with_role(PROTECTED)
    )
    if not legit:
        raise InputError("true parity check needs at least one legitimate feature")
    if not protected:
        raise InputError("true parity check needs at least one protected feature")

    data = sample(spec, n_mc, seed)
    strata = build_strata(data, legit, bins)

    per_feature = {}
    warnings: list[str] = list(strata.warnings)
    max_gap = 0.0
    for name in protected:
        gaps = conditional_statistical_parity_gap(data.pi_true, data.column(name), strata)
        per_feature[name] = gaps
        warnings.extend(gaps.warnings)
        if gaps.per_group:
            max_gap = max(max_gap, max(gaps.per_group.values()))
    verdict = "true parity holds" if max_gap < tolerance else "true differences exist"
    return TrueParityCheck(
        per_feature=per_feature,
        max_gap=max_gap,
        tolerance=tolerance,
        verdict=verdict,
        warnings=tuple(warnings),
    )
