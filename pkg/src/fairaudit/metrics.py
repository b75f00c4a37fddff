"""Parity and estimation-disparity statistics with stratification and bootstrap.

Conditioning on legitimate features is realized by stratification: continuous
features are quantile-binned, categorical features use their levels, and the
strata are the observed cross-product. Per-group gaps are computed inside
each stratum and aggregated with pooled stratum-share weights; weighting by
each group's own stratum distribution is the natural alternative and would
answer a subtly different question (disparity as experienced by that group),
so the per-stratum detail and maximum are reported alongside the aggregate.

All functions are pure over immutable arrays. Bootstrap replicates draw
their resampling streams from counter-derived seeds, so parallel evaluation
reproduces serial evaluation bit for bit.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .dgp import Dataset, DgpSpec, proxy_positive_probs, true_probs
from .errors import InputError, NotApplicableError
from .rng import substream

_SQRT2 = float(np.sqrt(2.0))


# ---------------------------------------------------------------------------
# Strata


@dataclass(frozen=True)
class Strata:
    """Row-to-stratum assignment built on legitimate features."""

    feature_names: tuple[str, ...]
    bin_edges: Mapping[str, np.ndarray]  # continuous features only
    levels: Mapping[str, tuple[Any, ...]]  # categorical features only
    assignment: np.ndarray  # stratum index per row
    labels: tuple[str, ...]  # one label per observed stratum
    counts: np.ndarray  # rows per observed stratum
    warnings: tuple[str, ...] = field(default=())

    @property
    def n_strata(self) -> int:
        return len(self.labels)


def _as_columns(data: Dataset | Mapping[str, np.ndarray]) -> Mapping[str, np.ndarray]:
    if isinstance(data, Dataset):
        return data.columns
    return data


def build_strata(
    data: Dataset | Mapping[str, np.ndarray],
    features: Sequence[str],
    bins: int,
    categorical: Sequence[str] | None = None,
) -> Strata:
    """Cross-product strata over the given features.

    Continuous features are binned at their empirical quantiles into at most
    ``bins`` bins; categorical features (string-valued, or listed in
    ``categorical``, or numeric with few distinct values) contribute one bin
    per observed level. A constant continuous feature collapses to a single
    bin with a warning.
    """
    if bins < 1:
        raise InputError("bins must be >= 1")
    columns = _as_columns(data)
    if not features:
        raise InputError("strata need at least one feature")

    force_categorical = set(categorical or ())
    per_feature_codes: list[np.ndarray] = []
    per_feature_labels: list[list[str]] = []
    bin_edges: dict[str, np.ndarray] = {}
    levels: dict[str, tuple[Any, ...]] = {}
    warnings: list[str] = []

    n = None
    for name in features:
        if name not in columns:
            raise InputError(f"unknown strata feature {name!r}")
        col = columns[name]
        n = len(col) if n is None else n
        uniques = np.unique(col)
        treat_categorical = (
            name in force_categorical
            or col.dtype.kind not in "fiu"
            or (col.dtype.kind in "iu" and len(uniques) <= max(bins, 10))
        )
        if treat_categorical:
            lv = tuple(uniques.tolist())
            levels[name] = lv
            codes = np.searchsorted(uniques, col)
            per_feature_codes.append(codes)
            per_feature_labels.append([f"{name}={v}" for v in lv])
        else:
            qs = np.quantile(col, np.linspace(0.0, 1.0, bins + 1)[1:-1])
            edges = np.unique(qs)  # duplicate quantiles collapse bins
            if bins > 1 and len(uniques) == 1:
                warnings.append(f"feature {name!r} is constant; collapsed to a single bin")
            bin_edges[name] = edges
            codes = np.searchsorted(edges, col, side="right")
            per_feature_codes.append(codes)
            bounds = [-np.inf, *edges.tolist(), np.inf]
            per_feature_labels.append(
                [f"{name}:({bounds[i]:.4g},{bounds[i + 1]:.4g}]" for i in range(len(bounds) - 1)]
            )

    sizes = [len(lbls) for lbls in per_feature_labels]
    flat = np.zeros(n or 0, dtype=np.int64)
    for codes, size in zip(per_feature_codes, sizes):
        flat = flat * size + codes

    observed, assignment = np.unique(flat, return_inverse=True)
    labels = []
    for key in observed.tolist():
        parts = []
        for lbls in reversed(per_feature_labels):
            key, idx = divmod(key, len(lbls))
            parts.append(lbls[idx])
        labels.append(" & ".join(reversed(parts)))
    counts = np.bincount(assignment, minlength=len(observed)).astype(np.int64)

    return Strata(
        feature_names=tuple(features),
        bin_edges=bin_edges,
        levels=levels,
        assignment=assignment.astype(np.int64),
        labels=tuple(labels),
        counts=counts,
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# Gap reports


@dataclass(frozen=True)
class GroupGaps:
    """Unconditional per-group gaps |mean(value | g) - mean(value)|."""

    metric: str
    per_group: Mapping[Any, float]
    max_gap: float
    group_sizes: Mapping[Any, int]
    warnings: tuple[str, ...] = field(default=())


@dataclass(frozen=True)
class StratumCell:
    stratum: str
    group: Any
    n_cell: int
    gap: float


@dataclass(frozen=True)
class StratifiedGaps:
    """Stratum-weighted per-group gaps plus the per-stratum detail."""

    metric: str
    per_group: Mapping[Any, float]  # sum_s w_s * gap_g(s) over strata containing g
    per_group_max_stratum: Mapping[Any, float]
    coverage: Mapping[Any, float]  # sum of stratum shares where the group was present
    per_stratum: tuple[StratumCell, ...]
    group_sizes: Mapping[Any, int]
    warnings: tuple[str, ...] = field(default=())

    @property
    def max_gap(self) -> float:
        return max(self.per_group.values()) if self.per_group else 0.0


def _group_codes(groups: np.ndarray) -> tuple[np.ndarray, list[Any]]:
    uniques, codes = np.unique(groups, return_inverse=True)
    return codes.astype(np.int64), [v for v in uniques.tolist()]


def statistical_parity_gap(pi_hat: np.ndarray, groups: np.ndarray) -> GroupGaps:
    """Per group g: |mean(pi_hat | g) - mean(pi_hat)|."""
    pi_hat = np.asarray(pi_hat, dtype=np.float64)
    groups = np.asarray(groups)
    if pi_hat.shape != groups.shape:
        raise InputError("pi_hat and groups must have equal length")
    if pi_hat.size == 0:
        return GroupGaps("statistical_parity_gap", {}, 0.0, {}, ("empty input",))

    codes, labels = _group_codes(groups)
    overall = float(pi_hat.mean())
    sums = np.bincount(codes, weights=pi_hat, minlength=len(labels))
    counts = np.bincount(codes, minlength=len(labels))
    gaps = {lv: abs(sums[i] / counts[i] - overall) for i, lv in enumerate(labels)}
    sizes = {lv: int(counts[i]) for i, lv in enumerate(labels)}
    return GroupGaps("statistical_parity_gap", gaps, max(gaps.values()), sizes)


def _stratified_gaps(
    metric: str,
    values: np.ndarray,
    groups: np.ndarray,
    assignment: np.ndarray,
    stratum_labels: Sequence[str],
) -> StratifiedGaps:
    values = np.asarray(values, dtype=np.float64)
    groups = np.asarray(groups)
    assignment = np.asarray(assignment, dtype=np.int64)
    if not (len(values) == len(groups) == len(assignment)):
        raise InputError("values, groups, and strata must align row for row")
    n = len(values)
    if n == 0:
        return StratifiedGaps(metric, {}, {}, {}, (), {}, ("empty input",))

    codes, labels = _group_codes(groups)
    n_groups = len(labels)
    n_strata = int(assignment.max()) + 1

    cell_id = assignment * n_groups + codes
    cell_sums = np.bincount(cell_id, weights=values, minlength=n_strata * n_groups)
    cell_counts = np.bincount(cell_id, minlength=n_strata * n_groups)
    stratum_sums = np.bincount(assignment, weights=values, minlength=n_strata)
    stratum_counts = np.bincount(assignment, minlength=n_strata)

    weights = stratum_counts / n
    per_group: dict[Any, float] = {}
    per_group_max: dict[Any, float] = {}
    coverage: dict[Any, float] = {}
    detail: list[StratumCell] = []
    warnings: list[str] = []

    for g, lv in enumerate(labels):
        agg = 0.0
        cover = 0.0
        worst = 0.0
        for s in range(n_strata):
            if stratum_counts[s] == 0:
                continue
            c = cell_counts[s * n_groups + g]
            if c == 0:
                continue  # cell skipped; reflected in coverage
            gap = abs(cell_sums[s * n_groups + g] / c - stratum_sums[s] / stratum_counts[s])
            agg += weights[s] * gap
            cover += weights[s]
            worst = max(worst, gap)
            detail.append(StratumCell(str(stratum_labels[s]), lv, int(c), float(gap)))
        per_group[lv] = float(agg)
        per_group_max[lv] = float(worst)
        coverage[lv] = float(cover)
        if cover < 1.0 - 1e-12:
            warnings.append(f"group {lv!r} absent from strata covering {1.0 - cover:.1%} of rows")

    sizes = {lv: int((codes == g).sum()) for g, lv in enumerate(labels)}
    return StratifiedGaps(
        metric=metric,
        per_group=per_group,
        per_group_max_stratum=per_group_max,
        coverage=coverage,
        per_stratum=tuple(detail),
        group_sizes=sizes,
        warnings=tuple(warnings),
    )


def conditional_statistical_parity_gap(
    pi_hat: np.ndarray, groups: np.ndarray, strata: Strata
) -> StratifiedGaps:
    """Stratum-weighted |mean(pi_hat | s, g) - mean(pi_hat | s)| per group."""
    return _stratified_gaps(
        "conditional_statistical_parity_gap", pi_hat, groups, strata.assignment, strata.labels
    )


def conditional_estimation_disparity(
    eps: np.ndarray, groups: np.ndarray, strata: Strata
) -> StratifiedGaps:
    """The disparity target omega: stratum-weighted |mean(eps | s, g) - mean(eps | s)|."""
    return _stratified_gaps(
        "conditional_estimation_disparity", eps, groups, strata.assignment, strata.labels
    )


def target_mismatch_gamma(spec: DgpSpec, data: Dataset) -> np.ndarray:
    """Per-row Euclidean distance between the proxy-label pmf and the true-label pmf.

    For binary outcomes this is sqrt(2) * |P(proxy=1 | x) - P(y=1 | x)|,
    computed analytically from the declared flip probabilities.
    """
    if spec.proxy is None:
        raise NotApplicableError("no proxy label declared; target mismatch is undefined")
    pi = true_probs(spec, data.columns, data.n)
    tilde = proxy_positive_probs(spec, data.columns, pi)
    return _SQRT2 * np.abs(tilde - pi)


@dataclass(frozen=True)
class GammaDisparity:
    gaps: StratifiedGaps
    cis: Mapping[Any, "Interval"]
    tolerance: float
    flagged: bool
    flag_text: str | None


def gamma_group_disparity(
    gamma: np.ndarray,
    groups: np.ndarray,
    strata: Strata,
    tolerance: float = 0.02,
    replicates: int = 200,
    level: float = 0.95,
    seed: int = 0,
    workers: int = 1,
) -> GammaDisparity:
    """Stratified group disparity of the target mismatch, with a legal flag.

    The flag is raised when some group's disparity exceeds ``tolerance`` and
    its bootstrap interval excludes zero.
    """
    gaps = _stratified_gaps("gamma_group_disparity", gamma, groups, strata.assignment, strata.labels)
    cis = {
        lv: stratified_gap_ci(
            gamma, groups, strata, lv, metric="gamma_group_disparity",
            replicates=replicates, level=level, seed=seed, workers=workers,
        )
        for lv in gaps.per_group
    }
    flagged = any(
        gaps.per_group[lv] > tolerance and cis[lv].lower > 0.0 for lv in gaps.per_group
    )
    text = "use of proxy target may be discriminatory" if flagged else None
    return GammaDisparity(gaps=gaps, cis=cis, tolerance=tolerance, flagged=flagged, flag_text=text)


# ---------------------------------------------------------------------------
# Bootstrap


@dataclass(frozen=True)
class Interval:
    level: float
    lower: float
    upper: float


def bootstrap_ci(
    statistic: Callable[..., float],
    arrays: Sequence[np.ndarray],
    replicates: int,
    level: float = 0.95,
    seed: int = 0,
    workers: int = 1,
) -> Interval:
    """Nonparametric percentile interval from joint row resampling.

    Replicate b resamples row indices from the substream keyed
    ``(seed, "bootstrap", b)``, so the interval is a pure function of the
    seed and is identical under any ``workers`` count.
    """
    if replicates < 1:
        raise InputError("bootstrap needs at least one replicate")
    if not 0.0 < level < 1.0:
        raise InputError("confidence level must lie in (0,1)")
    arrays = [np.asarray(a) for a in arrays]
    n = len(arrays[0])
    if any(len(a) != n for a in arrays):
        raise InputError("bootstrap arrays must have equal length")

    def one(b: int) -> float:
        idx = substream(seed, "bootstrap", b).integers(0, n, size=n)
        return float(statistic(*(a[idx] for a in arrays)))

    values = np.empty(replicates, dtype=np.float64)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for b, v in enumerate(pool.map(one, range(replicates))):
                values[b] = v
    else:
        for b in range(replicates):
            values[b] = one(b)

    alpha = 1.0 - level
    lower, upper = np.percentile(values, [100.0 * alpha / 2.0, 100.0 * (1.0 - alpha / 2.0)])
    return Interval(level=level, lower=float(lower), upper=float(upper))


def stratified_group_gap(
    values: np.ndarray, in_group: np.ndarray, assignment: np.ndarray, n_strata: int
) -> float:
    """One group's stratum-weighted gap, fully vectorized.

    Equals the ``per_group`` entry of the full report; used inside bootstrap
    replicates where the per-stratum detail is not needed.
    """
    n = len(values)
    strat_cnt = np.bincount(assignment, minlength=n_strata)
    strat_sum = np.bincount(assignment, weights=values, minlength=n_strata)
    cell_cnt = np.bincount(assignment[in_group], minlength=n_strata)
    cell_sum = np.bincount(assignment[in_group], weights=values[in_group], minlength=n_strata)
    valid = cell_cnt > 0
    if not np.any(valid):
        return 0.0
    gaps = np.abs(cell_sum[valid] / cell_cnt[valid] - strat_sum[valid] / strat_cnt[valid])
    return float(np.sum((strat_cnt[valid] / n) * gaps))


def stratified_gap_ci(
    values: np.ndarray,
    groups: np.ndarray,
    strata: Strata,
    group: Any,
    metric: str = "gap",
    replicates: int = 200,
    level: float = 0.95,
    seed: int = 0,
    workers: int = 1,
) -> Interval:
    """Bootstrap interval for one group's stratified gap.

    Rows are resampled with their stratum assignments (the binning is held
    fixed; inference is conditional on the strata).
    """
    n_strata = strata.n_strata
    in_group = (np.asarray(groups) == np.asarray(group)).astype(bool)

    def stat(v: np.ndarray, m: np.ndarray, a: np.ndarray) -> float:
        return stratified_group_gap(v, m, a, n_strata)

    return bootstrap_ci(
        stat,
        [np.asarray(values, dtype=np.float64), in_group, strata.assignment],
        replicates=replicates,
        level=level,
        seed=seed,
        workers=workers,
    )


def group_gap_ci(
    values: np.ndarray,
    groups: np.ndarray,
    group: Any,
    replicates: int = 200,
    level: float = 0.95,
    seed: int = 0,
    workers: int = 1,
) -> Interval:
    """Bootstrap interval for one group's unconditional parity gap."""
    in_group = (np.asarray(groups) == np.asarray(group)).astype(bool)

    def stat(v: np.ndarray, m: np.ndarray) -> float:
        if not m.any():
            return 0.0
        return abs(float(v[m].mean()) - float(v.mean()))

    return bootstrap_ci(
        stat,
        [np.asarray(values, dtype=np.float64), in_group],
        replicates=replicates,
        level=level,
        seed=seed,
        workers=workers,
    )


# ---------------------------------------------------------------------------
# Report assembly


@dataclass(frozen=True)
class ParityReport:
    """One metric's full evidence block: gaps, intervals, sizes, warnings."""

    metric: str
    overall_gap: float  # headline: max over per-group aggregates
    per_group: Mapping[Any, float]
    per_group_max_stratum: Mapping[Any, float]
    cis: Mapping[Any, Interval]
    per_stratum: tuple[StratumCell, ...]
    coverage: Mapping[Any, float]
    group_sizes: Mapping[Any, int]
    warnings: tuple[str, ...] = field(default=())


def parity_report(
    metric: str,
    values: np.ndarray,
    groups: np.ndarray,
    strata: Strata,
    replicates: int = 200,
    level: float = 0.95,
    seed: int = 0,
    workers: int = 1,
) -> ParityReport:
    """Stratified gaps for every group with bootstrap intervals.

    Intervals are widened, if needed, to contain the point estimate so that
    lower <= point <= upper holds in every emitted report.
    """
    gaps = _stratified_gaps(metric, values, groups, strata.assignment, strata.labels)
    cis: dict[Any, Interval] = {}
    for lv, point in gaps.per_group.items():
        ci = stratified_gap_ci(
            values, groups, strata, lv, metric=metric,
            replicates=replicates, level=level, seed=seed, workers=workers,
        )
        cis[lv] = Interval(ci.level, min(ci.lower, point), max(ci.upper, point))
    return ParityReport(
        metric=metric,
        overall_gap=gaps.max_gap,
        per_group=gaps.per_group,
        per_group_max_stratum=gaps.per_group_max_stratum,
        cis=cis,
        per_stratum=gaps.per_stratum,
        coverage=gaps.coverage,
        group_sizes=gaps.group_sizes,
        warnings=gaps.warnings,
    )
