"""Decision policies mapping predicted probabilities to actions.

Action 1 is the favourable action (the benefit: credit granted, offer made).
Predicted probabilities are read as the risk of the adverse outcome y=1, so
the threshold rule grants the benefit when the risk is at or below tau.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import InputError

_PMF_TOL = 1e-9


@dataclass(frozen=True)
class UtilityMatrix:
    """u(y, a) for binary outcomes: ``values[y][a]``, actions ordered as declared."""

    actions: tuple[Any, ...]
    values: tuple[tuple[float, ...], tuple[float, ...]]

    def __post_init__(self) -> None:
        if len(self.actions) < 1:
            raise InputError("utility matrix needs at least one action")
        for row in self.values:
            if len(row) != len(self.actions):
                raise InputError("utility rows must match the action count")
            if not all(np.isfinite(v) for v in row):
                raise InputError("utility entries must be finite")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


@dataclass(frozen=True)
class DecisionPolicy:
    """Either a threshold on the adverse-risk probability or an expected-utility rule.

    Policies are group-invariant by construction: a group-indexed utility
    would itself be a discriminatory construct, so the type cannot express
    one. Group-specific treatment therefore only ever enters through the
    model, where the audit stages can see it.
    """

    kind: str  # "threshold" | "expected_utility"
    tau: float | None = None
    utility: UtilityMatrix | None = None

    def __post_init__(self) -> None:
        if self.kind == "threshold":
            if self.tau is None or not 0.0 <= self.tau <= 1.0:
                raise InputError("threshold policy needs tau in [0,1]")
        elif self.kind == "expected_utility":
            if self.utility is None:
                raise InputError("expected-utility policy needs a utility matrix")
        else:
            raise InputError(f"unknown policy kind {self.kind!r}")

    @staticmethod
    def threshold(tau: float) -> "DecisionPolicy":
        return DecisionPolicy(kind="threshold", tau=tau)

    @staticmethod
    def expected_utility(utility: UtilityMatrix) -> "DecisionPolicy":
        return DecisionPolicy(kind="expected_utility", utility=utility)

    def describe(self) -> str:
        if self.kind == "threshold":
            return f"grant when predicted risk <= {self.tau}"
        assert self.utility is not None
        return f"maximize expected utility over actions {list(self.utility.actions)}"


def decide_threshold(pi_hat: float, tau: float) -> int:
    """1 (favourable) iff the predicted adverse risk is at or below tau."""
    if not 0.0 <= pi_hat <= 1.0 or not 0.0 <= tau <= 1.0:
        raise InputError("pi_hat and tau must lie in [0,1]")
    return int(pi_hat <= tau)


def decide_utility(pmf: Sequence[float], utility: UtilityMatrix) -> int:
    """Action index maximizing sum_y u(y,a) * pmf(y); ties go to the smallest index."""
    pmf_arr = np.asarray(pmf, dtype=np.float64)
    if pmf_arr.shape != (2,):
        raise InputError("pmf must have exactly two entries (P(y=0), P(y=1))")
    if np.any(pmf_arr < -_PMF_TOL) or np.any(pmf_arr > 1.0 + _PMF_TOL):
        raise InputError("pmf entries must lie in [0,1]")
    if abs(float(pmf_arr.sum()) - 1.0) > _PMF_TOL:
        raise InputError(f"pmf must sum to 1, got {float(pmf_arr.sum())!r}")
    expected = pmf_arr @ utility.as_array()
    return int(np.argmax(expected))  # argmax returns the first (smallest-index) maximizer


def decide(policy: DecisionPolicy, pi_hat: np.ndarray) -> np.ndarray:
    """Vectorized policy application; returns an int action vector.

    Expected-utility policies used on the audit path must be binary-action,
    so decisions share the {0: withhold, 1: grant} convention.
    """
    pi_hat = np.asarray(pi_hat, dtype=np.float64)
    if policy.kind == "threshold":
        return (pi_hat <= policy.tau).astype(np.int64)
    assert policy.utility is not None
    u = policy.utility.as_array()
    pmf = np.column_stack([1.0 - pi_hat, pi_hat])
    expected = pmf @ u
    return np.argmax(expected, axis=1).astype(np.int64)


@dataclass(frozen=True)
class SelectionRates:
    overall: float
    per_group: Mapping[Any, float]
    counts: Mapping[Any, int]
    warnings: tuple[str, ...] = ()


def selection_rates(
    decisions: np.ndarray,
    groups: np.ndarray,
    levels: Sequence[Any] | None = None,
) -> SelectionRates:
    """Favourable-action rate per group plus the overall rate.

    ``levels`` may declare the expected group levels; a declared level with
    no rows has an undefined rate and is flagged.
    """
    decisions = np.asarray(decisions)
    groups = np.asarray(groups)
    if decisions.shape != groups.shape:
        raise InputError("decisions and groups must have equal length")

    observed = [lv for lv in np.unique(groups).tolist()]
    wanted = list(levels) if levels is not None else observed
    per_group: dict[Any, float] = {}
    counts: dict[Any, int] = {}
    warnings: list[str] = []
    for lv in wanted:
        mask = groups == np.asarray(lv)
        k = int(mask.sum())
        counts[lv] = k
        if k == 0:
            warnings.append(f"group {lv!r} has no rows; rate undefined")
            continue
        per_group[lv] = float(decisions[mask].mean())
    overall = float(decisions.mean()) if decisions.size else float("nan")
    return SelectionRates(overall=overall, per_group=per_group, counts=counts, warnings=tuple(warnings))
