"""Fitting the estimated model p_hat(y|x) and measuring its error against the truth.

The model class is L2-regularized logistic regression, fitted by damped
Newton iterations on the penalized Bernoulli log-likelihood. One transparent
class keeps the estimation-error semantics crisp: the per-row error is the
signed difference between the model's predicted probability and the declared
true probability.

Categorical string features are one-hot encoded against the first sorted
level; numeric features enter as single columns. The encoding is stored on
the fitted model so prediction and counterfactual re-scoring reuse it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.special import expit

from .dgp import Dataset, DgpSpec, true_probs
from .errors import InputError

_LIK_CLAMP = 1e-12  # clamp inside likelihood evaluation only, never in reported probabilities


@dataclass(frozen=True)
class ModelSpec:
    """Input features and ridge strength for one fitted model."""

    feature_names: tuple[str, ...]
    l2_strength: float = 0.0

    def __post_init__(self) -> None:
        if len(self.feature_names) == 0:
            raise InputError("model needs at least one input feature")
        if self.l2_strength < 0.0:
            raise InputError("l2 strength must be >= 0")


@dataclass(frozen=True)
class Encoding:
    """Design-matrix layout.

    ``onehot`` maps a categorical feature to its full level tuple; the first
    level is the reference and gets no column. Features absent from
    ``onehot`` enter as plain numeric columns.
    """

    onehot: Mapping[str, tuple[Any, ...]]

    def column_names(self, order: Sequence[str]) -> tuple[str, ...]:
        cols: list[str] = ["intercept"]
        for name in order:
            if name in self.onehot:
                cols.extend(f"{name}={lv}" for lv in self.onehot[name][1:])
            else:
                cols.append(name)
        return tuple(cols)


@dataclass(frozen=True)
class FittedModel:
    spec: ModelSpec
    encoding: Encoding
    coefficients: Mapping[str, float]  # keyed by design column name, including "intercept"
    target: str
    converged: bool
    iterations: int
    final_gradient_norm: float
    objective_values: tuple[float, ...]  # penalized loss per iteration, non-increasing
    warnings: tuple[str, ...] = field(default=())

    @property
    def intercept(self) -> float:
        return self.coefficients["intercept"]

    def coefficient(self, column: str) -> float:
        return self.coefficients[column]


def _infer_encoding(spec: ModelSpec, columns: Mapping[str, np.ndarray]) -> Encoding:
    onehot: dict[str, tuple[Any, ...]] = {}
    for name in spec.feature_names:
        if name not in columns:
            raise InputError(f"model feature {name!r} not present in data")
        col = columns[name]
        if col.dtype.kind not in "fiub":
            onehot[name] = tuple(sorted(np.unique(col).tolist()))
    return Encoding(onehot=onehot)


def _check_levels(encoding: Encoding, name: str, col: np.ndarray) -> None:
    known = set(encoding.onehot[name])
    strangers = set(np.unique(col).tolist()) - known
    if strangers:
        raise InputError(f"unseen level(s) {sorted(map(str, strangers))} for feature {name!r}")


def _design_matrix(spec: ModelSpec, encoding: Encoding, columns: Mapping[str, np.ndarray]) -> np.ndarray:
    n = len(next(iter(columns.values())))
    cols: list[np.ndarray] = [np.ones(n, dtype=np.float64)]
    for name in spec.feature_names:
        if name not in columns:
            raise InputError(f"missing model feature {name!r}")
        col = columns[name]
        if name in encoding.onehot:
            _check_levels(encoding, name, col)
            for lv in encoding.onehot[name][1:]:
                cols.append((col == np.asarray(lv)).astype(np.float64))
        else:
            cols.append(col.astype(np.float64))
    return np.column_stack(cols)


def penalized_loglik_and_grad(
    beta: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float
) -> tuple[float, np.ndarray]:
    """Penalized Bernoulli log-likelihood and its analytic gradient.

    The intercept (column 0) is never penalized. Probabilities are clamped
    away from {0,1} by 1e-12 inside this evaluation only.
    """
    eta = X @ beta
    p = expit(eta)
    pc = np.clip(p, _LIK_CLAMP, 1.0 - _LIK_CLAMP)
    ll = float(np.sum(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc)))
    penalty = 0.5 * l2 * float(np.sum(beta[1:] ** 2))
    grad = X.T @ (y - p)
    grad[1:] -= l2 * beta[1:]
    return ll - penalty, grad


def fit(
    data: Dataset,
    spec: ModelSpec,
    target: str = "y",
    max_iterations: int = 200,
    tolerance: float = 1e-8,
) -> FittedModel:
    """Maximize the penalized log-likelihood by damped Newton steps.

    Deterministic: coefficients start at zero and each step is a pure
    function of the data. Newton steps are halved until the objective stops
    decreasing; a non-finite Hessian solve falls back to a gradient step.
    Non-convergence within ``max_iterations`` flags the result, it is not a
    failure.
    """
    if data.n < 1:
        raise InputError("cannot fit on an empty dataset")
    if target == "y":
        y = data.y.astype(np.float64)
    elif target == "y_proxy":
        if data.y_proxy is None:
            raise InputError("dataset has no proxy labels to fit on")
        y = data.y_proxy.astype(np.float64)
    else:
        raise InputError(f"unknown fit target {target!r}")

    fit_warnings: list[str] = []
    if y.min() == y.max():
        fit_warnings.append(
            f"degenerate labels: every {target} equals {int(y[0])}; model is intercept-driven"
        )

    encoding = _infer_encoding(spec, data.columns)
    X = _design_matrix(spec, encoding, data.columns)
    l2 = float(spec.l2_strength)
    k = X.shape[1]

    beta = np.zeros(k, dtype=np.float64)
    objective, grad = penalized_loglik_and_grad(beta, X, y, l2)
    trace = [-objective]  # recorded as a loss, so the path is non-increasing

    # Near the optimum the per-step gain falls below the float resolution of
    # the objective; a one-ulp slack lets pure Newton steps through on that
    # plateau, and a stall counter stops the loop once no gain is measurable.
    plateau = 4.0 * np.finfo(np.float64).eps * (1.0 + abs(objective))
    iterations = 0
    stalled = 0
    grad_norm = float(np.linalg.norm(grad))
    while iterations < max_iterations and grad_norm > tolerance and stalled < 3:
        p = expit(X @ beta)
        w = p * (1.0 - p)
        hess = X.T @ (X * w[:, None])
        hess[1:, 1:] += l2 * np.eye(k - 1)
        try:
            step = np.linalg.solve(hess, grad)
            if not np.all(np.isfinite(step)):
                raise np.linalg.LinAlgError("non-finite Newton step")
        except np.linalg.LinAlgError:
            step = grad / max(1.0, grad_norm)  # gradient fallback

        moved = False
        scale = 1.0
        for _ in range(40):  # halve until the penalized likelihood stops falling
            cand = beta + scale * step
            cand_obj, cand_grad = penalized_loglik_and_grad(cand, X, y, l2)
            if np.isfinite(cand_obj) and cand_obj >= objective - plateau:
                stalled = stalled + 1 if cand_obj <= objective + plateau else 0
                beta, objective, grad = cand, max(cand_obj, objective), cand_grad
                moved = True
                break
            scale *= 0.5
        iterations += 1
        if not moved:
            break  # no ascent direction left at float precision
        grad_norm = float(np.linalg.norm(grad))
        trace.append(-objective)

    converged = grad_norm <= tolerance
    if not converged:
        fit_warnings.append(
            f"did not reach gradient norm {tolerance:g} within {max_iterations} iterations"
        )

    names = encoding.column_names(spec.feature_names)
    return FittedModel(
        spec=spec,
        encoding=encoding,
        coefficients=dict(zip(names, beta.tolist())),
        target=target,
        converged=converged,
        iterations=iterations,
        final_gradient_norm=grad_norm,
        objective_values=tuple(trace),
        warnings=tuple(fit_warnings),
    )


def _coef_vector(model: FittedModel) -> np.ndarray:
    names = model.encoding.column_names(model.spec.feature_names)
    return np.asarray([model.coefficients[c] for c in names], dtype=np.float64)


def predict_columns(model: FittedModel, columns: Mapping[str, np.ndarray]) -> np.ndarray:
    """Vectorized predicted probability for every row of ``columns``."""
    X = _design_matrix(model.spec, model.encoding, columns)
    return expit(X @ _coef_vector(model))


def predict(model: FittedModel, x: Mapping[str, Any]) -> float:
    """Predicted probability for a single feature assignment. Pure function."""
    columns = {}
    for name in model.spec.feature_names:
        if name not in x:
            raise InputError(f"missing model feature {name!r}")
        value = x[name]
        if name in model.encoding.onehot:
            columns[name] = np.asarray([value])
        else:
            columns[name] = np.asarray([float(value)], dtype=np.float64)
    return float(predict_columns(model, columns)[0])


def predict_dataset(model: FittedModel, data: Dataset) -> np.ndarray:
    return predict_columns(model, data.columns)


def estimation_error(model: FittedModel, spec: DgpSpec, data: Dataset) -> np.ndarray:
    """Per-row signed error: predicted probability minus declared true probability."""
    return predict_dataset(model, data) - true_probs(spec, data.columns, data.n)


def oracle_model(spec: DgpSpec) -> FittedModel:
    """A fitted-model view of the declared truth itself.

    Coefficients are copied from the outcome declaration, so the estimation
    error of this model is identically zero on every row. Used as the
    reference point for parity diagnostics.
    """
    coefficients = {"intercept": float(spec.outcome.intercept)}
    for name in spec.outcome.true_features:
        coefficients[name] = float(spec.outcome.coefficients.get(name, 0.0))
    return FittedModel(
        spec=ModelSpec(feature_names=tuple(spec.outcome.true_features)),
        encoding=Encoding(onehot={}),
        coefficients=coefficients,
        target="y",
        converged=True,
        iterations=0,
        final_gradient_norm=0.0,
        objective_values=(),
        warnings=(),
    )


def log_loss(y: np.ndarray, p: np.ndarray) -> float:
    """Mean Bernoulli log-loss; probabilities clamped only for the evaluation."""
    pc = np.clip(p, _LIK_CLAMP, 1.0 - _LIK_CLAMP)
    return float(-np.mean(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc)))
