"""File formats: DGP spec documents, run configs, and delimited datasets.

One canonical textual format (YAML) carries both the DGP declaration and the
run configuration, so an audit is reproducible from a pair of files plus a
seed. Datasets are plain comma-delimited text with a header row: one column
per feature, then ``y``, optional ``y_proxy``, and ``pi_true``.

Environment overrides are deliberately limited to ``FAIRAUDIT_SEED`` and
``FAIRAUDIT_OUT_DIR``; everything else must live in the config file.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from .dgp import (
    Bernoulli,
    Categorical,
    Dataset,
    Dependence,
    DgpSpec,
    FeatureSpec,
    FeatureRole,
    Gaussian,
    OutcomeSpec,
    ProxyLabelSpec,
    require_valid,
)
from .decision import DecisionPolicy, UtilityMatrix
from .errors import ConfigurationError, IOFailure
from .estimation import ModelSpec
from .legal_audit import Alternative, AuditConfig, ContextDeclaration


# ---------------------------------------------------------------------------
# DGP spec documents


def _role_from_dict(entry: Mapping[str, Any]) -> FeatureRole:
    kind = entry.get("role")
    if not isinstance(kind, str):
        raise ConfigurationError(f"feature {entry.get('name')!r}: role must be a string")
    if kind == "exact_proxy":
        return FeatureRole(kind, proxy_target=entry.get("proxy_target"))
    return FeatureRole(kind)


def _distribution_from_dict(name: str, node: Any) -> Categorical | Bernoulli | Gaussian:
    if not isinstance(node, Mapping) or len(node) != 1:
        raise ConfigurationError(f"feature {name!r}: distribution must be a single-key mapping")
    ((kind, params),) = node.items()
    try:
        if kind == "categorical":
            return Categorical(tuple(params["levels"]), tuple(float(p) for p in params["probabilities"]))
        if kind == "bernoulli":
            return Bernoulli(float(params["p"]))
        if kind == "gaussian":
            return Gaussian(float(params["mean"]), float(params["sd"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"feature {name!r}: malformed {kind} distribution: {exc}") from exc
    raise ConfigurationError(f"feature {name!r}: unknown distribution {kind!r}")


def dgp_spec_from_dict(doc: Mapping[str, Any]) -> DgpSpec:
    try:
        raw_features = doc["features"]
        raw_outcome = doc["outcome"]
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"DGP spec needs 'features' and 'outcome' sections: {exc}") from exc

    features = []
    for entry in raw_features:
        name = entry.get("name")
        if not isinstance(name, str):
            raise ConfigurationError("every feature needs a string 'name'")
        dependence = None
        if "dependence" in entry and entry["dependence"] is not None:
            dep = entry["dependence"]
            try:
                dependence = Dependence(parents=dict(dep["parents"]), noise_sd=float(dep["noise_sd"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigurationError(f"feature {name!r}: malformed dependence: {exc}") from exc
        features.append(
            FeatureSpec(
                name=name,
                role=_role_from_dict(entry),
                distribution=_distribution_from_dict(name, entry.get("distribution")),
                dependence=dependence,
            )
        )

    try:
        outcome = OutcomeSpec(
            true_features=tuple(raw_outcome["true_features"]),
            intercept=float(raw_outcome["intercept"]),
            coefficients={str(k): float(v) for k, v in (raw_outcome.get("coefficients") or {}).items()},
            link=str(raw_outcome.get("link", "logistic")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed outcome section: {exc}") from exc

    proxy = None
    if doc.get("proxy") is not None:
        raw = doc["proxy"]
        try:
            proxy = ProxyLabelSpec(
                group_feature=str(raw["group_feature"]),
                flip0={k: float(v) for k, v in (raw.get("flip0") or {}).items()},
                flip1={k: float(v) for k, v in (raw.get("flip1") or {}).items()},
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"malformed proxy section: {exc}") from exc

    return DgpSpec(features=tuple(features), outcome=outcome, proxy=proxy)


def dgp_spec_to_dict(spec: DgpSpec) -> dict[str, Any]:
    features = []
    for f in spec.features:
        entry: dict[str, Any] = {"name": f.name, "role": f.role.kind}
        if f.role.proxy_target is not None:
            entry["proxy_target"] = f.role.proxy_target
        dist = f.distribution
        if isinstance(dist, Categorical):
            entry["distribution"] = {
                "categorical": {"levels": list(dist.levels), "probabilities": list(dist.probabilities)}
            }
        elif isinstance(dist, Bernoulli):
            entry["distribution"] = {"bernoulli": {"p": dist.p}}
        else:
            entry["distribution"] = {"gaussian": {"mean": dist.mean, "sd": dist.sd}}
        if f.dependence is not None:
            entry["dependence"] = {
                "parents": {
                    k: (dict(v) if isinstance(v, Mapping) else v) for k, v in f.dependence.parents.items()
                },
                "noise_sd": f.dependence.noise_sd,
            }
        features.append(entry)
    doc: dict[str, Any] = {
        "features": features,
        "outcome": {
            "true_features": list(spec.outcome.true_features),
            "intercept": spec.outcome.intercept,
            "coefficients": dict(spec.outcome.coefficients),
            "link": spec.outcome.link,
        },
    }
    if spec.proxy is not None:
        doc["proxy"] = {
            "group_feature": spec.proxy.group_feature,
            "flip0": dict(spec.proxy.flip0),
            "flip1": dict(spec.proxy.flip1),
        }
    return doc


def load_dgp_spec(path: str | Path) -> DgpSpec:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"DGP spec file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
    spec = dgp_spec_from_dict(doc or {})
    require_valid(spec)
    return spec


def save_dgp_spec(spec: DgpSpec, path: str | Path) -> None:
    Path(path).write_text(
        yaml.safe_dump(dgp_spec_to_dict(spec), sort_keys=False, allow_unicode=True), encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# Run configuration


@dataclass(frozen=True)
class RunConfig:
    dgp_spec_path: Path
    data_path: Path | None
    n: int
    seed: int
    model: ModelSpec
    fit_target: str
    policy: DecisionPolicy
    context: ContextDeclaration
    alternatives: tuple[Alternative, ...]
    audit: AuditConfig
    report_path: Path
    figures_dir: Path | None
    raw: Mapping[str, Any] = field(default_factory=dict, repr=False)


def policy_from_dict(node: Mapping[str, Any]) -> DecisionPolicy:
    if not isinstance(node, Mapping):
        raise ConfigurationError("policy must be a mapping")
    if "threshold" in node:
        return DecisionPolicy.threshold(float(node["threshold"]))
    if "utility" in node:
        raw = node["utility"]
        try:
            matrix = UtilityMatrix(
                actions=tuple(raw["actions"]),
                values=tuple(tuple(float(v) for v in row) for row in raw["values"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"malformed utility matrix: {exc}") from exc
        return DecisionPolicy.expected_utility(matrix)
    raise ConfigurationError("policy needs either 'threshold' or 'utility'")


def policy_to_dict(policy: DecisionPolicy) -> dict[str, Any]:
    if policy.kind == "threshold":
        return {"threshold": policy.tau}
    assert policy.utility is not None
    return {
        "utility": {
            "actions": list(policy.utility.actions),
            "values": [list(row) for row in policy.utility.values],
        }
    }


def model_from_dict(node: Mapping[str, Any]) -> tuple[ModelSpec, str]:
    try:
        spec = ModelSpec(tuple(node["features"]), float(node.get("l2", 0.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed model block: {exc}") from exc
    target = str(node.get("target", "y"))
    if target not in ("y", "y_proxy"):
        raise ConfigurationError(f"model target must be 'y' or 'y_proxy', got {target!r}")
    return spec, target


def model_to_dict(spec: ModelSpec, target: str) -> dict[str, Any]:
    return {"features": list(spec.feature_names), "l2": spec.l2_strength, "target": target}


def context_from_dict(node: Mapping[str, Any]) -> ContextDeclaration:
    try:
        return ContextDeclaration(
            protected_context=str(node["protected_context"]),
            stated_aim=str(node.get("stated_aim", "")),
            aim_asserted_legitimate=bool(node.get("aim_asserted_legitimate", False)),
            feature_rationale={str(k): str(v) for k, v in (node.get("feature_rationale") or {}).items()},
            exemptions={str(k): str(v) for k, v in (node.get("exemptions") or {}).items()},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed context block: {exc}") from exc


def context_to_dict(context: ContextDeclaration) -> dict[str, Any]:
    return {
        "protected_context": context.protected_context,
        "stated_aim": context.stated_aim,
        "aim_asserted_legitimate": context.aim_asserted_legitimate,
        "feature_rationale": dict(context.feature_rationale),
        "exemptions": dict(context.exemptions),
    }


def audit_config_from_dict(doc: Mapping[str, Any], seed: int) -> AuditConfig:
    """Audit tolerances from the config's metrics and justification blocks."""
    metrics_node = doc.get("metrics") or {}
    just_node = doc.get("justification") or {}
    try:
        return AuditConfig(
            bins=int(metrics_node.get("bins", 5)),
            bootstrap_replicates=int(metrics_node.get("bootstrap_replicates", 200)),
            confidence_level=float(metrics_node.get("confidence_level", 0.95)),
            gap_tolerance=float(metrics_node.get("gap_tolerance", 0.02)),
            min_group_n=int(metrics_node.get("min_group_n", 30)),
            min_flip_rate=float(metrics_node.get("min_flip_rate", 0.0)),
            true_parity_tolerance=float(metrics_node.get("true_parity_tolerance", 0.02)),
            accuracy_margin=float(just_node.get("accuracy_margin", 0.01)),
            disparity_reduction_tolerance=float(just_node.get("disparity_reduction_tolerance", 0.02)),
            holdout_fraction=float(just_node.get("holdout_fraction", 0.3)),
            seed=seed,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed metrics/justification block: {exc}") from exc


def alternatives_from_dict(doc: Mapping[str, Any], default_policy: Mapping[str, Any]) -> tuple[Alternative, ...]:
    alternatives = []
    for i, alt in enumerate(doc.get("alternatives") or []):
        alt_model, alt_target = model_from_dict(alt.get("model") or {})
        alternatives.append(
            Alternative(
                name=str(alt.get("name", f"alternative_{i}")),
                model=alt_model,
                policy=policy_from_dict(alt.get("policy") or default_policy),
                fit_target=alt_target,
            )
        )
    return tuple(alternatives)


def run_config_from_dict(doc: Mapping[str, Any], base_dir: Path) -> RunConfig:
    if not isinstance(doc, Mapping):
        raise ConfigurationError("run config must be a mapping")
    try:
        dgp_path = base_dir / str(doc["dgp_spec"])
        model_node = doc["model"]
        policy_node = doc["policy"]
        context_node = doc["context"]
    except KeyError as exc:
        raise ConfigurationError(f"run config missing required section {exc}") from exc

    seed = int(doc.get("seed", 0))
    env_seed = os.environ.get("FAIRAUDIT_SEED")
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError as exc:
            raise ConfigurationError(f"FAIRAUDIT_SEED must be an integer: {env_seed!r}") from exc
    if not 0 <= seed < 2**64:
        raise ConfigurationError("seed must fit in an unsigned 64-bit integer")

    model, fit_target = model_from_dict(model_node)
    audit = audit_config_from_dict(doc, seed)
    alternatives = alternatives_from_dict(doc, policy_node)

    output = doc.get("output") or {}
    out_dir_env = os.environ.get("FAIRAUDIT_OUT_DIR")
    out_base = Path(out_dir_env) if out_dir_env else base_dir
    report_path = out_base / str(output.get("report", "report.json"))
    figures_dir = out_base / str(output["figures_dir"]) if output.get("figures_dir") else None

    data_path = base_dir / str(doc["data"]) if doc.get("data") else None
    n = int(doc.get("n", 10000))
    if data_path is None and n < 1:
        raise ConfigurationError("config needs either a data path or a sample size n >= 1")

    return RunConfig(
        dgp_spec_path=dgp_path,
        data_path=data_path,
        n=n,
        seed=seed,
        model=model,
        fit_target=fit_target,
        policy=policy_from_dict(policy_node),
        context=context_from_dict(context_node),
        alternatives=tuple(alternatives),
        audit=audit,
        report_path=report_path,
        figures_dir=figures_dir,
        raw=dict(doc),
    )


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
    config = run_config_from_dict(doc or {}, path.parent)
    if not config.dgp_spec_path.exists():
        raise ConfigurationError(f"referenced DGP spec not found: {config.dgp_spec_path}")
    if config.data_path is not None and not config.data_path.exists():
        raise ConfigurationError(f"referenced dataset not found: {config.data_path}")
    return config


# ---------------------------------------------------------------------------
# Delimited datasets


def write_dataset(data: Dataset, path: str | Path) -> None:
    """Comma-delimited text: feature columns, then y, optional y_proxy, pi_true.

    Floats are written with full repr precision so a write/read round trip
    is exact.
    """
    names = list(data.columns)
    header = names + ["y"] + (["y_proxy"] if data.y_proxy is not None else []) + ["pi_true"]

    def cell(value: Any) -> str:
        if isinstance(value, (np.floating, float)):
            return repr(float(value))
        if isinstance(value, (np.integer, int)):
            return str(int(value))
        return str(value)

    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i in range(data.n):
                row = [cell(data.columns[name][i]) for name in names]
                row.append(str(int(data.y[i])))
                if data.y_proxy is not None:
                    row.append(str(int(data.y_proxy[i])))
                row.append(repr(float(data.pi_true[i])))
                writer.writerow(row)
    except OSError as exc:
        raise IOFailure(f"cannot write dataset {path}: {exc}") from exc


def _parse_column(values: list[str]) -> np.ndarray:
    try:
        return np.asarray([int(v) for v in values], dtype=np.int64)
    except ValueError:
        pass
    try:
        return np.asarray([float(v) for v in values], dtype=np.float64)
    except ValueError:
        return np.asarray(values, dtype=np.str_)


def read_dataset(path: str | Path, spec: DgpSpec | None = None) -> Dataset:
    """Read a delimited dataset; column dtypes resolved from the spec when given."""
    path = Path(path)
    if not path.exists():
        raise IOFailure(f"dataset not found: {path}")
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise IOFailure(f"cannot read dataset {path}: {exc}") from exc
    if not rows:
        raise ConfigurationError(f"dataset {path} is empty (missing header)")
    header, body = rows[0], rows[1:]
    if "y" not in header or "pi_true" not in header:
        raise ConfigurationError(f"dataset {path} must carry 'y' and 'pi_true' columns")

    by_name = {name: [row[j] for row in body] for j, name in enumerate(header)}
    reserved = {"y", "y_proxy", "pi_true"}
    columns: dict[str, np.ndarray] = {}
    for name in header:
        if name in reserved:
            continue
        raw = by_name[name]
        if spec is not None:
            dist = spec.feature(name).distribution
            if isinstance(dist, Gaussian):
                columns[name] = np.asarray([float(v) for v in raw], dtype=np.float64)
            elif isinstance(dist, Bernoulli):
                columns[name] = np.asarray([int(v) for v in raw], dtype=np.int64)
            elif dist.is_numeric:
                columns[name] = np.asarray([float(v) for v in raw], dtype=np.float64)
            else:
                columns[name] = np.asarray(raw, dtype=np.str_)
        else:
            columns[name] = _parse_column(raw)

    return Dataset(
        n=len(body),
        columns=columns,
        y=np.asarray([int(v) for v in by_name["y"]], dtype=np.int64),
        y_proxy=(
            np.asarray([int(v) for v in by_name["y_proxy"]], dtype=np.int64)
            if "y_proxy" in by_name
            else None
        ),
        pi_true=np.asarray([float(v) for v in by_name["pi_true"]], dtype=np.float64),
    )
