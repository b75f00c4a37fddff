"""Audit entry point over caller-supplied in-memory arrays."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from fairaudit.config import (
    alternatives_from_dict,
    audit_config_from_dict,
    context_from_dict,
    context_to_dict,
    dgp_spec_from_dict,
    dgp_spec_to_dict,
    model_from_dict,
    model_to_dict,
    policy_from_dict,
    policy_to_dict,
)
from fairaudit.dgp import Dataset, DgpSpec, require_valid, true_probs
from fairaudit.errors import ConfigurationError, InputError
from fairaudit.legal_audit import run_audit
from fairaudit.report import finding_to_dict
from fairaudit.scenarios import Scenario


@dataclass(frozen=True)
class BoundDataset:
    """Caller-supplied columns plus outcomes; converts losslessly to a core dataset.

    ``pi_true`` may be omitted; the conversion then derives it from the
    declared process, which is the identity the sampler guarantees anyway.
    """

    columns: Mapping[str, Any]
    y: Any
    y_proxy: Any | None = None
    pi_true: Any | None = None

    def to_dataset(self, spec: DgpSpec | None = None) -> Dataset:
        columns = {name: np.asarray(col) for name, col in self.columns.items()}
        y = np.asarray(self.y, dtype=np.int64)
        n = len(y)
        for name, col in columns.items():
            if len(col) != n:
                raise InputError(
                    f"column {name!r} has {len(col)} rows but y has {n}; arrays must align"
                )
        y_proxy = None if self.y_proxy is None else np.asarray(self.y_proxy, dtype=np.int64)
        if y_proxy is not None and len(y_proxy) != n:
            raise InputError(f"y_proxy has {len(y_proxy)} rows but y has {n}; arrays must align")
        if self.pi_true is not None:
            pi_true = np.asarray(self.pi_true, dtype=np.float64)
            if len(pi_true) != n:
                raise InputError(f"pi_true has {len(pi_true)} rows but y has {n}; arrays must align")
        elif spec is not None:
            pi_true = true_probs(spec, columns, n)
        else:
            raise InputError("pi_true is required when no process declaration is supplied")
        return Dataset(n=n, columns=columns, y=y, y_proxy=y_proxy, pi_true=pi_true)


def bind_audit(dataset: BoundDataset, config: Mapping[str, Any]) -> dict[str, Any]:
    """Run the full staged audit and return the finding as a structured mapping.

    ``config`` uses the run-config schema with the process declaration inline:
    ``dgp`` (features/outcome/proxy sections), ``model``, ``policy``,
    ``context``, optional ``alternatives``, ``metrics``, ``justification``,
    and ``seed``. The result is field for field what the CLI writes under the
    report's ``finding`` key for the equivalent files and seed.
    """
    if not isinstance(config, Mapping):
        raise ConfigurationError("run config must be a mapping")
    try:
        dgp_node = config["dgp"]
        model_node = config["model"]
        policy_node = config["policy"]
        context_node = config["context"]
    except KeyError as exc:
        raise ConfigurationError(f"run config missing required section {exc}") from exc

    spec = dgp_spec_from_dict(dgp_node)
    require_valid(spec)
    model, fit_target = model_from_dict(model_node)
    seed = int(config.get("seed", 0))
    finding = run_audit(
        spec,
        dataset.to_dataset(spec),
        model,
        policy_from_dict(policy_node),
        context_from_dict(context_node),
        alternatives_from_dict(config, policy_node),
        audit_config_from_dict(config, seed),
        fit_target=fit_target,
    )
    return finding_to_dict(finding)


def scenario_config(scenario: Scenario) -> dict[str, Any]:
    """The bind_audit config equivalent to running the given scenario."""
    return {
        "dgp": dgp_spec_to_dict(scenario.dgp),
        "seed": scenario.seed,
        "model": model_to_dict(scenario.model, scenario.fit_target),
        "policy": policy_to_dict(scenario.policy),
        "context": context_to_dict(scenario.context),
        "alternatives": [
            {
                "name": alt.name,
                "model": model_to_dict(alt.model, alt.fit_target),
                "policy": policy_to_dict(alt.policy),
            }
            for alt in scenario.alternatives
        ],
    }
