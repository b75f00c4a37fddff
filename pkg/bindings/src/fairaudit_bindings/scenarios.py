"""Scenario constructors, re-exported from the core unchanged."""

from fairaudit.scenarios import (
    Scenario,
    finnish_credit_scenario,
    get_scenario,
    label_bias_scenario,
    neutral_baseline_scenario,
    run_scenario,
    scenario_names,
    true_difference_scenario,
)

__all__ = [
    "Scenario",
    "finnish_credit_scenario",
    "get_scenario",
    "label_bias_scenario",
    "neutral_baseline_scenario",
    "run_scenario",
    "scenario_names",
    "true_difference_scenario",
]
