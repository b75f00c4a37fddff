"""Command-line surface.

Subcommands:
  gen            sample a dataset from a DGP spec into a delimited file
  fit            train a model per the run config and write the model file
  audit          run the full staged audit and write the report document
  scenario list  list the shipped scenario fixtures
  scenario run   export a scenario as spec+config files and audit it
  report render  render a report document to markdown and figures

Exit codes: 0 success; 1 audit completed with flags raised and --strict was
given; 2 configuration or validation error; 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from . import __version__
from .config import (
    RunConfig,
    context_to_dict,
    dgp_spec_to_dict,
    load_dgp_spec,
    load_run_config,
    model_to_dict,
    policy_to_dict,
    read_dataset,
    save_dgp_spec,
    write_dataset,
)
from .dgp import Dataset, sample
from .errors import ConfigurationError, FairauditError, InputError, IOFailure
from .estimation import FittedModel, fit
from .legal_audit import AuditFinding, run_audit
from .report import build_report, load_report, render_figures, render_markdown, write_report
from .scenarios import get_scenario, run_scenario, scenario_names

EXIT_OK = 0
EXIT_FLAGGED = 1
EXIT_CONFIG = 2
EXIT_IO = 3

_FLAGGED_CLASSIFICATIONS = ("DirectDiscriminationRisk", "IndirectPrimaFacie", "IndirectJustifiable")


def _model_document(model: FittedModel) -> dict[str, Any]:
    return {
        "features": list(model.spec.feature_names),
        "l2": model.spec.l2_strength,
        "target": model.target,
        "coefficients": dict(model.coefficients),
        "convergence": {
            "converged": model.converged,
            "iterations": model.iterations,
            "final_gradient_norm": model.final_gradient_norm,
        },
        "encoding": {"onehot": {k: list(v) for k, v in model.encoding.onehot.items()}},
        "warnings": list(model.warnings),
    }


def _load_or_sample(config: RunConfig) -> tuple[Any, Dataset]:
    spec = load_dgp_spec(config.dgp_spec_path)
    if config.data_path is not None:
        data = read_dataset(config.data_path, spec)
    else:
        data = sample(spec, config.n, config.seed)
    return spec, data


def _audit_from_config(config: RunConfig, workers: int) -> tuple[AuditFinding, dict[str, Any]]:
    spec, data = _load_or_sample(config)
    audit_cfg = config.audit if workers == 1 else replace(config.audit, workers=workers)
    finding = run_audit(
        spec,
        data,
        config.model,
        config.policy,
        config.context,
        config.alternatives,
        audit_cfg,
        fit_target=config.fit_target,
    )
    fitted = fit(data, config.model, target=config.fit_target)
    report = build_report(
        finding,
        seed=config.seed,
        config_doc=config.raw,
        model_doc=_model_document(fitted),
    )
    return finding, report


def _emit_outputs(report: Mapping[str, Any], config: RunConfig, render: bool = True) -> None:
    config.report_path.parent.mkdir(parents=True, exist_ok=True)
    write_report(report, config.report_path)
    print(f"report: {config.report_path}")
    if render:
        md_path = config.report_path.with_suffix(".md")
        md_path.write_text(render_markdown(report), encoding="utf-8")
        print(f"rendered: {md_path}")
    if config.figures_dir is not None:
        for path in render_figures(report, config.figures_dir):
            print(f"figure: {path}")


def _cmd_gen(args: argparse.Namespace) -> int:
    spec = load_dgp_spec(args.spec)
    if args.n < 0:
        raise ConfigurationError("n must be >= 0")
    data = sample(spec, args.n, args.seed)
    write_dataset(data, args.out)
    print(f"dataset: {args.out} ({data.n} rows)")
    return EXIT_OK


def _cmd_fit(args: argparse.Namespace) -> int:
    config = load_run_config(args.config)
    spec, data = _load_or_sample(config)
    model = fit(data, config.model, target=config.fit_target)
    doc = _model_document(model)
    try:
        Path(args.out).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot write model file {args.out}: {exc}") from exc
    status = "converged" if model.converged else "did not converge"
    print(f"model: {args.out} ({status} after {model.iterations} iterations)")
    return EXIT_OK


def _cmd_audit(args: argparse.Namespace) -> int:
    config = load_run_config(args.config)
    finding, report = _audit_from_config(config, args.workers)
    _emit_outputs(report, config)
    print(f"classification: {finding.classification}")
    if args.strict and finding.classification in _FLAGGED_CLASSIFICATIONS:
        return EXIT_FLAGGED
    return EXIT_OK


def _cmd_scenario(args: argparse.Namespace) -> int:
    if args.action == "list":
        for name in scenario_names():
            sc = get_scenario(name)
            print(f"{name}: expected {sc.expected_classification} (n={sc.n}, seed={sc.seed})")
        return EXIT_OK

    scenario = get_scenario(args.name)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    # Export the fixture pair so the CLI path and the programmatic path share files.
    save_dgp_spec(scenario.dgp, out_dir / "dgp.yaml")
    run_doc = _scenario_run_doc(scenario)
    (out_dir / "run.yaml").write_text(yaml.safe_dump(run_doc, sort_keys=False), encoding="utf-8")

    data, finding = run_scenario(scenario, workers=args.workers)
    write_dataset(data, out_dir / "data.csv")
    report = build_report(
        finding,
        seed=scenario.seed,
        config_doc=run_doc,
        model_doc=_model_document(
            fit(data, scenario.model, target=scenario.fit_target)
        ),
        scenario=scenario.name,
    )
    write_report(report, out_dir / "report.json")
    (out_dir / "report.md").write_text(render_markdown(report), encoding="utf-8")
    for path in render_figures(report, out_dir / "figures"):
        print(f"figure: {path}")
    print(f"report: {out_dir / 'report.json'}")
    print(f"classification: {finding.classification}")
    if args.strict and finding.classification in _FLAGGED_CLASSIFICATIONS:
        return EXIT_FLAGGED
    return EXIT_OK


def _scenario_run_doc(scenario: Any) -> dict[str, Any]:
    return {
        "dgp_spec": "dgp.yaml",
        "n": scenario.n,
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
        "output": {"report": "report.json", "figures_dir": "figures"},
    }


def _cmd_report(args: argparse.Namespace) -> int:
    report = load_report(args.report)
    out = Path(args.out) if args.out else Path(args.report).with_suffix(".md")
    try:
        out.write_text(render_markdown(report), encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot write {out}: {exc}") from exc
    print(f"rendered: {out}")
    if args.figures_dir:
        for path in render_figures(report, args.figures_dir):
            print(f"figure: {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairaudit", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"fairaudit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="sample a dataset from a DGP spec")
    p.add_argument("--spec", required=True, help="DGP spec file (YAML)")
    p.add_argument("--n", type=int, required=True, help="number of rows")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output dataset path (CSV)")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("fit", help="train the configured model and write a model file")
    p.add_argument("--config", required=True, help="run config file (YAML)")
    p.add_argument("--out", required=True, help="output model path (JSON)")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("audit", help="run the staged audit and write the report")
    p.add_argument("--config", required=True, help="run config file (YAML)")
    p.add_argument("--strict", action="store_true", help="exit 1 when the audit raises flags")
    p.add_argument("--workers", type=int, default=1, help="bootstrap worker threads")
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("scenario", help="list or run the shipped scenarios")
    sc_sub = p.add_subparsers(dest="action", required=True)
    p_list = sc_sub.add_parser("list", help="list scenarios")
    p_list.set_defaults(func=_cmd_scenario, action="list")
    p_run = sc_sub.add_parser("run", help="export and audit one scenario")
    p_run.add_argument("name", choices=list(scenario_names()))
    p_run.add_argument("--seed", type=int, default=None, help="override the shipped seed")
    p_run.add_argument("--out-dir", default="scenario_out")
    p_run.add_argument("--strict", action="store_true")
    p_run.add_argument("--workers", type=int, default=1)
    p_run.set_defaults(func=_cmd_scenario, action="run")

    p = sub.add_parser("report", help="render a report document")
    rp_sub = p.add_subparsers(dest="action", required=True)
    p_render = rp_sub.add_parser("render", help="render markdown (and figures) from a report")
    p_render.add_argument("report", help="report document (JSON)")
    p_render.add_argument("--out", default=None, help="markdown output path")
    p_render.add_argument("--figures-dir", default=None)
    p_render.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, InputError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IOFailure as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FairauditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
