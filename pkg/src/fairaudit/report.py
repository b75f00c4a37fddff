"""Audit report documents: stable JSON, rendered markdown, and figures.

The machine-readable report is UTF-8 JSON with sorted keys and repr-precision
floats, so identical runs produce byte-identical files. The renderer is a
pure function of the report document; figures are drawn from the document's
per-group statistics, never from raw data.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .decision import SelectionRates
from .errors import IOFailure
from .legal_audit import AuditFinding
from .metrics import GammaDisparity, Interval, ParityReport

SCHEMA_VERSION = 1


def config_hash(doc: Mapping[str, Any]) -> str:
    """Stable digest of a config mapping (canonical JSON, sorted keys)."""
    canonical = json.dumps(doc, sort_keys=True, ensure_ascii=False, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _interval_dict(ci: Interval) -> dict[str, Any]:
    return {"level": ci.level, "lower": ci.lower, "upper": ci.upper}


def _parity_dict(report: ParityReport) -> dict[str, Any]:
    return {
        "metric": report.metric,
        "overall_gap": report.overall_gap,
        "per_group": {
            str(lv): {
                "gap": gap,
                "max_stratum_gap": report.per_group_max_stratum.get(lv, 0.0),
                "ci": _interval_dict(report.cis[lv]),
                "n": report.group_sizes.get(lv, 0),
                "coverage": report.coverage.get(lv, 0.0),
            }
            for lv, gap in report.per_group.items()
        },
        "per_stratum": [
            {"stratum": c.stratum, "group": str(c.group), "n": c.n_cell, "gap": c.gap}
            for c in report.per_stratum
        ],
        "warnings": list(report.warnings),
    }


def _selection_dict(rates: SelectionRates) -> dict[str, Any]:
    return {
        "overall": rates.overall,
        "per_group": {str(lv): r for lv, r in rates.per_group.items()},
        "counts": {str(lv): c for lv, c in rates.counts.items()},
    }


def _gamma_dict(g: GammaDisparity) -> dict[str, Any]:
    return {
        "per_group": {str(lv): gap for lv, gap in g.gaps.per_group.items()},
        "cis": {str(lv): _interval_dict(ci) for lv, ci in g.cis.items()},
        "tolerance": g.tolerance,
        "flagged": g.flagged,
        "flag_text": g.flag_text,
    }


def finding_to_dict(finding: AuditFinding) -> dict[str, Any]:
    """Structured view of an audit finding with JSON-safe keys and values."""
    direct = {
        "flagged": finding.direct.flagged,
        "evidence": [
            {
                "feature": ev.feature,
                "attributed_to": ev.attributed_to,
                "in_model": ev.in_model,
                "flip_rate": ev.rate,
                "adverse_rates": {str(lv): r for lv, r in ev.adverse_rates.items()},
                "adverse_direction": None if ev.adverse_direction is None else str(ev.adverse_direction),
                "exempted": ev.exempted,
                "note": ev.note,
            }
            for ev in finding.direct.evidence
        ],
        "notes": list(finding.direct.notes),
    }
    indirect = {
        "flagged": finding.indirect.flagged,
        "pcp": finding.indirect.pcp_description,
        "reports": {name: _parity_dict(r) for name, r in finding.indirect.reports.items()},
        "selection_rates": {name: _selection_dict(s) for name, s in finding.indirect.selection.items()},
        "flagged_groups": [[name, str(lv)] for name, lv in finding.indirect.flagged_groups],
        "insufficient_groups": [[name, str(lv)] for name, lv in finding.indirect.insufficient_groups],
        "warnings": list(finding.indirect.warnings),
    }
    estimation = {
        "omega": {name: _parity_dict(r) for name, r in finding.estimation.omega.items()},
        "gamma": {name: _gamma_dict(g) for name, g in finding.estimation.gamma.items()},
        "gamma_applicable": finding.estimation.gamma_applicable,
        "gamma_flagged": finding.estimation.gamma_flagged,
    }
    justification = {
        "assessed": finding.justification.assessed,
        "aim_asserted_legitimate": finding.justification.aim_asserted_legitimate,
        "primary": {
            "log_loss": finding.justification.primary_log_loss,
            "disparity": finding.justification.primary_disparity,
            "decision_utility": finding.justification.primary_utility,
        },
        "alternatives": [
            {
                "name": alt.name,
                "log_loss": alt.log_loss,
                "decision_utility": alt.decision_utility,
                "disparity": alt.disparity,
                "disparity_reduction": alt.disparity_reduction,
                "accuracy_cost": alt.accuracy_cost,
                "dominates": alt.dominates,
            }
            for alt in finding.justification.alternatives
        ],
        "less_discriminatory_alternative_found": finding.justification.less_discriminatory_alternative_found,
        "accuracy_cost": finding.justification.accuracy_cost,
        "caveats": list(finding.justification.caveats),
    }
    return {
        "classification": finding.classification,
        "direct": direct,
        "indirect": indirect,
        "estimation": estimation,
        "justification": justification,
        "narrative": list(finding.narrative),
        "warnings": list(finding.warnings),
    }


def build_report(
    finding: AuditFinding,
    seed: int,
    config_doc: Mapping[str, Any],
    model_doc: Mapping[str, Any] | None = None,
    scenario: str | None = None,
) -> dict[str, Any]:
    from . import __version__

    report: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "provenance": {
            "tool": "fairaudit",
            "version": __version__,
            "seed": seed,
            "config_hash": config_hash(config_doc),
        },
        "finding": finding_to_dict(finding),
    }
    if model_doc is not None:
        report["model"] = dict(model_doc)
    if scenario is not None:
        report["scenario"] = scenario
    return report


def dumps_report(report: Mapping[str, Any]) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_report(report: Mapping[str, Any], path: str | Path) -> None:
    try:
        Path(path).write_text(dumps_report(report), encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot write report {path}: {exc}") from exc


def load_report(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise IOFailure(f"report not found: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise IOFailure(f"cannot read report {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Markdown


def _md_table(headers: list[str], rows: list[list[str]]) -> list[str]:
    lines = ["| " + " | ".join(headers) + " |", "|" + "|".join(["---"] * len(headers)) + "|"]
    lines.extend("| " + " | ".join(row) + " |" for row in rows)
    return lines


def render_markdown(report: Mapping[str, Any]) -> str:
    """Render the human-readable narrative. Pure function of the report document."""
    finding = report["finding"]
    prov = report["provenance"]
    lines: list[str] = ["# Discrimination audit report", ""]
    if "scenario" in report:
        lines += [f"Scenario: `{report['scenario']}`", ""]
    lines += [
        f"**Classification: {finding['classification']}**",
        "",
        f"Tool {prov['tool']} {prov['version']}, seed {prov['seed']}, "
        f"config `{prov['config_hash'][:12]}`, schema v{report['schema_version']}.",
        "",
        "## Stage narrative",
        "",
    ]
    lines += [f"{i + 1}. {line}" for i, line in enumerate(finding["narrative"])]

    direct = finding["direct"]
    lines += ["", "## Direct discrimination", "", f"Flagged: **{direct['flagged']}**", ""]
    if direct["evidence"]:
        rows = [
            [
                ev["feature"],
                ev["attributed_to"],
                f"{ev['flip_rate']:.4f}",
                str(ev["adverse_direction"]),
                "yes" if ev["exempted"] else "no",
            ]
            for ev in direct["evidence"]
        ]
        lines += _md_table(
            ["feature", "protected characteristic", "flip rate", "adverse to", "exempted"], rows
        )

    indirect = finding["indirect"]
    lines += ["", "## Indirect discrimination", "", f"Flagged: **{indirect['flagged']}**", ""]
    lines += [f"PCP: {indirect['pcp']}", ""]
    for name, rep in indirect["reports"].items():
        lines += [f"### Conditional favourable-rate gaps: `{name}`", ""]
        rows = [
            [
                str(lv),
                f"{cell['gap']:.4f}",
                f"[{cell['ci']['lower']:.4f}, {cell['ci']['upper']:.4f}]",
                str(cell["n"]),
                f"{cell['coverage']:.3f}",
            ]
            for lv, cell in rep["per_group"].items()
        ]
        lines += _md_table(["group", "gap", "CI", "n", "coverage"], rows) + [""]

    est = finding["estimation"]
    lines += ["## Estimation analysis", ""]
    for name, rep in est["omega"].items():
        rows = [
            [str(lv), f"{cell['gap']:.4f}", f"[{cell['ci']['lower']:.4f}, {cell['ci']['upper']:.4f}]"]
            for lv, cell in rep["per_group"].items()
        ]
        lines += [f"### Estimation disparity (omega): `{name}`", ""]
        lines += _md_table(["group", "omega", "CI"], rows) + [""]
    if est["gamma_applicable"]:
        lines += [f"Proxy-target mismatch flag: **{est['gamma_flagged']}**", ""]
        for name, g in est["gamma"].items():
            rows = [
                [str(lv), f"{gap:.4f}", f"[{g['cis'][lv]['lower']:.4f}, {g['cis'][lv]['upper']:.4f}]"]
                for lv, gap in g["per_group"].items()
            ]
            lines += [f"### Target mismatch disparity (gamma): `{name}`", ""]
            lines += _md_table(["group", "gamma disparity", "CI"], rows) + [""]

    just = finding["justification"]
    lines += ["## Justification", "", f"Assessed: **{just['assessed']}**", ""]
    if just["assessed"] and just["primary"]["log_loss"] is not None:
        lines += [
            f"Primary: holdout log-loss {just['primary']['log_loss']:.4f}, "
            f"disparity {just['primary']['disparity']:.4f}",
            "",
        ]
        if just["alternatives"]:
            rows = [
                [
                    alt["name"],
                    f"{alt['log_loss']:.4f}",
                    f"{alt['accuracy_cost']:+.4f}",
                    f"{alt['disparity']:.4f}",
                    f"{alt['disparity_reduction']:+.4f}",
                    "yes" if alt["dominates"] else "no",
                ]
                for alt in just["alternatives"]
            ]
            lines += _md_table(
                ["alternative", "log-loss", "accuracy cost", "disparity", "reduction", "dominates"], rows
            )
    for caveat in just["caveats"]:
        lines += ["", f"Caveat: {caveat}"]

    if finding["warnings"]:
        lines += ["", "## Warnings", ""]
        lines += [f"- {w}" for w in finding["warnings"]]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Figures


def _bar_with_ci(ax: Any, rep: Mapping[str, Any], title: str, ylabel: str) -> None:
    groups = list(rep["per_group"])
    gaps = [rep["per_group"][g]["gap"] for g in groups]
    los = [rep["per_group"][g]["gap"] - rep["per_group"][g]["ci"]["lower"] for g in groups]
    his = [rep["per_group"][g]["ci"]["upper"] - rep["per_group"][g]["gap"] for g in groups]
    ax.bar(range(len(groups)), gaps, color="#4878a8", alpha=0.85)
    ax.errorbar(range(len(groups)), gaps, yerr=[los, his], fmt="none", ecolor="black", capsize=3)
    ax.set_xticks(range(len(groups)))
    ax.set_xticklabels(groups, rotation=20, ha="right")
    ax.set_title(title)
    ax.set_ylabel(ylabel)


def render_figures(report: Mapping[str, Any], out_dir: str | Path) -> list[Path]:
    """Draw per-group evidence charts from the report document into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    finding = report["finding"]
    written: list[Path] = []

    selection = finding["indirect"]["selection_rates"]
    if selection:
        fig, axes = plt.subplots(1, len(selection), figsize=(4.2 * len(selection), 3.4), squeeze=False)
        for ax, (name, rates) in zip(axes[0], selection.items()):
            groups = list(rates["per_group"])
            ax.bar(range(len(groups)), [rates["per_group"][g] for g in groups], color="#60935d", alpha=0.85)
            ax.axhline(rates["overall"], color="black", linestyle="--", linewidth=1, label="overall")
            ax.set_xticks(range(len(groups)))
            ax.set_xticklabels(groups, rotation=20, ha="right")
            ax.set_title(f"favourable-action rate: {name}")
            ax.set_ylim(0, 1)
            ax.legend(loc="upper right", fontsize=8)
        fig.tight_layout()
        path = out / "selection_rates.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    for key, fname, ylabel in (
        ("reports", "conditional_gaps.png", "conditional favourable-rate gap"),
        ("omega", "estimation_disparity.png", "estimation disparity (omega)"),
    ):
        block = finding["indirect"]["reports"] if key == "reports" else finding["estimation"]["omega"]
        if not block:
            continue
        fig, axes = plt.subplots(1, len(block), figsize=(4.2 * len(block), 3.4), squeeze=False)
        for ax, (name, rep) in zip(axes[0], block.items()):
            _bar_with_ci(ax, rep, name, ylabel)
        fig.tight_layout()
        path = out / fname
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    gamma = finding["estimation"]["gamma"]
    if gamma:
        fig, axes = plt.subplots(1, len(gamma), figsize=(4.2 * len(gamma), 3.4), squeeze=False)
        for ax, (name, g) in zip(axes[0], gamma.items()):
            groups = list(g["per_group"])
            vals = [g["per_group"][lv] for lv in groups]
            los = [g["per_group"][lv] - g["cis"][lv]["lower"] for lv in groups]
            his = [g["cis"][lv]["upper"] - g["per_group"][lv] for lv in groups]
            ax.bar(range(len(groups)), vals, color="#a85751", alpha=0.85)
            ax.errorbar(range(len(groups)), vals, yerr=[los, his], fmt="none", ecolor="black", capsize=3)
            ax.axhline(g["tolerance"], color="black", linestyle=":", linewidth=1, label="tolerance")
            ax.set_xticks(range(len(groups)))
            ax.set_xticklabels(groups, rotation=20, ha="right")
            ax.set_title(f"target mismatch disparity: {name}")
            ax.legend(loc="upper right", fontsize=8)
        fig.tight_layout()
        path = out / "gamma_disparity.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    return written
