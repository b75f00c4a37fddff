"""Tests for the command-line surface and its exit-code contract."""

import json

import pytest
import yaml

from fairaudit import config, scenarios
from fairaudit.cli import main


def write_fixture(tmp_path, scenario_name="neutral_baseline", n=800, **config_overrides):
    sc = scenarios.get_scenario(scenario_name)
    config.save_dgp_spec(sc.dgp, tmp_path / "dgp.yaml")
    doc = {
        "dgp_spec": "dgp.yaml",
        "n": n,
        "seed": 5,
        "model": {"features": list(sc.model.feature_names), "l2": sc.model.l2_strength,
                  "target": sc.fit_target},
        "policy": {"threshold": sc.policy.tau},
        "context": {
            "protected_context": sc.context.protected_context,
            "stated_aim": sc.context.stated_aim,
            "aim_asserted_legitimate": sc.context.aim_asserted_legitimate,
            "exemptions": dict(sc.context.exemptions),
        },
        "alternatives": [
            {
                "name": alt.name,
                "model": {"features": list(alt.model.feature_names), "l2": alt.model.l2_strength,
                          "target": alt.fit_target},
                "policy": {"threshold": alt.policy.tau},
            }
            for alt in sc.alternatives
        ],
        "metrics": {"bootstrap_replicates": 40},
        "output": {"report": "report.json"},
    }
    doc.update(config_overrides)
    (tmp_path / "run.yaml").write_text(yaml.safe_dump(doc))
    return tmp_path / "run.yaml"


class TestGen:
    def test_writes_dataset_with_expected_shape(self, tmp_path):
        config.save_dgp_spec(scenarios.get_scenario("neutral_baseline").dgp, tmp_path / "dgp.yaml")
        out = tmp_path / "data.csv"
        code = main(["gen", "--spec", str(tmp_path / "dgp.yaml"), "--n", "100", "--seed", "3",
                     "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 101
        assert lines[0] == "group,score,y,pi_true"

    def test_is_deterministic(self, tmp_path):
        config.save_dgp_spec(scenarios.get_scenario("neutral_baseline").dgp, tmp_path / "dgp.yaml")
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            main(["gen", "--spec", str(tmp_path / "dgp.yaml"), "--n", "200", "--seed", "9",
                  "--out", str(out)])
        assert a.read_bytes() == b.read_bytes()

    def test_missing_spec_is_exit_2(self, tmp_path, capsys):
        code = main(["gen", "--spec", str(tmp_path / "ghost.yaml"), "--n", "5", "--out",
                     str(tmp_path / "d.csv")])
        assert code == 2
        assert "configuration error" in capsys.readouterr().err


class TestFit:
    def test_writes_model_document(self, tmp_path):
        cfg = write_fixture(tmp_path)
        out = tmp_path / "model.json"
        assert main(["fit", "--config", str(cfg), "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert set(doc["coefficients"]) == {"intercept", "score"}
        assert doc["convergence"]["converged"] is True


class TestAudit:
    def test_missing_config_is_exit_2(self, tmp_path, capsys):
        code = main(["audit", "--config", str(tmp_path / "missing.cfg")])
        assert code == 2
        assert "configuration error" in capsys.readouterr().err

    def test_clean_audit_exits_zero_even_with_strict(self, tmp_path):
        cfg = write_fixture(tmp_path)
        assert main(["audit", "--config", str(cfg), "--strict"]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["finding"]["classification"] == "NoProhibitedConduct"
        assert (tmp_path / "report.md").exists()

    def test_flagged_audit_exits_one_only_under_strict(self, tmp_path):
        cfg = write_fixture(tmp_path, scenario_name="true_difference", n=4000)
        assert main(["audit", "--config", str(cfg)]) == 0
        assert main(["audit", "--config", str(cfg), "--strict"]) == 1
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["finding"]["classification"] == "IndirectJustifiable"

    def test_audit_from_pregenerated_data_file(self, tmp_path):
        cfg = write_fixture(tmp_path)
        data_path = tmp_path / "data.csv"
        main(["gen", "--spec", str(tmp_path / "dgp.yaml"), "--n", "800", "--seed", "5",
              "--out", str(data_path)])
        cfg2 = write_fixture(tmp_path, data="data.csv")
        assert main(["audit", "--config", str(cfg2)]) == 0


class TestScenario:
    def test_list_names_everything(self, capsys):
        assert main(["scenario", "list"]) == 0
        out = capsys.readouterr().out
        for name in scenarios.scenario_names():
            assert name in out

    def test_run_produces_byte_identical_outputs(self, tmp_path):
        d1, d2 = tmp_path / "r1", tmp_path / "r2"
        for d in (d1, d2):
            assert main(["scenario", "run", "neutral_baseline", "--out-dir", str(d)]) == 0
        assert (d1 / "report.json").read_bytes() == (d2 / "report.json").read_bytes()
        assert (d1 / "report.md").read_bytes() == (d2 / "report.md").read_bytes()
        assert (d1 / "data.csv").read_bytes() == (d2 / "data.csv").read_bytes()

    def test_exported_fixture_pair_reproduces_the_finding(self, tmp_path):
        d = tmp_path / "run"
        assert main(["scenario", "run", "neutral_baseline", "--out-dir", str(d)]) == 0
        scenario_report = json.loads((d / "report.json").read_text())
        assert main(["audit", "--config", str(d / "run.yaml")]) == 0
        audit_report = json.loads((d / "report.json").read_text())
        assert audit_report["finding"] == scenario_report["finding"]
        assert audit_report["provenance"] == scenario_report["provenance"]

    def test_report_carries_classification_and_figures_exist(self, tmp_path):
        d = tmp_path / "run"
        assert main(["scenario", "run", "neutral_baseline", "--out-dir", str(d)]) == 0
        report = json.loads((d / "report.json").read_text())
        assert report["scenario"] == "neutral_baseline"
        assert report["finding"]["classification"] == "NoProhibitedConduct"
        assert (d / "figures" / "selection_rates.png").exists()


class TestReportRender:
    def test_render_is_pure_and_writes_markdown(self, tmp_path):
        d = tmp_path / "run"
        main(["scenario", "run", "neutral_baseline", "--out-dir", str(d)])
        out1, out2 = tmp_path / "a.md", tmp_path / "b.md"
        assert main(["report", "render", str(d / "report.json"), "--out", str(out1)]) == 0
        assert main(["report", "render", str(d / "report.json"), "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        assert "Discrimination audit report" in out1.read_text()

    def test_missing_report_is_exit_3(self, tmp_path, capsys):
        code = main(["report", "render", str(tmp_path / "ghost.json")])
        assert code == 3
        assert "i/o error" in capsys.readouterr().err
