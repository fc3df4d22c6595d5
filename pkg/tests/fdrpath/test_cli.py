import json
import re

import pandas as pd
from click.testing import CliRunner

from fdrpath.cli import main
from fdrpath.grouped import GroupSpec, simulate_grouped_battery
from fdrpath.harness.io import write_battery_csv
from fdrpath.harness.runner import OUTPUT_DIR_ENV
from fdrpath.statdist import SeededRng


def _simulate(runner, filename, *extra):
    return runner.invoke(
        main,
        ["simulate", "--pi0", "0.5", "--m", "2000", "--k", "10", "--seed", "1"]
        + list(extra)
        + ["--out", str(filename)],
    )


# simulate


def test_simulate(tmp_path):
    filename = tmp_path / "battery.csv"
    result = _simulate(CliRunner(), filename)

    assert result.exit_code == 0, result.output
    assert f"Wrote 2000 tests to {filename}" in result.output
    assert len(pd.read_csv(filename)) == 2000


def test_simulate_gamma_alternative(tmp_path):
    filename = tmp_path / "battery.csv"
    result = CliRunner().invoke(
        main,
        ["simulate", "--pi0", "0.6", "--m", "100", "--shape", "0.3", "--scale", "22"]
        + ["--out", str(filename)],
    )

    assert result.exit_code == 0, result.output


def test_simulate_needs_an_alternative(tmp_path):
    result = CliRunner().invoke(
        main, ["simulate", "--pi0", "0.5", "--m", "100", "--shape", "0.3"]
    )

    assert result.exit_code == 2
    assert "--k or both --shape and --scale" in result.output


def test_simulate_rejects_invalid_models(tmp_path):
    result = CliRunner().invoke(
        main,
        ["simulate", "--pi0", "1.5", "--m", "100", "--k", "10"]
        + ["--out", str(tmp_path / "battery.csv")],
    )

    assert result.exit_code == 1
    assert "pi0" in result.output


def test_simulate_writes_to_the_output_directory(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
    result = CliRunner().invoke(
        main, ["simulate", "--pi0", "0.5", "--m", "100", "--k", "10"]
    )

    assert result.exit_code == 0, result.output
    assert (tmp_path / "battery.csv").exists()


# fdr


def test_fdr_bh_agrees_with_the_step_up_procedure(tmp_path):
    runner = CliRunner()
    battery = tmp_path / "battery.csv"
    _simulate(runner, battery)
    result = runner.invoke(
        main,
        ["fdr", "--battery", str(battery), "--method", "bh"]
        + ["--out", str(tmp_path / "bh_path.csv")],
    )

    assert result.exit_code == 0, result.output
    step_up = re.search(r"step-up: (\d+) rejections", result.output)
    path = re.search(r"bh: (\d+) rejections at level 0.1", result.output)
    assert step_up is not None and path is not None
    assert step_up.group(1) == path.group(1)


def test_fdr_peb(tmp_path):
    runner = CliRunner()
    battery = tmp_path / "battery.csv"
    _simulate(runner, battery)
    result = runner.invoke(
        main,
        ["fdr", "--battery", str(battery), "--method", "peb", "--null-penalty", "9"]
        + ["--out", str(tmp_path / "peb_path.csv")],
    )

    assert result.exit_code == 0, result.output
    assert "Fitted pi0:" in result.output
    assert list(pd.read_csv(tmp_path / "peb_path.csv").columns) == [
        "rank",
        "threshold",
        "fdr_estimate",
    ]


def test_fdr_needs_a_known_method(tmp_path):
    runner = CliRunner()
    battery = tmp_path / "battery.csv"
    _simulate(runner, battery)
    result = runner.invoke(main, ["fdr", "--battery", str(battery), "--method", "storey"])

    assert result.exit_code == 2


# path compare


def test_path_compare(tmp_path):
    runner = CliRunner()
    battery = tmp_path / "battery.csv"
    _simulate(runner, battery)
    for method in ("bh", "qvalue"):
        runner.invoke(
            main,
            ["fdr", "--battery", str(battery), "--method", method]
            + ["--out", str(tmp_path / f"{method}_path.csv")],
        )
    out = tmp_path / "compare.csv"
    result = runner.invoke(
        main,
        ["path", "compare", str(tmp_path / "qvalue_path.csv"), str(tmp_path / "bh_path.csv")]
        + ["--out", str(out)],
    )

    assert result.exit_code == 0, result.output
    assert "Largest absolute difference:" in result.output
    assert len(pd.read_csv(out)) == 2000


# diagnose


def test_diagnose(tmp_path):
    runner = CliRunner()
    battery = tmp_path / "battery.csv"
    _simulate(runner, battery)
    out = tmp_path / "diagnosis.csv"
    result = runner.invoke(
        main,
        ["diagnose", "--battery", str(battery), "--level", "0.25", "--level", "0.5"]
        + ["--out", str(out)],
    )

    assert result.exit_code == 0, result.output
    assert "anti-conservative" in result.output
    assert list(pd.read_csv(out, index_col=0).columns) == ["25%", "50%"]


# grouped


def test_grouped(tmp_path):
    spec = GroupSpec.wakefield([0.9, 0.5], [4, 10])
    battery = tmp_path / "grouped.csv"
    write_battery_csv(
        simulate_grouped_battery(spec, SeededRng(1), group_sizes=[500, 500]), battery
    )
    runner = CliRunner()
    for method in ("grouped-wlr", "grouped-bayes", "weighted-p"):
        result = runner.invoke(
            main,
            ["grouped", "--battery", str(battery), "--method", method]
            + ["--pi0", "0.9", "--k", "4", "--pi0", "0.5", "--k", "10"]
            + ["--out", str(tmp_path / f"{method}.csv")],
        )

        assert result.exit_code == 0, result.output
        assert f"{method}: " in result.output


def test_grouped_needs_group_labels(tmp_path):
    runner = CliRunner()
    battery = tmp_path / "battery.csv"
    _simulate(runner, battery)
    result = runner.invoke(
        main,
        ["grouped", "--battery", str(battery), "--pi0", "0.5", "--k", "10"]
        + ["--out", str(tmp_path / "grouped.csv")],
    )

    assert result.exit_code == 1
    assert "group" in result.output


# scenario


def test_scenario_run(tmp_path):
    config = tmp_path / "scenario.json"
    config.write_text(
        json.dumps(
            {
                "scenario_id": "cli",
                "model": {
                    "type": "two-groups",
                    "pi0": 0.5,
                    "m": 200,
                    "alternative": {"family": "wakefield", "k": 10},
                },
                "methods": ["bh", "oracle-bayes"],
                "replicates": 2,
            }
        )
    )
    out = tmp_path / "out"
    result = CliRunner().invoke(
        main, ["scenario", "run", "--config", str(config), "--out", str(out)]
    )

    assert result.exit_code == 0, result.output
    assert f"Results written to {out}" in result.output
    assert "oracle-bayes" in result.output
    assert (out / "summary.csv").exists()


def test_scenario_run_needs_a_single_source(tmp_path):
    config = tmp_path / "scenario.json"
    config.write_text("{}")
    runner = CliRunner()

    assert runner.invoke(main, ["scenario", "run"]).exit_code == 2
    assert (
        runner.invoke(
            main,
            ["scenario", "run", "--config", str(config)]
            + ["--preset", "path-convergence"],
        ).exit_code
        == 2
    )


def test_scenario_run_with_an_invalid_configuration(tmp_path):
    config = tmp_path / "scenario.json"
    config.write_text(json.dumps({"scenario_id": "x", "model": {}, "methods": ["bh"]}))
    result = CliRunner().invoke(main, ["scenario", "run", "--config", str(config)])

    assert result.exit_code == 1


def test_scenario_preset(tmp_path):
    out = tmp_path / "path-convergence.json"
    result = CliRunner().invoke(
        main, ["scenario", "preset", "path-convergence", "--out", str(out)]
    )

    assert result.exit_code == 0, result.output
    document = json.loads(out.read_text())
    assert document["scenario_id"] == "path-convergence"
    assert document["sweep"]["values"] == [200, 2000, 20000]


def test_scenario_preset_to_stdout():
    result = CliRunner().invoke(main, ["scenario", "preset", "grouped-convergence"])

    assert result.exit_code == 0, result.output
    assert json.loads(result.output)["methods"] == [
        "grouped-wlr",
        "grouped-bayes",
        "weighted-p",
    ]


# import-pvalues


def test_import_pvalues(tmp_path):
    pvalues = tmp_path / "pvalues.csv"
    pvalues.write_text("pvalue\n0.5\n0.001\n0.2\n")
    out = tmp_path / "battery.csv"
    result = CliRunner().invoke(main, ["import-pvalues", str(pvalues), "--out", str(out)])

    assert result.exit_code == 0, result.output
    assert "Wrote 3 tests" in result.output
    assert list(pd.read_csv(out)["pvalue"]) == [0.5, 0.001, 0.2]


def test_import_pvalues_reports_the_line_of_an_invalid_value(tmp_path):
    pvalues = tmp_path / "pvalues.csv"
    pvalues.write_text("0.5\n1.7\n")
    result = CliRunner().invoke(
        main, ["import-pvalues", str(pvalues), "--out", str(tmp_path / "battery.csv")]
    )

    assert result.exit_code == 1
    assert "line 2" in result.output
