import csv
import io
import json
from pathlib import Path

import pytest

from markov_chart_design.baseline import baseline_cost
from markov_chart_design.cli import OUTPUT_DIR_ENV, output_path, run_cli
from markov_chart_design.models import BaselineModel, ChartPolicy, Scenario
from markov_chart_design.optimizer import evaluate
from markov_chart_design.scenario import save_scenario, scenario_setup


@pytest.fixture
def scenario_file(toy_scenario: Scenario, tmp_path: Path) -> str:
    return str(save_scenario(toy_scenario, tmp_path / "toy.yaml"))


def _error(capsys: pytest.CaptureFixture[str]) -> dict[str, str]:
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


class TestScenarios:
    def test_lists_bundled(self, capsys: pytest.CaptureFixture[str]):
        assert run_cli(["scenarios"]) == 0
        assert capsys.readouterr().out.split() == ["ldl", "sens24"]

    def test_show(self, capsys: pytest.CaptureFixture[str]):
        assert run_cli(["scenarios", "--show", "sens24"]) == 0
        assert "name: sens24" in capsys.readouterr().out


def test_version(capsys: pytest.CaptureFixture[str]):
    assert run_cli(["--version"]) == 0
    assert "0.1.0" in capsys.readouterr().out


class TestEvaluate:
    def test_matches_library(
        self,
        scenario_file: str,
        toy_scenario: Scenario,
        toy_policy: ChartPolicy,
        capsys: pytest.CaptureFixture[str],
    ):
        code = run_cli(["evaluate", "--scenario", scenario_file, "--h", "0.4", "--k", "1.1"])
        report = json.loads(capsys.readouterr().out)
        expected = evaluate(toy_policy, scenario_setup(toy_scenario))

        assert code == 0
        assert report["scenario"] == "toy"
        assert report["policy"] == {"h": 0.4, "k": 1.1}
        assert report["expected_cost"] == expected.expected_cost
        assert report["objective"] == expected.objective
        assert "optimizer" not in report

    def test_weight_override(self, scenario_file: str, capsys: pytest.CaptureFixture[str]):
        run_cli(["evaluate", "--scenario", scenario_file, "--h", "0.4", "--k", "1.1", "--p", "1"])
        report = json.loads(capsys.readouterr().out)
        assert report["objective"] == report["expected_cost"]

    def test_negative_interval(self, scenario_file: str, capsys: pytest.CaptureFixture[str]):
        code = run_cli(["evaluate", "--scenario", scenario_file, "--h", "-1", "--k", "1"])
        assert code == 2
        assert _error(capsys)["error"] == "invalid-argument"

    def test_writes_to_output_directory(
        self,
        scenario_file: str,
        tmp_path: Path,
        monkeypatch: pytest.MonkeyPatch,
    ):
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "out"))
        code = run_cli(
            ["evaluate", "--scenario", scenario_file, "--h", "0.4", "--k", "1.1", "--output", "eval.json"]
        )
        assert code == 0
        assert json.loads((tmp_path / "out" / "eval.json").read_text())["scenario"] == "toy"


class TestErrors:
    def test_invalid_scenario_field(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]):
        path = tmp_path / "broken.yaml"
        path.write_text(
            "name: broken\n"
            "process: {sigma: 0, s: 0.2, delta: 2.0}\n"
            "repair: {alpha: 1.0, beta: 3.0}\n"
            "sampling: {variant: always}\n"
            "costs: {c_s: 1, c_o: 1, c_rb: 1, c_rs: 1}\n"
            "search: {h_min: 0.1, h_max: 2, k_min: 0, k_max: 4, h_init: 0.4, k_init: 1}\n"
        )

        assert run_cli(["evaluate", "--scenario", str(path), "--h", "1", "--k", "1"]) == 2
        error = _error(capsys)
        assert error["error"] == "invariant-violation"
        assert error["field"] == "process.sigma"

    def test_missing_scenario(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]):
        code = run_cli(["design", "--scenario", str(tmp_path / "absent.yaml")])
        assert code == 2
        assert _error(capsys)["error"] == "parse-error"

    def test_unknown_option(self, capsys: pytest.CaptureFixture[str]):
        assert run_cli(["scenarios", "--bogus"]) == 2

    def test_bad_rule(self, scenario_file: str, capsys: pytest.CaptureFixture[str]):
        code = run_cli(
            ["simulate", "--scenario", scenario_file, "--h", "0.4", "--k", "1.1", "--rule", "cusum"]
        )
        assert code == 2
        assert _error(capsys)["error"] == "invalid-argument"


class TestSweep:
    def test_csv_rows(self, scenario_file: str, capsys: pytest.CaptureFixture[str]):
        code = run_cli(
            ["sweep", "--scenario", scenario_file, "--h", "0.2:0.4:2", "--k", "0.5:1.5:3"]
        )
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))

        assert code == 0
        assert len(rows) == 6
        assert list(rows[0]) == ["h", "k", "expected_cost", "cost_std", "objective", "alarm_mass"]
        assert [float(row["k"]) for row in rows[:3]] == [0.5, 1.0, 1.5]

    def test_bad_range(self, scenario_file: str, capsys: pytest.CaptureFixture[str]):
        assert run_cli(["sweep", "--scenario", scenario_file, "--h", "1:2", "--k", "0:1:2"]) == 2


class TestSearchCommands:
    def test_design(self, scenario_file: str, capsys: pytest.CaptureFixture[str]):
        assert run_cli(["design", "--scenario", scenario_file]) == 0
        report = json.loads(capsys.readouterr().out)
        assert 0.1 <= report["policy"]["h"] <= 2.0
        assert report["optimizer"]["starts"] == 2

    def test_sensitivity_csv(self, scenario_file: str, capsys: pytest.CaptureFixture[str]):
        code = run_cli(
            [
                "sensitivity",
                "--scenario",
                scenario_file,
                "--parameter",
                "costs.c_s",
                "--values",
                "1:2:2",
                "--format",
                "csv",
            ]
        )
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))

        assert code == 0
        assert [float(row["costs.c_s"]) for row in rows] == [1.0, 2.0]

    def test_compare_weights(self, scenario_file: str, capsys: pytest.CaptureFixture[str]):
        code = run_cli(["compare-weights", "--scenario", scenario_file, "--p", "1", "--p", "0.5"])
        report = json.loads(capsys.readouterr().out)

        assert code == 0
        assert report["weights"] == [1.0, 0.5]
        assert len(report["optima"]) == 2
        assert report["expected_cost_change"][0] == 0.0


class TestSimulate:
    def test_compare_and_trace(
        self,
        scenario_file: str,
        tmp_path: Path,
        monkeypatch: pytest.MonkeyPatch,
        capsys: pytest.CaptureFixture[str],
    ):
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
        code = run_cli(
            [
                "simulate",
                "--scenario",
                scenario_file,
                "--h",
                "0.4",
                "--k",
                "1.1",
                "--intervals",
                "400",
                "--burn-in",
                "20",
                "--trace",
                "trace.csv",
                "--compare",
            ]
        )
        report = json.loads(capsys.readouterr().out)

        assert code == 0
        assert report["reports"][0]["intervals"] == 380
        assert "trace" not in report["reports"][0]
        assert set(report["divergence"][0]) == {"total_variation", "mean_cost_gap", "alarm_gap"}

        with (tmp_path / "trace.csv").open() as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 400
        assert rows[0]["interval"] == "0"

    def test_replicates(self, scenario_file: str, capsys: pytest.CaptureFixture[str]):
        code = run_cli(
            [
                "simulate",
                "--scenario",
                scenario_file,
                "--h",
                "0.4",
                "--k",
                "1.1",
                "--intervals",
                "300",
                "--replicates",
                "2",
                "--rule",
                "runs:2:0.5",
            ]
        )
        report = json.loads(capsys.readouterr().out)

        assert code == 0
        assert len(report["reports"]) == 2
        assert report["rule"] == {"variant": "runs", "count": 2, "warning_fraction": 0.5}


def test_baseline(capsys: pytest.CaptureFixture[str]):
    code = run_cli(
        [
            "baseline",
            "--sigma",
            "1",
            "--s",
            "0.2",
            "--delta-star",
            "1",
            "--h",
            "1",
            "--k",
            "2",
            "--c-s",
            "1",
            "--c-f",
            "3",
            "--c-o",
            "5",
            "--c-r",
            "7",
        ]
    )
    report = json.loads(capsys.readouterr().out)
    model = BaselineModel(
        sigma=1.0, s=0.2, delta_star=1.0, h=1.0, k=2.0, c_s=1.0, c_f=3.0, c_o=5.0, c_r=7.0
    )

    assert code == 0
    assert report["expected_cost"] == pytest.approx(baseline_cost(model), rel=1e-12)
    assert len(report["stationary"]) == 4


def test_dump_chain(scenario_file: str, tmp_path: Path, capsys: pytest.CaptureFixture[str]):
    target = tmp_path / "chain"
    code = run_cli(
        ["dump-chain", "--scenario", scenario_file, "--h", "0.4", "--k", "1.1", "--output", str(target)]
    )

    assert code == 0
    assert capsys.readouterr().out.split() == [
        str(target / "transition.csv"),
        str(target / "repair_start.csv"),
        str(target / "stationary.csv"),
    ]
    assert (target / "stationary.csv").exists()


class TestOutputPath:
    def test_bare_name_goes_to_directory(self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch):
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
        assert output_path(Path("report.json")) == tmp_path / "report.json"
        assert output_path(Path("nested/report.json")) == Path("nested/report.json")

    def test_unset(self, monkeypatch: pytest.MonkeyPatch):
        monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
        assert output_path(Path("report.json")) == Path("report.json")


@pytest.mark.parametrize(
    ("name", "h", "k"), [("ldl.scenario", "56.57", "0.143"), ("sens24", "0.38", "1.14")]
)
class TestBundledScenarios:
    def test_show(self, name: str, h: str, k: str, capsys: pytest.CaptureFixture[str]):
        assert run_cli(["scenarios", "--show", name]) == 0
        assert f"name: {Path(name).stem}" in capsys.readouterr().out

    def test_evaluate(self, name: str, h: str, k: str, capsys: pytest.CaptureFixture[str]):
        assert run_cli(["evaluate", "--scenario", name, "--h", h, "--k", k]) == 0
        report = json.loads(capsys.readouterr().out)

        assert report["scenario"] == Path(name).stem
        assert report["policy"] == {"h": float(h), "k": float(k)}
        assert report["expected_cost"] > 0
        assert 0 < report["alarm_mass"] < 1

    def test_sweep(self, name: str, h: str, k: str, capsys: pytest.CaptureFixture[str]):
        h_value, k_value = float(h), float(k)
        code = run_cli(
            [
                "sweep",
                "--scenario",
                name,
                "--h",
                f"{h_value / 2}:{h_value}:2",
                "--k",
                f"{k_value / 2}:{k_value}:2",
            ]
        )
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))

        assert code == 0
        assert len(rows) == 4

    def test_simulate(self, name: str, h: str, k: str, capsys: pytest.CaptureFixture[str]):
        code = run_cli(
            [
                "simulate",
                "--scenario",
                name,
                "--h",
                h,
                "--k",
                k,
                "--intervals",
                "300",
                "--burn-in",
                "20",
                "--compare",
            ]
        )
        report = json.loads(capsys.readouterr().out)

        assert code == 0
        assert report["reports"][0]["intervals"] == 280
        assert 0 <= report["divergence"][0]["total_variation"] <= 1

    def test_dump_chain(
        self, name: str, h: str, k: str, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ):
        target = tmp_path / "chain"
        code = run_cli(
            ["dump-chain", "--scenario", name, "--h", h, "--k", k, "--output", str(target)]
        )

        assert code == 0
        assert len(capsys.readouterr().out.split()) == 3
        with (target / "stationary.csv").open() as handle:
            rows = list(csv.reader(handle))
        assert sum(float(row[1]) for row in rows[1:]) == pytest.approx(1.0, abs=1e-9)
