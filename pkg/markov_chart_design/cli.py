"""
Command line interface: `markov-chart <command> --scenario ldl ...`.

Reports go to stdout as JSON (CSV for tables) unless `--output` is given. A bare
output file name is placed in `MARKOV_CHART_OUTPUT_DIR` when that is set.
Library errors exit with status 2 and a JSON object on stderr.
"""

import io
import json
import logging
import os
import sys
from collections.abc import Sequence
from pathlib import Path

import click
import numpy as np
from pydantic import ValidationError

from markov_chart_design import __version__
from markov_chart_design.baseline import baseline_report
from markov_chart_design.chain import build_artifacts, dump_chain_csv
from markov_chart_design.errors import MarkovChartError
from markov_chart_design.helpers import (
    design_report,
    write_design_csv,
    write_trace_csv,
)
from markov_chart_design.models import (
    BaselineModel,
    ChartPolicy,
    ChartSetup,
    Scenario,
    SimConfig,
)
from markov_chart_design.optimizer import (
    compare_weights,
    evaluate,
    linspace_spec,
    minimize,
    sensitivity,
    sweep,
    with_parameter,
)
from markov_chart_design.scenario import (
    dump_scenario,
    list_bundled,
    load_scenario,
    scenario_setup,
)
from markov_chart_design.simulator import (
    compare_to_analytic,
    replicate,
    rule_from_spec,
    simulate,
)

OUTPUT_DIR_ENV = "MARKOV_CHART_OUTPUT_DIR"
LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]

scenario_option = click.option(
    "--scenario",
    "scenario_name",
    required=True,
    help="Bundled scenario name (see `scenarios`) or path to a YAML file.",
)
weight_option = click.option(
    "--p", "weight", type=click.FloatRange(0, 1), default=None, help="Override costs.p."
)
workers_option = click.option("--workers", type=click.IntRange(min=1), default=1)
output_option = click.option(
    "--output", type=click.Path(path_type=Path), default=None, help="Write here instead of stdout."
)
h_option = click.option("--h", "h", type=float, required=True, help="Time between samplings.")
k_option = click.option("--k", "k", type=float, required=True, help="Control limit.")


def output_path(path: Path) -> Path:
    directory = os.environ.get(OUTPUT_DIR_ENV)
    if directory and path.parent == Path("."):
        return Path(directory) / path

    return path


def _emit(text: str, output: Path | None) -> None:
    if output is None:
        click.echo(text, nl=not text.endswith("\n"))
        return

    target = output_path(output)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text)
    click.echo(f"wrote {target}", err=True)


def _emit_json(payload: object, output: Path | None) -> None:
    _emit(json.dumps(payload, indent=2) + "\n", output)


def _load_setup(
    scenario_name: str, weight: float | None
) -> tuple[Scenario, ChartSetup]:
    scenario = load_scenario(scenario_name)
    setup = scenario_setup(scenario)
    if weight is not None:
        setup = with_parameter(setup, "costs.p", weight)

    return scenario, setup


@click.group()
@click.version_option(__version__, prog_name="markov-chart")
@click.option(
    "--log-level",
    type=click.Choice(LOG_LEVELS, case_sensitive=False),
    envvar="LOG_LEVEL",
    default="WARNING",
    show_default=True,
)
def cli(log_level: str) -> None:
    """Design cost-optimal control charts for drifting, imperfectly repaired processes."""
    logging.basicConfig(
        level=log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@cli.command()
@scenario_option
@weight_option
@workers_option
@output_option
def design(scenario_name: str, weight: float | None, workers: int, output: Path | None) -> None:
    """Find the (h, k) minimising G within the scenario's search box."""
    scenario, setup = _load_setup(scenario_name, weight)
    result = minimize(setup, scenario.search, workers)
    _emit_json(design_report(scenario.name, result.design, result), output)


@cli.command(name="evaluate")
@scenario_option
@h_option
@k_option
@weight_option
@output_option
def evaluate_command(
    scenario_name: str, h: float, k: float, weight: float | None, output: Path | None
) -> None:
    """E(C), sd(C) and G of a single policy."""
    scenario, setup = _load_setup(scenario_name, weight)
    point = evaluate(ChartPolicy(h=h, k=k), setup)
    _emit_json(design_report(scenario.name, point), output)


@cli.command(name="sweep")
@scenario_option
@click.option("--h", "h_spec", required=True, help="start:stop:count")
@click.option("--k", "k_spec", required=True, help="start:stop:count")
@weight_option
@workers_option
@output_option
def sweep_command(
    scenario_name: str,
    h_spec: str,
    k_spec: str,
    weight: float | None,
    workers: int,
    output: Path | None,
) -> None:
    """Evaluate every (h, k) on a grid and write one CSV row per point, h-major."""
    _, setup = _load_setup(scenario_name, weight)
    designs = sweep(setup, linspace_spec(h_spec), linspace_spec(k_spec), workers)

    buffer = io.StringIO()
    write_design_csv(designs, buffer)
    _emit(buffer.getvalue(), output)


@cli.command(name="sensitivity")
@scenario_option
@click.option("--parameter", required=True, help="Dotted field, e.g. costs.c_o or sampling.z.")
@click.option("--values", "values_spec", required=True, help="start:stop:count")
@click.option("--format", "output_format", type=click.Choice(["json", "csv"]), default="json")
@weight_option
@workers_option
@output_option
def sensitivity_command(
    scenario_name: str,
    parameter: str,
    values_spec: str,
    output_format: str,
    weight: float | None,
    workers: int,
    output: Path | None,
) -> None:
    """Re-optimise for each value of one parameter."""
    scenario, setup = _load_setup(scenario_name, weight)
    values = linspace_spec(values_spec)
    report = sensitivity(setup, scenario.search, parameter, values, workers)

    if output_format == "csv":
        buffer = io.StringIO()
        write_design_csv(
            [row.optimization.design for row in report.rows],
            buffer,
            extra_columns={parameter: [row.value for row in report.rows]},
        )
        _emit(buffer.getvalue(), output)
        return

    _emit_json(
        {
            "parameter": parameter,
            "rows": [
                {"value": row.value}
                | design_report(scenario.name, row.optimization.design, row.optimization)
                for row in report.rows
            ],
            "trends": report.trends,
        },
        output,
    )


@cli.command(name="compare-weights")
@scenario_option
@click.option("--p", "weights", type=click.FloatRange(0, 1), multiple=True, required=True)
@workers_option
@output_option
def compare_weights_command(
    scenario_name: str, weights: tuple[float, ...], workers: int, output: Path | None
) -> None:
    """Optima under several weights p, with cost changes relative to the first."""
    scenario, setup = _load_setup(scenario_name, None)
    comparison = compare_weights(setup, scenario.search, list(weights), workers)
    _emit_json(
        {
            "scenario": scenario.name,
            "weights": comparison.weights,
            "optima": [
                design_report(scenario.name, optimum.design, optimum)
                for optimum in comparison.optima
            ],
            "expected_cost_change": comparison.expected_cost_change,
            "cost_std_change": comparison.cost_std_change,
        },
        output,
    )


@cli.command(name="simulate")
@scenario_option
@h_option
@k_option
@click.option("--intervals", type=click.IntRange(min=1), default=50_000, show_default=True)
@click.option("--burn-in", type=click.IntRange(min=0), default=100, show_default=True)
@click.option("--thinning", type=click.IntRange(min=1), default=30, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--rule", default="limit-only", show_default=True, help="limit-only or runs:COUNT:FRACTION")
@click.option("--continuous-sampling", is_flag=True, help="Use the continuous-distance compliance form.")
@click.option("--replicates", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--trace", type=click.Path(path_type=Path), default=None, help="Per-interval CSV trace.")
@click.option("--compare", is_flag=True, help="Add the gap to the analytic chain.")
@weight_option
@workers_option
@output_option
def simulate_command(
    scenario_name: str,
    h: float,
    k: float,
    intervals: int,
    burn_in: int,
    thinning: int,
    seed: int,
    rule: str,
    continuous_sampling: bool,
    replicates: int,
    trace: Path | None,
    compare: bool,
    weight: float | None,
    workers: int,
    output: Path | None,
) -> None:
    """Monte Carlo run of the chart; `--compare` checks it against the chain."""
    scenario, setup = _load_setup(scenario_name, weight)
    policy = ChartPolicy(h=h, k=k)
    config = SimConfig(
        intervals=intervals,
        burn_in=burn_in,
        thinning=thinning,
        seed=seed,
        rule=rule_from_spec(rule),
        continuous_sampling=continuous_sampling,
        record_trace=trace is not None,
    )

    reports = (
        [simulate(setup, policy, config)]
        if replicates == 1
        else replicate(setup, policy, config, replicates, workers)
    )

    if trace is not None:
        target = output_path(trace)
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", newline="") as handle:
            write_trace_csv(reports[0].trace or [], handle)

    payload: dict[str, object] = {
        "scenario": scenario.name,
        "policy": {"h": h, "k": k},
        "rule": config.rule.model_dump(),
        "reports": [report.model_dump(exclude={"trace"}) for report in reports],
        "mean_cost": float(np.mean([report.mean_cost for report in reports])),
    }
    if compare:
        artifacts = build_artifacts(policy, setup)
        payload["divergence"] = [
            compare_to_analytic(report, artifacts, setup.costs).model_dump()
            for report in reports
        ]

    _emit_json(payload, output)


@cli.command(name="baseline")
@click.option("--mu0", type=float, default=0.0)
@click.option("--sigma", type=float, required=True)
@click.option("--s", "s", type=float, required=True, help="Shifts per unit time.")
@click.option("--delta-star", type=float, required=True, help="Fixed shift size.")
@h_option
@k_option
@click.option("--c-s", type=float, default=0.0, help="Sampling cost.")
@click.option("--c-f", type=float, default=0.0, help="False alarm cost.")
@click.option("--c-o", type=float, default=0.0, help="Out-of-control cost per unit time.")
@click.option("--c-r", type=float, default=0.0, help="Repair cost.")
@output_option
def baseline_command(output: Path | None, **fields: float) -> None:
    """Four-state chart with a fixed shift size and perfect repair."""
    report = baseline_report(BaselineModel(**fields))
    _emit_json(report.model_dump(), output)


@cli.command(name="dump-chain")
@scenario_option
@h_option
@k_option
@click.option(
    "--output", type=click.Path(path_type=Path), default=Path("chain"), show_default=True
)
def dump_chain_command(scenario_name: str, h: float, k: float, output: Path) -> None:
    """Write the transition matrix, M and the stationary distribution as CSV."""
    _, setup = _load_setup(scenario_name, None)
    artifacts = build_artifacts(ChartPolicy(h=h, k=k), setup)
    for path in dump_chain_csv(artifacts, output_path(output)):
        click.echo(str(path))


@cli.command(name="scenarios")
@click.option("--show", default=None, help="Print a bundled scenario as YAML.")
def scenarios_command(show: str | None) -> None:
    """List bundled scenarios."""
    if show is not None:
        click.echo(dump_scenario(load_scenario(show)), nl=False)
        return

    for name in list_bundled():
        click.echo(name)


def _report_error(category: str, message: str, **extra: object) -> int:
    click.echo(json.dumps({"error": category, "message": message} | extra), err=True)
    return 2


def run_cli(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and return the exit code instead of exiting."""
    try:
        result = cli.main(
            args=list(argv) if argv is not None else None,
            prog_name="markov-chart",
            standalone_mode=False,
        )
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.Abort:
        return 1
    except MarkovChartError as exc:
        field_path = getattr(exc, "field_path", None)
        extra = {"field": field_path} if field_path else {}
        return _report_error(exc.category, str(exc), **extra)
    except ValidationError as exc:
        return _report_error("invalid-argument", str(exc))

    return result if isinstance(result, int) else 0


def main() -> None:
    sys.exit(run_cli())

