"""
Scenario files: YAML documents validated by the `Scenario` model.

Bundled scenarios live next to this module and can be loaded by bare name,
e.g. `load_scenario("ldl")`.
"""

import logging
from pathlib import Path

import yaml
from pydantic import ValidationError

from markov_chart_design.chain import resolve_grid
from markov_chart_design.errors import ScenarioError
from markov_chart_design.models import ChartSetup, Scenario

logger = logging.getLogger(__name__)

BUNDLED_DIRECTORY = Path(__file__).parent / "scenarios"
SUFFIX = ".yaml"
NAME_SUFFIXES = ("", ".scenario")


def list_bundled() -> list[str]:
    return sorted(path.stem for path in BUNDLED_DIRECTORY.glob(f"*{SUFFIX}"))


def resolve_scenario_path(name_or_path: str | Path) -> Path:
    """
    A bundled scenario for a bare name such as `ldl` or `ldl.scenario`, otherwise
    the path as given.
    """
    candidate = Path(name_or_path)
    bundled = BUNDLED_DIRECTORY / f"{candidate.stem}{SUFFIX}"
    if not candidate.exists() and candidate.suffix in NAME_SUFFIXES and bundled.exists():
        return bundled

    return candidate


def _field_path(location: tuple[int | str, ...]) -> str:
    return ".".join(str(part) for part in location)


def _scenario_error(exc: ValidationError, source: str) -> ScenarioError:
    first = exc.errors()[0]
    path = _field_path(first["loc"])
    category = "unknown-field" if first["type"] == "extra_forbidden" else "invariant-violation"
    return ScenarioError(f"{source}: {path}: {first['msg']}", category, path or None)


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{source}: {exc}", "parse-error") from exc

    if not isinstance(document, dict):
        raise ScenarioError(f"{source}: expected a mapping at the top level", "parse-error")

    try:
        return Scenario.model_validate(document)
    except ValidationError as exc:
        raise _scenario_error(exc, source) from exc


def load_scenario(name_or_path: str | Path) -> Scenario:
    path = resolve_scenario_path(name_or_path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}", "parse-error") from exc

    scenario = parse_scenario(text, str(path))
    logger.debug("loaded scenario %s from %s", scenario.name, path)
    return scenario


def dump_scenario(scenario: Scenario) -> str:
    """YAML text that `parse_scenario` turns back into an equal `Scenario`."""
    header = (
        f"# units: time in {scenario.units.time}, "
        f"distances in {scenario.units.measurement}, "
        f"costs in {scenario.units.currency}\n"
    )
    body = yaml.safe_dump(
        scenario.model_dump(mode="json", exclude_none=True), sort_keys=False
    )
    return header + body


def save_scenario(scenario: Scenario, path: Path) -> Path:
    path.write_text(dump_scenario(scenario))
    return path


def scenario_setup(scenario: Scenario) -> ChartSetup:
    """The chart setup of a scenario, sizing the grid from the search box when needed."""
    grid = resolve_grid(scenario.grid, scenario.process.shift_law, scenario.search.h_max)
    return ChartSetup(
        process=scenario.process,
        repair=scenario.repair,
        sampling=scenario.sampling,
        costs=scenario.costs,
        grid=grid,
    )
