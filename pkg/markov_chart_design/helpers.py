"""Helper functions for reporting results and forwarding anomalies."""

import csv
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import TextIO, TypeVar

from markov_chart_design.models import DesignPoint, OptimizationResult, TraceRow

DESIGN_COLUMNS = ["h", "k", "expected_cost", "cost_std", "objective", "alarm_mass"]

T = TypeVar("T")
R = TypeVar("R")


def _capture_sentry_message(
    message: str, level: str = "info", **extras: object
) -> None:
    """Capture a message to Sentry if available."""
    try:
        import sentry_sdk  # type: ignore[import-not-found]

        sentry_sdk.capture_message(message, level=level, extras=extras)
    except ImportError:
        pass


def parallel_map(fn: Callable[[T], R], items: Sequence[T], workers: int) -> list[R]:
    """Order-preserving map, threaded when more than one worker is requested."""
    if workers <= 1:
        return [fn(item) for item in items]

    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))


def design_row(design: DesignPoint) -> dict[str, float]:
    return {
        "h": design.policy.h,
        "k": design.policy.k,
        "expected_cost": design.expected_cost,
        "cost_std": design.cost_std,
        "objective": design.objective,
        "alarm_mass": design.alarm_mass,
    }


def write_design_csv(
    designs: Iterable[DesignPoint],
    stream: TextIO,
    extra_columns: dict[str, list[float]] | None = None,
) -> None:
    """
    Write one row per design point with a fixed column order.

    `extra_columns` are prepended, e.g. the varied parameter of a sensitivity run.
    """
    extra_columns = extra_columns or {}
    writer = csv.DictWriter(stream, fieldnames=[*extra_columns, *DESIGN_COLUMNS])
    writer.writeheader()
    for index, design in enumerate(designs):
        prefix = {name: values[index] for name, values in extra_columns.items()}
        writer.writerow(prefix | design_row(design))


def design_report(
    scenario: str,
    design: DesignPoint,
    optimization: OptimizationResult | None = None,
) -> dict[str, object]:
    """
    JSON-ready report of a single design.

    `optimizer` is omitted for plain evaluations.
    """
    report: dict[str, object] = {
        "scenario": scenario,
        "policy": {"h": design.policy.h, "k": design.policy.k},
        "expected_cost": design.expected_cost,
        "cost_std": design.cost_std,
        "objective": design.objective,
        "alarm_mass": design.alarm_mass,
    }
    if optimization is not None:
        report["optimizer"] = {
            "evaluations": optimization.evaluations,
            "converged": optimization.converged,
            "starts": optimization.starts,
        }

    return report


def write_trace_csv(rows: Iterable[TraceRow], stream: TextIO) -> None:
    writer = csv.DictWriter(stream, fieldnames=list(TraceRow.model_fields))
    writer.writeheader()
    for row in rows:
        writer.writerow(row.model_dump())
