"""
Search for the cost-optimal sampling interval h and control limit k.

Each evaluation builds the chain, solves for its stationary distribution and
computes G. The search is a multi-start Nelder-Mead in box-scaled coordinates.
"""

import logging
import math
from collections.abc import Iterable, Sequence
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError
from scipy import optimize
from scipy.stats import qmc

from markov_chart_design.chain import build_artifacts
from markov_chart_design.cost import design_point
from markov_chart_design.errors import (
    InvalidArgumentError,
    NumericFailureError,
    OptimizerFailureError,
)
from markov_chart_design.helpers import _capture_sentry_message, parallel_map
from markov_chart_design.models import (
    ChartPolicy,
    ChartSetup,
    DesignPoint,
    OptimizationResult,
    SearchBox,
)

logger = logging.getLogger(__name__)

SIMPLEX_XATOL = 1e-4
SIMPLEX_FATOL = 1e-9
MAX_EVALUATIONS_PER_START = 500

SENSITIVITY_COMPONENTS = ("process", "repair", "sampling", "costs")

Trend = Literal["constant", "nondecreasing", "nonincreasing", "mixed"]


def evaluate(policy: ChartPolicy, setup: ChartSetup) -> DesignPoint:
    artifacts = build_artifacts(policy, setup)
    design = design_point(artifacts, setup.costs)
    logger.debug(
        "h=%.6g k=%.6g E=%.6g sd=%.6g G=%.6g",
        policy.h,
        policy.k,
        design.expected_cost,
        design.cost_std,
        design.objective,
    )
    return design


class _StartOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    design: DesignPoint | None
    evaluations: int
    converged: bool
    message: str


def _to_policy(point: np.ndarray, box: SearchBox) -> ChartPolicy:
    unit = np.clip(point, 0.0, 1.0)
    return ChartPolicy(
        h=box.h_min + float(unit[0]) * (box.h_max - box.h_min),
        k=box.k_min + float(unit[1]) * (box.k_max - box.k_min),
    )


def start_points(box: SearchBox) -> np.ndarray:
    """The initial guess followed by Halton points, all in unit-box coordinates."""
    initial = np.array(
        [
            (box.h_init - box.h_min) / (box.h_max - box.h_min),
            (box.k_init - box.k_min) / (box.k_max - box.k_min),
        ]
    )
    if box.restarts == 1:
        return initial[None, :]

    # skip the origin of the unscrambled sequence, it sits on a box corner
    halton = qmc.Halton(d=2, scramble=False).random(box.restarts)[1:]
    return np.vstack([initial, halton])


def _run_start(setup: ChartSetup, box: SearchBox, start: np.ndarray) -> _StartOutcome:
    def objective(point: np.ndarray) -> float:
        return evaluate(_to_policy(point, box), setup).objective

    try:
        result = optimize.minimize(
            objective,
            start,
            method="Nelder-Mead",
            bounds=[(0.0, 1.0), (0.0, 1.0)],
            options={
                "xatol": SIMPLEX_XATOL,
                "fatol": SIMPLEX_FATOL,
                "maxfev": MAX_EVALUATIONS_PER_START,
            },
        )
    except NumericFailureError as exc:
        return _StartOutcome(design=None, evaluations=0, converged=False, message=str(exc))

    design = evaluate(_to_policy(result.x, box), setup)
    return _StartOutcome(
        design=design,
        evaluations=int(result.nfev) + 1,
        converged=bool(result.success),
        message=str(result.message),
    )


def _design_key(design: DesignPoint) -> tuple[float, float, float]:
    return (design.objective, design.policy.h, design.policy.k)


def minimize(
    setup: ChartSetup, box: SearchBox, workers: int = 1
) -> OptimizationResult:
    starts = start_points(box)
    outcomes = parallel_map(
        lambda start: _run_start(setup, box, start), list(starts), workers
    )

    diagnostics = [
        f"start {index}: {outcome.message}" for index, outcome in enumerate(outcomes)
    ]
    finished = [
        (outcome.design, outcome) for outcome in outcomes if outcome.design is not None
    ]
    if not finished:
        raise OptimizerFailureError("every optimiser start failed", diagnostics)

    not_converged = sum(1 for _, outcome in finished if not outcome.converged)
    if not_converged:
        logger.warning("%d of %d starts did not converge", not_converged, len(outcomes))
        _capture_sentry_message(
            "optimiser starts did not converge",
            level="warning",
            failed=not_converged,
            starts=len(outcomes),
        )

    best, best_outcome = min(finished, key=lambda pair: _design_key(pair[0]))
    evaluations = sum(outcome.evaluations for outcome in outcomes)

    logger.info(
        "optimum h=%.6g k=%.6g G=%.6g after %d evaluations",
        best.policy.h,
        best.policy.k,
        best.objective,
        evaluations,
    )
    return OptimizationResult(
        design=best,
        evaluations=evaluations,
        converged=best_outcome.converged,
        starts=len(outcomes),
    )


def sweep(
    setup: ChartSetup,
    h_grid: Iterable[float],
    k_grid: Iterable[float],
    workers: int = 1,
) -> list[DesignPoint]:
    """Evaluate every (h, k) pair, h-major."""
    hs = list(h_grid)
    ks = list(k_grid)
    if not hs or not ks:
        raise InvalidArgumentError("sweep grids must be non-empty")

    policies = [ChartPolicy(h=h, k=k) for h in hs for k in ks]
    return parallel_map(lambda policy: evaluate(policy, setup), policies, workers)


class SensitivityRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    optimization: OptimizationResult


class SensitivityReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    parameter: str
    rows: list[SensitivityRow]
    trends: dict[str, Trend]


def classify_trend(values: Sequence[float], rel_tol: float = 1e-9) -> Trend:
    steps = np.diff(np.asarray(values, dtype=float))
    scale = max((abs(value) for value in values), default=0.0)
    tolerance = rel_tol * max(scale, 1.0)

    rising = bool(np.all(steps >= -tolerance))
    falling = bool(np.all(steps <= tolerance))
    if rising and falling:
        return "constant"

    if rising:
        return "nondecreasing"

    if falling:
        return "nonincreasing"

    return "mixed"


def with_parameter(setup: ChartSetup, parameter: str, value: float) -> ChartSetup:
    """Copy of `setup` with a dotted scalar field such as `costs.c_o` replaced."""
    component, _, field = parameter.partition(".")
    if component not in SENSITIVITY_COMPONENTS or not field:
        raise InvalidArgumentError(
            f"unknown parameter {parameter!r}, expected one of "
            f"{', '.join(SENSITIVITY_COMPONENTS)} followed by a field name"
        )

    current = getattr(setup, component)
    if field == "variant" or field not in type(current).model_fields:
        raise InvalidArgumentError(f"unknown parameter {parameter!r}")

    if not isinstance(getattr(current, field), int | float):
        raise InvalidArgumentError(f"parameter {parameter!r} is not a scalar field")

    try:
        updated = type(current).model_validate(current.model_dump() | {field: value})
    except ValidationError as exc:
        raise InvalidArgumentError(f"{parameter}={value} is invalid: {exc}") from exc

    return setup.model_copy(update={component: updated})


def sensitivity(
    setup: ChartSetup,
    box: SearchBox,
    parameter: str,
    values: Sequence[float],
    workers: int = 1,
) -> SensitivityReport:
    """Re-optimise for each value of one parameter and report the direction of every output."""
    if not values:
        raise InvalidArgumentError("sensitivity needs at least one value")

    variants = [with_parameter(setup, parameter, value) for value in values]
    rows = [
        SensitivityRow(value=value, optimization=minimize(variant, box, workers))
        for value, variant in zip(values, variants, strict=True)
    ]

    designs = [row.optimization.design for row in rows]
    trends: dict[str, Trend] = {
        "h": classify_trend([design.policy.h for design in designs]),
        "k": classify_trend([design.policy.k for design in designs]),
        "expected_cost": classify_trend([design.expected_cost for design in designs]),
        "cost_std": classify_trend([design.cost_std for design in designs]),
        "objective": classify_trend([design.objective for design in designs]),
    }
    return SensitivityReport(parameter=parameter, rows=rows, trends=trends)


class WeightComparison(BaseModel):
    """
    Optima under several weights `p`, each change measured against the first weight.
    """

    model_config = ConfigDict(frozen=True)

    weights: list[float]
    optima: list[OptimizationResult]
    expected_cost_change: list[float]
    cost_std_change: list[float]


def compare_weights(
    setup: ChartSetup,
    box: SearchBox,
    weights: Sequence[float],
    workers: int = 1,
) -> WeightComparison:
    """Re-optimise for each weight, e.g. `[1.0, 0.9]` to see what a lower cost spread costs on average."""
    if not weights:
        raise InvalidArgumentError("compare_weights needs at least one weight")

    report = sensitivity(setup, box, "costs.p", weights, workers)
    designs = [row.optimization.design for row in report.rows]
    reference = designs[0]
    return WeightComparison(
        weights=list(weights),
        optima=[row.optimization for row in report.rows],
        expected_cost_change=[d.expected_cost - reference.expected_cost for d in designs],
        cost_std_change=[d.cost_std - reference.cost_std for d in designs],
    )


def linspace_spec(spec: str) -> list[float]:
    """Parse `start:stop:count` into `count` evenly spaced values, both ends included."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise InvalidArgumentError(f"grid spec must be start:stop:count, got {spec!r}")

    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise InvalidArgumentError(f"grid spec {spec!r} is not numeric") from exc

    if count < 1 or not (math.isfinite(start) and math.isfinite(stop)):
        raise InvalidArgumentError(f"grid spec {spec!r} needs a positive count")

    return np.linspace(start, stop, count).tolist()
