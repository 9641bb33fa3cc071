"""
Per-unit-time cost of a chart policy under the stationary distribution.

Each recurrent state i carries the cost C_i of the sampling at that state and of
the interval that follows it:

    C_i = c_s T_h(i) / h + [true alarm] (c_rb + c_rs D'(i)^2) / h + c_o A^2_i

E(C) and sd(C) are the mean and standard deviation of C under the stationary
distribution. Repair is charged to the interval of the true alarm.
"""

import logging
import math

import numpy as np

from markov_chart_design.distributions import expected_sq_distance_vector
from markov_chart_design.helpers import _capture_sentry_message
from markov_chart_design.models import (
    ChainArtifacts,
    ChartPolicy,
    CostModel,
    DesignPoint,
    DiscretisationGrid,
    ShiftLaw,
)

logger = logging.getLogger(__name__)


def a_squared(
    repair_start: np.ndarray,
    law: ShiftLaw,
    policy: ChartPolicy,
    grid: DiscretisationGrid,
) -> np.ndarray:
    """A^2_i: expected squared distance over the next interval, averaged over M_i."""
    return repair_start @ expected_sq_distance_vector(law, grid.distances(), policy.h)


def state_costs(artifacts: ChainArtifacts, costs: CostModel) -> np.ndarray:
    grid = artifacts.grid
    h = artifacts.policy.h
    repair = np.zeros(artifacts.stationary.size)
    repair[grid.top :] = costs.c_rb + costs.c_rs * grid.distances()[1:] ** 2

    return (
        costs.c_s * artifacts.sampling / h
        + repair / h
        + costs.c_o * artifacts.a_sq
    )


def expected_cost(artifacts: ChainArtifacts, costs: CostModel) -> float:
    return float(state_costs(artifacts, costs) @ artifacts.stationary)


def cost_std(artifacts: ChainArtifacts, costs: CostModel) -> float:
    """Standard deviation of the per-state cost under the stationary distribution."""
    per_state = state_costs(artifacts, costs)
    mean = per_state @ artifacts.stationary
    variance = float(per_state**2 @ artifacts.stationary - mean**2)
    if variance < 0:
        logger.warning("negative cost variance %.3g clamped to 0", variance)
        _capture_sentry_message(
            "negative cost variance clamped",
            level="warning",
            variance=variance,
            h=artifacts.policy.h,
            k=artifacts.policy.k,
        )
        return 0.0

    return math.sqrt(variance)


def alarm_mass(artifacts: ChainArtifacts) -> float:
    """Stationary probability of the true alarm states."""
    return float(artifacts.stationary[artifacts.grid.top :].sum())


def objective(expected: float, std: float, p: float) -> float:
    return p * expected + (1 - p) * std


def design_point(artifacts: ChainArtifacts, costs: CostModel) -> DesignPoint:
    expected = expected_cost(artifacts, costs)
    std = cost_std(artifacts, costs)
    return DesignPoint(
        policy=artifacts.policy,
        expected_cost=expected,
        cost_std=std,
        objective=objective(expected, std, costs.p),
        alarm_mass=alarm_mass(artifacts),
    )
