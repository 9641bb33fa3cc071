"""
Four-state chart with a fixed shift size, perfect repair and guaranteed sampling.

States: in-control, out-of-control, false alarm, true alarm.
"""

import math

import numpy as np
from scipy import stats

from markov_chart_design.chain import solve_stationary
from markov_chart_design.errors import InvalidArgumentError
from markov_chart_design.models import BaselineModel, BaselineReport

SERIES_THRESHOLD = 1e-4


def fraction_b(h: float, s: float) -> float:
    """
    Expected fraction of an interval spent shifted but undetected, given a shift
    occurred within it: (hs e^hs - e^hs + 1) / (hs (e^hs - 1)).
    """
    if not (h > 0 and s > 0):
        raise InvalidArgumentError(f"h and s must be positive, got h={h}, s={s}")

    x = h * s
    if x < SERIES_THRESHOLD:
        return 0.5 + x / 12 - x**3 / 720

    # algebraically equal to the closed form, without overflow for large hs
    return 1 / -math.expm1(-x) - 1 / x


def baseline_transition(model: BaselineModel) -> np.ndarray:
    shifted = -math.expm1(-model.s * model.h)
    quiet_target = stats.norm.cdf(model.k / model.sigma)
    quiet_shifted = stats.norm.cdf((model.k - model.delta_star) / model.sigma)

    from_target = [
        (1 - shifted) * quiet_target,
        shifted * quiet_shifted,
        (1 - shifted) * (1 - quiet_target),
        shifted * (1 - quiet_shifted),
    ]
    from_shifted = [0.0, quiet_shifted, 0.0, 1 - quiet_shifted]
    return np.array([from_target, from_shifted, from_target, from_target])


def baseline_cost(model: BaselineModel, distribution: np.ndarray | None = None) -> float:
    """Expected cost per unit time; `distribution` defaults to the chain's stationary vector."""
    if distribution is None:
        distribution = solve_stationary(baseline_transition(model))

    _, p2, p3, p4 = distribution
    undetected = fraction_b(model.h, model.s)
    return float(
        (model.c_s + p3 * model.c_f + p4 * model.c_r) / model.h
        + p2 * model.c_o
        + p4 * model.c_o * undetected
    )


def baseline_report(model: BaselineModel) -> BaselineReport:
    distribution = solve_stationary(baseline_transition(model))
    return BaselineReport(
        stationary=distribution.tolist(),
        expected_cost=baseline_cost(model, distribution),
        fraction_b=fraction_b(model.h, model.s),
    )
