"""
Probability laws of the monitored process.

Shift sizes follow a Poisson-Erlang mixture (compound Poisson with exponential
jumps), repair leaves a Beta distributed proportion of the distance, and the
probability of a successful sampling is either constant, logistic in h, or
Beta-based in h and the current distance.
"""

import math
from collections.abc import Callable

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import integrate, optimize, special, stats

from markov_chart_design.errors import InvalidArgumentError, NumericFailureError
from markov_chart_design.models import (
    AlwaysSampling,
    BetaStateSampling,
    DiscretisationGrid,
    LogisticSampling,
    RepairLaw,
    SamplingLaw,
    ShiftLaw,
)


POISSON_TAIL = 1e-12
QUADRATURE_EPSREL = 1e-10
QUADRATURE_LIMIT = 500
QUADRATURE_ACCEPT = 1e-8
# absolute error allowed per unit length of the integration range
QUADRATURE_FLOOR = 1e-13


class MonotoneTransform(BaseModel):
    """An increasing, invertible map on [0, inf) together with its inverse."""

    model_config = ConfigDict(frozen=True)

    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]


SQUARE = MonotoneTransform(forward=np.square, inverse=np.sqrt)


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise InvalidArgumentError(f"{name} must be finite, got {value}")


def _require_state(grid: DiscretisationGrid, v: int, name: str = "v") -> None:
    if not 0 <= v < grid.v_count:
        raise InvalidArgumentError(
            f"{name}={v} outside the grid of {grid.v_count} states"
        )


def erlang_cdf(k: int, delta: float, x: float) -> float:
    """CDF of the sum of `k` independent exponentials with mean `delta`."""
    _require_finite("x", x)
    if k < 1:
        raise InvalidArgumentError(f"k must be a positive integer, got {k}")

    if not delta > 0:
        raise InvalidArgumentError(f"delta must be positive, got {delta}")

    if x <= 0:
        return 0.0

    return float(special.gammainc(k, x / delta))


def poisson_truncation(mean: float) -> int:
    """Smallest K such that P(N > K) < POISSON_TAIL for N ~ Poisson(mean)."""
    if mean <= 0:
        return 0

    cutoff = max(int(stats.poisson.isf(POISSON_TAIL, mean)), 0)
    while stats.poisson.sf(cutoff, mean) >= POISSON_TAIL:
        cutoff += 1

    return cutoff


def _shift_cdf_array(law: ShiftLaw, t: float, xs: np.ndarray) -> np.ndarray:
    mean = t * law.s
    result = np.full(xs.shape, math.exp(-mean))
    result[xs < 0] = 0.0

    cutoff = poisson_truncation(mean)
    if cutoff == 0:
        return result

    counts = np.arange(1, cutoff + 1)
    weights = stats.poisson.pmf(counts, mean)
    positive = np.clip(xs, 0.0, None) / law.delta
    erlang = special.gammainc(counts[:, None], positive[None, :])
    result += np.where(xs >= 0, weights @ erlang, 0.0)
    return np.minimum(result, 1.0)


def _shift_sf_array(law: ShiftLaw, t: float, xs: np.ndarray) -> np.ndarray:
    """1 - Q_t(x) for x >= 0, summed over the jump counts to keep small tails accurate."""
    cutoff = poisson_truncation(t * law.s)
    if cutoff == 0:
        return np.zeros(xs.shape)

    counts = np.arange(1, cutoff + 1)
    weights = stats.poisson.pmf(counts, t * law.s)
    positive = np.clip(xs, 0.0, None) / law.delta
    return weights @ special.gammaincc(counts[:, None], positive[None, :])


def _require_time(t: float) -> None:
    _require_finite("t", t)
    if t < 0:
        raise InvalidArgumentError(f"t must be non-negative, got {t}")


def shift_cdf(law: ShiftLaw, t: float, x: float) -> float:
    """Q_t(x): CDF of the accumulated shift after time `t`."""
    _require_time(t)
    _require_finite("x", x)
    return float(_shift_cdf_array(law, t, np.array([x], dtype=float))[0])


def shift_quantile(law: ShiftLaw, t: float, prob: float) -> float:
    """Smallest x with Q_t(x) >= prob; 0 when the no-shift atom already covers `prob`."""
    _require_time(t)
    if not 0 < prob < 1:
        raise InvalidArgumentError(f"prob must lie in (0, 1), got {prob}")

    if shift_cdf(law, t, 0.0) >= prob:
        return 0.0

    upper = law.delta * max(1.0, 2 * t * law.s)
    while shift_cdf(law, t, upper) < prob:
        upper *= 2

    return float(optimize.brentq(lambda x: shift_cdf(law, t, x) - prob, 0.0, upper))


def shift_pmf_vector(
    law: ShiftLaw, t: float, grid: DiscretisationGrid, offset: float = 0.0
) -> np.ndarray:
    """
    q_t over the grid; the top state collects the remaining tail mass so the
    vector is a proper distribution.

    Bucket i >= 1 covers shifts in ((i - 1 + offset) delta_step, (i + offset) delta_step]
    and bucket 0 everything up to offset * delta_step. An offset of 1/2 gives the
    moves from a start at the representative distance of a state.
    """
    _require_time(t)
    if not 0 <= offset < 1:
        raise InvalidArgumentError(f"offset must lie in [0, 1), got {offset}")

    edges = (np.arange(grid.v_count - 1) + offset) * grid.delta_step
    cdf = _shift_cdf_array(law, t, edges)

    pmf = np.empty(grid.v_count)
    pmf[0] = cdf[0]
    pmf[1:-1] = np.diff(cdf)
    pmf[-1] = 1.0 - cdf[-1]
    return np.clip(pmf, 0.0, None)


def shift_pmf(law: ShiftLaw, t: float, grid: DiscretisationGrid, i: int) -> float:
    _require_state(grid, i, "i")
    return float(shift_pmf_vector(law, t, grid)[i])


def repair_prob_row(law: RepairLaw, l: int) -> np.ndarray:
    """R(l, m) for m = 0..l."""
    if l < 0:
        raise InvalidArgumentError(f"l must be non-negative, got {l}")

    if l == 0:
        return np.ones(1)

    edges = np.minimum(np.arange(l + 2) / (l + 0.5), 1.0)
    return np.clip(np.diff(special.betainc(law.alpha, law.beta, edges)), 0.0, None)


def repair_prob(law: RepairLaw, l: int, m: int) -> float:
    """
    R(l, m) = P(m / (l + 1/2) <= R < (m + 1) / (l + 1/2)) for R ~ Beta(alpha, beta).

    R(0, m) is 1 by convention (no repair).
    """
    if not 0 <= m <= l:
        raise InvalidArgumentError(f"repair index requires 0 <= m <= l, got l={l}, m={m}")

    return float(repair_prob_row(law, l)[m])


def _require_interval(h: float) -> None:
    _require_finite("h", h)
    if not h > 0:
        raise InvalidArgumentError(f"h must be positive, got {h}")


def sampling_prob_vector(
    law: SamplingLaw, h: float, grid: DiscretisationGrid
) -> np.ndarray:
    """T_h(v) for every state v of the grid."""
    _require_interval(h)
    match law:
        case AlwaysSampling():
            return np.ones(grid.v_count)
        case LogisticSampling(q=q, z=z):
            return np.full(grid.v_count, float(special.expit(q * (h - z))))
        case BetaStateSampling(a=a, b=b, zeta=zeta):
            states = np.arange(grid.v_count)
            points = (states + zeta) / (grid.v_count + zeta) - 1 / (
                2 * (grid.v_count + zeta)
            )
            return special.betainc(a / h, b, np.clip(points, 0.0, 1.0))

    raise InvalidArgumentError(f"unsupported sampling law {law!r}")


def sampling_prob(
    law: SamplingLaw, h: float, v: int, grid: DiscretisationGrid
) -> float:
    _require_state(grid, v)
    return float(sampling_prob_vector(law, h, grid)[v])


def sampling_prob_continuous(
    law: SamplingLaw, h: float, w: float, grid: DiscretisationGrid
) -> float:
    """
    Sampling probability at a continuous distance `w`.

    For the beta-state law this is P(W_h < (w + zeta*) / (V + 2 zeta*)) with `w`
    capped at V; the other laws do not depend on the distance.
    """
    _require_interval(h)
    if not isinstance(law, BetaStateSampling):
        return sampling_prob(law, h, 0, grid)

    zeta_star = law.zeta_star if law.zeta_star is not None else law.zeta
    max_distance = (
        law.max_distance
        if law.max_distance is not None
        else grid.top * grid.delta_step
    )
    point = (min(max(w, 0.0), max_distance) + zeta_star) / (max_distance + 2 * zeta_star)
    return float(special.betainc(law.a / h, law.b, point))


def _check_monotone(f: MonotoneTransform, j: float, span: float) -> None:
    xs = np.linspace(j, j + max(span, 1.0), 65)
    values = np.asarray(f.forward(xs), dtype=float)
    if not np.all(np.diff(values) > 0):
        raise NumericFailureError("transform must be strictly increasing on [j, inf)")

    if values[0] < 0:
        raise NumericFailureError("transform must be non-negative on [j, inf)")

    roundtrip = np.asarray(f.inverse(values), dtype=float)
    if not np.allclose(roundtrip, xs, rtol=1e-8, atol=1e-10):
        raise NumericFailureError("transform inverse does not invert the forward map")


def _integrate(fn: Callable[[float], float], lower: float, upper: float) -> float:
    # full_output keeps QUADPACK from emitting warnings; the error estimate is checked instead
    value, abserr, *_ = integrate.quad(
        fn,
        lower,
        upper,
        epsabs=0.0,
        epsrel=QUADRATURE_EPSREL,
        limit=QUADRATURE_LIMIT,
        full_output=1,
    )
    allowed = QUADRATURE_ACCEPT * abs(value) + QUADRATURE_FLOOR * (upper - lower)
    if abserr > allowed:
        raise NumericFailureError(
            f"quadrature on [{lower}, {upper}] did not converge", residual=abserr
        )

    return value


def expected_between_samplings(
    law: ShiftLaw, j: float, h: float, f: MonotoneTransform = SQUARE
) -> float:
    """
    Time-average of E f(H_j(t)) over [0, h] by nested quadrature, where H_j starts
    at distance `j` and drifts by the compound Poisson shift.

    For each t the inner integral is f(j) + integral of P(f(j + shift_t) > x) over
    x in [f(j), f(j + y*)], with y* the shift level whose tail mass at t = h is
    below POISSON_TAIL.
    """
    _require_interval(h)
    _require_finite("j", j)
    if j < 0:
        raise InvalidArgumentError(f"j must be non-negative, got {j}")

    cutoff = shift_quantile(law, h, 1 - POISSON_TAIL) if law.s > 0 else 0.0
    _check_monotone(f, j, cutoff)

    base = float(f.forward(np.float64(j)))
    top = float(f.forward(np.float64(j + cutoff)))
    if cutoff == 0 or top <= base:
        return base

    def tail_at(t: float) -> float:
        def survival(x: float) -> float:
            y = max(float(f.inverse(np.float64(x))) - j, 0.0)
            return float(_shift_sf_array(law, t, np.array([y]))[0])

        return base + _integrate(survival, base, top)

    return _integrate(tail_at, 0.0, h) / h


def expected_sq_distance(law: ShiftLaw, j: float, h: float) -> float:
    """Closed form of the time-averaged E H_j^2 over an interval of length `h`."""
    _require_interval(h)
    if j < 0:
        raise InvalidArgumentError(f"j must be non-negative, got {j}")

    drift = h * law.s * law.delta
    return drift * (law.delta + drift / 3 + j) + j**2


def expected_sq_distance_vector(
    law: ShiftLaw, starts: np.ndarray, h: float
) -> np.ndarray:
    _require_interval(h)
    drift = h * law.s * law.delta
    return drift * (law.delta + drift / 3 + starts) + starts**2
