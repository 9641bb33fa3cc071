"""
Discretised Markov chain of the process observed at sampling instants.

States are ordered as in the transition matrix: the first V_d entries are the
states without alarm (0 is in-control, v >= 1 out-of-control at distance v), the
next V_d entries are the alarm states (V_d is the false alarm, V_d + v the true
alarm at distance v). In-control and false alarm form a transient class, the
remaining 2V_d - 2 states are the single recurrent class.
"""

import csv
import logging
from pathlib import Path

import numpy as np
from scipy import sparse, stats
from scipy.sparse import linalg as sparse_linalg

from markov_chart_design.cost import a_squared
from markov_chart_design.distributions import (
    repair_prob,
    repair_prob_row,
    sampling_prob_vector,
    shift_pmf_vector,
    shift_quantile,
)
from markov_chart_design.errors import InvalidArgumentError, NumericFailureError
from markov_chart_design.helpers import _capture_sentry_message
from markov_chart_design.models import (
    ChainArtifacts,
    ChartPolicy,
    ChartSetup,
    DiscretisationGrid,
    GridSettings,
    RepairLaw,
    ShiftLaw,
)

logger = logging.getLogger(__name__)

GRID_QUANTILE = 0.999
STATIONARY_RESIDUAL = 1e-8
POWER_ITERATION_CAP = 200_000
MIDPOINT_OFFSET = 0.5


def resolve_grid(
    settings: GridSettings, law: ShiftLaw, h_max: float
) -> DiscretisationGrid:
    """
    Use the requested step, or size the grid so that its top distance is the
    99.9th percentile of the shift accumulated over the longest interval studied.
    """
    if settings.delta_step is not None:
        return DiscretisationGrid(
            delta_step=settings.delta_step, v_count=settings.v_count
        )

    span = shift_quantile(law, h_max, GRID_QUANTILE) if law.s > 0 else 0.0
    span = span or law.delta
    delta_step = span / (settings.v_count - 1)
    logger.debug("auto-sized grid: delta_step=%.6g, v_count=%d", delta_step, settings.v_count)
    return DiscretisationGrid(delta_step=delta_step, v_count=settings.v_count)


def state_labels(grid: DiscretisationGrid, recurrent_only: bool = False) -> list[str]:
    distances = range(1, grid.v_count)
    if recurrent_only:
        return [f"ooc:{v}" for v in distances] + [f"alarm:{v}" for v in distances]

    return (
        ["inc:0"]
        + [f"ooc:{v}" for v in distances]
        + ["fa:0"]
        + [f"alarm:{v}" for v in distances]
    )


def recurrent_indices(grid: DiscretisationGrid) -> np.ndarray:
    states = np.arange(2 * grid.v_count)
    return states[(states != 0) & (states != grid.v_count)]


def observation_probs(
    policy: ChartPolicy, setup: ChartSetup
) -> tuple[np.ndarray, np.ndarray]:
    """
    Per target distance, the probability of ending without alarm (including an
    unsuccessful sampling) and with alarm.
    """
    grid = setup.grid
    sampled = sampling_prob_vector(setup.sampling, policy.h, grid)
    margin = (policy.k - grid.distances()) / setup.process.sigma
    quiet = stats.norm.cdf(margin)
    signal = stats.norm.sf(margin)
    return sampled * quiet + (1 - sampled), sampled * signal


def _shift_tail(pmf: np.ndarray) -> np.ndarray:
    """tail[g] = probability of a shift of at least g units."""
    return np.cumsum(pmf[::-1])[::-1]


def _banded(pmf: np.ndarray) -> np.ndarray:
    size = pmf.size
    offsets = np.subtract.outer(np.arange(size), np.arange(size)).T
    operator = np.where(offsets >= 0, pmf[np.clip(offsets, 0, None)], 0.0)
    operator[:, -1] = _shift_tail(pmf)[size - 1 - np.arange(size)]
    return operator


def shift_pmfs(
    policy: ChartPolicy, setup: ChartSetup
) -> tuple[np.ndarray, np.ndarray]:
    """Shift pmfs over one interval from the target and from a representative distance."""
    law, grid = setup.process.shift_law, setup.grid
    return (
        shift_pmf_vector(law, policy.h, grid),
        shift_pmf_vector(law, policy.h, grid, offset=MIDPOINT_OFFSET),
    )


def shift_operator(from_target: np.ndarray, from_midpoint: np.ndarray) -> np.ndarray:
    """
    D[u, w]: probability of moving from start state u to state w within one
    interval; the top state absorbs every larger distance.

    Row 0 starts exactly at the target, the other rows at D'(u), so the move from
    u to w covers shifts between (w - u - 1/2) and (w - u + 1/2) grid steps.
    """
    operator = _banded(from_midpoint)
    operator[0] = from_target
    return operator


def _check_indices(g: int, v: int, l: int, grid: DiscretisationGrid) -> None:
    if not 0 <= v < grid.v_count:
        raise InvalidArgumentError(f"v={v} outside the grid of {grid.v_count} states")

    if not 0 <= g <= v:
        raise InvalidArgumentError(f"g={g} outside [0, {v}]")

    if l < 0:
        raise InvalidArgumentError(f"l must be non-negative, got {l}")


def _repair_convolution(
    g: int, v: int, l: int, policy: ChartPolicy, setup: ChartSetup
) -> float:
    from_target, from_midpoint = shift_pmfs(policy, setup)
    total = 0.0
    for m in range(min(l, v, g) + 1):
        # the interval starts at state v - (g - m)
        pmf = from_target if g - m == v else from_midpoint
        shifts = _shift_tail(pmf) if v == setup.grid.top else pmf
        total += shifts[g - m] * repair_prob(setup.repair, l, m)

    return total


def weight_no_alarm(
    g: int, v: int, l: int, policy: ChartPolicy, setup: ChartSetup
) -> float:
    """
    S(g, v, l): probability of reaching distance `v` without alarm after a repair
    indexed by `l` and a shift of `g - m` units.

    At the top state the shift probability is the tail mass.
    """
    _check_indices(g, v, l, setup.grid)
    quiet, _ = observation_probs(policy, setup)
    return float(quiet[v] * _repair_convolution(g, v, l, policy, setup))


def weight_alarm(
    g: int, v: int, l: int, policy: ChartPolicy, setup: ChartSetup
) -> float:
    """S'(g, v, l): as `weight_no_alarm` but ending in an alarm."""
    _check_indices(g, v, l, setup.grid)
    _, signal = observation_probs(policy, setup)
    return float(signal[v] * _repair_convolution(g, v, l, policy, setup))


def repair_start_matrix(law: RepairLaw, grid: DiscretisationGrid) -> np.ndarray:
    """
    M over the recurrent states: the distribution of the starting distance of the
    next interval.

    Out-of-control rows keep the distance. A true alarm at distance v leaves
    R * distance, which lands in state m + 1 with probability R(v - 1, m), so the
    target itself is never reached.
    """
    size = grid.v_count
    no_repair = np.eye(size)[1:]
    repaired = np.zeros((size - 1, size))
    for v in range(1, size):
        repaired[v - 1, 1 : v + 1] = repair_prob_row(law, v - 1)

    return np.vstack([no_repair, repaired])


def _start_matrix(law: RepairLaw, grid: DiscretisationGrid) -> np.ndarray:
    """`repair_start_matrix` extended with the in-control and false alarm rows."""
    recurrent = repair_start_matrix(law, grid)
    at_target = np.eye(grid.v_count)[:1]
    half = grid.v_count - 1
    return np.vstack([at_target, recurrent[:half], at_target, recurrent[half:]])


def build_transition(policy: ChartPolicy, setup: ChartSetup) -> np.ndarray:
    operator = shift_operator(*shift_pmfs(policy, setup))
    moves = _start_matrix(setup.repair, setup.grid) @ operator
    quiet, signal = observation_probs(policy, setup)
    return np.hstack([moves * quiet, moves * signal])


def _residual(transition: np.ndarray, distribution: np.ndarray) -> float:
    return float(np.max(np.abs(distribution @ transition - distribution)))


def _power_iteration(transition: np.ndarray, start: np.ndarray) -> np.ndarray:
    distribution = start
    for _ in range(POWER_ITERATION_CAP):
        distribution = distribution @ transition
        distribution /= distribution.sum()
        if _residual(transition, distribution) < STATIONARY_RESIDUAL / 10:
            return distribution

    residual = _residual(transition, distribution)
    raise NumericFailureError(
        f"power iteration did not converge, residual {residual:.3g}", residual=residual
    )


def solve_stationary(transition: np.ndarray) -> np.ndarray:
    """
    Stationary distribution of an irreducible row-stochastic matrix.

    Solves (P^T - I) f = 0 with the last equation replaced by sum(f) = 1, takes
    magnitudes (rounding leaves tiny entries slightly negative), then polishes
    with two chain steps; falls back to power iteration when the residual is
    not small enough.
    """
    size = transition.shape[0]
    system = sparse.lil_matrix(transition.T - np.eye(size))
    system[-1, :] = 1.0
    rhs = np.zeros(size)
    rhs[-1] = 1.0

    distribution = np.abs(sparse_linalg.spsolve(system.tocsc(), rhs))
    for _ in range(2):
        distribution = distribution @ transition
    distribution /= distribution.sum()

    residual = _residual(transition, distribution)
    if np.isfinite(residual) and residual < STATIONARY_RESIDUAL:
        return distribution

    logger.info("linear solve residual %.3g, falling back to power iteration", residual)
    _capture_sentry_message(
        "stationary linear solve fell back to power iteration",
        level="warning",
        residual=residual,
        states=size,
    )
    return _power_iteration(transition, np.full(size, 1.0 / size))


def stationary(transition: np.ndarray) -> np.ndarray:
    """Stationary distribution over the 2V_d - 2 recurrent states."""
    v_count = transition.shape[0] // 2
    grid_states = np.arange(2 * v_count)
    keep = grid_states[(grid_states != 0) & (grid_states != v_count)]
    return solve_stationary(transition[np.ix_(keep, keep)])


def build_artifacts(policy: ChartPolicy, setup: ChartSetup) -> ChainArtifacts:
    grid = setup.grid
    transition = build_transition(policy, setup)
    repair_start = repair_start_matrix(setup.repair, grid)
    sampled = sampling_prob_vector(setup.sampling, policy.h, grid)[1:]

    arrays = {
        "transition": transition,
        "stationary": stationary(transition),
        "repair_start": repair_start,
        "a_sq": a_squared(repair_start, setup.process.shift_law, policy, grid),
        "sampling": np.concatenate([sampled, sampled]),
    }
    for array in arrays.values():
        array.setflags(write=False)

    return ChainArtifacts(policy=policy, grid=grid, **arrays)


def _write_matrix(
    path: Path, rows: np.ndarray, row_labels: list[str], column_labels: list[str]
) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["state", *column_labels])
        for label, row in zip(row_labels, rows, strict=True):
            writer.writerow([label, *(repr(float(value)) for value in row)])


def dump_chain_csv(artifacts: ChainArtifacts, directory: Path) -> list[Path]:
    """Write the transition matrix, M and the stationary distribution as CSV files."""
    directory.mkdir(parents=True, exist_ok=True)
    grid = artifacts.grid
    all_labels = state_labels(grid)
    recurrent_labels = state_labels(grid, recurrent_only=True)
    distance_labels = [f"distance:{v}" for v in range(grid.v_count)]

    paths = [
        directory / "transition.csv",
        directory / "repair_start.csv",
        directory / "stationary.csv",
    ]
    _write_matrix(paths[0], artifacts.transition, all_labels, all_labels)
    _write_matrix(paths[1], artifacts.repair_start, recurrent_labels, distance_labels)
    _write_matrix(
        paths[2], artifacts.stationary[:, None], recurrent_labels, ["probability"]
    )
    return paths
