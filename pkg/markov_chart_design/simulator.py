"""
Monte Carlo simulation of the monitored process at sampling instants.

Each record covers one sampling and the interval that follows it, matching the
per-state cost used by the analytic chain: sampling cost if the sampling took
place, repair cost on a true alarm, and the out-of-control cost integrated
exactly over the piecewise-constant distance path of the next interval.
"""

import logging
from collections.abc import Sequence

import numpy as np

from markov_chart_design.chain import recurrent_indices
from markov_chart_design.cost import alarm_mass, expected_cost
from markov_chart_design.distributions import (
    sampling_prob_continuous,
    sampling_prob_vector,
)
from markov_chart_design.errors import InvalidArgumentError
from markov_chart_design.helpers import parallel_map
from markov_chart_design.models import (
    AlarmRule,
    ChainArtifacts,
    ChartPolicy,
    ChartSetup,
    CostModel,
    DivergenceReport,
    SimConfig,
    SimReport,
    TraceRow,
)

logger = logging.getLogger(__name__)


class _IntervalDrift:
    """
    Pre-drawn shifts of every interval, reduced to what the cost needs.

    For a start distance d the squared-distance integral over an interval is
    h d^2 + 2 d first_moment + second_moment, and the end distance is d + total.
    """

    def __init__(self, rng: np.random.Generator, rate: float, mean_size: float, h: float, intervals: int):
        counts = rng.poisson(rate * h, intervals)
        events = int(counts.sum())
        owners = np.repeat(np.arange(intervals), counts)
        times = rng.uniform(0.0, h, events)
        sizes = rng.exponential(mean_size, events)

        order = np.lexsort((times, owners))
        owners, times, sizes = owners[order], times[order], sizes[order]

        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        running = np.cumsum(sizes)
        offsets = np.repeat(running[starts - 1] * (starts > 0), counts) if events else running
        level = running - offsets

        is_last = np.zeros(events, dtype=bool)
        is_last[np.cumsum(counts)[counts > 0] - 1] = True
        next_times = np.where(is_last, h, np.roll(times, -1))
        durations = next_times - times

        self.total = np.bincount(owners, weights=sizes, minlength=intervals)
        self.first_moment = np.bincount(owners, weights=durations * level, minlength=intervals)
        self.second_moment = np.bincount(owners, weights=durations * level**2, minlength=intervals)
        self.h = h

    def integral(self, index: int, start: float) -> float:
        return (
            self.h * start**2
            + 2 * start * self.first_moment[index]
            + self.second_moment[index]
        )


class _AlarmState:
    def __init__(self, rule: AlarmRule, k: float):
        self.rule = rule
        self.k = k
        self.run = 0

    def observe(self, value: float) -> bool:
        if value > self.k:
            self.run = 0
            return True

        if self.rule.variant == "limit-only":
            return False

        if value > self.rule.warning_fraction * self.k:
            self.run += 1
        else:
            self.run = 0

        if self.run >= self.rule.count:
            self.run = 0
            return True

        return False

    def reset(self) -> None:
        self.run = 0


def thinned_std(costs: np.ndarray, thinning: int) -> float:
    """Sample standard deviation of every `thinning`-th value, to damp autocorrelation."""
    if thinning < 1:
        raise InvalidArgumentError(f"thinning must be at least 1, got {thinning}")

    kept = np.asarray(costs, dtype=float)[::thinning]
    if kept.size < 2:
        return 0.0

    return float(np.std(kept, ddof=1))


def _generator(seed: int | np.random.SeedSequence) -> np.random.Generator:
    sequence = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(sequence))


def _run(
    setup: ChartSetup,
    policy: ChartPolicy,
    config: SimConfig,
    seed: int | np.random.SeedSequence,
) -> SimReport:
    rng = _generator(seed)
    grid = setup.grid
    process = setup.process
    costs = setup.costs
    h = policy.h
    steps = config.intervals

    drift = _IntervalDrift(rng, process.s, process.delta, h, steps)
    attendance = rng.uniform(size=steps)
    noise = rng.normal(0.0, process.sigma, size=steps)
    proportions = rng.beta(setup.repair.alpha, setup.repair.beta, size=steps)
    state_sampling = sampling_prob_vector(setup.sampling, h, grid)

    alarm_state = _AlarmState(config.rule, policy.k)
    record_costs = np.empty(steps)
    alarms = np.zeros(steps, dtype=bool)
    states = np.empty(steps, dtype=np.int64)
    trace: list[TraceRow] = []

    distance = 0.0
    for index in range(steps):
        state = grid.state_of(distance)
        if config.continuous_sampling:
            chance = sampling_prob_continuous(setup.sampling, h, distance, grid)
        else:
            chance = state_sampling[state]

        sampled = bool(attendance[index] < chance)
        observation = distance + noise[index] if sampled else None
        alarm = observation is not None and alarm_state.observe(observation)

        cost = costs.c_s / h if sampled else 0.0
        start = distance
        if alarm and distance > 0:
            cost += (costs.c_rb + costs.c_rs * distance**2) / h
            # the repaired distance is never exactly the target
            start = max(proportions[index] * distance, np.finfo(float).tiny)
            alarm_state.reset()

        cost += costs.c_o * drift.integral(index, start) / h
        record_costs[index] = cost
        alarms[index] = alarm
        states[index] = state + grid.v_count if alarm else state

        if config.record_trace:
            trace.append(
                TraceRow(
                    interval=index,
                    distance=distance,
                    sampled=sampled,
                    observation=observation,
                    alarm=alarm,
                    repaired_distance=start,
                    cost=cost,
                )
            )

        distance = start + drift.total[index]

    kept = slice(config.burn_in, steps)
    kept_costs = record_costs[kept]
    frequencies = np.bincount(states[kept], minlength=2 * grid.v_count) / kept_costs.size

    report = SimReport(
        mean_cost=float(kept_costs.mean()),
        thinned_cost_std=thinned_std(kept_costs, config.thinning),
        alarm_proportion=float(alarms[kept].mean()),
        state_frequencies=frequencies.tolist(),
        intervals=int(kept_costs.size),
        trace=trace if config.record_trace else None,
    )
    logger.info(
        "simulated %d intervals: mean cost %.6g, alarm proportion %.4f",
        report.intervals,
        report.mean_cost,
        report.alarm_proportion,
    )
    return report


def simulate(setup: ChartSetup, policy: ChartPolicy, config: SimConfig) -> SimReport:
    return _run(setup, policy, config, config.seed)


def replicate(
    setup: ChartSetup,
    policy: ChartPolicy,
    config: SimConfig,
    replicates: int,
    workers: int = 1,
) -> list[SimReport]:
    """Independent runs on seed streams spawned from `config.seed`."""
    if replicates < 1:
        raise InvalidArgumentError(f"replicates must be at least 1, got {replicates}")

    streams = np.random.SeedSequence(config.seed).spawn(replicates)
    return parallel_map(lambda stream: _run(setup, policy, config, stream), streams, workers)


def compare_to_analytic(
    report: SimReport, artifacts: ChainArtifacts, costs: CostModel
) -> DivergenceReport:
    """
    Total variation distance between the simulated recurrent-state frequencies
    and the stationary distribution, plus relative mean-cost and absolute
    alarm-proportion gaps.
    """
    grid = artifacts.grid
    frequencies = np.asarray(report.state_frequencies, dtype=float)
    if frequencies.size != 2 * grid.v_count:
        raise InvalidArgumentError(
            f"simulation has {frequencies.size} states, chain has {2 * grid.v_count}"
        )

    empirical = frequencies[recurrent_indices(grid)]
    if empirical.sum() > 0:
        empirical = empirical / empirical.sum()

    analytic_cost = expected_cost(artifacts, costs)
    return DivergenceReport(
        total_variation=float(0.5 * np.abs(empirical - artifacts.stationary).sum()),
        mean_cost_gap=(report.mean_cost - analytic_cost) / analytic_cost
        if analytic_cost
        else 0.0,
        alarm_gap=report.alarm_proportion - alarm_mass(artifacts),
    )


def rule_from_spec(spec: str) -> AlarmRule:
    """Parse `limit-only` or `runs:COUNT:FRACTION` (e.g. `runs:3:0.6667`)."""
    if spec == "limit-only":
        return AlarmRule()

    parts: Sequence[str] = spec.split(":")
    if len(parts) != 3 or parts[0] != "runs":
        raise InvalidArgumentError(f"rule must be limit-only or runs:COUNT:FRACTION, got {spec!r}")

    try:
        count, fraction = int(parts[1]), float(parts[2])
    except ValueError as exc:
        raise InvalidArgumentError(f"rule {spec!r} is not numeric") from exc

    if count < 1 or not 0 < fraction <= 1:
        raise InvalidArgumentError(f"rule {spec!r} needs count >= 1 and 0 < fraction <= 1")

    return AlarmRule(variant="runs", count=count, warning_fraction=fraction)
