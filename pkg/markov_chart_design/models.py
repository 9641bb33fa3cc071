"""Pydantic models for the stochastic process, costs, chart policies and results."""

from typing import Annotated, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class FrozenModel(BaseModel):
    """
    Immutable, strict base for every domain record.

    Unknown fields are rejected so typos in scenario files surface as errors.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")


class ShiftLaw(FrozenModel):
    """
    Compound Poisson degradation: shifts arrive with rate `s` per unit time, each
    shift size is exponential with mean `delta`.

    A zero rate is accepted and means the process never drifts.
    """

    s: float = Field(ge=0)
    delta: float = Field(gt=0)


class RepairLaw(FrozenModel):
    """Beta(alpha, beta) law of the proportion of distance that remains after repair."""

    alpha: float = Field(gt=0)
    beta: float = Field(gt=0)


class AlwaysSampling(FrozenModel):
    variant: Literal["always"] = "always"


class LogisticSampling(FrozenModel):
    """
    Compliance that only depends on the time between samplings.

    T*_h = 1 / (1 + exp(-q (h - z))), with `z` the midpoint where compliance is 0.5.
    """

    variant: Literal["logistic"] = "logistic"
    q: float = Field(gt=0)
    z: float


class BetaStateSampling(FrozenModel):
    """
    Compliance that grows with both the time between samplings and the distance
    from target.

    The discretised form uses `zeta`; the continuous form uses `zeta_star` and the
    maximum distance `max_distance` (V). Both continuous parameters fall back to
    `zeta` and the top grid distance when omitted.
    """

    variant: Literal["beta-state"] = "beta-state"
    a: float = Field(gt=0)
    b: float = Field(gt=0)
    zeta: float = Field(gt=0)
    zeta_star: float | None = Field(default=None, gt=0)
    max_distance: float | None = Field(default=None, gt=0)


SamplingLaw = Annotated[
    AlwaysSampling | LogisticSampling | BetaStateSampling,
    Field(discriminator="variant"),
]


class ProcessModel(FrozenModel):
    """Target, measurement noise and drift of the monitored characteristic."""

    mu0: float = 0.0
    sigma: float = Field(gt=0)
    s: float = Field(ge=0)
    delta: float = Field(gt=0)

    @property
    def shift_law(self) -> ShiftLaw:
        return ShiftLaw(s=self.s, delta=self.delta)


class CostModel(FrozenModel):
    """
    Unit costs and the weight `p` of the expected cost in G = p E(C) + (1 - p) sd(C).

    `c_o` is charged per squared distance per unit time, `c_rs` per squared distance
    at the moment of repair.
    """

    c_s: float = Field(ge=0)
    c_o: float = Field(ge=0)
    c_rb: float = Field(ge=0)
    c_rs: float = Field(ge=0)
    p: float = Field(default=1.0, ge=0, le=1)


class DiscretisationGrid(FrozenModel):
    """
    Distances from target are discretised into `v_count` states of width `delta_step`.

    State 0 is the target itself, state v >= 1 covers ((v-1) delta_step, v delta_step]
    and is represented by its midpoint.
    """

    delta_step: float = Field(gt=0)
    v_count: int = Field(ge=2)

    @property
    def top(self) -> int:
        return self.v_count - 1

    def distance(self, v: int) -> float:
        """Representative distance of state `v` (0 for the target, midpoint otherwise)."""
        if v == 0:
            return 0.0

        return v * self.delta_step - self.delta_step / 2

    def distances(self) -> np.ndarray:
        distances = np.arange(self.v_count) * self.delta_step - self.delta_step / 2
        distances[0] = 0.0
        return distances

    def state_of(self, distance: float) -> int:
        """Index of the state whose interval contains `distance`."""
        if distance <= 0:
            return 0

        return min(int(np.ceil(distance / self.delta_step)), self.top)


class GridSettings(FrozenModel):
    """Scenario-level grid request; `delta_step` is derived from the search box when omitted."""

    v_count: int = Field(default=100, ge=2)
    delta_step: float | None = Field(default=None, gt=0)


class ChartPolicy(FrozenModel):
    h: float = Field(gt=0)
    k: float = Field(ge=0)


class SearchBox(FrozenModel):
    h_min: float = Field(gt=0)
    h_max: float
    k_min: float = Field(ge=0)
    k_max: float
    h_init: float
    k_init: float
    restarts: int = Field(default=8, ge=1)

    @model_validator(mode="after")
    def check_bounds(self) -> "SearchBox":
        if not self.h_min < self.h_max:
            raise ValueError("h_min must be smaller than h_max")

        if not self.k_min < self.k_max:
            raise ValueError("k_min must be smaller than k_max")

        if not (self.h_min <= self.h_init <= self.h_max):
            raise ValueError("h_init must lie within [h_min, h_max]")

        if not (self.k_min <= self.k_init <= self.k_max):
            raise ValueError("k_init must lie within [k_min, k_max]")

        return self


class ChartSetup(FrozenModel):
    """Everything except the policy that a single G evaluation needs."""

    process: ProcessModel
    repair: RepairLaw
    sampling: SamplingLaw
    costs: CostModel
    grid: DiscretisationGrid


class DesignPoint(FrozenModel):
    policy: ChartPolicy
    expected_cost: float
    cost_std: float
    objective: float
    alarm_mass: float


class OptimizationResult(FrozenModel):
    design: DesignPoint
    evaluations: int
    converged: bool
    starts: int


class ChainArtifacts(BaseModel):
    """
    Products of one chain build for a fixed policy.

    `transition` is the full 2V_d x 2V_d matrix; `stationary`, `repair_start`,
    `a_sq` and `sampling` are aligned to the 2V_d - 2 recurrent states ordered as
    out-of-control 1..V_d-1 followed by true alarm 1..V_d-1.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    policy: ChartPolicy
    grid: DiscretisationGrid
    transition: np.ndarray
    stationary: np.ndarray
    repair_start: np.ndarray
    a_sq: np.ndarray
    sampling: np.ndarray


class AlarmRule(FrozenModel):
    """
    `limit-only` signals when a point exceeds k; `runs` additionally signals after
    `count` consecutive points above `warning_fraction * k`.
    """

    variant: Literal["limit-only", "runs"] = "limit-only"
    count: int = Field(default=3, ge=1)
    warning_fraction: float = Field(default=2 / 3, gt=0, le=1)


class SimConfig(FrozenModel):
    intervals: int = Field(default=50_000, ge=1)
    burn_in: int = Field(default=100, ge=0)
    thinning: int = Field(default=30, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    rule: AlarmRule = AlarmRule()
    continuous_sampling: bool = False
    record_trace: bool = False

    @model_validator(mode="after")
    def check_burn_in(self) -> "SimConfig":
        if not self.intervals > self.burn_in:
            raise ValueError("intervals must exceed burn_in")

        return self


class TraceRow(FrozenModel):
    interval: int
    distance: float
    sampled: bool
    observation: float | None
    alarm: bool
    repaired_distance: float
    cost: float


class SimReport(FrozenModel):
    """
    Summary of a simulated run after burn-in.

    `state_frequencies` covers all 2V_d chain states in transition-matrix order.
    """

    mean_cost: float
    thinned_cost_std: float
    alarm_proportion: float
    state_frequencies: list[float]
    intervals: int
    trace: list[TraceRow] | None = None


class DivergenceReport(FrozenModel):
    total_variation: float
    mean_cost_gap: float
    alarm_gap: float


class BaselineModel(FrozenModel):
    """Fixed shift size, perfect repair, always-successful sampling."""

    mu0: float = 0.0
    sigma: float = Field(gt=0)
    s: float = Field(gt=0)
    delta_star: float = Field(gt=0)
    h: float = Field(gt=0)
    k: float
    c_s: float = Field(default=0.0, ge=0)
    c_f: float = Field(default=0.0, ge=0)
    c_o: float = Field(default=0.0, ge=0)
    c_r: float = Field(default=0.0, ge=0)


class BaselineReport(FrozenModel):
    stationary: list[float]
    expected_cost: float
    fraction_b: float


class Units(FrozenModel):
    time: str = "time unit"
    measurement: str = "measurement unit"
    currency: str = "currency unit"


class Scenario(FrozenModel):
    name: str
    description: str = ""
    units: Units = Units()
    process: ProcessModel
    repair: RepairLaw
    sampling: SamplingLaw
    costs: CostModel
    grid: GridSettings = GridSettings()
    search: SearchBox
