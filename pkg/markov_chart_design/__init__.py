"""
markov-chart-design: cost-optimal control charts for drifting processes.

The monitored characteristic drifts away from its target by compound Poisson
shifts, is only observed when a scheduled sampling actually takes place, and is
repaired imperfectly after a true alarm. The package builds the discretised Markov
chain of that process, computes the stationary expected cost and cost spread of
a chart policy (h, k), optimises the policy, and checks the result by simulation.
"""

from markov_chart_design.baseline import baseline_cost, baseline_report, fraction_b
from markov_chart_design.chain import build_artifacts, build_transition, stationary
from markov_chart_design.cost import cost_std, expected_cost, objective
from markov_chart_design.errors import (
    InvalidArgumentError,
    MarkovChartError,
    NumericFailureError,
    OptimizerFailureError,
    ScenarioError,
)
from markov_chart_design.models import (
    AlarmRule,
    BaselineModel,
    ChartPolicy,
    ChartSetup,
    CostModel,
    DesignPoint,
    DiscretisationGrid,
    ProcessModel,
    RepairLaw,
    Scenario,
    SearchBox,
    ShiftLaw,
    SimConfig,
)
from markov_chart_design.optimizer import (
    compare_weights,
    evaluate,
    minimize,
    sensitivity,
    sweep,
)
from markov_chart_design.scenario import load_scenario, scenario_setup
from markov_chart_design.simulator import compare_to_analytic, simulate

__all__ = [
    "AlarmRule",
    "BaselineModel",
    "ChartPolicy",
    "ChartSetup",
    "CostModel",
    "DesignPoint",
    "DiscretisationGrid",
    "InvalidArgumentError",
    "MarkovChartError",
    "NumericFailureError",
    "OptimizerFailureError",
    "ProcessModel",
    "RepairLaw",
    "Scenario",
    "ScenarioError",
    "SearchBox",
    "ShiftLaw",
    "SimConfig",
    "baseline_cost",
    "baseline_report",
    "build_artifacts",
    "build_transition",
    "compare_to_analytic",
    "compare_weights",
    "cost_std",
    "evaluate",
    "expected_cost",
    "fraction_b",
    "load_scenario",
    "minimize",
    "objective",
    "scenario_setup",
    "sensitivity",
    "simulate",
    "stationary",
    "sweep",
]

__version__ = "0.1.0"
