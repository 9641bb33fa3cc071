#!/usr/bin/env -S uv tool run ipython -i

from markov_chart_design import *  # noqa: F403
from markov_chart_design.scenario import load_scenario, scenario_setup

ldl = load_scenario("ldl")
setup = scenario_setup(ldl)
