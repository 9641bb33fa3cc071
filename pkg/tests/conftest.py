import pytest

from markov_chart_design.models import (
    AlwaysSampling,
    ChartPolicy,
    ChartSetup,
    CostModel,
    DiscretisationGrid,
    GridSettings,
    LogisticSampling,
    ProcessModel,
    RepairLaw,
    Scenario,
    SearchBox,
)


@pytest.fixture
def toy_setup() -> ChartSetup:
    return ChartSetup(
        process=ProcessModel(sigma=1.0, s=0.2, delta=2.0),
        repair=RepairLaw(alpha=1.0, beta=3.0),
        sampling=LogisticSampling(q=4.0, z=0.2),
        costs=CostModel(c_s=1.0, c_o=20.0, c_rb=10.0, c_rs=10.0, p=0.9),
        grid=DiscretisationGrid(delta_step=0.5, v_count=12),
    )


@pytest.fixture
def always_setup(toy_setup: ChartSetup) -> ChartSetup:
    return toy_setup.model_copy(update={"sampling": AlwaysSampling()})


@pytest.fixture
def toy_policy() -> ChartPolicy:
    return ChartPolicy(h=0.4, k=1.1)


@pytest.fixture
def toy_box() -> SearchBox:
    return SearchBox(
        h_min=0.1, h_max=2.0, k_min=0.0, k_max=4.0, h_init=0.4, k_init=1.1, restarts=2
    )


@pytest.fixture
def toy_scenario(toy_setup: ChartSetup, toy_box: SearchBox) -> Scenario:
    return Scenario(
        name="toy",
        description="small grid for fast checks",
        process=toy_setup.process,
        repair=toy_setup.repair,
        sampling=toy_setup.sampling,
        costs=toy_setup.costs,
        grid=GridSettings(v_count=12, delta_step=0.5),
        search=toy_box,
    )
