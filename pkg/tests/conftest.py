import json
from importlib import resources

import pytest

from riskbn import infer, model


def scenario_doc(name: str) -> dict:
    with resources.files("riskbn.scenarios").joinpath(f"{name}.json").open("r") as fh:
        return json.load(fh)


def scenario_path(name: str) -> str:
    return str(resources.files("riskbn.scenarios").joinpath(f"{name}.json"))


@pytest.fixture(scope="session")
def scenarios():
    return {n: model.load_scenario(scenario_doc(n)) for n in ("teddy_s1", "teddy_s2", "kettle_s1", "kettle_s2")}


@pytest.fixture(scope="session")
def compiled_scenarios(scenarios):
    out = {}
    for name, cfg in scenarios.items():
        spec = model.build_product_risk_bn(cfg)
        out[name] = infer.compile_model(spec, model.scenario_binning(cfg))
    return out


@pytest.fixture(scope="session")
def reports(scenarios, compiled_scenarios):
    return {
        name: model.assess(cfg, compiled=compiled_scenarios[name])
        for name, cfg in scenarios.items()
    }
