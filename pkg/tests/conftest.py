import pytest

from transferdyn.engine import InitialMoney, ScenarioConfig
from transferdyn.graphs import StaticGraph
from transferdyn.model import InteractionMode
from transferdyn.stochastic import PairSelectionDistribution, Uniform


def make_config(n=5, money=None, limits=(10.0,), mu=None, graph=None, pairs=None,
                mode=None, steps=200, seed=0, initial_money=None, **kw) -> ScenarioConfig:
    """Small money-transfer scenario with overridable parts."""
    return ScenarioConfig(
        n=n,
        mode=mode or InteractionMode.money(),
        initial_money=initial_money or (
            InitialMoney.explicit(money) if money is not None else InitialMoney.uniform(-1, 1)
        ),
        graph=graph or StaticGraph.complete(n),
        pairs=pairs or PairSelectionDistribution.all_pairs(n),
        mu=mu or Uniform(0.1, 0.9),
        steps=steps,
        seed=seed,
        credit_limits=limits,
        **kw,
    )


@pytest.fixture
def config_factory():
    return make_config
