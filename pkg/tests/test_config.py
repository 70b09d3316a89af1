import textwrap

import pytest
import yaml

from transferdyn.config import (
    SuiteName,
    builtin_configs,
    load,
    parse_and_validate,
    parse_seeds,
    serialize,
    suite_to_dict,
)
from transferdyn.errors import ConfigError

EQUAL = textwrap.dedent("""
    suite: equal_wealth
    n: 6
    mode: {kind: money_transfer}
    initial_money: {kind: iid_uniform, lo: -1, hi: 1}
    credit_limits: {kind: constant, value: 100}
    graph: {kind: complete}
    pairs: {kind: all_pairs}
    mu: {kind: uniform, lo: 0.1, hi: 0.9}
    steps: 1000
    seeds: "0..2"
    acceptance: {residual_tolerance: 1e-9}
""")


def _with(text, **changes):
    doc = yaml.safe_load(text)
    doc.update(changes)
    return yaml.safe_dump(doc)


def test_well_formed_suite_is_accepted():
    s = parse_and_validate(EQUAL)
    assert s.name is SuiteName.EQUAL_WEALTH
    assert s.seeds == (0, 1, 2)
    assert s.acceptance.residual_tolerance == 1e-9
    assert s.warnings == ()


def test_regime_mismatch_is_named():
    with pytest.raises(ConfigError) as err:
        parse_and_validate(_with(EQUAL, mu={"kind": "uniform", "lo": 1.0, "hi": 1.5}))
    assert any("sup|mu - 1/2| < 1/2" in v for v in err.value.violations)


def test_frozen_order_on_a_path_is_rejected():
    text = _with(EQUAL, suite="frozen_order",
                 graph={"kind": "static", "edges": [[k, k + 1] for k in range(5)]},
                 mu={"kind": "uniform", "lo": 1.0, "hi": 1.5})
    with pytest.raises(ConfigError) as err:
        parse_and_validate(text)
    assert any("complete infinitely often" in v for v in err.value.violations)


def test_incomplete_pair_support_is_rejected():
    with pytest.raises(ConfigError, match="cover every pair"):
        parse_and_validate(_with(EQUAL, pairs={"kind": "explicit", "support": [[0, 1]]}))


def test_custom_suite_only_warns():
    path = {"kind": "static", "edges": [[k, k + 1] for k in range(5)]}
    s = parse_and_validate(_with(EQUAL, suite="custom", graph=path, mu={"kind": "uniform", "lo": 1.0, "hi": 1.5}))
    assert any("complete infinitely often" in w for w in s.warnings)
    s = parse_and_validate(_with(EQUAL, suite="custom", mu={"kind": "uniform", "lo": 0.5, "hi": 1.5}))
    assert any("unclassified" in w for w in s.warnings)
    s = parse_and_validate(_with(EQUAL, suite="custom", mu={"kind": "constant", "value": 0.5}))
    assert any("point mass" in w for w in s.warnings)


def test_non_strict_named_suite_warns():
    s = parse_and_validate(_with(EQUAL, mu={"kind": "uniform", "lo": 1.0, "hi": 1.5}), strict=False)
    assert s.warnings and "contractive" in s.warnings[0]


@pytest.mark.parametrize("change", [
    {"nmber": 3},
    {"mode": {"kind": "money_transfer", "eps": 1}},
    {"graph": {"kind": "ring"}},
    {"initial_money": {"kind": "explicit", "values": [-500, 0, 0, 0, 0, 0]}},
    {"steps": 0},
    {"credit_limits": {"kind": "constant", "value": -1}},
])
def test_semantic_errors(change):
    with pytest.raises(ConfigError):
        parse_and_validate(_with(EQUAL, **change))


def test_syntax_error():
    with pytest.raises(ConfigError, match="syntax"):
        parse_and_validate("suite: [unclosed")


def test_parse_seeds():
    assert parse_seeds("3..5") == (3, 4, 5)
    assert parse_seeds(7) == (7,)
    assert parse_seeds([1, 9]) == (1, 9)
    for bad in ("5..3", "x", [], "1..b"):
        with pytest.raises(ConfigError):
            parse_seeds(bad)


@pytest.mark.parametrize("name", builtin_configs())
def test_round_trip(name):
    s = load(name)
    again = parse_and_validate(serialize(s))
    assert again == s
    assert suite_to_dict(again) == suite_to_dict(s)


def test_round_trip_of_every_schedule_kind():
    for graph in ({"kind": "periodic", "edge_sets": [[[0, 1], [1, 2]], [[2, 3], [3, 4], [4, 5]]]},
                  {"kind": "switching", "phases": [{"edges": [[0, 1]], "duration": 2},
                                                   {"edges": [[1, 2], [2, 3], [3, 4], [4, 5]], "duration": 1}]},
                  {"kind": "erdos_renyi", "p": 0.3}):
        s = parse_and_validate(_with(EQUAL, suite="custom", graph=graph))
        assert parse_and_validate(serialize(s)) == s


def test_bundled_suites_meet_their_hypotheses():
    assert {"equal_wealth", "frozen_order", "deffuant_opinion"} <= set(builtin_configs())
    fo = load("frozen_order")
    assert fo.config.n == 10 and fo.config.steps == 100_000 and len(fo.seeds) == 20
    assert fo.acceptance.min_passing_seeds == 18
    ew = load("equal_wealth")
    assert ew.config.n == 50 and ew.config.credit_limits == (1e6,)


def test_missing_file_or_name():
    with pytest.raises(ConfigError):
        load("no_such_suite")
