"""Scenario files: parsing, hypothesis validation and serialization.

A scenario file is one YAML mapping. Unknown keys are errors. See
``configs/*.yaml`` in this package for complete examples; the schema is::

    suite: equal_wealth | frozen_order | deffuant_opinion | custom
    n: int
    mode: {kind: money_transfer} | {kind: bounded_confidence, confidence_threshold: x}
    initial_money: {kind: explicit, values: [...]}
                 | {kind: iid_uniform, lo: x, hi: x} | {kind: iid_normal, mean: x, sd: x}
    credit_limits: {kind: constant, value: d} | {kind: explicit, values: [...]}
    graph: {kind: complete} | {kind: static, edges: [[i, j], ...]}
         | {kind: periodic, edge_sets: [[[i, j], ...], ...]}
         | {kind: switching, phases: [{edges: [...], duration: k}, ...]}
         | {kind: erdos_renyi, p: x} | {kind: connected_erdos_renyi, p: x}
    pairs: {kind: all_pairs} | {kind: explicit, support: [[i, j], ...], weights: [...]}
    mu: {kind: uniform, lo: x, hi: x} | {kind: constant, value: x}
      | {kind: mixture, components: [{weight: w, law: {...}}, ...]}
      | {kind: cycle, laws: [{...}, ...]}
      (any mu mapping may carry regime: contractive | expansive | unclassified)
    steps: int
    seed: int
    seeds: [int, ...] | "a..b"
    consensus_epsilon: x
    stop_on_consensus: bool
    record_every: int
    exact: bool
    acceptance: {residual_tolerance, consensus_epsilon, tail_fraction,
                 rank_tolerance, growth_tolerance, min_passing_seeds,
                 expect_consensus, max_applied}
"""

from __future__ import annotations

import dataclasses
import enum
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import List, Optional, Tuple, Union

import yaml

from .engine import InitialMoney, ScenarioConfig
from .errors import ConfigError
from .graphs import (
    ConnectedErdosRenyi,
    ErdosRenyiGraph,
    GraphSchedule,
    PeriodicGraph,
    StaticGraph,
    SwitchingGraph,
    canonical_edges,
    is_complete,
)
from .model import InteractionMode, ModeKind
from .stochastic import (
    Constant,
    Cycle,
    Mixture,
    MixingDistribution,
    PairSelectionDistribution,
    Regime,
    Uniform,
    classify_regime,
    covers_all_pairs,
)

logger = logging.getLogger(__name__)


class SuiteName(enum.Enum):
    EQUAL_WEALTH = "equal_wealth"
    FROZEN_ORDER = "frozen_order"
    DEFFUANT_OPINION = "deffuant_opinion"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Acceptance:
    residual_tolerance: float = 1e-9
    consensus_epsilon: float = 1e-6
    tail_fraction: float = 0.5
    rank_tolerance: float = 1e-12
    growth_tolerance: float = 1e-9
    min_passing_seeds: Optional[int] = None
    expect_consensus: Optional[bool] = None
    max_applied: Optional[int] = None


@dataclass(frozen=True)
class ScenarioSuite:
    name: SuiteName
    config: ScenarioConfig
    seeds: Tuple[int, ...]
    acceptance: Acceptance = Acceptance()
    warnings: Tuple[str, ...] = field(default=(), compare=False)

    def with_seeds(self, seeds) -> "ScenarioSuite":
        return dataclasses.replace(self, seeds=tuple(int(s) for s in seeds))

    def with_config(self, **changes) -> "ScenarioSuite":
        return dataclasses.replace(self, config=dataclasses.replace(self.config, **changes))

    @property
    def expects_consensus(self) -> bool:
        if self.acceptance.expect_consensus is not None:
            return self.acceptance.expect_consensus
        return self.name in (SuiteName.EQUAL_WEALTH, SuiteName.DEFFUANT_OPINION)


# --------------------------------------------------------------------- parsing


def _keys(d, where, required=(), optional=()):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(d).__name__}")
    unknown = set(d) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")
    missing = [k for k in required if k not in d]
    if missing:
        raise ConfigError(f"{where}: missing key(s) {missing}")
    return d


def _edge_list(raw, n, where):
    if not isinstance(raw, list):
        raise ConfigError(f"{where}: expected a list of [i, j] pairs")
    return canonical_edges(raw, n)


def parse_seeds(raw) -> Tuple[int, ...]:
    """``[0, 3, 7]``, ``"0..19"`` (inclusive) or a single int."""
    if isinstance(raw, int):
        return (raw,)
    if isinstance(raw, str):
        if ".." not in raw:
            raise ConfigError(f"seed range {raw!r} is not of the form a..b")
        a, b = raw.split("..", 1)
        try:
            lo, hi = int(a), int(b)
        except ValueError:
            raise ConfigError(f"seed range {raw!r} is not of the form a..b") from None
        if hi < lo:
            raise ConfigError(f"empty seed range {raw!r}")
        return tuple(range(lo, hi + 1))
    if isinstance(raw, list) and all(isinstance(s, int) for s in raw) and raw:
        return tuple(raw)
    raise ConfigError(f"cannot read seeds from {raw!r}")


def _mode(raw) -> InteractionMode:
    _keys(raw, "mode", ["kind"], ["confidence_threshold"])
    try:
        kind = ModeKind(raw["kind"])
    except ValueError:
        raise ConfigError(f"mode: unknown kind {raw['kind']!r}") from None
    try:
        return InteractionMode(kind, raw.get("confidence_threshold"))
    except ValueError as exc:
        raise ConfigError(f"mode: {exc}") from None


def _initial(raw) -> InitialMoney:
    kind = raw.get("kind") if isinstance(raw, dict) else None
    if kind == "explicit":
        _keys(raw, "initial_money", ["kind", "values"])
        return InitialMoney.explicit(raw["values"])
    if kind == "iid_uniform":
        _keys(raw, "initial_money", ["kind", "lo", "hi"])
        return InitialMoney.uniform(float(raw["lo"]), float(raw["hi"]))
    if kind == "iid_normal":
        _keys(raw, "initial_money", ["kind", "mean", "sd"])
        return InitialMoney.normal(float(raw["mean"]), float(raw["sd"]))
    raise ConfigError(f"initial_money: unknown kind {kind!r}")


def _limits(raw, n):
    if raw is None:
        return None
    kind = raw.get("kind") if isinstance(raw, dict) else None
    if kind == "constant":
        _keys(raw, "credit_limits", ["kind", "value"])
        return (float(raw["value"]),)
    if kind == "explicit":
        _keys(raw, "credit_limits", ["kind", "values"])
        return tuple(float(v) for v in raw["values"])
    raise ConfigError(f"credit_limits: unknown kind {kind!r}")


def _graph(raw, n) -> GraphSchedule:
    kind = raw.get("kind") if isinstance(raw, dict) else None
    if kind == "complete":
        _keys(raw, "graph", ["kind"])
        return StaticGraph.complete(n)
    if kind == "static":
        _keys(raw, "graph", ["kind", "edges"])
        return StaticGraph(n, _edge_list(raw["edges"], n, "graph.edges"))
    if kind == "periodic":
        _keys(raw, "graph", ["kind", "edge_sets"])
        return PeriodicGraph(n, tuple(_edge_list(s, n, "graph.edge_sets") for s in raw["edge_sets"]))
    if kind == "switching":
        _keys(raw, "graph", ["kind", "phases"])
        phases = []
        for ph in raw["phases"]:
            _keys(ph, "graph.phases[]", ["edges", "duration"])
            phases.append((_edge_list(ph["edges"], n, "graph.phases.edges"), int(ph["duration"])))
        return SwitchingGraph(n, tuple(phases))
    if kind == "erdos_renyi":
        _keys(raw, "graph", ["kind", "p"])
        return ErdosRenyiGraph(n, float(raw["p"]))
    if kind == "connected_erdos_renyi":
        _keys(raw, "graph", ["kind", "p"], ["max_attempts"])
        return ConnectedErdosRenyi(n, float(raw["p"]), int(raw.get("max_attempts", 10_000)))
    raise ConfigError(f"graph: unknown kind {kind!r}")


def _pairs(raw, n) -> PairSelectionDistribution:
    kind = raw.get("kind") if isinstance(raw, dict) else None
    if kind == "all_pairs":
        _keys(raw, "pairs", ["kind"])
        return PairSelectionDistribution.all_pairs(n)
    if kind == "explicit":
        _keys(raw, "pairs", ["kind", "support"], ["weights"])
        return PairSelectionDistribution(raw["support"], raw.get("weights"), n=n)
    raise ConfigError(f"pairs: unknown kind {kind!r}")


def _regime(raw):
    if raw is None:
        return None
    try:
        return Regime(raw)
    except ValueError:
        raise ConfigError(f"mu.regime: unknown regime {raw!r}") from None


def _mu(raw, where="mu") -> MixingDistribution:
    kind = raw.get("kind") if isinstance(raw, dict) else None
    if kind == "uniform":
        _keys(raw, where, ["kind", "lo", "hi"], ["regime"])
        return Uniform(float(raw["lo"]), float(raw["hi"]), _regime(raw.get("regime")))
    if kind == "constant":
        _keys(raw, where, ["kind", "value"], ["regime"])
        return Constant(float(raw["value"]), _regime(raw.get("regime")))
    if kind == "mixture":
        _keys(raw, where, ["kind", "components"], ["regime"])
        comps = []
        for c in raw["components"]:
            _keys(c, f"{where}.components[]", ["weight", "law"])
            comps.append((float(c["weight"]), _mu(c["law"], f"{where}.components.law")))
        return Mixture(tuple(comps), _regime(raw.get("regime")))
    if kind == "cycle":
        _keys(raw, where, ["kind", "laws"], ["regime"])
        return Cycle(tuple(_mu(x, f"{where}.laws[]") for x in raw["laws"]), _regime(raw.get("regime")))
    raise ConfigError(f"{where}: unknown kind {kind!r}")


def _coerce_acceptance(key, value):
    if value is None:
        return None
    if key in ("min_passing_seeds", "max_applied"):
        return int(value)
    if key == "expect_consensus":
        return bool(value)
    return float(value)  # PyYAML reads "1e-9" as a string


_TOP_REQUIRED = ["suite", "n", "mode", "initial_money", "graph", "pairs", "mu", "steps"]
_TOP_OPTIONAL = [
    "credit_limits", "seed", "seeds", "consensus_epsilon", "stop_on_consensus",
    "record_every", "exact", "acceptance",
]


def suite_from_dict(doc: dict, strict: Optional[bool] = None) -> ScenarioSuite:
    """Build and validate a suite. ``strict`` overrides the per-suite default."""
    _keys(doc, "scenario", _TOP_REQUIRED, _TOP_OPTIONAL)
    try:
        name = SuiteName(doc["suite"])
    except ValueError:
        raise ConfigError(f"suite: unknown suite {doc['suite']!r}") from None
    n = doc["n"]
    if not isinstance(n, int) or n < 2:
        raise ConfigError("n must be an integer >= 2")
    seed = int(doc.get("seed", 0))
    seeds = parse_seeds(doc["seeds"]) if "seeds" in doc else (seed,)
    acc_raw = doc.get("acceptance", {}) or {}
    _keys(acc_raw, "acceptance", [], [f.name for f in dataclasses.fields(Acceptance)])
    acceptance = Acceptance(**{k: _coerce_acceptance(k, v) for k, v in acc_raw.items()})
    config = ScenarioConfig(
        n=n,
        mode=_mode(doc["mode"]),
        initial_money=_initial(doc["initial_money"]),
        graph=_graph(doc["graph"], n),
        pairs=_pairs(doc["pairs"], n),
        mu=_mu(doc["mu"]),
        steps=int(doc["steps"]),
        seed=seed,
        credit_limits=_limits(doc.get("credit_limits"), n),
        consensus_epsilon=float(doc.get("consensus_epsilon", 1e-6)),
        stop_on_consensus=bool(doc.get("stop_on_consensus", False)),
        record_every=int(doc.get("record_every", 1)),
        exact=bool(doc.get("exact", False)),
    )
    return validate_suite(ScenarioSuite(name, config, seeds, acceptance), strict)


def parse_and_validate(text: str, strict: Optional[bool] = None) -> ScenarioSuite:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"syntax error: {exc}") from None
    return suite_from_dict(doc, strict)


def builtin_configs() -> List[str]:
    root = resources.files("transferdyn") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load(source: Union[str, Path], strict: Optional[bool] = None) -> ScenarioSuite:
    """Read a scenario from a path, or by name from the bundled ``configs/``."""
    path = Path(source)
    if path.exists():
        return parse_and_validate(path.read_text(), strict)
    name = str(source)
    if name in builtin_configs():
        text = (resources.files("transferdyn") / "configs" / f"{name}.yaml").read_text()
        return parse_and_validate(text, strict)
    raise ConfigError(f"no such scenario file or bundled config: {source}")


# ------------------------------------------------------------------ validation


def hypothesis_violations(suite: ScenarioSuite) -> List[str]:
    """Broken convergence hypotheses for the suite's name.

    Custom money-transfer suites are measured against the equal-wealth or
    frozen-order hypotheses according to their mu regime.
    """
    cfg = suite.config
    regime = classify_regime(cfg.mu)
    out = []
    if suite.name is SuiteName.EQUAL_WEALTH:
        if cfg.mode.is_opinion:
            out.append("equal-wealth suite runs the money-transfer rule, not bounded confidence")
        if regime is not Regime.CONTRACTIVE:
            out.append(
                f"equal-wealth suite requires sup|mu - 1/2| < 1/2 (contractive mu); got {regime.value}"
            )
        if not covers_all_pairs(cfg.pairs, cfg.n):
            out.append("equal-wealth suite requires the pair support to cover every pair of agents")
        if not cfg.graph.connected_infinitely_often():
            out.append("equal-wealth suite requires a social graph that is connected infinitely often")
    elif suite.name is SuiteName.FROZEN_ORDER:
        if cfg.mode.is_opinion:
            out.append("frozen-order suite runs the money-transfer rule, not bounded confidence")
        if regime is not Regime.EXPANSIVE:
            out.append(
                f"frozen-order suite requires inf|mu - 1/2| >= 1/2 (expansive mu); got {regime.value}"
            )
        if not covers_all_pairs(cfg.pairs, cfg.n):
            out.append("frozen-order suite requires the pair support to cover every pair of agents")
        if not cfg.graph.complete_infinitely_often():
            out.append("frozen-order suite requires a social graph that is complete infinitely often")
        if cfg.credit_limits is None or not all(d < float("inf") for d in cfg.limits()):
            out.append("frozen-order suite requires finite credit limits")
    elif suite.name is SuiteName.DEFFUANT_OPINION:
        if not cfg.mode.is_opinion:
            out.append("deffuant-opinion suite requires bounded-confidence mode")
    elif not cfg.mode.is_opinion:
        # custom money-transfer runs: check against whichever result the mu regime points to
        if regime is Regime.CONTRACTIVE:
            out = hypothesis_violations(dataclasses.replace(suite, name=SuiteName.EQUAL_WEALTH))
        elif regime is Regime.EXPANSIVE:
            out = hypothesis_violations(dataclasses.replace(suite, name=SuiteName.FROZEN_ORDER))
        else:
            out.append("mu regime is unclassified, so neither convergence result applies")
    return out


def validate_suite(suite: ScenarioSuite, strict: Optional[bool] = None) -> ScenarioSuite:
    """Structural checks always raise; hypothesis checks raise for named suites, warn for custom."""
    cfg = suite.config
    cfg.validate()
    if not cfg.initial_money.kind == "explicit":
        # random initial vectors are checked per seed
        for s in suite.seeds:
            cfg.with_seed(s).initial_state()
    notes = []
    if not cfg.mu.is_continuous:
        notes.append("mu law has a point mass; the model assumes a continuous mu")
    violations = hypothesis_violations(suite)
    strict = (suite.name is not SuiteName.CUSTOM) if strict is None else strict
    if violations and strict:
        raise ConfigError("; ".join(violations), violations)
    notes.extend(violations)
    for w in notes:
        logger.warning(w)
    return dataclasses.replace(suite, warnings=tuple(notes))


# --------------------------------------------------------------- serialization


def _edges_out(edges) -> list:
    return [list(e) for e in sorted(edges)]


def _graph_out(g: GraphSchedule) -> dict:
    if isinstance(g, StaticGraph):
        if is_complete(g.edges, g.n):
            return {"kind": "complete"}
        return {"kind": "static", "edges": _edges_out(g.edges)}
    if isinstance(g, PeriodicGraph):
        return {"kind": "periodic", "edge_sets": [_edges_out(s) for s in g.edge_sets]}
    if isinstance(g, SwitchingGraph):
        return {
            "kind": "switching",
            "phases": [{"edges": _edges_out(s), "duration": int(d)} for s, d in g.phases],
        }
    if isinstance(g, ErdosRenyiGraph):
        return {"kind": "erdos_renyi", "p": g.p}
    if isinstance(g, ConnectedErdosRenyi):
        return {"kind": "connected_erdos_renyi", "p": g.p, "max_attempts": g.max_attempts}
    raise TypeError(f"cannot serialize graph {g!r}")


def _mu_out(d: MixingDistribution) -> dict:
    if isinstance(d, Uniform):
        out = {"kind": "uniform", "lo": d.lo, "hi": d.hi}
    elif isinstance(d, Constant):
        out = {"kind": "constant", "value": d.value}
    elif isinstance(d, Mixture):
        out = {"kind": "mixture",
               "components": [{"weight": w, "law": _mu_out(x)} for w, x in d.components]}
    elif isinstance(d, Cycle):
        out = {"kind": "cycle", "laws": [_mu_out(x) for x in d.laws]}
    else:
        raise TypeError(f"cannot serialize mu law {d!r}")
    if d.declared_regime is not None:
        out["regime"] = d.declared_regime.value
    return out


def _pairs_out(p: PairSelectionDistribution, n: int) -> dict:
    if p == PairSelectionDistribution.all_pairs(n):
        return {"kind": "all_pairs"}
    return {"kind": "explicit", "support": [list(x) for x in p.support], "weights": list(p.weights)}


def suite_to_dict(suite: ScenarioSuite) -> dict:
    cfg = suite.config
    doc = {
        "suite": suite.name.value,
        "n": cfg.n,
        "mode": {"kind": cfg.mode.kind.value},
    }
    if cfg.mode.is_opinion:
        doc["mode"]["confidence_threshold"] = cfg.mode.confidence_threshold
    im = cfg.initial_money
    if im.kind == "explicit":
        doc["initial_money"] = {"kind": "explicit", "values": list(im.values)}
    elif im.kind == "iid_uniform":
        doc["initial_money"] = {"kind": "iid_uniform", "lo": im.lo, "hi": im.hi}
    else:
        doc["initial_money"] = {"kind": "iid_normal", "mean": im.mean, "sd": im.sd}
    if cfg.credit_limits is not None:
        if len(cfg.credit_limits) == 1:
            doc["credit_limits"] = {"kind": "constant", "value": cfg.credit_limits[0]}
        else:
            doc["credit_limits"] = {"kind": "explicit", "values": list(cfg.credit_limits)}
    doc.update(
        graph=_graph_out(cfg.graph),
        pairs=_pairs_out(cfg.pairs, cfg.n),
        mu=_mu_out(cfg.mu),
        steps=cfg.steps,
        seed=cfg.seed,
        seeds=list(suite.seeds),
        consensus_epsilon=cfg.consensus_epsilon,
        stop_on_consensus=cfg.stop_on_consensus,
        record_every=cfg.record_every,
        exact=cfg.exact,
        acceptance={k: v for k, v in dataclasses.asdict(suite.acceptance).items() if v is not None},
    )
    return doc


def serialize(suite: ScenarioSuite) -> str:
    return yaml.safe_dump(suite_to_dict(suite), sort_keys=False, default_flow_style=None)
