"""Scenario description, the step loop, and replica orchestration."""

from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from . import kernels, rng
from ._jit import backend_name
from .errors import ConfigError
from .graphs import GraphSchedule
from .model import InteractionMode, Reason, TransactionOutcome, WealthState
from .stochastic import (
    MixingDistribution,
    PairSelectionDistribution,
    Regime,
    classify_regime,
    computed_regime,
    within_opinion_range,
)

logger = logging.getLogger(__name__)

CHUNK = 1 << 16


@dataclass(frozen=True)
class InitialMoney:
    """``explicit`` (values), ``iid_uniform`` (lo, hi) or ``iid_normal`` (mean, sd)."""

    kind: str
    values: Optional[tuple] = None
    lo: float = 0.0
    hi: float = 1.0
    mean: float = 0.0
    sd: float = 1.0

    def __post_init__(self):
        if self.kind == "explicit":
            if self.values is None:
                raise ConfigError("explicit initial money needs values")
            object.__setattr__(self, "values", tuple(self.values))
        elif self.kind == "iid_uniform":
            if not self.lo < self.hi:
                raise ConfigError("iid_uniform needs lo < hi")
        elif self.kind == "iid_normal":
            if not self.sd > 0:
                raise ConfigError("iid_normal needs sd > 0")
        else:
            raise ConfigError(f"unknown initial money kind {self.kind!r}")

    @classmethod
    def explicit(cls, values) -> "InitialMoney":
        return cls("explicit", values=tuple(values))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "InitialMoney":
        return cls("iid_uniform", lo=lo, hi=hi)

    @classmethod
    def normal(cls, mean: float, sd: float) -> "InitialMoney":
        return cls("iid_normal", mean=mean, sd=sd)

    def realize(self, n: int, seed: int) -> list:
        if self.kind == "explicit":
            if len(self.values) != n:
                raise ConfigError(f"{len(self.values)} initial values for n={n}")
            return list(self.values)
        gen = rng.generator(seed, rng.INITIAL)
        if self.kind == "iid_uniform":
            return gen.uniform(self.lo, self.hi, n).tolist()
        return gen.normal(self.mean, self.sd, n).tolist()


@dataclass(frozen=True)
class ScenarioConfig:
    n: int
    mode: InteractionMode
    initial_money: InitialMoney
    graph: GraphSchedule
    pairs: PairSelectionDistribution
    mu: MixingDistribution
    steps: int
    seed: int = 0
    credit_limits: Optional[tuple] = None
    consensus_epsilon: float = 1e-6
    stop_on_consensus: bool = False
    record_every: int = 1
    exact: bool = False

    def __post_init__(self):
        if self.credit_limits is not None:
            object.__setattr__(self, "credit_limits", tuple(float(d) for d in self.credit_limits))

    def limits(self) -> List[float]:
        if self.mode.is_opinion and self.credit_limits is None:
            return [math.inf] * self.n
        if self.credit_limits is None:
            raise ConfigError("money-transfer mode needs credit_limits")
        if len(self.credit_limits) == 1:
            return list(self.credit_limits) * self.n
        return list(self.credit_limits)

    def validate(self) -> Regime:
        """Structural checks shared by every suite; returns the mu regime."""
        if self.n < 2:
            raise ConfigError("need n >= 2")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        if not self.consensus_epsilon >= 0:
            raise ConfigError("consensus_epsilon must be >= 0")
        if self.graph.n != self.n:
            raise ConfigError(f"graph is on {self.graph.n} vertices, scenario has {self.n}")
        if any(max(p) >= self.n for p in self.pairs.support):
            raise ConfigError("pair support names an agent outside [0, n)")
        limits = self.limits()
        if len(limits) != self.n:
            raise ConfigError(f"{len(limits)} credit limits for n={self.n}")
        if any(not d > 0 for d in limits):
            raise ConfigError("credit limits must be > 0")
        regime = classify_regime(self.mu)
        if self.mode.is_opinion and not within_opinion_range(self.mu):
            raise ConfigError("opinion mode needs every mu draw in (0, 1/2]")
        if regime is Regime.EXPANSIVE and not self.mode.is_opinion:
            if not all(math.isfinite(d) for d in limits):
                raise ConfigError("expansive mu needs finite credit limits")
        if self.initial_money.kind == "explicit":
            self.initial_state()
        return regime

    def initial_state(self) -> WealthState:
        values = self.initial_money.realize(self.n, self.seed)
        limits = self.limits()
        for k, (m, d) in enumerate(zip(values, limits)):
            if m < -d:
                raise ConfigError(f"initial money of agent {k} ({m}) is below its floor {-d}")
        if self.mode.is_opinion and any(not 0 <= m <= 1 for m in values):
            raise ConfigError("opinion mode needs initial opinions in [0, 1]")
        return WealthState(values, limits, exact=self.exact)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return dataclasses.replace(self, seed=seed)


@dataclass(frozen=True)
class StepRecord:
    t: int
    pair: tuple
    edge_present: bool
    mu: float
    outcome: TransactionOutcome
    z: object
    z_drop_residual: object
    max_gap: object
    floor_gap: object = None
    sorted_money: Optional[np.ndarray] = None


_FLOAT_COLUMNS = (
    "delta", "z", "dz", "residual", "max_gap", "floor_gap",
    "pair_gap_before", "pair_gap_after", "sum_error", "floor_slack",
)


class StepLog:
    """Per-step audit columns; indexing yields :class:`StepRecord` views.

    ``t``, ``pair_i``, ``pair_j``, ``edge_present``, ``mu`` and ``code``
    describe the draw and its outcome; the remaining columns describe the
    state right after step ``t``. ``snapshots[r]`` is the sorted money after
    step ``snapshot_steps[r]``.
    """

    def __init__(self, columns: dict, snapshots: np.ndarray, snapshot_steps: np.ndarray):
        self.columns = columns
        self.snapshots = snapshots
        self.snapshot_steps = snapshot_steps
        self._snap_row = {int(t): r for r, t in enumerate(snapshot_steps)}

    def __getattr__(self, name):
        cols = self.__dict__.get("columns")
        if cols is not None and name in cols:
            return cols[name]
        raise AttributeError(name)

    def __len__(self):
        return len(self.columns["t"])

    def __getitem__(self, k: int) -> StepRecord:
        c = self.columns
        if k < 0:
            k += len(self)
        code = Reason(int(c["code"][k]))
        t = int(c["t"][k])
        row = self._snap_row.get(t)
        return StepRecord(
            t=t,
            pair=(int(c["pair_i"][k]), int(c["pair_j"][k])),
            edge_present=bool(c["edge_present"][k]),
            mu=float(c["mu"][k]),
            outcome=TransactionOutcome(code is Reason.APPLIED, code, c["delta"][k]),
            z=c["z"][k],
            z_drop_residual=c["residual"][k],
            max_gap=c["max_gap"][k],
            floor_gap=c["floor_gap"][k],
            sorted_money=None if row is None else self.snapshots[row],
        )

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    @property
    def applied(self) -> np.ndarray:
        return self.columns["code"] == Reason.APPLIED

    def z_before(self) -> np.ndarray:
        """Z entering each step."""
        z = self.columns["z"]
        out = np.empty_like(z)
        if len(z):
            out[0] = self.columns["z0"]
            out[1:] = z[:-1]
        return out


@dataclass
class Trajectory:
    config: ScenarioConfig
    records: StepLog
    initial_state: WealthState
    final_state: WealthState
    consensus_time: Optional[int]
    total_applied: int
    graph: GraphSchedule = None
    backend: str = field(default_factory=backend_name)

    def applied_in(self, t_start: int, t_end: Optional[int] = None) -> int:
        t = self.records.t
        mask = (t >= t_start) if t_end is None else (t >= t_start) & (t < t_end)
        return int(np.count_nonzero(self.records.applied & mask))


def _kernel(exact: bool):
    return kernels.py_run_steps if exact else kernels.run_steps


def floors_can_bind(config: ScenarioConfig) -> bool:
    """Contractive mu keeps both updated values between the old ones, so floors never bind."""
    return not config.mode.is_opinion and computed_regime(config.mu) is not Regime.CONTRACTIVE


def _draws(config: ScenarioConfig, graph: GraphSchedule, t0: int, t1: int):
    pi, pj = config.pairs.draw(config.seed, t0, t1)
    edge = graph.edge_present(t0, pi, pj, config.seed)
    mu = config.mu.draw(config.seed, t0, t1)
    return pi, pj, edge, mu


def _advance(y, off, ylo, total, zero, config: ScenarioConfig, t0: int, pi, pj, edge, mu, stop: bool):
    exact = config.exact
    out = kernels.allocate(len(pi), len(y), config.record_every, t0, exact)
    if exact:
        mu_k = np.array([Fraction(float(x)) for x in mu], dtype=object)
    else:
        mu_k = mu
    eps = config.mode.confidence_threshold
    eps = 0.0 if eps is None else eps
    if exact and config.mode.is_opinion:
        eps = Fraction(eps)
    done, rows, reached = _kernel(exact)(
        y, off, ylo, total, pi, pj, edge, mu_k,
        config.mode.is_opinion, eps, t0, config.record_every,
        config.consensus_epsilon, stop, zero,
        out["code"], out["delta"], out["z"], out["dz"], out["residual"],
        out["max_gap"], out["floor_gap"], out["pair_gap_before"], out["pair_gap_after"],
        out["sum_error"], out["floor_slack"], out["snaps"],
    )
    cols = {name: out[name][:done] for name in ("code",) + _FLOAT_COLUMNS}
    cols["t"] = np.arange(t0, t0 + done, dtype=np.int64)
    cols["pair_i"] = pi[:done]
    cols["pair_j"] = pj[:done]
    cols["edge_present"] = edge[:done]
    cols["mu"] = mu[:done]
    return cols, out["snaps"][:rows], bool(reached)


def _stats(y, off, ylo, state: WealthState):
    return kernels.py_state_stats(y, off, ylo, state.total, state.zero)


def step(state: WealthState, config: ScenarioConfig, t: int, graph: GraphSchedule = None) -> StepRecord:
    """One audited step at time ``t``; mutates ``state`` iff the outcome is Applied."""
    if t < 0:
        raise ValueError("t must be >= 0")
    graph = graph if graph is not None else config.graph.realize(config.seed)
    config = dataclasses.replace(config, exact=state.exact)
    pi, pj, edge, mu = _draws(config, graph, t, t + 1)
    y, off, ylo = kernels.headroom(
        state.money, state.credit_limits, state.exact, floors_can_bind(config)
    )
    z0 = _stats(y, off, ylo, state)[0]
    cols, snaps, _ = _advance(y, off, ylo, state.total, state.zero, config, t, pi, pj, edge, mu, False)
    cols["z0"] = z0
    if cols["code"][0] == Reason.APPLIED:
        for k in (int(pi[0]), int(pj[0])):
            state.money[k] = y[k] - off[k]
    steps = np.array([t]) if t % config.record_every == 0 else np.empty(0, dtype=np.int64)
    return StepLog(cols, snaps, steps)[0]


def _concat(parts: list, key: str, dtype):
    if not parts:
        return np.empty(0, dtype=dtype)
    return np.concatenate([p[key] for p in parts])


def run(config: ScenarioConfig) -> Trajectory:
    """Execute a scenario; a pure function of ``config`` (seed included)."""
    config.validate()
    graph = config.graph.realize(config.seed)
    state = config.initial_state()
    initial = state.copy()
    y, off, ylo = kernels.headroom(
        state.money, state.credit_limits, state.exact, floors_can_bind(config)
    )
    z0, gap0 = _stats(y, off, ylo, state)[:2]

    parts, snaps = [], []
    stop = config.stop_on_consensus
    if not (stop and gap0 <= config.consensus_epsilon):
        for t0 in range(0, config.steps, CHUNK):
            t1 = min(config.steps, t0 + CHUNK)
            pi, pj, edge, mu = _draws(config, graph, t0, t1)
            cols, sn, reached = _advance(
                y, off, ylo, state.total, state.zero, config, t0, pi, pj, edge, mu, stop
            )
            parts.append(cols)
            snaps.append(sn)
            if reached:
                break

    state.money[:] = y - off
    dt = object if config.exact else np.float64
    columns = {}
    for key, kdt in (("t", np.int64), ("pair_i", np.int64), ("pair_j", np.int64),
                     ("edge_present", np.bool_), ("mu", np.float64), ("code", np.int8)):
        columns[key] = _concat(parts, key, kdt)
    for key in _FLOAT_COLUMNS:
        columns[key] = _concat(parts, key, dt)
    columns["z0"] = z0
    columns["max_gap0"] = gap0
    t = columns["t"]
    snap_steps = t[t % config.record_every == 0]
    snapshots = (np.concatenate(snaps) if snaps else np.empty((0, config.n), dtype=dt))
    log = StepLog(columns, snapshots, snap_steps)

    if gap0 <= config.consensus_epsilon:
        consensus_time = 0
    else:
        hit = np.flatnonzero(columns["max_gap"] <= config.consensus_epsilon)
        consensus_time = int(t[hit[0]]) + 1 if len(hit) else None
    applied = int(np.count_nonzero(columns["code"] == Reason.APPLIED))
    logger.debug("seed %s: %d steps, %d applied", config.seed, len(t), applied)
    return Trajectory(config, log, initial, state, consensus_time, applied, graph)


def run_replicas(config: ScenarioConfig, seeds: Sequence[int], workers: int = 1) -> List[Trajectory]:
    """One trajectory per seed, in seed order; ``workers > 1`` fans out to processes."""
    configs = [config.with_seed(int(s)) for s in seeds]
    if workers <= 1 or len(configs) <= 1:
        return [run(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, configs))
