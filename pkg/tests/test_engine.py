import json
import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from conftest import make_config
from transferdyn import engine
from transferdyn.engine import InitialMoney, run, run_replicas, step
from transferdyn.errors import ConfigError
from transferdyn.graphs import ErdosRenyiGraph, StaticGraph
from transferdyn.model import InteractionMode, Reason
from transferdyn.stochastic import Constant, Mixture, PairSelectionDistribution, Uniform

TWO = PairSelectionDistribution([(0, 1)])


def test_single_step_midpoint():
    cfg = make_config(n=2, money=[0, 1], pairs=TWO, mu=Constant(0.5))
    s = cfg.initial_state()
    rec = step(s, cfg, 0)
    assert rec.outcome.reason is Reason.APPLIED
    assert list(s.money) == [0.5, 0.5]
    assert rec.z == 0 and rec.z_drop_residual == 0
    assert rec.outcome.delta == 0.5


def test_single_step_without_edge():
    cfg = make_config(n=2, money=[0, 1], pairs=TWO, mu=Constant(0.5), graph=StaticGraph(2, frozenset()))
    s = cfg.initial_state()
    rec = step(s, cfg, 0)
    assert rec.outcome.reason is Reason.NOT_SOCIALLY_CONNECTED
    assert list(s.money) == [0, 1] and rec.z == 2


def test_single_step_floor_rejection():
    cfg = make_config(n=2, money=[0, 1], pairs=TWO, mu=Constant(2.0), limits=(0.5,))
    s = cfg.initial_state()
    rec = step(s, cfg, 0)
    assert rec.outcome.reason is Reason.CREDIT_FLOOR_VIOLATED
    assert list(s.money) == [0, 1]


def test_two_agent_consensus_at_half():
    cfg = make_config(n=2, money=[0, 1], pairs=TWO, steps=1000, stop_on_consensus=True)
    tr = run(cfg)
    assert tr.consensus_time is not None
    assert np.all(np.abs(tr.final_state.money - 0.5) <= 1e-6)
    assert tr.consensus_time == len(tr.records)


def test_steps_one_gives_one_record():
    tr = run(make_config(steps=1))
    assert len(tr.records) == 1
    with pytest.raises(ConfigError):
        run(make_config(steps=0))


def test_run_is_replayable_and_applied_count():
    a, b = run(make_config(n=8, steps=3000, seed=5)), run(make_config(n=8, steps=3000, seed=5))
    for key, col in a.records.columns.items():
        assert np.array_equal(col, b.records.columns[key]), key
    assert np.array_equal(a.final_state.money, b.final_state.money)
    assert a.total_applied == int(np.sum(a.records.code == Reason.APPLIED))


def test_step_by_step_equals_run():
    cfg = make_config(n=6, steps=300, seed=2, graph=ErdosRenyiGraph(6, 0.5),
                      mu=Mixture(((0.5, Uniform(1.0, 1.5)), (0.5, Uniform(-0.5, -0.01)))), limits=(2.0,))
    tr = run(cfg)
    s = cfg.initial_state()
    for t in range(cfg.steps):
        rec = step(s, cfg, t)
        assert rec.outcome.reason is tr.records[t].outcome.reason
    assert np.allclose(s.money, tr.final_state.money, rtol=0, atol=1e-12)


def test_chunking_does_not_change_results(monkeypatch):
    cfg = make_config(n=7, steps=1000, seed=8, record_every=7)
    whole = run(cfg)
    monkeypatch.setattr(engine, "CHUNK", 97)
    pieces = run(cfg)
    for key, col in whole.records.columns.items():
        assert np.array_equal(col, pieces.records.columns[key]), key
    assert np.array_equal(whole.records.snapshots, pieces.records.snapshots)
    assert whole.records.snapshot_steps.tolist() == list(range(0, 1000, 7))


def test_contractive_max_gap_never_grows():
    tr = run(make_config(n=10, steps=5000, seed=1, graph=StaticGraph(10, frozenset((k, k + 1) for k in range(9)))))
    gaps = np.concatenate([[tr.records.columns["max_gap0"]], tr.records.max_gap])
    assert np.all(np.diff(gaps) <= 1e-15)


def test_expansive_growth_factor_and_floors():
    cfg = make_config(n=6, steps=5000, seed=3, limits=(3.0,),
                      mu=Mixture(((0.5, Uniform(1.0, 1.5)), (0.5, Uniform(-0.5, -0.01)))))
    tr = run(cfg)
    c = tr.records.columns
    app = tr.records.applied
    factor = np.abs(1 - 2 * c["mu"][app])
    assert np.allclose(c["pair_gap_after"][app], factor * c["pair_gap_before"][app], rtol=1e-9, atol=0)
    assert np.all(tr.final_state.money >= -3.0)
    assert np.all(c["floor_slack"] >= 0)


def test_opinion_mode_conserves_and_respects_threshold():
    cfg = make_config(n=10, mode=InteractionMode.opinion(0.2), limits=None, mu=Uniform(0.1, 0.5),
                      initial_money=InitialMoney.uniform(0, 1), steps=4000)
    tr = run(cfg)
    c = tr.records.columns
    assert np.all(c["pair_gap_before"][tr.records.applied] <= 0.2)
    assert abs(tr.final_state.money.sum() - tr.initial_state.total) < 1e-12


def test_exact_run_has_zero_residual_and_sum_error():
    cfg = make_config(n=5, steps=200, seed=4, exact=True,
                      mu=Mixture(((0.5, Uniform(0.05, 0.95)), (0.5, Uniform(1.0, 2.0)))))
    tr = run(cfg)
    assert isinstance(tr.final_state.money[0], Fraction)
    assert all(r == 0 for r in tr.records.residual)
    assert all(e == 0 for e in tr.records.sum_error)
    assert sum(tr.final_state.money) == tr.initial_state.total


def test_replicas_match_sequential_runs():
    cfg = make_config(n=6, steps=500)
    reps = run_replicas(cfg, [3, 1, 3], workers=2)
    assert [r.config.seed for r in reps] == [3, 1, 3]
    assert np.array_equal(reps[0].records.z, reps[2].records.z)
    alone = run(cfg.with_seed(1))
    assert np.array_equal(reps[1].records.z, alone.records.z)


def test_config_rejections():
    with pytest.raises(ConfigError):
        make_config(n=2, money=[-20, 1]).validate()
    with pytest.raises(ConfigError):
        make_config(mu=Uniform(1.0, 1.5), limits=(float("inf"),)).validate()
    with pytest.raises(ConfigError):
        make_config(mode=InteractionMode.opinion(0.5), limits=None, mu=Uniform(0.1, 0.9)).validate()
    with pytest.raises(ConfigError):
        make_config(record_every=0).validate()
    with pytest.raises(ConfigError):
        make_config(limits=None).validate()


_SNIPPET = """
import json, sys
sys.path.insert(0, {tests!r})
from conftest import make_config
from transferdyn.engine import run
from transferdyn.stochastic import Mixture, Uniform
from transferdyn._jit import backend_name
tr = run(make_config(n=9, steps=4000, seed=6, limits=(4.0,), record_every=10,
                     mu=Mixture(((0.5, Uniform(0.05, 0.95)), (0.5, Uniform(1.0, 2.0))))))
c = tr.records.columns
print(json.dumps({{"backend": backend_name(), "z": c["z"].tolist(), "code": c["code"].tolist(),
                  "money": tr.final_state.money.tolist(), "snaps": tr.records.snapshots.tolist()}}))
"""


def _run_backend(disable: bool) -> dict:
    env = dict(os.environ)
    env.pop("TRANSFERDYN_DISABLE_NUMBA", None)
    if disable:
        env["TRANSFERDYN_DISABLE_NUMBA"] = "1"
    code = _SNIPPET.format(tests=os.path.dirname(__file__))
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def test_numba_and_fallback_agree_bit_for_bit():
    fast, slow = _run_backend(False), _run_backend(True)
    assert slow["backend"] == "python"
    assert fast["backend"] == "numba"
    for key in ("z", "code", "money", "snaps"):
        assert fast[key] == slow[key], key
