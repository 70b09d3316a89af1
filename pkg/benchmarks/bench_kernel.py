"""Compiled step kernel vs the pure-Python fallback on identical draws.

    python3 benchmarks/bench_kernel.py [--config equal_wealth] [--steps 20000]

Both kernels advance copies of the same state over the same pair, edge and
mu draws; every audit column must come out identical (not just close).
"""

import argparse
import time

import numpy as np

from transferdyn import kernels
from transferdyn._jit import NUMBA_ENABLED
from transferdyn.config import load
from transferdyn.engine import _draws, floors_can_bind


def _inputs(config_name: str, steps: int, seed: int):
    suite = load(config_name)
    cfg = suite.config.with_seed(seed)
    graph = cfg.graph.realize(cfg.seed)
    state = cfg.initial_state()
    y, off, ylo = kernels.headroom(state.money, state.credit_limits, False, floors_can_bind(cfg))
    pi, pj, edge, mu = _draws(cfg, graph, 0, steps)
    eps = cfg.mode.confidence_threshold or 0.0
    return cfg, state, (y, off, ylo), (pi, pj, edge, mu), eps


def _call(kernel, cfg, state, coords, draws, eps):
    y, off, ylo = (a.copy() for a in coords)
    pi, pj, edge, mu = draws
    out = kernels.allocate(len(pi), cfg.n, cfg.record_every, 0, False)
    start = time.perf_counter()
    done, rows, _ = kernel(
        y, off, ylo, state.total, pi, pj, edge, mu, cfg.mode.is_opinion, eps,
        0, cfg.record_every, cfg.consensus_epsilon, False, 0.0,
        out["code"], out["delta"], out["z"], out["dz"], out["residual"], out["max_gap"],
        out["floor_gap"], out["pair_gap_before"], out["pair_gap_after"], out["sum_error"],
        out["floor_slack"], out["snaps"],
    )
    elapsed = time.perf_counter() - start
    out["snaps"] = out["snaps"][:rows]
    out["y"] = y
    return elapsed, out


def bench(config_name: str = "equal_wealth", steps: int = 20_000, seed: int = 0, repeat: int = 3) -> dict:
    args = _inputs(config_name, steps, seed)
    _call(kernels.run_steps, *args)  # compile outside the timing
    jit_times, py_times = [], []
    for _ in range(repeat):
        t, jit_out = _call(kernels.run_steps, *args)
        jit_times.append(t)
    t, py_out = _call(kernels.py_run_steps, *args)
    py_times.append(t)
    identical = all(np.array_equal(jit_out[k], py_out[k]) for k in jit_out)
    return {
        "config": config_name,
        "steps": steps,
        "compiled": NUMBA_ENABLED,
        "jit_s": min(jit_times),
        "python_s": min(py_times),
        "speedup": min(py_times) / min(jit_times),
        "identical": identical,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="equal_wealth")
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    r = bench(args.config, args.steps, args.seed)
    if not r["compiled"]:
        print("numba disabled by TRANSFERDYN_DISABLE_NUMBA; both columns time the Python loop")
    print(f"{r['config']}: {r['steps']} steps")
    print(f"  numba   {r['jit_s'] * 1e3:10.2f} ms")
    print(f"  python  {r['python_s'] * 1e3:10.2f} ms")
    print(f"  speedup {r['speedup']:10.1f}x   identical outputs: {r['identical']}")
    raise SystemExit(0 if r["identical"] else 1)


if __name__ == "__main__":
    main()
