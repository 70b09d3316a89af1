"""Time-varying social graphs and structural predicates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import rng
from .errors import ConfigError

Edge = Tuple[int, int]


def canonical_edges(edges: Iterable[Sequence[int]], n: int) -> frozenset:
    """Unordered pairs as ``(min, max)``; self-loops, bad indices and duplicates raise."""
    out = set()
    for e in edges:
        if len(e) != 2:
            raise ConfigError(f"edge {e!r} is not a pair")
        i, j = int(e[0]), int(e[1])
        if i == j:
            raise ConfigError(f"self-loop ({i}, {j})")
        if not (0 <= i < n and 0 <= j < n):
            raise ConfigError(f"edge ({i}, {j}) out of range for n={n}")
        pair = (min(i, j), max(i, j))
        if pair in out:
            raise ConfigError(f"duplicate edge {pair}")
        out.add(pair)
    return frozenset(out)


def complete_edges(n: int) -> frozenset:
    return frozenset((i, j) for i in range(n) for j in range(i + 1, n))


def pair_index(i, j, n):
    """Position of the unordered pair in row-major upper-triangle order (vectorizes)."""
    lo = np.minimum(i, j)
    hi = np.maximum(i, j)
    return lo * n - lo * (lo + 1) // 2 + (hi - lo - 1)


def components(edges: Iterable[Edge], n: int) -> List[frozenset]:
    edges = list(edges)
    if edges:
        rows, cols = np.array(edges, dtype=np.int64).T
    else:
        rows = cols = np.empty(0, dtype=np.int64)
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    count, labels = connected_components(graph, directed=False)
    groups = [[] for _ in range(count)]
    for v, lab in enumerate(labels):
        groups[lab].append(v)
    return [frozenset(g) for g in groups]


def is_connected(edges: Iterable[Edge], n: int) -> bool:
    return len(components(edges, n)) == 1


def is_complete(edges: Iterable[Edge], n: int) -> bool:
    return len(set(edges)) == n * (n - 1) // 2


def _adjacency(edges, n) -> np.ndarray:
    adj = np.zeros((n, n), dtype=np.bool_)
    for i, j in edges:
        adj[i, j] = adj[j, i] = True
    return adj


class GraphSchedule:
    """Base for E(t). Subclasses give ``edges_at`` and a vectorized ``edge_present``."""

    n: int
    kind: str

    def edges_at(self, t: int, seed: int = 0) -> frozenset:
        raise NotImplementedError

    def edge_present(self, t0: int, pi: np.ndarray, pj: np.ndarray, seed: int = 0) -> np.ndarray:
        """Whether ``(pi[k], pj[k])`` is an edge of E(t0 + k)."""
        raise NotImplementedError

    def realize(self, seed: int) -> "GraphSchedule":
        """Schedule with any per-seed randomness resolved up front."""
        return self

    # --- hypothesis helpers used by the validator
    def connected_infinitely_often(self) -> bool:
        raise NotImplementedError

    def complete_infinitely_often(self) -> bool:
        raise NotImplementedError


class _DeterministicSchedule(GraphSchedule):
    """Cycles through a fixed list of edge sets, one set per ``_phase(t)``."""

    def _sets(self) -> List[frozenset]:
        raise NotImplementedError

    def _phase(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def edges_at(self, t, seed=0):
        return self._sets()[int(self._phase(np.asarray([t]))[0])]

    def edge_present(self, t0, pi, pj, seed=0):
        sets = self._sets()
        adj = np.stack([_adjacency(s, self.n) for s in sets])
        phase = self._phase(np.arange(t0, t0 + len(pi)))
        return adj[phase, pi, pj]

    def connected_infinitely_often(self):
        return any(is_connected(s, self.n) for s in self._sets())

    def complete_infinitely_often(self):
        return any(is_complete(s, self.n) for s in self._sets())


@dataclass(frozen=True)
class StaticGraph(_DeterministicSchedule):
    n: int
    edges: frozenset
    kind: str = field(default="static", init=False)

    @classmethod
    def complete(cls, n: int) -> "StaticGraph":
        return cls(n, complete_edges(n))

    def _sets(self):
        return [self.edges]

    def _phase(self, t):
        return np.zeros(len(t), dtype=np.int64)

    def edge_present(self, t0, pi, pj, seed=0):
        return _adjacency(self.edges, self.n)[pi, pj]


@dataclass(frozen=True)
class PeriodicGraph(_DeterministicSchedule):
    n: int
    edge_sets: Tuple[frozenset, ...]
    kind: str = field(default="periodic", init=False)

    def __post_init__(self):
        if not self.edge_sets:
            raise ConfigError("periodic schedule needs at least one edge set")

    def _sets(self):
        return list(self.edge_sets)

    def _phase(self, t):
        return np.asarray(t) % len(self.edge_sets)


@dataclass(frozen=True)
class SwitchingGraph(_DeterministicSchedule):
    """Edge sets held for given durations, the whole sequence repeating."""

    n: int
    phases: Tuple[Tuple[frozenset, int], ...]
    kind: str = field(default="switching", init=False)

    def __post_init__(self):
        if not self.phases:
            raise ConfigError("switching schedule needs at least one phase")
        if any(int(d) < 1 for _, d in self.phases):
            raise ConfigError("switching durations must be positive")

    def _sets(self):
        return [s for s, _ in self.phases]

    def _phase(self, t):
        bounds = np.cumsum([d for _, d in self.phases])
        return np.searchsorted(bounds, np.asarray(t) % bounds[-1], side="right")


@dataclass(frozen=True)
class ErdosRenyiGraph(GraphSchedule):
    """Fresh G(n, p) every step; step ``t`` reads its own counter range."""

    n: int
    p: float
    kind: str = field(default="erdos_renyi", init=False)

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"edge probability {self.p} outside [0, 1]")

    @property
    def blocks_per_step(self) -> int:
        return max(1, math.ceil(self.n * (self.n - 1) // 2 / rng.DOUBLES_PER_BLOCK))

    def _uniforms(self, t0, t1, seed):
        b = self.blocks_per_step
        u = rng.generator(seed, rng.GRAPH, t0 * b).random((t1 - t0, b * rng.DOUBLES_PER_BLOCK))
        return u

    def edges_at(self, t, seed=0):
        m = self.n * (self.n - 1) // 2
        hit = self._uniforms(t, t + 1, seed)[0, :m] < self.p
        iu, ju = np.triu_indices(self.n, k=1)
        return frozenset(zip(iu[hit].tolist(), ju[hit].tolist()))

    def edge_present(self, t0, pi, pj, seed=0):
        out = np.empty(len(pi), dtype=np.bool_)
        cols = pair_index(pi, pj, self.n)
        width = self.blocks_per_step * rng.DOUBLES_PER_BLOCK
        chunk = max(1, (1 << 21) // width)
        for a in range(0, len(pi), chunk):
            b = min(len(pi), a + chunk)
            u = self._uniforms(t0 + a, t0 + b, seed)
            out[a:b] = u[np.arange(b - a), cols[a:b]] < self.p
        return out

    def connected_infinitely_often(self):
        return self.p > 0 or self.n < 2

    def complete_infinitely_often(self):
        return self.p > 0


@dataclass(frozen=True)
class ConnectedErdosRenyi(GraphSchedule):
    """One static G(n, p) per seed, redrawn until connected."""

    n: int
    p: float
    max_attempts: int = 10_000
    kind: str = field(default="connected_erdos_renyi", init=False)

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ConfigError(f"edge probability {self.p} must be in (0, 1]")

    def realize(self, seed):
        gen = rng.generator(seed, rng.GRAPH_STATIC)
        iu, ju = np.triu_indices(self.n, k=1)
        for _ in range(self.max_attempts):
            hit = gen.random(len(iu)) < self.p
            edges = frozenset(zip(iu[hit].tolist(), ju[hit].tolist()))
            if is_connected(edges, self.n):
                return StaticGraph(self.n, edges)
        raise ConfigError(f"no connected G({self.n}, {self.p}) in {self.max_attempts} draws")

    def edges_at(self, t, seed=0):
        return self.realize(seed).edges

    def edge_present(self, t0, pi, pj, seed=0):
        return self.realize(seed).edge_present(t0, pi, pj)

    def connected_infinitely_often(self):
        return True

    def complete_infinitely_often(self):
        return self.p == 1.0


def edges_at(schedule: GraphSchedule, t: int, seed: int = 0) -> frozenset:
    if t < 0:
        raise ValueError("t must be nonnegative")
    return schedule.edges_at(t, seed)
