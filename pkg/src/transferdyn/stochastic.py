"""Pair selection law, mixing-parameter laws and their regime classification."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from . import rng
from .errors import ConfigError
from .graphs import canonical_edges


class Regime(enum.Enum):
    CONTRACTIVE = "contractive"  # sup |mu - 1/2| < 1/2
    EXPANSIVE = "expansive"  # inf |mu - 1/2| >= 1/2
    UNCLASSIFIED = "unclassified"


@dataclass(frozen=True, init=False)
class PairSelectionDistribution:
    support: Tuple[Tuple[int, int], ...]
    weights: Tuple[float, ...]

    def __init__(self, support, weights=None, n: Optional[int] = None):
        support = [tuple(int(x) for x in p) for p in support]
        if not support:
            raise ConfigError("pair support is empty")
        bound = n if n is not None else 1 + max(max(p) for p in support)
        canonical_edges(support, bound)  # rejects dupes and self-pairs
        pairs = tuple((min(p), max(p)) for p in support)
        if weights is None:
            weights = [1.0] * len(pairs)
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (len(pairs),) or not np.all(w > 0) or not np.all(np.isfinite(w)):
            raise ConfigError("pair weights must be positive and match the support")
        w = w / w.sum()
        object.__setattr__(self, "support", pairs)
        object.__setattr__(self, "weights", tuple(float(x) for x in w))

    @classmethod
    def all_pairs(cls, n: int) -> "PairSelectionDistribution":
        return cls([(i, j) for i in range(n) for j in range(i + 1, n)], n=n)

    @property
    def is_uniform(self) -> bool:
        return len(set(self.weights)) == 1

    def _cdf(self) -> np.ndarray:
        c = np.cumsum(self.weights)
        c[-1] = 1.0
        return c

    def index_of(self, u: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self._cdf(), u, side="right")
        return np.minimum(idx, len(self.support) - 1)

    def draw(self, seed: int, t0: int, t1: int):
        """Pairs for steps ``t0..t1-1`` as two int arrays (first < second)."""
        u = rng.step_uniforms(seed, rng.PAIRS, t0, t1)[:, 0]
        sup = np.asarray(self.support, dtype=np.int64)
        k = self.index_of(u)
        return sup[k, 0], sup[k, 1]


def sample_pair(dist: PairSelectionDistribution, gen: np.random.Generator) -> Tuple[int, int]:
    u = gen.random(rng.DOUBLES_PER_BLOCK)[0]
    return dist.support[int(dist.index_of(np.array([u]))[0])]


def covers_all_pairs(dist: PairSelectionDistribution, n: int) -> bool:
    have = set(dist.support)
    return all((i, j) in have for i in range(n) for j in range(i + 1, n))


class MixingDistribution:
    """Law of mu(t). Subclasses: :class:`Uniform`, :class:`Constant`, :class:`Mixture`."""

    declared_regime: Optional[Regime] = None

    def leaves(self) -> list:
        """Flattened ``(weight, lo, hi)`` components; ``lo == hi`` marks a point mass."""
        raise NotImplementedError

    @property
    def is_continuous(self) -> bool:
        return all(lo < hi for _, lo, hi in self.leaves())

    def _table(self):
        leaves = self.leaves()
        w = np.array([x[0] for x in leaves])
        cdf = np.cumsum(w)
        cdf[-1] = 1.0
        lo = np.array([x[1] for x in leaves])
        hi = np.array([x[2] for x in leaves])
        return cdf, lo, hi

    def from_uniforms(self, u0: np.ndarray, u1: np.ndarray) -> np.ndarray:
        cdf, lo, hi = self._table()
        k = np.minimum(np.searchsorted(cdf, u0, side="right"), len(lo) - 1)
        return lo[k] + (hi[k] - lo[k]) * u1

    def draw(self, seed: int, t0: int, t1: int) -> np.ndarray:
        u = rng.step_uniforms(seed, rng.MU, t0, t1)
        return self.from_uniforms(u[:, 0], u[:, 1])


@dataclass(frozen=True)
class Uniform(MixingDistribution):
    lo: float
    hi: float
    declared_regime: Optional[Regime] = None

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise ConfigError(f"Uniform needs finite lo < hi, got ({self.lo}, {self.hi})")

    def leaves(self):
        return [(1.0, float(self.lo), float(self.hi))]


@dataclass(frozen=True)
class Constant(MixingDistribution):
    value: float
    declared_regime: Optional[Regime] = None

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ConfigError("Constant mu must be finite")
        if self.value == 0:
            raise ConfigError("mu = 0 never produces a transaction; Constant(0) is rejected")

    def leaves(self):
        return [(1.0, float(self.value), float(self.value))]


@dataclass(frozen=True)
class Mixture(MixingDistribution):
    components: Tuple[Tuple[float, MixingDistribution], ...]
    declared_regime: Optional[Regime] = None

    def __post_init__(self):
        if not self.components:
            raise ConfigError("empty mixture")
        ws = [w for w, _ in self.components]
        if any(not w > 0 for w in ws):
            raise ConfigError("mixture weights must be positive")
        if abs(sum(ws) - 1.0) > 1e-9:
            raise ConfigError(f"mixture weights sum to {sum(ws)}, not 1")

    def leaves(self):
        total = sum(w for w, _ in self.components)
        out = []
        for w, d in self.components:
            out.extend((w / total * lw, lo, hi) for lw, lo, hi in d.leaves())
        return out


@dataclass(frozen=True)
class Cycle(MixingDistribution):
    """Step ``t`` draws from ``laws[t % len(laws)]`` (deterministic alternation)."""

    laws: Tuple[MixingDistribution, ...]
    declared_regime: Optional[Regime] = None

    def __post_init__(self):
        if not self.laws:
            raise ConfigError("cycle needs at least one law")

    def leaves(self):
        k = len(self.laws)
        return [(lw / k, lo, hi) for d in self.laws for lw, lo, hi in d.leaves()]

    def draw(self, seed, t0, t1):
        u = rng.step_uniforms(seed, rng.MU, t0, t1)
        phase = np.arange(t0, t1) % len(self.laws)
        out = np.empty(t1 - t0)
        for k, law in enumerate(self.laws):
            sel = phase == k
            out[sel] = law.from_uniforms(u[sel, 0], u[sel, 1])
        return out


def sample_mu(dist: MixingDistribution, gen: np.random.Generator, t: int = 0) -> float:
    """One draw from a single step's block of the stream ``gen``."""
    u = gen.random(rng.DOUBLES_PER_BLOCK)
    if isinstance(dist, Cycle):
        dist = dist.laws[t % len(dist.laws)]
    return float(dist.from_uniforms(u[:1], u[1:2])[0])


def computed_regime(dist: MixingDistribution) -> Regime:
    leaves = dist.leaves()
    if all(lo > 0 and hi < 1 for _, lo, hi in leaves):
        return Regime.CONTRACTIVE
    if all(hi <= 0 or lo >= 1 for _, lo, hi in leaves):
        return Regime.EXPANSIVE
    return Regime.UNCLASSIFIED


def classify_regime(dist: MixingDistribution) -> Regime:
    """Regime from the support closure; a contradicting declaration raises."""
    got = computed_regime(dist)
    declared = dist.declared_regime
    if declared is not None and declared is not got:
        raise ConfigError(
            f"mu law declared {declared.value} but its support makes it {got.value}"
        )
    return got


def within_opinion_range(dist: MixingDistribution) -> bool:
    """Every possible draw lies in (0, 1/2]."""
    return all(lo > 0 and hi <= 0.5 for _, lo, hi in dist.leaves())


def mu_bounds(dist: MixingDistribution) -> Tuple[float, float]:
    leaves = dist.leaves()
    return min(x[1] for x in leaves), max(x[2] for x in leaves)
