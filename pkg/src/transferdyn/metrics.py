"""Quadratic potential, its exact one-step drop, and consensus/rank diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence

import numpy as np

from .model import WealthState


@dataclass(frozen=True)
class PotentialReading:
    z: object
    t: int = 0


class IdentityReport(NamedTuple):
    lhs: object
    rhs: object
    residual: object


@dataclass(frozen=True)
class RankSnapshot:
    sorted_money: np.ndarray
    permutation: np.ndarray


def _values(x):
    return x.money if isinstance(x, WealthState) else x


def potential_value(values) -> object:
    """Sum of (m_i - m_j)^2 over all ordered pairs, in O(n).

    Evaluated as ``2n * sum((m - mean)^2)``, which equals
    ``2n sum m^2 - 2 (sum m)^2`` without its cancellation.
    """
    v = _values(values)
    n = len(v)
    if isinstance(v, np.ndarray) and v.dtype != object:
        c = v - v.sum() / n
        return 2.0 * n * float(np.dot(c, c))
    mean = sum(v) / n
    return 2 * n * sum((x - mean) * (x - mean) for x in v)


def potential_direct(values) -> object:
    """The same potential by the literal O(n^2) double sum (oracle)."""
    v = list(_values(values))
    total = 0 * v[0]
    for a in v:
        for b in v:
            total += (a - b) * (a - b)
    return total


def potential(state: WealthState, t: int = 0) -> PotentialReading:
    return PotentialReading(potential_value(state.money), t)


def check_drop_identity(before, after, mu, applied: bool) -> IdentityReport:
    """Compare Z(before) - Z(after) with 2n(1/mu - 1) * sum_i (m_i - m_i')^2."""
    b, a = _values(before), _values(after)
    if len(b) != len(a):
        raise ValueError("before and after differ in length")
    n = len(b)
    lhs = potential_value(b) - potential_value(a)
    if applied and mu != 0:
        moved = sum((x - y) * (x - y) for x, y in zip(b, a))
        rhs = 2 * n * (1 / mu - 1) * moved
    else:
        rhs = 0 * lhs
    return IdentityReport(lhs, rhs, abs(lhs - rhs))


def is_delta_trivial(values, members: Iterable[int], delta) -> bool:
    v = _values(values)
    sel = [v[k] for k in members]
    if not sel:
        raise ValueError("members must be nonempty")
    return max(sel) - min(sel) <= delta


def components_delta_trivial(values, parts: Iterable[Iterable[int]], delta) -> bool:
    """All given components (e.g. of the realized update graph) are delta-trivial."""
    return all(is_delta_trivial(values, p, delta) for p in parts)


def rank_snapshot(state) -> RankSnapshot:
    v = _values(state)
    if len(v) < 2:
        raise ValueError("rank snapshots need n >= 2")
    perm = np.array(sorted(range(len(v)), key=lambda k: (v[k], k)), dtype=np.int64)
    return RankSnapshot(np.asarray(v)[perm], perm)


def rank_change_events(
    snapshots: Sequence, tolerance: float = 0.0, steps: Optional[Sequence[int]] = None
) -> List[int]:
    """Indices (or the matching ``steps`` labels) where the sorted vector moved.

    ``snapshots`` may hold :class:`RankSnapshot` objects or plain sorted
    arrays; entry ``k`` is compared with entry ``k - 1``.
    """
    arrs = [s.sorted_money if isinstance(s, RankSnapshot) else s for s in snapshots]
    if len(arrs) < 2:
        return []
    stack = np.asarray(np.stack(arrs), dtype=np.float64)
    moved = np.abs(np.diff(stack, axis=0)).max(axis=1) > tolerance
    idx = np.flatnonzero(moved) + 1
    if steps is not None:
        steps = np.asarray(steps)
        return steps[idx].tolist()
    return idx.tolist()


def spread(values):
    v = _values(values)
    return max(v) - min(v)


def consensus_reached(state, epsilon) -> bool:
    return spread(state) <= epsilon
