"""Agent state, interaction modes and the pairwise transaction rule."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import UsageError


class Reason(enum.IntEnum):
    """Outcome codes; the integer values are what the kernels emit."""

    APPLIED = 0
    NOT_SOCIALLY_CONNECTED = 1
    CREDIT_FLOOR_VIOLATED = 2
    CONFIDENCE_EXCEEDED = 3
    ZERO_MU = 4

    @property
    def label(self) -> str:
        return self.name.lower()


class ModeKind(enum.Enum):
    MONEY_TRANSFER = "money_transfer"
    BOUNDED_CONFIDENCE = "bounded_confidence"


@dataclass(frozen=True)
class InteractionMode:
    kind: ModeKind = ModeKind.MONEY_TRANSFER
    confidence_threshold: Optional[float] = None

    def __post_init__(self):
        if self.kind is ModeKind.BOUNDED_CONFIDENCE:
            if self.confidence_threshold is None or not self.confidence_threshold >= 0:
                raise UsageError("bounded-confidence mode needs a confidence threshold >= 0")
        elif self.confidence_threshold is not None:
            raise UsageError("money-transfer mode takes no confidence threshold")

    @classmethod
    def money(cls) -> "InteractionMode":
        return cls(ModeKind.MONEY_TRANSFER)

    @classmethod
    def opinion(cls, epsilon: float) -> "InteractionMode":
        return cls(ModeKind.BOUNDED_CONFIDENCE, float(epsilon))

    @property
    def is_opinion(self) -> bool:
        return self.kind is ModeKind.BOUNDED_CONFIDENCE


@dataclass(frozen=True)
class TransactionOutcome:
    accepted: bool
    reason: Reason
    delta: object = 0.0

    @classmethod
    def rejected(cls, reason: Reason, zero=0.0) -> "TransactionOutcome":
        return cls(False, reason, zero)


def _as_exact(values) -> np.ndarray:
    out = np.empty(len(values), dtype=object)
    for k, v in enumerate(values):
        out[k] = v if math.isinf(v) else Fraction(v)
    return out


class WealthState:
    """Money vector ``money`` with credit floors ``-credit_limits`` and conserved ``total``.

    In opinion mode ``money`` holds the opinions and the credit limits are
    infinite. With ``exact=True`` the entries are :class:`fractions.Fraction`
    (infinite limits stay as ``float('inf')``).
    """

    def __init__(self, money: Sequence, credit_limits: Sequence, exact: bool = False):
        if exact:
            money = _as_exact(money)
            credit_limits = _as_exact(credit_limits)
        else:
            money = np.array(money, dtype=np.float64)
            credit_limits = np.array(credit_limits, dtype=np.float64)
        if money.ndim != 1 or len(money) < 2:
            raise UsageError("need at least two agents")
        if credit_limits.shape != money.shape:
            raise UsageError("money and credit_limits differ in length")
        if not all(d > 0 for d in credit_limits):
            raise UsageError("credit limits must be strictly positive")
        for m, d in zip(money, credit_limits):
            if not (m == m) or m < -d:
                raise UsageError(f"initial money {m} below its credit floor {-d}")
        self.money = money
        self.credit_limits = credit_limits
        self.exact = exact
        self.total = sum(money) if exact else math.fsum(money)

    @classmethod
    def uniform_limits(cls, money: Sequence, limit: float, exact: bool = False) -> "WealthState":
        return cls(money, [limit] * len(money), exact=exact)

    @property
    def n(self) -> int:
        return len(self.money)

    @property
    def zero(self):
        return Fraction(0) if self.exact else 0.0

    def copy(self) -> "WealthState":
        new = object.__new__(WealthState)
        new.money = self.money.copy()
        new.credit_limits = self.credit_limits
        new.exact = self.exact
        new.total = self.total
        return new

    def current_sum(self):
        return sum(self.money) if self.exact else math.fsum(self.money)

    def conservation_error(self):
        return abs(self.current_sum() - self.total)

    def floor_ok(self) -> bool:
        return bool(all(m >= -d for m, d in zip(self.money, self.credit_limits)))

    def coerce(self, x):
        """Bring a scalar into this state's arithmetic."""
        if self.exact:
            return x if isinstance(x, Fraction) else Fraction(x)
        return float(x)

    def __repr__(self):
        return f"WealthState(n={self.n}, total={self.total!r}, exact={self.exact})"


def _check_pair(state: WealthState, i: int, j: int) -> None:
    n = state.n
    if not (0 <= i < n and 0 <= j < n):
        raise UsageError(f"agent index out of range for n={n}: ({i}, {j})")
    if i == j:
        raise UsageError("a transaction needs two distinct agents")


def propose_update(state: WealthState, i: int, j: int, mu):
    """Raw pairwise update, assuming the pair is connected. State is untouched."""
    _check_pair(state, i, j)
    mu = state.coerce(mu)
    mi, mj = state.money[i], state.money[j]
    return mi + mu * (mj - mi), mj + mu * (mi - mj)


def apply_transaction(
    state: WealthState,
    i: int,
    j: int,
    mu,
    edge_present: bool,
    mode: InteractionMode = InteractionMode(),
) -> TransactionOutcome:
    """Gate and apply one transaction in place.

    Rejections leave the state untouched. A proposal that would push either
    agent below its floor is refused outright, never clamped.
    """
    _check_pair(state, i, j)
    if not state.exact and not math.isfinite(mu):
        raise UsageError(f"mu must be finite, got {mu}")
    mu = state.coerce(mu)
    zero = state.zero
    if not edge_present:
        return TransactionOutcome.rejected(Reason.NOT_SOCIALLY_CONNECTED, zero)
    if mu == 0:
        return TransactionOutcome.rejected(Reason.ZERO_MU, zero)
    mi, mj = state.money[i], state.money[j]
    if mode.is_opinion and abs(mi - mj) > mode.confidence_threshold:
        return TransactionOutcome.rejected(Reason.CONFIDENCE_EXCEEDED, zero)
    ni, nj = propose_update(state, i, j, mu)
    if not mode.is_opinion:
        if ni < -state.credit_limits[i] or nj < -state.credit_limits[j]:
            return TransactionOutcome.rejected(Reason.CREDIT_FLOOR_VIOLATED, zero)
    state.money[i] = ni
    state.money[j] = nj
    return TransactionOutcome(True, Reason.APPLIED, mu * (mj - mi))


def max_gap(state: WealthState, above_floor_only: bool = False):
    """Largest pairwise money difference.

    With ``above_floor_only`` only agents strictly above their floor count
    (the A_t diagnostic of the expansive regime); fewer than two such agents
    gives 0.
    """
    m = state.money
    if above_floor_only:
        keep = [k for k in range(state.n) if m[k] > -state.credit_limits[k]]
        if len(keep) < 2:
            return state.zero
        vals = [m[k] for k in keep]
    else:
        vals = list(m)
    return max(vals) - min(vals)
