from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from transferdyn.errors import UsageError
from transferdyn.model import (
    InteractionMode,
    Reason,
    WealthState,
    apply_transaction,
    max_gap,
    propose_update,
)

fractions = st.fractions(min_value=-100, max_value=100, max_denominator=1000)


@pytest.mark.parametrize("mu, expected", [(0.5, (0.5, 0.5)), (0.25, (0.25, 0.75)), (2, (2, -1))])
def test_propose_update_by_hand(mu, expected):
    s = WealthState([0, 1], [10, 10])
    assert propose_update(s, 0, 1, mu) == expected
    assert list(s.money) == [0, 1]


def test_applied_transaction_moves_money_and_keeps_sum():
    s = WealthState([0, 1], [10, 10])
    out = apply_transaction(s, 0, 1, 0.25, True)
    assert out.accepted and out.reason is Reason.APPLIED
    assert out.delta == 0.25
    assert list(s.money) == [0.25, 0.75]
    assert s.current_sum() == 1


def test_floor_violation_is_rejected_not_clamped():
    s = WealthState([0, 1], [0.5, 0.5])
    out = apply_transaction(s, 0, 1, 2, True)
    assert not out.accepted and out.reason is Reason.CREDIT_FLOOR_VIOLATED
    assert out.delta == 0
    assert list(s.money) == [0, 1]


def test_confidence_gate():
    s = WealthState([0.0, 0.9], [float("inf")] * 2)
    out = apply_transaction(s, 0, 1, 0.3, True, InteractionMode.opinion(0.5))
    assert out.reason is Reason.CONFIDENCE_EXCEEDED
    assert list(s.money) == [0.0, 0.9]


def test_opinion_mode_ignores_floors():
    s = WealthState([0.0, 0.4], [0.01, 0.01])
    out = apply_transaction(s, 0, 1, 0.5, True, InteractionMode.opinion(0.5))
    assert out.accepted and list(s.money) == [0.2, 0.2]


def test_missing_edge_and_zero_mu():
    s = WealthState([0, 1], [10, 10])
    assert apply_transaction(s, 0, 1, 0.5, False).reason is Reason.NOT_SOCIALLY_CONNECTED
    assert apply_transaction(s, 0, 1, 0.0, True).reason is Reason.ZERO_MU
    assert list(s.money) == [0, 1]


def test_gate_order_edge_before_floor():
    s = WealthState([0, 1], [0.5, 0.5])
    assert apply_transaction(s, 0, 1, 2, False).reason is Reason.NOT_SOCIALLY_CONNECTED


@pytest.mark.parametrize("bad", [(0, 0), (0, 2), (-1, 1)])
def test_bad_pairs_raise(bad):
    s = WealthState([0, 1], [10, 10])
    with pytest.raises(UsageError):
        apply_transaction(s, *bad, 0.5, True)


def test_state_validation():
    with pytest.raises(UsageError):
        WealthState([0], [1])
    with pytest.raises(UsageError):
        WealthState([-2, 0], [1, 1])
    with pytest.raises(UsageError):
        WealthState([0, 0], [0, 1])
    with pytest.raises(UsageError):
        apply_transaction(WealthState([0, 0], [1, 1]), 0, 1, float("nan"), True)


def test_mode_validation():
    with pytest.raises(UsageError):
        InteractionMode.opinion(-1)
    assert InteractionMode.opinion(0.2).is_opinion
    assert not InteractionMode.money().is_opinion


def test_max_gap_examples():
    assert max_gap(WealthState([0, 1, 2], [10] * 3), above_floor_only=True) == 2
    assert max_gap(WealthState([3, 3, 3], [10] * 3)) == 0
    s = WealthState([-1, 0, 5], [1, 10, 10])
    assert max_gap(s, above_floor_only=True) == 5
    assert max_gap(s) == 6
    assert max_gap(WealthState([-1, 5], [1, 10]), above_floor_only=True) == 0


@given(fractions, fractions, st.fractions(min_value=-3, max_value=3, max_denominator=50))
def test_pair_gap_scales_by_one_minus_two_mu(a, b, mu):
    s = WealthState([a, b], [1000, 1000], exact=True)
    ni, nj = propose_update(s, 0, 1, mu)
    assert nj - ni == (1 - 2 * mu) * (b - a)
    assert abs(nj - ni) == abs(1 - 2 * mu) * abs(b - a)
    assert ni + nj == a + b


@given(fractions, fractions, st.fractions(min_value=0, max_value=Fraction(1, 2), max_denominator=50))
def test_small_mu_preserves_pair_order(a, b, mu):
    lo, hi = min(a, b), max(a, b)
    s = WealthState([lo, hi], [1000, 1000], exact=True)
    ni, nj = propose_update(s, 0, 1, mu)
    assert ni <= nj
    assert lo <= ni and nj <= hi


@given(st.lists(fractions, min_size=3, max_size=8), st.data())
def test_applied_or_not_the_sum_is_exact(money, data):
    s = WealthState(money, [1000] * len(money), exact=True)
    total = s.total
    for _ in range(10):
        i = data.draw(st.integers(0, len(money) - 1))
        j = data.draw(st.integers(0, len(money) - 1).filter(lambda x: x != i))
        mu = data.draw(st.fractions(min_value=-2, max_value=3, max_denominator=20))
        apply_transaction(s, i, j, mu, data.draw(st.booleans()))
        assert s.current_sum() == total
        assert s.floor_ok()
