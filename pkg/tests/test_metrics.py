from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from transferdyn.metrics import (
    check_drop_identity,
    components_delta_trivial,
    consensus_reached,
    is_delta_trivial,
    potential,
    potential_direct,
    potential_value,
    rank_change_events,
    rank_snapshot,
)
from transferdyn.model import WealthState, apply_transaction


@pytest.mark.parametrize("m, z", [([0, 1], 2), ([0, 1, 2], 12), ([4.5] * 6, 0)])
def test_potential_by_hand(m, z):
    assert potential_value(np.array(m, dtype=float)) == z
    assert potential_direct(m) == z


def test_potential_reading_from_state():
    assert potential(WealthState([0, 1, 2], [5] * 3), t=4).z == 12


def test_drop_identity_two_agents():
    r = check_drop_identity([0, 1], [0.25, 0.75], 0.25, True)
    assert (r.lhs, r.rhs, r.residual) == (1.5, 1.5, 0)


def test_drop_identity_three_agents():
    r = check_drop_identity([0, 1, 2], [0.25, 0.75, 2], 0.25, True)
    assert (r.lhs, r.rhs, r.residual) == (2.25, 2.25, 0)


def test_drop_identity_rejected_step():
    r = check_drop_identity([0, 1, 2], [0, 1, 2], 0.25, False)
    assert r.lhs == 0 and r.rhs == 0


fracs = st.fractions(min_value=-50, max_value=50, max_denominator=500)


@given(st.lists(fracs, min_size=2, max_size=12))
def test_potential_shortcut_is_exact_on_rationals(m):
    assert potential_value(np.array(m, dtype=object)) == potential_direct(m)


@given(st.lists(fracs, min_size=2, max_size=10), st.data())
def test_identity_holds_exactly_for_any_mu(m, data):
    i = data.draw(st.integers(0, len(m) - 1))
    j = data.draw(st.integers(0, len(m) - 1).filter(lambda x: x != i))
    mu = data.draw(st.fractions(min_value=-3, max_value=3, max_denominator=40).filter(lambda x: x != 0))
    s = WealthState(m, [10**6] * len(m), exact=True)
    before = s.money.copy()
    out = apply_transaction(s, i, j, mu, True)
    r = check_drop_identity(before, s.money, mu, out.accepted)
    assert r.residual == 0
    if 0 < mu < 1:
        assert r.lhs >= 0
    elif mu > 1 or mu < 0:
        assert r.lhs <= 0


def test_delta_trivial_examples():
    v = [0.10, 0.15, 0.12]
    assert is_delta_trivial(v, range(3), 0.1)
    assert not is_delta_trivial(v + [0.30], range(4), 0.1)
    assert is_delta_trivial(v + [5.0], [3], 0.0)
    assert components_delta_trivial([0, 0.01, 5, 5.02], [[0, 1], [2, 3]], 0.05)
    assert not components_delta_trivial([0, 0.01, 5, 5.02], [[0, 1, 2], [3]], 0.05)


def test_rank_snapshot_examples():
    r = rank_snapshot(np.array([3.0, 1.0, 2.0]))
    assert r.sorted_money.tolist() == [1, 2, 3] and r.permutation.tolist() == [1, 2, 0]
    r = rank_snapshot(np.array([5.0, 5.0]))
    assert r.permutation.tolist() == [0, 1]
    with pytest.raises(ValueError):
        rank_snapshot(np.array([0.0]))


def test_rank_snapshot_permutation_reproduces_sorted():
    m = np.random.default_rng(0).normal(size=20)
    r = rank_snapshot(m)
    assert np.array_equal(m[r.permutation], r.sorted_money)


def test_rank_change_events():
    s = WealthState([0.0, 1.0, 2.0], [5] * 3)
    snaps, steps = [], []
    for t in range(10):
        if t == 5:
            apply_transaction(s, 0, 1, 0.25, True)
        snaps.append(rank_snapshot(s))
        steps.append(t)
    assert rank_change_events(snaps, 0.0, steps) == [5]
    assert rank_change_events(snaps[:5], 0.0) == []
    tiny = [np.array([0.0, 1.0]), np.array([1e-14, 1.0])]
    assert rank_change_events(tiny, 1e-12) == []
    assert rank_change_events(tiny, 0.0) == [1]


def test_consensus_examples():
    assert consensus_reached(WealthState([0.25] * 4, [1] * 4), 0.0)
    assert not consensus_reached([0, 1], 0.5)
    assert consensus_reached([0.4999, 0.5001], 0.001)


def test_exact_potential_of_fraction_state():
    s = WealthState([Fraction(1, 3), Fraction(2, 3)], [1, 1], exact=True)
    assert potential(s).z == Fraction(2, 9)
