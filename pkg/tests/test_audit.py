import numpy as np

from transferdyn import audit
from transferdyn.config import load
from transferdyn.model import Reason


def _cols(**over):
    base = {
        "code": np.array([Reason.APPLIED], dtype=np.int8),
        "mu": np.array([0.25]),
        "z0": 2.0,
        "z": np.array([0.5]),
        "dz": np.array([1.5]),
        "residual": np.array([0.0]),
        "sum_error": np.array([0.0]),
        "floor_slack": np.array([1.0]),
        "pair_gap_before": np.array([1.0]),
        "pair_gap_after": np.array([0.5]),
    }
    base.update(over)
    return base


def test_clean_columns_pass():
    checks = audit.step_checks(_cols(), 1.0, 1e-9, False)
    assert all(c.passed for c in checks.values())


def test_each_check_can_fail():
    assert not audit.step_checks(_cols(sum_error=np.array([1e-6])), 1.0, 1e-9, False)["conservation"].passed
    assert not audit.step_checks(_cols(floor_slack=np.array([-1e-300])), 1.0, 1e-9, False)["floor_safety"].passed
    assert not audit.step_checks(_cols(residual=np.array([1e-6])), 1.0, 1e-9, False)["identity"].passed
    assert not audit.step_checks(_cols(dz=np.array([-0.1])), 1.0, 1e-9, False)["sign_law"].passed
    grow = _cols(mu=np.array([1.5]), dz=np.array([-1.0]), pair_gap_after=np.array([2.1]))
    assert not audit.step_checks(grow, 1.0, 1e-9, False)["growth_factor"].passed


def test_sign_law_rounding_band():
    tiny = _cols(dz=np.array([-1e-14]))
    c = audit.step_checks(tiny, 1.0, 1e-9, False)["sign_law"]
    assert c.passed and "1 wrong at any size" in c.detail
    assert audit.sign_violation(0.5, -1e-14)
    assert not audit.sign_violation(-0.2, -1.0)
    assert audit.sign_violation(1.2, 1e-3)


def test_rejected_steps_are_not_audited_for_identity():
    cols = _cols(code=np.array([Reason.CREDIT_FLOOR_VIOLATED], dtype=np.int8), residual=np.array([5.0]))
    assert audit.step_checks(cols, 1.0, 1e-9, False)["identity"].passed


def test_equal_wealth_defaults_pass():
    report = audit.verify(load("equal_wealth"))
    assert report.passed, report.format()
    assert len(report.seeds) == 20
    assert all(s.consensus_time is not None for s in report.seeds)


def test_deffuant_suites_pass():
    assert audit.verify(load("deffuant_opinion")).passed
    sep = audit.verify(load("deffuant_separated"))
    assert sep.passed and all(s.total_applied == 0 for s in sep.seeds)


def test_one_sided_mutant_fails_identity():
    checks = audit.verify_mutant(load("equal_wealth"))
    assert not checks["identity"].passed
    assert not checks["conservation"].passed


def test_frozen_order_report_carries_tail_counts():
    suite = load("frozen_order").with_seeds([0, 1]).with_config(steps=4000)
    report = audit.verify(suite)
    for s in report.seeds:
        assert s.tail_applied is not None and s.tail_rank_events is not None
    for name in ("conservation", "floor_safety", "identity", "sign_law", "growth_factor"):
        assert report.check(name).passed, report.format()
    assert "need 18" in report.check("rank_stability").detail


def test_exact_identity_audit_is_exact():
    suite = load("identity_audit_exact").with_config(steps=150)
    report = audit.verify(suite)
    assert report.passed, report.format()
    assert report.check("identity").worst == 0.0
