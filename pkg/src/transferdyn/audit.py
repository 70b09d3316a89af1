"""Invariant audit over every seed of a suite.

Per-step hard checks: conservation, floor safety, the potential-drop
identity, the sign law of the drop, and the pair-gap growth factor on
expansive steps. Suite checks on top: consensus at the mean for suites that
expect it, order freezing in the tail for the frozen-order suite, and an
optional cap on applied steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np

from .config import ScenarioSuite, SuiteName
from .engine import Trajectory, run_replicas
from .metrics import rank_change_events
from .model import Reason


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float = 0.0
    violations: int = 0
    detail: str = ""


@dataclass
class SeedReport:
    seed: int
    checks: Dict[str, CheckResult]
    consensus_time: Optional[int]
    total_applied: int
    tail_applied: Optional[int] = None
    tail_rank_events: Optional[int] = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())


@dataclass
class AuditReport:
    suite: str
    seeds: List[SeedReport]
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def format(self) -> str:
        lines = [f"suite {self.suite}: {len(self.seeds)} seed(s)"]
        for s in self.seeds:
            extra = ""
            if s.tail_applied is not None:
                extra = f" tail_applied={s.tail_applied} tail_rank_events={s.tail_rank_events}"
            lines.append(
                f"  seed {s.seed}: consensus_time={s.consensus_time} "
                f"applied={s.total_applied}{extra} {'ok' if s.passed else 'FAIL'}"
            )
        for c in self.checks:
            mark = "PASS" if c.passed else "FAIL"
            lines.append(f"{mark} {c.name}: worst={c.worst:.3e} violations={c.violations} {c.detail}".rstrip())
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def _worst(values) -> float:
    return max((float(v) for v in values), default=0.0)


def sign_violation(mu, dz) -> bool:
    """True when dZ has the wrong sign for mu: >= 0 inside (0, 1), <= 0 outside [0, 1]."""
    if 0 < mu < 1:
        return dz < 0
    if mu > 1 or mu < 0:
        return dz > 0
    return dz != 0


def step_checks(
    cols: dict, total, residual_tolerance: float, exact: bool, growth_tolerance: float = 1e-9
) -> Dict[str, CheckResult]:
    """Hard per-step checks on the audit columns of one run."""
    out = {}
    applied = np.asarray(cols["code"]) == Reason.APPLIED
    idx = np.flatnonzero(applied)

    scale = max(1.0, abs(float(total)))
    err = cols["sum_error"]
    bad = [k for k in range(len(err)) if (err[k] != 0 if exact else err[k] > 1e-9 * scale)]
    out["conservation"] = CheckResult("conservation", not bad, _worst(err) / scale, len(bad),
                                      "relative |sum m - C|")

    slack = cols["floor_slack"]
    bad = [k for k in range(len(slack)) if slack[k] < 0]
    out["floor_safety"] = CheckResult("floor_safety", not bad, max(0.0, -min((float(s) for s in slack), default=0.0)),
                                      len(bad), "worst floor breach")

    z = cols["z"]
    z_before = np.empty(len(z), dtype=object if exact else np.float64)
    if len(z):
        z_before[0] = cols["z0"]
        z_before[1:] = z[:-1]
    res = cols["residual"]
    worst, nbad = 0.0, 0
    for k in idx:
        denom = max(1, z_before[k])
        ok = res[k] == 0 if exact else res[k] <= residual_tolerance * denom
        nbad += not ok
        worst = max(worst, float(res[k]) / float(denom))
    out["identity"] = CheckResult("identity", nbad == 0, worst, nbad,
                                  "|dZ - 2n(1/mu - 1) sum (m - m')^2| / max(1, Z_before)")

    # A measured dZ below the rounding floor of Z has no reliable sign, so a
    # wrong sign only counts once it exceeds the identity tolerance. Exact
    # runs get no band.
    mu = cols["mu"]
    dz = cols["dz"]
    worst, nbad, nstrict = 0.0, 0, 0
    for k in idx:
        wrong = sign_violation(mu[k], dz[k])
        if wrong:
            nstrict += 1
            size = abs(dz[k]) / max(1, z_before[k])
            worst = max(worst, float(size))
            nbad += bool(exact or size > residual_tolerance)
    out["sign_law"] = CheckResult("sign_law", nbad == 0, worst, int(nbad),
                                  f"wrong-signed dZ / max(1, Z_before); {nstrict} wrong at any size")

    g0, g1 = cols["pair_gap_before"], cols["pair_gap_after"]
    worst, nbad = 0.0, 0
    for k in idx:
        m = Fraction(mu[k]) if exact else float(mu[k])
        factor = abs(1 - 2 * m)
        if factor < 1:
            continue
        expect = factor * g0[k]
        rel = abs(g1[k] - expect) / expect if expect else abs(g1[k])
        if not (rel == 0 if exact else rel <= growth_tolerance):
            nbad += 1
        worst = max(worst, float(rel))
    out["growth_factor"] = CheckResult("growth_factor", nbad == 0, worst, nbad,
                                       "relative error of |1 - 2mu| gap scaling on expansive steps")
    return out


def tail_start(steps: int, tail_fraction: float) -> int:
    return steps - int(round(tail_fraction * steps))


def seed_report(traj: Trajectory, suite: ScenarioSuite) -> SeedReport:
    acc = suite.acceptance
    cfg = traj.config
    cols = traj.records.columns
    checks = step_checks(cols, traj.initial_state.total, acc.residual_tolerance, cfg.exact, acc.growth_tolerance)
    rep = SeedReport(cfg.seed, checks, traj.consensus_time, traj.total_applied)

    if suite.expects_consensus:
        mean = traj.initial_state.total / cfg.n
        dev = max(abs(float(m - mean)) for m in traj.final_state.money)
        ok = traj.consensus_time is not None and dev <= acc.consensus_epsilon
        checks["consensus"] = CheckResult("consensus", ok, dev, int(not ok),
                                          f"max |m - C/n| at the end; consensus_time={traj.consensus_time}")

    if suite.name is SuiteName.FROZEN_ORDER:
        t0 = tail_start(cfg.steps, acc.tail_fraction)
        log = traj.records
        events = rank_change_events(log.snapshots, acc.rank_tolerance, log.snapshot_steps)
        tail_events = [s for s in events if s >= t0]
        rep.tail_rank_events = len(tail_events)
        rep.tail_applied = traj.applied_in(t0)
        checks["rank_stability"] = CheckResult(
            "rank_stability", not tail_events, float(len(tail_events)), len(tail_events),
            f"rank-change events at t >= {t0}",
        )

    if acc.max_applied is not None:
        ok = traj.total_applied <= acc.max_applied
        checks["max_applied"] = CheckResult("max_applied", ok, float(traj.total_applied), int(not ok),
                                            f"applied steps (cap {acc.max_applied})")
    return rep


# checks scored as "at least k of the seeds pass" rather than "every seed"
_STATISTICAL = {"rank_stability"}


def aggregate(suite: ScenarioSuite, reports: Sequence[SeedReport]) -> List[CheckResult]:
    names = list(dict.fromkeys(name for r in reports for name in r.checks))
    out = []
    for name in names:
        per = [r.checks[name] for r in reports if name in r.checks]
        worst = max(c.worst for c in per)
        nbad = sum(c.violations for c in per)
        passing = sum(c.passed for c in per)
        if name in _STATISTICAL:
            need = suite.acceptance.min_passing_seeds or len(per)
            ok = passing >= need
            detail = f"{passing}/{len(per)} seeds pass (need {need})"
        else:
            ok = passing == len(per)
            detail = per[0].detail
        out.append(CheckResult(name, ok, worst, nbad, detail))
    return out


def verify(suite: ScenarioSuite, seeds: Optional[Sequence[int]] = None, workers: int = 1) -> AuditReport:
    """Run every seed and audit it; ``report.passed`` is the overall verdict."""
    seeds = list(suite.seeds if seeds is None else seeds)
    trajs = run_replicas(suite.config, seeds, workers)
    reports = [seed_report(t, suite) for t in trajs]
    return AuditReport(suite.name.value, reports, aggregate(suite, reports))


# ------------------------------------------------------------------ mutation


def one_sided_columns(suite: ScenarioSuite, seed: Optional[int] = None, steps: int = 2000) -> dict:
    """Audit columns from a deliberately broken rule: only agent ``i`` moves.

    The receiving side is never debited, so the update neither conserves
    money nor obeys the potential identity. Used to show the audit notices.
    """
    from .engine import _draws

    cfg = suite.config.with_seed(suite.seeds[0] if seed is None else seed)
    steps = min(steps, cfg.steps)
    graph = cfg.graph.realize(cfg.seed)
    state = cfg.initial_state()
    m = np.array(state.money, dtype=np.float64)
    lo = -np.array(state.credit_limits, dtype=np.float64)
    n = cfg.n
    pi, pj, edge, mu = _draws(cfg, graph, 0, steps)

    def z_of(v):
        c = v - v.mean()
        return 2.0 * n * float(c @ c)

    cols = {k: np.zeros(steps) for k in ("delta", "z", "dz", "residual", "sum_error", "floor_slack",
                                         "pair_gap_before", "pair_gap_after")}
    cols["code"] = np.full(steps, int(Reason.NOT_SOCIALLY_CONNECTED), dtype=np.int8)
    cols["mu"] = mu
    cols["z0"] = z = z_of(m)
    total = math.fsum(m)
    eps = cfg.mode.confidence_threshold
    for k in range(steps):
        i, j, u = pi[k], pj[k], mu[k]
        if not edge[k]:
            pass
        elif eps is not None and abs(m[j] - m[i]) > eps:
            cols["code"][k] = int(Reason.CONFIDENCE_EXCEEDED)
        else:
            old = m[i]
            m[i] = old + u * (m[j] - old)
            if not cfg.mode.is_opinion and m[i] < lo[i]:
                m[i] = old
                cols["code"][k] = int(Reason.CREDIT_FLOOR_VIOLATED)
            else:
                cols["code"][k] = int(Reason.APPLIED)
                z_new = z_of(m)
                lhs = z - z_new
                rhs = 2 * n * (1 / u - 1) * (old - m[i]) ** 2
                cols["dz"][k], cols["residual"][k] = lhs, abs(lhs - rhs)
                cols["pair_gap_before"][k] = abs(m[j] - old)
                cols["pair_gap_after"][k] = abs(m[j] - m[i])
                z = z_new
        cols["z"][k] = z
        cols["sum_error"][k] = abs(math.fsum(m) - total)
        cols["floor_slack"][k] = float((m - lo).min())
    cols["total"] = total
    return cols


def verify_mutant(suite: ScenarioSuite, seed: Optional[int] = None, steps: int = 2000) -> Dict[str, CheckResult]:
    cols = one_sided_columns(suite, seed, steps)
    acc = suite.acceptance
    return step_checks(cols, cols["total"], acc.residual_tolerance, False, acc.growth_tolerance)
