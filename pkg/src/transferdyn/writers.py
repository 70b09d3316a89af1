"""Trajectory files (CSV / JSONL + replay sidecar) and run summaries."""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from . import __version__
from ._jit import backend_name
from .engine import Trajectory
from .metrics import rank_change_events
from .model import Reason

CSV_COLUMNS = (
    "t", "pair_i", "pair_j", "edge_present", "mu", "outcome",
    "delta", "z", "z_drop_residual", "max_gap",
)
RNG_DESCRIPTION = (
    "numpy Philox4x64; key = (seed, purpose) with purpose 1 pairs, 2 mu, 3 per-step graph, "
    "4 initial money, 5 static random graph; step t reads counter block t (graph: t * ceil(M/4))"
)
_LABELS = {int(r): r.label for r in Reason}


def _num(x) -> str:
    return repr(float(x))


def _rows(traj: Trajectory):
    c = traj.records.columns
    t = c["t"].tolist()
    pi, pj = c["pair_i"].tolist(), c["pair_j"].tolist()
    edge = c["edge_present"].tolist()
    mu = c["mu"].tolist()
    code = c["code"].tolist()
    cols = [c[k] for k in ("delta", "z", "residual", "max_gap")]
    if not traj.config.exact:
        cols = [x.tolist() for x in cols]
    delta, z, res, gap = cols
    for k in range(len(t)):
        yield (
            t[k], pi[k], pj[k], int(edge[k]), repr(mu[k]), _LABELS[code[k]],
            _num(delta[k]), _num(z[k]), _num(res[k]), _num(gap[k]),
        )


def metadata(traj: Trajectory, suite_doc: Optional[dict] = None) -> dict:
    from .config import SuiteName, ScenarioSuite, suite_to_dict

    if suite_doc is None:
        suite_doc = suite_to_dict(ScenarioSuite(SuiteName.CUSTOM, traj.config, (traj.config.seed,)))
    doc = dict(suite_doc)
    doc["seed"] = traj.config.seed
    doc["seeds"] = [traj.config.seed]
    return {
        "config": doc,
        "seed": traj.config.seed,
        "rng": RNG_DESCRIPTION,
        "package_version": __version__,
        "backend": "exact" if traj.config.exact else backend_name(),
        "initial_total": float(traj.initial_state.total),
        "initial_z": float(traj.records.columns["z0"]),
        "initial_max_gap": float(traj.records.columns["max_gap0"]),
        "consensus_time": traj.consensus_time,
        "total_applied": traj.total_applied,
        "steps_run": len(traj.records),
        "record_every": traj.config.record_every,
    }


def write_trajectory(
    traj: Trajectory,
    out_dir: Union[str, Path],
    fmt: str = "csv",
    stem: Optional[str] = None,
    suite_doc: Optional[dict] = None,
) -> List[Path]:
    """Write one run; returns ``[data_file, sidecar]``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = stem or f"trajectory_seed{traj.config.seed}"
    if fmt == "csv":
        path = out_dir / f"{stem}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            w.writerows(_rows(traj))
    elif fmt == "jsonl":
        path = out_dir / f"{stem}.jsonl"
        log = traj.records
        snap = {int(t): r for r, t in enumerate(log.snapshot_steps)}
        with open(path, "w") as fh:
            for row in _rows(traj):
                rec = dict(zip(CSV_COLUMNS, row))
                for key in ("mu", "delta", "z", "z_drop_residual", "max_gap"):
                    rec[key] = float(rec[key])
                rec["edge_present"] = bool(rec["edge_present"])
                r = snap.get(rec["t"])
                if r is not None:
                    rec["sorted_money"] = [float(x) for x in log.snapshots[r]]
                fh.write(json.dumps(rec) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    meta = out_dir / f"{stem}.meta.json"
    meta.write_text(json.dumps(metadata(traj, suite_doc), indent=2, sort_keys=True) + "\n")
    return [path, meta]


@dataclass
class RunInfo:
    """What the summary needs from one run, whether in memory or on disk."""

    suite: str
    seed: int
    consensus_time: Optional[int]
    total_applied: int
    final_max_gap: float
    rank_events: Optional[int]
    t: np.ndarray
    z: np.ndarray
    max_gap: np.ndarray

    @classmethod
    def from_trajectory(cls, traj: Trajectory, suite: str = "custom", rank_tolerance: float = 1e-12):
        log = traj.records
        ev = rank_change_events(log.snapshots, rank_tolerance, log.snapshot_steps)
        gap = np.asarray(log.max_gap, dtype=np.float64)
        final_gap = float(gap[-1]) if len(gap) else float(log.columns["max_gap0"])
        return cls(suite, traj.config.seed, traj.consensus_time, traj.total_applied, final_gap,
                   len(ev), log.t, np.asarray(log.z, dtype=np.float64), gap)


def load_run(path: Union[str, Path], rank_tolerance: float = 1e-12) -> RunInfo:
    """Read a CSV or JSONL trajectory next to its ``.meta.json`` sidecar."""
    path = Path(path)
    meta_path = path.with_name(path.stem + ".meta.json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    t, z, gap, applied = [], [], [], 0
    snaps, snap_t = [], []
    if path.suffix == ".csv":
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                t.append(int(row["t"]))
                z.append(float(row["z"]))
                gap.append(float(row["max_gap"]))
                applied += row["outcome"] == Reason.APPLIED.label
    elif path.suffix == ".jsonl":
        with open(path) as fh:
            for line in fh:
                rec = json.loads(line)
                t.append(rec["t"])
                z.append(rec["z"])
                gap.append(rec["max_gap"])
                applied += rec["outcome"] == Reason.APPLIED.label
                if "sorted_money" in rec:
                    snaps.append(rec["sorted_money"])
                    snap_t.append(rec["t"])
    else:
        raise ValueError(f"not a trajectory file: {path}")
    rank_events = len(rank_change_events(snaps, rank_tolerance, snap_t)) if snaps else None
    cfg = meta.get("config", {})
    return RunInfo(
        suite=cfg.get("suite", "custom"),
        seed=int(meta.get("seed", cfg.get("seed", 0))),
        consensus_time=meta.get("consensus_time"),
        total_applied=applied,
        final_max_gap=gap[-1] if gap else float(meta.get("initial_max_gap", float("nan"))),
        rank_events=rank_events,
        t=np.array(t), z=np.array(z), max_gap=np.array(gap),
    )


def _stats(values: Sequence) -> dict:
    vals = [v for v in values if v is not None]
    if not vals:
        return {"median": None, "min": None, "max": None}
    return {"median": statistics.median(vals), "min": min(vals), "max": max(vals)}


def summarize(runs: Iterable[RunInfo]) -> List[dict]:
    """One row per suite: run counts and median/min/max of the headline numbers."""
    runs = list(runs)
    if not runs:
        raise ValueError("nothing to summarize")
    rows = []
    for suite in dict.fromkeys(r.suite for r in runs):
        group = [r for r in runs if r.suite == suite]
        row = {"suite": suite, "runs": len(group),
               "reached_consensus": sum(r.consensus_time is not None for r in group)}
        for key in ("consensus_time", "total_applied", "final_max_gap", "rank_events"):
            for stat, v in _stats([getattr(r, key) for r in group]).items():
                row[f"{key}_{stat}"] = v
        rows.append(row)
    return rows


def long_format(runs: Iterable[RunInfo], every: int = 1) -> List[tuple]:
    """``(suite, seed, t, metric, value)`` rows for Z and the money spread."""
    out = []
    for r in runs:
        for k in range(0, len(r.t), every):
            out.append((r.suite, r.seed, int(r.t[k]), "z", float(r.z[k])))
            out.append((r.suite, r.seed, int(r.t[k]), "max_gap", float(r.max_gap[k])))
    return out


def write_summary(runs: Sequence[RunInfo], out_dir: Union[str, Path], every: int = 1) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = summarize(runs)
    table = out_dir / "summary.csv"
    with open(table, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    series = out_dir / "series_long.csv"
    with open(series, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("suite", "seed", "t", "metric", "value"))
        w.writerows(long_format(runs, every))
    return [table, series]


def format_table(rows: List[dict]) -> str:
    keys = list(rows[0])
    cells = [[str(k) for k in keys]] + [["" if r[k] is None else f"{r[k]:.6g}" if isinstance(r[k], float) else str(r[k]) for k in keys] for r in rows]
    widths = [max(len(c[i]) for c in cells) for i in range(len(keys))]
    return "\n".join("  ".join(c[i].rjust(widths[i]) for i in range(len(keys))) for c in cells)
