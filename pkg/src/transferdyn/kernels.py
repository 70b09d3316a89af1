"""Step-loop kernels.

Written as scalar loops so the same source serves three paths: numba
(default), plain Python over float64 arrays (``TRANSFERDYN_DISABLE_NUMBA=1``),
and plain Python over object arrays of Fractions (exact mode, always
``py_run_steps``). ``zero`` carries the arithmetic's additive identity so no
float literal leaks into exact runs.

Money is held as ``y = m + offset``. When floors can bind, ``offset = d``
(headroom above the floor), so agents crowding their floor keep full
relative precision and the floor test is ``y < ylo`` with ``ylo = 0``.
Otherwise ``offset = 0`` and ``ylo = -d``. Differences are formed as
``(y_a - y_b) - (offset_a - offset_b)``, which reduces to the plain headroom
difference when the limits agree. Infinite limits use ``offset = 0`` and
``ylo = -inf``.
"""

import numpy as np

from ._jit import njit

APPLIED = 0
NOT_SOCIALLY_CONNECTED = 1
CREDIT_FLOOR_VIOLATED = 2
CONFIDENCE_EXCEEDED = 3
ZERO_MU = 4


def _state_stats(y, off, ylo, total, zero):
    """(Z, spread, above-floor spread, |sum - total|, min headroom) of m = y - off."""
    n = len(y)
    sy = zero
    so = zero
    ilo = 0
    ihi = 0
    flo = -1
    fhi = -1
    slack = y[0] - ylo[0]
    for k in range(n):
        sy += y[k]
        so += off[k]
        mk = y[k] - off[k]
        if mk < y[ilo] - off[ilo]:
            ilo = k
        if mk > y[ihi] - off[ihi]:
            ihi = k
        sk = y[k] - ylo[k]
        if sk < slack:
            slack = sk
        if y[k] > ylo[k]:
            if flo < 0:
                flo = k
                fhi = k
            else:
                if mk < y[flo] - off[flo]:
                    flo = k
                if mk > y[fhi] - off[fhi]:
                    fhi = k
    ybar = sy / n
    obar = so / n
    acc = zero
    for k in range(n):
        c = (y[k] - ybar) - (off[k] - obar)
        acc += c * c
    z = 2 * n * acc
    gap = (y[ihi] - y[ilo]) - (off[ihi] - off[ilo])
    fgap = zero
    if flo >= 0 and flo != fhi:
        fgap = (y[fhi] - y[flo]) - (off[fhi] - off[flo])
    return z, gap, fgap, abs((sy - so) - total), slack


def _make_run_steps(state_stats):
    """Bind the step loop to a stats routine (compiled or plain)."""

    def run_steps(
        y, off, ylo, total, pi, pj, edge, mu, opinion, eps,
        t0, record_every, cons_eps, stop_on_consensus, zero,
        out_code, out_delta, out_z, out_dz, out_resid, out_gap, out_fgap,
        out_pgap0, out_pgap1, out_sumerr, out_slack, snaps,
    ):
        """Advance the headroom vector ``y`` in place over ``len(pi)`` steps from ``t0``.

        Output row ``k`` describes step ``t0 + k`` and the state right after it.
        Sorted money goes to ``snaps`` whenever ``(t0 + k) % record_every == 0``.
        Returns ``(steps_done, snap_rows, reached)``; with ``stop_on_consensus``
        the loop ends on the first step whose post-state spread is at most
        ``cons_eps``.
        """
        n = len(y)
        z, gap, fgap, sumerr, slack = state_stats(y, off, ylo, total, zero)
        rows = 0
        steps = len(pi)
        srt = np.empty_like(y)
        for k in range(steps):
            i = pi[k]
            j = pj[k]
            m = mu[k]
            yi = y[i]
            yj = y[j]
            # m_j - m_i
            diff = (yj - yi) - (off[j] - off[i])
            code = APPLIED
            ni = yi
            nj = yj
            if not edge[k]:
                code = NOT_SOCIALLY_CONNECTED
            elif m == 0:
                code = ZERO_MU
            elif opinion and abs(diff) > eps:
                code = CONFIDENCE_EXCEEDED
            else:
                ni = yi + m * diff
                nj = yj + m * (-diff)
                if (not opinion) and (ni < ylo[i] or nj < ylo[j]):
                    code = CREDIT_FLOOR_VIOLATED
            out_code[k] = code
            if code == APPLIED:
                y[i] = ni
                y[j] = nj
                z_new, gap, fgap, sumerr, slack = state_stats(y, off, ylo, total, zero)
                lhs = z - z_new
                di = yi - ni
                dj = yj - nj
                rhs = 2 * n * (1 / m - 1) * (di * di + dj * dj)
                out_delta[k] = m * diff
                out_dz[k] = lhs
                out_resid[k] = abs(lhs - rhs)
                out_pgap0[k] = abs(diff)
                out_pgap1[k] = abs((ni - nj) - (off[i] - off[j]))
                z = z_new
            else:
                out_delta[k] = zero
                out_dz[k] = zero
                out_resid[k] = zero
                out_pgap0[k] = zero
                out_pgap1[k] = zero
            out_z[k] = z
            out_gap[k] = gap
            out_fgap[k] = fgap
            out_sumerr[k] = sumerr
            out_slack[k] = slack
            if (t0 + k) % record_every == 0:
                for q in range(n):
                    srt[q] = y[q] - off[q]
                srt.sort()
                for q in range(n):
                    snaps[rows, q] = srt[q]
                rows += 1
            if stop_on_consensus and gap <= cons_eps:
                return k + 1, rows, True
        return steps, rows, False

    return run_steps


state_stats = njit(_state_stats)
run_steps = njit(_make_run_steps(state_stats))
py_state_stats = _state_stats
py_run_steps = _make_run_steps(_state_stats)


def headroom(money, limits, exact: bool, anchor: bool = True):
    """``(y, offset, ylo)`` arrays for a money vector and its credit limits.

    ``anchor=False`` keeps ``offset = 0`` (plain money coordinates); worth it
    when the floors can never bind, since a large offset costs precision.
    """
    dt = object if exact else np.float64
    n = len(money)
    off = np.empty(n, dtype=dt)
    ylo = np.empty(n, dtype=dt)
    y = np.empty(n, dtype=dt)
    for k in range(n):
        d = limits[k]
        finite = d != float("inf")
        off[k] = d if (finite and anchor) else 0 * money[k]
        ylo[k] = (0 * money[k] if anchor else -d) if finite else -float("inf")
        y[k] = money[k] + off[k]
    return y, off, ylo


def snapshot_rows(t0: int, count: int, record_every: int) -> int:
    """Number of multiples of ``record_every`` in ``[t0, t0 + count)``."""
    first = -(-t0 // record_every) * record_every
    if first >= t0 + count:
        return 0
    return (t0 + count - 1 - first) // record_every + 1


def allocate(count: int, n: int, record_every: int, t0: int, exact: bool) -> dict:
    dt = object if exact else np.float64
    out = {
        "code": np.empty(count, dtype=np.int8),
        "delta": np.empty(count, dtype=dt),
        "z": np.empty(count, dtype=dt),
        "dz": np.empty(count, dtype=dt),
        "residual": np.empty(count, dtype=dt),
        "max_gap": np.empty(count, dtype=dt),
        "floor_gap": np.empty(count, dtype=dt),
        "pair_gap_before": np.empty(count, dtype=dt),
        "pair_gap_after": np.empty(count, dtype=dt),
        "sum_error": np.empty(count, dtype=dt),
        "floor_slack": np.empty(count, dtype=dt),
    }
    out["snaps"] = np.empty((max(1, snapshot_rows(t0, count, record_every)), n), dtype=dt)
    return out
