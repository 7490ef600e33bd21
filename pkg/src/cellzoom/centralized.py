"""Exact centralized baseline.

Enumerates all 2^N sleep/wake schedules.  For a fixed schedule the problem
separates per SBS except for the macro-capacity constraint, which is handled
by bisection on one dual scalar mu.  Each SBS's penalized 1-D problem is
solved on a dense grid of [0, u_max]; the winning schedule is then refined
on a second, zoomed grid.

Per SBS and grid the minimizer of phi + mu * d over grid nodes is a step
function of mu.  It is stored as breakpoints ``bounds`` and node indices
``nodes`` so that the minimizer at mu is ``nodes[searchsorted(bounds, mu)]``.
That lets the bisection run over every schedule at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .approx import build_u_max
from .distributed import ZoomDecision
from .model import SimParams, sat, users_served

GRID = 2000
MAX_N = 16
_BISECT_ITERS = 64
_FEAS_TOL = 1e-9


class CentralizedError(ValueError):
    pass


@dataclass
class ScheduleResult:
    u: np.ndarray
    objective: float
    feasible: bool
    mu: float = 0.0


@dataclass
class _Row:
    """Grid model of one SBS in active mode."""

    u: np.ndarray
    phi: np.ndarray
    d: np.ndarray
    bounds: np.ndarray
    nodes: np.ndarray

    def pick(self, mu):
        return self.nodes[np.searchsorted(self.bounds, mu, side="right")]


def exact_objective(u, s, counts, x, w, params: SimParams, r: float):
    """Per-step objective: unserved users squared plus weighted energy gap, saturation kept."""
    u = np.asarray(u, dtype=float)
    served = users_served(u, counts, r)
    nxt = sat(x + params.h * (w - u / params.gamma - s), params.x_max)
    return ((counts - served) ** 2 + params.lam * (params.x_max - nxt) ** 2).sum(axis=-1)


def _active_phi(u, count, x, w, params: SimParams, r: float):
    nxt = sat(x + params.h * (w - u / params.gamma - params.s_active), params.x_max)
    return (count - users_served(u, count, r)) ** 2 + params.lam * (params.x_max - nxt) ** 2


def _sleep_phi(count, x, w, params: SimParams):
    nxt = sat(x + params.h * (w - params.s_sleep), params.x_max)
    return count ** 2 + params.lam * (params.x_max - nxt) ** 2


def _lower_envelope(d: np.ndarray, phi: np.ndarray):
    """Breakpoints of argmin_g phi_g + mu d_g for mu >= 0 (general point set)."""
    order = np.lexsort((phi, d))
    hull: list[int] = []
    for j in order:
        if hull and d[hull[-1]] == d[j]:
            continue
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (d[b] - d[a]) * (phi[j] - phi[a]) - (phi[b] - phi[a]) * (d[j] - d[a])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(j)
    hv = np.array(hull)
    if len(hv) == 1:
        return np.empty(0), hv
    slopes = np.diff(phi[hv]) / np.diff(d[hv])  # increasing along the hull
    # vertex j is optimal for mu in [-slope_j, -slope_{j-1}]
    bounds = -slopes[::-1]
    return bounds, hv[::-1]


def _row(u: np.ndarray, count: float, x: float, w: float, params: SimParams, r: float) -> _Row:
    phi = _active_phi(u, count, x, w, params, r)
    d = count - users_served(u, count, r)
    if count > 0:
        # phi and d are convex in u and d is strictly decreasing: the
        # minimizer moves right past node g once mu exceeds t_g, and t is
        # non-decreasing in g.
        with np.errstate(divide="ignore", invalid="ignore"):
            t = -np.diff(phi) / np.diff(d)
        t = np.maximum.accumulate(np.nan_to_num(t, nan=-np.inf))
        return _Row(u, phi, d, t, np.arange(len(u)))
    if count == 0:
        j = int(np.argmin(phi))
        return _Row(u, phi, d, np.empty(0), np.array([j]))
    bounds, nodes = _lower_envelope(d, phi)
    return _Row(u, phi, d, bounds, nodes)


def _grid(lo: float, hi: float, points: int) -> np.ndarray:
    return np.linspace(lo, hi, points + 1)[1:] if lo == 0.0 else np.linspace(lo, hi, points)


def _build_rows(counts, x, w, u_max, params, r, points=GRID):
    rows = []
    for i in range(len(counts)):
        if u_max[i] > 0:
            rows.append(_row(_grid(0.0, float(u_max[i]), points), float(counts[i]), float(x[i]), float(w[i]), params, r))
        else:
            rows.append(None)
    return rows


def _evaluate(rows, act, mu, sleep_phi, sleep_d):
    """Objective and demand of schedules ``act`` (C, N) at multipliers ``mu`` (C,)."""
    obj = np.zeros(len(act))
    dem = np.zeros(len(act))
    idx = np.zeros(act.shape, dtype=int)
    for i, row in enumerate(rows):
        if row is None:
            obj += sleep_phi[i]
            dem += sleep_d[i]
            continue
        j = row.pick(mu)
        idx[:, i] = j
        a = act[:, i]
        obj += np.where(a, row.phi[j], sleep_phi[i])
        dem += np.where(a, row.d[j], sleep_d[i])
    return obj, dem, idx


def _bisect(rows, act, sleep_phi, sleep_d, capacity):
    """Smallest grid-level mu making each schedule's demand fit ``capacity``."""
    hi_val = 1.0
    for row in rows:
        if row is not None and len(row.bounds):
            finite = row.bounds[np.isfinite(row.bounds)]
            if len(finite):
                hi_val = max(hi_val, float(finite.max()) * 2.0 + 1.0)
    lo = np.zeros(len(act))
    hi = np.full(len(act), hi_val)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        _, dem, _ = _evaluate(rows, act, mid, sleep_phi, sleep_d)
        ok = dem <= capacity + _FEAS_TOL
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
        if np.all(hi - lo <= 1e-12 * np.maximum(hi, 1.0)):
            break
    return hi


def all_schedules(n: int) -> np.ndarray:
    codes = np.arange(2 ** n)
    return ((codes[:, None] >> np.arange(n)) & 1).astype(bool)


def _solve(act, counts, x, w, params: SimParams, r: float, refine: bool = True):
    """Best schedule among rows of ``act``; returns (u, objective, feasible, mu)."""
    capacity = params.u_macro
    u_max = build_u_max(x, w, r, params)
    act = act[~np.any(act & (u_max <= 0), axis=1)]
    rows = _build_rows(counts, x, w, u_max, params, r)
    sleep_phi = _sleep_phi(counts, x, w, params)
    sleep_d = np.asarray(counts, dtype=float)

    obj0, dem0, _ = _evaluate(rows, act, np.zeros(len(act)), sleep_phi, sleep_d)
    big = np.full(len(act), np.inf)
    _, dem_min, _ = _evaluate(rows, act, big, sleep_phi, sleep_d)
    feasible = dem_min <= capacity + _FEAS_TOL

    if not feasible.any():
        viol = dem_min - capacity
        obj_inf, _, _ = _evaluate(rows, act, big, sleep_phi, sleep_d)
        best = np.lexsort((obj_inf, np.round(viol, 9)))[0]
        return _finish(rows, act[best], np.inf, counts, x, w, params, r, False)

    free = feasible & (dem0 <= capacity + _FEAS_TOL)
    incumbent = obj0[free].min() if free.any() else np.inf
    best_sched = act[free][np.argmin(obj0[free])] if free.any() else None
    best_mu = 0.0

    # obj0 is a lower bound for the constrained objective of each schedule
    pending = np.flatnonzero(feasible & ~free)
    pending = pending[np.argsort(obj0[pending])]
    chunk = 256
    while len(pending):
        pending = pending[obj0[pending] < incumbent]
        if not len(pending):
            break
        take, pending = pending[:chunk], pending[chunk:]
        mu = _bisect(rows, act[take], sleep_phi, sleep_d, capacity)
        obj, _, _ = _evaluate(rows, act[take], mu, sleep_phi, sleep_d)
        j = int(np.argmin(obj))
        if obj[j] < incumbent:
            incumbent = obj[j]
            best_sched = act[take][j]
            best_mu = float(mu[j])

    if not refine:
        return _finish(rows, best_sched, best_mu, counts, x, w, params, r, True)
    return _refine(rows, best_sched, best_mu, counts, x, w, params, r)


def _finish(rows, sched, mu, counts, x, w, params, r, feasible):
    u = np.zeros(len(counts))
    for i, row in enumerate(rows):
        if row is not None and sched[i]:
            u[i] = row.u[row.pick(mu)]
    s = np.where(u > 0, params.s_active, params.s_sleep)
    obj = float(exact_objective(u, s, counts, x, w, params, r))
    return u, obj, feasible, (mu if np.isfinite(mu) else 0.0)


def _refine(rows, sched, mu, counts, x, w, params, r):
    """Re-solve the winning schedule on grids zoomed around its coarse solution."""
    sleep_phi = _sleep_phi(counts, x, w, params)
    sleep_d = np.asarray(counts, dtype=float)
    fine = []
    for i, row in enumerate(rows):
        if row is None or not sched[i]:
            fine.append(None)
            continue
        j = int(row.pick(mu))
        lo = row.u[j - 1] if j > 0 else 0.0
        hi = row.u[min(j + 1, len(row.u) - 1)]
        fine.append(_row(_grid(float(lo), float(hi), GRID), float(counts[i]), float(x[i]), float(w[i]), params, r))
    act = sched[None, :]
    _, dem0, _ = _evaluate(fine, act, np.zeros(1), sleep_phi, sleep_d)
    if dem0[0] <= params.u_macro + _FEAS_TOL:
        mu_f = 0.0
    else:
        _, dmin, _ = _evaluate(fine, act, np.full(1, np.inf), sleep_phi, sleep_d)
        if dmin[0] > params.u_macro + _FEAS_TOL:
            return _finish(rows, sched, mu, counts, x, w, params, r, True)
        mu_f = float(_bisect(fine, act, sleep_phi, sleep_d, params.u_macro)[0])
    coarse = _finish(rows, sched, mu, counts, x, w, params, r, True)
    refined = _finish(fine, sched, mu_f, counts, x, w, params, r, True)
    return refined if refined[1] <= coarse[1] else coarse


def _inputs(x, counts, w, params):
    x = np.asarray(x, dtype=float)
    counts = np.asarray(counts, dtype=float)
    w = np.asarray(w, dtype=float)
    if not (x.shape == counts.shape == w.shape == (params.n,)):
        raise CentralizedError(f"expected vectors of length {params.n}")
    return x, counts, w


def solve_fixed_schedule(schedule, x, counts, w, params: SimParams, r: float) -> ScheduleResult:
    """Minimize the exact objective with the active set fixed to ``schedule``."""
    x, counts, w = _inputs(x, counts, w, params)
    sched = np.asarray(schedule, dtype=bool)
    if sched.shape != (params.n,):
        raise CentralizedError(f"schedule must have {params.n} flags")
    u_max = build_u_max(x, w, r, params)
    if np.any(sched & (u_max <= 0)):
        # an SBS without usable energy cannot be active
        u = np.zeros(params.n)
        return ScheduleResult(u, float(exact_objective(u, np.full(params.n, params.s_sleep), counts, x, w, params, r)), False)
    u, obj, feasible, mu = _solve(sched[None, :], counts, x, w, params, r)
    if not feasible:
        obj = float(exact_objective(u, np.where(u > 0, params.s_active, params.s_sleep), counts, x, w, params, r))
    return ScheduleResult(u, obj, feasible, mu)


def solve_centralized(x, counts, w, params: SimParams, r: float, masked=None) -> ZoomDecision:
    """Best decision over all 2^N schedules.

    ``counts`` are the counts the controller sees: the masked ones when the
    SBSs add noise, in which case they enter both objective and constraint.
    If no schedule is feasible the one with the smallest capacity violation
    is returned.
    """
    x, counts, w = _inputs(x, counts, w, params)
    if params.n > MAX_N:
        raise CentralizedError(f"schedule enumeration is limited to N <= {MAX_N}")
    u, _, _, mu = _solve(all_schedules(params.n), counts, x, w, params, r)
    s = np.where(u > 0, params.s_active, params.s_sleep)
    return ZoomDecision(u=u, s=s, mu_out=mu, masked_counts=counts if masked is None else masked)
