"""Distributed cell zooming by dual decomposition.

Each SBS minimizes its local objective plus mu times its coupling term; the
macro base station sums the coupling terms evaluated at the masked counts and
takes a projected subgradient step on mu.  After T rounds every SBS whose
power is at most u_thres goes to sleep.

Arrays may carry leading batch dimensions: SBS is always the last axis, so a
batch of independent Monte Carlo samples runs in one pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .approx import build_u_max, coupling
from .local_solver import solve_local_closed_form, solve_local_exact, theorem_coeffs
from .model import SimParams, users_served
from .privacy import sample_laplace

CLOSED_FORM = "closed_form"
EXACT = "exact"
_SOLVERS = {CLOSED_FORM: solve_local_closed_form, EXACT: solve_local_exact}


class DistributedError(ValueError):
    pass


@dataclass
class ZoomDecision:
    u: np.ndarray
    s: np.ndarray
    mu_out: np.ndarray | float
    masked_counts: np.ndarray
    iterates: list = field(default_factory=list)


def sbs_streams(seed, n: int) -> list[np.random.Generator]:
    """One independent generator per SBS, spawned from ``seed``."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in ss.spawn(n)]


def mask_counts(users, rho: float, rngs: Sequence[np.random.Generator] | np.random.Generator):
    """users + Laplace(rho) noise; SBS i draws from ``rngs[i]``.

    With leading batch dimensions each SBS stream fills its whole column.
    """
    users = np.asarray(users, dtype=float)
    if rho < 0:
        raise DistributedError("rho must be non-negative")
    if rho == 0:
        return users.copy()
    if isinstance(rngs, np.random.Generator):
        return users + sample_laplace(rho, rngs, users.shape)
    n = users.shape[-1]
    if len(rngs) != n:
        raise DistributedError(f"need {n} random streams, got {len(rngs)}")
    batch = users.shape[:-1]
    noise = np.stack([np.asarray(sample_laplace(rho, rngs[i], batch if batch else None)) for i in range(n)], axis=-1)
    return users + noise


def stepsize(t: int, alpha0: float) -> float:
    if t < 1:
        raise DistributedError("iteration index starts at 1")
    return alpha0 / t


def multiplier_update(mu, alpha: float, subgrad):
    return np.maximum(0.0, mu + alpha * subgrad)


def run_timestep(x, s_prev, users, w, mu_in, params: SimParams, r: float,
                 masked=None, rho: float = 0.0, rngs=None, solver: str = CLOSED_FORM,
                 t_max: int | None = None, record: bool = False) -> ZoomDecision:
    """One time step of the distributed algorithm.

    ``masked`` overrides noise generation; otherwise counts are masked once
    with Laplace(rho) from ``rngs`` and held fixed for all rounds.
    """
    users = np.asarray(users, dtype=float)
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    s_prev = np.asarray(s_prev, dtype=float)
    if not (users.shape == x.shape == w.shape) or users.shape[-1] != params.n:
        raise DistributedError(f"inputs must share shape (..., {params.n})")
    for name, arr in (("users", users), ("x", x), ("w", w), ("mu_in", mu_in)):
        if not np.all(np.isfinite(arr)):
            raise DistributedError(f"non-finite {name}")
    if np.any(np.asarray(mu_in) < 0):
        raise DistributedError("mu_in must be non-negative")
    if solver not in _SOLVERS:
        raise DistributedError(f"unknown local solver {solver!r}")
    solve = _SOLVERS[solver]
    t_max = params.t_max if t_max is None else t_max

    if masked is None:
        if rho > 0 and rngs is None:
            raise DistributedError("noise requested without random streams")
        masked = mask_counts(users, rho, rngs) if rho > 0 else users.copy()
    masked = np.asarray(masked, dtype=float)

    u_max = build_u_max(x, w, r, params)
    mu = np.asarray(mu_in, dtype=float)
    iterates = []
    u_star = np.zeros_like(users)
    for t in range(1, t_max + 1):
        coeffs = theorem_coeffs(x, s_prev, users, masked, mu[..., None], w, params, r)
        u_star = solve(coeffs, u_max)
        subgrad = coupling(u_star, masked, params, r).sum(axis=-1)
        mu = multiplier_update(mu, stepsize(t, params.alpha0), subgrad)
        if record:
            iterates.append((t, u_star.copy(), mu.copy()))

    active = u_star > params.u_thres
    u = np.where(active, u_star, 0.0)
    s = np.where(active, params.s_active, params.s_sleep)
    return ZoomDecision(u=u, s=s, mu_out=mu if mu.ndim else float(mu), masked_counts=masked, iterates=iterates)


def served_total(decision: ZoomDecision, users, r: float):
    return users_served(decision.u, users, r).sum(axis=-1)
