"""Per-SBS local solver.

The stationarity condition of the local problem, multiplied through by
u^(9/19), is

    Xi(u) = p1 u^(28/19) + p2 u^(10/19) + p3 u^(9/19) - p4 = 0.

``solve_local_exact`` brackets the root of Xi; ``solve_local_closed_form``
uses chi^2, where chi is the positive root of p1 c^3 + (p2 + p3) c - p4.
Every function broadcasts over numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .approx import linear_coeff
from .model import SimParams

_E28 = 28.0 / 19.0
_E10 = 10.0 / 19.0
_E9 = 9.0 / 19.0
_E20 = 20.0 / 19.0

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class SolverError(ValueError):
    pass


@dataclass(frozen=True)
class TheoremCoeffs:
    p1: np.ndarray | float
    p2: np.ndarray | float
    p3: np.ndarray | float
    p4: np.ndarray | float

    def arrays(self):
        return np.broadcast_arrays(*(np.asarray(p, dtype=float) for p in (self.p1, self.p2, self.p3, self.p4)))


def theorem_coeffs(x, s_prev, users, masked, mu, w, params: SimParams, r: float) -> TheoremCoeffs:
    """Coefficients of Xi for an SBS holding true count ``users``.

    The true count enters the objective part, the transmitted ``masked``
    count (users + noise) only the multiplier part.
    """
    users = np.asarray(users, dtype=float)
    p1 = 2.0 * params.lam * params.h ** 2 / params.gamma ** 2
    p2 = 20.0 * r * r * users ** 2 / 19.0
    p3 = (2.0 * params.lam * params.h / params.gamma) * (params.x_max - np.asarray(x, dtype=float) - params.h * np.asarray(w, dtype=float)) \
        + linear_coeff(s_prev, params)
    p4 = (10.0 * r / 19.0) * (2.0 * users ** 2 + np.asarray(mu, dtype=float) * np.asarray(masked, dtype=float))
    return TheoremCoeffs(p1, p2, p3, p4)


def xi(u, coeffs: TheoremCoeffs):
    p1, p2, p3, p4 = coeffs.arrays()
    u = np.asarray(u, dtype=float)
    return p1 * u ** _E28 + p2 * u ** _E10 + p3 * u ** _E9 - p4


def reduced_objective(u, coeffs: TheoremCoeffs):
    """Local objective minus its value at u = 0 (antiderivative of u^(-9/19) Xi)."""
    p1, p2, p3, p4 = coeffs.arrays()
    u = np.asarray(u, dtype=float)
    return 0.5 * p1 * u * u + 0.95 * p2 * u ** _E20 + p3 * u - 1.9 * p4 * u ** _E10


def _check(coeffs: TheoremCoeffs):
    arrs = coeffs.arrays()
    if not all(np.all(np.isfinite(a)) for a in arrs):
        raise SolverError("non-finite coefficients")
    if np.any(arrs[0] <= 0):
        raise SolverError("p1 must be positive")
    return arrs


def _bisect_xi(p1, p2, p3, p4, lo, hi):
    """Vectorized bisection for Xi with Xi(lo) < 0 <= Xi(hi)."""
    lo = lo.copy()
    hi = hi.copy()
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        live = (mid > lo) & (mid < hi)
        if not live.any():
            break
        val = p1 * mid ** _E28 + p2 * mid ** _E10 + p3 * mid ** _E9 - p4
        neg = (val < 0) & live
        pos = (~neg) & live
        lo = np.where(neg, mid, lo)
        hi = np.where(pos, mid, hi)
    # the endpoint with the smaller residual
    r_lo = np.abs(p1 * lo ** _E28 + p2 * lo ** _E10 + p3 * lo ** _E9 - p4)
    r_hi = np.abs(p1 * hi ** _E28 + p2 * hi ** _E10 + p3 * hi ** _E9 - p4)
    return np.where(r_lo < r_hi, lo, hi)


def xi_root(coeffs: TheoremCoeffs):
    """Unique positive root of Xi; requires p4 > 0."""
    p1, p2, p3, p4 = _check(coeffs)
    if np.any(p4 <= 0):
        raise SolverError("xi_root needs p4 > 0")
    hi = np.maximum(1.0, 2.0 * (p4 / p1) ** (19.0 / 28.0))
    for _ in range(200):
        low = (p1 * hi ** _E28 + p2 * hi ** _E10 + p3 * hi ** _E9 - p4) <= 0
        if not low.any():
            break
        hi = np.where(low, 2.0 * hi, hi)
    out = _bisect_xi(p1, p2, p3, p4, np.zeros_like(hi), hi)
    return out if out.ndim else float(out)


def golden_section(fun: Callable[[float], float], a: float, b: float, tol: float = 1e-8) -> float:
    """Minimizer of a unimodal scalar function on [a, b]."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def grid_minimize(fun: Callable, lo: float, hi: float, points: int = 10_000, tol: float = 1e-8) -> float:
    """Global minimizer on [lo, hi]: dense grid, then golden section around the best node."""
    if hi <= lo:
        return lo
    grid = np.linspace(lo, hi, points)
    vals = fun(grid)
    j = int(np.argmin(vals))
    a, b = grid[max(j - 1, 0)], grid[min(j + 1, points - 1)]
    best = golden_section(lambda u: float(fun(u)), a, b, tol)
    candidates = [(float(vals[j]), float(grid[j])), (float(fun(best)), best)]
    return min(candidates)[1]


def solve_local_exact(coeffs: TheoremCoeffs, u_max):
    """Minimizer of the local objective on [0, u_max]."""
    p1, p2, p3, p4 = _check(coeffs)
    u_max = np.broadcast_to(np.asarray(u_max, dtype=float), p1.shape)
    out = np.zeros(p1.shape)

    regular = p4 > 0
    if regular.any():
        a1, a2, a3, a4, um = p1[regular], p2[regular], p3[regular], p4[regular], u_max[regular]
        at_max = (a1 * um ** _E28 + a2 * um ** _E10 + a3 * um ** _E9 - a4) <= 0
        sol = np.where(at_max, um, 0.0)
        inner = ~at_max
        if inner.any():
            sol[inner] = _bisect_xi(a1[inner], a2[inner], a3[inner], a4[inner],
                                    np.zeros(int(inner.sum())), um[inner])
        out[regular] = sol

    # p4 <= 0 with p3 >= 0: Xi > 0 on (0, inf), objective increasing, u = 0.
    fallback = np.flatnonzero((p4 <= 0) & (p3 < 0))
    flat = out.reshape(-1)
    for j in fallback:
        c = TheoremCoeffs(p1.flat[j], p2.flat[j], p3.flat[j], p4.flat[j])
        um = float(u_max.flat[j])
        flat[j] = grid_minimize(lambda u, c=c: reduced_objective(u, c), 0.0, um)
    return out if out.ndim else float(out)


def cubic_chi(coeffs: TheoremCoeffs):
    """Unique positive root chi of p1 c^3 + (p2 + p3) c - p4 = 0 (needs p4 > 0).

    Cardano's formula chi = a - b with a = cbrt(xi + eta), b = q / (3 p1 a).
    Since a^3 - b^3 = p4 / p1 it is evaluated as (p4 / p1) / (a^2 + ab + b^2),
    which has no cancellation even when q^3 dominates p4^2.  When p2 + p3 < 0 and the cubic
    has three real roots the trigonometric form supplies the largest one.
    """
    p1, p2, p3, p4 = _check(coeffs)
    if np.any(p4 <= 0):
        raise SolverError("cubic_chi needs p4 > 0")
    q = p2 + p3
    half = p4 / (2.0 * p1)
    disc = half * half + q ** 3 / (27.0 * p1 ** 3)
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.cbrt(half + np.sqrt(np.maximum(disc, 0.0)))
        b = q / (3.0 * p1 * a)
        cardano = (p4 / p1) / (a * a + a * b + b * b)
        pp = q / p1
        m = 2.0 * np.sqrt(np.maximum(-pp / 3.0, 0.0))
        arg = np.clip((3.0 * (-p4 / p1) / (2.0 * pp)) * np.sqrt(np.maximum(-3.0 / pp, 0.0)), -1.0, 1.0)
        trig = m * np.cos(np.arccos(arg) / 3.0)
    out = np.where(disc >= 0, cardano, trig)
    return out if out.ndim else float(out)


def solve_local_closed_form(coeffs: TheoremCoeffs, u_max):
    """Approximate minimizer min(chi^2, u_max).

    Where p4 <= 0 the closed form is undefined: 0 when p3 >= 0, otherwise the
    exact solver's fallback.
    """
    p1, p2, p3, p4 = _check(coeffs)
    u_max = np.broadcast_to(np.asarray(u_max, dtype=float), p1.shape)
    regular = p4 > 0
    safe = TheoremCoeffs(p1, p2, p3, np.where(regular, p4, 1.0))
    chi = np.asarray(cubic_chi(safe))
    out = np.where(regular, np.minimum(chi * chi, u_max), 0.0)
    odd = (~regular) & (p3 < 0)
    if odd.any():
        sub = TheoremCoeffs(p1[odd], p2[odd], p3[odd], p4[odd])
        out[odd] = solve_local_exact(sub, u_max[odd])
    return out if out.ndim else float(out)
