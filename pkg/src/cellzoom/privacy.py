"""Laplace masking noise and the confidentiality/accuracy budget.

``psi`` is the Chernoff bound on P(sum of N iid Laplace(1) > y); the budget
calculator finds the largest noise scale delta/epsilon keeping
P(|sum v_i| > Lambda) below zeta, either through ``psi`` or through the
Bernstein-type closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PROPOSED = "proposed"
BERNSTEIN = "bernstein"


class PrivacyError(ValueError):
    pass


@dataclass(frozen=True)
class PrivacyBudget:
    epsilon: float
    delta: float
    lam_thresh: float
    zeta: float
    method: str

    def __post_init__(self) -> None:
        for name in ("epsilon", "delta", "lam_thresh", "zeta"):
            if not getattr(self, name) > 0:
                raise PrivacyError(f"{name} must be positive")
        if self.method not in (PROPOSED, BERNSTEIN):
            raise PrivacyError(f"unknown method {self.method!r}")

    @property
    def rho(self) -> float:
        return self.delta / self.epsilon


def sample_laplace(rho: float, rng: np.random.Generator, size=None):
    """Laplace(rho) draws by inverse-CDF sampling."""
    if rho < 0:
        raise PrivacyError("rho must be non-negative")
    p = rng.random(size)
    # rng.random is on [0, 1); the quantile is infinite at 0
    p = np.where(p == 0.0, 0.5, p) if size is not None else (0.5 if p == 0.0 else p)
    if rho == 0:
        return np.zeros_like(p) if size is not None else 0.0
    return laplace_quantile(p, rho)


def laplace_quantile(p, rho: float):
    """Inverse CDF of Laplace(rho) at ``p`` in (0, 1)."""
    p = np.asarray(p, dtype=float)
    d = p - 0.5
    out = -rho * np.sign(d) * np.log1p(-2.0 * np.abs(d))
    return out if out.ndim else float(out)


def laplace_cdf(y, rho: float):
    y = np.asarray(y, dtype=float)
    return np.where(y < 0, 0.5 * np.exp(y / rho), 1.0 - 0.5 * np.exp(-y / rho))


def log_psi(n: int, y):
    """log psi_N(y), stable for large N and y and for y -> 0."""
    if n < 1:
        raise PrivacyError("N must be >= 1")
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise PrivacyError("psi needs y > 0")
    root = np.hypot(y, n)
    # sqrt(y^2 + N^2) - N without cancellation
    gap = y * y / (root + n)
    out = 2 * n * np.log(y) + n - root - n * math.log(2 * n) - n * np.log(gap)
    return out if out.ndim else float(out)


def psi(n: int, y):
    out = np.exp(log_psi(n, y))
    return out if np.ndim(out) else float(out)


def tail_bound(n: int, lam_thresh: float, rho: float) -> float:
    """Upper bound 2 psi_N(Lambda / rho) on P(|sum of N Laplace(rho)| > Lambda)."""
    if rho == 0:
        return 0.0
    return min(1.0, 2.0 * psi(n, lam_thresh / rho))


def _solve_y(n: int, zeta: float) -> float:
    """y* with 2 psi_N(y*) = zeta, by bisection in y."""
    if not 0 < zeta:
        raise PrivacyError("zeta must be positive")
    target = math.log(zeta / 2.0)
    lo = 1e-6
    if log_psi(n, lo) <= target:
        raise PrivacyError(f"zeta={zeta} is not attainable: 2*psi_N <= zeta already near y=0")
    hi = 1.0
    while log_psi(n, hi) >= target:
        hi *= 2.0
    while hi - lo > 1e-9:
        mid = 0.5 * (lo + hi)
        if log_psi(n, mid) >= target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def max_ratio_proposed(n: int, lam_thresh: float, zeta: float) -> float:
    """Largest delta/epsilon allowed by the psi_N condition."""
    if lam_thresh <= 0:
        raise PrivacyError("Lambda must be positive")
    return lam_thresh / _solve_y(n, zeta)


def max_ratio_bernstein(n: int, lam_thresh: float, zeta: float) -> float:
    """Largest delta/epsilon allowed by the Bernstein condition."""
    if n < 1 or lam_thresh <= 0 or not 0 < zeta:
        raise PrivacyError("need N >= 1, Lambda > 0, zeta > 0")
    ell = math.log(2.0 / zeta)
    if n <= 2.0 * ell:
        return lam_thresh / (4.0 * ell)
    return lam_thresh / (2.0 * math.sqrt(2.0 * n * ell))


def budget(n: int, lam_thresh: float, zeta: float, method: str = PROPOSED,
           delta: float = 1.0) -> PrivacyBudget:
    """Budget at adjacency width ``delta`` with the smallest admissible epsilon."""
    ratio = (max_ratio_proposed if method == PROPOSED else max_ratio_bernstein)(n, lam_thresh, zeta)
    return PrivacyBudget(epsilon=delta / ratio, delta=delta, lam_thresh=lam_thresh, zeta=zeta, method=method)


def empirical_tail(n: int, rho: float, lam_thresh: float, samples: int,
                   rng: np.random.Generator, chunk: int = 100_000) -> float:
    """Monte Carlo estimate of P(|sum of N Laplace(rho)| > Lambda)."""
    if rho == 0:
        return 0.0
    hits = 0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        total = sample_laplace(rho, rng, (m, n)).sum(axis=1)
        hits += int(np.count_nonzero(np.abs(total) > lam_thresh))
        done += m
    return hits / samples


def budget_rows(ns, lam_thresh: float, zeta: float):
    """CSV-ready rows (N, Lambda, zeta, method, max delta/epsilon)."""
    rows = []
    for n in ns:
        rows.append((n, lam_thresh, zeta, PROPOSED, max_ratio_proposed(n, lam_thresh, zeta)))
        rows.append((n, lam_thresh, zeta, BERNSTEIN, max_ratio_bernstein(n, lam_thresh, zeta)))
    return rows
