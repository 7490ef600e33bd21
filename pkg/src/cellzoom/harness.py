"""Two-day simulations, Monte Carlo batches and performance metrics."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .centralized import solve_centralized
from .distributed import CLOSED_FORM, run_timestep, sbs_streams
from .model import SimParams, battery_step_vec, check_mode, coverage_coefficient, users_served
from .privacy import laplace_quantile
from .scenario import Scenario

CENTRALIZED = "centralized"
DISTRIBUTED = "distributed"
METHODS = (CENTRALIZED, DISTRIBUTED)

TRACE_HEADER = ["k", "i", "users", "masked", "users_served", "u_w", "s_w", "x_j", "mu"]


class HarnessError(ValueError):
    pass


@dataclass
class SimTrace:
    """Per-(k, i) records of one run; ``x[k]`` is the energy at the start of step k."""

    users: np.ndarray
    masked: np.ndarray
    u: np.ndarray
    s: np.ndarray
    x: np.ndarray
    served: np.ndarray
    mu: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.u.shape[-2]

    @property
    def n(self) -> int:
        return self.u.shape[-1]


def noise_matrix(seed, rho: float, k_steps: int, n: int) -> np.ndarray:
    """(K, N) Laplace masking noise; SBS i draws from its own stream of ``seed``.

    Column i equals K successive single draws from stream i.
    """
    if rho == 0:
        return np.zeros((k_steps, n))
    cols = []
    for rng in sbs_streams(seed, n):
        p = rng.random(k_steps)
        p[p == 0.0] = 0.5
        cols.append(laplace_quantile(p, rho))
    return np.stack(cols, axis=1)


def _check_params(scenario: Scenario, params: SimParams) -> None:
    if scenario.n != params.n:
        raise HarnessError(f"scenario has {scenario.n} cells but params.n = {params.n}")


def run_simulation(scenario: Scenario, method: str, rho: float, params: SimParams,
                   seed=0, solver: str = CLOSED_FORM, t_max: int | None = None) -> SimTrace:
    """Simulate every step of ``scenario`` with one control method."""
    if method not in METHODS:
        raise HarnessError(f"unknown method {method!r}")
    if rho < 0:
        raise HarnessError("rho must be non-negative")
    _check_params(scenario, params)
    r = coverage_coefficient(params)
    k_steps, n = scenario.users.shape
    masked_all = scenario.users + noise_matrix(seed, rho, k_steps, n)

    x = np.full(n, params.x0)
    s_prev = np.full(n, params.s_sleep)
    mu = 0.0
    out = {name: np.zeros((k_steps, n)) for name in ("u", "s", "x", "served")}
    mus = np.zeros(k_steps)
    for k in range(k_steps):
        users, w, masked = scenario.users[k], scenario.harvest[k], masked_all[k]
        if method == DISTRIBUTED:
            dec = run_timestep(x, s_prev, users, w, mu, params, r, masked=masked, solver=solver, t_max=t_max)
        else:
            dec = solve_centralized(x, masked, w, params, r)
        check_mode(dec.u, dec.s, params)
        out["x"][k] = x
        out["u"][k] = dec.u
        out["s"][k] = dec.s
        out["served"][k] = users_served(dec.u, users, r)
        mus[k] = dec.mu_out
        x = battery_step_vec(x, w, dec.u, dec.s, params)
        s_prev = dec.s
        mu = dec.mu_out
    meta = {"method": method, "rho": rho, "seed": seed, "t_max": t_max or params.t_max,
            "solver": solver if method == DISTRIBUTED else "enumeration", "label": scenario.label}
    return SimTrace(scenario.users.copy(), masked_all, out["u"], out["s"], out["x"], out["served"], mus, meta)


def run_distributed_batch(scenario: Scenario, rho: float, params: SimParams, seeds,
                          solver: str = CLOSED_FORM, t_max: int | None = None) -> SimTrace:
    """Distributed runs for many noise seeds at once; arrays gain a leading sample axis.

    Sample b reproduces ``run_simulation(..., seed=seeds[b])`` exactly.
    """
    _check_params(scenario, params)
    r = coverage_coefficient(params)
    k_steps, n = scenario.users.shape
    b = len(seeds)
    noise = np.stack([noise_matrix(sd, rho, k_steps, n) for sd in seeds])  # (B, K, N)
    masked_all = scenario.users[None] + noise
    x = np.full((b, n), params.x0)
    s_prev = np.full((b, n), params.s_sleep)
    mu = np.zeros(b)
    out = {name: np.zeros((b, k_steps, n)) for name in ("u", "s", "x", "served")}
    mus = np.zeros((b, k_steps))
    for k in range(k_steps):
        users = np.broadcast_to(scenario.users[k], (b, n))
        w = np.broadcast_to(scenario.harvest[k], (b, n))
        dec = run_timestep(x, s_prev, users, w, mu, params, r, masked=masked_all[:, k], solver=solver, t_max=t_max)
        out["x"][:, k] = x
        out["u"][:, k] = dec.u
        out["s"][:, k] = dec.s
        out["served"][:, k] = users_served(dec.u, users, r)
        mus[:, k] = dec.mu_out
        x = battery_step_vec(x, w, dec.u, dec.s, params)
        s_prev = dec.s
        mu = dec.mu_out
    meta = {"method": DISTRIBUTED, "rho": rho, "seeds": list(seeds), "t_max": t_max or params.t_max, "solver": solver}
    return SimTrace(np.broadcast_to(scenario.users, (b, k_steps, n)).copy(), masked_all,
                    out["u"], out["s"], out["x"], out["served"], mus, meta)


def consumed_energy_kj(trace: SimTrace, params: SimParams):
    """Transmission plus system energy drawn over the horizon [kJ]."""
    return (params.h * (trace.u / params.gamma + trace.s)).sum(axis=(-2, -1)) / 1000.0


def energy_efficiency(trace: SimTrace, params: SimParams):
    """Users served by the SBSs per kJ consumed."""
    return trace.served.sum(axis=(-2, -1)) / consumed_energy_kj(trace, params)


def charging_rate(trace: SimTrace, params: SimParams):
    """Time- and cell-averaged x / X_max."""
    return (trace.x / params.x_max).mean(axis=(-2, -1))


def relative_l2_error(u_test: np.ndarray, u_ref: np.ndarray) -> float:
    """100 * mean over cells of ||u_test_i - u_ref_i||_2 / ||u_ref_i||_2 (time series norms)."""
    u_test = np.asarray(u_test, dtype=float)
    u_ref = np.asarray(u_ref, dtype=float)
    if u_test.shape != u_ref.shape:
        raise HarnessError("power series must have equal shape")
    num = np.linalg.norm(u_test - u_ref, axis=0)
    den = np.linalg.norm(u_ref, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0, num / den, np.where(num > 0, np.inf, 0.0))
    return float(100.0 * ratio.mean())


def truncation_error(trace_t: SimTrace, trace_ref: SimTrace) -> float:
    return relative_l2_error(trace_t.u, trace_ref.u)


def approx_error(trace_app: SimTrace, trace_exact: SimTrace) -> float:
    return relative_l2_error(trace_app.u, trace_exact.u)


def metrics(trace: SimTrace, params: SimParams) -> dict[str, float]:
    return {
        "energy_efficiency_users_per_kj": float(energy_efficiency(trace, params)),
        "charging_rate": float(charging_rate(trace, params)),
        "served_users_total": float(trace.served.sum()),
        "consumed_energy_kj": float(consumed_energy_kj(trace, params)),
    }


def write_trace(trace: SimTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(TRACE_HEADER)
        for k in range(trace.k):
            for i in range(trace.n):
                wr.writerow([k, i, repr(float(trace.users[k, i])), repr(float(trace.masked[k, i])),
                             repr(float(trace.served[k, i])), repr(float(trace.u[k, i])),
                             repr(float(trace.s[k, i])), repr(float(trace.x[k, i])), repr(float(trace.mu[k]))])


def read_trace(path) -> SimTrace:
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if rd.fieldnames != TRACE_HEADER:
            raise HarnessError(f"{path}: unexpected trace header")
        rows = list(rd)
    k_steps = max(int(r["k"]) for r in rows) + 1
    n = max(int(r["i"]) for r in rows) + 1
    cols = {c: np.zeros((k_steps, n)) for c in ("users", "masked", "users_served", "u_w", "s_w", "x_j")}
    mu = np.zeros(k_steps)
    for r in rows:
        k, i = int(r["k"]), int(r["i"])
        for c in cols:
            cols[c][k, i] = float(r[c])
        mu[k] = float(r["mu"])
    return SimTrace(cols["users"], cols["masked"], cols["u_w"], cols["s_w"], cols["x_j"], cols["users_served"], mu)


def write_metrics(values: dict[str, float], path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["metric", "value"])
        for key, val in values.items():
            wr.writerow([key, repr(float(val))])
