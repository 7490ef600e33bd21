"""Parameter sweeps and Monte Carlo comparisons built on the harness."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .distributed import CLOSED_FORM, EXACT
from .harness import (
    CENTRALIZED,
    DISTRIBUTED,
    approx_error,
    charging_rate,
    energy_efficiency,
    run_distributed_batch,
    run_simulation,
    truncation_error,
)
from .model import SimParams
from .scenario import Scenario

T_REF = 30
BATCH = 50


def sample_seeds(seed: int, samples: int) -> list[int]:
    """Distinct per-sample noise seeds derived from one master seed."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(samples, dtype=np.uint64)]


@dataclass
class CompareRow:
    method: str
    rho: float
    samples: int
    ee_mean: float
    ee_std: float
    degradation: float  # (EE at rho = 0 - mean EE) / EE at rho = 0
    charging_rate: float


def _centralized_metrics(args):
    scenario, rho, params, seed = args
    tr = run_simulation(scenario, CENTRALIZED, rho, params, seed=seed)
    return float(energy_efficiency(tr, params)), float(charging_rate(tr, params))


def noisy_metrics(scenario: Scenario, method: str, rho: float, params: SimParams, seeds,
                  workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Energy efficiency and charging rate of every sample seed."""
    if method == DISTRIBUTED:
        ee, cr = [], []
        for start in range(0, len(seeds), BATCH):
            tr = run_distributed_batch(scenario, rho, params, seeds[start:start + BATCH])
            ee.append(energy_efficiency(tr, params))
            cr.append(charging_rate(tr, params))
        return np.concatenate(ee), np.concatenate(cr)
    jobs = [(scenario, rho, params, sd) for sd in seeds]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            out = list(pool.map(_centralized_metrics, jobs))
    else:
        out = [_centralized_metrics(j) for j in jobs]
    arr = np.array(out).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def compare(scenario: Scenario, params: SimParams, rhos, samples: int, seed: int = 0,
            methods=(DISTRIBUTED, CENTRALIZED), workers: int = 1) -> list[CompareRow]:
    """Energy-efficiency degradation under masking noise, per method and noise scale.

    Both methods see the same noise realisations for a given sample.
    """
    seeds = sample_seeds(seed, samples)
    rows = []
    for method in methods:
        base = run_simulation(scenario, method, 0.0, params)
        ee0 = float(energy_efficiency(base, params))
        for rho in rhos:
            if rho == 0:
                ee, cr = np.array([ee0]), np.array([float(charging_rate(base, params))])
            else:
                ee, cr = noisy_metrics(scenario, method, rho, params, seeds, workers)
            rows.append(CompareRow(method, float(rho), len(ee), float(ee.mean()), float(ee.std()),
                                   (ee0 - float(ee.mean())) / ee0, float(cr.mean())))
    return rows


def truncation_sweep(scenario: Scenario, params: SimParams, ts, t_ref: int = T_REF) -> list[tuple[int, float]]:
    """Truncation error of noiseless distributed runs with T rounds against ``t_ref`` rounds."""
    ref = run_simulation(scenario, DISTRIBUTED, 0.0, params, t_max=t_ref)
    out = []
    for t in ts:
        tr = ref if t == t_ref else run_simulation(scenario, DISTRIBUTED, 0.0, params, t_max=t)
        out.append((int(t), truncation_error(tr, ref)))
    return out


def approx_errors(scenario: Scenario, params: SimParams) -> tuple[float, float]:
    """(E1, E2): closed-form and exact-root distributed runs against the enumeration baseline."""
    exact = run_simulation(scenario, CENTRALIZED, 0.0, params)
    app1 = run_simulation(scenario, DISTRIBUTED, 0.0, params, solver=CLOSED_FORM)
    app2 = run_simulation(scenario, DISTRIBUTED, 0.0, params, solver=EXACT)
    return approx_error(app1, exact), approx_error(app2, exact)


def approx_sweep(scenario: Scenario, params: SimParams, s_actives) -> list[tuple[float, float, float]]:
    return [(float(sa), *approx_errors(scenario, params.with_(s_active=float(sa)))) for sa in s_actives]
