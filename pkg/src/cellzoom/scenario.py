"""Two-day user-count and harvest profiles."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

K_TWO_DAYS = 577  # k = 0..576 at h = 300 s
DAY = 288

# (nu_1i, nu_2i, p_i) of the four-cell reference scenario
TABLE2_PEAKS = ((60.0, 70.0, 144.0), (90.0, 80.0, 174.0), (70.0, 90.0, 114.0), (80.0, 60.0, 144.0))


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    users: np.ndarray  # (K, N)
    harvest: np.ndarray  # (K, N), W
    label: str = ""

    def __post_init__(self) -> None:
        self.users = np.asarray(self.users, dtype=float)
        self.harvest = np.asarray(self.harvest, dtype=float)
        if self.users.ndim != 2 or self.users.shape != self.harvest.shape:
            raise ScenarioError("users and harvest must be (K, N) arrays of equal shape")
        if not (np.all(np.isfinite(self.users)) and np.all(np.isfinite(self.harvest))):
            raise ScenarioError("scenario entries must be finite")
        if np.any(self.users < 0) or np.any(self.harvest < 0):
            raise ScenarioError("scenario entries must be non-negative")

    @property
    def k(self) -> int:
        return self.users.shape[0]

    @property
    def n(self) -> int:
        return self.users.shape[1]


def synthetic_counts(k, peaks) -> np.ndarray:
    """Users in a cell with first/second-day peaks nu1, nu2 at step p and p + 288."""
    nu1, nu2, p = peaks
    k = np.asarray(k, dtype=float)
    first = nu1 * np.exp(-((k - p) ** 2) / 1e5)
    second = nu2 * np.exp(-((k - p - DAY) ** 2) / 1e5)
    return np.where(k < DAY, first, second)


def synthetic_harvest(k) -> np.ndarray:
    """Harvested power with a 10 W peak at noon of each day."""
    k = np.asarray(k, dtype=float)
    return np.where(k < DAY, 10.0 * np.exp(-((k - 144) ** 2) / 5e4), 10.0 * np.exp(-((k - 432) ** 2) / 5e4))


def from_peaks(peaks, k_steps: int = K_TWO_DAYS, label: str = "") -> Scenario:
    k = np.arange(k_steps)
    users = np.stack([synthetic_counts(k, pk) for pk in peaks], axis=1)
    harvest = np.repeat(synthetic_harvest(k)[:, None], len(peaks), axis=1)
    return Scenario(users, harvest, label)


def table2_scenario(k_steps: int = K_TWO_DAYS) -> Scenario:
    return from_peaks(TABLE2_PEAKS, k_steps, "table2")


def random_peaks(n: int, rng: np.random.Generator):
    if n < 1:
        raise ScenarioError("n must be >= 1")
    nu = rng.integers(40, 71, size=(n, 2))
    p = rng.integers(114, 175, size=n)
    return [(float(a), float(b), float(c)) for (a, b), c in zip(nu, p)]


def random_scenario(n: int, rng: np.random.Generator, k_steps: int = K_TWO_DAYS) -> Scenario:
    """Peaks uniform on {40..70}, peak times uniform on {114..174}."""
    return from_peaks(random_peaks(n, rng), k_steps, f"random-n{n}")


def write_scenario(scenario: Scenario, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["k", "i", "users", "harvest_w"])
        for k in range(scenario.k):
            for i in range(scenario.n):
                wr.writerow([k, i, repr(float(scenario.users[k, i])), repr(float(scenario.harvest[k, i]))])


def read_scenario(path) -> Scenario:
    path = Path(path)
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if rd.fieldnames != ["k", "i", "users", "harvest_w"]:
            raise ScenarioError(f"{path}: expected header k,i,users,harvest_w")
        rows = [(int(r["k"]), int(r["i"]), float(r["users"]), float(r["harvest_w"])) for r in rd]
    if not rows:
        raise ScenarioError(f"{path}: no rows")
    k_steps = max(r[0] for r in rows) + 1
    n = max(r[1] for r in rows) + 1
    if len(rows) != k_steps * n:
        raise ScenarioError(f"{path}: expected {k_steps * n} rows, got {len(rows)}")
    users = np.full((k_steps, n), np.nan)
    harvest = np.full((k_steps, n), np.nan)
    for k, i, u, w in rows:
        users[k, i] = u
        harvest[k, i] = w
    if np.isnan(users).any():
        raise ScenarioError(f"{path}: duplicate or missing (k, i) rows")
    return Scenario(users, harvest, path.stem)
