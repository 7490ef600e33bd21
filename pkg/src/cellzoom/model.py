"""Physical and association model of an off-grid small cell.

All quantities are SI internally: joules, watts, seconds.  User counts are
real-valued.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any, Mapping

import numpy as np
from scipy import special

F_EXP = 10.0 / 19.0  # exponent of u in the association function

# constants of the QoE -> BER map
_Q_OFFSET = 1.065
_Q_SCALE = 3.01
_Q_DIV = 4.473
Q_MIN = _Q_OFFSET + _Q_SCALE * math.exp(-_Q_DIV)


class ModelError(ValueError):
    """Raised for inputs outside the domain of a model formula."""


@dataclass(frozen=True)
class SimParams:
    """Physical and algorithmic constants of one run (SI units)."""

    n: int = 4
    area_km2: float = 0.16 * math.pi
    x_max: float = 40_000.0
    x0: float = 30_000.0
    gamma: float = 0.32
    h: float = 300.0
    u_macro: float = 150.0
    s_active: float = 1.5
    s_sleep: float = 0.5
    sigma_dbm: float = -138.8
    z_dbm: float = 161.8296
    q: float = 4.0
    packet_bits: float = 12_000.0
    lam: float = 5e-5
    c: float = 0.1
    u_thres: float = 0.1
    t_max: int = 20
    alpha0: float = 7.0

    def __post_init__(self) -> None:
        positive = ("area_km2", "x_max", "h", "u_macro", "s_active",
                    "s_sleep", "packet_bits", "alpha0")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ModelError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.n < 1:
            raise ModelError("n must be >= 1")
        if self.t_max < 1:
            raise ModelError("t_max must be >= 1")
        if not 0 < self.gamma <= 1:
            raise ModelError("gamma must lie in (0, 1]")
        if not self.s_active > self.s_sleep:
            raise ModelError("s_active must exceed s_sleep")
        if not 0 <= self.c < 1:
            raise ModelError("c must lie in [0, 1)")
        if not self.q > Q_MIN:
            raise ModelError(f"q must exceed {Q_MIN:.6f}")
        if not 0 <= self.x0 <= self.x_max:
            raise ModelError("x0 must lie in [0, x_max]")
        if self.lam < 0 or self.u_thres < 0:
            raise ModelError("lam and u_thres must be non-negative")

    @classmethod
    def table2(cls, **overrides: Any) -> "SimParams":
        return replace(cls(), **overrides)

    def with_(self, **overrides: Any) -> "SimParams":
        return replace(self, **overrides)


# JSON config keys carry their unit; values are converted to SI on load.
CONFIG_KEYS: dict[str, tuple[str, float]] = {
    "n": ("n", 1.0),
    "area_km2": ("area_km2", 1.0),
    "x_max_kj": ("x_max", 1e3),
    "x0_kj": ("x0", 1e3),
    "gamma": ("gamma", 1.0),
    "h_s": ("h", 1.0),
    "u_macro_users": ("u_macro", 1.0),
    "s_active_w": ("s_active", 1.0),
    "s_sleep_w": ("s_sleep", 1.0),
    "sigma_dbm": ("sigma_dbm", 1.0),
    "z_dbm": ("z_dbm", 1.0),
    "q": ("q", 1.0),
    "packet_bits": ("packet_bits", 1.0),
    "lambda": ("lam", 1.0),
    "c": ("c", 1.0),
    "u_thres_w": ("u_thres", 1.0),
    "t_max": ("t_max", 1.0),
    "alpha0": ("alpha0", 1.0),
}
_INT_FIELDS = {"n", "t_max"}


def params_from_config(cfg: Mapping[str, Any]) -> SimParams:
    """Build SimParams from a unit-suffixed config mapping.

    Missing keys keep their reference default; unknown keys raise.
    """
    kwargs: dict[str, Any] = {}
    for key, value in cfg.items():
        if key not in CONFIG_KEYS:
            raise ModelError(f"unknown config key {key!r}")
        name, scale = CONFIG_KEYS[key]
        if name in _INT_FIELDS:
            if float(value) != int(value):
                raise ModelError(f"{key} must be an integer")
            kwargs[name] = int(value)
        else:
            kwargs[name] = float(value) * scale
    return SimParams(**kwargs)


def params_to_config(params: SimParams) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, (name, scale) in CONFIG_KEYS.items():
        value = getattr(params, name)
        out[key] = value if name in _INT_FIELDS else value / scale
    return out


@dataclass
class SbsState:
    """Dynamic state of one SBS: residual energy and last system power."""

    x: float
    s_prev: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.x) and self.x >= 0):
            raise ModelError(f"residual energy must be finite and >= 0, got {self.x}")


def ber(q: float, packet_bits: float) -> float:
    """Bit error rate meeting QoE ``q`` for packets of ``packet_bits`` bits."""
    ratio = (q - _Q_OFFSET) / _Q_SCALE
    if ratio <= 0:
        raise ModelError(f"QoE {q} gives a non-positive log argument")
    inner = 1.0 + math.log(ratio) / _Q_DIV
    if inner <= 0:
        raise ModelError(f"QoE {q} is below the valid range (> {Q_MIN:.6f})")
    if q > _Q_OFFSET + _Q_SCALE:
        raise ModelError(f"QoE {q} above {_Q_OFFSET + _Q_SCALE} gives a negative bit error rate")
    return -math.expm1(math.log(inner) / packet_bits)


def inv_erfc(y: float) -> float:
    """Inverse complementary error function on (0, 2).

    Bisection on ``scipy.special.erfc`` followed by Newton polishing.
    """
    if not 0 < y < 2:
        raise ModelError(f"inv_erfc needs 0 < y < 2, got {y}")
    if y == 1.0:
        return 0.0
    if y > 1.0:
        return -inv_erfc(2.0 - y)
    # erfc is decreasing; erfc(0) = 1 > y
    lo, hi = 0.0, 1.0
    while special.erfc(hi) > y:
        lo, hi = hi, 2.0 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if special.erfc(mid) > y:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(3):
        deriv = -2.0 / math.sqrt(math.pi) * math.exp(-x * x)
        if deriv == 0.0:
            break
        step = (special.erfc(x) - y) / deriv
        if not math.isfinite(step):
            break
        x -= step
    return x


def coverage_exponent(params: SimParams) -> float:
    """The exponent ``b`` entering the association coefficient."""
    e = inv_erfc(8.0 / 3.0 * ber(params.q, params.packet_bits))
    return -(2.5 * e * e + params.sigma_dbm + params.z_dbm) / 19.0


def coverage_coefficient(params: SimParams) -> float:
    """Association coefficient r so that F(u, U) = r U u^(10/19)."""
    b = coverage_exponent(params)
    return math.pi * 10.0 ** (b + 30.0 / 19.0) / params.area_km2


def full_power(r: float) -> float:
    """Transmission power serving every user in the cell, r^(-19/10)."""
    return r ** (-1.0 / F_EXP)


def users_served(u, users, r):
    """F(u, U) = r U u^(10/19); zero at u = 0."""
    return r * np.asarray(users, dtype=float) * np.power(np.asarray(u, dtype=float), F_EXP)


def sat(x, x_max):
    return np.clip(x, 0.0, x_max)


def battery_step(state: SbsState, w: float, u: float, s: float, params: SimParams) -> float:
    """Residual energy after one period with harvest ``w`` and powers ``u``, ``s``."""
    check_mode(u, s, params)
    return float(sat(state.x + params.h * (w - u / params.gamma - s), params.x_max))


def check_mode(u, s, params: SimParams) -> None:
    """Raise unless every (u, s) pair obeys sleep <=> u == 0."""
    u = np.asarray(u, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(u < 0):
        raise ModelError("transmission power must be non-negative")
    active = s == params.s_active
    sleep = s == params.s_sleep
    if not np.all(active | sleep):
        raise ModelError("system power must be s_active or s_sleep")
    if np.any(sleep & (u != 0)) or np.any(active & (u == 0)):
        raise ModelError("u and s disagree: sleep mode requires u == 0 and active mode u > 0")


def battery_step_vec(x, w, u, s, params: SimParams):
    """Array form of :func:`battery_step` without the mode check."""
    return sat(x + params.h * (w - u / params.gamma - s), params.x_max)
