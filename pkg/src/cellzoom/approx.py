"""Separable approximation of the per-step cell zooming problem.

Builds the box bound on each SBS's transmission power, the convex local
objective (saturation dropped, l1 surrogate for the activation count,
previous system power in the cross term) and the coupling function whose
sum must stay non-positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SimParams, full_power, users_served


@dataclass(frozen=True)
class LocalProblem:
    """Inputs of one SBS's local problem at one time step."""

    u_max: float
    users: float
    r: float
    energy_gap: float  # X_max - x - h*w
    linear_coeff: float
    g_offset: float


def build_u_max(x, w, r: float, params: SimParams):
    """Upper bound on transmission power from the battery and from u <= r^(-19/10)."""
    battery = params.gamma * (np.asarray(x, dtype=float) / params.h + w - params.s_active)
    return np.maximum(0.0, np.minimum(full_power(r), battery))


def linear_coeff(s_prev, params: SimParams):
    """Coefficient of the linear term: l1 surrogate plus previous-power cross term."""
    return params.lam * params.h ** 2 * (
        params.s_active ** 2 - params.s_sleep ** 2 + 2.0 * np.asarray(s_prev, dtype=float) / params.gamma
    )


def g_offset(params: SimParams) -> float:
    """Per-SBS share (1 - c) U_macro / N of the macro cell capacity."""
    return (1.0 - params.c) * params.u_macro / params.n


def local_objective(u, users, x, s_prev, w, params: SimParams, r: float):
    """f(u, U): unserved users squared + weighted energy gap + linear term."""
    u = np.asarray(u, dtype=float)
    gap = params.x_max - x - params.h * w + params.h * u / params.gamma
    unserved = users - users_served(u, users, r)
    return unserved ** 2 + params.lam * gap ** 2 + linear_coeff(s_prev, params) * u


def coupling(u, users, params: SimParams, r: float):
    """g(u, U) = U - F(u, U) - (1 - c) U_macro / N."""
    return users - users_served(u, users, r) - g_offset(params)


def local_problem(x: float, s_prev: float, users: float, w: float,
                  params: SimParams, r: float) -> LocalProblem:
    return LocalProblem(
        u_max=float(build_u_max(x, w, r, params)),
        users=float(users),
        r=r,
        energy_gap=params.x_max - x - params.h * w,
        linear_coeff=float(linear_coeff(s_prev, params)),
        g_offset=g_offset(params),
    )
