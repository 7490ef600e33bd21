import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from cellzoom.model import (
    ModelError,
    SbsState,
    SimParams,
    battery_step,
    ber,
    coverage_coefficient,
    coverage_exponent,
    full_power,
    inv_erfc,
    params_from_config,
    params_to_config,
    sat,
    users_served,
)

P = SimParams()


def _mp_chain(q=4, bits=12000, sigma=-138.8, z=161.8296, area=0.16 * math.pi):
    """High-precision ber -> inverse erfc -> b -> r."""
    mpmath.mp.dps = 40
    q = mpmath.mpf(q)
    b_er = 1 - mpmath.exp(mpmath.log(1 + mpmath.log((q - mpmath.mpf("1.065")) / mpmath.mpf("3.01")) / mpmath.mpf("4.473")) / bits)
    y = mpmath.mpf(8) / 3 * b_er
    e = mpmath.findroot(lambda t: mpmath.erfc(t) - y, 3.4)
    b = -(mpmath.mpf(5) / 2 * e ** 2 + mpmath.mpf(sigma) + mpmath.mpf(z)) / 19
    r = mpmath.pi * mpmath.power(10, b + mpmath.mpf(30) / 19) / mpmath.mpf(area)
    return float(b_er), float(e), float(b), float(r)


def test_ber_identity_point():
    assert ber(1.065 + 3.01, 12000) == 0.0


def test_ber_table2_value():
    oracle = _mp_chain()[0]
    assert ber(4.0, 12000) == pytest.approx(oracle, rel=1e-12)
    assert abs(ber(4.0, 12000) - 4.715e-7) < 1e-9


def test_ber_double_packet_halves():
    assert ber(4.0, 24000) == pytest.approx(2.357e-7, abs=1e-10)
    assert ber(4.0, 24000) == pytest.approx(ber(4.0, 12000) / 2, rel=1e-6)


@pytest.mark.parametrize("q", [1.0, 1.065, 1.07, 4.5])
def test_ber_domain(q):
    with pytest.raises(ModelError):
        ber(q, 12000)


def test_ber_decreasing_in_packet_size():
    # exponent is negative for q below 1.065 + 3.01
    for q in (2.0, 3.0, 4.0):
        vals = [ber(q, s) for s in (1000, 2000, 8000, 12000, 50000)]
        assert all(a > b for a, b in zip(vals, vals[1:]))


def test_inv_erfc_examples():
    assert inv_erfc(1.0) == 0.0
    assert inv_erfc(special.erfc(1.0)) == pytest.approx(1.0, abs=1e-10)
    assert inv_erfc(1.2572e-6) == pytest.approx(3.41, abs=0.02)


@pytest.mark.parametrize("y", [0.0, 2.0, -0.1, 2.5])
def test_inv_erfc_domain(y):
    with pytest.raises(ModelError):
        inv_erfc(y)


@pytest.mark.parametrize("y", [1e-300, 1e-12, 1e-6, 0.3, 0.999, 1.5, 1.999999])
def test_inv_erfc_matches_scipy(y):
    assert inv_erfc(y) == pytest.approx(special.erfcinv(y), rel=1e-12, abs=1e-14)


def test_inv_erfc_round_trip_grid():
    xs = np.linspace(0.0, 5.0, 201)
    back = np.array([inv_erfc(special.erfc(x)) for x in xs])
    assert np.max(np.abs(back - xs)) < 1e-10


def test_coverage_table2():
    _, _, b_or, r_or = _mp_chain()
    assert coverage_exponent(P) == pytest.approx(b_or, abs=1e-9)
    assert coverage_coefficient(P) == pytest.approx(r_or, rel=1e-9)
    assert coverage_exponent(P) == pytest.approx(-2.749, abs=0.02)
    assert coverage_coefficient(P) == pytest.approx(0.42, abs=0.02)


def test_coverage_b_zero_case():
    e = inv_erfc(8 / 3 * ber(4.0, 12000))
    p = P.with_(z_dbm=-(2.5 * e * e + P.sigma_dbm))
    assert coverage_exponent(p) == pytest.approx(0.0, abs=1e-12)
    assert coverage_coefficient(p) == pytest.approx(math.pi * 10 ** (30 / 19) / p.area_km2, rel=1e-10)


def test_coverage_inverse_in_area():
    r1 = coverage_coefficient(P)
    r2 = coverage_coefficient(P.with_(area_km2=2 * P.area_km2))
    assert r2 == pytest.approx(r1 / 2, rel=1e-14)


def test_users_served_examples():
    r = 0.42
    assert users_served(0.0, 75.0, r) == 0.0
    assert users_served(full_power(r), 60.0, r) == pytest.approx(60.0, rel=1e-12)
    assert users_served(1.0, 100.0, r) == pytest.approx(42.0, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 0.9), st.floats(1.0, 200.0), st.floats(0.01, 10.0))
def test_users_served_increasing_concave(r, users, u0):
    h = 1e-3 * u0
    f = lambda u: float(users_served(u, users, r))
    assert f(u0 + h) > f(u0)
    assert f(u0 + h) - 2 * f(u0) + f(u0 - h) < 0


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 0.9), st.floats(0.0, 500.0), st.floats(0.0, 1.0))
def test_users_served_bounded_by_users(r, users, frac):
    u = frac * full_power(r)
    assert users_served(u, users, r) <= users * (1 + 1e-12)


def test_sat_examples():
    assert sat(-5.0, 40000.0) == 0.0
    assert sat(20000.0, 40000.0) == 20000.0
    assert sat(40001.0, 40000.0) == 40000.0


def test_battery_step_examples():
    assert battery_step(SbsState(30000.0, 0.5), 0.5, 0.0, 0.5, P) == 30000.0
    assert battery_step(SbsState(30000.0, 0.5), 10.0, 3.2, 1.5, P) == pytest.approx(29550.0)
    assert battery_step(SbsState(39900.0, 0.5), 10.0, 0.0, 0.5, P) == 40000.0


@pytest.mark.parametrize("u,s", [(0.0, 1.5), (1.0, 0.5), (1.0, 1.0), (-1.0, 1.5)])
def test_battery_step_mode_mismatch(u, s):
    with pytest.raises(ModelError):
        battery_step(SbsState(30000.0, 0.5), 5.0, u, s, P)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 40000), st.floats(0, 1e4), st.floats(0, 100), st.booleans())
def test_battery_step_stays_in_range(x, w, u, active):
    u = u if active and u > 0 else 0.0
    s = P.s_active if u > 0 else P.s_sleep
    nxt = battery_step(SbsState(x, s), w, u, s, P)
    assert 0.0 <= nxt <= P.x_max


def test_params_validation():
    with pytest.raises(ModelError):
        SimParams(gamma=0.0)
    with pytest.raises(ModelError):
        SimParams(s_active=0.5, s_sleep=0.5)
    with pytest.raises(ModelError):
        SimParams(c=1.0)
    with pytest.raises(ModelError):
        SimParams(q=1.07)


def test_config_units_round_trip():
    cfg = params_to_config(P)
    assert cfg["x_max_kj"] == 40.0
    assert params_from_config(cfg) == P
    assert params_from_config({"x_max_kj": 50}).x_max == 50_000.0
    with pytest.raises(ModelError):
        params_from_config({"x_max": 40})
