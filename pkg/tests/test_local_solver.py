import numpy as np
import pytest

from cellzoom.local_solver import (
    SolverError,
    TheoremCoeffs,
    cubic_chi,
    golden_section,
    reduced_objective,
    solve_local_closed_form,
    solve_local_exact,
    theorem_coeffs,
    xi,
    xi_root,
)
from cellzoom.approx import build_u_max, coupling, local_objective

from conftest import grid_argmin, physical_instance


def random_coeffs(rng, m):
    """Log-uniform positive coefficients."""
    p1 = 10 ** rng.uniform(-2, 3, m)
    p2 = 10 ** rng.uniform(-2, 4, m)
    p3 = 10 ** rng.uniform(-2, 4, m)
    p4 = 10 ** rng.uniform(-2, 5, m)
    return TheoremCoeffs(p1, p2, p3, p4)


def test_coefficients_reference_params(params, r):
    c = theorem_coeffs(30000.0, 0.5, 60.0, 60.0, 0.0, 5.0, params, r)
    assert c.p1 == pytest.approx(87.890625)
    zero = theorem_coeffs(30000.0, 0.5, 0.0, 0.0, 0.0, 5.0, params, r)
    assert zero.p2 == 0 and zero.p4 == 0


def test_coefficients_hand_values(params):
    c = theorem_coeffs(30000.0, 0.5, 60.0, 60.0, 0.0, 5.0, params, 0.42)
    assert c.p2 == pytest.approx(668.46, abs=0.01)
    assert c.p4 == pytest.approx(1591.6, abs=0.1)


def test_xi_is_scaled_derivative_of_local_problem(params, r):
    # Xi(u) = u^(9/19) d/du [f + mu g], checked by central differences
    rng = np.random.default_rng(7)
    for _ in range(50):
        kw, u_max, obj = physical_instance(rng, params, r)
        c = theorem_coeffs(**kw, params=params, r=r)
        u = rng.uniform(0.2, 6.0)
        h = 1e-5
        deriv = (obj(u + h) - obj(u - h)) / (2 * h)
        assert xi(u, c) == pytest.approx(u ** (9 / 19) * deriv, rel=1e-5, abs=1e-4)


def test_reduced_objective_tracks_local_problem(params, r):
    rng = np.random.default_rng(8)
    kw, _, obj = physical_instance(rng, params, r)
    c = theorem_coeffs(**kw, params=params, r=r)
    u = np.linspace(0, 6, 13)
    np.testing.assert_allclose(reduced_objective(u, c), obj(u) - obj(0.0), rtol=1e-9, atol=1e-6)


def test_exact_constructed_root():
    c = TheoremCoeffs(1.0, 1.0, 1.0, 3.0)
    assert solve_local_exact(c, 10.0) == pytest.approx(1.0, abs=1e-12)
    assert xi_root(c) == pytest.approx(1.0, abs=1e-12)
    assert solve_local_exact(c, 0.5) == 0.5


def test_exact_zero_rule():
    assert solve_local_exact(TheoremCoeffs(1.0, 2.0, 0.5, -1.0), 4.0) == 0.0
    assert solve_local_exact(TheoremCoeffs(1.0, 2.0, 0.5, 0.0), 4.0) == 0.0


def test_exact_rejects_bad_coeffs():
    with pytest.raises(SolverError):
        solve_local_exact(TheoremCoeffs(0.0, 1.0, 1.0, 1.0), 1.0)
    with pytest.raises(SolverError):
        solve_local_exact(TheoremCoeffs(1.0, np.nan, 1.0, 1.0), 1.0)


def test_exact_reference_instance_against_grid(params, r):
    kw = dict(x=30000.0, s_prev=params.s_sleep, users=60.0, masked=60.0, mu=0.0, w=5.0)
    u_max = float(build_u_max(kw["x"], kw["w"], r, params))
    c = theorem_coeffs(**kw, params=params, r=r)
    oracle = grid_argmin(lambda u: local_objective(u, 60.0, 30000.0, params.s_sleep, 5.0, params, r), 0.0, u_max)
    assert solve_local_exact(c, u_max) == pytest.approx(oracle, abs=1e-4)


@pytest.mark.parametrize("kind", ["regular", "hot", "negative"])
def test_exact_against_grid_oracle(params, r, kind):
    rng = np.random.default_rng({"regular": 1, "hot": 2, "negative": 3}[kind])
    for _ in range(15):
        kw, u_max, obj = physical_instance(rng, params, r, negative_mask=kind == "negative", hot_battery=kind == "hot")
        c = theorem_coeffs(**kw, params=params, r=r)
        got = solve_local_exact(c, u_max)
        oracle = grid_argmin(obj, 0.0, u_max, points=200_001)
        assert got == pytest.approx(oracle, abs=1e-4)


def test_exact_vectorized_matches_scalar():
    rng = np.random.default_rng(4)
    c = random_coeffs(rng, 30)
    u_max = rng.uniform(0.1, 20, 30)
    vec = solve_local_exact(c, u_max)
    for j in range(30):
        cj = TheoremCoeffs(c.p1[j], c.p2[j], c.p3[j], c.p4[j])
        assert vec[j] == solve_local_exact(cj, u_max[j])


def test_chi_examples():
    assert cubic_chi(TheoremCoeffs(1.0, 1.5, 1.5, 4.0)) == pytest.approx(1.0, abs=1e-12)
    assert cubic_chi(TheoremCoeffs(1.0, 0.0, 0.0, 8.0)) == pytest.approx(2.0, abs=1e-12)
    c = TheoremCoeffs(87.89, 400.0, 300.0, 1600.0)
    chi = cubic_chi(c)
    assert abs(87.89 * chi ** 3 + 700 * chi - 1600) <= 1e-9 * 1600


def test_chi_three_real_roots_branch():
    # p2 + p3 < 0 with a large negative linear term: trigonometric branch
    c = TheoremCoeffs(1.0, 0.0, -12.0, 1.0)
    chi = cubic_chi(c)
    assert chi > 0
    assert abs(chi ** 3 - 12 * chi - 1) < 1e-10
    roots = np.roots([1.0, 0.0, -12.0, -1.0])
    assert chi == pytest.approx(max(roots.real), rel=1e-12)


def test_chi_rejects_nonpositive_p4():
    with pytest.raises(SolverError):
        cubic_chi(TheoremCoeffs(1.0, 1.0, 1.0, 0.0))


def test_closed_form_examples():
    assert solve_local_closed_form(TheoremCoeffs(1.0, 1.5, 1.5, 4.0), 10.0) == pytest.approx(1.0)
    assert solve_local_closed_form(TheoremCoeffs(1.0, 0.0, 0.0, 8.0), 3.0) == 3.0
    assert solve_local_closed_form(TheoremCoeffs(1.0, 2.0, 0.5, -2.0), 3.0) == 0.0


def test_closed_form_negative_p4_negative_p3_uses_exact():
    c = TheoremCoeffs(1.0, 2.0, -10.0, -1.0)
    got = solve_local_closed_form(c, 10.0)
    assert got == solve_local_exact(c, 10.0)
    # reduced objective u^2/2 + 1.9 u^(20/19) - 10u + 1.9 u^(10/19) dips below zero inside (0, 10)
    grid = np.linspace(0, 10, 1000001)
    assert got == pytest.approx(grid[np.argmin(reduced_objective(grid, c))], abs=1e-4)
    assert 0 < got < 10
    assert solve_local_exact(TheoremCoeffs(1.0, 2.0, -3.0, -1.0), 10.0) == 0.0


def test_root_uniqueness_single_sign_change():
    rng = np.random.default_rng(5)
    c = random_coeffs(rng, 200)
    grid = np.logspace(-40, 8, 8001)
    for j in range(200):
        cj = TheoremCoeffs(c.p1[j], c.p2[j], c.p3[j], c.p4[j])
        signs = np.sign(xi(grid, cj))
        assert np.count_nonzero(np.diff(signs[signs != 0])) == 1


def test_root_unique_with_negative_p3():
    rng = np.random.default_rng(6)
    grid = np.logspace(-40, 8, 8001)
    for _ in range(100):
        cj = TheoremCoeffs(10 ** rng.uniform(-1, 2), 10 ** rng.uniform(-1, 3), -(10 ** rng.uniform(-1, 3)), 10 ** rng.uniform(-1, 4))
        signs = np.sign(xi(grid, cj))
        assert np.count_nonzero(np.diff(signs[signs != 0])) == 1


def test_clipped_solution_objective_decreasing_at_u_max(params, r):
    rng = np.random.default_rng(9)
    seen = 0
    for _ in range(200):
        kw, _, _ = physical_instance(rng, params, r)
        kw["x"] = rng.uniform(0, 1500)  # nearly empty battery binds u_max
        u_max = float(build_u_max(kw["x"], kw["w"], r, params))
        obj = lambda u, kw=kw: local_objective(u, kw["users"], kw["x"], kw["s_prev"], kw["w"], params, r) + kw["mu"] * coupling(u, kw["masked"], params, r)
        c = theorem_coeffs(**kw, params=params, r=r)
        if c.p4 <= 0 or u_max <= 1e-3:
            continue
        if xi_root(c) > u_max:
            seen += 1
            h = 1e-6 * u_max
            assert obj(u_max) - obj(u_max - h) <= 0
            assert solve_local_exact(c, u_max) == u_max
    assert seen > 0


def test_golden_section_quadratic():
    assert golden_section(lambda u: (u - 1.234) ** 2, 0.0, 5.0, 1e-10) == pytest.approx(1.234, abs=1e-8)


def _bracket(chi):
    lo, hi = chi ** (19 / 9), chi ** (19 / 10)
    return np.minimum(lo, hi), np.maximum(lo, hi)


def test_residual_on_random_draws():
    rng = np.random.default_rng(20)
    c = random_coeffs(rng, 10_000)
    u = xi_root(c)
    assert np.all(np.abs(xi(u, c)) <= 1e-9 * np.maximum(1.0, c.p4))


def test_bracket_on_random_draws():
    rng = np.random.default_rng(21)
    c = random_coeffs(rng, 10_000)
    u = xi_root(c)
    chi = cubic_chi(c)
    lo, hi = _bracket(chi)
    slack = 1e-12 * np.maximum(1.0, hi)
    assert np.all((lo - slack <= u) & (u <= hi + slack))
    assert np.all((lo - slack <= chi ** 2) & (chi ** 2 <= hi + slack))
    assert np.all(np.abs(c.p1 * chi ** 3 + (c.p2 + c.p3) * chi - c.p4) <= 1e-9 * np.maximum(1.0, c.p4))


def test_closed_form_matches_exact_where_bracket_is_tight():
    # at chi = 1 the bracket collapses, so chi^2 equals u_sol
    c = TheoremCoeffs(1.0, 1.5, 1.5, 4.0)
    assert solve_local_closed_form(c, 10.0) == pytest.approx(solve_local_exact(c, 10.0), abs=1e-12)


def test_exact_against_million_point_grid(params, r):
    rng = np.random.default_rng(22)
    for kind in ("regular", "negative"):
        kw, u_max, obj = physical_instance(rng, params, r, negative_mask=kind == "negative", hot_battery=True)
        c = theorem_coeffs(**kw, params=params, r=r)
        assert solve_local_exact(c, u_max) == pytest.approx(grid_argmin(obj, 0.0, u_max), abs=1e-4)
