import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracheat.acceptance import forward_errors, observed_orders
from fracheat.data import EigenMode, Separable
from fracheat.errors import UsageError
from fracheat.forward import (StateField, observe_point, observe_weighted, solve_forward,
                              solve_forward_const_source, weak_residual)
from fracheat.grids import SpaceGrid, TimeGrid
from fracheat.spectral import project


def test_eigenmode_decays_exactly(sp64):
    grid = TimeGrid(2.0, 40)
    u = solve_forward(sp64, EigenMode(2), None, None, grid)
    expect = np.exp(-sp64.eigenvalues[1] * grid.times)
    np.testing.assert_allclose(u.coeffs[:, 1], expect, rtol=1e-12)
    assert np.max(np.abs(np.delete(u.coeffs, 1, axis=1))) <= 1e-12


def test_constant_potential_exact(sp64, rng):
    grid = TimeGrid(1.0, 25)
    phi = rng.standard_normal(64)
    c = 0.7
    u = solve_forward(sp64, phi, None, c, grid)
    c0 = project(phi, sp64)
    expect = c0 * np.exp(np.outer(grid.times, c - sp64.eigenvalues))
    np.testing.assert_allclose(u.coeffs, expect, rtol=1e-12, atol=1e-14)


def test_constant_source_closed_form(sp64):
    grid = TimeGrid(1.0, 2000)
    fk = np.zeros(64)
    fk[0] = 3.0
    exact = solve_forward_const_source(sp64, "1-x^2", fk, grid)
    num = solve_forward(sp64, "1-x^2", Separable(EigenMode(1), 3.0), None, grid)
    assert np.max(np.abs(exact.values - num.values)) <= 1e-6


def test_constant_source_steady_state(sp64):
    grid = TimeGrid(60.0, 4)
    fk = project(np.cos(sp64.grid.nodes), sp64)
    u = solve_forward_const_source(sp64, None, fk, grid)
    np.testing.assert_allclose(u.coeffs[-1], fk / sp64.eigenvalues, rtol=1e-12, atol=1e-15)


def test_state_field_validation(sp64):
    grid = TimeGrid(1.0, 4)
    with pytest.raises(UsageError):
        StateField(sp64, grid, np.zeros((4, 64)))
    with pytest.raises(UsageError):
        solve_forward_const_source(sp64, None, np.zeros(3), grid)
    with pytest.raises(UsageError):
        solve_forward(sp64, np.zeros(7), None, None, grid)


def test_observe_point_snaps(sp64):
    grid = TimeGrid(1.0, 4)
    u = solve_forward(sp64, EigenMode(1), None, None, grid)
    x = sp64.grid.nodes
    obs = observe_point(u, x[10] + 0.3 * sp64.grid.h)
    assert obs.meta["q_index"] == 10
    assert obs.meta["q_snapped"] == x[10]
    np.testing.assert_allclose(obs.values, sp64.phi(1)[10] * np.exp(-sp64.lambda1 * grid.times), rtol=1e-12)
    assert observe_point(u, x[11] - 0.4 * sp64.grid.h).meta["q_index"] == 11
    with pytest.raises(UsageError):
        observe_point(u, 1.0)


def test_snap_ties_go_left():
    g = SpaceGrid(0.0, 8.0, 7)  # h = 1, nodes 1..7
    assert g.snap(2.5) == 1
    assert g.snap(2.5000001) == 2
    assert g.snap(0.2) == 0 and g.snap(7.9) == 6


def test_observe_weighted_picks_mode(sp64):
    grid = TimeGrid(1.0, 4)
    u = solve_forward(sp64, EigenMode(1, 2.0), None, None, grid)
    w = observe_weighted(u, EigenMode(1))
    np.testing.assert_allclose(w.values, 2 * np.exp(-sp64.lambda1 * grid.times), rtol=1e-12)
    assert np.max(np.abs(observe_weighted(u, EigenMode(3)).values)) <= 1e-12


def test_weak_residual_small_and_second_order(sp64):
    res = []
    for M in (2500, 5000, 10000):
        grid = TimeGrid(1.0, M)
        f = Separable(EigenMode(1), "1+t")
        u = solve_forward(sp64, EigenMode(1), f, 0.3, grid)
        res.append(weak_residual(u, p=0.3, f=f))
    assert res[-1] <= 1e-8
    for r1, r2 in zip(res, res[1:]):
        assert 3.2 <= r1 / r2 <= 4.8


def test_energy_decay(sp64, rng):
    grid = TimeGrid(2.0, 100)
    for _ in range(5):
        phi = rng.standard_normal(64)
        u = solve_forward(sp64, phi, None, None, grid)
        bound = np.exp(-sp64.lambda1 * grid.times) * np.sqrt(sp64.grid.h) * np.linalg.norm(phi)
        assert np.all(u.norms() <= bound * (1 + 1e-12))


@settings(max_examples=25, deadline=None)
@given(st.floats(-5, 5), st.integers(0, 2 ** 31))
def test_linearity(alpha, seed):
    from conftest import build_spectrum
    sp = build_spectrum(0.5, 24)
    rng = np.random.default_rng(seed)
    grid = TimeGrid(1.0, 20)
    p = rng.standard_normal(21)
    a, b = rng.standard_normal((2, 24))
    fa, fb = rng.standard_normal((2, 21, 24))
    u = lambda phi, f: solve_forward(sp, phi, f, p, grid).values
    lhs = u(a + alpha * b, fa + alpha * fb)
    rhs = u(a, fa) + alpha * u(b, fb)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, np.max(np.abs(lhs)))


def test_second_order_in_time():
    orders = observed_orders(forward_errors())
    assert all(1.8 <= o <= 2.2 for o in orders)
