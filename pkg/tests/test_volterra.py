import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracheat.errors import NumericalFailure, UsageError
from fracheat.grids import TimeGrid
from fracheat.volterra import (SampledPath, VolterraProblem, cumulative_trapezoid, differentiate,
                               log_derivative_coefficient, solve_second_kind)


def _ones(t, tau):
    return np.ones_like(tau)


def test_zero_kernel_returns_free_term():
    grid = TimeGrid(1.0, 50)
    g = np.cos(grid.times)
    r = solve_second_kind(VolterraProblem.from_function(grid, g, lambda t, tau: 0 * tau))
    np.testing.assert_array_equal(r.values, g)


def test_unit_kernel_exponential():
    grid = TimeGrid(1.0, 400)
    r = solve_second_kind(VolterraProblem.from_function(grid, 1.0, _ones))
    assert np.max(np.abs(r.values - np.exp(grid.times))) <= 1e-4


def test_manufactured_saturating_solution():
    # r = 2 - e^{-t} solves r = g + int_0^t r with g = 3 - 2t - 2e^{-t}
    grid = TimeGrid(1.0, 400)
    r = solve_second_kind(VolterraProblem.from_function(
        grid, lambda t: 3 - 2 * t - 2 * np.exp(-t), _ones))
    assert r.values[-1] == pytest.approx(1.6321206, abs=1e-5)
    assert np.max(np.abs(r.values - (2 - np.exp(-grid.times)))) <= 1e-5


def test_non_convolution_kernel():
    # int_0^t (t - tau) cos(tau) dtau = 1 - cos t
    grid = TimeGrid(2.0, 400)
    r = solve_second_kind(VolterraProblem.from_function(
        grid, lambda t: 2 * np.cos(t) - 1, lambda t, tau: t - tau))
    assert np.max(np.abs(r.values - np.cos(grid.times))) <= 1e-5


def test_from_matrix_matches_function():
    grid = TimeGrid(1.0, 30)
    t = grid.times
    K = np.exp(-np.abs(t[:, None] - t[None, :]))
    a = solve_second_kind(VolterraProblem.from_matrix(grid, np.sin(t) + 1, K))
    b = solve_second_kind(VolterraProblem.from_function(grid, lambda s: np.sin(s) + 1,
                                                        lambda s, tau: np.exp(-(s - tau))))
    np.testing.assert_allclose(a.values, b.values, rtol=1e-14)
    np.testing.assert_array_equal(np.triu(VolterraProblem.from_matrix(grid, 0.0, K).kernel_matrix(), 1), 0)


def test_second_order_convergence():
    errs = []
    for M in (50, 100, 200, 400):
        grid = TimeGrid(1.0, M)
        r = solve_second_kind(VolterraProblem.from_function(grid, 1.0, _ones))
        errs.append(np.max(np.abs(r.values - np.exp(grid.times))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all((orders > 1.8) & (orders < 2.2))


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.integers(0, 2 ** 31))
def test_linear_in_free_term(alpha, seed):
    rng = np.random.default_rng(seed)
    grid = TimeGrid(1.0, 40)
    K = np.tril(rng.standard_normal((41, 41)))
    g1, g2 = rng.standard_normal((2, 41))
    sol = lambda g: solve_second_kind(VolterraProblem.from_matrix(grid, g, K)).values
    lhs = sol(g1 + alpha * g2)
    rhs = sol(g1) + alpha * sol(g2)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, np.max(np.abs(lhs)))


def test_near_singular_diagonal():
    grid = TimeGrid(1.0, 10)
    with pytest.raises(NumericalFailure):
        solve_second_kind(VolterraProblem.from_function(grid, 1.0, lambda t, tau: 0 * tau + 2 / grid.dt))


def test_nonfinite_kernel():
    grid = TimeGrid(1.0, 10)
    with pytest.raises(NumericalFailure):
        solve_second_kind(VolterraProblem.from_function(grid, 1.0, lambda t, tau: 0 * tau + np.nan))


def test_path_validation():
    grid = TimeGrid(1.0, 10)
    with pytest.raises(UsageError):
        SampledPath(grid, np.zeros(5))
    with pytest.raises(NumericalFailure):
        SampledPath(grid, np.full(11, np.inf))
    p = SampledPath.from_function(grid, np.sin)
    assert len(p) == 11 and p.sup() == pytest.approx(np.sin(1.0))
    with pytest.raises(ValueError):
        p.values[0] = 1.0


def test_differentiate_exact_on_quadratics():
    grid = TimeGrid(2.0, 17)
    t = grid.times
    d = differentiate(SampledPath(grid, 3 * t ** 2 - t + 5))
    np.testing.assert_allclose(d.values, 6 * t - 1, atol=1e-11)


def test_differentiate_order():
    errs = []
    for M in (50, 100, 200):
        grid = TimeGrid(1.0, M)
        d = differentiate(SampledPath.from_function(grid, np.sin))
        errs.append(np.max(np.abs(d.values - np.cos(grid.times))))
    for e1, e2 in zip(errs, errs[1:]):
        assert 3.5 <= e1 / e2 <= 4.5


def test_cumulative_trapezoid_linear():
    grid = TimeGrid(1.0, 9)
    c = cumulative_trapezoid(SampledPath(grid, 2 * grid.times + 1))
    np.testing.assert_allclose(c.values, grid.times ** 2 + grid.times, atol=1e-14)


def test_log_derivative():
    grid = TimeGrid(1.0, 400)
    p = log_derivative_coefficient(SampledPath.from_function(grid, np.exp))
    assert np.max(np.abs(p.values + 1)) <= 1e-4


def test_sin_coefficient_roundtrip():
    # r = exp(-int p) with p = sin t  ->  r = exp(cos t - 1)
    grid = TimeGrid(1.0, 800)
    r = SampledPath.from_function(grid, lambda t: np.exp(np.cos(t) - 1))
    p = log_derivative_coefficient(r)
    assert np.max(np.abs(p.values - np.sin(grid.times))) <= 1e-5


def test_log_derivative_rejects_nonpositive():
    grid = TimeGrid(1.0, 10)
    with pytest.raises(NumericalFailure, match="positive"):
        log_derivative_coefficient(SampledPath(grid, 0.5 - grid.times))
