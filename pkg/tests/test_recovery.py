import warnings

import numpy as np
import pytest

from fracheat.data import EigenMode, Separable
from fracheat.errors import AssumptionViolation
from fracheat.forward import observe_point, observe_weighted, solve_forward
from fracheat.grids import TimeGrid
from fracheat.recovery import (AssumptionWarning, NonlocalDatumProblem, SingleDatumProblem,
                               assemble_nonlocal, assemble_single, decay_table, recover_nonlocal,
                               recover_single)

GRID = TimeGrid(1.0, 400)


def _decaying_mode_problem(sp, q=0.5, f=None, w=None):
    lam = sp.lambda1
    phi_q = float(sp.phi(1)[sp.grid.snap(q)])
    f = Separable(EigenMode(1), "exp(-lambda1*t)") if f is None else f
    w = (lambda t: np.exp(-lam * t) * phi_q) if w is None else w
    return SingleDatumProblem(sp, EigenMode(1), f, q, w)


def _quiet(fn, *a, **k):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AssumptionWarning)
        return fn(*a, **k)


def test_decay_table(sp64):
    E = decay_table(sp64.eigenvalues[:3], TimeGrid(1.0, 4))
    np.testing.assert_allclose(E[2, 4], np.exp(-sp64.eigenvalues[2]), rtol=1e-15)
    assert np.all(E[:, 0] == 1.0)


def test_single_mode_example_unit_kernel(sp256):
    # phi = phi_1, f = e^{-lambda1 t} phi_1, w = e^{-lambda1 t} phi_1(q):  g = K = 1, r = e^t
    vp = _quiet(assemble_single, _decaying_mode_problem(sp256), GRID)
    assert np.max(np.abs(vp.g - 1)) <= 1e-10
    K = vp.kernel_matrix()
    assert np.max(np.abs(K[np.tril_indices_from(K)] - 1)) <= 1e-10
    res = _quiet(recover_single, _decaying_mode_problem(sp256), GRID)
    assert np.max(np.abs(res.r.values - np.exp(GRID.times))) <= 1e-4
    assert np.max(np.abs(res.p.values + 1)) <= 1e-4
    assert res.diagnostics["forward_consistency_relative"] <= 5e-3


def test_assumption_ii_is_only_a_warning(sp64):
    with pytest.warns(AssumptionWarning):
        report = {}
        assemble_single(_decaying_mode_problem(sp64), GRID, report=report)
    assert report["assumption_ii"]["status"] == "warning"


def test_zero_source_gives_zero_kernel(sp64):
    problem = _decaying_mode_problem(sp64, f=0.0)
    vp = _quiet(assemble_single, problem, GRID)
    assert np.max(np.abs(vp.kernel_matrix())) == 0.0
    res = _quiet(recover_single, problem, GRID)
    np.testing.assert_allclose(res.r.values, 1.0, atol=1e-12)
    assert np.max(np.abs(res.p.values)) <= 1e-10


@pytest.mark.parametrize("w, label", [
    (lambda t: 0.0 * t, "(iii)"),
    (lambda t: np.cos(4 * t), "(iii)"),
    (lambda t: 2.0 + t, "(iii)"),
])
def test_assumption_iii(sp64, w, label):
    problem = SingleDatumProblem(sp64, EigenMode(1), "1", 0.5, w)
    with pytest.raises(AssumptionViolation) as info:
        _quiet(assemble_single, problem, GRID)
    assert info.value.assumption == label
    assert info.value.exit_code == 3


def test_assumption_i_sign(sp64):
    iq = sp64.grid.snap(0.5)
    assert sp64.phi(2)[iq] < 0
    problem = SingleDatumProblem(sp64, EigenMode(2), "1", 0.5, sp64.phi(2)[iq])
    with pytest.raises(AssumptionViolation) as info:
        _quiet(assemble_single, problem, GRID)
    assert info.value.assumption == "(i)"


def _manufactured_point(sp, p_star, grid, q=0.3):
    phi, f = EigenMode(1), Separable(EigenMode(1), "1+t")
    w = observe_point(solve_forward(sp, phi, f, p_star, grid), q)
    return SingleDatumProblem(sp, phi, f, q, w)


def test_manufactured_cos_coefficient(sp64):
    grid = TimeGrid(1.0, 800)
    res = _quiet(recover_single, _manufactured_point(sp64, "cos(t)", grid), grid)
    assert np.max(np.abs(res.p.values - np.cos(grid.times))) <= 1e-3
    assert res.diagnostics["observation_residual"] <= 1e-6


def test_zero_coefficient_recovered(sp64):
    res = _quiet(recover_single, _manufactured_point(sp64, 0.0, GRID), GRID)
    assert np.max(np.abs(res.p.values)) <= 1e-4


def test_mode_truncation_and_threads(sp256):
    grid = TimeGrid(1.0, 200)
    phi, f = EigenMode(1), "(1+t)*(1-x^2)"
    w = observe_point(solve_forward(sp256, phi, f, "sin(t)", grid), 0.1)
    problem = SingleDatumProblem(sp256, phi, f, 0.1, w)
    full = _quiet(recover_single, problem, grid)
    cut = _quiet(recover_single, problem, grid, modes=128)
    assert np.max(np.abs(full.p.values - cut.p.values)) <= 1e-3
    par = _quiet(recover_single, problem, grid, threads=3)
    np.testing.assert_allclose(par.r.values, full.r.values, rtol=1e-14)
    assert np.max(np.abs(full.p.values - np.sin(grid.times))) <= 1e-3


def test_eigenvector_sign_invariance(sp64, rng):
    grid = TimeGrid(1.0, 100)
    w = _manufactured_point(sp64, "sin(t)", grid).w
    # node-array data do not depend on the sign choice of the basis
    phi = sp64.phi(1)
    src = (1 + grid.times)[:, None] * phi[None, :]
    flipped = sp64.flipped(rng.choice([-1.0, 1.0], size=64))
    a = _quiet(recover_single, SingleDatumProblem(sp64, phi, src, 0.3, w), grid)
    b = _quiet(recover_single, SingleDatumProblem(flipped, phi, src, 0.3, w), grid)
    assert np.max(np.abs(a.r.values - b.r.values)) <= 1e-12 * np.max(np.abs(a.r.values))


# nonlocal datum

def test_nonlocal_closed_form(sp256):
    grid = TimeGrid(1.0, 800)
    problem = NonlocalDatumProblem(sp256, EigenMode(1), Separable(EigenMode(1), "1+sin(t)^2"),
                                   EigenMode(1), "1+t^2")
    res = recover_nonlocal(problem, grid)
    lam, t = sp256.lambda1, grid.times
    exact = (lam + 2 * t + lam * t * t) / (1 + np.sin(t) ** 2)
    assert np.max(np.abs(res.r.values - exact) / exact) <= 1e-2
    assert abs(res.r.values[0] - lam) <= 1e-3
    # the forward flow driven by the recovered r reproduces the datum
    v = solve_forward(sp256, EigenMode(1), Separable(EigenMode(1), res.r.values * (1 + np.sin(t) ** 2)), None, grid)
    assert np.max(np.abs(observe_weighted(v, EigenMode(1)).values - (1 + t * t))) <= 1e-3
    assert res.diagnostics["observation_residual"] <= 1e-3


def _nonlocal_manufactured(sp, grid, r_star, scale=1.0):
    phi, omega = "cos(pi*x/2)", "1-x^2"
    f = lambda x, t: np.exp(-4 * x * x) * (1 + 0 * t)
    drive = lambda x, t: r_star(t) * f(x, t)
    w = observe_weighted(solve_forward(sp, phi, drive, None, grid), omega)
    g = lambda x, t: scale * f(x, t)
    return NonlocalDatumProblem(sp, phi, g, omega, w)


def test_nonlocal_manufactured(sp64):
    grid = TimeGrid(1.0, 800)
    res = recover_nonlocal(_nonlocal_manufactured(sp64, grid, lambda t: 1 + t), grid)
    assert np.max(np.abs(res.r.values - (1 + grid.times))) <= 1e-3


def test_nonlocal_source_scaling(sp64):
    grid = TimeGrid(1.0, 200)
    a = recover_nonlocal(_nonlocal_manufactured(sp64, grid, lambda t: 1 + t), grid)
    b = recover_nonlocal(_nonlocal_manufactured(sp64, grid, lambda t: 1 + t, scale=2.5), grid)
    np.testing.assert_allclose(b.r.values, a.r.values / 2.5, rtol=1e-12)


def test_nonlocal_denominator_violation(sp64):
    problem = NonlocalDatumProblem(sp64, EigenMode(1), Separable(EigenMode(1)), EigenMode(2), 1e-30)
    with pytest.raises(AssumptionViolation) as info:
        assemble_nonlocal(problem, GRID)
    assert info.value.assumption == "nonlocal-denominator"


@pytest.mark.parametrize("w", [0.0, 3.0])
def test_nonlocal_compatibility_violation(sp64, w):
    problem = NonlocalDatumProblem(sp64, EigenMode(1), Separable(EigenMode(1)), EigenMode(1), w)
    with pytest.raises(AssumptionViolation) as info:
        assemble_nonlocal(problem, GRID)
    assert info.value.assumption == "nonlocal-compatibility"
