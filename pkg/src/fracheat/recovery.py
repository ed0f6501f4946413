"""Recovery of the time-dependent coefficient from a point or a weighted datum.

With r(t) = exp(-int_0^t p) the transformed state v = r u solves the heat
equation with source r f, and either observation turns the modal series
into a linear second-kind Volterra equation for r.  Both kernels are
assembled from a shared decay table E[k, m] = exp(-lambda_k m dt), so row m
of the kernel is one contraction over modes.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import warnings

import numpy as np

from .data import sample_path, sample_space
from .errors import AssumptionViolation, NumericalFailure
from .forward import (StateField, modal_source, observe_point, observe_weighted,
                      solve_forward, solve_modal, weak_residual)
from .grids import TimeGrid
from .spectral import DirichletSpectrum, project
from .volterra import (SampledPath, VolterraProblem, differentiate,
                       log_derivative_coefficient, solve_second_kind)

__all__ = [
    "SingleDatumProblem",
    "NonlocalDatumProblem",
    "RecoveryResult",
    "AssumptionWarning",
    "assemble_single",
    "assemble_nonlocal",
    "recover_single",
    "recover_nonlocal",
    "decay_table",
]


class AssumptionWarning(UserWarning):
    """A solvability hypothesis that is only reported, never enforced."""


@dataclass(frozen=True)
class SingleDatumProblem:
    """Data for recovering p from w(t) = u(q, t).

    ``phi``, ``f`` and ``w`` accept anything the samplers in
    :mod:`fracheat.data` accept.
    """

    spectrum: DirichletSpectrum
    phi: object
    f: object
    q: float
    w: object
    compat_tol: float = 1e-6


@dataclass(frozen=True)
class NonlocalDatumProblem:
    """Data for recovering r from w(t) = (omega, u(., t))_h."""

    spectrum: DirichletSpectrum
    phi: object
    f: object
    omega: object
    w: object
    compat_tol: float = 1e-6


@dataclass(frozen=True)
class RecoveryResult:
    r: SampledPath
    p: SampledPath
    u: StateField
    diagnostics: dict = field(default_factory=dict)


def decay_table(lam: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """E[k, m] = exp(-lambda_k m dt)."""
    return np.exp(-np.outer(lam, grid.dt * np.arange(grid.M + 1)))


def _kernel_matrix(a: np.ndarray, E: np.ndarray, denom: np.ndarray, threads: int = 1) -> np.ndarray:
    """Lower-triangular K[m, j] = sum_k a[k, j] E[k, m - j] / denom[m]."""
    M1 = a.shape[1]
    K = np.zeros((M1, M1))

    def fill(rows):
        for m in rows:
            K[m, : m + 1] = np.einsum("kj,kj->j", a[:, : m + 1], E[:, m::-1]) / denom[m]

    if threads <= 1:
        fill(range(M1))
    else:
        # interleaved rows balance the triangular workload; each row is written by one worker
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, [range(i, M1, threads) for i in range(threads)]))
    return K


def _modes(spectrum: DirichletSpectrum, modes: int | None) -> DirichletSpectrum:
    return spectrum if modes is None else spectrum.truncate(modes)


def _single_checks(problem, grid, phi_nodes, c, phik_q, F, w, iq):
    """Assumptions (i)-(iii); (ii) only warns.  Returns a report dict."""
    report = {}
    wv = w
    if np.any(wv == 0.0):
        m = int(np.argmax(wv == 0.0))
        raise AssumptionViolation("(iii)", f"w vanishes at t={grid.times[m]:.6g}")
    if np.any(np.sign(wv) != np.sign(wv[0])):
        m = int(np.argmax(np.sign(wv) != np.sign(wv[0])))
        raise AssumptionViolation("(iii)", f"w changes sign near t={grid.times[m]:.6g}")
    phi_q = float(phi_nodes[iq])
    mismatch = abs(wv[0] - phi_q)
    report["compatibility_mismatch"] = mismatch
    if mismatch > problem.compat_tol * max(1.0, abs(phi_q)):
        raise AssumptionViolation("(iii)", f"w(0)={wv[0]:.10g} differs from phi(q)={phi_q:.10g}")

    active = np.abs(phik_q) > 1e-8
    prod = c * phik_q
    scale = max(1.0, float(np.max(np.abs(prod))))
    bad = active & (prod < -1e-10 * scale)
    if np.any(bad):
        k = int(np.argmax(bad)) + 1
        raise AssumptionViolation("(i)", f"phi_k phi_k(q) = {prod[k - 1]:.3g} < 0 for mode k={k}")
    if not np.any(active & (prod > 1e-10 * scale)):
        raise AssumptionViolation("(i)", "phi_k phi_k(q) vanishes for every mode")
    report["assumption_i"] = "ok"

    fq = F[:, active] * phik_q[active]
    zero_modes = np.flatnonzero(np.any(np.abs(fq) <= 1e-12 * max(1.0, float(np.abs(fq).max(initial=0.0))), axis=0))
    if zero_modes.size:
        ks = (np.flatnonzero(active)[zero_modes] + 1).tolist()
        msg = f"f_k(t) phi_k(q) vanishes for {len(ks)} mode(s), first k={ks[0]}"
        warnings.warn(msg, AssumptionWarning, stacklevel=3)
        report["assumption_ii"] = {"status": "warning", "modes": ks[:20], "count": len(ks)}
    else:
        report["assumption_ii"] = "ok"
    report["assumption_iii"] = "ok"
    return report


def assemble_single(problem: SingleDatumProblem, grid: TimeGrid, modes: int | None = None,
                    threads: int = 1, report: dict | None = None) -> VolterraProblem:
    """Volterra equation for r from the point datum.

    g(t) = sum_k phi_k e^{-lambda_k t} phi_k(q) / w(t),
    K(t, tau) = sum_k phi_k(q) f_k(tau) e^{-lambda_k (t - tau)} / w(t).
    """
    full = problem.spectrum
    sp = _modes(full, modes)
    lam1 = full.lambda1
    iq = full.grid.snap(problem.q)
    phi_nodes = sample_space(problem.phi, full.grid.nodes, spectrum=full, lambda1=lam1, what="phi")
    w = sample_path(problem.w, grid, lambda1=lam1, what="w")
    c = project(phi_nodes, sp)
    F = modal_source(problem.f, sp, grid)
    phik_q = sp.vectors[:, iq]
    checks = _single_checks(problem, grid, phi_nodes, c, phik_q, F, w, iq)
    if report is not None:
        report.update(checks)
        report.update(q=float(problem.q), q_index=iq, q_snapped=float(full.grid.nodes[iq]))

    E = decay_table(sp.eigenvalues, grid)
    g = (c * phik_q) @ E / w
    a = (F * phik_q).T
    K = _kernel_matrix(a, E, w, threads)
    return VolterraProblem.from_matrix(grid, g, K)


def assemble_nonlocal(problem: NonlocalDatumProblem, grid: TimeGrid, modes: int | None = None,
                      threads: int = 1, report: dict | None = None) -> VolterraProblem:
    """Volterra equation for r from the weighted datum.

    g(t) = [w'(t) + sum_k lambda_k phi_k e^{-lambda_k t} omega_k] / D(t),
    K(t, tau) = sum_k lambda_k f_k(tau) e^{-lambda_k (t - tau)} omega_k / D(t),
    with D(t) = (omega, f(., t))_h and w' by finite differences.
    """
    full = problem.spectrum
    sp = _modes(full, modes)
    lam1 = full.lambda1
    x = full.grid.nodes
    phi_nodes = sample_space(problem.phi, x, spectrum=full, lambda1=lam1, what="phi")
    omega = sample_space(problem.omega, x, spectrum=full, lambda1=lam1, what="omega")
    w = SampledPath(grid, sample_path(problem.w, grid, lambda1=lam1, what="w"))
    F_full = modal_source(problem.f, full, grid)
    om_full = project(omega, full)
    # D uses every mode so that it equals the nodal inner product
    D = F_full @ om_full

    scale = max(float(np.max(np.abs(D))), 1e-300)
    if np.any(np.abs(D) <= 1e-12 * max(1.0, scale)):
        m = int(np.argmin(np.abs(D)))
        raise AssumptionViolation("nonlocal-denominator", f"(omega, f(., t))_h vanishes at t={grid.times[m]:.6g}")
    if np.any(w.values == 0.0):
        m = int(np.argmax(w.values == 0.0))
        raise AssumptionViolation("nonlocal-compatibility", f"w vanishes at t={grid.times[m]:.6g}")
    w0 = full.grid.inner(omega, phi_nodes)
    mismatch = abs(w.values[0] - w0)
    if mismatch > problem.compat_tol * max(1.0, abs(w0)):
        raise AssumptionViolation("nonlocal-compatibility", f"w(0)={w.values[0]:.10g} differs from (omega, phi)_h={w0:.10g}")
    if report is not None:
        report.update(compatibility_mismatch=mismatch, nonlocal_conditions="ok",
                      min_abs_denominator=float(np.min(np.abs(D))))

    K_ = sp.n_modes
    lam = sp.eigenvalues
    c = project(phi_nodes, sp)
    om = om_full[:K_]
    E = decay_table(lam, grid)
    dw = differentiate(w).values
    g = (dw + (lam * c * om) @ E) / D
    a = (F_full[:, :K_] * (lam * om)).T
    K = _kernel_matrix(a, E, D, threads)
    return VolterraProblem.from_matrix(grid, g, K)


def _positive_r(r: SampledPath):
    if np.any(r.values <= 0):
        m = int(np.argmax(r.values <= 0))
        raise NumericalFailure(f"recovered r is not positive at t={r.times[m]:.6g} (r={r.values[m]:.6g})")


def _transformed_state(spectrum, phi_nodes, f, r: SampledPath, grid) -> np.ndarray:
    """Modal coefficients of v = r u, i.e. the heat flow driven by r(t) f with p = 0."""
    F = modal_source(f, spectrum, grid) * r.values[:, None]
    return solve_modal(spectrum.eigenvalues, project(phi_nodes, spectrum), F, np.zeros(grid.M + 1), grid.dt)


def recover_single(problem: SingleDatumProblem, grid: TimeGrid, modes: int | None = None,
                   threads: int = 1) -> RecoveryResult:
    """Solve for r, then p = -r'/r and u = v / r.

    Diagnostics: the snapped observation node, the assumption report,
    ``observation_residual`` (reconstructed u at q against w),
    ``forward_consistency`` (a fresh forward solve driven by the recovered p,
    sampled at q, against w; absolute and relative to sup|w|) and the weak
    residual of that forward solve.
    """
    report: dict = {}
    vp = assemble_single(problem, grid, modes, threads, report)
    r = solve_second_kind(vp)
    _positive_r(r)
    p = log_derivative_coefficient(r)

    sp = problem.spectrum
    phi_nodes = sample_space(problem.phi, sp.grid.nodes, spectrum=sp, lambda1=sp.lambda1, what="phi")
    v = _transformed_state(sp, phi_nodes, problem.f, r, grid)
    u = StateField(sp, grid, v / r.values[:, None])
    w = sample_path(problem.w, grid, lambda1=sp.lambda1, what="w")
    wsup = float(np.max(np.abs(w)))

    obs = observe_point(u, problem.q).values
    refit = solve_forward(sp, phi_nodes, problem.f, p, grid)
    fwd = observe_point(refit, problem.q).values
    report.update(
        observation_residual=float(np.max(np.abs(obs - w))),
        forward_consistency=float(np.max(np.abs(fwd - w))),
        forward_consistency_relative=float(np.max(np.abs(fwd - w)) / wsup),
        weak_residual=weak_residual(refit, p, problem.f),
        lambda1=sp.lambda1,
    )
    return RecoveryResult(r, p, u, report)


def recover_nonlocal(problem: NonlocalDatumProblem, grid: TimeGrid, modes: int | None = None,
                     threads: int = 1) -> RecoveryResult:
    """Solve for r; u is the heat flow driven by r(t) f(x, t).

    ``p`` is reported as -r'/r for completeness.  Diagnostics include
    ``observation_residual`` = sup |(omega, u)_h - w|.
    """
    report: dict = {}
    vp = assemble_nonlocal(problem, grid, modes, threads, report)
    r = solve_second_kind(vp)
    _positive_r(r)
    p = log_derivative_coefficient(r)

    sp = problem.spectrum
    x = sp.grid.nodes
    phi_nodes = sample_space(problem.phi, x, spectrum=sp, lambda1=sp.lambda1, what="phi")
    u = StateField(sp, grid, _transformed_state(sp, phi_nodes, problem.f, r, grid))
    omega = sample_space(problem.omega, x, spectrum=sp, lambda1=sp.lambda1, what="omega")
    w = sample_path(problem.w, grid, lambda1=sp.lambda1, what="w")
    obs = observe_weighted(u, omega).values
    resid = float(np.max(np.abs(obs - w)))
    F = modal_source(problem.f, sp, grid) * r.values[:, None]
    K = min(16, sp.n_modes)
    du = (u.coeffs[2:, :K] - u.coeffs[:-2, :K]) / (2 * grid.dt)
    wres = du + sp.eigenvalues[:K] * u.coeffs[1:-1, :K] - F[1:-1, :K]
    report.update(
        observation_residual=resid,
        observation_residual_relative=resid / float(np.max(np.abs(w))),
        weak_residual=float(np.max(np.abs(wres))),
        lambda1=sp.lambda1,
    )
    return RecoveryResult(r, p, u, report)
