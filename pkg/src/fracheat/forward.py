"""Direct problem on the interval, solved mode by mode.

Each Galerkin coefficient obeys  u_k' + lambda_k u_k = p(t) u_k + f_k(t).
Time stepping is exponential-trapezoidal: the homogeneous part is
propagated exactly (with p averaged over the step) and the source enters
through the trapezoidal rule, giving second order in dt and unconditional
stability for the stiff high modes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .data import sample_path, sample_source, sample_space
from .errors import NumericalFailure, UsageError
from .grids import TimeGrid
from .spectral import DirichletSpectrum, project, synthesize
from .volterra import SampledPath

__all__ = [
    "StateField",
    "solve_forward",
    "solve_modal",
    "solve_forward_const_source",
    "modal_source",
    "observe_point",
    "observe_weighted",
    "weak_residual",
]


@dataclass(frozen=True)
class StateField:
    """u(x, t) on the space-time grid, stored through its modal coefficients.

    ``coeffs[m, k]`` is u_{k+1}(tau_m).
    """

    spectrum: DirichletSpectrum
    grid: TimeGrid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.grid.M + 1, self.spectrum.n_modes):
            raise UsageError(f"coefficient array has shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise NumericalFailure("state field is not finite")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @cached_property
    def values(self) -> np.ndarray:
        """Node values, shape (M+1, n)."""
        v = synthesize(self.coeffs, self.spectrum)
        v.flags.writeable = False
        return v

    def at_node(self, i: int) -> np.ndarray:
        return self.coeffs @ self.spectrum.vectors[:, i]

    def norms(self) -> np.ndarray:
        """||u(., tau_m)||_h for every m."""
        return np.sqrt(self.spectrum.grid.h * np.sum(self.values ** 2, axis=1))


def modal_source(f, spectrum: DirichletSpectrum, grid: TimeGrid) -> np.ndarray:
    """(M+1, K) array of f_k(tau_m) = (f(., tau_m), phi_k)_h."""
    if f is None:
        return np.zeros((grid.M + 1, spectrum.n_modes))
    nodes = sample_source(f, spectrum.grid.nodes, grid, spectrum=spectrum, lambda1=spectrum.lambda1)
    return project(nodes, spectrum)


def solve_modal(lam, c0, F, p_values, dt) -> np.ndarray:
    """Exponential-trapezoidal integration of u' = (p - lam) u + F, vectorised over modes."""
    M = F.shape[0] - 1
    out = np.empty((M + 1, lam.shape[0]))
    out[0] = c0
    pbar = 0.5 * (p_values[1:] + p_values[:-1])
    half = 0.5 * dt
    u = np.asarray(c0, dtype=float).copy()
    for m in range(M):
        e = np.exp((pbar[m] - lam) * dt)
        u = e * u + half * (F[m + 1] + e * F[m])
        out[m + 1] = u
    if not np.all(np.isfinite(out)):
        raise NumericalFailure("forward solution overflowed")
    return out


def solve_forward(spectrum: DirichletSpectrum, phi, f, p, grid: TimeGrid) -> StateField:
    """Solve u_t + A u = p(t) u + f on the interval with u(., 0) = phi.

    ``phi`` is a node array (or anything :func:`sample_space` accepts);
    ``f`` an expression/callable/array source or ``None``; ``p`` a path,
    expression, constant or ``None`` (zero).
    """
    lam1 = spectrum.lambda1
    phi_nodes = sample_space(phi, spectrum.grid.nodes, spectrum=spectrum, lambda1=lam1, what="phi")
    pv = sample_path(p, grid, lambda1=lam1, what="p")
    F = modal_source(f, spectrum, grid)
    c0 = project(phi_nodes, spectrum)
    coeffs = solve_modal(spectrum.eigenvalues, c0, F, pv, grid.dt)
    return StateField(spectrum, grid, coeffs)


def solve_forward_const_source(spectrum: DirichletSpectrum, phi, f_coeffs, grid: TimeGrid) -> StateField:
    """Closed form  u_k(t) = f_k/lambda_k + (phi_k - f_k/lambda_k) e^{-lambda_k t}."""
    lam = spectrum.eigenvalues
    phi_nodes = sample_space(phi, spectrum.grid.nodes, spectrum=spectrum, lambda1=spectrum.lambda1, what="phi")
    c0 = project(phi_nodes, spectrum)
    fk = np.asarray(f_coeffs, dtype=float)
    if fk.shape != lam.shape:
        raise UsageError(f"expected {lam.shape[0]} source coefficients, got {fk.shape}")
    steady = fk / lam
    decay = np.exp(-np.outer(grid.times, lam))
    return StateField(spectrum, grid, steady + (c0 - steady) * decay)


def observe_point(field: StateField, q: float) -> SampledPath:
    """u at the node nearest q; ``meta`` records the snapped node."""
    sgrid = field.spectrum.grid
    i = sgrid.snap(q)
    return SampledPath(field.grid, field.at_node(i),
                       {"q": float(q), "q_index": i, "q_snapped": float(sgrid.nodes[i])})


def observe_weighted(field: StateField, omega) -> SampledPath:
    """(omega, u(., tau_m))_h for every m."""
    sp = field.spectrum
    w_nodes = sample_space(omega, sp.grid.nodes, spectrum=sp, lambda1=sp.lambda1, what="omega")
    return SampledPath(field.grid, field.coeffs @ project(w_nodes, sp))


def weak_residual(field: StateField, p=None, f=None, modes: int = 16) -> float:
    """Max defect of the Galerkin ODEs over the first ``modes`` modes.

    u_k' is taken from central differences, so the value is O(dt^2) even
    for an exact field.
    """
    sp = field.spectrum
    grid = field.grid
    K = min(modes, sp.n_modes)
    pv = sample_path(p, grid, lambda1=sp.lambda1, what="p")
    F = modal_source(f, sp, grid)[:, :K]
    u = field.coeffs[:, :K]
    du = (u[2:] - u[:-2]) / (2 * grid.dt)
    lam = sp.eigenvalues[:K]
    res = du + lam * u[1:-1] - pv[1:-1, None] * u[1:-1] - F[1:-1]
    return float(np.max(np.abs(res))) if res.size else 0.0
