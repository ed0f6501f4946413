"""Linear second-kind Volterra equations on a uniform time grid.

    r(t) = g(t) + int_0^t K(t, tau) r(tau) dtau

is discretised with the product trapezoidal rule and solved by forward
substitution.  Kernel values are requested one row at a time, so callers can
back them with whatever representation is cheapest (closure, dense matrix,
decay table).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import NumericalFailure, UsageError
from .grids import TimeGrid

__all__ = [
    "SampledPath",
    "VolterraProblem",
    "solve_second_kind",
    "differentiate",
    "cumulative_trapezoid",
    "log_derivative_coefficient",
]


@dataclass(frozen=True)
class SampledPath:
    """Real function of time sampled at every node of ``grid``."""

    grid: TimeGrid
    values: np.ndarray = field(repr=False)
    meta: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.M + 1,):
            raise UsageError(f"path needs {self.grid.M + 1} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NumericalFailure("path contains non-finite samples")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @classmethod
    def from_function(cls, grid: TimeGrid, fn: Callable, **meta) -> "SampledPath":
        return cls(grid, np.broadcast_to(fn(grid.times), (grid.M + 1,)), meta)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __len__(self):
        return self.values.shape[0]


KernelRow = Callable[[int], np.ndarray]


@dataclass(frozen=True)
class VolterraProblem:
    """Free term samples ``g`` and a row evaluator for K(tau_m, tau_j), j = 0..m."""

    grid: TimeGrid
    g: np.ndarray = field(repr=False)
    kernel_row: KernelRow = field(repr=False)

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if g.shape != (self.grid.M + 1,):
            raise UsageError(f"free term needs {self.grid.M + 1} samples, got {g.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericalFailure("free term is not finite")
        object.__setattr__(self, "g", g)

    @classmethod
    def from_function(cls, grid: TimeGrid, g, kernel: Callable) -> "VolterraProblem":
        """``g`` may be samples or a callable of t; ``kernel(t, tau)`` is vectorised in tau."""
        t = grid.times
        gv = g(t) if callable(g) else g
        gv = np.broadcast_to(np.asarray(gv, dtype=float), t.shape)

        def row(m):
            return np.broadcast_to(np.asarray(kernel(t[m], t[: m + 1]), dtype=float), (m + 1,))

        return cls(grid, gv, row)

    @classmethod
    def from_matrix(cls, grid: TimeGrid, g, kmat) -> "VolterraProblem":
        kmat = np.asarray(kmat, dtype=float)
        gv = np.broadcast_to(np.asarray(g, dtype=float), (grid.M + 1,))
        return cls(grid, gv, lambda m: kmat[m, : m + 1])

    def kernel_matrix(self) -> np.ndarray:
        """Lower-triangular (M+1)x(M+1) array of kernel values."""
        M = self.grid.M
        out = np.zeros((M + 1, M + 1))
        for m in range(M + 1):
            out[m, : m + 1] = self.kernel_row(m)
        return out


def solve_second_kind(problem: VolterraProblem) -> SampledPath:
    grid = problem.grid
    dt = grid.dt
    g = problem.g
    r = np.empty_like(g)
    r[0] = g[0]
    for m in range(1, grid.M + 1):
        row = problem.kernel_row(m)
        if not np.all(np.isfinite(row)):
            raise NumericalFailure(f"kernel is not finite on row {m}")
        denom = 1.0 - 0.5 * dt * row[m]
        if abs(denom) < 1e-8:
            raise NumericalFailure(f"near-singular diagonal at step {m}: 1 - dt/2 K = {denom:.3g}")
        acc = 0.5 * row[0] * r[0] + np.dot(row[1:m], r[1:m])
        r[m] = (g[m] + dt * acc) / denom
    if not np.all(np.isfinite(r)):
        raise NumericalFailure("Volterra solution overflowed")
    return SampledPath(grid, r)


def differentiate(path: SampledPath) -> SampledPath:
    """Second-order finite differences (central inside, 3-point one-sided at the ends)."""
    v = path.values
    if v.shape[0] < 4:
        raise UsageError("differentiate needs M >= 3")
    dt = path.grid.dt
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (2 * dt)
    d[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * dt)
    d[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * dt)
    return SampledPath(path.grid, d)


def cumulative_trapezoid(path: SampledPath) -> SampledPath:
    v = path.values
    out = np.concatenate(([0.0], np.cumsum(0.5 * path.grid.dt * (v[1:] + v[:-1]))))
    return SampledPath(path.grid, out)


def log_derivative_coefficient(r: SampledPath) -> SampledPath:
    """p = -r'/r, the coefficient behind r(t) = exp(-int_0^t p)."""
    if np.any(r.values <= 0):
        m = int(np.argmax(r.values <= 0))
        raise NumericalFailure(f"r must stay positive, r(t={r.times[m]:.6g}) = {r.values[m]:.6g}")
    return SampledPath(r.grid, -differentiate(r).values / r.values)
