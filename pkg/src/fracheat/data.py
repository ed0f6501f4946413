"""Coercion of user-supplied problem data into sampled arrays.

Space data phi(x), omega(x), time paths w(t), p(t) and sources f(x, t) may be
given as parsed expressions, plain callables, arrays, or (on the interval) as
multiples of a discrete eigenfunction.  Everything is sampled on the grids
in use; ``lambda1`` in expressions is bound to the discrete first eigenvalue.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import expr as ex
from .errors import NumericalFailure, UsageError
from .grids import TimeGrid
from .volterra import SampledPath

__all__ = ["EigenMode", "Separable", "sample_space", "sample_path", "sample_source"]


@dataclass(frozen=True)
class EigenMode:
    """The k-th discrete eigenfunction (1-based), scaled by ``scale``."""

    k: int
    scale: float = 1.0


@dataclass(frozen=True)
class Separable:
    """f(x, t) = factor(t) * shape(x)."""

    shape: object
    factor: object = 1.0


Data = Union[None, float, np.ndarray, Callable, "ex.Expr", EigenMode, Separable, SampledPath]


def _is_expr(obj) -> bool:
    return isinstance(obj, (ex.Num, ex.Var, ex.Neg, ex.BinOp, ex.Call))


def _finite(a, what):
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise NumericalFailure(f"{what} contains non-finite values")
    return a


def sample_space(data, x: np.ndarray, *, spectrum=None, lambda1: float | None = None, what="data"):
    """Node array of a function of x."""
    if data is None:
        return np.zeros_like(x)
    if isinstance(data, str):
        data = ex.parse(data)
    if isinstance(data, EigenMode):
        if spectrum is None:
            raise UsageError(f"{what}: eigenfunction data need an interval spectrum")
        if not 1 <= data.k <= spectrum.n_modes:
            raise UsageError(f"{what}: eigenfunction index {data.k} out of range")
        return data.scale * spectrum.phi(data.k)
    if _is_expr(data):
        if "t" in ex.free_names(data):
            raise UsageError(f"{what} must not depend on t")
        env = {"x": x}
        if lambda1 is not None:
            env["lambda1"] = lambda1
        return _finite(np.broadcast_to(ex.evaluate(data, env), x.shape), what).copy()
    if callable(data):
        return _finite(np.broadcast_to(data(x), x.shape), what).copy()
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 0:
        return np.full_like(x, float(arr))
    if arr.shape != x.shape:
        raise UsageError(f"{what}: expected {x.shape[0]} node values, got shape {arr.shape}")
    return _finite(arr, what)


def sample_path(data, grid: TimeGrid, *, lambda1: float | None = None, what="path") -> np.ndarray:
    """Values of a function of t at every time node."""
    t = grid.times
    if data is None:
        return np.zeros_like(t)
    if isinstance(data, str):
        data = ex.parse(data)
    if isinstance(data, SampledPath):
        if data.grid != grid:
            raise UsageError(f"{what} is sampled on {data.grid}, expected {grid}")
        return data.values
    if _is_expr(data):
        if "x" in ex.free_names(data):
            raise UsageError(f"{what} must not depend on x")
        env = {"t": t}
        if lambda1 is not None:
            env["lambda1"] = lambda1
        return _finite(np.broadcast_to(ex.evaluate(data, env), t.shape), what).copy()
    if callable(data):
        return _finite(np.broadcast_to(data(t), t.shape), what).copy()
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 0:
        return np.full_like(t, float(arr))
    if arr.shape != t.shape:
        raise UsageError(f"{what}: expected {t.shape[0]} samples, got shape {arr.shape}")
    return _finite(arr, what)


def sample_source(data, x: np.ndarray, grid: TimeGrid, *, spectrum=None,
                  lambda1: float | None = None, what="source") -> np.ndarray:
    """(M+1, n) array of f(x_i, tau_m)."""
    t = grid.times
    shape = (t.shape[0], x.shape[0])
    if data is None:
        return np.zeros(shape)
    if isinstance(data, str):
        data = ex.parse(data)
    if isinstance(data, (EigenMode, Separable)):
        if isinstance(data, EigenMode):
            data = Separable(data)
        space = sample_space(data.shape, x, spectrum=spectrum, lambda1=lambda1, what=what)
        factor = sample_path(data.factor, grid, lambda1=lambda1, what=what)
        return factor[:, None] * space[None, :]
    if _is_expr(data):
        env = {"x": x[None, :], "t": t[:, None]}
        if lambda1 is not None:
            env["lambda1"] = lambda1
        return _finite(np.broadcast_to(ex.evaluate(data, env), shape), what).copy()
    if callable(data):
        return _finite(np.broadcast_to(data(x[None, :], t[:, None]), shape), what).copy()
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 0:
        return np.full(shape, float(arr))
    if arr.shape == x.shape:
        return np.broadcast_to(_finite(arr, what), shape).copy()
    if arr.shape != shape:
        raise UsageError(f"{what}: expected shape {shape}, got {arr.shape}")
    return _finite(arr, what)
