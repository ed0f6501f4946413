"""CSV import/export with fixed headers and 17 significant digits."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import UsageError
from .grids import TimeGrid
from .volterra import SampledPath

__all__ = [
    "write_table",
    "read_table",
    "write_spectrum",
    "write_path",
    "write_coefficient",
    "write_source",
    "write_field",
    "write_kernel_table",
    "read_path",
    "read_nodes",
    "read_source",
]

FMT = "%.17g"


def write_table(path, header: list[str], columns) -> Path:
    path = Path(path)
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    if len({c.shape[0] for c in cols}) != 1:
        raise UsageError("columns must have equal length")
    np.savetxt(path, np.column_stack(cols), fmt=FMT, delimiter=",",
               header=",".join(header), comments="")
    return path


def read_table(path, expected: list[str] | None = None) -> dict[str, np.ndarray]:
    """Columns of a headed CSV file, keyed by header name."""
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"CSV file not found: {path}")
    with path.open() as fh:
        header = [h.strip() for h in fh.readline().strip().split(",")]
    if expected is not None and header[: len(expected)] != expected:
        raise UsageError(f"{path}: expected header {','.join(expected)}, found {','.join(header)}")
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None
    if data.shape[1] != len(header):
        raise UsageError(f"{path}: {data.shape[1]} columns but {len(header)} header names")
    return {name: data[:, i] for i, name in enumerate(header)}


def write_spectrum(path, spectrum, phi_at_q: np.ndarray | None = None) -> Path:
    k = np.arange(1, spectrum.n_modes + 1)
    if phi_at_q is None:
        return write_table(path, ["k", "lambda"], [k, spectrum.eigenvalues])
    return write_table(path, ["k", "lambda", "phi_at_q"], [k, spectrum.eigenvalues, phi_at_q])


def write_path(path, sp: SampledPath) -> Path:
    return write_table(path, ["t", "value"], [sp.times, sp.values])


def write_coefficient(path, r: SampledPath, p: SampledPath) -> Path:
    return write_table(path, ["t", "r", "p"], [r.times, r.values, p.values])


def write_source(path, x, f) -> Path:
    return write_table(path, ["x", "f"], [x, f])


def write_field(path, x, times, values) -> Path:
    """Long format, time-major: one row per (t_m, x_i)."""
    values = np.asarray(values)
    X = np.broadcast_to(np.asarray(x)[None, :], values.shape)
    Tm = np.broadcast_to(np.asarray(times)[:, None], values.shape)
    return write_table(path, ["x", "t", "u"], [X, Tm, values])


def write_kernel_table(path, x, times, P) -> Path:
    P = np.asarray(P)
    X = np.broadcast_to(np.asarray(x)[:, None], P.shape)
    Tm = np.broadcast_to(np.asarray(times)[None, :], P.shape)
    return write_table(path, ["x", "t", "P"], [X, Tm, P])


def _match(a, b, scale, what, path):
    if a.shape != b.shape or not np.allclose(a, b, rtol=0.0, atol=1e-9 * max(scale, 1.0)):
        raise UsageError(f"{path}: {what} do not match the configured grid (no resampling is done)")


def read_path(path, grid: TimeGrid) -> SampledPath:
    """A `t,value` file sampled exactly on ``grid``."""
    cols = read_table(path, ["t", "value"])
    _match(cols["t"], grid.times, grid.T, "sample times", path)
    return SampledPath(grid, cols["value"], {"source": str(path)})


def read_nodes(path, x: np.ndarray) -> np.ndarray:
    """Second column of an `x,<name>` file given on the nodes ``x``."""
    cols = read_table(path)
    names = list(cols)
    if len(names) != 2 or names[0] != "x":
        raise UsageError(f"{path}: expected two columns headed x,<name>")
    _match(cols["x"], x, float(np.max(np.abs(x))), "nodes", path)
    return cols[names[1]]


def read_source(path, x: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """(M+1, n) samples from a long `x,t,<name>` file, linear in time between file rows."""
    cols = read_table(path)
    names = list(cols)
    if len(names) != 3 or names[:2] != ["x", "t"]:
        raise UsageError(f"{path}: expected three columns headed x,t,<name>")
    t_file = np.unique(cols["t"])
    nx = x.shape[0]
    if cols["t"].shape[0] != t_file.shape[0] * nx:
        raise UsageError(f"{path}: every time level must list all {nx} nodes")
    order = np.lexsort((cols["x"], cols["t"]))
    vals = cols[names[2]][order].reshape(t_file.shape[0], nx)
    xs = cols["x"][order].reshape(t_file.shape[0], nx)
    _match(xs[0], x, float(np.max(np.abs(x))), "nodes", path)
    if t_file[0] > grid.times[0] + 1e-12 or t_file[-1] < grid.times[-1] - 1e-12:
        raise UsageError(f"{path}: times do not cover [0, {grid.T}]")
    out = np.empty((grid.M + 1, nx))
    for i in range(nx):
        out[:, i] = np.interp(grid.times, t_file, vals[:, i])
    return out
