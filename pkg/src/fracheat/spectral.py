"""Fractional Laplacian on an interval with zero exterior extension.

The operator is discretised by fractional centred differences,

    (A u)_i = h^{-2s} sum_j g_{|i-j|} u_j,

whose Fourier symbol is |2 sin(xi h / 2)|^{2s} / h^{2s}.  Nodes outside the
interval carry u = 0, so the matrix is the finite symmetric Toeplitz section.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np
import scipy.linalg

from .errors import NumericalFailure, UsageError
from .grids import FractionalOrder, SpaceGrid, as_order

__all__ = [
    "riesz_weights",
    "OperatorMatrix",
    "assemble_operator",
    "DirichletSpectrum",
    "eigendecompose",
    "jacobi_eigh",
    "weyl_ratio",
    "project",
    "synthesize",
    "series_bound_check",
]


def riesz_weights(order, count: int) -> np.ndarray:
    """Weights g_0..g_count of the fractional centred difference of order 2s."""
    s = as_order(order).s
    if count < 1:
        raise UsageError(f"count must be >= 1, got {count}")
    g = np.empty(count + 1)
    g[0] = math.exp(math.lgamma(2 * s + 1) - 2 * math.lgamma(s + 1))
    j = np.arange(count, dtype=float)
    g[1:] = (j - s) / (j + s + 1)
    return np.cumprod(g)


@dataclass(frozen=True)
class OperatorMatrix:
    """Symmetric Toeplitz matrix stored by its first row."""

    order: FractionalOrder
    grid: SpaceGrid
    first_row: np.ndarray = field(repr=False)

    def entry(self, i: int, j: int) -> float:
        return float(self.first_row[abs(i - j)])

    def dense(self) -> np.ndarray:
        return scipy.linalg.toeplitz(self.first_row)

    def matvec(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape[0] != self.grid.n:
            raise UsageError(f"expected {self.grid.n} nodes, got {u.shape[0]}")
        return scipy.linalg.matmul_toeplitz(self.first_row, u)


def assemble_operator(order, grid: SpaceGrid) -> OperatorMatrix:
    order = as_order(order)
    g = riesz_weights(order, grid.n - 1)
    row = g * grid.h ** (-2 * order.s)
    row.flags.writeable = False
    return OperatorMatrix(order, grid, row)


def _round_robin(n):
    # circle method: every pair once, disjoint pairs within a round; odd n gets a bye slot
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if max(a, b) < n]
        rounds.append((np.array([a for a, _ in pairs]), np.array([b for _, b in pairs])))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(a, tol: float = 1e-12, max_sweeps: int = 30):
    """Cyclic Jacobi eigendecomposition of a dense symmetric matrix.

    Each sweep visits every off-diagonal pair once, in round-robin order so
    that the n/2 rotations of one round act on disjoint rows and can be
    applied together.  Returns ascending eigenvalues and orthonormal columns.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    rounds = _round_robin(n)

    offmask = ~np.eye(n, dtype=bool)

    def off(m):
        return float(np.linalg.norm(m[offmask]))

    for _ in range(max_sweeps):
        if off(a) <= tol * scale:
            break
        for p, q in rounds:
            apq = a[p, q]
            app = a[p, p]
            aqq = a[q, q]
            c = np.ones_like(apq)
            s = np.zeros_like(apq)
            nz = apq != 0.0
            theta = (aqq[nz] - app[nz]) / (2.0 * apq[nz])
            t = np.sign(theta) / (np.abs(theta) + np.sqrt(1.0 + theta * theta))
            t[theta == 0.0] = 1.0
            c[nz] = 1.0 / np.sqrt(1.0 + t * t)
            s[nz] = t * c[nz]
            rp, rq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * rp - s[:, None] * rq
            a[q, :] = s[:, None] * rp + c[:, None] * rq
            cp, cq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = cp * c - cq * s
            a[:, q] = cp * s + cq * c
            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = vp * c - vq * s
            v[:, q] = vp * s + vq * c
    else:
        if off(a) > tol * scale:
            raise NumericalFailure(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    vals = np.diag(a).copy()
    idx = np.argsort(vals, kind="stable")
    return vals[idx], v[:, idx]


@dataclass(frozen=True)
class DirichletSpectrum:
    """Discrete eigenpairs, ascending, orthonormal under (u, v)_h.

    ``vectors[k]`` holds the node values of the (k+1)-th eigenfunction.
    """

    grid: SpaceGrid
    order: FractionalOrder
    eigenvalues: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[0])

    def phi(self, k: int) -> np.ndarray:
        """Node values of eigenfunction k (1-based)."""
        return self.vectors[k - 1]

    def truncate(self, modes: int) -> "DirichletSpectrum":
        if not 1 <= modes <= self.n_modes:
            raise UsageError(f"cannot keep {modes} of {self.n_modes} modes")
        return DirichletSpectrum(self.grid, self.order, self.eigenvalues[:modes], self.vectors[:modes])

    def flipped(self, signs) -> "DirichletSpectrum":
        """Same spectrum with eigenfunction k multiplied by signs[k]."""
        signs = np.asarray(signs, dtype=float)
        return DirichletSpectrum(self.grid, self.order, self.eigenvalues, self.vectors * signs[:, None])

    @cached_property
    def operator(self) -> OperatorMatrix:
        return assemble_operator(self.order, self.grid)


def eigendecompose(matrix: OperatorMatrix, method: str = "lapack") -> DirichletSpectrum:
    """Full eigendecomposition of the operator matrix.

    ``method="lapack"`` uses the dense symmetric LAPACK driver;
    ``method="jacobi"`` uses :func:`jacobi_eigh` (slow, for cross-checks).
    """
    a = matrix.dense()
    if method == "lapack":
        try:
            vals, vecs = np.linalg.eigh(a)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"eigensolver failed: {exc}") from exc
    elif method == "jacobi":
        vals, vecs = jacobi_eigh(a)
    else:
        raise UsageError(f"unknown eigensolver {method!r}")

    grid = matrix.grid
    phis = vecs.T / math.sqrt(grid.h)
    # mirrored peaks tie for odd modes; take the leftmost near-maximal node
    mag = np.abs(phis)
    peak = np.argmax(mag >= mag.max(axis=1, keepdims=True) * (1 - 1e-8), axis=1)
    signs = np.sign(phis[np.arange(grid.n), peak])
    phis *= signs[:, None]

    if not np.all(np.isfinite(vals)) or vals[0] <= 0:
        raise NumericalFailure(f"operator is not positive definite (min eigenvalue {vals[0]:g})")
    if vals[1] - vals[0] <= 1e-8 * vals[0]:
        raise NumericalFailure("first eigenvalue is not simple")
    resid = np.abs(a @ phis.T - phis.T * vals).max()
    if resid > 1e-9 * vals[-1] * max(1.0, np.abs(phis).max()):
        raise NumericalFailure(f"eigenpair residual {resid:g} too large")

    vals.flags.writeable = False
    phis.flags.writeable = False
    return DirichletSpectrum(grid, matrix.order, vals, phis)


def weyl_ratio(spectrum: DirichletSpectrum, k: int) -> float:
    """lambda_k divided by the leading Weyl term (pi k / |Omega|)^(2s) in 1-D."""
    if not 1 <= k <= spectrum.n_modes:
        raise UsageError(f"k must lie in 1..{spectrum.n_modes}")
    s = spectrum.order.s
    # (2 pi)^{2s} k^{2s} / (omega_1 |Omega|)^{2s} with omega_1 = 2
    leading = (2 * math.pi * k / (2.0 * spectrum.grid.length)) ** (2 * s)
    return float(spectrum.eigenvalues[k - 1] / leading)


def project(values, spectrum: DirichletSpectrum) -> np.ndarray:
    """Modal coefficients (v, phi_k)_h; accepts a node array or a stack of them."""
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != spectrum.grid.n:
        raise UsageError(f"expected {spectrum.grid.n} node values, got {values.shape[-1]}")
    return spectrum.grid.h * (values @ spectrum.vectors.T)


def synthesize(coeffs, spectrum: DirichletSpectrum) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[-1] != spectrum.n_modes:
        raise UsageError(f"expected {spectrum.n_modes} coefficients, got {coeffs.shape[-1]}")
    return coeffs @ spectrum.vectors


def series_bound_check(spectrum: DirichletSpectrum, coeffs, m: int = 2):
    """Both sides of  sum_k lambda_k |c_k| <= Lambda^(1/2) ||A^m v||_h.

    Lambda = sum_k lambda_k^(-2(m-1)); A^m v is formed by repeated
    operator application, not through the eigenvalues.
    """
    if m < 2:
        raise UsageError("m must be >= 2")
    coeffs = np.asarray(coeffs, dtype=float)
    lam = spectrum.eigenvalues
    lhs = float(np.sum(lam * np.abs(coeffs)))
    big_lambda = float(np.sum(lam ** (-2.0 * (m - 1))))
    v = synthesize(coeffs, spectrum)
    op = spectrum.operator
    for _ in range(m):
        v = op.matvec(v)
    rhs = math.sqrt(big_lambda) * math.sqrt(spectrum.grid.inner(v, v))
    return lhs, rhs
