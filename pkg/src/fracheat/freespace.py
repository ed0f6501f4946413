"""Fractional heat flow on the real line and the double-datum recovery of p.

The heat kernel is evaluated from its Fourier cosine integral

    P(x, t) = (1/pi) int_0^inf exp(-t xi^(2s)) cos(x xi) dxi

by composite Gauss-Legendre quadrature.  On a line grid with spacing dx the
same integral cut at the Nyquist frequency pi/dx gives the band-limited
kernel: summing it against node samples is the exact convolution of the
true kernel with the sinc interpolant of the samples, which stays accurate
when t is so small that P is narrower than dx and tends to the identity as
t -> 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.fft
from scipy.integrate import trapezoid
import scipy.signal
from scipy.special import gamma

from .data import sample_path, sample_source, sample_space
from .errors import AssumptionViolation, NumericalFailure, UsageError
from .grids import LineGrid, TimeGrid, as_order
from .volterra import SampledPath, cumulative_trapezoid, differentiate

__all__ = [
    "KernelEvaluator",
    "heat_kernel",
    "kernel_mass",
    "frac_laplacian_line",
    "LineField",
    "solve_cauchy",
    "observe_pair",
    "recover_p_double",
    "DoubleDatumResult",
    "recover_double",
]

_GL_POINTS = 8
_GL = np.polynomial.legendre.leggauss(_GL_POINTS)


def _panel_nodes(xi_max: float, x_abs_max: float, grading: int = 12):
    """Gauss-Legendre nodes/weights on [0, xi_max].

    Panels are no wider than min(pi/(4|x|+1), xi_max/64); the first panel is
    further split geometrically towards 0, where xi^(2s) is not smooth.
    """
    width = min(math.pi / (4.0 * x_abs_max + 1.0), xi_max / 64.0)
    n_pan = int(math.ceil(xi_max / width))
    edges = np.linspace(0.0, xi_max, n_pan + 1)
    first = edges[1]
    graded = first * 2.0 ** -np.arange(grading, -1, -1, dtype=float)
    edges = np.concatenate(([0.0], graded, edges[2:]))
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    xi = (mid[:, None] + half[:, None] * _GL[0][None, :]).ravel()
    wt = (half[:, None] * _GL[1][None, :]).ravel()
    return xi, wt


@dataclass
class KernelEvaluator:
    """Quadrature for P(x, t) with a memo of evaluated (x, t) pairs.

    Parameters
    ----------
    s : fractional order.
    band : optional cut-off frequency; ``None`` evaluates the full kernel,
        a finite value the band-limited kernel used on line grids.
    tail : the integral is cut where exp(-t xi^(2s)) = exp(-tail).
    """

    s: float
    band: float | None = None
    tail: float = 40.0
    memo: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.s = as_order(self.s).s
        if self.band is not None and not self.band > 0:
            raise UsageError("band must be positive")

    def cutoff(self, t: float) -> float:
        xi = max(1.0, (self.tail / t) ** (1.0 / (2.0 * self.s)))
        return xi if self.band is None else min(xi, self.band)

    def _check_t(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(~(t > 0)) or not np.all(np.isfinite(t)):
            raise UsageError("heat kernel needs t > 0")
        return t

    def __call__(self, x, t: float):
        """P(x, t) for scalar t and scalar or array x."""
        t = float(self._check_t(t))
        xa = np.asarray(x, dtype=float)
        if xa.ndim == 0:
            key = (float(xa), t)
            hit = self.memo.get(key)
            if hit is None:
                hit = float(self.table(xa.reshape(1), np.array([t]))[0, 0])
                # values are deterministic, so concurrent writers agree
                self.memo[key] = hit
            return hit
        return self.table(xa.ravel(), np.array([t]))[:, 0].reshape(xa.shape)

    def table(self, x, times, chunk: int = 256) -> np.ndarray:
        """P(x_i, t_m) for every pair, from one shared node set."""
        x = np.abs(np.asarray(x, dtype=float))
        times = self._check_t(times).ravel()
        xi_max = self.cutoff(float(times.min()))
        xi, wt = _panel_nodes(xi_max, float(x.max(initial=0.0)))
        with np.errstate(under="ignore"):
            W = wt[:, None] * np.exp(-np.outer(xi ** (2.0 * self.s), times)) / math.pi
        out = np.empty((x.shape[0], times.shape[0]))
        for lo in range(0, x.shape[0], chunk):
            out[lo: lo + chunk] = np.cos(np.outer(x[lo: lo + chunk], xi)) @ W
        return out


def heat_kernel(x, t: float, s, evaluator: KernelEvaluator | None = None):
    """Fundamental solution of u_t + (-Delta)^s u = 0 on the line."""
    ev = evaluator if evaluator is not None else KernelEvaluator(s)
    return ev(x, t)


def _tail_integral(s: float, t: float, X: float, terms: int = 12) -> float:
    """int_X^inf P(x, t) dx from the large-|x| series of the stable density.

    P(x, 1) ~ (1/pi) sum_k (-1)^(k+1)/k! Gamma(2sk+1) sin(pi s k) x^(-2sk-1);
    by scaling only X t^(-1/(2s)) matters.
    """
    y = X * t ** (-1.0 / (2.0 * s))
    total = 0.0
    for k in range(1, terms + 1):
        a = 2.0 * s * k
        size = gamma(a + 1) / math.factorial(k) * y ** (-a) / a
        total += (-1) ** (k + 1) * math.sin(math.pi * s * k) * size
        if size < 1e-17:
            break
    return total / math.pi


def kernel_mass(t: float, s, width: float = 50.0, n: int = 2001,
                evaluator: KernelEvaluator | None = None) -> float:
    """Trapezoid of P(., t) over |x| <= width t^(1/(2s)) plus both tails.

    The tails decay like |x|^(-1-2s) and carry mass ~ width^(-2s), which is
    far above 1e-5 for small s, so they are added from the asymptotic series.
    """
    s = as_order(s).s
    X = width * t ** (1.0 / (2.0 * s))
    x = np.linspace(-X, X, n)
    ev = evaluator if evaluator is not None else KernelEvaluator(s)
    p = ev.table(x, np.array([t]))[:, 0]
    return float(trapezoid(p, x) + 2.0 * _tail_integral(s, t, X))


def frac_laplacian_line(f, grid: LineGrid, s, pad: int = 1, check_decay: bool = True,
                        decay_tol: float = 1e-10) -> np.ndarray:
    """(-Delta)^s f on the line grid by the discrete Fourier transform.

    ``f`` may be one node array or a stack (last axis = nodes).  ``pad``
    zero-pads to pad*N points, which pushes the periodic images of slowly
    decaying outputs further away.
    """
    s = as_order(s).s
    f = np.asarray(f, dtype=float)
    N = grid.N
    if f.shape[-1] != N:
        raise UsageError(f"expected {N} line nodes, got {f.shape[-1]}")
    if check_decay:
        edge = max(float(np.max(np.abs(f[..., 0]))), float(np.max(np.abs(f[..., -1]))))
        if edge > decay_tol:
            raise UsageError(f"data do not decay at the grid ends (|f| = {edge:.3g}); increase L")
    if pad < 1:
        raise UsageError("pad must be >= 1")
    size = pad * N
    buf = np.zeros(f.shape[:-1] + (size,))
    buf[..., :N] = f
    xi = 2.0 * math.pi * scipy.fft.rfftfreq(size, d=grid.dx)
    sym = xi ** (2.0 * s)
    sym[0] = 0.0
    out = scipy.fft.irfft(scipy.fft.rfft(buf, axis=-1) * sym, n=size, axis=-1)
    return out[..., :N]


@dataclass(frozen=True)
class LineField:
    """Solution values on the line at selected nodes (all nodes when ``points`` is None)."""

    grid: LineGrid
    time_grid: TimeGrid
    values: np.ndarray = field(repr=False)
    points: np.ndarray | None = None

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes if self.points is None else self.grid.nodes[self.points]

    def at(self, i: int) -> SampledPath:
        """Time path at node index i."""
        if self.points is None:
            col = i
        else:
            hits = np.flatnonzero(self.points == i)
            if hits.size == 0:
                raise UsageError(f"node {i} was not computed")
            col = int(hits[0])
        return SampledPath(self.time_grid, self.values[:, col], {"x": float(self.grid.nodes[i])})


def _support_check(arr, grid: LineGrid, what: str, tol: float = 1e-10):
    outside = np.abs(grid.nodes) >= 0.5 * grid.L
    worst = float(np.max(np.abs(arr[..., outside]))) if np.any(outside) else 0.0
    if worst > tol:
        raise AssumptionViolation("compact-support",
                                  f"{what} reaches {worst:.3g} beyond |x| = L/2 = {0.5 * grid.L:g}; increase L")


def solve_cauchy(phi, f, r, s, line: LineGrid, tgrid: TimeGrid, points=None,
                 check_support: bool = True, evaluator: KernelEvaluator | None = None) -> LineField:
    """Duhamel solution of v_t + (-Delta)^s v = r(t) f, v(., 0) = phi.

    Space integrals are sums over the line nodes with the band-limited
    kernel; the time integral is the product trapezoid whose last panel uses
    P(., 0+) = identity.  ``points`` selects node indices to evaluate (all
    nodes when omitted, via batched FFT convolution).
    """
    s = as_order(s).s
    x = line.nodes
    N, M, dx, dt = line.N, tgrid.M, line.dx, tgrid.dt
    phi_v = sample_space(phi, x, what="phi")
    F = sample_source(f, x, tgrid, what="f")
    rv = sample_path(r, tgrid, what="r") if r is not None else np.ones(M + 1)
    if check_support:
        _support_check(phi_v, line, "phi")
        _support_check(F, line, "f")
    G = rv[:, None] * F
    ev = evaluator if evaluator is not None else KernelEvaluator(s, band=line.nyquist)
    lag_times = tgrid.times[1:]

    if points is None:
        T = ev.table(dx * np.arange(N), lag_times)            # (N, M)
        Ksym = np.concatenate((T[:0:-1], T), axis=0) * dx      # lags -(N-1)..N-1
        out = np.empty((M + 1, N))
        out[0] = phi_v
        hom = scipy.signal.fftconvolve(phi_v[None, :], Ksym.T, axes=1)[:, N - 1: 2 * N - 1]
        out[1:] = hom
        duh = np.zeros((M + 1, N))
        for ell in range(1, M + 1):
            conv = scipy.signal.fftconvolve(G[: M - ell + 1], Ksym[:, ell - 1][None, :], axes=1)[:, N - 1: 2 * N - 1]
            conv[0] *= 0.5
            duh[ell:] += conv
        duh[1:] += 0.5 * G[1:]
        out[1:] += dt * duh[1:]
        if not np.all(np.isfinite(out)):
            raise NumericalFailure("line solution is not finite")
        return LineField(line, tgrid, out, None)

    idx = np.atleast_1d(np.asarray(points, dtype=int))
    if np.any((idx < 0) | (idx >= N)):
        raise UsageError("point index outside the line grid")
    lmax = int(max(np.max(idx), N - 1 - np.min(idx)))
    T = ev.table(dx * np.arange(lmax + 1), lag_times)          # (lmax+1, M)
    out = np.empty((M + 1, idx.shape[0]))
    i_all = np.arange(N)
    for col, q in enumerate(idx):
        Kq = T[np.abs(q - i_all)] * dx                         # (N, M)
        out[0, col] = phi_v[q]
        out[1:, col] = phi_v @ Kq
        B = Kq.T @ G.T                                         # B[ell-1, j]
        duh = np.zeros(M + 1)
        for m in range(1, M + 1):
            j = np.arange(0, m)
            acc = B[m - j - 1, j]
            acc[0] *= 0.5
            duh[m] = acc.sum() + 0.5 * G[m, q]
        out[:, col] += dt * duh
    if not np.all(np.isfinite(out)):
        raise NumericalFailure("line solution is not finite")
    return LineField(line, tgrid, out, idx)


def _r_from_p(p, tgrid: TimeGrid) -> np.ndarray:
    pv = SampledPath(tgrid, sample_path(p, tgrid, what="p"))
    return np.exp(-cumulative_trapezoid(pv).values)


def observe_pair(s, phi, f, p, q: float, line: LineGrid, tgrid: TimeGrid, pad: int = 8,
                 evaluator: KernelEvaluator | None = None):
    """Generate the two point data at the node nearest q for a known p.

    Returns ``(w1, w2)``: w1 = u(q, t) for data (phi, f) and w2 the same
    observation for data ((-Delta)^s phi, (-Delta)^s f), both driven by p.
    """
    s = as_order(s).s
    x = line.nodes
    iq = line.snap(q)
    F = sample_source(f, x, tgrid, what="f")
    fq = F[:, iq]
    if np.any(fq == 0.0):
        m = int(np.argmax(fq == 0.0))
        raise AssumptionViolation("double-datum", f"f(q, t) vanishes at t={tgrid.times[m]:.6g}")
    phi_v = sample_space(phi, x, what="phi")
    _support_check(phi_v, line, "phi")
    _support_check(F, line, "f")
    r = _r_from_p(p, tgrid)
    ev = evaluator if evaluator is not None else KernelEvaluator(s, band=line.nyquist)
    v1 = solve_cauchy(phi_v, F, r, s, line, tgrid, points=[iq], evaluator=ev).values[:, 0]
    Aphi = frac_laplacian_line(phi_v, line, s, pad=pad)
    AF = frac_laplacian_line(F, line, s, pad=pad)
    # (-Delta)^s of compactly supported data has algebraic tails, so no support check here
    v2 = solve_cauchy(Aphi, AF, r, s, line, tgrid, points=[iq], check_support=False,
                      evaluator=ev).values[:, 0]
    meta = {"q": float(q), "q_index": iq, "q_snapped": float(x[iq])}
    return SampledPath(tgrid, v1 / r, meta), SampledPath(tgrid, v2 / r, meta)


def recover_p_double(w1: SampledPath, w2: SampledPath, f_at_q) -> SampledPath:
    """p = (w1' + w2 - f(q, .)) / w1, from evaluating the equation at q."""
    if w1.grid != w2.grid:
        raise UsageError("w1 and w2 must share a time grid")
    fq = sample_path(f_at_q, w1.grid, what="f(q, t)")
    if np.any(np.abs(w1.values) <= 1e-300) or np.any(np.sign(w1.values) != np.sign(w1.values[0])):
        m = int(np.argmax((np.abs(w1.values) <= 1e-300) | (np.sign(w1.values) != np.sign(w1.values[0]))))
        raise NumericalFailure(f"w1 vanishes near t={w1.times[m]:.6g}")
    dw1 = differentiate(w1).values
    return SampledPath(w1.grid, (dw1 + w2.values - fq) / w1.values)


@dataclass(frozen=True)
class DoubleDatumResult:
    p: SampledPath
    w1: SampledPath
    w2: SampledPath
    diagnostics: dict = field(default_factory=dict)


def recover_double(s, phi, f, q: float, line: LineGrid, tgrid: TimeGrid, p_true=None,
                   w1=None, w2=None, pad: int = 8) -> DoubleDatumResult:
    """Double-datum recovery in data-generation mode (``p_true`` given) or
    measurement mode (``w1`` and ``w2`` given)."""
    x = line.nodes
    iq = line.snap(q)
    fq = sample_source(f, x, tgrid, what="f")[:, iq]
    if np.any(fq == 0.0):
        m = int(np.argmax(fq == 0.0))
        raise AssumptionViolation("double-datum", f"f(q, t) vanishes at t={tgrid.times[m]:.6g}")
    diag = {"q": float(q), "q_index": iq, "q_snapped": float(x[iq])}
    if p_true is not None:
        w1, w2 = observe_pair(s, phi, f, p_true, q, line, tgrid, pad=pad)
        mode = "generate"
    elif w1 is not None and w2 is not None:
        w1 = SampledPath(tgrid, sample_path(w1, tgrid, what="w1"))
        w2 = SampledPath(tgrid, sample_path(w2, tgrid, what="w2"))
        mode = "measure"
    else:
        raise UsageError("give either p_true or both w1 and w2")
    p = recover_p_double(w1, w2, fq)
    diag["mode"] = mode
    if p_true is not None:
        pt = sample_path(p_true, tgrid, what="p")
        diag["p_error_sup"] = float(np.max(np.abs(p.values - pt)))
    return DoubleDatumResult(p, w1, w2, diag)
