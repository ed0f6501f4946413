"""End-to-end verification suite with one pass/fail line per criterion.

Used by ``fracheat --selftest`` and by the test suite.  Every check compares
against a closed form or an identity; nothing here is tuned to the
implementation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math
import time
import warnings

import numpy as np

from .data import EigenMode, Separable
from .forward import solve_forward
from .freespace import KernelEvaluator, kernel_mass, recover_double
from .grids import LineGrid, SpaceGrid, TimeGrid
from .recovery import (AssumptionWarning, NonlocalDatumProblem, SingleDatumProblem,
                       assemble_single, recover_nonlocal, recover_single)
from .source import recover_source, roundtrip_check
from .spectral import assemble_operator, eigendecompose, series_bound_check, weyl_ratio
from .volterra import VolterraProblem, differentiate, solve_second_kind

__all__ = ["CriterionResult", "CRITERIA", "run_all", "observed_orders"]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        vals = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number}. {self.name}: {vals} ({self.seconds:.1f} s)"


def _fmt(v):
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return f"{v:.3g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _spectrum(s=0.5, n=256, a=-1.0, b=1.0):
    return eigendecompose(assemble_operator(s, SpaceGrid(a, b, n)))


def observed_orders(errors) -> list[float]:
    e = np.asarray(errors, dtype=float)
    return [float(v) for v in np.log2(e[:-1] / e[1:])]


def criterion_nonlocal_example() -> CriterionResult:
    t0 = time.perf_counter()
    sp = _spectrum(0.5, 256)
    grid = TimeGrid(1.0, 800)
    problem = NonlocalDatumProblem(sp, EigenMode(1), Separable(EigenMode(1), "1+sin(t)^2"),
                                   EigenMode(1), "1+t^2")
    res = recover_nonlocal(problem, grid)
    lam = sp.lambda1
    t = grid.times
    exact = (lam + 2 * t + lam * t * t) / (1 + np.sin(t) ** 2)
    rel = float(np.max(np.abs(res.r.values - exact) / np.abs(exact)))
    r0 = abs(float(res.r.values[0]) - lam)
    secs = time.perf_counter() - t0
    ok = rel <= 1e-2 and r0 <= 1e-3 and secs <= 60
    return CriterionResult(1, "nonlocal datum, closed-form r", ok,
                           {"sup_rel_err": rel, "r0_err": r0, "lambda1": lam}, secs)


def criterion_single_example(q: float = 0.5) -> CriterionResult:
    t0 = time.perf_counter()
    sp = _spectrum(0.5, 256)
    grid = TimeGrid(1.0, 800)
    iq = sp.grid.snap(q)
    lam = sp.lambda1
    phi_q = float(sp.phi(1)[iq])
    problem = SingleDatumProblem(sp, EigenMode(1), Separable(EigenMode(1), "exp(-lambda1*t)"), q,
                                 lambda tt: np.exp(-lam * tt) * phi_q)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AssumptionWarning)
        vp = assemble_single(problem, grid)
        res = recover_single(problem, grid)
    gerr = float(np.max(np.abs(vp.g - 1.0)))
    K = vp.kernel_matrix()
    kerr = float(np.max(np.abs(K[np.tril_indices_from(K)] - 1.0)))
    fc = res.diagnostics["forward_consistency_relative"]
    p_const = float(np.max(np.abs(res.p.values + 1.0)))
    secs = time.perf_counter() - t0
    ok = fc <= 5e-3 and gerr <= 1e-10 and kerr <= 1e-10 and secs <= 60
    return CriterionResult(2, "point datum, forward consistency", ok,
                           {"fwd_rel": fc, "g_err": gerr, "K_err": kerr, "p_plus_1": p_const}, secs)


def criterion_double_datum() -> CriterionResult:
    t0 = time.perf_counter()
    line = LineGrid(40.0, 1024)
    grid = TimeGrid(1.0, 400)
    phi, f = "exp(-x^2)", "exp(-x^2)*(1+t)"
    res = recover_double(0.5, phi, f, 0.0, line, grid, p_true="sin(t)")
    err = res.diagnostics["p_error_sup"]
    zero = recover_double(0.5, phi, f, 0.0, line, grid, p_true=0.0)
    fq = 1.0 + grid.times
    ident = float(np.max(np.abs(zero.w2.values + differentiate(zero.w1).values - fq)))
    secs = time.perf_counter() - t0
    ok = err <= 2e-2 and ident <= 2e-3 and secs <= 180
    return CriterionResult(3, "double datum recovery", ok, {"p_err": err, "identity_err": ident}, secs)


def criterion_source_roundtrip(trials: int = 20, seed: int = 20240607) -> CriterionResult:
    t0 = time.perf_counter()
    sp = _spectrum(0.5, 256)
    rng = np.random.default_rng(seed)
    worst_rt = 0.0
    worst_end = 0.0
    for T in (0.1, 1.0, 10.0):
        for _ in range(trials):
            phi = rng.standard_normal(sp.grid.n)
            fstar = rng.standard_normal(sp.grid.n)
            worst_rt = max(worst_rt, roundtrip_check(sp, phi, fstar, T))
            psi = rng.standard_normal(sp.grid.n)
            pair = recover_source(sp, phi, psi, T, TimeGrid(T, 4))
            scale = max(np.max(np.abs(phi)), np.max(np.abs(psi)))
            e0 = np.max(np.abs(pair.u.values[0] - phi)) / scale
            e1 = np.max(np.abs(pair.u.values[-1] - psi)) / scale
            worst_end = max(worst_end, float(e0), float(e1))
    secs = time.perf_counter() - t0
    ok = worst_rt <= 1e-9 and worst_end <= 1e-9 and secs <= 10
    return CriterionResult(4, "source roundtrip", ok, {"rel_err": worst_rt, "endpoint_err": worst_end}, secs)


def criterion_weyl(n: int = 1024) -> CriterionResult:
    t0 = time.perf_counter()
    sp = _spectrum(0.5, n)
    ks = (10, 20, 40)
    ratios = [weyl_ratio(sp, k) for k in ks]
    dev = [abs(r - 1.0) for r in ratios]
    inside = all(0.90 <= r <= 1.02 for r in ratios)
    shrinking = all(d2 < d1 for d1, d2 in zip(dev, dev[1:]))
    secs = time.perf_counter() - t0
    return CriterionResult(5, "Weyl asymptotics", inside and shrinking,
                           {"ratios": ratios, "monotone": shrinking}, secs)


def criterion_kernel() -> CriterionResult:
    t0 = time.perf_counter()
    ev = KernelEvaluator(0.5)
    x = np.linspace(-5.0, 5.0, 401)
    err = 0.0
    for t in (0.5, 1.0, 2.0):
        exact = t / (math.pi * (t * t + x * x))
        err = max(err, float(np.max(np.abs(ev(x, t) - exact))))
    mass = max(abs(kernel_mass(1.0, s) - 1.0) for s in (0.4, 0.5, 0.75))
    secs = time.perf_counter() - t0
    return CriterionResult(6, "heat kernel", err <= 1e-6 and mass <= 1e-5,
                           {"poisson_err": err, "mass_err": mass}, secs)


def volterra_errors(Ms=(100, 200, 400, 800)) -> list[float]:
    out = []
    for M in Ms:
        grid = TimeGrid(1.0, M)
        r = solve_second_kind(VolterraProblem.from_function(grid, 1.0, lambda t, tau: np.ones_like(tau)))
        out.append(float(np.max(np.abs(r.values - np.exp(grid.times)))))
    return out


def forward_errors(Ms=(100, 200, 400, 800), c: float = 0.5, n: int = 64) -> list[float]:
    """Mode-1 manufactured case u_1(t) = cos t + t with p = c."""
    sp = _spectrum(0.5, n)
    lam = sp.lambda1
    out = []
    for M in Ms:
        grid = TimeGrid(1.0, M)
        src = Separable(EigenMode(1), lambda t: 1.0 - np.sin(t) + (lam - c) * (np.cos(t) + t))
        u = solve_forward(sp, EigenMode(1), src, c, grid)
        out.append(float(np.max(np.abs(u.coeffs[:, 0] - (np.cos(grid.times) + grid.times)))))
    return out


def criterion_orders() -> CriterionResult:
    t0 = time.perf_counter()
    ov = observed_orders(volterra_errors())
    of = observed_orders(forward_errors())
    ok = all(1.8 <= o <= 2.2 for o in ov + of)
    return CriterionResult(7, "convergence orders", ok, {"volterra": ov, "forward": of},
                           time.perf_counter() - t0)


def criterion_properties(seed: int = 7) -> CriterionResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    sp = _spectrum(0.5, 256)
    A = sp.operator
    h = sp.grid.h
    sym = 0.0
    for _ in range(100):
        u, v = rng.standard_normal((2, sp.grid.n))
        Au, Av = A.matvec(u), A.matvec(v)
        lhs, rhs = h * Au @ v, h * u @ Av
        scale = h * (np.linalg.norm(Au) * np.linalg.norm(v) + np.linalg.norm(u) * np.linalg.norm(Av))
        sym = max(sym, abs(lhs - rhs) / scale)
    gram = h * sp.vectors @ sp.vectors.T
    ortho = float(np.max(np.abs(gram - np.eye(sp.n_modes))))

    grid = TimeGrid(2.0, 200)
    energy_ok = True
    for _ in range(5):
        phi = rng.standard_normal(sp.grid.n)
        u = solve_forward(sp, phi, None, None, grid)
        bound = np.exp(-sp.lambda1 * grid.times) * np.sqrt(h) * np.linalg.norm(phi)
        energy_ok &= bool(np.all(u.norms() <= bound * (1 + 1e-12)))

    bound_ok = True
    margin = np.inf
    for _ in range(50):
        c = rng.standard_normal(sp.n_modes) / (1.0 + np.arange(sp.n_modes)) ** 2
        lhs, rhs = series_bound_check(sp, c, m=2)
        bound_ok &= lhs <= rhs
        margin = min(margin, rhs / lhs)
    ok = sym <= 1e-12 and ortho <= 1e-10 and energy_ok and bound_ok
    return CriterionResult(8, "property suites", ok,
                           {"symmetry": float(sym), "orthonormality": ortho, "energy_decay": energy_ok,
                            "series_bound": bound_ok, "min_rhs_over_lhs": float(margin)},
                           time.perf_counter() - t0)


CRITERIA = (
    criterion_nonlocal_example,
    criterion_single_example,
    criterion_double_datum,
    criterion_source_roundtrip,
    criterion_weyl,
    criterion_kernel,
    criterion_orders,
    criterion_properties,
)


def run_all(emit=print) -> list[CriterionResult]:
    results = []
    for fn in CRITERIA:
        res = fn()
        if emit is not None:
            emit(res.line())
        results.append(res)
    return results
