"""Command-line front end: ``fracheat --config run.json --out results/``.

Exit status: 0 success, 1 usage or configuration error, 2 numerical
failure, 3 violated solvability assumption.
"""
from __future__ import annotations

import argparse
from contextlib import contextmanager
import json
from pathlib import Path
import sys
import time
import warnings

import numpy as np

from . import io
from .acceptance import run_all
from .config import CsvRef, RunConfig, config_from_dict, load_config
from .data import sample_path, sample_space
from .errors import FracHeatError, NumericalFailure, UsageError
from .forward import observe_point, observe_weighted, solve_forward, weak_residual
from .freespace import recover_double
from .grids import LineGrid, SpaceGrid, TimeGrid
from .recovery import (AssumptionWarning, NonlocalDatumProblem, SingleDatumProblem,
                       recover_nonlocal, recover_single)
from .source import recover_source
from .spectral import assemble_operator, eigendecompose, weyl_ratio
from .volterra import SampledPath, cumulative_trapezoid

__all__ = ["main", "run", "build_parser"]


class _Timer:
    def __init__(self):
        self.timings = {}

    @contextmanager
    def __call__(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = round(time.perf_counter() - t0, 6)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    return obj


# --- data resolution -------------------------------------------------------

def _space(entry, x, spectrum=None):
    if isinstance(entry, CsvRef):
        return io.read_nodes(entry.path, x)
    lam1 = spectrum.lambda1 if spectrum is not None else None
    return None if entry is None else sample_space(entry, x, spectrum=spectrum, lambda1=lam1)


def _path(entry, grid, spectrum=None):
    if isinstance(entry, CsvRef):
        return io.read_path(entry.path, grid)
    if entry is None:
        return None
    lam1 = spectrum.lambda1 if spectrum is not None else None
    return sample_path(entry, grid, lambda1=lam1)


def _source(entry, x, grid):
    if isinstance(entry, CsvRef):
        return io.read_source(entry.path, x, grid)
    return entry


def _spectrum_for(cfg: RunConfig):
    grid = SpaceGrid(cfg.domain[0], cfg.domain[1], cfg.n)
    return eigendecompose(assemble_operator(cfg.s, grid), method=cfg.eigensolver)


# --- per-kind runners ------------------------------------------------------

def _run_spectrum(cfg, out: Path, report, tm):
    with tm("eigendecomposition"):
        sp = _spectrum_for(cfg)
    phi_q = None
    if cfg.q is not None:
        iq = sp.grid.snap(cfg.q)
        phi_q = sp.vectors[:, iq]
        report["diagnostics"].update(q_index=iq, q_snapped=float(sp.grid.nodes[iq]))
    io.write_spectrum(out / "spectrum.csv", sp, phi_q)
    gram = sp.grid.h * sp.vectors @ sp.vectors.T
    ks = [k for k in (1, 10, 20, 40) if k <= sp.n_modes]
    report["diagnostics"].update(
        orthonormality_error=float(np.max(np.abs(gram - np.eye(sp.n_modes)))),
        weyl_ratios={str(k): weyl_ratio(sp, k) for k in ks},
    )
    report["parameters"]["lambda1"] = sp.lambda1


def _run_forward(cfg, out, report, tm):
    sp = _spectrum_for(cfg)
    grid = TimeGrid(cfg.T, cfg.M)
    x = sp.grid.nodes
    report["parameters"]["lambda1"] = sp.lambda1
    phi = _space(cfg.phi, x, sp)
    p = _path(cfg.p, grid, sp)
    f = _source(cfg.f, x, grid)
    with tm("forward"):
        u = solve_forward(sp, phi, f, p, grid)
    diag = report["diagnostics"]
    diag["weak_residual"] = weak_residual(u, p, f)
    if cfg.write_field:
        io.write_field(out / "field.csv", x, grid.times, u.values)
    if cfg.q is not None:
        obs = observe_point(u, cfg.q)
        io.write_path(out / "observation.csv", obs)
        diag.update({k: obs.meta[k] for k in ("q_index", "q_snapped")})
    if cfg.omega is not None:
        io.write_path(out / "weighted.csv", observe_weighted(u, _space(cfg.omega, x, sp)))


def _exact_errors(cfg, res_r, res_p, grid, sp, diag):
    if cfg.r_exact is not None:
        r = _path(cfg.r_exact, grid, sp)
        diag["r_error_sup_relative"] = float(np.max(np.abs(res_r.values - r) / np.abs(r)))
    if cfg.p_exact is not None:
        p = _path(cfg.p_exact, grid, sp)
        diag["p_error_sup"] = float(np.max(np.abs(res_p.values - p)))


def _run_invert_single(cfg, out, report, tm):
    sp = _spectrum_for(cfg)
    grid = TimeGrid(cfg.T, cfg.M)
    x = sp.grid.nodes
    report["parameters"]["lambda1"] = sp.lambda1
    problem = SingleDatumProblem(sp, _space(cfg.phi, x, sp), _source(cfg.f, x, grid), cfg.q,
                                 _path(cfg.w, grid, sp), cfg.compat_tol)
    with tm("recovery"), warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AssumptionWarning)
        res = recover_single(problem, grid, modes=cfg.modes, threads=cfg.threads)
    diag = report["diagnostics"]
    diag.update(res.diagnostics)
    diag["warnings"] = [str(w.message) for w in caught]
    diag["residual"] = res.diagnostics["forward_consistency_relative"]
    _exact_errors(cfg, res.r, res.p, grid, sp, diag)
    io.write_coefficient(out / "coefficient.csv", res.r, res.p)
    if cfg.write_field:
        io.write_field(out / "field.csv", x, grid.times, res.u.values)


def _run_invert_nonlocal(cfg, out, report, tm):
    sp = _spectrum_for(cfg)
    grid = TimeGrid(cfg.T, cfg.M)
    x = sp.grid.nodes
    report["parameters"]["lambda1"] = sp.lambda1
    problem = NonlocalDatumProblem(sp, _space(cfg.phi, x, sp), _source(cfg.f, x, grid),
                                   _space(cfg.omega, x, sp), _path(cfg.w, grid, sp), cfg.compat_tol)
    with tm("recovery"):
        res = recover_nonlocal(problem, grid, modes=cfg.modes, threads=cfg.threads)
    diag = report["diagnostics"]
    diag.update(res.diagnostics)
    diag["residual"] = res.diagnostics["observation_residual_relative"]
    _exact_errors(cfg, res.r, res.p, grid, sp, diag)
    io.write_coefficient(out / "coefficient.csv", res.r, res.p)
    if cfg.write_field:
        io.write_field(out / "field.csv", x, grid.times, res.u.values)


def _run_invert_double(cfg, out, report, tm):
    line = LineGrid(cfg.L, cfg.N)
    grid = TimeGrid(cfg.T, cfg.M)
    x = line.nodes
    phi = _space(cfg.phi, x)
    f = _source(cfg.f, x, grid)
    kwargs = {}
    if cfg.p_true is not None:
        kwargs["p_true"] = _path(cfg.p_true, grid)
    else:
        kwargs["w1"] = _path(cfg.w1, grid)
        kwargs["w2"] = _path(cfg.w2, grid)
    with tm("recovery"):
        res = recover_double(cfg.s, phi, f, cfg.q, line, grid, pad=cfg.pad, **kwargs)
    r = SampledPath(grid, np.exp(-cumulative_trapezoid(res.p).values))
    diag = report["diagnostics"]
    diag.update(res.diagnostics)
    if "p_error_sup" in res.diagnostics:
        diag["residual"] = res.diagnostics["p_error_sup"]
    _exact_errors(cfg, r, res.p, grid, None, diag)
    io.write_coefficient(out / "coefficient.csv", r, res.p)
    io.write_path(out / "w1.csv", res.w1)
    io.write_path(out / "w2.csv", res.w2)


def _run_invert_source(cfg, out, report, tm):
    sp = _spectrum_for(cfg)
    grid = TimeGrid(cfg.T, cfg.M)
    x = sp.grid.nodes
    report["parameters"]["lambda1"] = sp.lambda1
    with tm("recovery"):
        pair = recover_source(sp, _space(cfg.phi, x, sp), _space(cfg.psi, x, sp), cfg.T, grid)
    report["diagnostics"].update(pair.diagnostics)
    report["diagnostics"]["residual"] = pair.diagnostics["terminal_residual"]
    io.write_source(out / "source.csv", x, pair.f)
    if cfg.write_field:
        io.write_field(out / "field.csv", x, grid.times, pair.u.values)


def _run_selftest(cfg, out, report, tm):
    with tm("selftest"):
        results = run_all(emit=print)
    report["diagnostics"]["criteria"] = [
        {"number": r.number, "name": r.name, "passed": r.passed, "measured": r.measured,
         "seconds": r.seconds} for r in results
    ]
    failed = [r.number for r in results if not r.passed]
    if failed:
        raise NumericalFailure(f"selftest failed criteria {failed}")


RUNNERS = {
    "spectrum": _run_spectrum,
    "forward": _run_forward,
    "invert-single": _run_invert_single,
    "invert-nonlocal": _run_invert_nonlocal,
    "invert-double": _run_invert_double,
    "invert-source": _run_invert_source,
    "selftest": _run_selftest,
}


def run(cfg: RunConfig, out: Path) -> dict:
    """Execute one configuration, writing artifacts and ``report.json`` to ``out``.

    Raises the package exceptions; the report is written on failure as well.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    tm = _Timer()
    report = {"kind": cfg.kind, "status": "ok", "exit_code": 0,
              "parameters": cfg.resolved(), "diagnostics": {}, "timings": tm.timings}
    t0 = time.perf_counter()
    try:
        RUNNERS[cfg.kind](cfg, out, report, tm)
    except FracHeatError as exc:
        report.update(status="error", exit_code=exc.exit_code, error=str(exc))
        if getattr(exc, "assumption", None) is not None:
            report["diagnostics"]["violated_assumption"] = exc.assumption
        raise
    finally:
        tm.timings["total"] = round(time.perf_counter() - t0, 6)
        (out / "report.json").write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    return report


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracheat", description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, help="JSON run configuration")
    ap.add_argument("--out", type=Path, help="output directory (overrides the config)")
    ap.add_argument("--threads", type=int, help="worker threads for kernel mode sums")
    ap.add_argument("--selftest", action="store_true", help="run the acceptance suite")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        if args.selftest:
            cfg = config_from_dict({"kind": "selftest"})
        elif args.config is None:
            raise UsageError("give --config <file> or --selftest")
        else:
            cfg = load_config(args.config)
        if args.threads is not None:
            if args.threads < 1:
                raise UsageError("--threads must be >= 1")
            cfg.threads = args.threads
        out = args.out or (Path(cfg.out) if cfg.out else None)
        if out is None:
            out = Path("fracheat-out")
        elif not out.is_absolute() and args.out is None:
            out = (cfg.base_dir / out).resolve()
        report = run(cfg, out)
    except FracHeatError as exc:
        print(f"fracheat: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"fracheat: error: {exc}", file=sys.stderr)
        return 1
    diag = report["diagnostics"]
    if "residual" in diag:
        print(f"{cfg.kind}: ok, residual={diag['residual']:.3g}, output in {out}")
    else:
        print(f"{cfg.kind}: ok, output in {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
