"""JSON run configuration: loading, validation and resolution of data entries.

A data entry is one of

* a number;
* an expression string in ``x`` and/or ``t`` (``lambda1`` and ``pi`` allowed);
* ``{"csv": "file.csv"}``, relative to the config file;
* ``{"eigenfunction": k, "factor": 2.0}`` for interval data; for a source
  the factor may be an expression in ``t``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
import json
import math
from pathlib import Path

from . import expr as ex
from .data import EigenMode, Separable
from .errors import UsageError

__all__ = ["RunConfig", "CsvRef", "load_config", "config_from_dict", "KINDS"]

KINDS = ("spectrum", "forward", "invert-single", "invert-nonlocal", "invert-double",
         "invert-source", "selftest")

SPACE_FIELDS = ("phi", "omega", "psi")
PATH_FIELDS = ("p", "w", "w1", "w2", "p_true", "r_exact", "p_exact")
SOURCE_FIELDS = ("f",)

REQUIRED = {
    "spectrum": (),
    "forward": ("phi",),
    "invert-single": ("phi", "f", "q", "w"),
    "invert-nonlocal": ("phi", "f", "omega", "w"),
    "invert-double": ("phi", "f", "q"),
    "invert-source": ("phi", "psi"),
    "selftest": (),
}


@dataclass(frozen=True)
class CsvRef:
    path: Path


@dataclass
class RunConfig:
    kind: str
    s: float = 0.5
    domain: tuple = (-1.0, 1.0)
    n: int = 256
    L: float = 40.0
    N: int = 1024
    T: float = 1.0
    M: int = 800
    eigensolver: str = "lapack"
    q: float | None = None
    phi: object = None
    f: object = None
    p: object = None
    w: object = None
    omega: object = None
    psi: object = None
    w1: object = None
    w2: object = None
    p_true: object = None
    r_exact: object = None
    p_exact: object = None
    compat_tol: float = 1e-6
    modes: int | None = None
    pad: int = 8
    write_field: bool = True
    threads: int = 1
    out: str | None = None
    base_dir: Path = field(default_factory=Path.cwd)

    def resolved(self) -> dict:
        """Plain-JSON view of the parameters actually used."""
        out = {}
        for fd in fields(self):
            if fd.name == "base_dir":
                continue
            v = getattr(self, fd.name)
            if v is None:
                continue
            out[fd.name] = _describe(v)
        return out


def _describe(v):
    if isinstance(v, CsvRef):
        return {"csv": str(v.path)}
    if isinstance(v, EigenMode):
        return {"eigenfunction": v.k, "factor": v.scale}
    if isinstance(v, Separable):
        factor = ex.to_source(v.factor) if not isinstance(v.factor, (int, float)) else v.factor
        return {"eigenfunction": v.shape.k, "factor": factor}
    if isinstance(v, (ex.Num, ex.Var, ex.Neg, ex.BinOp, ex.Call)):
        return ex.to_source(v)
    if isinstance(v, tuple):
        return list(v)
    if isinstance(v, Path):
        return str(v)
    return v


def _number(raw, name, *, integer=False, positive=False, minimum=None):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise UsageError(f"field {name!r} must be a number, got {raw!r}")
    if integer and int(raw) != raw:
        raise UsageError(f"field {name!r} must be an integer, got {raw!r}")
    v = int(raw) if integer else float(raw)
    if not math.isfinite(v):
        raise UsageError(f"field {name!r} must be finite")
    if positive and v <= 0:
        raise UsageError(f"field {name!r} must be positive, got {raw!r}")
    if minimum is not None and v < minimum:
        raise UsageError(f"field {name!r} must be >= {minimum}, got {raw!r}")
    return v


def _expr(text, name, allowed):
    try:
        e = ex.parse(text)
    except ex.ExprSyntaxError as exc:
        raise UsageError(f"field {name!r}: {exc}") from None
    extra = ex.free_names(e) - set(allowed) - {"pi", "lambda1"}
    if extra:
        raise UsageError(f"field {name!r} may not use {', '.join(sorted(extra))}")
    return e


def _entry(raw, name, allowed, base: Path):
    if raw is None:
        return None
    if isinstance(raw, bool):
        raise UsageError(f"field {name!r} must not be a boolean")
    if isinstance(raw, (int, float)):
        return _number(raw, name)
    if isinstance(raw, str):
        return _expr(raw, name, allowed)
    if isinstance(raw, dict):
        keys = set(raw)
        if keys == {"csv"}:
            p = Path(raw["csv"])
            p = p if p.is_absolute() else base / p
            if not p.is_file():
                raise UsageError(f"field {name!r}: file {p} does not exist")
            return CsvRef(p)
        if "eigenfunction" in keys and keys <= {"eigenfunction", "factor"}:
            if "x" not in allowed:
                raise UsageError(f"field {name!r} is a function of t; eigenfunction data are not allowed")
            k = _number(raw["eigenfunction"], f"{name}.eigenfunction", integer=True, minimum=1)
            factor = raw.get("factor", 1.0)
            if "t" in allowed:
                fac = _entry(factor, f"{name}.factor", ("t",), base)
                return Separable(EigenMode(k), fac)
            return EigenMode(k, _number(factor, f"{name}.factor"))
    raise UsageError(f"field {name!r}: unsupported entry {raw!r}")


def config_from_dict(raw: dict, base_dir: Path | None = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise UsageError("config must be a JSON object")
    base = Path(base_dir) if base_dir is not None else Path.cwd()
    known = {fd.name for fd in fields(RunConfig)} - {"base_dir"}
    unknown = set(raw) - known - {"comment"}
    if unknown:
        raise UsageError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise UsageError(f"field 'kind' must be one of {', '.join(KINDS)}, got {kind!r}")

    cfg = RunConfig(kind=kind, base_dir=base)
    if "s" in raw:
        s = _number(raw["s"], "s")
        if not 0.0 < s < 1.0:
            raise UsageError(f"field 's' must satisfy 0 < s < 1, got {raw['s']!r}")
        cfg.s = s
    if "domain" in raw:
        d = raw["domain"]
        if not (isinstance(d, list) and len(d) == 2):
            raise UsageError("field 'domain' must be a two-element list [a, b]")
        a, b = _number(d[0], "domain[0]"), _number(d[1], "domain[1]")
        if not a < b:
            raise UsageError("field 'domain' needs a < b")
        cfg.domain = (a, b)
    for name, kw in (("n", dict(integer=True, minimum=2)), ("N", dict(integer=True, minimum=4)),
                     ("M", dict(integer=True, minimum=2)), ("T", dict(positive=True)),
                     ("L", dict(positive=True)), ("compat_tol", dict(positive=True)),
                     ("modes", dict(integer=True, minimum=1)), ("pad", dict(integer=True, minimum=1)),
                     ("threads", dict(integer=True, minimum=1))):
        if raw.get(name) is not None:
            setattr(cfg, name, _number(raw[name], name, **kw))
    if raw.get("q") is not None:
        cfg.q = _number(raw["q"], "q")
    if "eigensolver" in raw:
        if raw["eigensolver"] not in ("lapack", "jacobi"):
            raise UsageError("field 'eigensolver' must be 'lapack' or 'jacobi'")
        cfg.eigensolver = raw["eigensolver"]
    if "write_field" in raw:
        if not isinstance(raw["write_field"], bool):
            raise UsageError("field 'write_field' must be true or false")
        cfg.write_field = raw["write_field"]
    if raw.get("out") is not None:
        if not isinstance(raw["out"], str):
            raise UsageError("field 'out' must be a path string")
        cfg.out = raw["out"]

    for name in SPACE_FIELDS:
        setattr(cfg, name, _entry(raw.get(name), name, ("x",), base))
    for name in PATH_FIELDS:
        setattr(cfg, name, _entry(raw.get(name), name, ("t",), base))
    for name in SOURCE_FIELDS:
        setattr(cfg, name, _entry(raw.get(name), name, ("x", "t"), base))

    missing = [k for k in REQUIRED[kind] if getattr(cfg, k) is None]
    if missing:
        raise UsageError(f"kind {kind!r} requires field(s): {', '.join(missing)}")
    if kind == "invert-double":
        if cfg.p_true is None and (cfg.w1 is None or cfg.w2 is None):
            raise UsageError("kind 'invert-double' needs 'p_true' or both 'w1' and 'w2'")
        for name in ("phi", "f"):
            if isinstance(getattr(cfg, name), (EigenMode, Separable)):
                raise UsageError(f"field {name!r}: eigenfunction data exist only on the interval")
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(raw, path.parent.resolve())
