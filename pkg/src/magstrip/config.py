"""Run configuration: JSON schema, validation and canonical echo.

A configuration is a JSON object with the blocks ``curve``, ``strip``,
``potential``, ``field``, ``grid``, ``solver``, ``ground1d`` and
``params`` plus the ``experiment`` selector.  Every block is optional;
missing keys take the defaults below and the materialized configuration is
what :func:`canonical` emits.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from dataclasses import field as _field

from .fields import FieldSpec, Profile1D, smooth_well, square_well, trapezoid_well
from .geometry import CurveSpec, StripSpec

__all__ = [
    "ConfigError",
    "EXPERIMENTS",
    "CurveBlock",
    "StripBlock",
    "PotentialBlock",
    "FieldBlock",
    "GridBlock",
    "SolverBlock",
    "Ground1DBlock",
    "RunConfig",
    "parse_config",
    "canonical",
]

EXPERIMENTS = ("ground1d", "spectrum", "weyl", "certificate", "hardy", "rotate-check", "scan")


class ConfigError(ValueError):
    """Validation failure; ``problems`` lists ``path: message`` items."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))


@dataclass(frozen=True)
class CurveBlock:
    k: float = 0.0
    deformation: str = "none"
    d: float = 0.0
    rho: float = 1.0
    c: float = 1.0


@dataclass(frozen=True)
class StripBlock:
    a: float | None = None


@dataclass(frozen=True)
class PotentialBlock:
    kind: str = "trapezoid"
    V0: float = 4.0
    a: float = 1.0
    eps: float = 1.0
    plateau: float = 0.5


@dataclass(frozen=True)
class FieldBlock:
    kind: str = "zero"
    B0: float = 0.0
    c: float = 1.0


@dataclass(frozen=True)
class GridBlock:
    h: float = 0.05
    truncations: tuple = (3.0, 4.5, 6.0)
    transverse: float | None = None
    boundary: str = "dirichlet"
    mask_radius: float | None = None
    sampler: str = "cell"
    cell_subdivisions: int = 4


@dataclass(frozen=True)
class SolverBlock:
    m: int = 1
    tol: float = 1e-10
    max_iter: int = 300
    seed: int = 0


@dataclass(frozen=True)
class Ground1DBlock:
    L: float | None = None
    n: int = 4096
    tol: float = 1e-9
    max_n: int = 2**21


PARAM_DEFAULTS = {
    "ground1d": {},
    "spectrum": {},
    "weyl": {"p": 1.0, "k_values": [8.0, 16.0, 32.0, 64.0]},
    "certificate": {"reference": "vertical", "weaken": False, "hardy_h": None},
    "hardy": {"tau": None, "spacings": [0.1, 0.05, 0.025]},
    "rotate-check": {"spacings": [0.1, 0.05, 0.025], "half": 3.0, "m": 3},
    "scan": {"eps": [1.0, 0.5, 0.25], "with_field": True},
}

_PARAM_TYPES = {
    "p": float,
    "k_values": "floats",
    "reference": str,
    "weaken": bool,
    "hardy_h": "optfloat",
    "tau": "optfloat",
    "spacings": "floats",
    "half": float,
    "m": int,
    "eps": "floats",
    "with_field": bool,
}

_BLOCKS = {
    "curve": CurveBlock,
    "strip": StripBlock,
    "potential": PotentialBlock,
    "field": FieldBlock,
    "grid": GridBlock,
    "solver": SolverBlock,
    "ground1d": Ground1DBlock,
}


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "ground1d"
    curve: CurveBlock = _field(default_factory=CurveBlock)
    strip: StripBlock = _field(default_factory=StripBlock)
    potential: PotentialBlock = _field(default_factory=PotentialBlock)
    field: FieldBlock = _field(default_factory=FieldBlock)
    grid: GridBlock = _field(default_factory=GridBlock)
    solver: SolverBlock = _field(default_factory=SolverBlock)
    ground1d: Ground1DBlock = _field(default_factory=Ground1DBlock)
    params: dict = _field(default_factory=dict)

    # domain objects -------------------------------------------------------
    def profile(self) -> Profile1D:
        p = self.potential
        if p.kind == "square":
            return square_well(p.V0, p.a, p.eps)
        if p.kind == "smooth":
            return smooth_well(p.V0, p.a, p.eps)
        return trapezoid_well(p.V0, p.a, p.eps, p.plateau)

    def curve_spec(self) -> CurveSpec:
        c = self.curve
        return CurveSpec(c.k, c.deformation, c.d, c.rho, c.c)

    def strip_spec(self) -> StripSpec:
        return StripSpec(self.curve_spec(), self.strip.a)

    def field_spec(self) -> FieldSpec:
        f = self.field
        return FieldSpec(f.kind, f.B0, f.c)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"]["truncations"] = [list(t) if isinstance(t, tuple) else t for t in self.grid.truncations]
        return d


def _coerce(path, value, typ, problems):
    """Check ``value`` against a simple type tag and return the coerced value."""
    if typ in ("float", float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            problems.append(f"{path}: expected a number, got {value!r}")
            return None
        if not math.isfinite(value):
            problems.append(f"{path}: must be finite")
        return float(value)
    if typ in ("int", int):
        if isinstance(value, bool) or not isinstance(value, int):
            problems.append(f"{path}: expected an integer, got {value!r}")
            return None
        return value
    if typ in ("str", str):
        if not isinstance(value, str):
            problems.append(f"{path}: expected a string, got {value!r}")
        return value
    if typ in ("bool", bool):
        if not isinstance(value, bool):
            problems.append(f"{path}: expected true or false, got {value!r}")
        return value
    if typ == "optfloat":
        return None if value is None else _coerce(path, value, float, problems)
    if typ == "floats":
        if not isinstance(value, list) or not value:
            problems.append(f"{path}: expected a non-empty list of numbers")
            return None
        return [_coerce(f"{path}[{i}]", v, float, problems) for i, v in enumerate(value)]
    raise TypeError(typ)


def _field_type(f):
    t = f.type if isinstance(f.type, str) else f.type.__name__
    t = t.replace(" ", "")
    if t in ("float|None",):
        return "optfloat"
    return {"float": float, "int": int, "str": str, "bool": bool}.get(t, t)


def _parse_block(name, cls, raw, problems):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        problems.append(f"{name}: expected an object")
        return cls()
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        path = f"{name}.{key}"
        if key not in known:
            problems.append(f"{path}: unknown key (allowed: {', '.join(sorted(known))})")
            continue
        if name == "grid" and key == "truncations":
            kwargs[key] = _parse_truncations(path, value, problems)
            continue
        typ = _field_type(known[key])
        v = _coerce(path, value, typ, problems)
        if v is not None or typ == "optfloat":
            kwargs[key] = v
    return cls(**kwargs)


def _parse_truncations(path, value, problems):
    if not isinstance(value, list) or len(value) < 2:
        problems.append(f"{path}: expected a list of at least two box sizes")
        return GridBlock.truncations
    out = []
    for i, t in enumerate(value):
        if isinstance(t, list):
            if len(t) != 2:
                problems.append(f"{path}[{i}]: a box is a number or a pair [L, Y]")
                continue
            out.append(tuple(_coerce(f"{path}[{i}][{j}]", v, float, problems) for j, v in enumerate(t)))
        else:
            out.append(_coerce(f"{path}[{i}]", t, float, problems))
    return tuple(out)


def _check(cfg: RunConfig, problems):
    c, p, f, g, s, o = cfg.curve, cfg.potential, cfg.field, cfg.grid, cfg.solver, cfg.ground1d
    if c.deformation not in ("none", "bump", "raised_cosine"):
        problems.append(f"curve.deformation: unknown kind {c.deformation!r}")
    if not (c.rho > 0 and c.c > 0):
        problems.append("curve: rho and c must be positive")
    elif c.rho > c.c:
        problems.append(f"curve: invariant rho <= c violated (rho={c.rho}, c={c.c})")
    if p.kind not in ("square", "trapezoid", "smooth"):
        problems.append(f"potential.kind: unknown kind {p.kind!r} (square, trapezoid, smooth)")
    if not (p.a > 0 and p.eps > 0):
        problems.append("potential: a and eps must be positive")
    if p.V0 < 0:
        problems.append("potential.V0: must be non-negative")
    if not 0 <= p.plateau < 1:
        problems.append("potential.plateau: must lie in [0, 1)")
    if cfg.strip.a is not None and p.a > 0 and p.eps > 0:
        if abs(cfg.strip.a - p.eps * p.a) > 1e-12 * max(1.0, cfg.strip.a):
            problems.append(f"strip.a: must equal potential.eps * potential.a = {p.eps * p.a} "
                            f"(support half-width of the profile), got {cfg.strip.a}")
    if f.kind not in ("zero", "disk", "bump"):
        problems.append(f"field.kind: unknown kind {f.kind!r}")
    if not f.c > 0:
        problems.append("field.c: must be positive")
    if not g.h > 0:
        problems.append("grid.h: must be positive")
    if g.boundary not in ("dirichlet", "natural"):
        problems.append("grid.boundary: must be 'dirichlet' or 'natural'")
    if g.sampler not in ("point", "cell"):
        problems.append("grid.sampler: must be 'point' or 'cell'")
    if g.cell_subdivisions < 1:
        problems.append("grid.cell_subdivisions: must be at least 1")
    if g.h > 0 and all(t is not None for t in g.truncations):
        boxes = [t if isinstance(t, tuple) else (t, t) for t in g.truncations]
        for i, (L, Y) in enumerate(boxes):
            for label, v in (("L", L), ("Y", Y)):
                if v is None:
                    continue
                r = v / g.h
                if abs(r - round(r)) > 1e-9 * max(1.0, r):
                    problems.append(f"grid.truncations[{i}]: {label}={v} is not a multiple of grid.h={g.h}")
        half = p.eps * p.a
        reach = max(abs(c.d), 0.0) + half
        if boxes and min(b[1] for b in boxes) <= reach:
            problems.append(f"grid.truncations: every box must cover the strip across y (|y| > {reach})")
        if any(b1[0] < b0[0] or b1[1] < b0[1] for b0, b1 in zip(boxes, boxes[1:])):
            problems.append("grid.truncations: boxes must be increasing")
    if s.m < 1:
        problems.append("solver.m: must be at least 1")
    if not s.tol > 0:
        problems.append("solver.tol: must be positive")
    if s.max_iter < 1:
        problems.append("solver.max_iter: must be at least 1")
    if o.n < 2:
        problems.append("ground1d.n: must be at least 2")
    if not o.tol > 0:
        problems.append("ground1d.tol: must be positive")
    if o.L is not None and not o.L > p.eps * p.a:
        problems.append("ground1d.L: must exceed the profile half-width")


def parse_config(text: str | dict, experiment: str | None = None, seed: int | None = None) -> RunConfig:
    """Validate a JSON configuration and materialize every default.

    ``experiment`` and ``seed`` override the corresponding entries (the
    command line passes them); a conflicting ``experiment`` entry is an
    error.
    """
    problems = []
    if isinstance(text, str):
        try:
            raw = json.loads(text) if text.strip() else {}
        except json.JSONDecodeError as exc:
            raise ConfigError([f"<root>: not valid JSON ({exc})"]) from None
    else:
        raw = text
    if not isinstance(raw, dict):
        raise ConfigError(["<root>: expected a JSON object"])
    allowed = {"experiment", "params", *_BLOCKS}
    for key in raw:
        if key not in allowed:
            problems.append(f"{key}: unknown key (allowed: {', '.join(sorted(allowed))})")
    exp = raw.get("experiment", experiment or "ground1d")
    if experiment is not None and "experiment" in raw and raw["experiment"] != experiment:
        problems.append(f"experiment: config selects {raw['experiment']!r} but the command is {experiment!r}")
        exp = experiment
    if exp not in EXPERIMENTS:
        problems.append(f"experiment: unknown experiment {exp!r} (one of {', '.join(EXPERIMENTS)})")
    blocks = {name: _parse_block(name, cls, raw.get(name), problems) for name, cls in _BLOCKS.items()}
    params = dict(PARAM_DEFAULTS.get(exp, {}))
    raw_params = raw.get("params", {})
    if not isinstance(raw_params, dict):
        problems.append("params: expected an object")
        raw_params = {}
    for key, value in raw_params.items():
        path = f"params.{key}"
        if key not in params:
            problems.append(f"{path}: unknown key for experiment {exp!r} "
                            f"(allowed: {', '.join(sorted(params)) or 'none'})")
            continue
        params[key] = _coerce(path, value, _PARAM_TYPES[key], problems)
    if params.get("reference") not in (None, "vertical", "line_k"):
        problems.append("params.reference: must be 'vertical' or 'line_k'")
    if seed is not None:
        blocks["solver"] = replace(blocks["solver"], seed=int(seed))
    pot = blocks["potential"]
    if blocks["strip"].a is None and pot.a > 0 and pot.eps > 0:
        blocks["strip"] = StripBlock(pot.eps * pot.a)
    cfg = RunConfig(exp, params=params, **blocks)
    _check(cfg, problems)
    if not problems:
        try:
            cfg.curve_spec()
            cfg.profile()
            cfg.field_spec()
        except ValueError as exc:
            problems.append(f"curve/potential/field: {exc}")
    if problems:
        raise ConfigError(problems)
    return cfg


def canonical(cfg: RunConfig) -> str:
    """Deterministic JSON text of the materialized configuration."""
    return json.dumps(cfg.to_dict(), sort_keys=True, indent=2)
