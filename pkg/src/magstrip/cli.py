"""Command line front end: ``magstrip <experiment> --config run.json --out DIR``.

Every run writes ``result.json`` (the result record), ``config.json`` (the
materialized configuration) and one CSV table per scan dimension into the
output directory.  ``--figures`` adds PNG summaries.

Exit status: 0 success, 2 invalid configuration, 3 numerical
non-convergence, 4 inconclusive verdict.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .assembly2d import Grid2D, GaugeField, assemble_H, strip_potential, write_coo
from .config import EXPERIMENTS, ConfigError, RunConfig, canonical, parse_config
from .experiments import (
    ball_radius,
    certificate,
    epsilon_scan,
    hardy_estimate,
    log_slope,
    rotation_equivalence,
    threshold_scan,
    weaken_until_certified,
    weyl_residual,
)
from .spectra1d import ConvergenceError, threshold

__all__ = ["EXIT_OK", "EXIT_CONFIG", "EXIT_CONVERGENCE", "EXIT_INCONCLUSIVE", "RunResult", "run", "main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_INCONCLUSIVE = 4

CSV_COLUMNS = {
    "ground1d": ["L", "n", "e", "extrapolated"],
    "spectrum": ["L", "h", "lambda_min", "e_1d", "gap", "verdict"],
    "weyl": ["k", "p", "eigenvalue", "residual", "residual_no_field"],
    "certificate": ["r", "flux"],
    "hardy": ["h", "tau", "M", "raw", "nodes", "residual"],
    "rotate": ["h", "index", "lambda_H", "lambda_H0", "discrepancy", "ratio"],
    "scan": ["eps", "e", "verdict_no_field", "lambda_no_field", "verdict_field", "lambda_field", "error"],
}

log = logging.getLogger("magstrip")


@dataclass
class RunResult:
    experiment: str
    status: str
    record: dict
    tables: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return {"ok": EXIT_OK, "nonconvergence": EXIT_CONVERGENCE, "inconclusive": EXIT_INCONCLUSIVE}[self.status]


def _finite(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _ground1d(cfg: RunConfig, threads: int):
    o = cfg.ground1d
    th = threshold(cfg.profile(), o.L, o.n, o.tol, o.max_n)
    rows = [dict(L=t["L"], n=t["n"], e=t["e"], extrapolated=t["extrapolated"]) for t in th.trace]
    last = th.trace[-1]
    record = dict(e=th.e, converged=th.converged, L=last["L"], n=last["n"], decay_length=_finite(th.decay_length),
                  min_f=float(th.ground.f.min()), trace=rows)
    return ("ok" if th.converged else "nonconvergence"), record, {"ground1d": rows}


def _spectrum(cfg: RunConfig, threads: int):
    g, s = cfg.grid, cfg.solver
    v = threshold_scan(cfg.profile(), cfg.strip_spec(), cfg.field_spec(), list(g.truncations), g.h, g.sampler,
                       g.cell_subdivisions, s.tol, s.max_iter, s.seed)
    status = "ok"
    if not all(r.converged for r in v.rows) or not v.e_converged:
        status = "nonconvergence"
    elif v.verdict == "inconclusive":
        status = "inconclusive"
    return status, v.to_record(), {"spectrum": v.csv_rows()}


def _weyl(cfg: RunConfig, threads: int):
    g, p = cfg.grid, cfg.params
    rows = []
    for k in p["k_values"]:
        r = weyl_residual(cfg.profile(), cfg.strip_spec(), cfg.field_spec(), p["p"], k, g.h, g.transverse,
                          sampler=g.sampler, cell_subdivisions=g.cell_subdivisions)
        rows.append(r.to_record())
    ks = [r["k"] for r in rows]
    res = [r["residual"] for r in rows]
    slope = log_slope(ks, res) if len(rows) > 1 else None
    diff = max(abs(r["residual"] - r["residual_no_field"]) for r in rows)
    record = dict(rows=rows, slope=slope, max_field_difference=diff)
    return "ok", record, {"weyl": [{k: r[k] for k in CSV_COLUMNS["weyl"]} for r in rows]}


def _certificate(cfg: RunConfig, threads: int):
    p = cfg.params
    prof, strip, fld = cfg.profile(), cfg.strip_spec(), cfg.field_spec()
    steps = 0
    if p["weaken"]:
        prof, cert, steps = weaken_until_certified(prof, strip, fld, p["reference"], hardy_h=p["hardy_h"])
    else:
        cert = certificate(prof, strip, fld, p["reference"], hardy_h=p["hardy_h"])
    record = cert.to_record()
    record["weakening_steps"] = steps
    record["V0_used"] = prof.V0
    rows = [dict(r=r, flux=f) for r, f in zip(cert.flux_radii, cert.flux_values)]
    status = "nonconvergence" if cert.errors else "ok"
    return status, record, {"certificate": rows}


def _hardy(cfg: RunConfig, threads: int):
    p = cfg.params
    tau = p["tau"] if p["tau"] is not None else ball_radius(cfg.strip_spec())
    rows = []
    for h in p["spacings"]:
        est = hardy_estimate(cfg.field_spec(), tau, h, cfg.solver.tol, cfg.solver.seed, cfg.solver.max_iter)
        rows.append(dict(h=h, tau=tau, M=est.M, raw=est.raw, nodes=est.nodes, residual=est.residual))
    record = dict(tau=tau, M=rows[-1]["M"], rows=rows)
    return "ok", record, {"hardy": rows}


def _rotate(cfg: RunConfig, threads: int):
    p = cfg.params
    chk = rotation_equivalence(cfg.profile(), cfg.strip_spec(), cfg.field_spec(), p["spacings"], p["half"], p["m"],
                               seed=cfg.solver.seed)
    rows = []
    for i, h in enumerate(chk.spacings):
        for j in range(len(chk.eigen_H[i])):
            ratio = chk.ratios[i - 1][j] if i > 0 else None
            rows.append(dict(h=h, index=j, lambda_H=chk.eigen_H[i][j], lambda_H0=chk.eigen_H0[i][j],
                             discrepancy=chk.discrepancies[i][j], ratio=_finite(ratio)))
    return "ok", chk.to_record(), {"rotate": rows}


def _scan(cfg: RunConfig, threads: int):
    g, s, p = cfg.grid, cfg.solver, cfg.params
    rows = epsilon_scan(cfg.profile(), cfg.strip_spec(), cfg.field_spec(), p["eps"], list(g.truncations), g.h,
                        with_field=p["with_field"], workers=threads, sampler=g.sampler,
                        cell_subdivisions=g.cell_subdivisions, tol=s.tol, max_iter=s.max_iter, seed=s.seed)
    table = [{k: _finite(getattr(r, k)) for k in CSV_COLUMNS["scan"]} for r in rows]
    verdicts = [r.verdict_no_field for r in rows] + [r.verdict_field for r in rows if r.verdict_field]
    status = "inconclusive" if "inconclusive" in verdicts else "ok"
    bound = [r.eps for r in rows if r.verdict_no_field == "bound-state"]
    cleared = [r.eps for r in rows if r.verdict_no_field == "bound-state" and r.verdict_field == "none-detected"]
    record = dict(rows=table, bound_state_eps=bound, cleared_by_field_eps=cleared)
    return status, record, {"scan": table}


_DISPATCH = {
    "ground1d": _ground1d,
    "spectrum": _spectrum,
    "weyl": _weyl,
    "certificate": _certificate,
    "hardy": _hardy,
    "rotate-check": _rotate,
    "scan": _scan,
}


def run(cfg: RunConfig, threads: int = 1) -> RunResult:
    """Execute the configured experiment and collect its outputs."""
    try:
        status, record, tables = _DISPATCH[cfg.experiment](cfg, max(1, threads))
    except ConvergenceError as exc:
        return RunResult(cfg.experiment, "nonconvergence",
                         dict(error="nonconvergence", message=str(exc), trace=[list(t) for t in exc.trace]))
    return RunResult(cfg.experiment, status, record, tables)


def _write_csv(path: Path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else (repr(r[k]) if isinstance(r[k], float) else r[k]))
                        for k in columns})


def write_outputs(result: RunResult, cfg: RunConfig, out: Path, figures: bool = False) -> list:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    doc = dict(experiment=result.experiment, status=result.status, exit_code=result.exit_code, result=result.record)
    (out / "result.json").write_text(json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n")
    (out / "config.json").write_text(canonical(cfg) + "\n")
    written += [out / "result.json", out / "config.json"]
    for name, rows in result.tables.items():
        p = out / f"{name}.csv"
        _write_csv(p, CSV_COLUMNS[name], rows)
        written.append(p)
    if figures and result.tables:
        from .plotting import render
        try:
            written.append(Path(render(result.experiment, result.record, result.tables, out / f"{name}.png")))
        except Exception as exc:  # noqa: BLE001 - a failed figure never fails the run
            log.warning("figure not written: %s", exc)
    return written


def _dump_matrix(cfg: RunConfig, out: Path) -> Path:
    g = cfg.grid
    L, Y = g.truncations[-1] if isinstance(g.truncations[-1], tuple) else (g.truncations[-1],) * 2
    grid = Grid2D(-L, L, -Y, Y, g.h)
    M = assemble_H(grid, GaugeField.landau(cfg.field_spec()), strip_potential(cfg.profile(), cfg.strip_spec()),
                   g.sampler, g.cell_subdivisions)
    path = out / "matrix.coo"
    write_coo(M, path)
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="magstrip", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        sp_ = sub.add_parser(name)
        sp_.add_argument("--config", type=Path, help="JSON configuration file (defaults when omitted)")
        sp_.add_argument("--out", type=Path, default=None, help="output directory")
        sp_.add_argument("--seed", type=int, default=None, help="solver seed (overrides solver.seed)")
        sp_.add_argument("--threads", type=int, default=1, help="workers for independent scan points")
        sp_.add_argument("--figures", action="store_true", help="also write PNG figures")
        sp_.add_argument("-v", "--verbose", action="count", default=0)
        if name == "spectrum":
            sp_.add_argument("--dump-matrix", action="store_true",
                             help="write the largest truncation's matrix as matrix.coo")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = args.config.read_text() if args.config else "{}"
    except OSError as exc:
        print(json.dumps(dict(error="config", problems=[f"<file>: {exc}"])), file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(text, experiment=args.command, seed=args.seed)
    except ConfigError as exc:
        record = dict(error="config", problems=exc.problems)
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / "result.json").write_text(json.dumps(dict(experiment=args.command, status="config-error",
                                                                  exit_code=EXIT_CONFIG, result=record),
                                                             sort_keys=True, indent=2) + "\n")
        print(json.dumps(record), file=sys.stderr)
        return EXIT_CONFIG
    result = run(cfg, args.threads)
    if args.out:
        write_outputs(result, cfg, args.out, args.figures)
        if getattr(args, "dump_matrix", False):
            _dump_matrix(cfg, args.out)
    summary = dict(experiment=result.experiment, status=result.status)
    for key in ("e", "verdict", "slope", "M", "C", "converged"):
        if key in result.record:
            summary[key] = result.record[key]
    print(json.dumps(summary, sort_keys=True))
    return result.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
