"""Configuration-driven experiment runner.

One experiment per invocation; subcommands dispatch to the library
modules, reuse cached coefficient tables, and write machine-readable
reports atomically.  Exit statuses: 0 success, 2 validation failure,
3 numerical-contract violation, 4 resource limit.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import analytic, coeffs, ingham, perron, riesz, testbeds
from .errors import (
    NumericalContractError,
    ResourceLimitError,
    TableFormatError,
    ValidationError,
)
from .util import REPORT_SCHEMA, geometric_grid, loglog_fit

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONTRACT = 3
EXIT_RESOURCE = 4

CACHE_ENV = "RIESZLAB_CACHE"


def report_schema_version() -> str:
    return REPORT_SCHEMA


@dataclass
class ExperimentConfig:
    command: str
    testbed: Optional[str] = None
    shifts: list[float] = field(default_factory=list)  # imaginary parts
    k: int = 2
    k1: Optional[int] = None
    x: float = 50.0
    xmin: float = 1e3
    xmax: float = 1e5
    grid_ratio: float = math.sqrt(2.0)
    cutoff: Optional[int] = None
    c: Optional[float] = None
    T: Optional[float] = None
    left_sigma: float = 0.1
    sigma: float = 0.0
    tmin: float = 100.0
    tmax: float = 1000.0
    tcount: int = 48
    epsilon: float = 0.05
    delta_factor: float = 2.0
    t0: float = 10.0
    tau_cap: int = testbeds.DEFAULT_TAU_CAP
    prime_cutoff: int = 100_000
    y: list[float] = field(default_factory=lambda: [0.5, 2.0, 10.0])
    ks: list[int] = field(default_factory=lambda: [1, 2, 3, 4])
    method: str = "closed"
    conversion: bool = False
    workers: int = 0
    cache_dir: Optional[str] = None
    output: Optional[str] = None
    format: str = "json"  # csv | json

    def validate(self) -> None:
        if not (0.0 < self.epsilon <= 0.5):
            raise ValidationError(f"epsilon must be in (0, 0.5], got {self.epsilon}")
        if self.grid_ratio <= 1.0:
            raise ValidationError("grid ratio must be > 1")
        if self.format not in ("csv", "json"):
            raise ValidationError(f"unknown format {self.format!r}")
        if self.workers < 0:
            raise ValidationError("workers must be >= 0")
        if self.k < 0:
            raise ValidationError("k must be >= 0")
        if not (0 < self.xmin <= self.xmax):
            raise ValidationError("need 0 < xmin <= xmax")
        if self.tmin < 10 or self.tmax <= self.tmin:
            raise ValidationError("need 10 <= tmin < tmax")


def _testbed_id(cfg: ExperimentConfig) -> testbeds.TestbedId:
    if cfg.testbed is None:
        raise ValidationError("this command requires --testbed")
    name = cfg.testbed.upper().replace("-", "_")
    if name in ("EISENSTEIN", "RS_EISENSTEIN"):
        if not cfg.shifts:
            raise ValidationError(f"{name} requires --shifts")
        return testbeds.TestbedId(name, tuple(complex(0.0, v) for v in cfg.shifts))
    return testbeds.TestbedId(name)


def _get_spec(cfg: ExperimentConfig) -> coeffs.LSeriesSpec:
    return testbeds.make_testbed(_testbed_id(cfg), tau_cap=cfg.tau_cap)


def _cache_dir(cfg: ExperimentConfig) -> Optional[str]:
    d = cfg.cache_dir or os.environ.get(CACHE_ENV)
    if d:
        os.makedirs(d, exist_ok=True)
    return d


def _sieve_cached(cfg: ExperimentConfig, spec: coeffs.LSeriesSpec,
                  X: int) -> coeffs.CoeffTable:
    d = _cache_dir(cfg)
    workers = cfg.workers or (os.cpu_count() or 1)
    if not d:
        return coeffs.multiplicative_sieve(spec, X, workers=workers)
    safe = "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in spec.label)
    path = os.path.join(d, f"{safe}-{X}.rzc")
    if os.path.exists(path):
        try:
            t = coeffs.load_table(path)
            if t.cutoff == X and t.source_label == spec.label:
                return t
        except TableFormatError:
            pass  # corrupted cache: fall through and regenerate
    t = coeffs.multiplicative_sieve(spec, X, workers=workers)
    coeffs.save_table(t, path)
    return t


def _atomic_write_text(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".report-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(cfg: ExperimentConfig, summary: dict, csv_rows: list[dict]) -> None:
    """Write the report (atomically) plus a timestamp sidecar."""
    summary = {"schema": REPORT_SCHEMA, "command": cfg.command, **summary}
    if cfg.output is None:
        print(json.dumps(summary, sort_keys=True, default=_js))
        return
    out = cfg.output
    if cfg.format == "csv":
        lines = [f"# schema: {REPORT_SCHEMA}"]
        if csv_rows:
            cols = list(csv_rows[0].keys())
            lines.append(",".join(cols))
            for row in csv_rows:
                lines.append(",".join(_csv_cell(row[c]) for c in cols))
        _atomic_write_text(out, "\n".join(lines) + "\n")
        base, _ = os.path.splitext(out)
        _atomic_write_text(base + ".json",
                           json.dumps(summary, sort_keys=True, indent=2,
                                      default=_js) + "\n")
    else:
        _atomic_write_text(out, json.dumps(summary, sort_keys=True, indent=2,
                                           default=_js) + "\n")
    _atomic_write_text(out + ".meta.json",
                       json.dumps({"written_at": time.time()}) + "\n")


def _js(o):
    if isinstance(o, complex):
        return {"re": o.real, "im": o.imag}
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON-serializable: {type(o)}")


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


# ---------------------------------------------------------------- commands

def _cmd_coeffs(cfg: ExperimentConfig) -> dict:
    spec = _get_spec(cfg)
    X = cfg.cutoff or int(cfg.xmax)
    t = _sieve_cached(cfg, spec, X)
    rows = [{"m": m + 1, "a": float(t.values[m])} for m in range(min(X, 10_000))]
    return {
        "summary": {"label": t.source_label, "cutoff": t.cutoff,
                    "nonneg": t.nonneg,
                    "min_coeff": float(t.values.min()),
                    "max_coeff": float(t.values.max())},
        "rows": rows,
    }


def _resolve_C(cfg: ExperimentConfig, spec) -> tuple[float, str]:
    return analytic.resolve_constant(spec, prime_cutoff=cfg.prime_cutoff,
                                     tau_cap=cfg.tau_cap)


def _cmd_riesz(cfg: ExperimentConfig) -> dict:
    spec = _get_spec(cfg)
    X = cfg.cutoff or int(cfg.xmax)
    t = _sieve_cached(cfg, spec, X)
    C, src = _resolve_C(cfg, spec)
    grid = geometric_grid(cfg.xmin, min(cfg.xmax, X), cfg.grid_ratio)
    rep = riesz.riesz_report(t, cfg.k, grid, C, C_source=src)
    rows = [{"x": float(x), "S_k": float(s), "main": float(mn), "error": float(e)}
            for x, s, mn, e in zip(rep.x_grid, rep.smoothed, rep.main_terms,
                                   rep.errors)]
    return {
        "summary": {"k": rep.k, "C": rep.C_used, "C_source": rep.C_source,
                    "fitted_exponent": rep.fitted_exponent,
                    "max_abs_error": float(np.max(np.abs(rep.errors)))},
        "rows": rows,
    }


def _cmd_perron(cfg: ExperimentConfig) -> dict:
    c = cfg.c if cfg.c is not None else 1.0 + cfg.epsilon
    T_grid = [100.0 * 2.0 ** j for j in range(6)]
    cells = perron.truncation_scan(cfg.y, cfg.ks, c, T_grid)
    rows = []
    for cell in cells:
        for T, err in zip(cell.T_grid, cell.errors):
            rows.append({"y": cell.y, "k": cell.k, "T": T, "abs_error": err})
    return {
        "summary": {"c": c, "cells": [
            {"y": cell.y, "k": cell.k, "slope": cell.slope,
             "saturated": cell.saturated,
             "within_contract": cell.within_contract}
            for cell in cells]},
        "rows": rows,
    }


def _cmd_contour(cfg: ExperimentConfig) -> dict:
    spec = _get_spec(cfg)
    c = cfg.c if cfg.c is not None else 1.0 + cfg.epsilon
    T = cfg.T if cfg.T is not None else cfg.x / 10.0
    rep = perron.contour_residue_check(spec, cfg.x, cfg.k, c, T, cfg.left_sigma)
    expected = rep.residue_main + rep.shifted_residue_sum
    resid = abs(rep.integral_value - expected)
    if resid > max(rep.tolerance, 1e-3 * abs(expected)):
        raise NumericalContractError(
            f"contour total {rep.integral_value} differs from residue sum "
            f"{expected} by {resid}")
    return {"summary": {
        "x": rep.x, "k": rep.k, "c": rep.c, "T": rep.T,
        "left_sigma": rep.left_sigma,
        "integral_value": rep.integral_value,
        "residue_main": rep.residue_main,
        "shifted_residue_sum": rep.shifted_residue_sum,
        "horizontal_contrib": list(rep.horizontal_contrib),
        "left_contrib": rep.left_contrib,
        "tolerance": rep.tolerance,
        "t0": cfg.t0,
    }, "rows": []}


def _cmd_growth(cfg: ExperimentConfig) -> dict:
    spec = _get_spec(cfg)
    t_grid = np.exp(np.linspace(math.log(cfg.tmin), math.log(cfg.tmax),
                                cfg.tcount))
    if cfg.conversion:
        slope = analytic.conversion_exponent_check(spec, cfg.sigma, t_grid)
        ref = spec.degree * (0.5 - cfg.sigma)
        return {"summary": {"sigma": cfg.sigma, "fitted_exponent": slope,
                            "reference_exponent": ref,
                            "kind": "conversion"}, "rows": []}
    fit = analytic.growth_scan(spec, cfg.sigma, t_grid, epsilon=cfg.epsilon)
    rows = []
    for t in fit.t_grid:
        v = abs(analytic.lfun_eval(spec, complex(cfg.sigma, t)).value)
        rows.append({"t": float(t), "abs_value": v,
                     "window_max": v, "log_t": math.log(t),
                     "log_max": math.log(max(v, 1e-300))})
    return {"summary": {"sigma": fit.sigma,
                        "slope": fit.measured_exponent,
                        "intercept": fit.intercept,
                        "residual": fit.residual,
                        "reference": fit.reference_exponent,
                        "epsilon": fit.epsilon_used,
                        "kind": "growth"}, "rows": rows}


def _cmd_residue(cfg: ExperimentConfig) -> dict:
    spec = _get_spec(cfg)
    method = analytic.ResidueMethod(cfg.method)
    val = analytic.residue_at_1(spec, method, prime_cutoff=cfg.prime_cutoff,
                                tau_cap=cfg.tau_cap)
    return {"summary": {"label": spec.label, "method": method.value,
                        "residue": val}, "rows": []}


def _cmd_reduce(cfg: ExperimentConfig) -> dict:
    spec = _get_spec(cfg)
    X = cfg.cutoff or int(cfg.xmax)
    t = _sieve_cached(cfg, spec, X)
    C, src = _resolve_C(cfg, spec)
    k1 = cfg.k1 if cfg.k1 is not None else riesz.k_threshold(
        2, riesz.ThresholdKind.NEW)
    grid = geometric_grid(cfg.xmin, min(cfg.xmax, X), cfg.grid_ratio)
    tr = ingham.chain_reduce(t, k1, C, grid, delta_factor=cfg.delta_factor)
    rows = []
    for lv in tr.levels:
        for i in range(lv.x.size):
            rows.append({"level": lv.level, "x": float(lv.x[i]),
                         "lower": float(lv.lower[i]),
                         "upper": float(lv.upper[i]),
                         "midpoint": float(lv.midpoint[i]),
                         "predicted_cascade": float(lv.predicted_cascade[i]),
                         "predicted_residue": float(lv.predicted_residue[i])})
    return {
        "summary": {
            "k1": tr.k1, "C": tr.C, "C_source": src, "ref_x": tr.ref_x,
            "partial_sum_coeff": tr.partial_sum_coeff,
            "candidate_residue": tr.candidate_residue,
            "candidate_cascade": tr.candidate_cascade,
            "levels": [{
                "level": lv.level, "c_est": lv.c_est,
                "delta": lv.delta_tag,
                "width_at_ref": lv.sandwich_width_at_ref_x,
                "width_exponent": lv.width_exponent,
                "identity_gap_at_ref": lv.identity_discrepancy_at_ref_x,
                "sandwich_vs_direct_at_ref": lv.sandwich_vs_direct_at_ref_x,
                "inverted": lv.inverted} for lv in tr.levels],
        },
        "rows": rows,
    }


def _cmd_probe_identity(cfg: ExperimentConfig) -> dict:
    spec = _get_spec(cfg)
    X = cfg.cutoff or int(cfg.xmax)
    t = _sieve_cached(cfg, spec, X)
    grid = geometric_grid(cfg.xmin, min(cfg.xmax, X), cfg.grid_ratio)
    rows = []
    for x in grid:
        lhs, rhs, gap = ingham.identity_probe(t, float(x), cfg.k)
        rows.append({"x": float(x), "lhs": lhs, "rhs": rhs, "gap": gap,
                     "gap_over_x": gap / float(x)})
    gaps = np.array([r["gap_over_x"] for r in rows])
    return {"summary": {"k": cfg.k, "label": t.source_label,
                        "gap_over_x_first": float(gaps[0]),
                        "gap_over_x_last": float(gaps[-1]),
                        "max_abs_gap": float(np.max(np.abs([r["gap"] for r in rows])))},
            "rows": rows}


_COMMANDS = {
    "coeffs": _cmd_coeffs,
    "riesz": _cmd_riesz,
    "perron": _cmd_perron,
    "contour": _cmd_contour,
    "growth": _cmd_growth,
    "residue": _cmd_residue,
    "reduce": _cmd_reduce,
    "probe-identity": _cmd_probe_identity,
}


def run(cfg: ExperimentConfig) -> int:
    """Validate, dispatch, and write reports; returns the exit status."""
    try:
        cfg.validate()
        if cfg.command not in _COMMANDS:
            raise ValidationError(f"unknown command {cfg.command!r}")
        result = _COMMANDS[cfg.command](cfg)
    except ValidationError as e:
        print(f"error: validation: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalContractError as e:
        print(f"error: numerical-contract: {e}", file=sys.stderr)
        return EXIT_CONTRACT
    except ResourceLimitError as e:
        print(f"error: resource-limit: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    _emit(cfg, result["summary"], result["rows"])
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rieszlab",
                                description="Riesz-mean experiment runner")
    p.add_argument("command", choices=sorted(_COMMANDS))
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--testbed")
    p.add_argument("--shifts", type=float, nargs="+",
                   help="imaginary parts of the shifts")
    p.add_argument("--k", type=int)
    p.add_argument("--k1", type=int)
    p.add_argument("--x", type=float)
    p.add_argument("--xmin", type=float)
    p.add_argument("--xmax", type=float)
    p.add_argument("--grid-ratio", dest="grid_ratio", type=float)
    p.add_argument("--cutoff", type=int)
    p.add_argument("--c", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--left-sigma", dest="left_sigma", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--tmin", type=float)
    p.add_argument("--tmax", type=float)
    p.add_argument("--tcount", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta-factor", dest="delta_factor", type=float)
    p.add_argument("--t0", type=float)
    p.add_argument("--tau-cap", dest="tau_cap", type=int)
    p.add_argument("--prime-cutoff", dest="prime_cutoff", type=int)
    p.add_argument("--y", type=float, nargs="+")
    p.add_argument("--ks", type=int, nargs="+")
    p.add_argument("--method", choices=["closed", "richardson", "euler_product"])
    p.add_argument("--conversion", action="store_true", default=None)
    p.add_argument("--workers", type=int)
    p.add_argument("--cache-dir", dest="cache_dir")
    p.add_argument("--out", dest="output")
    p.add_argument("--format", choices=["csv", "json"])
    return p


def config_from_args(argv) -> ExperimentConfig:
    args = _build_parser().parse_args(argv)
    cfg = ExperimentConfig(command=args.command)
    if args.config:
        try:
            with open(args.config) as fh:
                file_vals = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ValidationError(f"bad config file: {e}")
        for key, val in file_vals.items():
            if not hasattr(cfg, key):
                raise ValidationError(f"unknown config key {key!r}")
            setattr(cfg, key, val)
    for key in vars(cfg):
        if key == "command":
            continue
        v = getattr(args, key, None)
        if v is not None:
            setattr(cfg, key, v)
    return cfg


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv if argv is not None else sys.argv[1:])
    except ValidationError as e:
        print(f"error: validation: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
