"""Command-line front end: sweep, photon-budget, oracle-check, bounds."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import nullcontext
from dataclasses import fields

import jsonschema
import numpy as np

from . import gaussian as gc
from .baseline import ChannelModel, PhotonGrid
from .errors import ConfigError, SQCCError
from .optimize import VARIANTS, SearchGrid, SweepFixed, SweepRecord, loss_sweep, photon_landscape
from .verify import SUITES, run_suite

log = logging.getLogger("sqcc")

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE, EXIT_ORACLE = 0, 2, 3, 4

_num = {"type": "number"}
_loss_grid = {
    "oneOf": [
        {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        {"type": "object", "additionalProperties": False, "required": ["start", "stop", "step"],
         "properties": {"start": {"type": "number", "minimum": 0}, "stop": _num,
                        "step": {"type": "number", "exclusiveMinimum": 0}}},
    ]
}
_fixed = {
    "excess_noise": {"type": "number", "minimum": 0},
    "phase_noise": {"type": "number", "minimum": 0},
    "reconciliation": {"type": "number", "minimum": 0, "maximum": 1},
    "theta": _num,
    "seed": {"type": "integer"},
}


def _grid_schema(cls):
    props = {}
    for f in fields(cls):
        props[f.name] = {"type": "integer", "minimum": 0} if f.type in ("int", int) else {"type": ["number", "null"]}
    return {"type": "object", "additionalProperties": False, "properties": props}


SCHEMAS = {
    "sweep": {
        "type": "object", "additionalProperties": False, "required": ["variants", "alphas", "loss_db"],
        "properties": {
            "command": {"const": "sweep"},
            "variants": {"type": "array", "items": {"enum": list(VARIANTS)}, "minItems": 1},
            "alphas": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
            "loss_db": _loss_grid,
            "grid": _grid_schema(SearchGrid),
            "warm_start": {"type": "boolean"},
            **_fixed,
        },
    },
    "photon-budget": {
        "type": "object", "additionalProperties": False, "required": ["loss_db", "k0", "ec0"],
        "properties": {
            "command": {"const": "photon-budget"},
            "loss_db": {"type": "number", "minimum": 0},
            "k0": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
            "ec0": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                    "minItems": 1},
            "grid": _grid_schema(PhotonGrid),
            **_fixed,
        },
    },
    "oracle-check": {
        "type": "object", "additionalProperties": False, "required": ["suite"],
        "properties": {
            "command": {"const": "oracle-check"},
            "suite": {"enum": list(SUITES)},
            "dims": {"type": "integer", "minimum": 2},
            "points": {"type": "integer", "minimum": 1},
            "seed": {"type": "integer"},
        },
    },
    "bounds": {
        "type": "object", "additionalProperties": False, "required": ["loss_db"],
        "properties": {
            "command": {"const": "bounds"},
            "loss_db": _loss_grid,
            "n_mode": {"type": "array", "items": {"type": "number", "minimum": 0}},
            "include_limit": {"type": "boolean"},
        },
    },
}


def load_config(path, command):
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config: {exc.message}") from exc
    return cfg


def loss_values(spec):
    if isinstance(spec, list):
        vals = [float(x) for x in spec]
    else:
        n = int(math.floor((spec["stop"] - spec["start"]) / spec["step"] + 1e-9)) + 1
        vals = [spec["start"] + k * spec["step"] for k in range(max(n, 0))]
    if not vals:
        raise ConfigError("empty loss grid")
    return vals


def _grid(cls, spec):
    try:
        return cls(**(spec or {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid grid: {exc}") from exc


def _fixed_from(cfg):
    return SweepFixed(cfg.get("excess_noise", 0.03), cfg.get("phase_noise", 1e-6),
                      cfg.get("reconciliation", 0.95), cfg.get("theta", 0.0))


# --- output -------------------------------------------------------------------------

def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _json_value(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def render(header, rows, kind):
    if kind == "json":
        recs = [{h: _json_value(v) for h, v in zip(header, r)} for r in rows]
        return json.dumps(recs, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def write_output(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _executor(threads):
    return ProcessPoolExecutor(max_workers=threads) if threads and threads > 1 else nullcontext(None)


# --- commands ------------------------------------------------------------------------

def cmd_sweep(cfg, out, kind, threads):
    losses = loss_values(cfg["loss_db"])
    grid = _grid(SearchGrid, cfg.get("grid"))
    fixed = _fixed_from(cfg)
    records = []
    with _executor(threads) as ex:
        for variant in cfg["variants"]:
            records += loss_sweep(variant, cfg["alphas"], losses, fixed, grid, cfg.get("warm_start", True), ex)
    write_output(render(SweepRecord.CSV_FIELDS, [r.row() for r in records], kind), out)
    bad = [r for r in records if r.failed or r.exceeds_plob]
    for r in bad:
        log.error("point failed: variant=%s alpha=%r loss_db=%r %s", r.variant, r.alpha, r.loss_db,
                  r.message or "key rate exceeds PLOB bound")
    return EXIT_COMPUTE if bad else EXIT_OK


PHOTON_FIELDS = ("k0", "ec0", "nbar_min", "alpha_opt", "V_opt", "feasible", "regime")


def cmd_photon_budget(cfg, out, kind, threads):
    grid = _grid(PhotonGrid, cfg.get("grid"))
    ch = ChannelModel.from_loss_db(cfg["loss_db"], cfg.get("excess_noise", 0.03))
    with _executor(threads) as ex:
        mat = photon_landscape(ch, cfg["k0"], cfg["ec0"], _fixed_from(cfg), grid, ex)
    rows = []
    for k0, row in zip(cfg["k0"], mat):
        for ec0, r in zip(cfg["ec0"], row):
            rows.append([float(k0), float(ec0), r.min_photons, r.arg_alpha, r.arg_variance, r.feasible,
                         r.regime or ""])
    write_output(render(PHOTON_FIELDS, rows, kind), out)
    return EXIT_OK


ORACLE_FIELDS = ("suite", "quantity", "max_rel_dev", "tolerance", "n_points", "passed")


def cmd_oracle_check(cfg, out, kind, threads):
    name = cfg["suite"]
    kw = {}
    if "dims" in cfg and name != "gaussian-core":
        kw["D0"] = cfg["dims"]
    if "points" in cfg:
        if name == "scissor":
            raise ConfigError("the scissor suite uses a fixed grid; 'points' is not accepted")
        kw["n"] = cfg["points"]
    if "seed" in cfg:
        if name == "scissor":
            raise ConfigError("the scissor suite is deterministic; 'seed' is not accepted")
        kw["seed"] = cfg["seed"]
    with _executor(threads) as ex:
        devs = run_suite(name, executor=ex, **kw)
    rows = [[d.suite, d.quantity, d.max_rel_dev, d.tolerance, d.n_points, d.passed] for d in devs]
    write_output(render(ORACLE_FIELDS, rows, kind), out)
    for d in devs:
        if not d.passed:
            log.error("oracle tolerance violated: %s %s dev=%.3e tol=%.1e", d.suite, d.quantity, d.max_rel_dev,
                      d.tolerance)
    return EXIT_OK if all(d.passed for d in devs) else EXIT_ORACLE


BOUND_FIELDS = ("loss_db", "T", "n_mode", "plob", "takeoka", "in_domain")


def cmd_bounds(cfg, out, kind, threads):
    losses = loss_values(cfg["loss_db"])
    modes = [float(x) for x in cfg.get("n_mode", [1.0])]
    if cfg.get("include_limit", True):
        modes.append(math.inf)
    rows = []
    for L in losses:
        T = 10 ** (-L / 10)
        for n in modes:
            try:
                rows.append([float(L), T, n, gc.plob_bound(T), gc.takeoka_bound(T, n), True])
            except SQCCError:
                log.warning("loss %r dB is outside the bound domain", L)
                rows.append([float(L), T, n, math.nan, math.nan, False])
    write_output(render(BOUND_FIELDS, rows, kind), out)
    return EXIT_OK


COMMANDS = {"sweep": cmd_sweep, "photon-budget": cmd_photon_budget, "oracle-check": cmd_oracle_check,
            "bounds": cmd_bounds}


def build_parser():
    p = argparse.ArgumentParser(prog="sqcc", description="SQCC key-rate modelling toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True)
        s.add_argument("--out", default=None)
        s.add_argument("--format", choices=("csv", "json"), default="csv")
        s.add_argument("--threads", type=int, default=1)
    return p


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.threads < 1:
        log.error("--threads must be >= 1")
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config, args.command)
        return COMMANDS[args.command](cfg, args.out, args.format, args.threads)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except SQCCError as exc:
        log.error("computation failed: %s", exc)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
