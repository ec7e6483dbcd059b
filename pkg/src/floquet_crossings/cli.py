"""Command-line front end: ``floquet-crossings <command> ...``.

Exit codes: 0 when every check passes, 1 on a failed check, 2 on a
configuration error (bad flags, unknown model, grid too small, mismatched
domains).
"""
import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .chern import plaquette_rows
from .crossings import (default_threshold, detect, detect_identity, field_labels, gap_field,
                        surround)
from .errors import ConfigError, FloquetError, GridMismatch
from .indices import SCHEMA, classify, set_threads, verify
from .manifolds import build_grid, export_mesh_csv
from .models import MODELS, get_model
from .propagator import sample
from .winding import w3

MIN_GRID = 8
FORMATS = ("json", "csv", "table")


@dataclass
class RunConfig:
    model: str = None
    grid: tuple = None
    tolerances: dict = field(default_factory=dict)
    bands: list = None
    output: str = None
    format: str = "table"
    seed: int = 0
    threads: int = 0

    def validate(self):
        if self.model is not None and self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}")
        if self.grid is not None:
            if len(self.grid) != 3 or any(int(s) < MIN_GRID for s in self.grid):
                raise ConfigError(f"grid sizes must be three integers >= {MIN_GRID}, got {self.grid}")
            self.grid = tuple(int(s) for s in self.grid)
        for k, v in self.tolerances.items():
            if v is None:
                continue
            if not float(v) > 0:
                raise ConfigError(f"tolerance {k} must be positive")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if self.threads is not None and int(self.threads) < 0:
            raise ConfigError("threads must be >= 0")
        return self


def _load_config(path):
    if not path:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def make_config(args):
    """Merge the JSON config file (defaults) with explicit flags (overrides)."""
    base = _load_config(getattr(args, "config", None))
    cfg = RunConfig(
        model=base.get("model"),
        grid=tuple(base["grid"]) if base.get("grid") else None,
        tolerances=dict(base.get("tolerances", {})),
        bands=base.get("bands"),
        output=base.get("output"),
        format=base.get("format", "table"),
        seed=int(base.get("seed", 0)),
        threads=base.get("threads"),
    )
    for name in ("model", "grid", "bands", "output", "format", "seed", "threads"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, tuple(v) if name == "grid" else v)
    if getattr(args, "threshold", None) is not None:
        cfg.tolerances["detection"] = args.threshold
    if cfg.threads is None:
        env = os.environ.get("FLOQUET_THREADS")
        try:
            cfg.threads = int(env) if env else 0
        except ValueError:
            raise ConfigError(f"FLOQUET_THREADS must be an integer, got {env!r}") from None
    return cfg.validate()


def _grid_for(model, cfg):
    return build_grid(model.domain_kind, cfg.grid or model.default_grid)


def _emit(text, cfg):
    if cfg.output:
        with open(cfg.output, "w", newline="") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# commands

def cmd_list_models(cfg):
    metas = [m.metadata() for m in MODELS.values()]
    if cfg.format == "json":
        _emit(_dumps({"schema": SCHEMA, "models": metas}), cfg)
    elif cfg.format == "csv":
        rows = [(m["name"], m["domain"], m["N"], json.dumps(m["expected"], sort_keys=True),
                 m["description"]) for m in metas]
        _emit(_csv_text(["name", "domain", "N", "expected", "description"], rows), cfg)
    else:
        lines = [f"{'name':<18s} {'domain':<16s} N  expected"]
        for m in metas:
            exp = ", ".join(f"{k}={v}" for k, v in m["expected"].items())
            lines.append(f"{m['name']:<18s} {m['domain']:<16s} {m['N']}  {exp}")
            lines.append(f"{'':<18s} {m['description']}")
        _emit("\n".join(lines), cfg)
    return 0


def cmd_verify(cfg):
    model = get_model(cfg.model)
    grid = _grid_for(model, cfg)
    rep = verify(model, grid, bands=cfg.bands, threshold=cfg.tolerances.get("detection"))
    if cfg.format == "json":
        _emit(rep.to_json(), cfg)
    elif cfg.format == "csv":
        rows = [(c.name, c.passed, json.dumps(c.expected), json.dumps(c.computed), c.detail)
                for c in rep.checks]
        _emit(_csv_text(["check", "passed", "expected", "computed", "detail"], rows), cfg)
    else:
        _emit(rep.table(), cfg)
    return 0 if rep.passed else 1


def cmd_compare(cfg, other):
    a, b = get_model(cfg.model), get_model(other)
    if a.domain_kind != b.domain_kind or a.n != b.n:
        raise ConfigError(f"{a.name} ({a.domain_kind}, N={a.n}) and {b.name} "
                          f"({b.domain_kind}, N={b.n}) live on different domains")
    if not a.is_floquet:
        raise ConfigError("compare needs Floquet maps on a cylinder domain")
    grid = _grid_for(a, cfg)
    v = classify(a, b, grid, cfg.tolerances.get("detection"))
    d = {**v.to_dict(), "models": [a.name, b.name]}
    if cfg.format == "json":
        _emit(_dumps(d), cfg)
    elif cfg.format == "csv":
        gw = d["glue_w3"] or {}
        _emit(_csv_text(["model_a", "model_b", "verdict", "indices_a", "indices_b", "glue_w3"],
                        [(a.name, b.name, v.verdict, d["indices"][0], d["indices"][1],
                          gw.get("value", ""))]), cfg)
    else:
        lines = [f"{v.verdict}",
                 f"  I({a.name}) = {d['indices'][0]}   I({b.name}) = {d['indices'][1]}",
                 f"  C({a.name}) = {d['cherns'][0]}   C({b.name}) = {d['cherns'][1]}"]
        if v.glue_w3 is not None:
            lines.append(f"  W3(glue) = {v.glue_w3['value']:.4f} -> {v.glue_w3['integer']} "
                         f"(consistent: {v.glue_consistent})")
        _emit("\n".join(lines), cfg)
    ok = v.glue_consistent is not False
    return 0 if ok else 1


def _parse_grids(specs):
    out = []
    for s in specs:
        parts = [p for p in s.replace("x", ",").split(",") if p]
        if len(parts) == 1:
            parts = parts * 3
        try:
            g = tuple(int(p) for p in parts)
        except ValueError:
            raise ConfigError(f"bad grid {s!r}") from None
        if len(g) != 3 or min(g) < MIN_GRID:
            raise ConfigError(f"grid sizes must be three integers >= {MIN_GRID}, got {s!r}")
        out.append(g)
    return out


def cmd_sweep(cfg, grids):
    model = get_model(cfg.model)
    if model.is_floquet:
        raise ConfigError("sweep needs a map on a closed domain")
    rows = []
    for sizes in _parse_grids(grids):
        t0 = time.perf_counter()
        r = w3(sample(model, build_grid(model.domain_kind, sizes)))
        dt = time.perf_counter() - t0
        rows.append(("x".join(map(str, sizes)), f"{r.value:.12f}", r.integer,
                     f"{r.residual:.3e}", f"{dt:.3f}"))
    _emit(_csv_text(["grid", "w3", "integer", "residual", "runtime_s"], rows), cfg)
    return 0 if all(float(r[3]) < 0.1 for r in rows) else 1


def cmd_export_mesh(cfg, band, component, curvature):
    model = get_model(cfg.model)
    grid = _grid_for(model, cfg)
    fld = sample(model, grid)
    lam = field_labels(fld)
    thr = cfg.tolerances.get("detection") or default_threshold(fld, lam)
    comps = detect_identity(fld, 2 * np.pi * thr, lam) if band == 0 else detect(fld, band, thr, lam)
    live = [c for c in comps if c.geometry.kind != "Bulk"]
    if not 0 <= component < len(live):
        raise ConfigError(f"band {band} has {len(live)} components; index {component} out of range")
    c = surround(live[component], model, grid, [o for o in live if o is not live[component]])
    if curvature:
        if band == 0:
            raise ConfigError("curvature export needs a crossing band j >= 1")
        rows = plaquette_rows(c.mesh, model, band)
        text = _csv_text(["quad", "x0", "x1", "x2", "phase"],
                         [(int(r[0]), *map(float, r[1:])) for r in rows])
        _emit(text, cfg)
    elif cfg.output:
        export_mesh_csv(c.mesh, cfg.output)
    else:
        buf = io.StringIO()
        export_mesh_csv(c.mesh, buf)
        _emit(buf.getvalue(), cfg)
    return 0


def cmd_export_field(cfg, what, band):
    model = get_model(cfg.model)
    grid = _grid_for(model, cfg)
    fld = sample(model, grid)
    pts = grid.points()
    if what == "values":
        n = fld.n
        head = ["x0", "x1", "x2"] + [f"{p}{r}{c}" for r in range(n) for c in range(n) for p in "ri"]
        _emit(_csv_text(head, fld.to_rows().tolist()), cfg)
    elif what == "gaps":
        bands = [band] if band else list(range(1, fld.n + 1))
        lam = field_labels(fld)
        g = np.stack([gap_field(fld, j, lam).ravel() for j in bands], axis=1)
        _emit(_csv_text(["x0", "x1", "x2"] + [f"gap{j}" for j in bands],
                        np.concatenate([pts, g], axis=1).tolist()), cfg)
    else:
        lam = field_labels(fld).reshape(len(pts), -1)
        _emit(_csv_text(["x0", "x1", "x2"] + [f"lambda{j + 1}" for j in range(fld.n)],
                        np.concatenate([pts, lam], axis=1).tolist()), cfg)
    return 0


# ---------------------------------------------------------------------------
# parser

def _common(p, model=True):
    if model:
        p.add_argument("model", nargs=None if model is True else "?", help="model name")
    p.add_argument("--grid", nargs=3, type=int, metavar=("N1", "N2", "N3"))
    p.add_argument("--threshold", type=float, help="gap detection threshold")
    p.add_argument("--bands", nargs="+", type=int)
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--output", "-o")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="worker threads (0 = auto)")
    p.add_argument("--config", help="JSON file with default settings")


def build_parser():
    ap = argparse.ArgumentParser(prog="floquet-crossings",
                                 description="Winding numbers, crossing Chern numbers and "
                                             "Floquet indices of sampled unitary maps.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    _common(sub.add_parser("list-models", help="print the model zoo"), model=False)
    _common(sub.add_parser("verify", help="check the index formulas for one model"))
    p = sub.add_parser("compare", help="homotopy verdict for two Floquet maps")
    _common(p)
    p.add_argument("other", help="second model name")
    p = sub.add_parser("sweep", help="W3 convergence over several grids (CSV)")
    _common(p)
    p.add_argument("--grids", nargs="+", required=True, help="e.g. 12 16 24 or 16x16x24")
    p = sub.add_parser("export-mesh", help="surrounding mesh of one crossing component (CSV)")
    _common(p)
    p.add_argument("--band", type=int, default=1, help="crossing band j; 0 for the identity set")
    p.add_argument("--component", type=int, default=0)
    p.add_argument("--curvature", action="store_true", help="write plaquette phases instead")
    p = sub.add_parser("export-field", help="sampled field data on the grid (CSV)")
    _common(p)
    p.add_argument("--what", choices=("values", "labels", "gaps"), default="labels")
    p.add_argument("--band", type=int, default=0, help="single gap index for --what gaps")
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = make_config(args)
        if args.command != "list-models" and cfg.model is None:
            raise ConfigError("no model given")
        np.random.seed(cfg.seed)
        set_threads(cfg.threads)
        if args.command == "list-models":
            return cmd_list_models(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "compare":
            return cmd_compare(cfg, args.other)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.grids)
        if args.command == "export-mesh":
            return cmd_export_mesh(cfg, args.band, args.component, args.curvature)
        return cmd_export_field(cfg, args.what, args.band)
    except (ConfigError, KeyError, GridMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FloquetError as exc:
        print(f"check failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        sys.stdout = open(os.devnull, "w")
        return 0


if __name__ == "__main__":
    sys.exit(main())
