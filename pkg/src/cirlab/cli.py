"""Command-line front end: ``cirlab {profile,distance,mixing-time,simulate,validate}``.

Tables go to ``--out`` (or stdout) as CSV or JSON.  Numbers are written with
17 significant digits so that they parse back to the same doubles.
Relative output paths are resolved against ``$CIRLAB_OUT_DIR`` when set.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, cir, cutoff, validate
from .errors import CirlabError, NoCutoffError
from .tv import tv_cir
from .wasserstein import wp_cir

OUT_DIR_ENV = "CIRLAB_OUT_DIR"
DEFAULT_SEED = 12345
FIXED_COLUMNS = ("a", "b", "eps", "x", "t_or_r", "p_or_eta", "value", "err_estimate", "method")
PROVENANCE_COLUMNS = ("version", "seed", "timestamp", "config")

DEFAULTS = {
    "a": 1.0,
    "b": 1.0,
    "eps": 0.01,
    "x": 2.0,
    "seed": DEFAULT_SEED,
    "out": None,
    "format": "csv",
    "workers": 1,
    "r_min": -4.0,
    "r_max": 4.0,
    "r_step": 0.25,
    "eps_grid": "0.1,0.03,0.01,0.003",
    "p": 1.0,
    "eta": 0.25,
    "t": None,
    "dist": "tv",
    "scheme": "exact",
    "dt": 1e-3,
    "n": 10_000,
    "cross_check": False,
    "only": None,
}


def fmt_number(v) -> str:
    """17 significant digits; ``nan`` and infinities spelled as Python's json does."""
    v = float(v)
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    return format(v, ".17g")


def _parse_number(s: str) -> float:
    return float({"NaN": "nan", "Infinity": "inf", "-Infinity": "-inf"}.get(s, s))


@dataclass
class ResultRecord:
    """One output row: echoed inputs, outputs, then provenance.

    ``extra`` holds additional named outputs (floats or strings) and is
    written between ``method`` and the provenance columns.
    """

    a: float
    b: float
    eps: float | str
    x: float
    t_or_r: float
    p_or_eta: float
    value: float
    err_estimate: float
    method: str
    extra: dict = field(default_factory=dict)
    version: str = __version__
    seed: int | None = None
    timestamp: str = ""
    config: str = ""

    def columns(self) -> list[str]:
        return [*FIXED_COLUMNS, *self.extra, *PROVENANCE_COLUMNS]

    def as_row(self) -> dict:
        row = {k: getattr(self, k) for k in FIXED_COLUMNS}
        row.update(self.extra)
        row.update({k: getattr(self, k) for k in PROVENANCE_COLUMNS})
        return row

    @classmethod
    def from_row(cls, row: dict) -> "ResultRecord":
        """Inverse of ``as_row`` for rows read back from CSV (strings) or JSON."""
        def num(v):
            if not isinstance(v, str):
                return float(v)
            try:
                return _parse_number(v)
            except ValueError:
                return v  # e.g. the eps grid of a profile row

        fixed = {k: num(row[k]) for k in FIXED_COLUMNS if k != "method"}
        extra = {}
        for k, v in row.items():
            if k in FIXED_COLUMNS or k in PROVENANCE_COLUMNS:
                continue
            if isinstance(v, str):
                try:
                    v = _parse_number(v)
                except ValueError:
                    pass
            extra[k] = v
        seed = row.get("seed")
        seed = None if seed in (None, "") else int(seed)
        return cls(**fixed, method=row["method"], extra=extra, version=row["version"], seed=seed,
                   timestamp=row["timestamp"], config=row["config"])


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_number(v)
    return str(v)


def _json_value(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_number(v)
    return json.dumps(str(v))


def rows_to_csv(rows: list[dict]) -> str:
    cols: list[str] = []
    for r in rows:
        cols.extend(k for k in r if k not in cols)
    # provenance always closes the row, even when records carry different extras
    cols = [c for c in cols if c not in PROVENANCE_COLUMNS] + [c for c in PROVENANCE_COLUMNS if c in cols]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


def rows_to_json(rows: list[dict]) -> str:
    objs = ["{" + ", ".join(f"{json.dumps(k)}: {_json_value(v)}" for k, v in r.items()) + "}" for r in rows]
    return "[\n  " + ",\n  ".join(objs) + "\n]\n" if objs else "[]\n"


def read_records(text: str, fmt: str) -> list[ResultRecord]:
    if fmt == "json":
        return [ResultRecord.from_row(r) for r in json.loads(text)]
    return [ResultRecord.from_row(r) for r in csv.DictReader(io.StringIO(text))]


@dataclass
class RunConfig:
    command: str
    params: cir.CIRParams | None
    x: float
    options: dict

    def effective(self) -> dict:
        return {"command": self.command, **self.options}

    def echo(self) -> str:
        return json.dumps(self.effective(), sort_keys=True)


def _eps_grid(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        vals = tuple(float(v) for v in text)
    else:
        vals = tuple(float(v) for v in str(text).split(",") if v.strip())
    if not vals:
        raise ValueError("--eps-grid is empty")
    return vals


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge built-in defaults, the optional JSON config file and explicit flags (in that order)."""
    opts = dict(DEFAULTS)
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            loaded = json.load(fh)
        for k, v in loaded.items():
            key = k.replace("-", "_")
            if key not in DEFAULTS:
                raise ValueError(f"unknown config key {k!r}")
            opts[key] = v
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            opts[k] = v
    if opts["format"] not in ("csv", "json"):
        raise ValueError("format must be csv or json")
    if int(opts["workers"]) < 1:
        raise ValueError("--workers must be >= 1")
    if opts["dist"] not in ("tv", "wp"):
        raise ValueError("--dist must be tv or wp")
    if opts["scheme"] not in ("exact", "euler"):
        raise ValueError("--scheme must be exact or euler")
    if not opts["r_step"] > 0 or opts["r_max"] < opts["r_min"]:
        raise ValueError("need r_step > 0 and r_max >= r_min")
    if not opts["p"] > 0:
        raise ValueError("--p must be positive")
    if not (float(opts["x"]) >= 0 and math.isfinite(float(opts["x"]))):
        raise ValueError("--x must be a finite nonnegative number")
    # labels, not values: shortest round-trip form keeps column names readable
    opts["eps_grid"] = ",".join(repr(e) for e in _eps_grid(opts["eps_grid"]))
    params = None
    if args.command != "validate":
        # parameter invariants are checked here, before any work is done
        params = cir.CIRParams(float(opts["a"]), float(opts["b"]), float(opts["eps"]))
        for e in _eps_grid(opts["eps_grid"]):
            cir.CIRParams(float(opts["a"]), float(opts["b"]), e)
    return RunConfig(args.command, params, float(opts["x"]), opts)


def _output_path(out) -> Path | None:
    if out is None:
        return None
    p = Path(out)
    base = os.environ.get(OUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def _emit(text: str, out) -> None:
    path = _output_path(out)
    if path is None:
        sys.stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _record(cfg: RunConfig, eps, t_or_r, p_or_eta, value, err, method, extra=None, stamp="") -> ResultRecord:
    o = cfg.options
    return ResultRecord(float(o["a"]), float(o["b"]), eps, cfg.x, t_or_r, p_or_eta, value, err, method,
                        dict(extra or {}), __version__, int(o["seed"]), stamp, cfg.echo())


def _map(fn, cells, workers: int):
    if workers <= 1 or len(cells) <= 1:
        return [fn(c) for c in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map yields in submission order, whatever the completion order
        return list(pool.map(fn, cells))


def _profile_cell(cell):
    a, b, eps, x, r, dist, p = cell
    params = cir.CIRParams(a, b, eps)
    if cutoff.CutoffSchedule.of(params).time_at(r) <= 0:
        return float("nan"), float("nan")
    res = cutoff.empirical_profile(params, x, r, dist, p=p)
    return res.value, res.err_estimate


def cmd_profile(cfg: RunConfig) -> list[ResultRecord]:
    o = cfg.options
    a, b, p, dist = float(o["a"]), float(o["b"]), float(o["p"]), o["dist"]
    grid = _eps_grid(o["eps_grid"])
    n_r = int(round((o["r_max"] - o["r_min"]) / o["r_step"])) + 1
    rs = [float(o["r_min"] + k * o["r_step"]) for k in range(n_r)]
    cells = [(a, b, e, cfg.x, r, dist, p) for r in rs for e in grid]
    values = _map(_profile_cell, cells, int(o["workers"]))
    stamp = _timestamp()
    ref = cir.CIRParams(a, b, grid[0])  # the profile does not depend on eps
    records = []
    for i, r in enumerate(rs):
        extra = {}
        if dist == "tv":
            theo, lower, method = cutoff.profile_tv(ref, cfg.x, r), None, "closed-form"
        elif p >= 1:
            theo, lower, method = cutoff.profile_wp(ref, cfg.x, r, p), None, "closed-form"
        else:
            lower, theo = cutoff.profile_wp(ref, cfg.x, r, p)
            method = "closed-form"
            extra["lower"] = lower
        for j, e in enumerate(grid):
            v, err = values[i * len(grid) + j]
            extra[f"emp_eps={e!r}"] = v
            extra[f"err_eps={e!r}"] = err
        records.append(_record(cfg, o["eps_grid"], r, p if dist == "wp" else float("nan"), theo, 0.0, method, extra, stamp))
    return records


def cmd_distance(cfg: RunConfig) -> list[ResultRecord]:
    o = cfg.options
    if o["t"] is None:
        raise ValueError("distance needs --t")
    t, eps = float(o["t"]), float(o["eps"])
    if o["dist"] == "tv":
        res = tv_cir(cfg.params, cfg.x, t, cross_check=bool(o["cross_check"]))
        extra = {}
        if o["cross_check"] and "route_gap" in res.extras:
            extra = {k: res.extras[k] for k in ("density_value", "fourier_value", "route_gap", "routes_agree")}
        p_col = float("nan")
    else:
        p = float(o["p"])
        res = wp_cir(cfg.params, cfg.x, t, p)
        extra = {"renormalized": res.extras["renormalized"], "renormalized_err": res.extras["renormalized_err"]}
        p_col = p
    return [_record(cfg, eps, t, p_col, res.value, res.err_estimate, res.method, extra, _timestamp())]


def cmd_mixing_time(cfg: RunConfig) -> list[ResultRecord]:
    o = cfg.options
    query = cutoff.MixingQuery(float(o["eta"]), o["dist"], float(o["p"]))
    sched = cutoff.CutoffSchedule.of(cfg.params)
    eps, eta, stamp = float(o["eps"]), float(o["eta"]), _timestamp()
    t_num = cutoff.mixing_time_numeric(cfg.params, cfg.x, query)
    num = _record(cfg, eps, float("nan"), eta, t_num, cutoff.BISECT_TOL * sched.omega_eps, "numeric-bracketed",
                  {"window_coordinate": sched.window_coordinate(t_num)}, stamp)
    try:
        est = cutoff.mixing_time_asymptotic(cfg.params, cfg.x, query)
    except NoCutoffError as exc:
        sys.stderr.write(f"no cutoff: {exc}\n")
        asy = _record(cfg, eps, float("nan"), eta, float("nan"), float("nan"), "no-cutoff",
                      {"window_coordinate": float("nan"), "gap_omega": float("nan"), "remainder": "none"}, stamp)
        num.extra["gap_omega"] = float("nan")
        return [num, asy]
    gap = (t_num - est.value) / sched.omega_eps
    num.extra["gap_omega"] = gap
    asy = _record(cfg, eps, float("nan"), eta, est.value, float("nan"), "asymptotic-profile",
                  {"window_coordinate": est.window_coordinate, "gap_omega": gap, "remainder": est.remainder}, stamp)
    return [num, asy]


def cmd_simulate(cfg: RunConfig, samples_path: Path) -> dict:
    o = cfg.options
    if o["t"] is None:
        raise ValueError("simulate needs --t")
    t, n, seed = float(o["t"]), int(o["n"]), int(o["seed"])
    rng = np.random.default_rng(seed)
    if o["scheme"] == "exact":
        xs = cir.sample_exact(cfg.params, cfg.x, t, n, rng)
    else:
        xs = cir.sample_euler(cfg.params, cfg.x, t, float(o["dt"]), n, rng)
    samples_path.parent.mkdir(parents=True, exist_ok=True)
    samples_path.write_text("".join(fmt_number(v) + "\n" for v in xs), encoding="utf-8")
    mean, var = cir.mean_at(cfg.params, cfg.x, t), cir.var_at(cfg.params, cfg.x, t)
    z_mean, z_var = validate.moment_zscores(xs, mean, var)
    summary = {
        "scheme": o["scheme"], "n": n, "t": t, "dt": float(o["dt"]) if o["scheme"] == "euler" else None,
        "empirical_mean": float(xs.mean()), "analytic_mean": mean, "mean_z": z_mean,
        "empirical_var": float(xs.var(ddof=1)) if n > 1 else float("nan"), "analytic_var": var, "var_z": z_var,
        "ks_statistic": validate.ks_statistic(xs, cir.transition_law(cfg.params, cfg.x, t)),
        "samples": str(samples_path), "version": __version__, "seed": seed, "timestamp": _timestamp(),
        "config": cfg.echo(),
    }
    return summary


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("model and output")
    g.add_argument("--a", type=float, help="drift speed (default 1)")
    g.add_argument("--b", type=float, help="long-term level (default 1)")
    g.add_argument("--eps", type=float, help="noise intensity (default 0.01)")
    g.add_argument("--x", type=float, help="initial state (default 2)")
    g.add_argument("--seed", type=int, help=f"RNG seed (default {DEFAULT_SEED})")
    g.add_argument("--out", help=f"output file (default stdout); relative paths go under ${OUT_DIR_ENV}")
    g.add_argument("--format", choices=("csv", "json"), help="table format (default csv)")
    g.add_argument("--workers", type=int, help="worker processes for sweeps (default 1)")
    g.add_argument("--config", help="JSON file of option defaults; explicit flags win")

    parser = argparse.ArgumentParser(prog="cirlab", description="Cutoff laboratory for the CIR diffusion.")
    parser.add_argument("--version", action="version", version=f"cirlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    prof = sub.add_parser("profile", parents=[common], help="sweep the cutoff window")
    prof.add_argument("--r-min", type=float, dest="r_min")
    prof.add_argument("--r-max", type=float, dest="r_max")
    prof.add_argument("--r-step", type=float, dest="r_step")
    prof.add_argument("--eps-grid", dest="eps_grid", help="comma list (default 0.1,0.03,0.01,0.003)")
    prof.add_argument("--dist", choices=("tv", "wp"))
    prof.add_argument("--p", type=float)

    dist = sub.add_parser("distance", parents=[common], help="distance to equilibrium at one time")
    dist.add_argument("--t", type=float, required=False)
    dist.add_argument("--dist", choices=("tv", "wp"))
    dist.add_argument("--p", type=float)
    dist.add_argument("--cross-check", dest="cross_check", action="store_const", const=True,
                      help="run both TV routes and report their gap")

    mix = sub.add_parser("mixing-time", parents=[common], help="numeric and asymptotic mixing times")
    mix.add_argument("--eta", type=float)
    mix.add_argument("--dist", choices=("tv", "wp"))
    mix.add_argument("--p", type=float)

    sim = sub.add_parser("simulate", parents=[common], help="draw X_t and summarise against the exact law")
    sim.add_argument("--t", type=float)
    sim.add_argument("--n", type=int)
    sim.add_argument("--scheme", choices=("exact", "euler"))
    sim.add_argument("--dt", type=float)

    val = sub.add_parser("validate", parents=[common], help="run the named numerical checks")
    val.add_argument("--only", help="comma list of modules or check names")
    return parser


def _validate(cfg: RunConfig) -> int:
    only = cfg.options["only"]
    keys = [k.strip() for k in only.split(",")] if only else None
    results = []
    for module, name, fn in validate.registered(keys):
        res = validate.run_one(module, name, fn)
        sys.stderr.write(res.line() + "\n")
        results.append(res)
    rows = [r.as_dict() for r in results]
    if cfg.options["out"] is not None:
        text = rows_to_json(rows) if cfg.options["format"] == "json" else rows_to_csv(rows)
        _emit(text, cfg.options["out"])
    failed = sum(not r.passed for r in results)
    sys.stderr.write(f"{len(results) - failed} passed, {failed} failed\n")
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if cfg.command == "validate":
            return _validate(cfg)
        if cfg.command == "simulate":
            path = _output_path(cfg.options["out"] or "samples.txt")
            summary = cmd_simulate(cfg, path)
            summary_path = path.with_name(path.name + ".summary.json")
            summary_path.write_text(rows_to_json([summary]), encoding="utf-8")
            sys.stderr.write(f"wrote {path} and {summary_path}\n")
            return 0
        handler = {"profile": cmd_profile, "distance": cmd_distance, "mixing-time": cmd_mixing_time}[cfg.command]
        records = handler(cfg)
        rows = [r.as_row() for r in records]
        _emit(rows_to_json(rows) if cfg.options["format"] == "json" else rows_to_csv(rows), cfg.options["out"])
        return 0
    except (CirlabError, ValueError, KeyError, OSError) as exc:
        sys.stderr.write(f"cirlab {args.command}: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
