"""Command-line entry point.

Every command resolves its configuration from built-in defaults, then an
optional JSON file (``--config``; a previous ``manifest.json`` also works),
then explicit flags. CSV tables and ``summary.json`` go to ``--out``;
``manifest.json`` follows last, by atomic rename.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from . import diffusion1d as d1
from . import population as pop
from . import stochastic as st
from . import subfunc as sf
from . import watterson as wm
from .verification import SUITES, run_suite

COMMANDS = ("curve", "coeffs", "green", "exit-time", "linearize", "simulate", "sde",
            "theorem1", "psub-scan", "verify")

DEFAULT_SEEDS = {c: 1000 + i for i, c in enumerate(COMMANDS)}

BASE_DEFAULTS: dict[str, Any] = {
    "model": "watterson",
    "mu": 1e-4,
    "b": 1e-3,
    "pop_size": None,
    "reps": None,
    "paths": None,
    "dt": None,
    "grid": 401,
    "x0": 0.0,
    "variance": "ito",
    "horizon": None,
    "delta": 0.3,
    "gamma": 0.5,
    "n_list": None,
    "start": None,
    "suite": "lemmas",
    "cap": None,
    "max_reps": None,
    "out": "out",
}

COMMAND_DEFAULTS: dict[str, dict[str, Any]] = {
    "simulate": {"model": "subfunc", "b": 0.01, "pop_size": 25, "reps": 200},
    "sde": {"pop_size": 1000, "paths": 200, "dt": 1e-4, "horizon": 10.0},
    "theorem1": {"paths": 200, "dt": 1e-3, "n_list": [1000, 10000, 100000], "start": [0.5, 0.5]},
    "psub-scan": {"model": "subfunc", "b": 0.01, "reps": 2000, "n_list": [25, 50, 100, 200],
                  "max_reps": 40000},
    "verify": {"paths": 2000, "dt": 1e-4, "grid": 200},
    "linearize": {"model": "subfunc", "grid": 200},
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# output helpers


def fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v) + 0.0  # drops the sign of zero
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".9g")
    return str(v)


def _jsonable(v: Any) -> Any:
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


class Output:
    def __init__(self, directory: Path):
        self.dir = directory
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def csv(self, name: str, header: list[str], rows) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
        self._write(name, buf.getvalue())

    def json(self, name: str, data: dict) -> None:
        self._write(name, json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")

    def _write(self, name: str, text: str) -> None:
        _atomic_write(self.dir / name, text)
        if name not in self.files:
            self.files.append(name)

    def digests(self) -> dict[str, str]:
        return {
            n: hashlib.sha256((self.dir / n).read_bytes()).hexdigest() for n in sorted(self.files)
        }


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# configuration


def _positive(cfg, key, integer=False):
    v = cfg[key]
    if v is None:
        raise ConfigError(f"{key}: required")
    if integer and (not isinstance(v, int) or isinstance(v, bool)):
        raise ConfigError(f"{key}: expected an integer, got {v!r}")
    if not v > 0:
        raise ConfigError(f"{key}: must be positive, got {v!r}")


def validate(command: str, cfg: dict) -> None:
    if cfg["model"] not in st.MODELS:
        raise ConfigError(f"model: expected one of {st.MODELS}, got {cfg['model']!r}")
    if not 0 < cfg["mu"] < 1:
        raise ConfigError(f"mu: must lie in (0, 1), got {cfg['mu']!r}")
    if not 0 < cfg["b"] < 1 / 3:
        raise ConfigError(f"b: must lie in (0, 1/3), got {cfg['b']!r}")
    if cfg["variance"] not in wm.VARIANCE_FORMS:
        raise ConfigError(f"variance: expected one of {wm.VARIANCE_FORMS}")
    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed: expected an integer")
    _positive(cfg, "grid", integer=True)
    if cfg["grid"] < 3:
        raise ConfigError("grid: must be >= 3")
    if command in ("simulate", "psub-scan"):
        _positive(cfg, "reps", integer=True)
    if command == "simulate":
        _positive(cfg, "pop_size", integer=True)
    if command in ("sde", "theorem1", "verify"):
        _positive(cfg, "paths", integer=True)
        _positive(cfg, "dt")
    if command == "sde":
        _positive(cfg, "pop_size", integer=True)
        _positive(cfg, "horizon")
        if not 0 < cfg["delta"] < 0.5:
            raise ConfigError("delta: must lie in (0, 1/2)")
    if command in ("theorem1", "psub-scan"):
        nl = cfg["n_list"]
        if not nl or any(not isinstance(n, int) or n < 2 for n in nl):
            raise ConfigError("n_list: expected integers >= 2")
        if command == "psub-scan" and list(nl) != sorted(nl):
            raise ConfigError("n_list: must be ascending")
    if command == "verify" and cfg["suite"] not in SUITES:
        raise ConfigError(f"suite: expected one of {SUITES}, got {cfg['suite']!r}")
    if command in ("green", "exit-time"):
        half = 1 - math.sqrt(cfg["mu"]) if cfg["model"] == "watterson" else 1 - 3 * cfg["b"]
        if not -half < cfg["x0"] < half:
            raise ConfigError(f"x0: must lie in (-{half:.9g}, {half:.9g})")


def resolve_config(command: str, file_cfg: dict, flags: dict) -> dict:
    cfg = dict(BASE_DEFAULTS)
    cfg.update(COMMAND_DEFAULTS.get(command, {}))
    cfg["seed"] = DEFAULT_SEEDS[command]
    unknown = set(file_cfg) - set(cfg) - {"command"}
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    if file_cfg.get("command", command) != command:
        raise ConfigError(f"command: config is for {file_cfg['command']!r}, not {command!r}")
    cfg.update({k: v for k, v in file_cfg.items() if k != "command"})
    cfg.update({k: v for k, v in flags.items() if v is not None})
    cfg["command"] = command
    return cfg


def load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config: expected a JSON object")
    # a manifest carries its resolved config under "config"
    if "config" in data and "outputs" in data:
        data = dict(data["config"])
        data.pop("out", None)
    return data


# ---------------------------------------------------------------------------
# commands


def _diffusion(cfg) -> d1.Diffusion1D:
    if cfg["model"] == "watterson":
        return d1.watterson_diffusion(cfg["mu"], cfg["variance"])
    return d1.subfunc_diffusion(cfg["b"], cfg["variance"])


def cmd_curve(cfg, out: Output) -> dict:
    n = cfg["grid"]
    if cfg["model"] == "watterson":
        mu = cfg["mu"]
        half = 1 - math.sqrt(mu)
        z = np.linspace(-half, half, n)
        xs, ys = wm.curve_point(z, mu)
        out.csv("curve.csv", ["z", "x_star", "y_star"], zip(z, xs, ys))
        return {"points": n, "max_product_error": float(np.max(np.abs(xs * ys - math.sqrt(mu))))}
    p = sf.SubfuncParams(cfg["b"])
    x3 = np.linspace(0.0, p.alpha, n)
    y3 = sf.curve_y3_of_x3(x3, p)
    x, y = sf.curve_xy(x3, y3, p)
    res = np.max(np.abs(np.stack(sf.equilibrium_residuals(x3, y3, x, y, p))), axis=0)
    out.csv("curve.csv", ["x3", "y3", "x", "y", "residual"], zip(x3, y3, x, y, res))
    return {"points": n, "max_residual": float(res.max())}


def cmd_coeffs(cfg, out: Output) -> dict:
    prof = d1.coeff_profile(_diffusion(cfg), cfg["grid"])
    out.csv("coeffs.csv", ["z", "drift", "variance", "minus_2drift_over_variance"],
            zip(prof.z, prof.drift, prof.variance, prof.ratio))
    return {"points": len(prof.z)}


def cmd_green(cfg, out: Output) -> dict:
    g = d1.green_profile(_diffusion(cfg), cfg["x0"], cfg["grid"])
    out.csv("green.csv", ["y", "green_times_speed"], zip(g.y, g.density))
    return {"exit_time": g.exit_time, "trapezoid": g.trapezoid(),
            "relative_gap": abs(g.trapezoid() / g.exit_time - 1)}


def cmd_exit_time(cfg, out: Output) -> dict:
    rows = []
    result = {}
    for form in wm.VARIANCE_FORMS:
        c = d1.mean_exit_time(_diffusion({**cfg, "variance": form}), cfg["x0"])
        rows.append((cfg["model"], cfg["mu"] if cfg["model"] == "watterson" else cfg["b"],
                     form, cfg["x0"], c, 2 * c))
        result[form] = {"c": c, "two_c": 2 * c}
    out.csv("exit_time.csv", ["model", "rate", "variance", "x0", "c", "two_c"], rows)
    chosen = result[cfg["variance"]]
    summary = {"c": chosen["c"], "two_c": chosen["two_c"], "variance": cfg["variance"],
               "by_variance": result,
               "note": "c is in the diffusion clock; E tau ~ 2 N c in the population clock"}
    if cfg["model"] == "watterson":
        # the curve ends at |z| = 1 - sqrt(mu), short of 1 - mu
        summary["upper_limit"] = 1 - math.sqrt(cfg["mu"])
        summary["upper_limit_1_minus_mu"] = "not computable: 1 - mu lies beyond the end of the curve"
    return summary


def cmd_linearize(cfg, out: Output) -> dict:
    p = sf.SubfuncParams(cfg["b"])
    rows = []
    all_pass = True
    for e in sf.curve_grid(p, cfg["grid"]):
        rep = sf.routh_hurwitz(e, p)
        ntb = -rep.trace * rep.b2
        rows.append((e.x3, e.y3, e.x, e.y, math.log10(-rep.trace) if rep.trace < 0 else float("nan"),
                     math.log10(-rep.det) if rep.det < 0 else float("nan"),
                     math.log10(ntb) if ntb > 0 else float("nan"),
                     rep.max_real, *rep.rh_pass, rep.stable))
        all_pass &= rep.stable
    out.csv("linearize.csv",
            ["x3", "y3", "x", "y", "log10_neg_trace", "log10_neg_det", "log10_neg_trace_b2",
             "max_real_eig", "rh_trace", "rh_det", "rh_third", "rh_pass"], rows)
    return {"points": len(rows), "all_rh_pass": all_pass}


def cmd_simulate(cfg, out: Output) -> dict:
    n, reps, seed = cfg["pop_size"], cfg["reps"], cfg["seed"]
    if cfg["model"] == "subfunc":
        p = sf.SubfuncParams(cfg["b"])
        cap = cfg["cap"] or 200.0 * n
        res = pop.simulate_replicates(n, p, reps, seed, cap)
        rows = [(k, pop.derived_seed(seed, n, k), r.kind, r.time, r.events) for k, r in enumerate(res)]
        out.csv("replicates.csv", ["replicate", "seed", "outcome", "generations", "events"], rows)
        kinds = [r.kind for r in res]
        counts = {o: kinds.count(o) for o in pop.OUTCOMES}
    else:
        params = wm.WattersonParams(cfg["mu"], n)
        cap = int(cfg["cap"] or 200 * n)
        rows, kinds = [], []
        for k in range(reps):
            s = pop.derived_seed(seed, n, k)
            r = pop.wf_run_to_absorption(pop.WfPopulation(n, 0, 0), params, cap, s)
            rows.append((k, s, r.kind, r.generations))
            kinds.append(r.kind)
        out.csv("replicates.csv", ["replicate", "seed", "outcome", "generations"], rows)
        counts = {o: kinds.count(o) for o in ("A-lost", "B-lost", "censored")}
    times = [r[3] for r in rows]
    return {"counts": counts, "mean_time": float(np.mean(times))}


def _default_start(cfg):
    if cfg["start"] is not None:
        return tuple(cfg["start"])
    if cfg["model"] == "watterson":
        return tuple(float(v) for v in wm.curve_point(0.0, cfg["mu"]))
    e = sf.symmetric_point(sf.SubfuncParams(cfg["b"]))
    return tuple(float(v) for v in e.as_state_array())


def cmd_sde(cfg, out: Output) -> dict:
    params = wm.WattersonParams(cfg["mu"]) if cfg["model"] == "watterson" else sf.SubfuncParams(cfg["b"])
    run = st.SdeRun(cfg["model"], params, cfg["pop_size"], cfg["dt"], cfg["horizon"], cfg["seed"],
                    cfg["paths"], _default_start(cfg), delta=cfg["delta"],
                    stat_every=1 if cfg["model"] == "watterson" else 10)
    res = st.integrate_sde(run)
    s = res.stat
    rows = []
    for k in range(run.paths):
        rows.append((k, s.sup_dist[k], s.contained[k], s.exited[k], s.exit_time[k],
                     "nonfinite" if s.failed[k] else ""))
    out.csv("paths.csv", ["path", "sup_dist", "contained", "exited", "exit_time", "error"], rows)
    return {"containment_fraction": s.containment_fraction, "threshold": s.threshold,
            "exited_fraction": float(np.mean(s.exited)), "clamp_events": res.clamp_events,
            "failed_paths": int(s.failed.sum())}


def cmd_theorem1(cfg, out: Output) -> dict:
    rows = st.theorem1_experiment(cfg["n_list"], tuple(cfg["start"]), cfg["gamma"], cfg["mu"],
                                  cfg["paths"], cfg["dt"], cfg["seed"])
    out.csv("theorem1.csv", ["N", "estimate", "N^-1/2", "stderr", "horizon"],
            [(r.n_pop, r.estimate, r.bound, r.stderr, r.horizon) for r in rows])
    est = [r.estimate for r in rows]
    return {"decreasing": all(a > b for a, b in zip(est, est[1:])),
            "last_below_bound": rows[-1].estimate <= rows[-1].bound}


def cmd_psub_scan(cfg, out: Output) -> dict:
    p = sf.SubfuncParams(cfg["b"])
    scan = pop.psub_decay_scan(cfg["n_list"], p, cfg["reps"], cfg["seed"],
                               max_reps=cfg["max_reps"])
    out.csv("psub.csv", ["N", "reps", "subfunctionalized", "censored", "estimate", "ci_low",
                         "ci_high", "upper_bound_only"],
            [(r.n_pop, r.reps, r.successes, r.censored, r.estimate, r.ci_low, r.ci_high,
              r.upper_bound_only) for r in scan.rows])
    return {"slope": scan.slope, "intercept": scan.intercept, "r2": scan.r2,
            "counts": {str(k): v for k, v in scan.counts.items()}}


def cmd_verify(cfg, out: Output) -> dict:
    name = cfg["suite"]
    kw: dict = {}
    if name in ("lemmas", "curve", "rh"):
        kw = {"b": cfg["b"], "grid": cfg["grid"]}
    elif name == "ito":
        kw = {"mu": cfg["mu"], "b": cfg["b"]}
    elif name == "oracles":
        kw = {"paths": cfg["paths"], "dt": cfg["dt"], "seed": cfg["seed"], "mu": cfg["mu"], "b": cfg["b"]}
    checks = run_suite(name, **kw)
    out.csv("verify.csv", ["check", "value", "tolerance", "status"],
            [(c.name, c.value, c.tol, c.status) for c in checks])
    width = max(len(c.name) for c in checks)
    for c in checks:
        print(f"{c.status:>4}  {c.name:<{width}}  {fmt(c.value)}")
    ok = all(c.passed for c in checks if not c.informational)
    return {"suite": name, "all_pass": ok}


HANDLERS: dict[str, Callable[[dict, Output], dict]] = {
    "curve": cmd_curve,
    "coeffs": cmd_coeffs,
    "green": cmd_green,
    "exit-time": cmd_exit_time,
    "linearize": cmd_linearize,
    "simulate": cmd_simulate,
    "sde": cmd_sde,
    "theorem1": cmd_theorem1,
    "psub-scan": cmd_psub_scan,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------------------
# argument parsing


def _int_list(text: str) -> list[int]:
    return [int(float(t)) for t in text.split(",") if t]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--model", choices=st.MODELS)
    g.add_argument("--mu", type=float)
    g.add_argument("--b", type=float)
    g.add_argument("--pop-size", dest="pop_size", type=int)
    g.add_argument("--reps", type=int)
    g.add_argument("--paths", type=int)
    g.add_argument("--dt", type=float)
    g.add_argument("--grid", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.add_argument("--config", help="JSON config or a previous manifest.json")
    g.add_argument("--x0", type=float)
    g.add_argument("--variance", choices=wm.VARIANCE_FORMS)
    g.add_argument("--horizon", type=float)
    g.add_argument("--delta", type=float)
    g.add_argument("--gamma", type=float)
    g.add_argument("--n-list", dest="n_list", type=_int_list, help="comma separated")
    g.add_argument("--start", type=_float_list, help="comma separated coordinates")
    g.add_argument("--suite", choices=SUITES)
    g.add_argument("--cap", type=float)
    g.add_argument("--max-reps", dest="max_reps", type=int)
    parser = argparse.ArgumentParser(prog="genedup", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for c in COMMANDS:
        sub.add_parser(c, parents=[common])
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    command = args.command
    try:
        cfg = resolve_config(command, load_config_file(args.config), flags)
        validate(command, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(f"{command}: seed {cfg['seed']}", file=sys.stderr)
    out = Output(Path(cfg["out"]))
    started = datetime.now(timezone.utc).isoformat()
    try:
        summary = HANDLERS[command](cfg, out)
    except Exception as exc:  # total failure: record and exit nonzero
        print(f"{command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    out.json("summary.json", summary)
    manifest = {
        "tool": "genedup",
        "version": __version__,
        "command": command,
        "seed": cfg["seed"],
        "config": cfg,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "outputs": out.digests(),
    }
    _atomic_write(out.dir / "manifest.json", json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    print(json.dumps(_jsonable(summary), sort_keys=True))
    if command == "verify" and not summary["all_pass"]:
        return 1
    return 0


def main() -> None:
    sys.exit(run())
