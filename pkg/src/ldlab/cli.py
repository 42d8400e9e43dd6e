"""Command-line interface.

Every run is driven by one JSON configuration (``--config``) whose fields can
be overridden with ``--set key=value`` (the value is parsed as JSON when
possible) or with the common flags ``--seed``, ``--threads``, ``--output`` and
``--strict``.  Each run writes ``<name>.csv`` and a ``<name>.json`` summary
echoing the fully resolved configuration, so the summary alone reproduces the
run (``ldlab <command> --config <name>.json``).

Exit codes: 0 success, 2 configuration error, 3 numerical flag in strict mode.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from ._accel import backend_name
from .errors import AdvisoryError, DomainError, NumericalFlagError

OUTPUT_ENV = "LDLAB_OUTPUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

_NUM = (int, float)
_COMMON = {
    "seed": (int, 0),
    "threads": (int, 1),
    "output": (str, None),
    "strict": (bool, False),
    "name": (str, None),
}
SCHEMAS: dict[str, dict[str, tuple]] = {
    "volume": {
        "M": (dict, {"type": "power", "p": 2}),
        "R": (_NUM, 1.0),
        "d": ((int, list), 64),
        "dichotomy": ((dict, type(None)), None),
    },
    "rate": {
        "catalog": (str, "uniform_power"),
        "params": (dict, {}),
        "grid": (list, [0.25, 0.5, 1.0]),
    },
    "sample": {
        "kind": (str, "lp_ball"),
        "n": (int, 2),
        "k": (int, 1),
        "p": (_NUM, 2.0),
        "size": (int, 1000),
        "mode": (str, "uniform"),
        "M": (dict, {"type": "power", "p": 2}),
        "R": (_NUM, 1.0),
        "method": (str, "rejection"),
        "beta": (int, 2),
    },
    "spectral": {
        "n": (int, 16),
        "beta": (int, 2),
        "p": (_NUM, 2.0),
        "selfadjoint": (bool, True),
        "size": (int, 400),
        "chains": (int, 4),
        "burn_in": (int, 1000),
        "thin": (int, 5),
        "mode": (str, "uniform"),
        "metric": (str, "kolmogorov"),
    },
    "project": {
        "assumption": (dict, {"type": "minus_log"}),
        "grid": (list, [0.0, 0.25, 0.5, 0.75]),
        "n": (int, 0),
        "samples": (int, 0),
    },
    "verify": {
        "experiment": (str, "gaussian_sum"),
        "n_grid": (list, [64, 128, 256, 512]),
        "a": (_NUM, 1.0),
        "p": (_NUM, 3.0),
        "q": (_NUM, 1.0),
        "z": (_NUM, 0.9),
        "gamma": (_NUM, 0.25),
        "n": (int, 10000),
        "samples": (int, 4000),
        "t_grid": ((list, type(None)), None),
    },
}


class ConfigError(Exception):
    pass


# ------------------------------------------------------------ configuration
def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def resolve_config(command: str, config: dict, overrides: dict) -> dict:
    """Merge defaults, config file and overrides; reject unknown keys and wrong types."""
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    if "config" in config and "results" in config:
        config = config["config"]
    schema = {**_COMMON, **SCHEMAS[command]}
    merged = {k: v[1] for k, v in schema.items()}
    for source in (config, overrides):
        for key, value in source.items():
            if key == "command":
                if value != command:
                    raise ConfigError(f"config is for command {value!r}, not {command!r}")
                continue
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} for command {command!r}")
            merged[key] = value
    for key, (types, default) in schema.items():
        value = merged[key]
        if value is None and default is None:
            continue
        if isinstance(value, bool) and types is not bool and bool not in np.atleast_1d(types).tolist():
            raise ConfigError(f"key {key!r} has the wrong type")
        if types is float or types == _NUM:
            if not isinstance(value, _NUM) or isinstance(value, bool):
                raise ConfigError(f"key {key!r} must be a number")
            merged[key] = float(value)
        elif not isinstance(value, types):
            raise ConfigError(f"key {key!r} has the wrong type ({type(value).__name__})")
    if merged["threads"] < 1:
        raise ConfigError("threads must be >= 1")
    merged["command"] = command
    if merged["name"] is None:
        merged["name"] = command
    if merged["output"] is None:
        merged["output"] = os.environ.get(OUTPUT_ENV, "ldlab_output")
    return merged


def _pmap(func: Callable, items: list, threads: int) -> list:
    """Ordered map; results do not depend on the number of threads."""
    if threads == 1 or len(items) < 2:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def _rngs(seed: int, count: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, np.integer):
        return int(v)
    return v


# ---------------------------------------------------------------- commands
def _cmd_volume(cfg):
    from .orlicz import (
        KIND_POWER,
        OrliczFunction,
        intersection_ratio_limit,
        power_ball_log_volume,
        volume_estimate,
    )

    M = OrliczFunction.from_spec(cfg["M"])
    R = cfg["R"]
    dims = cfg["d"] if isinstance(cfg["d"], list) else [cfg["d"]]
    header = ["d", "log_volume_limit", "log_volume_estimate", "exact_log_volume", "estimate_exact_ratio"]
    rows = []
    for d in dims:
        est = volume_estimate(M, R, int(d))
        if M.kind == KIND_POWER:
            exact = power_ball_log_volume(int(d), M.params[0], R)
            ratio = math.exp(est.log_volume - exact)
        else:
            exact, ratio = math.nan, math.nan
        rows.append([int(d), est.log_volume_limit, est.log_volume, exact, ratio])
    results = {"alpha_star": est.tilt.alpha_star, "log_volume_limit": est.log_volume_limit}
    if cfg["dichotomy"]:
        spec = cfg["dichotomy"]
        extra = set(spec) - {"M2", "R2"}
        if extra or "M2" not in spec or "R2" not in spec:
            raise ConfigError("dichotomy needs exactly the keys 'M2' and 'R2'")
        res = intersection_ratio_limit(M, R, OrliczFunction.from_spec(spec["M2"]), float(spec["R2"]))
        results["dichotomy"] = {"label": res.label, "theta": res.theta, "R2": res.R2}
    return header, rows, results, []


def _cmd_rate(cfg):
    from .ratecalc import catalog_rate

    rate = catalog_rate(cfg["catalog"], **cfg["params"])
    grid = [float(x) for x in cfg["grid"]]
    vals = _pmap(rate, grid, cfg["threads"])
    rows = [[x, v] for x, v in zip(grid, vals)]
    return ["x", "rate"], rows, {"speed": rate.speed, "minimizer": rate.minimizer}, []


def _cmd_sample(cfg):
    from .orlicz import OrliczFunction
    from .sampling import sample_haar_stiefel, sample_lp_ball, sample_uniform_orlicz_ball
    from .spectral import sample_schatten_eigs

    rng = np.random.default_rng(cfg["seed"])
    kind = cfg["kind"]
    flags = []
    if kind == "lp_ball":
        pts = sample_lp_ball(cfg["n"], cfg["p"], rng, cfg["size"], mode=cfg["mode"])
    elif kind == "orlicz_ball":
        M = OrliczFunction.from_spec(cfg["M"])
        res = sample_uniform_orlicz_ball(cfg["n"], M, cfg["R"], rng, cfg["size"], method=cfg["method"],
                                         full_output=True)
        pts = res.points
    elif kind == "stiefel":
        pts = np.stack([sample_haar_stiefel(cfg["n"], cfg["k"], rng).A.ravel() for _ in range(cfg["size"])])
    elif kind == "schatten_eigs":
        s = sample_schatten_eigs(cfg["n"], cfg["p"], cfg["beta"], rng, cfg["size"], mode=cfg["mode"])
        pts = s.points
        if not s.rhat < 1.05:
            flags.append(f"rhat={s.rhat:.4f}")
    else:
        raise ConfigError("kind must be lp_ball, orlicz_ball, stiefel or schatten_eigs")
    header = [f"x{i}" for i in range(pts.shape[1])]
    return header, pts.tolist(), {"count": int(pts.shape[0])}, flags


def _cmd_spectral(cfg):
    from .distributions import ullman_law
    from .spectral import sample_schatten_eigs, sample_schatten_singular_sq, spectral_distance

    rng = np.random.default_rng(cfg["seed"])
    if cfg["mode"] not in ("uniform", "cone"):
        raise ConfigError("mode must be 'uniform' or 'cone'")
    sampler = sample_schatten_eigs if cfg["selfadjoint"] else sample_schatten_singular_sq
    s = sampler(cfg["n"], cfg["p"], cfg["beta"], rng, cfg["size"], mode=cfg["mode"], chains=cfg["chains"],
                burn_in=cfg["burn_in"], thin=cfg["thin"])
    results = {"rhat": s.rhat, "acceptance_rate": s.acceptance_rate}
    flags = [] if s.rhat < 1.05 else [f"rhat={s.rhat:.4f}"]
    if cfg["selfadjoint"]:
        results["distance_to_ullman"] = spectral_distance(s, ullman_law(cfg["p"]).density, cfg["metric"])
    pooled = np.sort(s.scaled_points().ravel())
    return ["scaled_point"], [[v] for v in pooled], results, flags


def _assumption(spec: dict):
    from . import projections as pr
    from .orlicz import OrliczFunction

    kind = spec.get("type")
    extra = set(spec) - {"type", "p", "M"}
    if extra:
        raise ConfigError(f"unknown assumption keys {sorted(extra)}")
    if kind == "minus_log":
        return pr.minus_log_assumption(), None
    if kind == "gaussian_product":
        return pr.gaussian_product_assumption(), lambda n, rng, s: rng.standard_normal((s, n))
    if kind == "lp":
        from .sampling import sample_scaled_lp_ball

        p = float(spec["p"])
        return pr.lp_assumption(p), lambda n, rng, s: sample_scaled_lp_ball(n, p, rng, s)
    if kind == "orlicz":
        M = OrliczFunction.from_spec(spec["M"])
        from .sampling import sample_uniform_orlicz_ball

        return pr.orlicz_assumption(M), lambda n, rng, s: sample_uniform_orlicz_ball(n, M, 1.0, rng, s,
                                                                                      method="hit_and_run")
    raise ConfigError("assumption type must be minus_log, gaussian_product, lp or orlicz")


def _cmd_project(cfg):
    from .projections import rate_projection_constant, thin_shell_statistic

    assumption, sampler = _assumption(cfg["assumption"])
    grid = [float(x) for x in cfg["grid"]]
    vals = _pmap(lambda r: rate_projection_constant([r], assumption), grid, cfg["threads"])
    results = {"label": assumption.label, "speed": assumption.speed, "minimizer_m": assumption.minimizer_m}
    flags = []
    if cfg["samples"] > 0 and cfg["n"] > 0:
        if sampler is None:
            from .sampling import sample_scaled_lp_ball

            def sampler(n, rng, s):
                return sample_scaled_lp_ball(n, 2.0, rng, s)

        stat = thin_shell_statistic(sampler(cfg["n"], np.random.default_rng(cfg["seed"]), cfg["samples"]))
        results["thin_shell_mean"] = float(stat.mean())
        results["thin_shell_sd"] = float(stat.std())
    return ["norm", "rate_constant"], [[r, v] for r, v in zip(grid, vals)], results, flags


def _cmd_verify(cfg):
    from . import verify as vf
    from .distributions import abs_power_density
    from .measures import gaussian_density
    from .ratecalc import rate_lqnorm_high

    exp = cfg["experiment"]
    ns = [int(n) for n in cfg["n_grid"]]
    header = ["n", "s_n", "log_prob", "std_err", "rate_prediction"]
    flags: list[str] = []
    if exp == "mdp":
        r = vf.mdp_experiment(cfg["p"], cfg["q"], cfg["gamma"], cfg["n"], cfg["samples"],
                              np.random.default_rng(cfg["seed"]), cfg["t_grid"])
        rows = [[t, lt, se, rt] for t, lt, se, rt in zip(r.t_grid, r.log_tail, r.std_err, r.rate)]
        return (["t", "scaled_log_tail", "std_err", "rate_prediction"], rows,
                {"sigma2": r.sigma2, "sigma2_hat": r.sigma2_hat, "b_n": r.b_n}, list(r.flags))
    a = cfg["a"]
    if exp == "gaussian_sum":
        g = gaussian_density(1.0)
        lp = _pmap(lambda n: vf.fft_tail(g, n, a * n), ns, cfg["threads"])
        speed, pred, se = (lambda n: n), -0.5 * a * a, [0.0] * len(ns)
    elif exp == "stretched_cramer":
        d = abs_power_density(1.0, 2.0)
        lp = _pmap(lambda n: vf.fft_tail(d, n, a * n), ns, cfg["threads"])
        speed, pred, se = math.sqrt, -math.sqrt(max(a - 2.0, 0.0)), [0.0] * len(ns)
    elif exp == "uniform_power":
        z = cfg["z"]
        lp = [n * math.log(z) for n in ns]
        speed, pred, se = (lambda n: n), math.log(z), [0.0] * len(ns)
    elif exp == "lqnorm":
        rngs = _rngs(cfg["seed"], len(ns))
        ests = _pmap(lambda i: vf.lqnorm_rare_event(cfg["p"], cfg["q"], ns[i], cfg["z"], cfg["samples"], rngs[i]),
                     list(range(len(ns))), cfg["threads"])
        lp = [e.log_prob for e in ests]
        se = [e.std_err for e in ests]
        flags += [f"n={n}:{e.flag}" for n, e in zip(ns, ests) if e.flag != "ok"]
        speed, pred = (lambda n: n), -rate_lqnorm_high(cfg["z"], cfg["p"], cfg["q"])
    else:
        raise ConfigError("experiment must be gaussian_sum, stretched_cramer, uniform_power, lqnorm or mdp")
    fit = vf.fit_ldp_slope(ns, lp, speed, log_correction=(exp == "lqnorm"), std_errs=se)
    rows = [[n, s, v, e, pred] for n, s, v, e in zip(ns, fit.speed_values, lp, se)]
    return header, rows, {"fitted_slope": fit.fitted_slope, "r_squared": fit.r_squared,
                          "rate_prediction": pred}, flags


COMMANDS = {
    "volume": _cmd_volume,
    "rate": _cmd_rate,
    "sample": _cmd_sample,
    "spectral": _cmd_spectral,
    "project": _cmd_project,
    "verify": _cmd_verify,
}


def run(cfg: dict) -> int:
    """Execute a resolved configuration; returns the exit status."""
    out_dir = Path(cfg["output"])
    try:
        header, rows, results, flags = COMMANDS[cfg["command"]](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, AdvisoryError, KeyError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFlagError as exc:
        header, rows, results, flags = [], [], {}, [f"{exc.flag}: {exc}"]
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{cfg['name']}.csv"
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    summary = {
        "command": cfg["command"],
        "config": {k: v for k, v in cfg.items() if k != "command"},
        "results": _jsonable(results),
        "flags": flags,
        "csv": csv_path.name,
        "version": __version__,
        "backend": backend_name(),
    }
    summary["config"]["command"] = cfg["command"]
    with (out_dir / f"{cfg['name']}.json").open("w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if flags and cfg["strict"]:
        print("numerical flags raised: " + "; ".join(flags), file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ldlab", description="Numerical large deviations toolkit")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON configuration file (or a previous run summary)")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration field; VALUE is parsed as JSON when possible")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int)
    parser.add_argument("--output", help=f"output directory (default ${OUTPUT_ENV} or ./ldlab_output)")
    parser.add_argument("--strict", action="store_true", default=None,
                        help="exit with status 3 when a numerical flag is raised")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        config = {}
        if args.config:
            with open(args.config) as fh:
                config = json.load(fh)
            if not isinstance(config, dict):
                raise ConfigError("the configuration must be a JSON object")
        overrides = {}
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            key, value = item.split("=", 1)
            overrides[key.strip()] = _parse_value(value)
        for key in ("seed", "threads", "output", "strict"):
            value = getattr(args, key)
            if value is not None:
                overrides[key] = value
        cfg = resolve_config(args.command, config, overrides)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
