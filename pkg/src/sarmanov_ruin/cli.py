"""Command-line entry point ``sarmanov-ruin``.

Every subcommand reads a JSON config (``--config``), writes a CSV table and a
JSON sidecar into ``--out`` and prints the sidecar's result block.  Exit
codes: 0 ok, 1 usage or parse error, 2 validation or parameter error,
3 infeasible computation.
"""
from __future__ import annotations

import argparse
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import montecarlo as mc
from .counterexample import DEFAULTS, build_counterexample, demonstrate
from .dist import law_from_dict
from .errors import (DivergentMomentError, DomainError, HypothesisError, ModelValidationError,
                     ParameterError, SingularRatioError, TruncationError)
from .io import ConfigError, dumps, load_config, parse_grid, write_csv, write_json
from .mellin import law_transform, model_transform, scan_nonvanishing
from .ruin_sim import (asymptotic_constant_finite, asymptotic_constant_infinite,
                       asymptotic_constant_product, estimate_infinite_ruin, estimate_product_tail,
                       ruin_curve)
from .sarmanov import SarmanovModel, validate
from .tail_stats import dominated_variation_check, hill_plot, tail_ratio_diagnostic

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_INFEASIBLE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- config helpers ----------------------------------------------------------------------


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"config is missing required key {key!r}")
    return cfg[key]


def _int(cfg: dict, key: str, default=None, minimum: int = 1) -> int:
    raw = cfg.get(key, default)
    if raw is None:
        raise ConfigError(f"config is missing required key {key!r}")
    try:
        value = int(float(raw))
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer") from None
    if value != float(raw) or value < minimum:
        raise ConfigError(f"{key} must be an integer >= {minimum}")
    return value


def _float(cfg: dict, key: str, default=None) -> float:
    raw = cfg.get(key, default)
    if raw is None:
        raise ConfigError(f"config is missing required key {key!r}")
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite")
    return value


def _model(cfg: dict) -> SarmanovModel:
    spec = _require(cfg, "model")
    if not isinstance(spec, dict):
        raise ConfigError("model must be a JSON object")
    return SarmanovModel.from_dict(spec)


def _alpha(cfg: dict, model: SarmanovModel | None = None) -> float:
    if "alpha" in cfg:
        return _float(cfg, "alpha")
    if model is not None and hasattr(model.F, "alpha"):
        return float(model.F.alpha)
    raise ConfigError("alpha is required when F has no tail index parameter")


def _seed(args, cfg: dict) -> int:
    raw = args.seed if args.seed is not None else cfg.get("seed")
    if raw is None:
        raise UsageError("a seed is required (--seed or 'seed' in the config)")
    try:
        seed = int(raw)
    except (TypeError, ValueError):
        raise UsageError(f"seed must be an unsigned 64-bit integer, got {raw!r}") from None
    if not 0 <= seed < 2 ** 64:
        raise UsageError("seed must be an unsigned 64-bit integer")
    return seed


def _versions() -> dict:
    return {"sarmanov_ruin": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


class _Run:
    """Collects outputs and writes the sidecar of one command."""

    def __init__(self, args, cfg: dict, command: str):
        self.args = args
        self.cfg = cfg
        self.command = command
        self.stem = command.replace("-", "_")
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs: list[str] = []
        self.extra: dict = {}
        self.started = time.perf_counter()

    def csv(self, suffix: str, header, rows):
        path = write_csv(self.out / f"{self.stem}{suffix}.csv", header, rows)
        self.outputs.append(path.name)

    def json(self, suffix: str, obj):
        path = write_json(self.out / f"{self.stem}{suffix}.json", obj)
        self.outputs.append(path.name)

    def finish(self, result: dict) -> dict:
        sidecar = {"command": self.command, "config": self.cfg, "versions": _versions(),
                   "outputs": sorted(self.outputs), "result": result, **self.extra}
        if self.args.timing:
            sidecar["elapsed_seconds"] = time.perf_counter() - self.started
        write_json(self.out / f"{self.stem}.json", sidecar)
        return result


def _mc_settings(args, cfg: dict, run: _Run) -> tuple[int, int, int]:
    seed = _seed(args, cfg)
    workers, source = mc.resolve_workers(args.workers)
    chunk = _int(cfg, "chunk_size", mc.DEFAULT_CHUNK)
    run.extra.update({"seed": seed, "chunk_size": chunk,
                      "workers": {"count": workers, "source": source, "env_var": mc.WORKERS_ENV}})
    return seed, workers, chunk


# --- commands ------------------------------------------------------------------------------


def cmd_validate(args, cfg):
    model = _model(cfg)
    report = validate(model).to_dict()
    if args.out_given:
        run = _Run(args, cfg, "validate")
        run.finish(report)
    print(dumps(report), end="")
    return EXIT_OK if report["valid"] else EXIT_VALIDATION


def _horizons(cfg):
    raw = _require(cfg, "n")
    items = raw if isinstance(raw, list) else [raw]
    if not items:
        raise ConfigError("n must list at least one horizon")
    finite, infinite = [], False
    for h in items:
        if isinstance(h, str) and h.lower() in ("inf", "infinity"):
            infinite = True
            continue
        try:
            value = int(h)
        except (TypeError, ValueError):
            raise ConfigError(f"horizon {h!r} must be a positive integer or 'inf'") from None
        if value < 1 or value != h:
            raise ConfigError(f"horizon {h!r} must be a positive integer or 'inf'")
        finite.append(value)
    return sorted(set(finite)), infinite


def cmd_ruin(args, cfg):
    model = _model(cfg)
    xs = parse_grid(_require(cfg, "x"), "x")
    horizons, infinite = _horizons(cfg)
    N = _int(cfg, "N")
    eps = _float(cfg, "eps_trunc", 1e-4)
    alpha = _alpha(cfg, model)
    _check_model(model)
    run = _Run(args, cfg, "ruin")
    seed, workers, chunk = _mc_settings(args, cfg, run)
    estimates = []
    if horizons:
        estimates += ruin_curve(model, xs, horizons, N, seed, chunk_size=chunk, workers=workers)
    if infinite:
        estimates += [estimate_infinite_ruin(model, float(x), N, eps, seed, chunk_size=chunk,
                                             workers=workers) for x in xs]
    constants = {}
    notes = []
    for h in horizons + (["inf"] if infinite else []):
        try:
            constants[h] = (asymptotic_constant_infinite(model, alpha) if h == "inf"
                            else asymptotic_constant_finite(model, alpha, h))
        except (SingularRatioError, DivergentMomentError) as exc:
            constants[h] = None
            notes.append(f"horizon {h}: no asymptotic constant ({exc})")
    header = ["x", "horizon", "p_hat", "se", "ci_low", "ci_high", "N", "hits", "depth",
              "truncation_bound", "constant", "ratio"]
    rows = []
    for e in estimates:
        const = constants[e.horizon]
        ratio = e.p_hat * e.x ** alpha / const if const else None
        lo, hi = e.ci
        rows.append([e.x, e.horizon, e.p_hat, e.se, lo, hi, e.N, e.hits, e.depth,
                     e.truncation_bound, const, ratio])
    run.csv("", header, rows)
    last = rows[-1]
    return run.finish({"rows": len(rows), "alpha": alpha, "last_ratio": last[-1],
                       "constants": {str(k): v for k, v in constants.items()}, "notes": notes})


def _check_model(model):
    report = validate(model)
    if not report.ok:
        raise ModelValidationError(f"invalid Sarmanov model, failed checks: {report.failed}")


def cmd_product_tail(args, cfg):
    model = _model(cfg)
    xs = parse_grid(_require(cfg, "x"), "x")
    N = _int(cfg, "N")
    alpha = _alpha(cfg, model)
    independent = bool(cfg.get("independent", False))
    _check_model(model)
    run = _Run(args, cfg, "product-tail")
    seed, workers, chunk = _mc_settings(args, cfg, run)
    ests = estimate_product_tail(model, xs, N, seed, independent=independent, chunk_size=chunk,
                                 workers=workers)
    const = asymptotic_constant_product(model, alpha)
    header = ["x", "p_hat", "se", "ci_low", "ci_high", "N", "hits", "constant", "ratio"]
    rows = []
    for e in ests:
        lo, hi = e.ci
        rows.append([e.x, e.p_hat, e.se, lo, hi, e.N, e.hits, const, e.p_hat * e.x ** alpha / const])
    run.csv("", header, rows)
    return run.finish({"rows": len(rows), "alpha": alpha, "constant": const,
                       "independent_twisted": independent})


def cmd_mellin_scan(args, cfg):
    alpha = _float(cfg, "alpha")
    beta_max = _float(cfg, "beta_max", 100.0 / alpha)
    if beta_max <= 0:
        raise UsageError("beta_max must be positive")
    resolution = _int(cfg, "resolution", 2001, minimum=3)
    threshold = _float(cfg, "zero_threshold", 1e-10)
    if "law" in cfg:
        transform = law_transform(law_from_dict(cfg["law"]), alpha)
        source = "law"
    elif "model" in cfg:
        model = _model(cfg)
        transform = model_transform(model, alpha)
        source = "twisted model"
    else:
        raise ConfigError("mellin-scan needs either 'law' or 'model'")
    run = _Run(args, cfg, "mellin-scan")
    result = scan_nonvanishing(transform, alpha, beta_max, resolution, zero_threshold=threshold)
    run.csv("", ["beta", "re", "im", "modulus"], result.rows())
    summary = result.summary()
    summary["transform"] = source
    return run.finish(summary)


def cmd_hill(args, cfg):
    ks = cfg.get("k", cfg.get("ks"))
    if ks is None:
        raise ConfigError("config is missing required key 'k'")
    ks = [int(k) for k in (ks if isinstance(ks, list) else [ks])]
    run = _Run(args, cfg, "hill")
    if "data" in cfg:
        try:
            samples = np.loadtxt(cfg["data"], dtype=float, ndmin=1)
        except OSError as exc:
            raise ConfigError(f"cannot read data file: {exc}") from None
    else:
        law = law_from_dict(_require(cfg, "law"))
        n = _int(cfg, "n")
        seed, _, _ = _mc_settings(args, cfg, run)
        samples = law.sample(mc.chunk_rng(seed, 0, mc.STREAM_HILL), n)
    ests = hill_plot(samples, ks)
    run.csv("", ["k", "alpha_hat", "se", "n"], [[e.k, e.alpha, e.se, e.n] for e in ests])
    return run.finish({"estimates": [e.to_dict() for e in ests]})


def cmd_tail_ratio(args, cfg):
    law = law_from_dict(_require(cfg, "law"))
    xs = parse_grid(_require(cfg, "x"), "x")
    y = _float(cfg, "y", 2.0)
    check = cfg.get("check", "ratio")
    run = _Run(args, cfg, "tail-ratio")
    tail = law.tail
    if cfg.get("empirical"):
        n = _int(cfg, "n")
        seed, _, _ = _mc_settings(args, cfg, run)
        tail = law.sample(mc.chunk_rng(seed, 0, mc.STREAM_MARGINAL), n)
    if check == "dominated":
        res = dominated_variation_check(tail, y, xs, growth_tol=_float(cfg, "growth_tol", 0.05))
    elif check == "ratio":
        window = cfg.get("window")
        res = tail_ratio_diagnostic(tail, y, xs, tol=_float(cfg, "tol", 0.01),
                                    window=None if window is None else tuple(map(float, window)))
    else:
        raise ConfigError("check must be 'ratio' or 'dominated'")
    run.csv("", ["x", "ratio"], res.rows())
    return run.finish(res.to_dict())


def cmd_counterexample(args, cfg):
    params = {k: _float(cfg, k, v) for k, v in DEFAULTS.items()}
    if "c" in cfg:
        params["c"] = _float(cfg, "c")
    if "kernel_coeffs" in cfg:
        params["kernel_coeffs"] = [float(v) for v in cfg["kernel_coeffs"]]
    xs = parse_grid(cfg.get("x", {"geom": [10.0, 1e4, 241]}), "x")
    bundle = build_counterexample(**params)
    demo = demonstrate(bundle, xs, tol=_float(cfg, "tol", 0.01))
    run = _Run(args, cfg, "counterexample")
    run.json("_bundle", bundle.to_dict())
    run.csv("_demo", demo.header, demo.rows())
    summary = demo.summary()
    summary["case"] = bundle.case
    summary["mellin_zero_modulus"] = bundle.mellin_zero_modulus()
    summary["centering_residual"] = bundle.centering_residual()
    return run.finish(summary)


COMMANDS = {
    "validate": cmd_validate,
    "ruin": cmd_ruin,
    "product-tail": cmd_product_tail,
    "mellin-scan": cmd_mellin_scan,
    "hill": cmd_hill,
    "tail-ratio": cmd_tail_ratio,
    "counterexample": cmd_counterexample,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", required=True, help="JSON config file")
    common.add_argument("--seed", type=int, default=None, help="root seed (unsigned 64-bit)")
    common.add_argument("--workers", type=int, default=None,
                        help=f"worker processes (overridden by ${mc.WORKERS_ENV})")
    common.add_argument("--out", default=None, help="output directory (default: current directory)")
    common.add_argument("--timing", action="store_true",
                        help="record elapsed time in the sidecar (breaks byte-identical reruns)")
    parser = _Parser(prog="sarmanov-ruin", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=(fn.__doc__ or name).strip().splitlines()[0])
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required: " + ", ".join(COMMANDS))
        args.out_given = args.out is not None
        if args.out is None:
            args.out = "."
        cfg = load_config(args.config)
        result = COMMANDS[args.command](args, cfg)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelValidationError, ParameterError, HypothesisError, DomainError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (TruncationError, SingularRatioError, DivergentMomentError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    if isinstance(result, int):
        return result
    print(dumps(result), end="")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
