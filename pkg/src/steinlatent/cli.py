"""Command-line front end.

Usage::

    steinlatent simulate --config sim.json --out data/
    steinlatent fit      --config fit.json --out fit/
    steinlatent eval     --config eval.json --out eval/
    steinlatent sweep    --config sweep.json --out sweep/ [--workers 4]
    steinlatent check

Structured settings live in the JSON config; flags cover paths, seed and
verbosity only. Data goes to files (or stdout for ``check``); diagnostics
go to stderr as one JSON object per line. Exit codes: 0 success, 1
runtime or numerical failure, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import jsonschema
import numpy as np

from . import estimators as est
from .checks import run_checks
from .distributions import DistributionSpec
from .exceptions import ConfigError, InvalidDimensionError, InvalidRankError, ParameterError, SteinLatentError
from .experiments import METHODS, SCORE_MODES, ExperimentConfig, desk_config, published_config, run_sweep, write_sweep_outputs
from .io import atomic_write_json, read_matrix_csv, write_matrix_csv
from .metrics import nrse, pmse, subspace_dist
from .scores import ScoreField, plugin_gaussian_field
from .simulation import PRESETS, SimulationConfig, simulate

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2

_DISTS = ["gaussian", "student_t", "hyperbolic"]
_MECHS = ["linear", "nonlinear_fixed", "nonlinear_random_pairs"]
_INT = {"type": "integer"}
_POS_INT = {"type": "integer", "minimum": 1}
_NUM = {"type": "number"}
_FUNCS = {"type": ["array", "null"], "items": {"type": "integer", "minimum": 1, "maximum": 10}}

SIMULATE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "preset": {"enum": sorted(PRESETS)},
        "p": _POS_INT, "q": _POS_INT, "r": _POS_INT, "n": _POS_INT,
        "distribution": {"enum": _DISTS}, "mechanism": {"enum": _MECHS},
        "sigma_eps": {"type": "number", "minimum": 0}, "dof": _NUM,
        "chi": {"type": ["number", "null"]}, "psi": {"type": ["number", "null"]},
        "dispersion_shift": _NUM, "dispersion_scale": _NUM, "mu_o": _NUM, "sigma_o": _NUM,
        "functions": _FUNCS, "shared_weights": {"type": "boolean"}, "seed": _INT,
    },
}

FIT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["data", "method", "r"],
    "properties": {
        "data": {"type": "string"},
        "method": {"enum": list(METHODS)},
        "score": {"enum": list(SCORE_MODES)},
        "r": _POS_INT,
        "signal_alpha": {"type": ["number", "null"], "exclusiveMinimum": 0, "maximum": 1},
        "n_labeled": _POS_INT,
    },
}

EVAL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["estimate", "truth"],
    "properties": {
        "estimate": {"type": "string"},
        "truth": {"type": "string"},
        "data": {"type": "string"},
    },
}

_list_of = lambda item: {"type": "array", "minItems": 1, "items": item}  # noqa: E731
SWEEP_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "preset": {"enum": ["desk", "paper-default"]},
        "distributions": _list_of({"enum": _DISTS}),
        "mechanisms": _list_of({"enum": _MECHS}),
        "methods": _list_of({"enum": list(METHODS)}),
        "score_modes": _list_of({"enum": list(SCORE_MODES)}),
        "n_grid": _list_of(_POS_INT), "p_grid": _list_of(_POS_INT),
        "q": _POS_INT, "r": _POS_INT, "sigma_eps": {"type": "number", "minimum": 0},
        "repetitions": _POS_INT, "master_seed": _INT, "dof": _NUM, "functions": _FUNCS,
        "unlabeled_factor": {"type": "integer", "minimum": 0},
        "signal_alpha": {"type": ["number", "null"], "exclusiveMinimum": 0, "maximum": 1},
        "record_timing": {"type": "boolean"},
    },
}


class _Diag:
    def __init__(self, verbosity: int = 0, stream=None):
        self.verbosity = verbosity
        self.stream = stream

    def emit(self, level: str, message: str, **extra):
        if level == "info" and self.verbosity < 1:
            return
        stream = self.stream if self.stream is not None else sys.stderr
        stream.write(json.dumps({"level": level, "message": message, **extra}, sort_keys=True) + "\n")


def _load_config(path, schema) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    try:
        jsonschema.validate(cfg, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    return cfg


def _config_errors(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ParameterError, InvalidRankError, InvalidDimensionError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def cmd_simulate(args, diag) -> int:
    raw = _load_config(args.config, SIMULATE_SCHEMA)
    preset = raw.pop("preset", None)
    merged = dict(PRESETS[preset]) if preset else {}
    merged.update(raw)
    if args.seed is not None:
        merged["seed"] = args.seed
    cfg = _config_errors(SimulationConfig.from_dict, merged)
    ds, _, _ = simulate(cfg)
    out = Path(args.out)
    write_matrix_csv(out / "X.csv", ds.X)
    write_matrix_csv(out / "Y.csv", ds.Y)
    write_matrix_csv(out / "B_true.csv", ds.B_true)
    prov = dict(ds.provenance)
    if preset:
        prov["preset"] = preset
    atomic_write_json(out / "provenance.json", prov)
    diag.emit("info", "simulated", n=cfg.n, p=cfg.p, q=cfg.q, out=str(out))
    return EXIT_OK


def _read_data(path):
    d = Path(path)
    try:
        X = read_matrix_csv(d / "X.csv")
        Y = read_matrix_csv(d / "Y.csv")
    except OSError as exc:
        raise ConfigError(f"cannot read data directory {d}: {exc}") from None
    return X, Y, d


def _known_field(data_dir: Path) -> ScoreField:
    prov_path = data_dir / "provenance.json"
    if not prov_path.exists():
        raise ConfigError("score=known needs provenance.json next to the data")
    return ScoreField.closed_form(DistributionSpec.from_dict(json.loads(prov_path.read_text())["distribution"]))


def cmd_fit(args, diag) -> int:
    cfg = _load_config(args.config, FIT_SCHEMA)
    X, Y, d = _read_data(cfg["data"])
    method, r = cfg["method"], cfg["r"]
    mode = cfg.get("score", "plug-in")
    alpha = cfg.get("signal_alpha", 1e-6)

    def field(Xfit):
        return _known_field(d) if mode == "known" else plugin_gaussian_field(Xfit)

    def fit():
        if method == "first-order":
            return est.first_order_fit(X, Y, r, field(X))
        if method == "second-order":
            return est.second_order_fit(X, Y, r, field(X), signal_alpha=alpha, on_near_zero="warn")
        if method == "pca":
            return est.pca_fit(X, r)
        if method == "rrr":
            return est.rrr_fit(X, Y, r)
        n_lab = cfg.get("n_labeled", X.shape[0])
        data = est.SemiSupervisedData(X[:n_lab], Y[:n_lab], X)
        if method == "semi-first":
            return est.semi_first_order_fit(data, r, field(X))
        return est.semi_second_order_fit(data, r, field(X), signal_alpha=alpha, on_near_zero="warn")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        basis = _config_errors(fit)
    out = Path(args.out)
    write_matrix_csv(out / "B_hat.csv", basis.matrix)
    report = {"method": method, "score": mode if method in ("first-order", "second-order", "semi-first",
                                                              "semi-second") else None,
              "r": r, "n": int(X.shape[0]), "p": int(X.shape[1]), "q": int(Y.shape[1]),
              "values": basis.values.tolist(), "warnings": list(basis.warnings)}
    atomic_write_json(out / "fit-report.json", report)
    for w in basis.warnings:
        diag.emit("warning", w, method=method)
    return EXIT_OK


def cmd_eval(args, diag) -> int:
    cfg = _load_config(args.config, EVAL_SCHEMA)
    try:
        B_hat = read_matrix_csv(cfg["estimate"])
        B = read_matrix_csv(cfg["truth"])
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    if B_hat.shape != B.shape:
        raise ConfigError(f"estimate shape {B_hat.shape} differs from truth shape {B.shape}")
    metrics = {"subspace_dist": subspace_dist(B_hat, B).distance}
    if "data" in cfg:
        X, Y, _ = _read_data(cfg["data"])
        Z = X @ B_hat
        metrics["pmse"] = pmse(Y, est.fit_linear_decoder(Z, Y).predict(Z))
        metrics["nrse"] = nrse(est.fit_linear_decoder(Z, X).predict(Z), X)
    atomic_write_json(Path(args.out) / "metrics.json", metrics)
    return EXIT_OK


def cmd_sweep(args, diag) -> int:
    raw = _load_config(args.config, SWEEP_SCHEMA)
    preset = raw.pop("preset", None)
    if args.seed is not None:
        raw["master_seed"] = args.seed
    factory = {"desk": desk_config, "paper-default": published_config, None: ExperimentConfig}[preset]
    cfg = _config_errors(factory, **raw)
    records = run_sweep(cfg, workers=args.workers, log=lambda m: diag.emit("info", m))
    write_sweep_outputs(records, cfg, args.out)
    failed = sum(1 for rec in records if not np.isfinite(rec.distance))
    if failed:
        diag.emit("warning", "records without a distance", count=failed)
    return EXIT_OK


def cmd_check(args, diag) -> int:
    results = run_checks(seed=0 if args.seed is None else args.seed)
    for res in results:
        print(f"{'PASS' if res.passed else 'FAIL'} {res.name}: {res.detail}")
    if all(res.passed for res in results):
        return EXIT_OK
    diag.emit("error", "invariant check failed", failed=[r.name for r in results if not r.passed])
    return EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="steinlatent", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_io in (("simulate", True), ("fit", True), ("eval", True), ("sweep", True), ("check", False)):
        sp = sub.add_parser(name)
        if needs_io:
            sp.add_argument("--config", required=True, help="JSON config file")
            sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override the configured seed")
        sp.add_argument("-v", "--verbose", action="count", default=0)
        if name == "sweep":
            sp.add_argument("--workers", type=int, default=1)
    return parser


_COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "eval": cmd_eval, "sweep": cmd_sweep, "check": cmd_check}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    diag = _Diag(args.verbose)
    try:
        return _COMMANDS[args.command](args, diag)
    except ConfigError as exc:
        diag.emit("error", str(exc), kind="config")
        return EXIT_CONFIG
    except (SteinLatentError, np.linalg.LinAlgError, ArithmeticError, OSError, ValueError) as exc:
        diag.emit("error", str(exc), kind=type(exc).__name__)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
