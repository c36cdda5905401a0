"""Simulation sweeps, median aggregation and convergence-rate fits.

A sweep draws one synthetic dataset per (data grid point, repetition) and
runs every requested method on it, so methods are compared on paired
data. Seeds come from a keyed hash of the master seed, a canonical string
for the data grid point and the repetition index; the grid enumeration
order and the worker schedule do not affect any record.
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import statistics
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
from scipy.stats import linregress

from . import estimators as est
from .exceptions import ConfigError, SteinLatentError
from .io import atomic_write_json, atomic_write_text
from .metrics import pmse, subspace_dist
from .scores import ScoreField, plugin_gaussian_field
from .simulation import (
    PRESETS,
    SimulationConfig,
    apply_links,
    generate_basis,
    make_links,
    simulate,
    split_semi_supervised,
    SplitProtocol,
)

METHODS = ("first-order", "second-order", "pca", "rrr", "semi-first", "semi-second")
SCORE_MODES = ("known", "plug-in")
CSV_HEADER = ("method", "dist_kind", "link_mech", "score_mode", "p", "q", "r", "sigma_eps",
              "n", "rep", "seed", "distance", "wall_ms", "warnings")
_SCORED = {"first-order", "second-order", "semi-first", "semi-second"}


@dataclass(frozen=True)
class ExperimentConfig:
    distributions: tuple[str, ...] = ("gaussian",)
    mechanisms: tuple[str, ...] = ("linear",)
    methods: tuple[str, ...] = ("first-order",)
    score_modes: tuple[str, ...] = ("known",)
    n_grid: tuple[int, ...] = (250, 500, 1000, 2000, 4000)
    p_grid: tuple[int, ...] = (10,)
    q: int = 10
    r: int = 2
    sigma_eps: float = 0.5
    repetitions: int = 30
    master_seed: int = 0
    dof: float = 10.0
    functions: tuple[int, ...] | None = None
    unlabeled_factor: int = 4
    signal_alpha: float | None = 1e-6
    record_timing: bool = False

    def __post_init__(self):
        for name in ("distributions", "mechanisms", "methods", "score_modes", "n_grid", "p_grid"):
            value = tuple(getattr(self, name))
            if not value:
                raise ConfigError(f"{name} must be non-empty")
            object.__setattr__(self, name, value)
        if self.functions is not None:
            object.__setattr__(self, "functions", tuple(int(f) for f in self.functions))
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ConfigError(f"unknown methods {sorted(bad)}; choose from {METHODS}")
        bad = set(self.score_modes) - set(SCORE_MODES)
        if bad:
            raise ConfigError(f"unknown score modes {sorted(bad)}; choose from {SCORE_MODES}")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        # validates distribution/mechanism names and q parity
        for d, m, p in itertools.product(self.distributions, self.mechanisms, self.p_grid):
            try:
                SimulationConfig(p=p, q=self.q, r=self.r, n=min(self.n_grid), distribution=d,
                                 mechanism=m, functions=self.functions)
            except (SteinLatentError, ValueError) as exc:
                raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown experiment keys: {sorted(unknown)}")
        return cls(**d)


def desk_config(**overrides) -> ExperimentConfig:
    """Desk-scale grid: p=10, q=10, r=2, n in 250..4000, 30 repetitions."""
    base = dict(q=PRESETS["desk"]["q"], r=PRESETS["desk"]["r"], p_grid=(PRESETS["desk"]["p"],),
                sigma_eps=PRESETS["desk"]["sigma_eps"], n_grid=(250, 500, 1000, 2000, 4000),
                repetitions=30)
    base.update(overrides)
    return ExperimentConfig(**base)


def published_config(**overrides) -> ExperimentConfig:
    """The published grid: p=30, q=20, r=3, n in 300..9000, 100 repetitions."""
    pd = PRESETS["paper-default"]
    base = dict(q=pd["q"], r=pd["r"], p_grid=(pd["p"],), sigma_eps=pd["sigma_eps"], dof=pd["dof"],
                n_grid=(300, 500, 1000, 3000, 5000, 7000, 9000), repetitions=100,
                distributions=("gaussian", "student_t", "hyperbolic"),
                mechanisms=("linear", "nonlinear_fixed", "nonlinear_random_pairs"),
                methods=("first-order", "second-order", "rrr"), score_modes=("known", "plug-in"))
    base.update(overrides)
    return ExperimentConfig(**base)


@dataclass(frozen=True)
class ResultRecord:
    method: str
    dist_kind: str
    link_mech: str
    score_mode: str
    p: int
    q: int
    r: int
    sigma_eps: float
    n: int
    rep: int
    seed: int
    distance: float
    wall_ms: float | None = None
    warnings: tuple[str, ...] = ()

    def row(self) -> list[str]:
        return [self.method, self.dist_kind, self.link_mech, self.score_mode, str(self.p),
                str(self.q), str(self.r), repr(float(self.sigma_eps)), str(self.n), str(self.rep),
                str(self.seed), repr(float(self.distance)),
                "" if self.wall_ms is None else repr(float(self.wall_ms)), ";".join(self.warnings)]


def derive_seed(master_seed: int, key: str, rep: int) -> int:
    """Stable 64-bit seed from (master seed, canonical grid key, repetition)."""
    h = hashlib.blake2b(f"{master_seed}|{key}|{rep}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def _data_key(cfg: ExperimentConfig, dist: str, mech: str, p: int, n: int) -> str:
    funcs = "" if cfg.functions is None else ",".join(map(str, cfg.functions))
    return (f"dist={dist};mech={mech};p={p};q={cfg.q};r={cfg.r};sigma_eps={cfg.sigma_eps!r};"
            f"n={n};dof={cfg.dof!r};functions={funcs}")


def _method_runs(cfg: ExperimentConfig):
    for method in cfg.methods:
        if method in _SCORED:
            for mode in cfg.score_modes:
                yield method, mode
        else:
            yield method, "none"


def _fit(method: str, mode: str, X, Y, X_all, r, spec, alpha) -> est.LatentBasis:
    def field_for(Xfit):
        return ScoreField.closed_form(spec) if mode == "known" else plugin_gaussian_field(Xfit)

    if method == "first-order":
        return est.first_order_fit(X, Y, r, field_for(X))
    if method == "second-order":
        return est.second_order_fit(X, Y, r, field_for(X), signal_alpha=alpha, on_near_zero="warn")
    if method == "pca":
        return est.pca_fit(X, r)
    if method == "rrr":
        return est.rrr_fit(X, Y, r)
    data = est.SemiSupervisedData(X, Y, X_all)
    if method == "semi-first":
        return est.semi_first_order_fit(data, r, field_for(X_all))
    return est.semi_second_order_fit(data, r, field_for(X_all), signal_alpha=alpha, on_near_zero="warn")


def _run_unit(args) -> list[ResultRecord]:
    cfg, dist, mech, p, n, rep = args
    seed = derive_seed(cfg.master_seed, _data_key(cfg, dist, mech, p, n), rep)
    semi = any(m.startswith("semi") for m in cfg.methods)
    n_total = n * (1 + cfg.unlabeled_factor) if semi else n
    sim = SimulationConfig(p=p, q=cfg.q, r=cfg.r, n=n_total, distribution=dist, mechanism=mech,
                           sigma_eps=cfg.sigma_eps, dof=cfg.dof, functions=cfg.functions, seed=seed)
    ds, spec, _ = simulate(sim)
    X, Y = ds.X[:n], ds.Y[:n]
    out = []
    for method, mode in _method_runs(cfg):
        t0 = time.perf_counter()
        flags: tuple[str, ...] = ()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            try:
                basis = _fit(method, mode, X, Y, ds.X, cfg.r, spec, cfg.signal_alpha)
                distance = subspace_dist(basis.matrix, ds.B_true).distance
                flags = basis.warnings
            except (SteinLatentError, np.linalg.LinAlgError, ValueError) as exc:
                distance = float("nan")
                flags = (f"error:{type(exc).__name__}:{exc}".replace(",", " ").replace("\n", " "),)
        wall = (time.perf_counter() - t0) * 1e3 if cfg.record_timing else None
        out.append(ResultRecord(method, dist, mech, mode, p, cfg.q, cfg.r, cfg.sigma_eps, n, rep,
                                seed, distance, wall, tuple(flags)))
    return out


def _units(cfg: ExperimentConfig):
    for dist, mech, p, n in itertools.product(cfg.distributions, cfg.mechanisms, cfg.p_grid, cfg.n_grid):
        for rep in range(cfg.repetitions):
            yield (cfg, dist, mech, p, n, rep)


def run_sweep(cfg: ExperimentConfig, workers: int = 1, log=None) -> list[ResultRecord]:
    """Run every (grid point, repetition) and return records in a fixed order.

    Records are ordered by method, score mode, distribution, mechanism,
    p, n and repetition, independent of ``workers``.
    """
    units = list(_units(cfg))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_unit, units, chunksize=max(1, len(units) // (8 * workers))))
    else:
        results = []
        last = None
        for u in units:
            if log is not None and u[1:5] != last:
                last = u[1:5]
                log(f"dist={u[1]} mech={u[2]} p={u[3]} n={u[4]}")
            results.append(_run_unit(u))
    records = [rec for batch in results for rec in batch]
    order = {(m, s): i for i, (m, s) in enumerate(_method_runs(cfg))}
    pos = {name: {v: i for i, v in enumerate(getattr(cfg, name))}
           for name in ("distributions", "mechanisms", "p_grid", "n_grid")}
    records.sort(key=lambda r: (order[(r.method, r.score_mode)], pos["distributions"][r.dist_kind],
                                pos["mechanisms"][r.link_mech], pos["p_grid"][r.p],
                                pos["n_grid"][r.n], r.rep))
    return records


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rec in records:
        w.writerow(rec.row())
    return buf.getvalue()


def aggregate_median(records, keys=("method", "dist_kind", "link_mech", "score_mode", "p", "n")):
    """Median distance per group.

    Even-sized groups use the midpoint of the two central values. Records
    with a non-finite distance are left out and counted in ``excluded``;
    groups left empty are dropped.
    """
    groups: dict[tuple, list[float]] = {}
    excluded: dict[tuple, int] = {}
    for rec in records:
        k = tuple(getattr(rec, key) for key in keys)
        groups.setdefault(k, [])
        excluded.setdefault(k, 0)
        if np.isfinite(rec.distance):
            groups[k].append(rec.distance)
        else:
            excluded[k] += 1
    table = []
    for k, vals in groups.items():
        if not vals:
            continue
        row = dict(zip(keys, k))
        row.update(median=float(statistics.median(vals)), count=len(vals), excluded=excluded[k])
        table.append(row)
    return table


def medians_to_csv(table, keys=("method", "dist_kind", "link_mech", "score_mode", "p", "n")) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(keys) + ["median", "count", "excluded"])
    for row in table:
        w.writerow([row[k] for k in keys] + [repr(row["median"]), row["count"], row["excluded"]])
    return buf.getvalue()


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int
    excluded: tuple = ()


def fit_rate_slope(points) -> RateFit:
    """Least-squares line through (log n, log distance).

    Points with a non-positive or non-finite distance are excluded and
    reported; at least three must remain.
    """
    pts = [(float(n), float(d)) for n, d in points]
    keep = [(n, d) for n, d in pts if np.isfinite(d) and d > 0 and n > 0]
    dropped = tuple((n, d) for n, d in pts if (n, d) not in keep)
    if len(keep) < 3:
        raise ValueError(f"need at least 3 positive points, got {len(keep)}")
    x = np.log([n for n, _ in keep])
    y = np.log([d for _, d in keep])
    res = linregress(x, y)
    return RateFit(float(res.slope), float(res.intercept), float(res.rvalue**2), len(keep), dropped)


def rate_slopes(table) -> list[dict]:
    """One slope per (method, distribution, mechanism, score mode, p)."""
    groups: dict[tuple, list] = {}
    for row in table:
        k = (row["method"], row["dist_kind"], row["link_mech"], row["score_mode"], row["p"])
        groups.setdefault(k, []).append((row["n"], row["median"]))
    out = []
    for k, pts in groups.items():
        entry = dict(zip(("method", "dist_kind", "link_mech", "score_mode", "p"), k))
        try:
            fit = fit_rate_slope(sorted(pts))
            entry.update(slope=fit.slope, intercept=fit.intercept, r_squared=fit.r_squared,
                         n_points=fit.n_points)
        except ValueError as exc:
            entry.update(slope=None, note=str(exc))
        out.append(entry)
    return out


def write_sweep_outputs(records, cfg: ExperimentConfig, outdir) -> dict[str, Path]:
    outdir = Path(outdir)
    table = aggregate_median(records)
    return {
        "results": atomic_write_text(outdir / "results.csv", records_to_csv(records)),
        "medians": atomic_write_text(outdir / "medians.csv", medians_to_csv(table)),
        "slopes": atomic_write_json(outdir / "slopes.json", rate_slopes(table)),
        "config": atomic_write_json(outdir / "config.json", cfg.to_dict()),
    }


@dataclass(frozen=True)
class PcaEquivalence:
    distance: float
    degenerate: bool


def check_pca_equivalence(X, r: int) -> PcaEquivalence:
    """Distance between the plug-in first-order fit on Y = X and PCA.

    ``degenerate`` is set when either decomposition has a tie at the r-th
    value, in which case the r-dimensional subspace is not unique.
    """
    X = np.asarray(X, dtype=float)
    fo = est.first_order_fit(X, X, r, plugin_gaussian_field(X))
    pc = est.pca_fit(X, r)
    degenerate = est.DEGENERATE in fo.warnings or est.DEGENERATE in pc.warnings
    return PcaEquivalence(subspace_dist(fo.matrix, pc.matrix).distance, degenerate)


@dataclass(frozen=True)
class SemiSupervisedStudy:
    """Synthetic labeled/unlabeled comparison of latent-space estimators.

    Features share the latent basis with the labels: x = B z + (I - B B') e
    with z ~ N(0, latent_scale^2 I_r) and e ~ N(0, I_p), so that B' x = z and
    the feature block obeys x = B (B' x) + noise. Labels are
    y~ = F(z) + eps. Every score-based estimator uses one Gaussian plug-in
    score fitted on all non-test features (transductive setting).
    """

    p: int = 20
    label_dim: int = 10
    r: int = 3
    mechanism: str = "linear"
    latent_scale: float = 2.0
    sigma_eps: float = 0.5
    n_test: int = 500
    n_pool: int = 1000
    n_labeled: int = 100
    repetitions: int = 50
    master_seed: int = 0
    score: str = "shared-plugin"


def _semi_rep(study: SemiSupervisedStudy, rep: int) -> dict:
    rng = np.random.default_rng(derive_seed(study.master_seed, f"semi;{study!r}", rep))
    B = generate_basis(study.p, study.r, 0.0, 1.0, rng, n_cols=study.label_dim)
    links = make_links(study.mechanism, study.label_dim, study.r, rng)
    n = study.n_test + study.n_pool
    Z = study.latent_scale * rng.standard_normal((n, study.r))
    P = np.eye(study.p) - B @ B.T
    X = Z @ B.T + rng.standard_normal((n, study.p)) @ P
    Y = apply_links(links, Z) + study.sigma_eps * rng.standard_normal((n, study.label_dim))
    split = SplitProtocol(study.n_test, study.n_pool - study.n_labeled, study.n_labeled)
    test, train, lab = split_semi_supervised(n, split, rng)
    pool = np.concatenate([train, lab])
    Xa, Xl, Yl = X[pool], X[lab], Y[lab]
    fa = plugin_gaussian_field(Xa)
    fl = fa if study.score == "shared-plugin" else plugin_gaussian_field(Xl)
    bases = {
        "semi": est.semi_first_order_fit(est.SemiSupervisedData(Xl, Yl, Xa), study.r, fa).matrix,
        "unsupervised": est.first_order_fit(Xa, Xa, study.r, fa).matrix,
        "labeled-only": est.first_order_fit(Xl, Yl, study.r, fl).matrix,
        "pca": est.pca_fit(Xa, study.r).matrix,
        "oracle": B,
    }
    out = {}
    for name, Bh in bases.items():
        dec = est.fit_linear_decoder(Xl @ Bh, Yl)
        out[name] = pmse(Y[test], dec.predict(X[test] @ Bh))
    return out


def run_semi_supervised_study(study: SemiSupervisedStudy) -> dict[str, list[float]]:
    """PMSE per estimator and repetition; the decoder is fit on labeled rows."""
    if study.score not in ("shared-plugin", "separate-plugin"):
        raise ConfigError(f"unknown score option {study.score!r}")
    per_rep = [_semi_rep(study, k) for k in range(study.repetitions)]
    return {name: [rep[name] for rep in per_rep] for name in per_rep[0]}


def config_json(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)
