"""Experiment configurations and runners behind the command line.

Each runner takes an :class:`ExperimentConfig`, writes its artifacts (CSV,
SVG, JSON, manifest) under ``cfg.output_dir`` and returns a report dict.
Sweep points are independent and may run in worker processes; results are
merged in sorted key order so the output never depends on scheduling.
"""

from __future__ import annotations

import copy
import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import distributions as dz
from . import io
from .errors import ConfigError, NonConverged
from .fisher import TrainConfig, estimate_ipm, parse_mode, train_gan
from .metrics import median_wall_ms, mode_coverage
from .oracle import QuadratureConfig, chi2_distance, chi2_monte_carlo
from .plots import emit_plots, plot_fig2, plot_samples
from .ssl import SslConfig, supervised_baseline, train_ssl

log = logging.getLogger(__name__)

EXPERIMENTS = ("fig2_sweep", "oracle_check", "toy_gan", "ssl_toy", "baseline_compare")
DEFAULT_MODES = ("fisher_alm", "weight_clip:0.01", "gradient_penalty:10", "fgan_chi2")

# Calibrated training defaults per experiment; ``cfg.train`` overrides them key by key.
_ESTIMATION = dict(init_stdev=0.3, weight_decay_omega=0.0, weight_decay_v=0.0, iterations=6000,
                   batch_size=512, rho=0.1, beta1=0.0)
TRAIN_DEFAULTS = {
    "fig2_sweep": _ESTIMATION,
    "baseline_compare": {**_ESTIMATION, "iterations": 2000},
    "oracle_check": {},
    "toy_gan": dict(init_stdev=0.3, generator_init_stdev=0.2, generator_hidden=(128, 128, 128),
                    batch_size=256, beta1=0.0, rho=0.1, lr=1e-4, lr_generator=2e-5,
                    iterations=20_000, proxy_every=1000),
    "ssl_toy": dict(init_stdev=0.3, beta1=0.0, rho=0.1, lr=2.5e-4, iterations=2000, batch_size=256),
}
# toy GAN target; wide enough modes that data and generator overlap early
TOY_RING = dict(variant="Ring", k=8, radius=2.0, sigma=0.1)


@dataclass
class ExperimentConfig:
    experiment: str = "fig2_sweep"
    output_dir: Optional[str] = None
    train: dict = field(default_factory=dict)
    # estimation pair, or the training target for toy_gan / ssl_toy
    p: Optional[dict] = None
    q: Optional[dict] = None
    data: Optional[dict] = None
    dim: int = 2
    shifts: list = field(default_factory=lambda: [0.0, 0.5, 1.0, 2.0, 3.0, 4.0])
    n_train: list = field(default_factory=lambda: [1000, 10_000, 100_000])
    seeds: list = field(default_factory=lambda: [0])
    n_eval: int = 1_000_000
    sampling: str = "dataset"
    modes: list = field(default_factory=lambda: list(DEFAULT_MODES))
    shift: float = 2.0
    ssl: dict = field(default_factory=dict)
    pairs: Optional[list] = None
    mc_samples: int = 10_000_000
    quadrature: dict = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}")
        for name in ("shifts", "n_train", "seeds"):
            if not list(getattr(self, name)):
                raise ConfigError(f"sweep axis {name!r} must be non-empty")
        if self.experiment == "fig2_sweep" and self.dim not in (1, 2):
            raise ConfigError("the shift sweep supports d in {1, 2}")
        if self.n_eval < 2:
            raise ConfigError("n_eval must be >= 2")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        for m in self.modes:
            parse_mode(m)
        self.train_config()

    def train_config(self, **over):
        try:
            return TrainConfig(**{**TRAIN_DEFAULTS[self.experiment], **self.train, **over})
        except TypeError as exc:
            raise ConfigError(f"bad train config: {exc}") from exc

    def out(self):
        root = Path(self.output_dir) if self.output_dir else io.output_root() / self.experiment
        root.mkdir(parents=True, exist_ok=True)
        return root

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown experiment config keys {sorted(unknown)}")
        return cls(**d)


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(d, overrides):
    """Apply ``key=value`` strings (dotted keys, JSON values) to a nested dict."""
    d = copy.deepcopy(d)
    for item in overrides or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not key=value")
        node = d
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot set {key!r}: {p!r} is not a mapping")
        node[parts[-1]] = _parse_value(value)
    return d


def load_config(path=None, overrides=(), experiment=None):
    d = {}
    if path is not None:
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config file must hold a JSON object")
    if experiment is not None:
        d.setdefault("experiment", experiment)
        if d["experiment"] != experiment:
            raise ConfigError(f"config is for {d['experiment']!r}, command runs {experiment!r}")
    return ExperimentConfig.from_dict(apply_overrides(d, overrides))


def _write_rows(path, rows, columns):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, columns, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else r[k]) for k in columns})


def _run_pool(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


# ---------------------------------------------------------------------------
# Oracle check
# ---------------------------------------------------------------------------


def default_oracle_pairs():
    """Ten pairs in one and two dimensions with varied overlap."""
    g = dz.Gaussian
    return [
        (g([0.0], [[1.0]]), g([0.5], [[1.0]])),
        (g([0.0], [[1.0]]), g([2.0], [[1.0]])),
        (g([0.0], [[1.0]]), g([0.0], [[4.0]])),
        (g([0.0], [[1.0]]), dz.gaussian_mixture([0.3, 0.7], [[-2.0], [1.0]], [[[0.5]], [[1.0]]])),
        (dz.UniformBox([0.0], [1.0]), dz.UniformBox([0.5], [2.0])),
        (g([0.0, 0.0], np.eye(2)), g([1.0, 0.0], np.eye(2))),
        (g([0.0, 0.0], np.eye(2)), g([1.0, -1.0], [[1.0, 0.5], [0.5, 2.0]])),
        (g([0.0, 0.0], np.eye(2)), dz.gaussian_mixture([0.5, 0.5], [[2.0, 0.0], [-2.0, 0.0]],
                                                       [np.eye(2) * 0.5] * 2)),
        (dz.UniformBox([0.0, 0.0], [1.0, 1.0]), dz.UniformBox([0.5, 0.25], [1.5, 1.25])),
        (dz.Ring(8, 2.0, 0.3), g([0.0, 0.0], np.eye(2) * 2.0)),
    ]


def run_oracle_check(cfg: ExperimentConfig):
    if cfg.pairs:
        pairs = [(dz.from_dict(a), dz.from_dict(b)) for a, b in cfg.pairs]
    else:
        pairs = default_oracle_pairs()
    quad = QuadratureConfig(**cfg.quadrature) if cfg.quadrature else None
    rows = []
    for i, (P, Q) in enumerate(pairs):
        row = {"pair": i, "dim": P.dim}
        try:
            r = chi2_distance(P, Q, quad)
            row.update(quadrature=r.value, quad_error=r.error_estimate)
        except NonConverged as exc:
            row.update(quadrature=exc.value, quad_error=exc.error_estimate, error=str(exc))
        mc = chi2_monte_carlo(P, Q, n=cfg.mc_samples, seed=cfg.seeds[0])
        row.update(monte_carlo=mc.value, mc_stderr=mc.stderr)
        row["z"] = (row["quadrature"] - mc.value) / max(mc.stderr, 1e-12)
        row["agree"] = abs(row["z"]) <= 3.0
        rows.append(row)
    out = cfg.out()
    path = out / "oracle_check.csv"
    _write_rows(path, rows, ["pair", "dim", "quadrature", "quad_error", "monte_carlo",
                             "mc_stderr", "z", "agree", "error"])
    io.write_manifest(out, cfg.experiment, cfg.to_dict(), cfg.seeds, [path])
    return {"rows": rows, "ok": all(r["agree"] for r in rows), "paths": [str(path)]}


# ---------------------------------------------------------------------------
# Shift sweep
# ---------------------------------------------------------------------------


def _fig2_point(task):
    shift, n, seed, dim, train, n_eval, sampling = task
    P, Q = dz.shifted_gaussians(shift, dim)
    oracle = chi2_distance(P, Q).value
    cfg = TrainConfig(**{**train, "seed": seed})
    r = estimate_ipm(P, Q, cfg, n_train=n, n_eval=n_eval, sampling=sampling, chi2_oracle=oracle)
    om = [m.omega_hat for m in r.fit.metrics]
    tail = om[-max(1, len(om) // 10):]
    return {
        "shift": float(shift), "n_train": int(n), "seed": int(seed), "oracle": oracle,
        "estimate": r.estimate, "stderr": r.stderr, "abs_error": abs(r.estimate - oracle),
        "rel_error": abs(r.estimate - oracle) / oracle if oracle > 0 else None,
        "omega_tail": float(np.mean(np.abs(np.array(tail) - 1.0))),
        "lambda": r.fit.state.alm.lam, "diverged": r.fit.diverged,
        "wall_ms": median_wall_ms(r.fit.wall_ms),
    }


def error_slope(rows, min_oracle=0.5):
    """Least-squares slope of log mean abs error vs log n over shifts with large oracle."""
    ns = sorted({r["n_train"] for r in rows})
    errs = []
    for n in ns:
        e = [r["abs_error"] for r in rows if r["n_train"] == n and r["oracle"] >= min_oracle]
        errs.append(float(np.mean(e)) if e else float("nan"))
    if len(ns) < 2 or not np.all(np.isfinite(errs)) or min(errs) <= 0:
        return float("nan"), ns, errs
    slope = np.polyfit(np.log(ns), np.log(errs), 1)[0]
    return float(slope), ns, errs


def run_fig2(cfg: ExperimentConfig):
    """Oracle distance and trained estimate for every (shift, n_train, seed)."""
    train = cfg.train_config().to_dict()
    tasks = sorted((float(s), int(n), int(seed), cfg.dim, train, cfg.n_eval, cfg.sampling)
                   for s in cfg.shifts for n in cfg.n_train for seed in cfg.seeds)
    rows = _run_pool(_fig2_point, tasks, cfg.workers)
    rows.sort(key=lambda r: (r["shift"], r["n_train"], r["seed"]))
    out = cfg.out()
    csv_path = out / "fig2.csv"
    _write_rows(csv_path, rows, ["shift", "n_train", "seed", "oracle", "estimate", "stderr",
                                 "abs_error", "rel_error", "omega_tail", "lambda", "diverged",
                                 "wall_ms"])
    svgs = plot_fig2(rows, out)
    slope, ns, errs = error_slope(rows)
    report = {
        "rows": rows,
        "slope": slope,
        "mean_error_by_n": dict(zip(map(str, ns), errs)),
        "lower_bound_ok": all(r["estimate"] <= r["oracle"] + 3 * r["stderr"] for r in rows),
        "paths": [str(csv_path), *svgs],
    }
    io.write_json(out / "fig2_summary.json", {k: v for k, v in report.items() if k != "rows"})
    io.write_manifest(out, cfg.experiment, cfg.to_dict(), cfg.seeds, report["paths"])
    return report


# ---------------------------------------------------------------------------
# Baseline comparison
# ---------------------------------------------------------------------------


def _compare_point(task):
    mode, seed, shift, dim, train, n_train, n_eval, sampling = task
    P, Q = dz.shifted_gaussians(shift, dim)
    oracle = chi2_distance(P, Q).value
    row = {"mode": mode, "seed": seed, "oracle": oracle}
    try:
        cfg = TrainConfig(**{**train, "seed": seed, "mode": mode})
        r = estimate_ipm(P, Q, cfg, n_train=n_train, n_eval=n_eval, sampling=sampling)
        est = r.estimate
        row.update(estimate=est, stderr=r.stderr,
                   abs_error=abs(est - oracle) if math.isfinite(est) else None,
                   wall_ms=median_wall_ms(r.fit.wall_ms),
                   diverged=bool(r.fit.diverged or not math.isfinite(est)),
                   lambda_final=r.fit.state.alm.lam, error=None)
    except Exception as exc:  # per-mode failures are recorded, not fatal
        row.update(estimate=None, stderr=None, abs_error=None, wall_ms=None, diverged=True,
                   lambda_final=None, error=f"{type(exc).__name__}: {exc}")
    return row


def run_baseline_compare(cfg: ExperimentConfig):
    """Every constraint mode on one shifted-Gaussian estimation task, same seeds."""
    train = cfg.train_config().to_dict()
    train.pop("mode")
    n_train = int(cfg.n_train[-1])
    tasks = [(str(m), int(s), float(cfg.shift), cfg.dim, train, n_train, cfg.n_eval, cfg.sampling)
             for m in cfg.modes for s in cfg.seeds]
    rows = _run_pool(_compare_point, tasks, cfg.workers)
    out = cfg.out()
    path = out / "compare.csv"
    _write_rows(path, rows, ["mode", "seed", "oracle", "estimate", "stderr", "abs_error",
                             "wall_ms", "diverged", "lambda_final", "error"])
    by_mode = {}
    for m in cfg.modes:
        rs = [r for r in rows if r["mode"] == m]
        walls = [r["wall_ms"] for r in rs if r["wall_ms"] is not None]
        errs = [r["abs_error"] for r in rs if r["abs_error"] is not None]
        by_mode[m] = {
            "median_wall_ms": float(np.median(walls)) if walls else None,
            "mean_abs_error": float(np.mean(errs)) if errs else None,
            "any_diverged": any(r["diverged"] for r in rs),
        }
    report = {"rows": rows, "by_mode": by_mode, "paths": [str(path)]}
    io.write_json(out / "compare_summary.json", by_mode)
    io.write_manifest(out, cfg.experiment, cfg.to_dict(), cfg.seeds, report["paths"])
    return report


# ---------------------------------------------------------------------------
# Toy GAN and semi-supervised toy
# ---------------------------------------------------------------------------


def run_toy_gan(cfg: ExperimentConfig):
    data = dz.from_dict(cfg.data or TOY_RING)
    report = {"runs": [], "paths": []}
    out = cfg.out()
    for seed in cfg.seeds:
        tc = cfg.train_config(seed=int(seed))
        run_dir = out / f"seed{seed}"
        run_dir.mkdir(parents=True, exist_ok=True)
        res = train_gan(data, tc, checkpoint_dir=run_dir / "checkpoints")
        csv_path = run_dir / "metrics.csv"
        io.write_metrics_csv(csv_path, res.metrics)
        io.save_params(run_dir / "generator.fipm", res.generator, res.generator_spec)
        io.save_params(run_dir / "critic.fipm", res.critic, res.critic_model.spec)
        gen = res.sample(8000, seed=int(seed) + 1)
        run = {"seed": int(seed), "lambda_final": res.extra["lam"]}
        om = np.array([m.omega_hat for m in res.metrics if m.iter > 0.9 * tc.iterations])
        run["omega_tail"] = float(np.mean(np.abs(om - 1.0))) if om.size else None
        proxies = [(m.iter, m.chi2_kde_proxy) for m in res.metrics if m.chi2_kde_proxy is not None]
        run["proxy"] = proxies
        paths = [csv_path, *emit_plots(csv_path, run_dir)]
        if isinstance(data, dz.Ring):
            cov = mode_coverage(gen, data.centers)
            run["coverage"] = cov.tolist()
            run["min_coverage"] = float(cov.min())
            ref = data.sample(2000, int(seed))
            paths.append(plot_samples(ref, gen, run_dir / "samples.svg", data.centers))
        io.write_json(run_dir / "summary.json", run)
        io.write_manifest(run_dir, cfg.experiment, cfg.to_dict(), [seed], paths)
        report["runs"].append(run)
        report["paths"] += [str(p) for p in paths]
    return report


def run_ssl_toy(cfg: ExperimentConfig):
    data = dz.from_dict(cfg.data) if cfg.data else dz.three_class_mixture()
    ssl = SslConfig(**{"n_classes": data.n_classes, **cfg.ssl})
    out = cfg.out()
    report = {"runs": [], "paths": []}
    for seed in cfg.seeds:
        tc = cfg.train_config(seed=int(seed))
        res = train_ssl(data, ssl, tc)
        summary = res.summary(int(seed))
        summary["supervised_baseline"] = supervised_baseline(data, ssl, tc)
        run_dir = out / f"seed{seed}"
        run_dir.mkdir(parents=True, exist_ok=True)
        csv_path = run_dir / "metrics.csv"
        io.write_metrics_csv(csv_path, res.metrics)
        io.write_json(run_dir / "accuracy.json", summary)
        io.write_manifest(run_dir, cfg.experiment, cfg.to_dict(), [seed],
                          [csv_path, run_dir / "accuracy.json"])
        report["runs"].append(summary)
        report["paths"] += [str(csv_path), str(run_dir / "accuracy.json")]
    return report


RUNNERS = {
    "fig2_sweep": run_fig2,
    "oracle_check": run_oracle_check,
    "toy_gan": run_toy_gan,
    "ssl_toy": run_ssl_toy,
    "baseline_compare": run_baseline_compare,
}


def run(cfg: ExperimentConfig):
    return RUNNERS[cfg.experiment](cfg)
