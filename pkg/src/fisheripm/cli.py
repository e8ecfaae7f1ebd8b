"""Command line entry point ``fisheripm``.

Exit status: 0 on success, 1 when a run fails, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import distributions as dz
from . import experiments as ex
from . import io
from .errors import ConfigError, FisherIPMError, MalformedCsv
from .plots import emit_plots

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2

COMMANDS = {
    "oracle": "oracle_check",
    "estimate": None,
    "fig2": "fig2_sweep",
    "train-gan": "toy_gan",
    "train-ssl": "ssl_toy",
    "compare": "baseline_compare",
}


def _parser():
    ap = argparse.ArgumentParser(prog="fisheripm", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, exp in COMMANDS.items():
        p = sub.add_parser(name, help=f"run the {exp or 'single-pair estimation'} experiment")
        p.add_argument("-c", "--config", help="JSON experiment config")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config key (dotted, JSON value)")
        p.add_argument("-o", "--output", help="output directory (default: $FISHERIPM_OUTPUT/<experiment>)")
    for name in ("oracle", "estimate"):
        pe = sub.choices[name]
        pe.add_argument("--p", help="JSON distribution for P (default: N(0, I))")
        pe.add_argument("--q", help="JSON distribution for Q (default: N(shift e1, I))")
    pp = sub.add_parser("plot", help="render SVG traces from a metrics CSV")
    pp.add_argument("csv")
    pp.add_argument("-o", "--output", default=None)
    return ap


def _pair(args, cfg):
    try:
        if args.p or args.q or cfg.p or cfg.q:
            P = dz.from_json(args.p) if args.p else dz.from_dict(cfg.p)
            Q = dz.from_json(args.q) if args.q else dz.from_dict(cfg.q)
            return P, Q
    except (TypeError, KeyError, ValueError) as exc:
        raise ConfigError(f"bad distribution: {exc}") from exc
    return dz.shifted_gaussians(cfg.shift, cfg.dim)


def _config(args, experiment=None):
    overrides = list(args.overrides)
    if args.output:
        overrides.append(f"output_dir={json.dumps(args.output)}")
    return ex.load_config(args.config, overrides, experiment=experiment)


def _oracle(args):
    """Single-pair record; without a pair, the full oracle cross-check suite."""
    from .oracle import QuadratureConfig, chi2_distance, neyman_divergence, pearson_divergence

    cfg = _config(args, "oracle_check")
    if not (args.p or args.q or cfg.p or cfg.q):
        return _summarize("oracle_check", ex.run(cfg))
    P, Q = _pair(args, cfg)
    quad = QuadratureConfig(**cfg.quadrature)
    r = chi2_distance(P, Q, quad)
    rec = {"chi2": r.value, "error_estimate": r.error_estimate,
           "grid_config": {**quad.to_dict(), "points_per_axis_final": r.points_per_axis}}
    for name, fn in (("pearson", pearson_divergence), ("neyman", neyman_divergence)):
        try:
            rec[name] = fn(P, Q, quad).value
        except FisherIPMError as exc:
            rec[name] = None
            rec[f"{name}_error"] = f"{type(exc).__name__}: {exc}"
    return rec, True


def _estimate(args):
    from .fisher import estimate_ipm
    from .oracle import chi2_distance

    cfg = _config(args)
    P, Q = _pair(args, cfg)
    tc = cfg.train_config(seed=int(cfg.seeds[0]))
    oracle = chi2_distance(P, Q).value if P.dim <= 4 else None
    r = estimate_ipm(P, Q, tc, n_train=int(cfg.n_train[-1]), n_eval=cfg.n_eval,
                     sampling=cfg.sampling, chi2_oracle=oracle)
    out = cfg.out()
    csv_path = out / "metrics.csv"
    io.write_metrics_csv(csv_path, r.fit.metrics)
    io.save_params(out / "critic.fipm", r.critic, tc.critic)
    summary = {"estimate": r.estimate, "stderr": r.stderr, "oracle": oracle,
               "diverged": r.fit.diverged, "lambda": r.fit.state.alm.lam}
    io.write_json(out / "estimate.json", summary)
    io.write_manifest(out, "estimate", {**cfg.to_dict(), "p": P.to_dict(), "q": Q.to_dict()},
                      [tc.seed], [csv_path, out / "critic.fipm", out / "estimate.json"])
    return summary, not r.fit.diverged


def _summarize(name, report):
    if name == "oracle_check":
        return {"ok": report["ok"], "rows": report["rows"]}, report["ok"]
    if name == "fig2_sweep":
        keep = {k: v for k, v in report.items() if k != "rows"}
        return keep, not any(r["diverged"] for r in report["rows"])
    if name == "baseline_compare":
        return report["by_mode"], True
    return {k: v for k, v in report.items() if k != "paths"}, True


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "plot":
            out = args.output or str(Path(args.csv).with_suffix("")) + "_plots"
            paths = emit_plots(args.csv, out)
            print(json.dumps({"paths": paths}, indent=2))
            return EXIT_OK
        if args.command == "estimate":
            summary, ok = _estimate(args)
        elif args.command == "oracle":
            summary, ok = _oracle(args)
        else:
            exp = COMMANDS[args.command]
            summary, ok = _summarize(exp, ex.run(_config(args, exp)))
        print(json.dumps(io._jsonable(summary), indent=2, sort_keys=True))
        return EXIT_OK if ok else EXIT_FAILURE
    except (ConfigError, MalformedCsv) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FisherIPMError, FloatingPointError, OSError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
