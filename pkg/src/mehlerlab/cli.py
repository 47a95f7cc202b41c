"""Batch front-end: build a model from a run configuration, execute the
hypothesis checks, the sampler, or the inequality suites, and write CSV and
JSON reports.

Exit codes: 0 all pass, 1 at least one fail verdict or hypothesis failure,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .harness import SUITE_NAMES, SuiteContext, run_suites
from .models import MODEL_BUILDERS, model_from_config
from .sampling import JumpScheme, RandomStream, export_samples_csv, \
    sample_invariant, sample_mu_t

DEFAULT_OUT_ENV = "MEHLERLAB_OUT"

_CONFIG_KEYS = {
    "model", "model_params", "suites", "samples", "tail_samples", "seed",
    "chains", "out_dir", "jump_cutoff", "small_jump_policy", "sample_method",
    "sample_time", "domination_times",
}


class ConfigError(ValueError):
    pass


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, rows, columns):
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row.get(c, "")).replace(",", ";")
                              for c in columns) + "\n")


def load_config(args) -> dict:
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}")
        unknown = set(cfg) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if args.model is not None:
        cfg["model"] = args.model
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.samples is not None:
        cfg["samples"] = args.samples
    if args.chains is not None:
        cfg["chains"] = args.chains
    if args.suite is not None:
        cfg["suites"] = [s.strip() for s in args.suite.split(",")
                         if s.strip()]
    if args.out is not None:
        cfg["out_dir"] = args.out
    cfg.setdefault("out_dir", os.environ.get(DEFAULT_OUT_ENV, "."))
    if "model" not in cfg:
        raise ConfigError("a model name is required (--model or config)")
    if cfg["model"] not in MODEL_BUILDERS:
        raise ConfigError(f"unknown model {cfg['model']!r}; choose from "
                          f"{sorted(MODEL_BUILDERS)}")
    for name in cfg.get("suites", []):
        if name not in SUITE_NAMES:
            raise ConfigError(f"unknown suite {name!r}; choose from "
                              f"{SUITE_NAMES}")
    return cfg


def _scheme(cfg):
    kwargs = {}
    if "jump_cutoff" in cfg:
        kwargs["small_jump_cutoff"] = float(cfg["jump_cutoff"])
    if "small_jump_policy" in cfg:
        kwargs["small_jump_policy"] = cfg["small_jump_policy"]
    return JumpScheme(**kwargs)


def _build_model(cfg):
    return model_from_config(cfg["model"], cfg.get("model_params"))


def cmd_hypotheses(cfg) -> int:
    model = _build_model(cfg)
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    rep = model.evolved.hypothesis_report()
    rows = []
    for cl in rep.clauses:
        rows.append({
            "check": cl.clause, "verdict": cl.label,
            "value": "" if cl.value is None else cl.value,
            "bound": "" if cl.bound is None else cl.bound,
            "model": model.name, "note": cl.note,
        })
    all_ok = rep.all_pass
    for t in cfg.get("domination_times", (0.1, 1.0, 5.0)):
        res = model.evolved.domination_margin(model.h, float(t))
        rows.append({
            "check": f"domination(t={t:g})",
            "verdict": "pass" if res.passed else "fail",
            "value": res.worst_margin, "bound": -1e-10,
            "model": model.name,
            "note": f"h(t) = {model.h_repr}; worst normalised margin",
        })
        all_ok = all_ok and res.passed
    write_csv(out_dir / "hypotheses.csv", rows,
              ["check", "verdict", "value", "bound", "model", "note"])
    for row in rows:
        print(f"{row['check']:<28} {row['verdict']}")
    return 0 if all_ok else 1


def cmd_verify(cfg) -> int:
    if "seed" not in cfg:
        raise ConfigError("verification runs require an explicit seed")
    model = _build_model(cfg)
    ctx = SuiteContext(
        model=model,
        seed=int(cfg["seed"]),
        n_samples=int(cfg.get("samples", 100_000)),
        tail_samples=cfg.get("tail_samples"),
        chains=int(cfg.get("chains", 1)),
        scheme=_scheme(cfg),
    )
    results = run_suites(ctx, cfg.get("suites"))
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for res in results:
        rec = res.to_record()
        rec["seed"] = ctx.seed
        rec["N"] = ctx.n_samples
        rows.append(rec)
    columns = ["name", "model", "function", "seed", "N", "lhs", "lhs_se",
               "rhs", "rhs_se", "constant", "margin", "verdict",
               "constant_note"]
    write_csv(out_dir / "verify.csv", rows, columns)
    with open(out_dir / "verify.json", "w") as fh:
        json.dump(rows, fh, indent=1, default=str)
    fails = [r for r in rows if r["verdict"] == "fail"]
    indet = [r for r in rows if r["verdict"] == "indeterminate"]
    print(f"{len(rows)} checks: {len(rows) - len(fails) - len(indet)} pass, "
          f"{len(indet)} indeterminate, {len(fails)} fail")
    for r in indet:
        print(f"  indeterminate: {r['name']} on {r['function']}")
    for r in fails:
        print(f"  FAIL: {r['name']} on {r['function']} "
              f"(margin {r['margin']:.3g})")
    return 1 if fails else 0


def cmd_sample(cfg) -> int:
    model = _build_model(cfg)
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    n = int(cfg.get("samples", 10_000))
    seed = int(cfg.get("seed", 0))
    method = cfg.get("sample_method", "direct")
    scheme = _scheme(cfg)
    rng = RandomStream(seed)
    if method in ("direct", "long_horizon"):
        draws = sample_invariant(model.evolved, n, scheme, rng,
                                 method=method,
                                 chains=int(cfg.get("chains", 1)))
    elif method == "marginal":
        t = float(cfg.get("sample_time", 1.0))
        draws = sample_mu_t(model.evolved, t, n, scheme, rng,
                            chains=int(cfg.get("chains", 1)))
    else:
        raise ConfigError(f"unknown sample_method {method!r}")
    export_samples_csv(np.atleast_2d(draws), out_dir / "samples.csv")
    print(f"wrote {n} draws from {model.name} ({method}) to "
          f"{out_dir / 'samples.csv'}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mehlerlab",
        description="Hypothesis checks, invariant-measure sampling, and "
                    "inequality verification for jump-driven OU models")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
            ("hypotheses", "check the standing assumptions for a model"),
            ("verify", "run the inequality verification suites"),
            ("sample", "draw from the invariant or marginal law")]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", type=str, default=None,
                       help="JSON run configuration")
        p.add_argument("--model", type=str, default=None,
                       choices=sorted(MODEL_BUILDERS))
        p.add_argument("--suite", type=str, default=None,
                       help="comma-separated suite list")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--samples", type=int, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--chains", type=int, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        if args.command == "hypotheses":
            return cmd_hypotheses(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "sample":
            return cmd_sample(cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
