"""Command-line front end.

Subcommands cover each laboratory area: ``simulate`` (Monte Carlo trials and
their moment records), ``walk-dp`` (exact or float sequence tables),
``series-verify`` (the exact identity suite), ``asymptotics`` (rescaled
large-n checks and constants), ``clt`` (the rescaled linear statistic),
``potlach`` (the vertex-redistribution contrast), and ``accept`` (the whole
acceptance suite).

Configuration can come from ``--config FILE`` with one ``key=value`` per
line and ``#`` comments; explicit flags override the file, and unknown keys
in the file are rejected. Tolerance gates are overridden with
``--tol.<name> <value>``. Exit codes: 0 success, 1 a tolerance/acceptance
gate failed, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__, acceptance, reporting
from .asymptotics import AsymptoticConstants, asymptotics_check
from .kernels import avg_difference_kernel, potlach_kernels, srw_kernel
from .lattice import Box
from .series import verify_closed_form_d1, verify_gf_relations, verify_potlach_relation
from .simulate import ExperimentConfig, simulate
from .stats import clt_statistic, estimate_mean_field, estimate_moments
from .walks import first_passage_sequences, poissonized_return, return_sequence

KERNELS = {
    "srw": srw_kernel,
    "avg-diff": avg_difference_kernel,
    "potlach-ind": lambda d: potlach_kernels(d)[0],
    "potlach-coup": lambda d: potlach_kernels(d)[1],
}

#: per-key parsers for config files (also the set of accepted keys)
CONFIG_TYPES = {
    "d": int, "t": float, "steps": int, "order": int, "trials": int,
    "seed": int, "mode": str, "dynamics": str, "kernel": str, "fn": str,
    "param": float, "out": str, "dump_field": str, "threads": int,
    "quick": None, "json_summary": None, "box_radius": int, "tables": str,
    "window": float,
}


class UsageError(Exception):
    pass


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def read_config_file(path: str) -> dict:
    """key=value lines with '#' comments; unknown keys are an error."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_TYPES:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        caster = CONFIG_TYPES[key]
        try:
            out[key] = _parse_bool(value) if caster is None else caster(value)
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return out


def extract_tolerance_flags(argv: list[str]) -> tuple[list[str], dict]:
    """Pull --tol.<name> [=]<value> pairs out of the raw argv."""
    rest, overrides = [], {}
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--tol."):
            body = tok[len("--tol."):]
            if "=" in body:
                name, value = body.split("=", 1)
            else:
                name = body
                i += 1
                if i >= len(argv):
                    raise UsageError(f"--tol.{name} needs a value")
                value = argv[i]
            try:
                overrides[name] = float(value)
            except ValueError as exc:
                raise UsageError(f"--tol.{name}: bad value {value!r}") from exc
        else:
            rest.append(tok)
        i += 1
    return rest, overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avgproc",
        description="exact-verification laboratory for mass-averaging dynamics on Z^d")
    parser.add_argument("--version", action="version", version=f"avgproc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value config file; flags override it")
        p.add_argument("--d", type=int, help="lattice dimension")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--mode", choices=("exact", "float"), help="arithmetic mode")
        p.add_argument("--out", help="CSV output path (default: stdout)")
        p.add_argument("--threads", type=int,
                       help="advisory worker cap, recorded in the artifact header")
        p.add_argument("--json-summary", action="store_true", default=None,
                       help="print a one-line JSON summary to stdout")

    p = sub.add_parser("simulate", help="run Monte Carlo trials and moment records")
    common(p)
    p.add_argument("--t", type=float, help="final time")
    p.add_argument("--trials", type=int)
    p.add_argument("--dynamics", choices=("averaging", "potlach"))
    p.add_argument("--box-radius", type=int, help="torus radius (default: 6 sigma + 5)")
    p.add_argument("--dump-field", help="also write the mean field as a per-site CSV")

    p = sub.add_parser("walk-dp", help="sequence tables by dynamic programming")
    common(p)
    p.add_argument("--kernel", choices=sorted(KERNELS))
    p.add_argument("--steps", type=int, help="largest step index")
    p.add_argument("--tables", help="comma list from p,q,r,s (default p)")

    p = sub.add_parser("series-verify", help="exact generating-function identity suite")
    common(p)
    p.add_argument("--order", type=int, help="truncation order")

    p = sub.add_parser("asymptotics", help="rescaled large-n sequence checks")
    common(p)
    p.add_argument("--kernel", choices=sorted(KERNELS))
    p.add_argument("--steps", type=int, help="largest step index")

    p = sub.add_parser("clt", help="rescaled linear statistic over trials")
    common(p)
    p.add_argument("--t", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--fn", help="test function: cos, one, tanh, gauss")
    p.add_argument("--param", type=float, help="test-function parameter")
    p.add_argument("--window", type=float, help="|stat - limit| window to count")

    p = sub.add_parser("potlach", help="vertex-redistribution series relation and contrast")
    common(p)
    p.add_argument("--order", type=int, help="relation truncation order")
    p.add_argument("--steps", type=int, help="float sequence length for the ratio")

    p = sub.add_parser("accept", help="run the acceptance suite")
    common(p)
    p.add_argument("--quick", action="store_true", default=None,
                   help="reduced sizes for a fast end-to-end check")
    return parser


DEFAULTS = {
    "simulate": dict(d=1, t=64.0, trials=1000, seed=0, mode="float",
                     dynamics="averaging", box_radius=None, out=None,
                     dump_field=None, json_summary=False, threads=None),
    "walk-dp": dict(d=1, kernel="avg-diff", steps=32, mode="exact",
                    tables="p", seed=0, out=None, json_summary=False, threads=None),
    "series-verify": dict(d=1, order=None, seed=0, out=None,
                          json_summary=False, threads=None, mode="exact"),
    "asymptotics": dict(d=1, kernel="avg-diff", steps=2000, seed=0, out=None,
                        json_summary=False, threads=None, mode="float"),
    "clt": dict(d=1, t=400.0, trials=100, seed=0, fn="cos", param=1.0,
                window=0.05, mode="float", out=None, json_summary=False, threads=None),
    "potlach": dict(d=1, order=48, steps=600, seed=0, out=None,
                    json_summary=False, threads=None, mode="exact"),
    "accept": dict(quick=False, seed=acceptance.DEFAULT_SEED, out=None,
                   json_summary=False, threads=None, d=None, mode=None),
}


def resolve_options(args: argparse.Namespace) -> dict:
    """defaults < config file < explicit flags."""
    opts = dict(DEFAULTS[args.command])
    if getattr(args, "config", None):
        for key, value in read_config_file(args.config).items():
            if key in opts:
                opts[key] = value
            else:
                raise UsageError(f"config key {key!r} not used by {args.command!r}")
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        opts[key] = value
    return opts


def _hashable(opts: dict) -> dict:
    return {k: v for k, v in opts.items()
            if k not in ("out", "dump_field", "json_summary") and v is not None}


def _emit(opts, columns, rows, comments=()) -> None:
    text = reporting.write_csv(opts.get("out"), columns, rows,
                               seed=opts.get("seed", ""),
                               config=_hashable(opts), comments=comments)
    if opts.get("out") is None:
        sys.stdout.write(text)


def _summary(opts, payload: dict) -> None:
    if opts.get("json_summary"):
        print(json.dumps(payload, sort_keys=True))


STAT_COLUMNS = ("name", "d", "t", "trials", "seed", "value", "stderr", "target", "z")


def cmd_simulate(opts, tol) -> int:
    cfg = ExperimentConfig(dimension=opts["d"], t=opts["t"], trials=opts["trials"],
                           seed=opts["seed"], dynamics=opts["dynamics"],
                           mode=opts["mode"], box_radius=opts["box_radius"])
    res = simulate(cfg)
    rows, extras = [], {}
    if cfg.dynamics == "averaging":
        mo = estimate_moments(res)
        mf = estimate_mean_field(res)
        frac = mf.fraction_within(tol["c6-mf-se"])
        for rec in (mo.two_norm, mo.centered_two_norm, mo.centered_one_norm):
            rows.append(rec.csv_row())
        rows.append(("conservation-defect", cfg.dimension, repr(cfg.t), cfg.trials,
                     cfg.seed, repr(mo.conservation_defect), "", repr(0.0), ""))
        rows.append(("mean-field-fraction", cfg.dimension, repr(cfg.t), cfg.trials,
                     cfg.seed, repr(frac), "", repr(1.0), ""))
        extras = {"two_norm_z": mo.two_norm.z, "mean_field_fraction": frac,
                  "conservation_defect": mo.conservation_defect}
    else:
        totals = res.totals().astype(float)
        defect = float(np.abs(totals - 1.0).max())
        norms = res.two_norms_sq().astype(float)
        rows.append(("two-norm-sq", cfg.dimension, repr(cfg.t), cfg.trials, cfg.seed,
                     repr(float(norms.mean())),
                     repr(float(norms.std(ddof=1) / math.sqrt(cfg.trials))), "", ""))
        rows.append(("conservation-defect", cfg.dimension, repr(cfg.t), cfg.trials,
                     cfg.seed, repr(defect), "", repr(0.0), ""))
        extras = {"conservation_defect": defect}
    _emit(opts, STAT_COLUMNS, rows)
    if opts.get("dump_field"):
        mean = res.mean_field()
        reporting.write_csv(opts["dump_field"],
                            ("site", *(f"x{j}" for j in range(cfg.dimension)), "mass"),
                            reporting.field_dump_rows(res.box, np.asarray(mean, dtype=float)),
                            seed=cfg.seed, config=_hashable(opts))
    _summary(opts, {"command": "simulate", "ok": True, **extras})
    return 0


def cmd_walk_dp(opts, tol) -> int:
    kernel = KERNELS[opts["kernel"]](opts["d"])
    names = [t.strip() for t in opts["tables"].split(",") if t.strip()]
    unknown = set(names) - {"p", "q", "r", "s"}
    if unknown:
        raise UsageError(f"unknown tables {sorted(unknown)}; choose from p,q,r,s")
    tables = []
    if "p" in names:
        tables.append(return_sequence(kernel, opts["steps"], mode=opts["mode"]))
    if {"q", "r", "s"} & set(names):
        q, r, s = first_passage_sequences(kernel, opts["steps"], mode=opts["mode"])
        for name, tab in (("q", q), ("r", r), ("s", s)):
            if name in names:
                tables.append(tab)
    rows = [row for tab in tables for row in tab.csv_rows()]
    _emit(opts, ("name", "n", "numerator", "denominator", "float_value"), rows)
    _summary(opts, {"command": "walk-dp", "ok": True,
                    "tables": [t.name for t in tables]})
    return 0


def cmd_series_verify(opts, tol) -> int:
    d = opts["d"]
    reports = verify_gf_relations(d, opts["order"])
    if d == 1:
        order = opts["order"] or 64
        reports += verify_closed_form_d1(order)
    rows = []
    for rep in reports:
        defect = rep.first_defect
        rows.append((rep.name, rep.dimension, rep.order,
                     "ok" if rep.ok else "fail",
                     "" if defect is None else defect[0],
                     "" if defect is None else str(defect[1])))
    _emit(opts, ("identity", "d", "order", "status", "defect_order", "defect_value"), rows)
    ok = all(r.ok for r in reports)
    _summary(opts, {"command": "series-verify", "ok": ok,
                    "identities": len(reports)})
    return 0 if ok else 1


def cmd_asymptotics(opts, tol) -> int:
    d = opts["d"]
    kernel = KERNELS[opts["kernel"]](d)
    seq = return_sequence(kernel, opts["steps"], mode=opts["mode"])
    constants = AsymptoticConstants.compute(d) if d >= 3 else None
    rows_ = asymptotics_check(seq, constants=constants)
    comments = []
    if constants is not None:
        comments.append(f"alpha={constants.alpha!r},alpha_error={constants.alpha_error!r},"
                        f"oscillation={constants.oscillation!r}")
    if constants is None:
        constants = AsymptoticConstants.compute(d)
    comments.append(f"beta={constants.beta!r}")
    _emit(opts, ("n", "value", "rescaled", "target", "deviation"),
          [(r.n, repr(r.value), repr(r.rescaled), repr(r.target), repr(r.deviation))
           for r in rows_], comments=comments)
    _summary(opts, {"command": "asymptotics", "ok": True, "rows": len(rows_)})
    return 0


def cmd_clt(opts, tol) -> int:
    cfg = ExperimentConfig(dimension=opts["d"], t=opts["t"], trials=opts["trials"],
                           seed=opts["seed"], mode="float")
    res = simulate(cfg)
    rep = clt_statistic(res, opts["fn"], opts["param"], tolerance=opts["window"])
    rows = [rep.record.csv_row(),
            ("fraction-within", cfg.dimension, repr(cfg.t), cfg.trials, cfg.seed,
             repr(rep.fraction_within), "", repr(1.0), "")]
    _emit(opts, STAT_COLUMNS, rows,
          comments=[f"fn={opts['fn']},param={opts['param']!r},window={opts['window']!r}"])
    _summary(opts, {"command": "clt", "ok": True, "mean": rep.record.value,
                    "target": rep.record.target,
                    "fraction_within": rep.fraction_within})
    return 0


def cmd_potlach(opts, tol) -> int:
    d = opts["d"]
    rep = verify_potlach_relation(d, opts["order"])
    ind, coup = potlach_kernels(d)
    pc = return_sequence(coup, opts["steps"], mode="float")
    pi = return_sequence(ind, opts["steps"], mode="float")
    rows = [("series-relation", d, rep.order, "ok" if rep.ok else "fail", "", "")]
    ok = rep.ok
    for t in (100.0, 150.0, 200.0):
        try:
            a, _ = poissonized_return(pc, 2.0, t)
            b, _ = poissonized_return(pi, 2.0, t)
        except Exception as exc:
            raise UsageError(f"--steps too small for t={t:g}: {exc}") from exc
        ratio = a / b
        inside = tol["c8-lo"] <= ratio <= tol["c8-hi"]
        ok = ok and inside
        rows.append((f"coincidence-ratio-t{t:g}", d, opts["steps"],
                     "ok" if inside else "fail", "", repr(ratio)))
    _emit(opts, ("check", "d", "order", "status", "defect_order", "value"), rows)
    _summary(opts, {"command": "potlach", "ok": ok})
    return 0 if ok else 1


def cmd_accept(opts, tol) -> int:
    results = acceptance.run_acceptance(quick=opts["quick"], tolerances=tol,
                                        seed=opts["seed"])
    rows = [(r.number, r.name, "pass" if r.passed else "fail", r.detail)
            for r in results]
    if opts.get("out"):
        reporting.write_csv(opts["out"], ("criterion", "name", "status", "detail"),
                            rows, seed=opts["seed"], config=_hashable(opts))
    ok = all(r.passed for r in results)
    _summary(opts, {"command": "accept", "ok": ok, "quick": bool(opts["quick"]),
                    "criteria": {r.number: r.passed for r in results}})
    return 0 if ok else 1


COMMANDS = {
    "simulate": cmd_simulate,
    "walk-dp": cmd_walk_dp,
    "series-verify": cmd_series_verify,
    "asymptotics": cmd_asymptotics,
    "clt": cmd_clt,
    "potlach": cmd_potlach,
    "accept": cmd_accept,
}


def run(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        argv, overrides = extract_tolerance_flags(list(argv))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        tol = acceptance.merged_tolerances(overrides)
        opts = resolve_options(args)
        return COMMANDS[args.command](opts, tol)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
