"""Command-line interface: ``ppest <subcommand> [options]``.

Records go to standard output as JSON lines (insertion-ordered keys) or,
with ``--format csv``, as one CSV table.  Exit status is 0 on success, 2 on
a usage or input error and 3 on a numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from .estimator import SplitHistogram, bias_bound, build_property_model, estimate_property, variance_bound
from .exceptions import BadParam, CapExceeded, DomainError, NonConvergence, NoSolution, SpecMismatch
from .harness import fixture, read_counts, read_sequence, run_trials
from .partition import PartitionConfig
from .privacy import (
    exhaustive_sensitivity,
    private_estimate,
    private_sample_complexity,
    profile_quantities,
    sensitivity_bound,
)
from .properties import BUILTIN_PROPERTIES, builtin_spec

EXIT_USAGE = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        values = [int(float(t)) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("values must be positive integers")
    return values


def _float_list(text: str) -> list[float]:
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _add_config(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("partition")
    g.add_argument("--c", type=float, default=2.0, help="interval-width constant (default 2)")
    g.add_argument("--lambda", dest="lam", type=float, default=0.1, help="degree exponent (default 0.1)")
    g.add_argument("--degree-mode", choices=("paper", "practical"), default="paper")
    g.add_argument("--degree-coef", type=float, default=1.6, help="practical degree is floor(coef * ln n)")
    g.add_argument("--degree", type=int, default=None, help="fixed polynomial degree (overrides the mode)")


def _add_property(p: argparse.ArgumentParser, need_k: bool = True) -> None:
    names = [*BUILTIN_PROPERTIES, *(b.replace("_", "-") for b in BUILTIN_PROPERTIES if "_" in b)]
    p.add_argument("--property", required=True, choices=names)
    p.add_argument("--k", type=int, required=need_k, default=None, help="alphabet size")
    p.add_argument("--a", type=float, default=None, help="power-sum order")
    p.add_argument("--m", type=int, default=None, help="support-coverage parameter")
    p.add_argument("--q", default=None, help="reference distribution for l1_distance (comma list)")


def _spec(args, k):
    params = {}
    if args.a is not None:
        params["a"] = args.a
    if args.m is not None:
        params["m"] = args.m
    if args.q is not None:
        params["q"] = _float_list(args.q)
    return builtin_spec(args.property, k, **params)


def _cfg(args, n) -> PartitionConfig:
    return PartitionConfig(
        n, c=args.c, lam=args.lam, degree_mode=args.degree_mode, degree_coef=args.degree_coef, degree=args.degree
    )


def _emit(records: list[dict], fmt: str, out) -> None:
    if fmt == "csv":
        writer = csv.DictWriter(out, fieldnames=list(records[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(records)
    else:
        for rec in records:
            out.write(json.dumps(rec) + "\n")


def _load_hist(args):
    rng = np.random.default_rng(args.seed)
    if args.raw:
        symbols, c1, c2, size = read_sequence(args.counts, rng, args.k)
        n = args.n if args.n is not None else max(1, round(size / 2))
    else:
        if args.n is None:
            raise UsageError("--n is required with a counts file")
        symbols, c1, c2 = read_counts(args.counts, args.k)
        n = args.n
    return symbols, SplitHistogram(c1, c2, n), rng


def _estimate_record(est, spec, eps_grid) -> dict:
    rec = {"property": spec.name, "k": est.k, "n": est.n, "value": est.value,
           "bias_bound": est.bias_bound, "variance_bound": est.variance_bound}
    for eps in eps_grid:
        rec[f"tail_bound@{eps:g}"] = est.tail_bound(eps)
    rec.update({f"cfg_{key}": v for key, v in est.config.items()})
    return rec


def cmd_estimate(args, out) -> None:
    symbols, hist, _ = _load_hist(args)
    spec = _spec(args, hist.k)
    est = estimate_property(spec, _cfg(args, hist.n), hist)
    _emit([_estimate_record(est, spec, args.eps)], "json", out)


def cmd_private_estimate(args, out) -> None:
    symbols, hist, rng = _load_hist(args)
    spec = _spec(args, hist.k)
    res = private_estimate(spec, _cfg(args, hist.n), hist, args.alpha, rng)
    rec = {
        "property": spec.name,
        "k": hist.k,
        "n": hist.n,
        "private_value": res.value,
        "value": res.estimate.value,
        "alpha": res.params.alpha,
        "sensitivity": res.params.noise_scale * res.params.alpha,
        "analytic_sensitivity": res.sensitivity.analytic,
        "certified": res.sensitivity.certified,
        "noise_scale": res.params.noise_scale,
        "seed": args.seed,
    }
    _emit([rec], "json", out)


def cmd_simulate(args, out) -> None:
    spec = _spec(args, args.k)
    dist = fixture(args.dist, args.k, **({"s": args.s} if args.dist == "zipf" and args.s is not None else {}))
    records = []
    for n in args.n:
        cfg = _cfg(args, n)
        rep = run_trials(spec, dist, cfg, args.trials, args.seed, eps_grid=args.eps, min_trials=args.min_trials)
        records.append(rep.as_record(timing=args.timing))
    _emit(records, args.format, out)


def cmd_bounds(args, out) -> None:
    spec = _spec(args, args.k)
    p = fixture(args.dist, args.k).probabilities if args.dist else None
    records = []
    for n in args.n:
        cfg = _cfg(args, n)
        model = build_property_model(spec, cfg)
        zeros = np.zeros(spec.k, dtype=np.int64)
        est = estimate_property(spec, cfg, SplitHistogram(zeros, zeros, n), model, p=p)
        assignment = spec.function_index()
        sens = sensitivity_bound(cfg, model.profiles, T=model.T)
        rec = {
            "n": n,
            "c_n": cfg.c_n,
            "M_n": cfg.M_n,
            "d_n": cfg.d_n,
            "variance_exponent": 4 * cfg.lam - 1,
            "Dstar_global": max(pr.Dstar_global for pr in model.profiles),
            "Lstar_global": max(pr.Lstar_global for pr in model.profiles),
            "bias_bound": est.bias_bound,
            "bias_bound_derived": bias_bound(cfg, model.profiles, p=p, assignment=assignment, form="derived"),
            "bias_bound_envelope": bias_bound(cfg, model.profiles, p=p, assignment=assignment, form="envelope"),
            "variance_bound": est.variance_bound,
            "variance_bound_detailed": variance_bound(
                cfg, model.profiles, p=p, assignment=assignment, form="detailed", T=model.T
            ),
            "sensitivity": sens.analytic,
            "sensitivity_certified": sens.certified,
        }
        for eps in args.eps:
            rec[f"tail_bound@{eps:g}"] = est.tail_bound(eps)
        records.append(rec)
    _emit(records, args.format, out)


def cmd_sensitivity(args, out) -> None:
    spec = _spec(args, args.k)
    records = []
    for n in args.n:
        cfg = _cfg(args, n)
        model = build_property_model(spec, cfg)
        rep = sensitivity_bound(cfg, model.profiles, T=model.T)
        target = model.tables[0] if spec.k == 1 else model
        ex = exhaustive_sensitivity(target, args.cap)
        records.append({
            "property": spec.name,
            "k": spec.k,
            "n": n,
            "exhaustive": ex,
            "analytic": rep.analytic,
            "type1": rep.type1,
            "type2": rep.type2,
            "gap": rep.analytic - ex,
            "certified": rep.certified,
            "calibrated": rep.calibrated,
        })
    _emit(records, args.format, out)


def cmd_complexity(args, out) -> None:
    spec = _spec(args, args.k)
    cfg = _cfg(args, 1000)
    quantities = profile_quantities(spec, cfg)
    records = []
    for eps in args.eps:
        for alpha in args.alpha:
            a = None if math.isinf(alpha) else alpha
            try:
                n = private_sample_complexity(spec, eps, a, cfg, quantities=quantities, n_max=args.max_n)
            except NoSolution:
                n = None
            records.append({"property": spec.name, "k": spec.k, "eps": eps, "alpha": "inf" if a is None else a, "n": n})
    _emit(records, args.format, out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppest", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt=True):
        p.add_argument("--seed", type=int, default=0)
        if fmt:
            p.add_argument("--format", choices=("json", "csv"), default="json")

    for name, help_ in (("estimate", "estimate a property from split counts"),
                        ("private-estimate", "estimate and add Laplace noise")):
        p = sub.add_parser(name, help=help_)
        _add_property(p, need_k=False)
        _add_config(p)
        common(p, fmt=False)
        p.add_argument("--counts", required=True, help="CSV with header symbol,count1,count2 (or raw sample with --raw)")
        p.add_argument("--raw", action="store_true", help="counts file is one symbol per line; split by fair coin")
        p.add_argument("--n", type=int, default=None, help="per-half Poisson mean")
        if name == "private-estimate":
            p.add_argument("--alpha", type=float, default=1.0, help="privacy budget")
        else:
            p.add_argument("--eps", type=_float_list, default=[0.05, 0.1, 0.2])

    p = sub.add_parser("simulate", help="Monte Carlo trials on a fixture over an n-grid")
    _add_property(p)
    _add_config(p)
    common(p)
    p.add_argument("--dist", required=True, help="fixture: uniform, zipf, geometric, deterministic, p1, p2, p3")
    p.add_argument("--s", type=float, default=None, help="Zipf exponent")
    p.add_argument("--n", type=_int_list, required=True, help="comma-separated n-grid")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--min-trials", type=int, default=100, help=argparse.SUPPRESS)
    p.add_argument("--eps", type=_float_list, default=[0.05, 0.1, 0.2])
    p.add_argument("--timing", action="store_true", help="include wall-clock seconds")

    p = sub.add_parser("bounds", help="analytic bound table over an n-grid")
    _add_property(p)
    _add_config(p)
    common(p)
    p.add_argument("--n", type=_int_list, required=True)
    p.add_argument("--dist", default=None, help="fixture for local bounds (default: worst case)")
    p.add_argument("--eps", type=_float_list, default=[0.05, 0.1, 0.2])

    p = sub.add_parser("sensitivity", help="exhaustive versus analytic sensitivity")
    _add_property(p, need_k=False)
    _add_config(p)
    common(p)
    p.add_argument("--n", type=_int_list, required=True)
    p.add_argument("--cap", type=int, default=10**6, help="largest number of scanned (count1, count2) states")

    p = sub.add_parser("complexity", help="private sample complexity over eps and alpha")
    _add_property(p)
    _add_config(p)
    common(p)
    p.add_argument("--eps", type=_float_list, required=True)
    p.add_argument("--alpha", type=_float_list, default=[1.0], help="'inf' drops the privacy condition")
    p.add_argument("--max-n", type=int, default=2**24, help="scan cap (default 2**24)")
    return parser


COMMANDS = {
    "estimate": cmd_estimate,
    "private-estimate": cmd_private_estimate,
    "simulate": cmd_simulate,
    "bounds": cmd_bounds,
    "sensitivity": cmd_sensitivity,
    "complexity": cmd_complexity,
}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "k", None) is None and args.command == "sensitivity":
        args.k = 1
    try:
        COMMANDS[args.command](args, out)
    except (UsageError, BadParam, SpecMismatch, DomainError, CapExceeded, OSError) as exc:
        print(f"ppest {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonConvergence, ArithmeticError, FloatingPointError) as exc:
        print(f"ppest {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
