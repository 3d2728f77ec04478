"""Command line entry point.

    contoureig solve  --problem jordan:"(0.3,0,2)" --method ss_rr --L 2 --M 2 --N 16
    contoureig bench  --config desk.cfg [--output rows.csv]
    contoureig verify [--strict]
    contoureig filter --region circle:0,0,1 --N 32 --axis real:-2:2:401
    contoureig gen    --problem jordan:"(0.5,0,2),INF,1" --out problem.txt

Settings come from the built-in defaults, then ``--config``, then flags.
Exit codes: 0 success, 1 configuration error, 2 solver failure.
"""

import argparse
import csv
import sys

import numpy as np

from ..errors import ConfigError, ContourEigError
from ..quadrature import build_rule, filter_profile
from ..solvers import METHODS, SOLVERS, SolverConfig
from .bench import run_experiment, write_csv
from .config import FIELDS, build_config, parse_config_text, parse_value
from .io import build_problem, write_problem
from .verify import VerifyConfig, verify_suite

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2


def _add_config_flags(p, skip=()):
    p.add_argument("--config", help="key = value configuration file")
    for key in FIELDS:
        if key in skip:
            continue
        p.add_argument("--" + key.replace("_", "-"), dest="cfg_" + key, metavar="VALUE")


def _experiment_config(args):
    values, where = {}, {}
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as e:
            raise ConfigError(f"cannot read config file: {e}") from None
        values, where = parse_config_text(text)
    for key in FIELDS:
        raw = getattr(args, "cfg_" + key, None)
        if raw is not None:
            values[key] = parse_value(key, raw)
            where.pop(key, None)
    return build_config(values, where)


def _cmd_solve(args, out):
    cfg = _experiment_config(args)
    L = args.L if args.L is not None else cfg.sweep[0][0]
    M = args.M if args.M is not None else cfg.sweep[0][1]
    try:
        scfg = SolverConfig(L=L, M=M, N=cfg.N, rank_cutoff=cfg.delta, seed=cfg.seed,
                            method=args.method, rule_kind=cfg.rule,
                            half_contour=cfg.half_contour, max_feast_iters=args.max_iters)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    pencil, _ = build_problem(cfg.problem, cfg.effective_problem_seed, cfg.conditioning)
    result = SOLVERS[args.method](pencil, cfg.region, scfg)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(("re", "im", "residual", "inside"))
    pairs = sorted(result.pairs, key=lambda p: (not p.inside, p.value.real, p.value.imag))
    for p in pairs:
        if p.inside or args.all:
            w.writerow((repr(float(p.value.real)), repr(float(p.value.imag)), repr(float(p.residual)),
                        "true" if p.inside else "false"))
    print(f"# method={args.method} L={L} M={M} N={cfg.N} mhat={result.mhat} "
          f"inside={len(result.inside)}", file=sys.stderr)
    for note in result.notes:
        print(f"# {note}", file=sys.stderr)
    return EXIT_OK


def _cmd_bench(args, out):
    cfg = _experiment_config(args)
    rows = run_experiment(cfg, log=sys.stderr)
    if not cfg.output:
        write_csv(rows, out, cfg.timing)
    return EXIT_OK


def _cmd_verify(args, out):
    kw = {}
    if args.seeds:
        try:
            kw["seeds"] = tuple(int(s) for s in args.seeds.split(","))
        except ValueError:
            raise ConfigError("seeds must be a comma separated list of integers",
                              field="seeds") from None
    if args.N is not None:
        kw["N"] = args.N
    if args.spec:
        kw["jordan_spec"] = args.spec
    if args.zero_weight is not None:
        kw["zero_weight"] = args.zero_weight
    report = verify_suite(VerifyConfig(**kw))
    out.write(report.text())
    if args.strict and not report.all_passed:
        return EXIT_SOLVER
    return EXIT_OK


def _parse_axis(text):
    kind, _, rest = text.partition(":")
    try:
        a, b, n = rest.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise ConfigError(f"axis must be real:a:b:n or imag:a:b:n, got {text!r}",
                          field="axis") from None
    t = np.linspace(a, b, n)
    if kind == "real":
        return t.astype(np.complex128)
    if kind == "imag":
        return 1j * t
    raise ConfigError(f"axis kind must be real or imag, got {kind!r}", field="axis")


def _cmd_filter(args, out):
    from .config import parse_region
    try:
        region = parse_region(args.region)
    except ConfigError as e:
        raise ConfigError(e.message, field="region") from None
    try:
        rule = build_rule(region, args.rule, args.N, args.offset)
    except (ValueError, ContourEigError) as e:
        raise ConfigError(str(e), field="rule") from None
    prof = filter_profile(rule, _parse_axis(args.axis))
    w = csv.writer(out, lineterminator="\n")
    w.writerow(("re", "im", "abs_f"))
    for lam, mag in zip(prof.sample_points, prof.magnitudes):
        w.writerow((repr(float(lam.real)), repr(float(lam.imag)), repr(float(mag))))
    return EXIT_OK


def _cmd_gen(args, out):
    pencil, truth = build_problem(args.problem, args.seed, args.conditioning)
    write_problem(args.out, pencil, truth)
    print(f"wrote n={pencil.n} problem to {args.out}", file=sys.stderr)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="contoureig",
                                     description="Contour-integral interior eigensolvers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one problem with one method")
    _add_config_flags(p, skip=("methods", "sweep", "output", "timing", "res_tol", "match_tol"))
    p.add_argument("--method", default="ss_rr", choices=METHODS)
    p.add_argument("--L", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--max-iters", type=int, default=20, help="FEAST iteration cap")
    p.add_argument("--all", action="store_true", help="also print pairs outside the region")
    p.set_defaults(run=_cmd_solve)

    p = sub.add_parser("bench", help="run a (method, L, M) sweep and emit CSV")
    _add_config_flags(p)
    p.set_defaults(run=_cmd_bench)

    p = sub.add_parser("verify", help="run the numerical verification suite")
    p.add_argument("--strict", action="store_true", help="exit 2 if any check fails")
    p.add_argument("--seeds", help="comma separated seeds (default 1,2,3)")
    p.add_argument("--N", type=int)
    p.add_argument("--spec", help="Jordan spec for the moment recurrence check")
    p.add_argument("--zero-weight", type=int, help="zero one quadrature weight (fault injection)")
    p.set_defaults(run=_cmd_verify)

    p = sub.add_parser("filter", help="sample |f| of a quadrature rule as CSV")
    p.add_argument("--region", default="circle:0,0,1")
    p.add_argument("--rule", default="trapezoidal")
    p.add_argument("--N", type=int, default=32)
    p.add_argument("--offset", type=float, default=0.5, help="trapezoidal node offset")
    p.add_argument("--axis", default="real:-2:2:401")
    p.set_defaults(run=_cmd_filter)

    p = sub.add_parser("gen", help="write a generated problem to a file")
    p.add_argument("--problem", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--conditioning", type=float, default=10.0)
    p.add_argument("--out", required=True)
    p.set_defaults(run=_cmd_gen)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    try:
        return args.run(args, out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ContourEigError as e:
        print(f"solver failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
