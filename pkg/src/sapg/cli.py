"""Command-line front end: ``sapg {solve,bench,gen,check}``.

Exit codes: 0 success, 1 usage or configuration error, 2 solve stopped at
``maxiter``, 3 a self-check invariant failed.

Configuration files are JSON objects keyed by :class:`~sapg.model.SolverConfig`
field names (``mu0``, ``gamma0``, ``eta``, ``alpha``, ``sigma``, ``maxiter``,
``eps``, ``zeta``, ``extrapolate``, ``backtrack``, ``max_backtracks``,
``residual_mode``, ``x0``). ``--override key=value`` applies on top; for
``bench`` the keys are experiment fields, with ``config.<field>`` reaching
into the solver config.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from importlib import resources
from pathlib import Path

from .bench import ExperimentSpec, run_experiment
from .checks import run_suites, SUITES
from .datagen import KINDS, InstanceSpec, gen_instance, load_instance, objective_for, save_instance
from .diagnostics import compute_reference, write_diagnostics_csv
from .model import TRACE_COLUMNS, ConfigError, config_from_dict
from .solver import SOLVERS, BacktrackError, decaying_errors

EXIT_OK, EXIT_USAGE, EXIT_MAXITER, EXIT_CHECK = 0, 1, 2, 3

log = logging.getLogger("sapg")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_overrides(items):
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"override {item!r} is not of the form key=value")
        try:
            out[key.strip()] = json.loads(value)
        except json.JSONDecodeError:
            out[key.strip()] = value
    return out


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"file not found: {path}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})")


def _instance_from_args(args):
    if args.instance:
        return load_instance(args.instance)
    if args.m is None or args.n is None:
        raise UsageError("give --instance DIR or both --m and --n")
    return gen_instance(InstanceSpec(args.m, args.n, args.spar, args.seed, kind=args.kind))


def cmd_solve(args) -> int:
    inst = _instance_from_args(args)
    prob = objective_for(inst)
    n = prob.n
    data = _read_json(args.config) if args.config else {}
    for key, value in _parse_overrides(args.override).items():
        data[key.removeprefix("config.")] = value
    cfg = config_from_dict(data, n)
    solve = SOLVERS[args.algorithm]
    if args.algorithm == "isapg":
        result = solve(prob, cfg, errs=decaying_errors(n, args.error_delta, args.error_power, args.seed),
                       keep_iterates=args.diagnostics)
    else:
        result = solve(prob, cfg, keep_iterates=args.diagnostics)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "algorithm": args.algorithm,
        "iterations": result.iterations,
        "stop_reason": result.stop_reason,
        "objective": prob.objective(result.x_final),
        "x_final": result.x_final.tolist(),
        "config": cfg.to_dict(),
    }
    (out / "result.json").write_text(json.dumps(payload, indent=2) + "\n")
    with open(out / "trace.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        w.writerows(result.trace.rows())
    if args.diagnostics:
        ref = compute_reference(prob, cfg)
        write_diagnostics_csv(out / "diagnostics.csv", prob, result, cfg, ref)
    print(f"{args.algorithm}: {result.stop_reason} after {result.iterations} iterations, "
          f"f = {payload['objective']:.6g}")
    return EXIT_OK if result.stop_reason == "residual_met" else EXIT_MAXITER


def _load_experiment(name_or_path) -> dict:
    p = Path(name_or_path)
    if p.exists():
        return _read_json(p)
    shipped = resources.files("sapg") / "experiments" / f"{name_or_path}.json"
    if shipped.is_file():
        return json.loads(shipped.read_text())
    raise UsageError(f"experiment spec not found: {name_or_path}")


def cmd_bench(args) -> int:
    data = _load_experiment(args.spec)
    for key, value in _parse_overrides(args.override).items():
        if key.startswith("config."):
            data.setdefault("config", {})[key[len("config."):]] = value
        else:
            data[key] = value
    if args.trials is not None:
        data["trials"] = args.trials
    if args.seed is not None:
        data["base_seed"] = args.seed
    try:
        spec = ExperimentSpec.from_dict(data)
        spec.check()
    except TypeError as exc:
        raise UsageError(f"malformed experiment spec: {exc}")
    records, rows, _ = run_experiment(spec, args.out, workers=args.workers)
    for r in rows:
        flag = " (partial)" if r.partial else ""
        print(f"({r.m},{r.n}) spar={r.spar:g} {r.algorithm:5s} iter={r.mean_iter:9.2f} "
              f"time={r.mean_time_s:.4f}s{flag}")
    return EXIT_OK if not any(r.error for r in records) else EXIT_USAGE


def cmd_gen(args) -> int:
    inst = gen_instance(InstanceSpec(args.m, args.n, args.spar, args.seed, kind=args.kind))
    out = save_instance(inst, args.out)
    print(f"wrote instance to {out}")
    return EXIT_OK


def cmd_check(args) -> int:
    scale = 0.0 if args.inject_fault == "kappa-zero" else 1.0
    results = run_suites(args.suite, kappa_scale=scale)
    by_suite = {}
    for r in results:
        by_suite.setdefault(r.suite, []).append(r)
    failed = [r for r in results if not r.ok]
    for suite, rs in by_suite.items():
        bad = sum(not r.ok for r in rs)
        print(f"[{'PASS' if not bad else 'FAIL'}] {suite}: {len(rs) - bad}/{len(rs)} invariants hold")
    for r in failed:
        print(f"  violated: {r.suite}.{r.invariant} {r.detail}")
    return EXIT_CHECK if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sapg", description="Smoothing accelerated proximal gradient solvers and benchmarks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def instance_args(sp):
        sp.add_argument("--m", type=int)
        sp.add_argument("--n", type=int)
        sp.add_argument("--spar", type=float, default=0.2)
        sp.add_argument("--kind", choices=KINDS, default="linear_l1")
        sp.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("solve", help="solve one instance")
    instance_args(s)
    s.add_argument("--instance", help="directory written by 'sapg gen'")
    s.add_argument("--config", help="JSON solver config")
    s.add_argument("--override", action="append", metavar="KEY=VALUE")
    s.add_argument("--algorithm", choices=sorted(SOLVERS), default="sapg")
    s.add_argument("--out", default="sapg-out")
    s.add_argument("--error-delta", type=float, default=0.0, help="isapg gradient error scale")
    s.add_argument("--error-power", type=float, default=1.1, help="isapg error decay exponent")
    s.add_argument("--diagnostics", action="store_true", help="also write diagnostics.csv")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run an experiment grid")
    b.add_argument("spec", help="experiment JSON path or shipped name (table1, table2, desk)")
    b.add_argument("--trials", type=int)
    b.add_argument("--seed", type=int)
    b.add_argument("--override", action="append", metavar="KEY=VALUE")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out", default="bench-out")
    b.set_defaults(func=cmd_bench)

    g = sub.add_parser("gen", help="generate and save an instance")
    instance_args(g)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("check", help="run the invariant suites")
    c.add_argument("--suite", action="append", choices=sorted(SUITES))
    c.add_argument("--inject-fault", choices=["kappa-zero"], help=argparse.SUPPRESS)
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, ValueError, BacktrackError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
