"""Command-line interface: amp, sweep, zeros and validate.

Exit codes: 0 success, 1 usage or parse error, 2 invalid parameters or a
failed check, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor

from . import closed_forms as cf
from .config import ConfigError, CircuitConfig, Expr, load_config, parse_config
from .engine import ConvergenceError
from .figures import FIGURES
from .interferometer import amplitude, standard_circuit
from .oracle import OracleConvergenceError
from .validation import SUITES, run_suite
from .zeros import NULL_TOL, Axis, ScanError, SweepGrid, refine_null, scan

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_CONVERGENCE = 0, 1, 2, 3
DEFAULT_TOL = {"oracle": 1e-8, "closedform": 1e-9, "series": 1e-10}
SOLVE_ARITY = {"three_crystal": ("r1", "r2", "r3"), "four_crystal_pi": ("r1",),
               "four_crystal_phi0": ("r3", "r4")}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def fmt(x: float) -> str:
    """17 significant digits, the round-trip precision of a double."""
    return format(float(x), ".17g")


def _assignments(items) -> dict[str, float]:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise UsageError(f"expected name=value, got {item!r}")
        out[name.strip()] = Expr.parse(value, 1, len(name) + 2, "--set").evaluate({}, "--set")
    return out


def parse_axis(spec: str) -> Axis:
    """``name=lo:hi:n`` for n evenly spaced samples, or ``name=v1,v2,...``."""
    name, sep, body = spec.partition("=")
    name = name.strip()
    if not sep or not name:
        raise UsageError(f"expected name=lo:hi:n or name=v1,v2,..., got {spec!r}")

    def number(text):
        return Expr.parse(text, 1, 1, f"--vary {name}").evaluate({}, f"--vary {name}")

    try:
        if ":" in body:
            parts = body.split(":")
            if len(parts) != 3:
                raise UsageError(f"range for {name!r} must be lo:hi:n, got {body!r}")
            count = number(parts[2])
            return Axis.linspace(name, number(parts[0]), number(parts[1]), count)
        return Axis(name, tuple(number(v) for v in body.split(",")))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise UsageError(str(exc)) from None


def _pattern(text: str | None):
    if text is None:
        return None
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"--pattern must be comma-separated integers, got {text!r}") from None


def _evaluate(config: CircuitConfig, overrides: dict, pattern=None):
    circuit = config.circuit(overrides)
    pattern = config.detection(circuit) if pattern is None else pattern
    return amplitude(circuit, pattern, config.policy(), config.target_tail)


class _SweepPoint:
    """Picklable objective for process pools."""

    def __init__(self, config, names, fixed, pattern):
        self.config, self.names, self.fixed, self.pattern = config, names, fixed, pattern

    def __call__(self, *point):
        overrides = dict(self.fixed)
        overrides.update(zip(self.names, point))
        return _evaluate(self.config, overrides, self.pattern)


def sweep_csv(config: CircuitConfig, axes, fixed=None, pattern=None, jobs: int = 1) -> str:
    """CSV text of a sweep: swept parameters, then re, im, prob, tail_bound."""
    grid = SweepGrid(tuple(axes))
    objective = _SweepPoint(config, grid.names, dict(fixed or {}), pattern)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = scan(objective, grid, executor=pool)
    else:
        rows = scan(objective, grid)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([*grid.names, "re", "im", "prob", "tail_bound"])
    for row in rows:
        writer.writerow([*(fmt(v) for v in row.params), fmt(row.value.real), fmt(row.value.imag),
                         fmt(row.probability), fmt(row.error_bound)])
    return buf.getvalue()


def figure_csv(name: str, jobs: int = 1) -> str:
    if name not in FIGURES:
        raise UsageError(f"unknown figure {name!r}; expected one of {', '.join(sorted(FIGURES))}")
    fig = FIGURES[name]
    config = parse_config(fig.config, source=name)
    return sweep_csv(config, [parse_axis(v) for v in fig.vary], jobs=jobs)


def cmd_amp(args) -> int:
    config = load_config(args.config)
    res = _evaluate(config, _assignments(args.set), _pattern(args.pattern))
    v = res.value
    print(",".join(fmt(x) for x in (v.real, v.imag, abs(v), res.probability, res.error_bound)))
    return EXIT_OK


def cmd_sweep(args) -> int:
    specs = list(args.vary or []) + list(args.vary2 or [])
    if args.figure:
        if args.config or specs or args.set or args.pattern:
            raise UsageError("--figure takes no config, --vary, --set or --pattern")
        text = figure_csv(args.figure, args.jobs)
    else:
        if not args.config:
            raise UsageError("sweep needs a config file or --figure")
        if not specs:
            raise UsageError("sweep needs at least one --vary")
        config = load_config(args.config)
        axes = [parse_axis(s) for s in specs]
        text = sweep_csv(config, axes, _assignments(args.set), _pattern(args.pattern), args.jobs)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return EXIT_OK


def _three_crystal_bounds(r1, r2):
    t1, t2 = math.tanh(r1), math.tanh(r2)
    return abs(t1 - t2) / (1 - t1 * t2), (t1 + t2) / (1 + t1 * t2)


def cmd_zeros(args) -> int:
    names = SOLVE_ARITY[args.solve]
    if len(args.params) != len(names):
        raise UsageError(f"{args.solve} takes {len(names)} parameter(s) ({', '.join(names)}), "
                         f"got {len(args.params)}")
    try:
        params = [float(Expr.parse(p, 1, 1, "zeros").evaluate({}, "zeros")) for p in args.params]
    except ConfigError as exc:
        raise UsageError(exc.message) from None
    for n, v in zip(names, params):
        if not v > 0:
            raise ValueError(f"{n} must be > 0, got {v}")
    config = load_config(args.config) if args.config else CircuitConfig()
    policy, target = config.policy(), config.target_tail

    def engine(kind, p):
        circuit = standard_circuit(kind, p)
        return amplitude(circuit, (1,) * circuit.mode_count, policy, target).value

    worst = 0.0
    if args.solve == "three_crystal":
        r1, r2, r3 = params
        sols = cf.three_crystal_null(r1, r2, r3)
        if not sols[0].feasible:
            lo, hi = _three_crystal_bounds(r1, r2)
            print(f"infeasible: tanh r3 = {fmt(math.tanh(r3))} lies outside "
                  f"[|t1 - t2|/(1 - t1 t2), (t1 + t2)/(1 + t1 t2)] = [{fmt(lo)}, {fmt(hi)}]")
            return EXIT_OK
        for s in sols:
            res = abs(engine("three_crystal", (r1, r2, r3, s.phi1, s.phi2)))
            worst = max(worst, res)
            print(f"phi1={fmt(s.phi1)} phi2={fmt(s.phi2)} residual={fmt(res)}")
    elif args.solve == "four_crystal_pi":
        (r1,) = params
        r3 = cf.four_crystal_null_r3(r1)
        res = abs(engine("four_crystal", (r1, r1, r3, r3, math.pi)))
        worst = res
        print(f"r3={fmt(r3)} r4={fmt(r3)} residual={fmt(res)}")
        if args.refine:
            found = refine_null(lambda x: engine("four_crystal", (r1, r1, x, x, math.pi)),
                                (max(r3 - 0.05, 0.0), r3 + 0.05))
            print(f"refined r3={fmt(found.param)} residual={fmt(found.residual)}")
    else:
        r3, r4 = params
        r1 = cf.four_crystal_phi0_null_r1(r3, r4)
        if r1 is None:
            print(f"infeasible: |r3 - r4| = {fmt(abs(r3 - r4))} must exceed "
                  f"arcsinh(1) = {fmt(cf.ARCSINH_1)}")
            return EXIT_OK
        res = abs(engine("four_crystal", (r1, r1, r3, r4, 0.0)))
        worst = res
        print(f"r1={fmt(r1)} r2={fmt(r1)} residual={fmt(res)}")
        if args.refine:
            found = refine_null(lambda x: engine("four_crystal", (x, x, r3, r4, 0.0)),
                                (max(r1 - 0.05, 0.0), r1 + 0.05))
            print(f"refined r1={fmt(found.param)} residual={fmt(found.residual)}")
    return EXIT_OK if worst < NULL_TOL else EXIT_INVALID


def cmd_validate(args) -> int:
    suites = SUITES if args.suite == "all" else (args.suite,)
    failed = 0
    for suite in suites:
        tol = args.tol if args.tol is not None else DEFAULT_TOL[suite]
        checks = run_suite(suite, n_max=args.n_max) if suite == "oracle" else run_suite(suite)
        for c in checks:
            ok = c.passed(tol)
            failed += not ok
            print(f"{suite:10s} {c.name:18s} points={c.points:5d} max_dev={c.max_deviation:.3e} "
                  f"tol={tol:.0e} {'PASS' if ok else 'FAIL'} worst_at={c.worst_at}")
    print("all checks passed" if not failed else f"{failed} check(s) failed")
    return EXIT_OK if not failed else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fockinterf", description="Fock-basis multi-crystal interference.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("amp", help="amplitude of a detection pattern")
    p.add_argument("config")
    p.add_argument("--pattern", help="output occupations, e.g. 1,1 (default: one photon per mode)")
    p.add_argument("--set", action="append", metavar="NAME=VALUE", help="override a parameter")
    p.set_defaults(func=cmd_amp)

    p = sub.add_parser("sweep", help="CSV of the amplitude over a parameter grid")
    p.add_argument("config", nargs="?")
    p.add_argument("--vary", action="append", metavar="NAME=LO:HI:N|NAME=V1,V2,...")
    p.add_argument("--vary2", action="append", metavar="SPEC", help="further axis, same syntax")
    p.add_argument("--figure", choices=sorted(FIGURES), help="run a built-in figure sweep")
    p.add_argument("--pattern")
    p.add_argument("--set", action="append", metavar="NAME=VALUE")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("zeros", help="solve a null condition and verify it with the engine")
    p.add_argument("--solve", required=True, choices=sorted(SOLVE_ARITY))
    p.add_argument("params", nargs="*")
    p.add_argument("--config", help="description supplying truncation settings")
    p.add_argument("--refine", action="store_true", help="also locate the null numerically")
    p.set_defaults(func=cmd_zeros)

    p = sub.add_parser("validate", help="run cross-check suites")
    p.add_argument("--suite", choices=(*SUITES, "all"), default="all")
    p.add_argument("--tol", type=float)
    p.add_argument("--n-max", type=int, default=40, help="oracle basis cutoff")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        cause = exc.cause
        if isinstance(cause, (ConvergenceError, OracleConvergenceError)):
            return EXIT_CONVERGENCE
        return EXIT_PARSE if isinstance(cause, ConfigError) else EXIT_INVALID
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ConvergenceError, OracleConvergenceError) as exc:
        print(f"error: did not converge: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
