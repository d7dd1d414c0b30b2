"""Command-line frontend: reproducible batch runs over all modules.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 numerical
failure.  Every error path prints one machine-readable line
``error_code,message`` on stderr.  All CSV output uses LF line endings,
dot decimals, and 17-significant-digit floats, so identical invocations
produce byte-identical files (benchmark timing columns excepted).
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import gfc, gridops, ivp, maps, spectral, tvp, verify
from .errors import NumericalError, ValidationError
from .fnexpr import parse_expression
from .gridops import GridFunction, write_grid_csv

__all__ = ["main", "run"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(str(c) for c in row) + "\n")


def _parse_grid(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f"grid must be t0:t1:N, got {text!r}")
    t0, t1 = float(parts[0]), float(parts[1])
    n = int(parts[2])
    if t1 <= t0 or n < 2:
        raise ValidationError("grid needs t1 > t0 and N >= 2")
    return t0, t1, n


def _floats(text: str):
    return [float(x) for x in text.split(",") if x.strip()]


def _sample_fn(expr: str, t0: float, t1: float, n: int) -> GridFunction:
    fn = parse_expression(expr, ["t"])
    times = np.linspace(t0, t1, n + 1)
    return GridFunction(t0=t0, h=(t1 - t0) / n, values=np.asarray(
        [float(fn(t)) for t in times]
    ))


def _build_parser() -> _Parser:
    parser = _Parser(prog="fraclab", description=__doc__)
    parser.add_argument("--config", help="key=value defaults file; flags override")
    sub = parser.add_subparsers(dest="command", metavar="subcommand")

    p = sub.add_parser("op", help="evaluate a fractional operator on a grid")
    p.add_argument("--kind", required=True,
                   choices=["integral", "rl", "caputo", "hilfer", "nth", "gl"])
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--gamma1", type=float, default=0.0, help="Hilfer type")
    p.add_argument("--gamma", help="nth-level type vector, comma separated")
    p.add_argument("--fn", required=True, help="expression in t")
    p.add_argument("--grid", required=True, help="t0:t1:N")
    p.add_argument("--out", required=True)

    p = sub.add_parser("gfc", help="Sonine pairs: export, apply operators")
    p.add_argument("--pair", required=True, choices=["power", "multiterm"])
    p.add_argument("--alpha", type=float, help="power pair order")
    p.add_argument("--coeffs", help="multi-term coefficients a_1,..,a_m")
    p.add_argument("--orders", help="multi-term orders alpha_1<..<alpha_m")
    p.add_argument("--extend", type=int, default=1, help="lift to class n")
    p.add_argument("--length", type=float, default=1.0)
    p.add_argument("--validation-n", type=int, default=4096)
    p.add_argument("--table-n", type=int, default=512, help="export rows")
    p.add_argument("--apply", choices=["gfi", "gfd-rl", "gfd-caputo"])
    p.add_argument("--fn", help="expression in t (with --apply)")
    p.add_argument("--grid", help="t0:t1:N (with --apply)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("ivp", help="solve a Caputo initial value problem")
    p.add_argument("--solver", required=True, choices=["adams", "diffusive"])
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--y0", type=float, required=True)
    p.add_argument("--rhs", required=True, help="expression in t and y")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--corrector-iterations", type=int, default=1)
    p.add_argument("--stepper", default="exponential",
                   choices=["exponential", "trapezoidal", "backward-euler"])
    p.add_argument("--out", required=True)

    p = sub.add_parser("spectral", help="Petrov-Galerkin model problem on [-1,1]")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--fn", required=True, help="forcing, expression in t")
    p.add_argument("--y0", type=float, default=0.0)
    p.add_argument("--samples", type=int, default=201)
    p.add_argument("--out", required=True, help="coefficient CSV n,c_n")
    p.add_argument("--solution-out", help="sampled solution CSV t,y")

    p = sub.add_parser("tvp", help="solve a terminal value problem")
    p.add_argument("--method", required=True, choices=["shooting", "fredholm"])
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--ystar", type=float, required=True)
    p.add_argument("--rhs", required=True, help="expression in t and y")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--g0", type=float, default=0.0)
    p.add_argument("--g1", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iterations", type=int, default=20)
    p.add_argument("--max-picard", type=int, default=30)
    p.add_argument("--out", required=True)

    p = sub.add_parser("map", help="memory map orbits and bifurcation scans")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--kick", required=True,
                   help="expression in x (and K when scanning)")
    p.add_argument("--steps", type=int, default=256)
    p.add_argument("--scan", help="K0:K1:count of kick amplitudes")
    p.add_argument("--transient", type=int, default=256)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--out", required=True)

    p = sub.add_parser("bench", help="asymptotic complexity benchmark")
    p.add_argument("--solvers", default="adams,diffusive")
    p.add_argument("--Ns", default="512,1024,2048,4096")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--lam", type=float, default=-1.0,
                   help="linear right-hand side coefficient")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--jobs", type=int, default=1,
                   help="worker cap; >1 interleaves timing, use with care")
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify", help="run a property suite, report pass/fail")
    p.add_argument("--suite", default="all")
    p.add_argument("--seed", type=int, default=20260809)
    p.add_argument("--out", help="write the table as CSV")
    return parser


# --------------------------------------------------------------------------
# subcommand implementations


def _cmd_op(args) -> int:
    t0, t1, n = _parse_grid(args.grid)
    f = _sample_fn(args.fn, t0, t1, n)
    kind = args.kind
    if kind == "integral":
        out = gridops.rl_integral(f, args.alpha)
    elif kind == "rl":
        out = gridops.rl_derivative(f, args.alpha)
    elif kind == "caputo":
        out = gridops.caputo_derivative(f, args.alpha)
    elif kind == "hilfer":
        out = gridops.hilfer_derivative(
            f, gridops.HilferParams(args.alpha, args.gamma1)
        )
    elif kind == "nth":
        if not args.gamma:
            raise ValidationError("--gamma is required for the nth-level kind")
        out = gridops.nth_level_derivative(
            f, gridops.NthLevelParams(args.alpha, tuple(_floats(args.gamma)))
        )
    else:
        out = gridops.gl_derivative(f, args.alpha)
    write_grid_csv(out, args.out)
    return 0


def _make_pair(args):
    if args.pair == "power":
        if args.alpha is None:
            raise ValidationError("--alpha is required for the power pair")
        pair = gfc.make_power_pair(
            args.alpha, length=args.length, validation_n=args.validation_n
        )
    else:
        if not args.coeffs or not args.orders:
            raise ValidationError("--coeffs and --orders are required")
        spec = gfc.MultiTermSpec(
            tuple(_floats(args.coeffs)), tuple(_floats(args.orders))
        )
        pair = gfc.make_multiterm_pair(
            spec, length=args.length, validation_n=args.validation_n
        )
    if args.extend > 1:
        pair = gfc.extend_to_Ln(pair, args.extend)
    return pair


def _cmd_gfc(args) -> int:
    pair = _make_pair(args)
    if args.apply:
        if not args.fn or not args.grid:
            raise ValidationError("--apply needs --fn and --grid")
        t0, t1, n = _parse_grid(args.grid)
        f = _sample_fn(args.fn, t0, t1, n)
        op = {
            "gfi": gfc.gfi, "gfd-rl": gfc.gfd_rl, "gfd-caputo": gfc.gfd_caputo
        }[args.apply]
        write_grid_csv(op(pair, f), args.out)
    else:
        gfc.write_pair_csv(pair, args.out, n=args.table_n)
    return 0


def _cmd_ivp(args) -> int:
    from . import backend

    rhs_expr = parse_expression(args.rhs, ["t", "y"])
    rhs = backend.compile_rhs(lambda t, y: float(rhs_expr(t, y)))
    p = ivp.FodeProblem(alpha=args.alpha, a=args.a, T=args.T, y0=args.y0, rhs=rhs)
    if args.solver == "adams":
        sol = ivp.solve_adams(
            p, ivp.AdamsConfig(N=args.N, corrector_iterations=args.corrector_iterations)
        )
    else:
        sol = ivp.solve_diffusive(
            p, ivp.DiffusiveConfig(N=args.N, stepper=args.stepper)
        )
    _write_rows(
        args.out, "t,y",
        [(_fmt(t), _fmt(v)) for t, v in zip(sol.times, sol.values)],
    )
    return 0


def _cmd_spectral(args) -> int:
    f_expr = parse_expression(args.fn, ["t"])
    f = lambda t: float(f_expr(t))
    sol = spectral.solve_model_problem(args.alpha, f, args.y0, args.N)
    _write_rows(
        args.out, "n,c_n",
        [(str(i + 1), _fmt(c)) for i, c in enumerate(sol.coefficients)],
    )
    if args.solution_out:
        ts = np.linspace(-1.0, 1.0, args.samples)
        ys = spectral.evaluate_solution(sol, ts)
        _write_rows(
            args.solution_out, "t,y",
            [(_fmt(t), _fmt(y)) for t, y in zip(ts, ys)],
        )
    return 0


def _cmd_tvp(args) -> int:
    from . import backend

    rhs_expr = parse_expression(args.rhs, ["t", "y"])
    rhs = backend.compile_rhs(lambda t, y: float(rhs_expr(t, y)))
    p = tvp.TvpProblem(
        alpha=args.alpha, a=args.a, b=args.b, T=args.T, ystar=args.ystar, rhs=rhs
    )
    if args.method == "shooting":
        res = tvp.solve_shooting(
            p,
            tvp.ShootingConfig(
                g0=args.g0, g1=args.g1, max_iterations=args.max_iterations,
                tolerance=args.tol,
            ),
            ivp.AdamsConfig(N=args.N),
        )
        traj, y_a, resid, iters = res.trajectory, res.y_a, res.residual, res.n_solves
    else:
        res = tvp.solve_fredholm_collocation(
            p, nodes=args.N, max_picard=args.max_picard, tol=args.tol
        )
        traj = res.trajectory
        y_a, resid, iters = traj.values[0], res.residual, res.iterations
    _write_rows(
        args.out, "t,y",
        [(_fmt(t), _fmt(v)) for t, v in zip(traj.times, traj.values)],
    )
    print(f"{_fmt(y_a)},{_fmt(resid)},{iters}")
    return 0


def _cmd_map(args) -> int:
    if args.scan:
        parts = args.scan.split(":")
        if len(parts) != 3:
            raise ValidationError(f"scan must be K0:K1:count, got {args.scan!r}")
        k0, k1, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValidationError("scan needs count >= 1")
        kick_expr = parse_expression(args.kick, ["x", "K"])
        family = lambda K: (lambda x: float(kick_expr(x, K)))
        ks = np.linspace(k0, k1, count)
        rows = maps.bifurcation_scan(
            args.alpha, args.x0, args.h, family, ks, args.transient, args.samples
        )
        out_rows = []
        for r in rows:
            for step, x in enumerate(r["samples"]):
                out_rows.append((_fmt(r["K"]), str(step), _fmt(x)))
            if r["diverged"]:
                out_rows.append((_fmt(r["K"]), "-1", "nan"))
        _write_rows(args.out, "K,step,x", out_rows)
    else:
        kick_expr = parse_expression(args.kick, ["x"])
        spec = maps.MemoryMapSpec(
            alpha=args.alpha, x0=args.x0, h=args.h,
            kick=lambda x: float(kick_expr(x)),
        )
        orbit = maps.iterate_map(spec, args.steps)
        out_rows = [(str(i), _fmt(x)) for i, x in enumerate(orbit.samples)]
        if orbit.diverged:
            out_rows.append((str(orbit.diverged_at), "nan"))
        _write_rows(args.out, "n,x", out_rows)
    return 0


def _cmd_bench(args) -> int:
    solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    ns = [int(x) for x in args.Ns.split(",") if x.strip()]
    p = ivp.linear_problem(args.alpha, args.lam)
    if args.jobs < 1:
        raise ValidationError("--jobs must be >= 1")

    def bench_one(solver):
        return ivp.complexity_bench(solver, p, ns, repeats=args.repeats)

    if args.jobs > 1 and len(solvers) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            tables = list(pool.map(bench_one, solvers))
    else:
        tables = [bench_one(s) for s in solvers]
    rows = []
    for table in tables:
        for r in table:
            rows.append(
                (r["solver"], str(r["N"]), _fmt(r["seconds"]), str(r["peak_aux_bytes"]))
            )
    _write_rows(args.out, "solver,N,seconds,peak_aux_bytes", rows)
    for table in tables:
        slope = ivp.loglog_slope(
            [r["N"] for r in table], [r["seconds"] for r in table]
        )
        print(f"slope,{table[0]['solver']},{_fmt(slope)}")
    return 0


def _cmd_verify(args) -> int:
    rows = verify.run_suite(args.suite, seed=args.seed)
    for r in rows:
        status = "pass" if r["passed"] else "FAIL"
        print(
            f"{status} {r['suite']}/{r['check']}: value={r['value']:.6g} "
            f"threshold={r['threshold']:.6g}"
        )
    if args.out:
        _write_rows(
            args.out, "suite,check,passed,value,threshold",
            [
                (r["suite"], r["check"], "1" if r["passed"] else "0",
                 _fmt(r["value"]), _fmt(r["threshold"]))
                for r in rows
            ],
        )
    failed = [r for r in rows if not r["passed"]]
    print(f"{len(rows) - len(failed)}/{len(rows)} checks passed")
    if failed:
        raise NumericalError(f"{len(failed)} verification checks failed")
    return 0


_COMMANDS = {
    "op": _cmd_op,
    "gfc": _cmd_gfc,
    "ivp": _cmd_ivp,
    "spectral": _cmd_spectral,
    "tvp": _cmd_tvp,
    "map": _cmd_map,
    "bench": _cmd_bench,
    "verify": _cmd_verify,
}


def _apply_config(argv):
    """Inject key=value pairs from --config as defaults (flags override)."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise UsageError("--config needs a path")
    path = argv[idx + 1]
    rest = argv[:idx] + argv[idx + 2 :]
    if not rest:
        raise UsageError("--config requires a subcommand")
    try:
        lines = open(path).read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}")
    injected = []
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line must be key=value: {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if flag not in rest:
            injected.extend([flag, value])
    return [rest[0]] + injected + rest[1:]


def run(argv) -> int:
    """Entry point used by tests; returns the process exit code."""
    try:
        argv = _apply_config(list(argv))
        parser = _build_parser()
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage_error,{_one_line(exc)}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"validation_error,{_one_line(exc)}", file=sys.stderr)
        return 2
    except (NumericalError, OverflowError, np.linalg.LinAlgError) as exc:
        print(f"numerical_error,{_one_line(exc)}", file=sys.stderr)
        return 3


def _one_line(exc) -> str:
    return str(exc).replace("\n", " ").replace(",", ";")


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
