"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure
(non-convergence, indefinite operator or preconditioner).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from . import bench, linop
from .eigen import NotPositiveDefiniteError
from .mmio import MatrixMarketError, save_matrix_market
from .pcg import NumericalFailure
from .spectrum import write_spectrum_csv

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text):
    return [int(t) for t in text.split(",") if t]


def _write_csv(rows, columns, out):
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in columns])
    finally:
        if out:
            fh.close()


def _fmt(v):
    # shortest round-trip representation
    if isinstance(v, float):
        return repr(v)
    return v


def _emit_json(obj, out):
    text = json.dumps(obj, indent=2, sort_keys=False)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_solve(args):
    if args.from_report:
        with open(args.from_report) as fh:
            cfg = bench.ExperimentConfig.from_dict(json.load(fh)["config"])
        cfg.threads = args.threads
    else:
        problem = args.matrix or args.gen
        if problem is None:
            raise UsageError("give --gen SPEC or --matrix FILE")
        cfg = bench.ExperimentConfig(
            problem=problem,
            prec=args.prec,
            tol=args.tol,
            maxit=args.maxit,
            eigs=args.eigs,
            seed=args.seed,
            rhs=args.rhs,
            repetitions=args.repetitions,
            threads=args.threads,
        )
    bench.parse_prec(cfg.prec)  # fail early on a malformed spec
    result = bench.run_solve(cfg)
    _emit_json(result, args.out)
    return EXIT_OK if result["report"]["converged"] else EXIT_NUMERICAL


def cmd_table1(args):
    rows = bench.table1(nx=args.nx, scale=args.scale, degrees=args.degrees, tol=args.tol, rhs=args.rhs,
                        seed=args.seed)
    columns = ["block", "tol", "m", "iters", "mu_max", "mu_min", "l", "kappa"]
    if args.out:
        _write_csv(rows, columns + ["ref_iters"] * any("ref_iters" in r for r in rows), args.out)
    for block in ("original", "scaled"):
        scale = 1.0 if block == "original" else args.scale
        for tol in dict.fromkeys(r["tol"] for r in rows):
            sel = [r for r in rows if r["block"] == block and r["tol"] == tol]
            print(f"# {block} (scale={scale!r}, tol={tol:g})")
            w = csv.writer(sys.stdout, lineterminator="\n")
            w.writerow(["m", "iter", "mu_max", "mu_min", "l", "kappa"])
            for r in sel:
                w.writerow([r["m"], r["iters"], f"{r['mu_max']:.4f}", f"{r['mu_min']:.4e}", r["l"],
                            f"{r['kappa']:.1f}"])
            print()
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_NUMERICAL


def cmd_sweep(args):
    problem = args.matrix or args.gen
    if problem is None:
        raise UsageError("give --gen SPEC or --matrix FILE")
    cfg = bench.ExperimentConfig(problem=problem, prec=f"newton:nlev=0,scale={args.scale!r}", tol=args.tol,
                                 maxit=args.maxit, eigs=args.eigs, seed=args.seed, rhs=args.rhs,
                                 threads=args.threads)
    rows, bounds, setup = bench.degree_sweep(cfg, nlevs=args.nlev, form=args.form)
    _write_csv(rows, ["m", "iter", "ddot", "matvec", "true_rel_res", "time"], args.out)
    print(f"# bounds alpha0={bounds.alpha0:.6e} beta0={bounds.beta0:.6e} ({bounds.method}, setup {setup:.3f}s)",
          file=sys.stderr)
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_NUMERICAL


def _parse_pt(text):
    p, sep, t = text.partition(":")
    if not sep:
        raise UsageError(f"expected P:T, got {text!r}")
    return int(p), float(t)


def cmd_scaling(args):
    pairs = [_parse_pt(t) for t in args.records]
    if args.n0 is not None:
        if args.t0 is None:
            raise UsageError("--n0 needs --t0")
        n0, t0 = args.n0, args.t0
    else:
        n0, t0 = min(pairs)
    records = [bench.ScalingRecord(p, t, n0, t0) for p, t in pairs]
    rows = [{"p": p, "T": r.T_p, "S": s, "E": e} for (p, s, e), r in zip(bench.compute_scaling(records), records)]
    _write_csv(rows, ["p", "T", "S", "E"], args.out)
    return EXIT_OK


def cmd_weak(args):
    entries = []
    for text in args.entries:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"expected NX:P:T, got {text!r}")
        entries.append((int(parts[0]), int(parts[1]), float(parts[2])))
    rows = bench.weak_scaling_check(entries)
    _write_csv(rows, ["nx", "p", "T", "ratio", "ideal", "relative"], args.out)
    return EXIT_OK


def cmd_gen(args):
    name, size = bench.parse_problem(args.gen)
    if name == "identity":
        m = linop.CsrMatrix.identity(size)
    else:
        m = linop.fd_laplacian(2 if name == "lap2d" else 3, size, form="assembled")
    save_matrix_market(m, args.out, comment=f"generated {args.gen}")
    return EXIT_OK


def cmd_spectrum(args):
    kind = 2 if args.kind == "lap2d" else 3
    report = bench.spectrum_rows(args.nx, args.m, args.scale, kind=kind)
    write_spectrum_csv(report, args.out or sys.stdout)
    print(f"# m={report.m} mu_min={report.mu_min:.6e} mu_max={report.mu_max:.6e} "
          f"kappa={report.kappa:.4g} l={report.l}", file=sys.stderr)
    return EXIT_OK


def build_parser():
    top = _Parser(prog="ncpcg", description="Polynomially preconditioned CG experiments.")
    top.add_argument("--threads", type=int, default=None,
                     help=f"worker threads for matrix-vector products (env {bench.THREADS_ENV})")
    sub = top.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def problem_args(p):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--gen", help="lap2d:NX, lap3d:NX or identity:N")
        g.add_argument("--matrix", help="symmetric MatrixMarket file")

    def common(p):
        p.add_argument("--tol", type=float, default=1e-8)
        p.add_argument("--maxit", type=int, default=20000)
        p.add_argument("--eigs", choices=["auto", "analytic", "power+dacg"], default="auto")
        p.add_argument("--seed", type=int, default=bench.eigen.DEFAULT_SEED)
        p.add_argument("--rhs", choices=["ones", "random"], default="ones")
        p.add_argument("--out", help="output file (default stdout)")

    p = sub.add_parser("solve", help="one preconditioned solve, JSON report")
    problem_args(p)
    common(p)
    p.add_argument("--prec", default="none", help="none | jacobi | newton:nlev=K,scale=S | chebyshev:m=M,scale=S")
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--from-report", help="rerun the configuration embedded in a JSON report")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("table1", help="iterations and preconditioned spectrum per degree")
    p.add_argument("--nx", type=int, default=78)
    p.add_argument("--scale", type=float, default=1.01)
    p.add_argument("--degrees", type=_int_list, default=[0, 1, 3, 7, 15, 31])
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--rhs", choices=["ones", "random"], default="ones")
    p.add_argument("--seed", type=int, default=bench.eigen.DEFAULT_SEED)
    p.add_argument("--out", help="also write all rows to this CSV file")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("sweep", help="degree sweep, one solve per m = 2^nlev - 1")
    problem_args(p)
    common(p)
    p.add_argument("--nlev", type=_int_list, default=[0, 1, 2, 3, 4, 5, 6])
    p.add_argument("--scale", type=float, default=1.001)
    p.add_argument("--form", choices=["newton", "chebyshev"], default="newton")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("scaling", help="pseudo speedup and efficiency from P:T timings")
    p.add_argument("records", nargs="+", metavar="P:T")
    p.add_argument("--n0", type=int, help="baseline core count (default: smallest P)")
    p.add_argument("--t0", type=float, help="baseline time")
    p.add_argument("--out")
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("weak", help="weak-scaling check from NX:P:T entries")
    p.add_argument("entries", nargs="+", metavar="NX:P:T")
    p.add_argument("--out")
    p.set_defaults(func=cmd_weak)

    p = sub.add_parser("gen", help="write a generated matrix in MatrixMarket format")
    p.add_argument("--gen", required=True, help="lap2d:NX, lap3d:NX or identity:N")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("spectrum", help="eigenvalues of p(A) A for the model Laplacian")
    p.add_argument("--kind", choices=["lap2d", "lap3d"], default="lap2d")
    p.add_argument("--nx", type=int, default=78)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--scale", type=float, default=1.01)
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectrum)
    return top


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is None:
        args.threads = bench.default_threads()
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        return args.func(args)
    except (NumericalFailure, NotPositiveDefiniteError) as exc:
        print(f"ncpcg: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, MatrixMarketError, linop.DimensionError, ValueError, KeyError, OSError) as exc:
        print(f"ncpcg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
