"""Command-line front end: simulate, reconstruct, and tabulate.

All outputs are plain text tables (no plotting).  Flags are validated
before any computation starts; output files are written atomically via a
temporary name, so a failed run never leaves a partial file behind.
Exit status: 0 success, 1 usage error, 2 data error.
"""

import argparse
import os
import sys

import numpy as np

from .fbp import FbpConfig, fbp_grid
from .grids import parse_lattice, parse_slice
from .io import DataFormatError, load_dataset, read_table, save_dataset, write_table
from .mle import EstimationError, ReconstructionConfig, reconstruct_grid
from .simulate import histogram, simulate
from .states import fbp_expected_limit, parse_state, squasi_true, wigner_true


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _atomic_write(path, writer):
    tmp = str(path) + ".part"
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_grid_arg(args):
    if (args.slice is None) == (args.grid is None):
        raise UsageError("exactly one of --slice or --grid is required")
    try:
        return parse_slice(args.slice) if args.slice else parse_lattice(args.grid)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _parse_state_arg(text):
    try:
        return parse_state(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _dataset_headers(data):
    return {
        "state": data.state_desc,
        "eta": repr(data.eta),
        "seed": data.seed,
        "phases": data.phases,
        "per_phase": data.per_phase,
    }


def _rows_from_grid(rows):
    return [(r.q, r.p, r.wigner, r.iterations, r.final_loglik) for r in rows]


def _cmd_simulate(args):
    spec = _parse_state_arg(args.state)
    data = simulate(spec, args.eta, args.phases, args.per_phase, args.seed)
    _atomic_write(args.out, lambda path: save_dataset(path, data))


def _cmd_reconstruct_mle(args):
    grid = _parse_grid_arg(args)
    try:
        cfg = ReconstructionConfig(n_max=args.nmax, max_iters=args.iters, loglik_tol=args.tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    data = load_dataset(args.data)
    rows = reconstruct_grid(data, grid, cfg, threads=args.threads)
    headers = _dataset_headers(data)
    headers.update(method="mle", n_max=cfg.n_max, max_iters=cfg.max_iters,
                   loglik_tol=repr(cfg.loglik_tol))
    failed = [r for r in rows if r.error]
    if failed:
        headers["failed_points"] = len(failed)
        for row in failed:
            print(f"point ({row.q:g}, {row.p:g}) failed: {row.error}", file=sys.stderr)
    _atomic_write(args.out, lambda path: write_table(path, headers, _rows_from_grid(rows)))


def _cmd_reconstruct_fbp(args):
    grid = _parse_grid_arg(args)
    try:
        cfg = FbpConfig(cutoff=args.cutoff)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    data = load_dataset(args.data)
    rows = fbp_grid(data, grid, cfg)
    headers = _dataset_headers(data)
    headers.update(method="fbp", cutoff=repr(cfg.cutoff))
    _atomic_write(args.out, lambda path: write_table(path, headers, _rows_from_grid(rows)))


def _truth_function(kind_text):
    kind, _, param = kind_text.partition(":")
    if kind == "wigner" and not param:
        return "wigner", None, wigner_true
    if kind == "squasi":
        try:
            s = float(param)
        except ValueError as exc:
            raise UsageError(f"bad squasi parameter {param!r}") from exc
        if s > 0:
            raise UsageError("squasi ordering parameter must be <= 0")
        return kind_text, s, lambda spec, q, p: squasi_true(spec, q, p, s)
    if kind == "fbp-limit":
        try:
            eta = float(param)
        except ValueError as exc:
            raise UsageError(f"bad fbp-limit efficiency {param!r}") from exc
        if not 0.0 < eta <= 1.0:
            raise UsageError("fbp-limit efficiency must be in (0, 1]")
        return kind_text, eta, lambda spec, q, p: fbp_expected_limit(spec, q, p, eta)
    raise UsageError(f"unknown truth kind {kind_text!r}")


def _cmd_truth(args):
    spec = _parse_state_arg(args.state)
    grid = _parse_grid_arg(args)
    kind_text, _, fn = _truth_function(args.kind)
    rows = [(q, p, fn(spec, float(q), float(p)), 0, float("nan")) for q, p in grid.points()]
    headers = {"state": args.state, "kind": kind_text}
    _atomic_write(args.out, lambda path: write_table(path, headers, rows))


def _cmd_histogram(args):
    try:
        lo, hi = (float(tok) for tok in args.range.split(":"))
    except ValueError as exc:
        raise UsageError(f"bad range {args.range!r}, expected LO:HI") from exc
    data = load_dataset(args.data)
    try:
        result = histogram(data, args.phase, args.tol, args.bins, (lo, hi))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if result.empty:
        print("warning: no records selected at this phase", file=sys.stderr)
    headers = _dataset_headers(data)
    headers.update(phase=repr(args.phase), tol=repr(args.tol), bins=args.bins,
                   range=args.range, n_selected=result.n_selected,
                   underflow=result.underflow, overflow=result.overflow,
                   empty=int(result.empty))

    def writer(path):
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("# format_version=1\n")
            for key, value in headers.items():
                f.write(f"# {key}={value}\n")
            for i, count in enumerate(result.counts):
                f.write("%.16e\t%.16e\t%d\n" % (result.edges[i], result.edges[i + 1], count))

    _atomic_write(args.out, writer)


def _cmd_compare(args):
    _, a = read_table(args.a)
    _, b = read_table(args.b)
    if a.shape[0] != b.shape[0]:
        raise DataFormatError(f"tables differ in length: {a.shape[0]} vs {b.shape[0]}")
    if not (abs(a[:, 0] - b[:, 0]).max() <= 1e-12 and abs(a[:, 1] - b[:, 1]).max() <= 1e-12):
        raise DataFormatError("tables are on different (q, p) points")
    diff = a[:, 2] - b[:, 2]
    finite = diff[~np.isnan(diff)]  # failed reconstruction points carry NaN
    max_abs = float(np.abs(finite).max()) if finite.size else float("nan")
    headers = {"a": args.a, "b": args.b, "max_abs_diff": "%.16e" % max_abs}

    def writer(path):
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("# format_version=1\n")
            for key, value in headers.items():
                f.write(f"# {key}={value}\n")
            for i in range(a.shape[0]):
                f.write("%.16e\t%.16e\t%.16e\t%.16e\t%.16e\n"
                        % (a[i, 0], a[i, 1], a[i, 2], b[i, 2], diff[i]))

    _atomic_write(args.out, writer)
    print(f"max_abs_diff={max_abs:.6e}")


def _build_parser():
    shared = _Parser(add_help=False)
    shared.add_argument("--threads", type=int, default=0,
                        help="worker process cap for grid evaluation (0 = one per CPU)")
    shared.add_argument("--out", required=True, help="output file path")

    parser = _Parser(prog="homtomo",
                     description="Homodyne record simulation and Wigner-function reconstruction.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[shared], help="generate a seeded event dataset")
    p.add_argument("--state", required=True)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--phases", type=int, required=True)
    p.add_argument("--per-phase", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("reconstruct-mle", parents=[shared],
                       help="maximum-likelihood Wigner reconstruction on a grid")
    p.add_argument("--data", required=True)
    p.add_argument("--nmax", type=int, default=40)
    p.add_argument("--iters", type=int, default=10_000)
    p.add_argument("--tol", type=float, default=0.0)
    p.add_argument("--slice")
    p.add_argument("--grid")
    p.set_defaults(func=_cmd_reconstruct_mle)

    p = sub.add_parser("reconstruct-fbp", parents=[shared],
                       help="filtered back-projection baseline on a grid")
    p.add_argument("--data", required=True)
    p.add_argument("--cutoff", type=float, default=6.0)
    p.add_argument("--slice")
    p.add_argument("--grid")
    p.set_defaults(func=_cmd_reconstruct_fbp)

    p = sub.add_parser("truth", parents=[shared], help="tabulate an analytic reference curve")
    p.add_argument("--state", required=True)
    p.add_argument("--kind", required=True,
                   help="wigner | squasi:S | fbp-limit:ETA")
    p.add_argument("--slice")
    p.add_argument("--grid")
    p.set_defaults(func=_cmd_truth)

    p = sub.add_parser("histogram", parents=[shared], help="bin records near one phase")
    p.add_argument("--data", required=True)
    p.add_argument("--phase", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--bins", type=int, required=True)
    p.add_argument("--range", required=True, help="LO:HI")
    p.set_defaults(func=_cmd_histogram)

    p = sub.add_parser("compare", parents=[shared], help="pointwise difference of two tables")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataFormatError, EstimationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
