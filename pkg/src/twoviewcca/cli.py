"""Command-line experiment runner.

    twoviewcca ingest   --format synthetic --spec power-law:... --ka a.csv --kb b.csv
    twoviewcca rcca     --ka a.csv --kb b.csv --format dense --k 5 --p 35 --q 3 --out r.json
    twoviewcca horst    ... --init model:m.rcca
    twoviewcca oracle   ...
    twoviewcca spectrum ... --ell 20
    twoviewcca eval     ... --model-in m.rcca --part test

Reports are JSON. Solver errors exit with status 1, usage errors with 2.
"""

import argparse
import functools
import json
import sys
import time

import numpy as np

from . import __version__
from .evaluate import evaluate
from .horst import HorstConfig, horst_iterate
from .matkernels import KernelError
from .modelfile import ModelFileError, load_model, save_model
from .oracle import DenseTwoView, OracleError, exact_cca, exact_cross_spectrum
from .rcca import (DEFAULT_NU, RNG_NAME, CcaConfig, SolverError, estimate_spectrum,
                   randomized_cca, resolve_regularizers)
from .synthetic import BUNDLED_SPEC, generate
from .twoview import (DataFormatError, DimensionError, TwoViewDataset, ingest_dense,
                      ingest_parallel_text, ingest_sparse, split, write_dense)

FORMAT_VERSION = 1
DEFAULT_K = 10


class UsageError(Exception):
    pass


def _init_arg(value):
    if value == "random":
        return value
    if value.startswith("model:") and len(value) > len("model:"):
        return value
    raise argparse.ArgumentTypeError("expected 'random' or 'model:<path>'")


def _fraction(value):
    f = float(value)
    if not 0 < f <= 1:
        raise argparse.ArgumentTypeError("must be in (0, 1]")
    return f


def build_parser():
    data = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    g = data.add_argument_group("data")
    g.add_argument("--ka", help="view A file")
    g.add_argument("--kb", help="view B file")
    g.add_argument("--format", choices=["text", "sparse", "dense", "synthetic"],
                   default="dense")
    g.add_argument("--spec", default=None,
                   help=f"synthetic generator spec (default {BUNDLED_SPEC})")
    g.add_argument("--hash-bits", type=int, default=19)
    g.add_argument("--hash-seed", type=int, default=0)
    g.add_argument("--da", type=int, default=None, help="view A dimension (sparse)")
    g.add_argument("--db", type=int, default=None, help="view B dimension (sparse)")
    g.add_argument("--center", choices=["on", "off"], default=None,
                   help="mean centering (default: on for text, off otherwise)")
    g.add_argument("--split", type=_fraction, default=0.9, help="train fraction")
    g.add_argument("--split-seed", type=int, default=0)
    g.add_argument("--out", help="report path (default: stdout)")

    solver = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    g = solver.add_argument_group("solver")
    g.add_argument("--k", type=int, default=DEFAULT_K)
    g.add_argument("--nu", type=float, default=DEFAULT_NU)
    g.add_argument("--lambda-a", type=float, default=None)
    g.add_argument("--lambda-b", type=float, default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--model-out", help="write the fitted model here")

    parser = argparse.ArgumentParser(
        prog="twoviewcca", allow_abbrev=False,
        description="Randomized and iterative CCA for large two-view datasets.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    add = functools.partial(sub.add_parser, allow_abbrev=False)

    add("ingest", parents=[data], help="load or generate data, report stats")

    p = add("rcca", parents=[data, solver], help="randomized CCA")
    p.add_argument("--p", type=int, default=None, help="oversampling (default max(10k, 100))")
    p.add_argument("--q", type=int, default=1, help="power iterations")

    p = add("horst", parents=[data, solver], help="Horst iteration")
    p.add_argument("--inner-steps", type=int, default=3)
    p.add_argument("--max-sweeps", type=int, default=300)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--init", type=_init_arg, default="random",
                   help="random | model:<path>")

    add("oracle", parents=[data, solver], help="exact dense CCA (small data)")

    p = add("spectrum", parents=[data], help="two-pass spectrum of A^T B / n")
    p.add_argument("--ell", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exact", action="store_true",
                   help="also report the exact spectrum (small data only)")

    p = add("eval", parents=[data], help="evaluate a stored model")
    p.add_argument("--model-in", required=True)
    p.add_argument("--part", choices=["all", "train", "test"], default="all",
                   help="rows to evaluate on; train/test use --split and --split-seed")
    return parser


# -- data -----------------------------------------------------------------

def _centered(args):
    if args.center is not None:
        return args.center == "on"
    return args.format == "text"


def _need_paths(args):
    if not args.ka or not args.kb:
        raise UsageError(f"--ka and --kb are required for --format {args.format}")


def load_dataset(args):
    if args.format == "synthetic":
        A, B = generate(args.spec or BUNDLED_SPEC)
        return TwoViewDataset(A, B)
    _need_paths(args)
    if args.format == "text":
        return ingest_parallel_text(args.ka, args.kb, args.hash_bits, args.hash_seed)
    if args.format == "sparse":
        return ingest_sparse(args.ka, args.kb, args.da, args.db)
    return ingest_dense(args.ka, args.kb)


def _split(ds, args):
    if args.split >= 1:
        return ds, None
    train, test = split(ds, args.split, args.split_seed)
    return train, (test if test.n else None)


def _data_echo(args, train, test):
    echo = {"format": args.format, "ka": args.ka, "kb": args.kb,
            "split": args.split, "split_seed": args.split_seed,
            "center": _centered(args), "n_train": train.n,
            "n_test": test.n if test is not None else 0,
            "d_a": train.d_a, "d_b": train.d_b}
    if args.format == "synthetic":
        echo["spec"] = args.spec or BUNDLED_SPEC
    if args.format == "text":
        echo["hash_bits"] = args.hash_bits
        echo["hash_seed"] = args.hash_seed
    return echo


def _floats(values):
    return [float(v) for v in np.asarray(values).ravel()]


def _emit(report, args):
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def solver_report(solver_name, model, train, test, centered, config, seed, wall):
    ev = evaluate(train, model, centered)
    report = {"config": config, "objective_train": ev["objective"]}
    if test is not None:
        report["objective_test"] = evaluate(test, model, centered)["objective"]
    report.update({
        "correlations": _floats(model.correlations),
        "feasibility_residual_a": ev["feasibility_residual_a"],
        "feasibility_residual_b": ev["feasibility_residual_b"],
        "cross_offdiag_residual": ev["cross_offdiag_residual"],
        "passes_used": int(model.passes_used),
        "wall_time_seconds": wall,
        "seed": seed,
        "solver": solver_name,
        "format_version": FORMAT_VERSION,
    })
    return report


# -- commands -------------------------------------------------------------

def cmd_ingest(args):
    if args.format == "synthetic":
        _need_paths(args)
        A, B = generate(args.spec or BUNDLED_SPEC)
        write_dense(args.ka, A)
        write_dense(args.kb, B)
        ds = ingest_dense(args.ka, args.kb)
    else:
        ds = load_dataset(args)
    st = ds.stats
    report = {"command": "ingest", "format": args.format, "ka": args.ka, "kb": args.kb,
              "n": ds.n, "d_a": ds.d_a, "d_b": ds.d_b,
              "nnz_a": int(ds.A.nnz), "nnz_b": int(ds.B.nnz),
              "trace_a": st.trace_a, "trace_b": st.trace_b,
              "active_a": int(len(st.active_a)), "active_b": int(len(st.active_b)),
              "hash": ds.hash_config, "passes_used": ds.passes,
              "format_version": FORMAT_VERSION}
    if args.format == "synthetic":
        report["spec"] = args.spec or BUNDLED_SPEC
    _emit(report, args)


def _solver_config(args, train, test, extra):
    lam_a, lam_b = resolve_regularizers(train.stats, args.nu, args.lambda_a,
                                        args.lambda_b, _centered(args))
    return {"command": args.command, "data": _data_echo(args, train, test),
            "k": args.k, **extra, "nu": args.nu,
            "lambda_a": lam_a, "lambda_b": lam_b, "rng": RNG_NAME}


def _check_lambdas(args):
    if (args.lambda_a is None) != (args.lambda_b is None):
        raise UsageError("--lambda-a and --lambda-b must be given together")


def cmd_rcca(args):
    _check_lambdas(args)
    ds = load_dataset(args)
    train, test = _split(ds, args)
    cfg = CcaConfig(k=args.k, p=args.p, q=args.q, nu=args.nu, lambda_a=args.lambda_a,
                    lambda_b=args.lambda_b, seed=args.seed, centered=_centered(args))
    t0 = time.perf_counter()
    model = randomized_cca(train, cfg)
    wall = time.perf_counter() - t0
    config = _solver_config(args, train, test, {"p": cfg.oversampling, "q": cfg.q})
    _finish(args, "rcca", model, train, test, config, wall)


def cmd_horst(args):
    _check_lambdas(args)
    ds = load_dataset(args)
    train, test = _split(ds, args)
    init = "random"
    if args.init.startswith("model:"):
        init, hash_config = load_model(args.init[len("model:"):])
        _check_hash(hash_config, train)
    cfg = HorstConfig(k=args.k, nu=args.nu, lambda_a=args.lambda_a,
                      lambda_b=args.lambda_b, max_sweeps=args.max_sweeps,
                      inner_steps=args.inner_steps, tol=args.tol, seed=args.seed,
                      init=init, centered=_centered(args))
    t0 = time.perf_counter()
    model, trace = horst_iterate(train, cfg)
    wall = time.perf_counter() - t0
    config = _solver_config(args, train, test, {
        "inner_steps": args.inner_steps, "max_sweeps": args.max_sweeps,
        "tol": args.tol, "init": args.init, "sweeps": len(trace)})
    _finish(args, "horst", model, train, test, config, wall)


def cmd_oracle(args):
    _check_lambdas(args)
    ds = load_dataset(args)
    train, test = _split(ds, args)
    centered = _centered(args)
    lam_a, lam_b = resolve_regularizers(train.stats, args.nu, args.lambda_a,
                                        args.lambda_b, centered)
    t0 = time.perf_counter()
    model = exact_cca(DenseTwoView.from_dataset(train), lam_a, lam_b, args.k, centered)
    wall = time.perf_counter() - t0
    _finish(args, "oracle", model, train, test, _solver_config(args, train, test, {}), wall)


def _finish(args, name, model, train, test, config, wall):
    report = solver_report(name, model, train, test, _centered(args), config,
                           args.seed, wall)
    if args.model_out:
        save_model(args.model_out, model, train.hash_config)
    _emit(report, args)


def cmd_spectrum(args):
    ds = load_dataset(args)
    train, test = _split(ds, args)
    centered = _centered(args)
    t0 = time.perf_counter()
    est = estimate_spectrum(train, args.ell, args.seed, centered)
    wall = time.perf_counter() - t0
    report = {"config": {"command": "spectrum", "data": _data_echo(args, train, test),
                         "ell": args.ell, "rng": "numpy.PCG64/standard_normal"},
              "estimates": _floats(est.values),
              "rank_deficient": est.rank_deficient}
    if args.exact:
        report["exact"] = _floats(
            exact_cross_spectrum(DenseTwoView.from_dataset(train), centered)[:args.ell])
    report.update({"passes_used": est.passes, "wall_time_seconds": wall,
                   "seed": args.seed, "solver": "spectrum",
                   "format_version": FORMAT_VERSION})
    _emit(report, args)


def _check_hash(model_hash, ds):
    if model_hash and ds.hash_config and model_hash != ds.hash_config:
        raise DimensionError(
            f"model was trained on hash config {model_hash}, data uses {ds.hash_config}")


def cmd_eval(args):
    model, model_hash = load_model(args.model_in)
    ds = load_dataset(args)
    _check_hash(model_hash, ds)
    if args.part != "all":
        train, test = split(ds, args.split, args.split_seed)
        ds = train if args.part == "train" else test
        if ds.n == 0:
            raise UsageError(f"the {args.part} part is empty")
    centered = _centered(args)
    start = ds.passes
    t0 = time.perf_counter()
    ev = evaluate(ds, model, centered)
    wall = time.perf_counter() - t0
    config = {"command": "eval", "model_in": args.model_in, "part": args.part,
              "data": {"format": args.format, "ka": args.ka, "kb": args.kb,
                       "split": args.split, "split_seed": args.split_seed,
                       "center": centered, "n": ds.n, "d_a": ds.d_a, "d_b": ds.d_b},
              "k": model.k, "lambda_a": model.lambda_a, "lambda_b": model.lambda_b}
    _emit({"config": config, "objective": ev["objective"],
           "correlations": _floats(ev["cross_diagonal"]),
           "feasibility_residual_a": ev["feasibility_residual_a"],
           "feasibility_residual_b": ev["feasibility_residual_b"],
           "cross_offdiag_residual": ev["cross_offdiag_residual"],
           "passes_used": ds.passes - start, "wall_time_seconds": wall,
           "solver": "eval", "format_version": FORMAT_VERSION}, args)


COMMANDS = {"ingest": cmd_ingest, "rcca": cmd_rcca, "horst": cmd_horst,
            "oracle": cmd_oracle, "spectrum": cmd_spectrum, "eval": cmd_eval}

_RUNTIME_ERRORS = (SolverError, KernelError, OracleError, DataFormatError,
                   DimensionError, ModelFileError, ValueError, OSError, AssertionError)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"twoviewcca: error: {exc}", file=sys.stderr)
        return 2
    except _RUNTIME_ERRORS as exc:
        print(f"twoviewcca {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
