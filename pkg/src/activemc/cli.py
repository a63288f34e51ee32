"""Command-line interface: ``activemc {estimate,bootstrap,bounds,bench}``.

Exit codes: 0 success, 1 usage or parameter error, 2 malformed input data.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bench as bench_mod
from .bootstrap import DEFAULT_NBOOT, bootstrap, suggest_dimension
from .bounds import BoundsInput, evaluate_bounds, heuristic_sample_count
from .estimator import estimate
from .models import GradientSource, load_model
from .sampling import CSVFormatError, load_samples, sample_gradients


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage().strip()}\n{self.prog}: error: {message}")


def _add_source_args(p):
    g = p.add_argument_group("gradient samples")
    g.add_argument("--samples", help="gradient CSV (N rows x m columns)")
    g.add_argument("--model", help="model JSON description")
    g.add_argument("--n", type=int, help="number of gradient samples to draw")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--fd", type=float, help="forward-difference step instead of exact gradients")
    g.add_argument("--save-samples", help="also write the drawn gradients to this CSV")


def _samples_from_args(args, default_n=None):
    if args.samples and args.model:
        raise UsageError("give either --samples or --model, not both")
    if args.samples:
        return load_samples(args.samples)
    if not args.model:
        raise UsageError("one of --samples or --model is required")
    model = load_model(args.model)
    n = args.n if args.n is not None else default_n
    if n is None:
        raise UsageError("--n is required with --model")
    source = GradientSource.forward(args.fd) if args.fd is not None else GradientSource.exact()
    samples = sample_gradients(model, model.density, n, args.seed, source, threads=args.threads)
    if args.save_samples:
        samples.save(args.save_samples)
    return samples


def cmd_estimate(args) -> int:
    samples = _samples_from_args(args)
    est = estimate(samples, method=args.method)
    if args.out:
        est.save(args.out)
    if args.eigs_csv:
        est.save_eigenvalues_csv(args.eigs_csv)
    k = min(args.k, est.m) if args.k else est.m
    for i, lam in enumerate(est.eigenvalues[:k], start=1):
        print(f"lambda_{i} = {lam:.10g}")
    return 0


def cmd_bootstrap(args) -> int:
    default_n = None
    if args.model and args.n is None:
        m = load_model(args.model).dimension
        default_n = heuristic_sample_count(args.k, m, args.alpha)
    samples = _samples_from_args(args, default_n)
    if args.k > samples.m:
        raise UsageError(f"--k {args.k} exceeds the dimension m = {samples.m}")
    summary = bootstrap(samples, args.k, args.nboot, args.seed, threads=args.threads)
    os.makedirs(args.outdir, exist_ok=True)
    stem = os.path.join(args.outdir, args.name)
    summary.save(stem + ".json")
    summary.write_eigs_csv(stem + "_eigs.csv")
    summary.write_subspace_csv(stem + "_subspace.csv")
    for i in range(summary.k):
        print(f"lambda_{i + 1} = {summary.point_eigenvalues[i]:.6g}  "
              f"[{summary.eigenvalue_lo[i]:.6g}, {summary.eigenvalue_hi[i]:.6g}]")
    if summary.k >= 2:
        n, found = suggest_dimension(summary)
        print(f"suggested n = {n}")
        print(f"gap_found = {str(found).lower()}")
    return 0


def cmd_bounds(args) -> int:
    if args.input:
        with open(args.input) as fh:
            inp = BoundsInput.from_dict(json.load(fh))
    else:
        if args.m is None:
            raise UsageError("bounds needs --input or at least --m")
        lam = None if args.lam is None else np.array(args.lam, dtype=float)
        inp = BoundsInput(m=args.m, lam=lam, L=args.L, nu2=args.nu2, eps=args.eps,
                          gamma_h=args.gamma_h, beta=args.beta, k=args.k, n=args.n_dim,
                          N=args.N, alpha=args.alpha)
    if inp.alpha is not None:
        print(f"N = {heuristic_sample_count(inp.k or 1, inp.m, inp.alpha)}")
    if args.input or inp.lam is not None or args.out:
        report = evaluate_bounds(inp).to_dict()
        text = json.dumps(report, indent=2)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            print(text)
    return 0


def cmd_bench(args) -> int:
    source = GradientSource.forward(args.fd) if args.fd is not None else GradientSource.exact()
    if args.exp == "quadratic":
        if args.case not in (1, 2, 3):
            raise UsageError("--case must be 1, 2 or 3")
        rep = bench_mod.run_quadratic_experiment(
            args.case, source, args.alpha, args.k, args.seed, m=args.m or 10,
            model_seed=args.model_seed, n_boot=args.nboot, threads=args.threads)
    else:
        if args.fd is not None:
            raise UsageError("--fd is not supported for the elliptic experiment")
        rep = bench_mod.run_elliptic_experiment(
            args.beta, args.alpha, args.k, args.seed, m=args.m or 100, grid=args.grid,
            n_boot=args.nboot, threads=args.threads)
    paths = rep.write(args.outdir, args.name or rep.name)
    for key in ("json", "eigs", "subspace"):
        print(paths[key])
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="activemc", description=__doc__.splitlines()[0])
    p.add_argument("--json-errors", action="store_true", help="report errors as one-line JSON")
    p.add_argument("--threads", type=int, default=1, help="cap on worker threads")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    e = sub.add_parser("estimate", help="estimate eigenpairs of C from gradient samples")
    _add_source_args(e)
    e.add_argument("--out", help="write the estimate JSON here")
    e.add_argument("--eigs-csv", help="write eigenvalues as CSV here")
    e.add_argument("--k", type=int, default=6, help="number of eigenvalues to print")
    e.add_argument("--method", choices=("lapack", "jacobi"), default="lapack")
    e.set_defaults(usage=e.format_usage().strip(), func=cmd_estimate)

    b = sub.add_parser("bootstrap", help="bootstrap eigenvalue intervals and subspace distances")
    _add_source_args(b)
    b.add_argument("--k", type=int, default=6)
    b.add_argument("--alpha", type=float, default=2.0, help="multiplier for the default N")
    b.add_argument("--nboot", type=int, default=DEFAULT_NBOOT)
    b.add_argument("--outdir", default=".")
    b.add_argument("--name", default="bootstrap")
    b.set_defaults(usage=b.format_usage().strip(), func=cmd_bootstrap)

    d = sub.add_parser("bounds", help="evaluate sample-count heuristics and error bounds")
    d.add_argument("--input", help="BoundsInput JSON")
    d.add_argument("--m", type=int)
    d.add_argument("--k", type=int)
    d.add_argument("--n", dest="n_dim", type=int, help="active subspace dimension")
    d.add_argument("--alpha", type=float)
    d.add_argument("--lambda", dest="lam", type=float, nargs="+")
    d.add_argument("--L", type=float)
    d.add_argument("--nu2", type=float)
    d.add_argument("--eps", type=float)
    d.add_argument("--gamma-h", type=float, default=0.0)
    d.add_argument("--beta", type=float, default=1.0)
    d.add_argument("--N", type=int)
    d.add_argument("--out", help="write the JSON report here")
    d.set_defaults(usage=d.format_usage().strip(), func=cmd_bounds)

    r = sub.add_parser("bench", help="run a quadratic or elliptic experiment")
    r.add_argument("--exp", choices=("quadratic", "elliptic"), required=True)
    r.add_argument("--case", type=int, default=1)
    r.add_argument("--fd", type=float)
    r.add_argument("--alpha", type=float, default=2.0)
    r.add_argument("--k", type=int, default=6)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--model-seed", type=int, default=0)
    r.add_argument("--nboot", type=int, default=DEFAULT_NBOOT)
    r.add_argument("--beta", type=float, default=1.0)
    r.add_argument("--m", type=int)
    r.add_argument("--grid", type=int, default=512)
    r.add_argument("--outdir", default="bench_out")
    r.add_argument("--name")
    r.set_defaults(usage=r.format_usage().strip(), func=cmd_bench)
    return p


def _fail(args_json: bool, code: int, message: str, **extra) -> int:
    if args_json:
        print(json.dumps({"error": message, "exit_code": code, **extra}), file=sys.stderr)
    else:
        print(message, file=sys.stderr)
    return code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    json_errors = "--json-errors" in argv
    parser = build_parser()
    usage = parser.format_usage().strip()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(usage)
        usage = args.usage
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        return args.func(args)
    except UsageError as exc:
        msg = str(exc)
        if not msg.startswith("usage:"):
            msg = f"{usage}\nerror: {msg}"
        return _fail(json_errors, 1, msg)
    except CSVFormatError as exc:
        return _fail(json_errors, 2, str(exc), row=exc.row)
    except (ValueError, TypeError, OSError) as exc:
        return _fail(json_errors, 1, f"error: {exc}")


if __name__ == "__main__":
    sys.exit(main())
