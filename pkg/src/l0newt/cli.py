"""Command-line entry point: ``l0newt solve`` for single problems read
from disk, ``l0newt bench`` for seeded experiment sweeps.

Exit status is 0 on success and 2 on a configuration error (bad flags,
malformed files, inconsistent shapes).
"""

import argparse
import json
import sys

import numpy as np

from . import bench as bench_mod
from .core import DimensionMismatchError, InvalidInputError
from .io import read_matrix, read_vector
from .oracles import LeastSquaresOracle, NcpLcpOracle
from .solver import ConfigurationError, SolverConfig, solve

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="l0newt",
        description="Sparse optimization via a regularized block Newton method",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="solve one problem read from disk")
    sp.add_argument("--objective", choices=("ls", "lcp"), required=True)
    sp.add_argument("--matrix", required=True, help="Matrix Market file (A or M)")
    sp.add_argument("--rhs", required=True, help="vector file (y or q)")
    sp.add_argument("--x0", default=None, help="optional starting point file")
    sp.add_argument("--tau", type=float, default=None)
    sp.add_argument("--lambda", dest="lam", type=float, default=None)
    sp.add_argument("--delta", type=float, default=1e-4)
    sp.add_argument("--sigma", type=float, default=1e-4)
    sp.add_argument("--beta", type=float, default=0.5)
    sp.add_argument("--eps", type=float, default=1e-6)
    sp.add_argument("--cap-d", type=float, default=0.1)
    sp.add_argument("--max-iter", type=int, default=2000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument(
        "--index-rule",
        choices=("default", "paper-literal"),
        default="default",
        help="working-set fallback rule when no fresh indices appear",
    )
    sp.add_argument("--report", required=True, help="output JSON path")

    bp = sub.add_parser("bench", help="run a seeded benchmark sweep")
    bp.add_argument("--kind", choices=sorted(bench_mod.KIND_CODES), required=True)
    bp.add_argument("--n", required=True, help="comma-separated problem sizes")
    bp.add_argument("--m-ratio", type=float, default=None)
    bp.add_argument("--sparsity-ratio", type=float, default=0.01)
    bp.add_argument("--noise", type=float, default=None)
    bp.add_argument("--trials", type=int, default=20)
    bp.add_argument("--algorithms", default="mbnl0r", help="comma-separated list")
    bp.add_argument("--seed", type=int, default=42)
    bp.add_argument("--tau", type=float, default=None)
    bp.add_argument("--lambda", dest="lam", type=float, default=None)
    bp.add_argument("--lambda-frac", type=float, default=bench_mod.DEFAULT_LAMBDA_FRAC)
    bp.add_argument("--eps", type=float, default=1e-6)
    bp.add_argument("--max-iter", type=int, default=2000)
    bp.add_argument("--out", required=True, help="output CSV path")
    bp.add_argument("--json", dest="json_out", default=None, help="optional JSON path")
    bp.add_argument(
        "--no-wall-time",
        action="store_true",
        help="record 0 in the time column for byte-reproducible output",
    )
    return parser


def _cmd_solve(args) -> int:
    matrix = read_matrix(args.matrix)
    rhs = read_vector(args.rhs)
    if args.objective == "ls":
        oracle = LeastSquaresOracle(matrix, rhs)
    else:
        oracle = NcpLcpOracle(matrix, rhs)
    x0 = read_vector(args.x0) if args.x0 else None
    cfg = SolverConfig(
        tau=args.tau,
        lam=args.lam,
        delta=args.delta,
        sigma=args.sigma,
        beta=args.beta,
        epsilon=args.eps,
        cap_d=args.cap_d,
        max_iter=args.max_iter,
        seed=args.seed,
        index_rule=args.index_rule,
    )
    report = solve(oracle, cfg, x0=x0)
    with open(args.report, "w") as handle:
        json.dump(report.to_dict(), handle, indent=2)
        handle.write("\n")
    print(
        f"stop={report.stop_reason} converged={report.converged} "
        f"iterations={report.iterations} residual={report.residual_final:.3e} "
        f"nnz={int(np.count_nonzero(report.x_final))}"
    )
    return 0


def _cmd_bench(args) -> int:
    sizes = [int(tok) for tok in args.n.split(",") if tok]
    if not sizes:
        raise ConfigurationError("--n must list at least one size")
    algorithms = [tok.strip() for tok in args.algorithms.split(",") if tok.strip()]
    overrides = {
        "lambda_frac": args.lambda_frac,
        "epsilon": args.eps,
        "max_iter": args.max_iter,
    }
    if args.tau is not None:
        overrides["tau"] = args.tau
    if args.lam is not None:
        overrides["lam"] = args.lam
    records = bench_mod.run_trials(
        args.kind,
        sizes,
        args.trials,
        algorithms=algorithms,
        base_seed=args.seed,
        m_ratio=args.m_ratio,
        sparsity_ratio=args.sparsity_ratio,
        noise=args.noise,
        overrides=overrides,
        record_time=not args.no_wall_time,
    )
    with open(args.out, "w") as handle:
        handle.write(bench_mod.emit_csv(records))
    if args.json_out:
        with open(args.json_out, "w") as handle:
            handle.write(bench_mod.emit_json(records))
    for row in bench_mod.averages(records):
        print(
            f"{row['algorithm']} {row['kind']} n={row['n']} iter={row['iter']} "
            f"time={row['time_s']:.2f} res={row['res']:.2e} "
            f"converged={row['converged_rate']:.2f}"
        )
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        return _cmd_bench(args)
    except (
        ConfigurationError,
        InvalidInputError,
        DimensionMismatchError,
        FileNotFoundError,
        ValueError,
    ) as exc:
        print(f"l0newt: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
