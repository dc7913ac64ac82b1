#!/usr/bin/env python

__doc__ = """
Max-plus 2-norm regression: exact and Newton solvers, regularized fits,
identification of stochastic max-plus systems and set-cover hardness instances.
"""

import argparse
import functools
import os
import sys
import time
from typing import Callable, List, Optional

import numpy as np
from tqdm import tqdm

import tropreg.utils.logging_utils
from tropreg import __version__
from tropreg.errors import ParseError, TropregError
from tropreg.formats import (
    format_evidence,
    format_float,
    format_matrix,
    format_orbit,
    format_report,
    parse_matrix,
    parse_orbit,
    parse_vector,
)
from tropreg.hardness import (
    SetCoverInstance,
    build_reduction,
    setcover_bruteforce,
    setcover_catalog,
)
from tropreg.patterns import Pattern, iter_feasible_patterns, pattern_count_bound, pattern_dimension, project_pattern
from tropreg.reduction import Verdict
from tropreg.regularize import brute_force_inner, irsls, newton_inner
from tropreg.solvers import (
    DEFAULT_N_STARTS,
    DEFAULT_PATIENCE,
    NewtonConfig,
    RegressionProblem,
    brute_force_solve,
    infnorm_solve,
    multistart_newton,
    newton_solve,
)
from tropreg.sysid import identify, simulate
from tropreg.utils.helpers import SUPPORTED_SOLVERS
from tropreg.utils.seeding import get_rng
from tropreg.utils.threads import resolve_threads

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2

# gap below which the Newton residual counts as matching the exact one
BENCH_MATCH_TOL = 1e-6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common_options() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="Seed of every random draw. Default: 0")
    common.add_argument(
        "--out",
        default=None,
        help="Output file. Results are printed to stdout if not provided.",
    )
    return common


def _threads_option(parser):
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Number of worker threads. Default is the TROPREG_THREADS "
        "environment variable, else 1. Set to 0 to use all available cores.",
    )


def _get_parser():
    description = __doc__ + f"\nVersion: {__version__}\n"
    parser = _Parser(description=description)
    parser.add_argument("-l", "--log", "--loglevel", "--log-level", default=None, dest="loglevel")
    parser.add_argument("-v", "--version", action="version", version=__version__)

    common = _common_options()
    commands = parser.add_subparsers(dest="command", metavar="command")
    commands.required = True

    regress = commands.add_parser("regress", parents=[common], help="Solve one regression instance.")
    regress.add_argument("--A", required=True, dest="A", help="Matrix file.")
    regress.add_argument("--y", required=True, dest="y", help="Target file, an n x 1 matrix.")
    regress.add_argument("--solver", default="newton", choices=sorted(SUPPORTED_SOLVERS))
    regress.add_argument(
        "--lambda",
        type=float,
        default=0.0,
        dest="lam",
        help="Penalty weight of the regularized problem. IRSLS runs when positive.",
    )
    regress.add_argument(
        "--mu",
        type=float,
        default=None,
        help="Undershooting parameter in (0, 1]. Replaces the two-phase protocol by one Newton run.",
    )
    regress.add_argument("--patience", type=int, default=None, help="Non-improving steps before stopping.")
    regress.add_argument("--starts", type=int, default=DEFAULT_N_STARTS, help="Random starts for Newton.")
    _threads_option(regress)

    patterns = commands.add_parser("patterns", parents=[common], help="List the feasible patterns of a matrix.")
    patterns.add_argument("--A", required=True, dest="A")
    patterns.add_argument("--y", default=None, dest="y", help="Also report admissibility for this target.")

    simulate_cmd = commands.add_parser("sysid-simulate", parents=[common], help="Simulate a noisy orbit.")
    simulate_cmd.add_argument("--M", required=True, dest="M", help="System matrix file.")
    simulate_cmd.add_argument("--x0", default=None, help="Initial state file. Default: zeros.")
    simulate_cmd.add_argument("--N", required=True, type=int, dest="N", help="Number of transitions.")
    simulate_cmd.add_argument("--sigma", required=True, type=float, help="Noise standard deviation.")

    identify_cmd = commands.add_parser("sysid-identify", parents=[common], help="Estimate a system matrix.")
    identify_cmd.add_argument("--orbit", required=True)
    identify_cmd.add_argument("--lambda", type=float, default=0.0, dest="lam")
    identify_cmd.add_argument("--solver", default="newton", choices=sorted(SUPPORTED_SOLVERS))
    identify_cmd.add_argument("--starts", type=int, default=DEFAULT_N_STARTS)
    _threads_option(identify_cmd)

    hardgen = commands.add_parser("hardgen", parents=[common], help="Write set-cover reduction instances.")
    source = hardgen.add_mutually_exclusive_group(required=True)
    source.add_argument("--family", default=None, help='Sets of a family, 1-based, e.g. "1;2;1,2".')
    source.add_argument("--catalog", default=False, action="store_true", help="Write the whole catalog.")
    hardgen.add_argument("--n", type=int, default=None, dest="n", help="Size of the universe.")
    hardgen.add_argument("--k", type=int, default=None, dest="k", help="Cover budget.")

    bench = commands.add_parser("bench", parents=[common], help="Compare Newton against the exact solver.")
    bench.add_argument("--instances", type=int, default=20)
    bench.add_argument("--max-n", type=int, default=6, dest="max_n")
    bench.add_argument("--max-d", type=int, default=3, dest="max_d")
    bench.add_argument(
        "--timing",
        default=False,
        action="store_true",
        help="Add a wall_time column. Off by default so the output is reproducible.",
    )
    _threads_option(bench)

    return parser


def _read(path: str, parse: Callable):
    if not os.path.isfile(path):
        raise UsageError(f"No such file: {path}")
    with open(path) as f:
        text = f.read()
    try:
        return parse(text)
    except ParseError as e:
        raise ParseError(f"{path}: {e.message}", e.line, e.column) from None


def _write(args, lines: List[str]):
    text = "\n".join(line.rstrip("\n") for line in lines) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as f:
            f.write(text)


def _solve(args, prob: RegressionProblem, threads: int):
    if args.mu is not None or args.patience is not None:
        if args.solver != "newton":
            raise UsageError("--mu and --patience only apply to --solver newton")
        cfg = NewtonConfig(
            mu=1.0 if args.mu is None else args.mu,
            patience=DEFAULT_PATIENCE if args.patience is None else args.patience,
        )
        return newton_solve(prob, cfg, seed=args.seed)
    if args.solver == "newton":
        return multistart_newton(prob, seed=args.seed, n_starts=args.starts, threads=threads)
    if args.solver == "brute":
        return brute_force_solve(prob, threads=threads)
    return infnorm_solve(prob)


def regress(args) -> int:
    logger = tropreg.utils.logging_utils.get_logger()
    A = _read(args.A, parse_matrix)
    y = _read(args.y, parse_vector)
    if args.lam < 0:
        raise UsageError(f"--lambda must be nonnegative, got {args.lam}")
    if args.starts < 1:
        raise UsageError(f"--starts must be positive, got {args.starts}")
    threads = resolve_threads(args.threads)

    prob = RegressionProblem(A, y)
    report = _solve(args, prob, threads)
    if args.lam > 0 and report.verdict == Verdict.REDUCED.value:
        if args.solver == "brute":
            inner = brute_force_inner
        else:
            inner = functools.partial(newton_inner, seed=args.seed)
        logger.debug(f"Refining the {report.solver} solution with IRSLS, lambda={args.lam}")
        report = irsls(A, y, args.lam, report.solution, inner_solver=inner)
    _write(args, [format_report(report._replace(seed=args.seed))])
    return EXIT_OK


def patterns(args) -> int:
    A = _read(args.A, parse_matrix)
    y = None if args.y is None else _read(args.y, parse_vector)
    if y is not None:
        if y.shape != (A.shape[0],):
            raise UsageError(f"Target of length {y.shape[0]} for a matrix with {A.shape[0]} rows")
        if not np.isfinite(y).all():
            raise UsageError("Admissibility needs a finite target")

    n, d = A.shape
    lines, counts = [], {}
    for P, F in iter_feasible_patterns(A):
        dimension = pattern_dimension(P, d)
        counts[dimension] = counts.get(dimension, 0) + 1
        line = f"pattern={P} dimension={dimension}"
        if y is not None:
            proj = project_pattern(A, P, y, F=F)
            line += f" admissible={str(proj.admissible).lower()} distance={format_float(proj.distance)}"
        lines.append(line)

    lines.append("# summary")
    lines.append(f"patterns={sum(counts.values())}")
    lines.append(f"max_dimension={max(counts, default=0)}")
    for k in sorted(counts):
        lines.append(f"dimension={k} count={counts[k]} bound={pattern_count_bound(n, d, k)}")
    lines.append(f"seed={args.seed}")
    _write(args, lines)
    return EXIT_OK


def sysid_simulate(args) -> int:
    M = _read(args.M, parse_matrix)
    x0 = np.zeros(M.shape[0]) if args.x0 is None else _read(args.x0, parse_vector)
    orbit = simulate(M, x0, args.N, args.sigma, seed=args.seed)
    _write(args, [format_orbit(orbit)])
    return EXIT_OK


def sysid_identify(args) -> int:
    orbit = _read(args.orbit, parse_orbit)
    if args.lam < 0:
        raise UsageError(f"--lambda must be nonnegative, got {args.lam}")
    result = identify(
        orbit,
        lam=args.lam,
        solver=args.solver,
        seed=args.seed,
        n_starts=args.starts,
        threads=resolve_threads(args.threads),
    )
    _write(
        args,
        [
            format_matrix(result.matrix),
            format_evidence(result.evidence),
            f"frobenius_residual={format_float(result.frobenius)}",
            f"seed={args.seed}",
        ],
    )
    return EXIT_OK


def _hardgen_instances(args) -> List[SetCoverInstance]:
    if args.catalog:
        return setcover_catalog(seed=args.seed)
    if args.n is None or args.k is None:
        raise UsageError("--family needs --n and --k")
    try:
        family = Pattern.parse(args.family).rows
    except ParseError as e:
        raise UsageError(f"--family: {e.message}") from None
    return [SetCoverInstance(args.n, family, args.k)]


def hardgen(args) -> int:
    lines = []
    for sc in _hardgen_instances(args):
        prob = build_reduction(sc)
        lines.append(format_matrix(prob.A))
        lines.append(format_matrix(prob.y))
        cover = str(setcover_bruteforce(sc)).lower()
        lines.append(f"setcover n={sc.n} m={sc.m} k={sc.k} family={sc.family_str()} cover={cover}")
    lines.append(f"seed={args.seed}")
    _write(args, lines)
    return EXIT_OK


def _bench_instance(rng: np.random.Generator, max_n: int, max_d: int):
    n = int(rng.integers(1, max_n + 1))
    d = int(rng.integers(1, max_d + 1))
    A = np.round(rng.uniform(-3.0, 3.0, size=(n, d)), 2)
    y = np.round(rng.uniform(-3.0, 3.0, size=n), 2)
    return RegressionProblem(A, y)


def bench(args) -> int:
    if args.instances < 1 or args.max_n < 1 or args.max_d < 1:
        raise UsageError("--instances, --max-n and --max-d must be positive")
    threads = resolve_threads(args.threads)
    rng = get_rng(args.seed)
    header = "n d brute_residual newton_residual gap" + (" wall_time" if args.timing else "")
    lines, matched = [header], 0
    for index in tqdm(range(args.instances), desc="bench", file=sys.stderr):
        prob = _bench_instance(rng, args.max_n, args.max_d)
        started = time.perf_counter()
        exact = brute_force_solve(prob, threads=threads)
        newton = multistart_newton(prob, seed=args.seed + index, threads=threads)
        elapsed = time.perf_counter() - started
        gap = newton.residual_2norm - exact.residual_2norm
        matched += int(gap <= BENCH_MATCH_TOL)
        row = (
            f"{prob.n} {prob.d} {format_float(exact.residual_2norm)} "
            f"{format_float(newton.residual_2norm)} {format_float(gap)}"
        )
        if args.timing:
            row += f" {elapsed:.6f}"
        lines.append(row)
    lines.append("# summary")
    lines.append(f"instances={args.instances} matched={matched} match_rate={matched / args.instances!r}")
    lines.append(f"seed={args.seed}")
    _write(args, lines)
    return EXIT_OK


COMMANDS = {
    "regress": regress,
    "patterns": patterns,
    "sysid-simulate": sysid_simulate,
    "sysid-identify": sysid_identify,
    "hardgen": hardgen,
    "bench": bench,
}


def run(args) -> int:
    """Run the parsed command, mapping failures to exit codes."""
    logger = tropreg.utils.logging_utils.get_logger()
    try:
        return COMMANDS[args.command](args)
    except ParseError as e:
        print(f"{args.command}: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (UsageError, TropregError, ValueError) as e:
        logger.debug(f"{args.command} failed", exc_info=True)
        print(f"{args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main(argv: Optional[List[str]] = None) -> int:
    args = _get_parser().parse_args(argv)
    tropreg.utils.logging_utils.configure_logger(args.loglevel)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
