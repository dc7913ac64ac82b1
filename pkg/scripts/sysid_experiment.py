from os.path import dirname, realpath
import sys
sys.path.append(dirname(dirname(realpath(__file__))))
import argparse

import numpy as np
from tqdm import tqdm

from tropreg.formats import format_matrix
from tropreg.maxplus import NEG_INF, max_cycle_mean
from tropreg.sysid import frobenius_residual, growth_rate, identify, neg_log_likelihood, simulate
from tropreg.utils.logging_utils import configure_logger, get_logger

SYSTEM_M = np.array(
    [
        [7.0, 15.0, 10.0, NEG_INF],
        [14.0, NEG_INF, 11.0, 11.0],
        [14.0, NEG_INF, NEG_INF, NEG_INF],
        [15.0, 8.0, 7.0, 9.0],
    ]
)

parser = argparse.ArgumentParser(description="Identify the four-node system from noisy orbits.")
parser.add_argument("--N", type=int, default=200)
parser.add_argument("--sigmas", type=float, nargs="+", default=[1.0, 5.0])
parser.add_argument("--lambdas", type=float, nargs="+", default=[0.0, 10.0])
parser.add_argument("--seeds", type=int, default=1, help="Orbits per noise level.")
parser.add_argument("--threads", type=int, default=1)
parser.add_argument("--loglevel", default="INFO")


if __name__ == "__main__":
    args = parser.parse_args()
    configure_logger(args.loglevel)
    logger = get_logger()
    logger.info(f"Growth rate of the true system: {max_cycle_mean(SYSTEM_M)}")

    runs = [(sigma, lam, seed) for sigma in args.sigmas for lam in args.lambdas for seed in range(args.seeds)]
    for sigma, lam, seed in tqdm(runs, desc="sysid"):
        orbit = simulate(SYSTEM_M, np.zeros(4), args.N, sigma, seed=seed)
        result = identify(orbit, lam=lam, seed=seed, threads=args.threads)
        truth = frobenius_residual(SYSTEM_M, orbit)
        print(f"sigma={sigma} lambda={lam} seed={seed}")
        print(f"growth_rate={' '.join(f'{g:.3f}' for g in growth_rate(orbit))}")
        print(f"frobenius_estimate={result.frobenius:.4f} frobenius_truth={truth:.4f}")
        print(f"nll_estimate={neg_log_likelihood(result.matrix, orbit, sigma):.4f}")
        print(format_matrix(np.round(result.matrix, 2)), end="")
        print("evidence")
        print(result.evidence)
