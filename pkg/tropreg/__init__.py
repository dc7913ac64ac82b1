# type: ignore

from importlib.metadata import PackageNotFoundError, version  # pragma: no cover

try:
    # Change here if project is renamed and does not equal the package name
    dist_name = __name__
    __version__ = version(dist_name)
except PackageNotFoundError:  # pragma: no cover
    __version__ = "unknown"
finally:
    del version, PackageNotFoundError

from tropreg.maxplus import (
    NEG_INF,
    TOL,
    kleene_star,
    mat_mat,
    mat_vec,
    max_cycle_mean,
    pnorm_distance,
    residual,
    star_column_mean,
)
from tropreg.patterns import Pattern, iter_feasible_patterns, pattern_of, project_pattern
from tropreg.reduction import lift, reduce
from tropreg.solvers import (
    NewtonConfig,
    RegressionProblem,
    SolveReport,
    brute_force_solve,
    infnorm_solve,
    multistart_newton,
    newton_solve,
)
from tropreg.regularize import IrslsConfig, irsls
from tropreg.sysid import identify, simulate
from tropreg.hardness import SetCoverInstance, build_reduction, descent_exists_binary
import tropreg.utils.logging_utils

__all__ = [
    "NEG_INF",
    "TOL",
    "mat_vec",
    "mat_mat",
    "pnorm_distance",
    "residual",
    "max_cycle_mean",
    "kleene_star",
    "star_column_mean",
    "Pattern",
    "pattern_of",
    "project_pattern",
    "iter_feasible_patterns",
    "reduce",
    "lift",
    "RegressionProblem",
    "SolveReport",
    "NewtonConfig",
    "brute_force_solve",
    "newton_solve",
    "multistart_newton",
    "infnorm_solve",
    "IrslsConfig",
    "irsls",
    "simulate",
    "identify",
    "SetCoverInstance",
    "build_reduction",
    "descent_exists_binary",
    "__version__",
]
