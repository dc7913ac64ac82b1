from tropreg.solvers import brute_force_solve, infnorm_solve, multistart_newton

SUPPORTED_SOLVERS = {
    "brute": brute_force_solve,
    "newton": multistart_newton,
    "infnorm": infnorm_solve,
}


def get_solver(solver_name):
    if solver_name not in SUPPORTED_SOLVERS:
        raise NotImplementedError("Solver {} does not exist.".format(solver_name))
    return SUPPORTED_SOLVERS[solver_name]
