"""Generalized multidimensional knapsack toolkit.

Random-ensemble instances, message-passing marginal estimation (BP and
its node-variable reduction), marginal-guided greedy solving, exact
small-instance oracles, and the replica-symmetric theory of the typical
achievable profit, plus a benchmark harness tying them together.
"""

from .backend import HAS_NUMBA, USE_NUMBA, backend_name
from .cavity import BPState, GAMPState, IterOpts, Marginals, bp_run, gamp_run
from .errors import (
    BudgetExceededError,
    DegenerateSaddleError,
    GmdkpError,
    InfeasibleInstanceError,
    InstanceFormatError,
    NumericsError,
    SaddleConvergenceError,
)
from .greedy import GreedyTrace, density_greedy_solve, marginal_greedy_solve
from .instance import (
    EnsembleParams,
    Evaluation,
    Instance,
    Selection,
    evaluate,
    generate_instance,
    load_instance,
    save_instance,
)
from .oracle import ExactResult, exact_marginals, exact_optimum
from .replica import (
    EntropyPoint,
    OrderParams,
    TheoryResult,
    find_m_opt,
    profit_limit,
    rs_bracket,
    rs_entropy,
)
from .special import (
    gaussian_tail,
    log_gaussian_tail,
    log_partition,
    log_tail_d1,
    log_tail_d2,
    tail_curvature,
)

__version__ = "0.1.0"

__all__ = [
    "BPState",
    "BudgetExceededError",
    "DegenerateSaddleError",
    "EnsembleParams",
    "EntropyPoint",
    "Evaluation",
    "ExactResult",
    "GAMPState",
    "GmdkpError",
    "GreedyTrace",
    "HAS_NUMBA",
    "InfeasibleInstanceError",
    "Instance",
    "InstanceFormatError",
    "IterOpts",
    "Marginals",
    "NumericsError",
    "OrderParams",
    "SaddleConvergenceError",
    "Selection",
    "TheoryResult",
    "USE_NUMBA",
    "backend_name",
    "bp_run",
    "density_greedy_solve",
    "evaluate",
    "exact_marginals",
    "exact_optimum",
    "find_m_opt",
    "gamp_run",
    "gaussian_tail",
    "generate_instance",
    "load_instance",
    "log_gaussian_tail",
    "log_partition",
    "log_tail_d1",
    "log_tail_d2",
    "marginal_greedy_solve",
    "profit_limit",
    "rs_bracket",
    "rs_entropy",
    "save_instance",
    "tail_curvature",
]
