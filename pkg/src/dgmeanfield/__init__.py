"""DR-submodular maximization over a box and provable mean-field inference.

The DR-DoubleGreedy solver is a 1/2-approximation for box-constrained
DR-submodular maximization. Applied to the ELBO of a log-submodular model it
gives a mean-field lower bound on ``ln Z`` with a worst-case guarantee.
"""
__version__ = "0.1.0"

from .bounds import (
    PaBound,
    exact_log_partition,
    exact_pa_objective,
    log_partition_upper,
    pa_lower_bound,
)
from .core import BoxDomain, DomainError, DrObjective, GroundSet
from .multilinear import MultilinearOracle, multilinear_grad, multilinear_value
from .objectives import ElboObjective, PaElboObjective, entropy
from .set_functions import (
    CutGraph,
    FlidModel,
    GibbsPolynomial,
    ModularFunction,
    SetCoverInstance,
    SetFunction,
    TableFunction,
    check_submodular,
)
from .solvers import (
    SolverConfig,
    SolverReport,
    coordinate_ascent,
    dg_mean_field,
    dr_double_greedy,
    get_solver,
    submodular_double_greedy,
)

__all__ = [
    "__version__",
    "BoxDomain", "DomainError", "DrObjective", "GroundSet",
    "SetFunction", "FlidModel", "CutGraph", "GibbsPolynomial", "SetCoverInstance",
    "ModularFunction", "TableFunction", "check_submodular",
    "MultilinearOracle", "multilinear_value", "multilinear_grad",
    "ElboObjective", "PaElboObjective", "entropy",
    "SolverConfig", "SolverReport", "dr_double_greedy", "submodular_double_greedy",
    "coordinate_ascent", "dg_mean_field", "get_solver",
    "exact_log_partition", "exact_pa_objective", "log_partition_upper", "pa_lower_bound", "PaBound",
]
