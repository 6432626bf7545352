"""Partial 3-coloring and independent sets on graphs of low threshold rank."""
from .estimators import ThresholdRankColoring, ThresholdRankIndependentSet
from .exceptions import (
    BackendInconsistencyError,
    CapExceededError,
    ConvergenceError,
    GraphFormatError,
    InfeasibleError,
    InfeasiblePinError,
    IrregularGraphError,
    PreconditionError,
    PSDViolationError,
    TraceViolationError,
    ZeroProbabilityError,
)
from .graph import (
    Graph,
    PartialColoring,
    blow_up,
    complete_multipartite,
    cycle,
    disjoint_union,
    load_graph,
    perturb_almost_colorable,
    random_regular,
    verify_partial_coloring,
)
from .pseudo import conditioning_loop, exact_from_colorings, exact_from_independent_sets, global_correlation
from .relaxation import SolverConfig, build_coloring_relaxation, build_is_relaxation, solve
from .rounding import RoundingReport, solve_3coloring, solve_max_is
from .spectral import random_walk_spectrum, threshold_rank

__version__ = "0.1.0"
