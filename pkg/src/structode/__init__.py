"""Structural block schemes SK(K,R) for ODE initial value problems."""

from .analysis import (
    ButcherTableau,
    HurwitzReport,
    RationalTransfer,
    a_stability,
    arg_deviation,
    butcher_export,
    deviation,
    dispersion_table,
    find_min_n,
    hurwitz_matrix,
    transfer_function,
    zeta,
)
from .benchmark import BenchmarkSpec, ConvergenceRow, emit_table, parse_csv, reference_solution, run_benchmark
from .errors import *  # noqa: F401,F403
from .jets import OdeProblem, lift_derivatives
from .numerics import DOUBLE, Poly, Precision, get_precision
from .postproc import PostProcessor, build_postprocessor
from .problems import get_problem
from .solver import SolverConfig, Trace, errors_at_final, integrate
from .structural import SchemeId, StructuralBasis, build_constraint_matrix, get_basis, split

__version__ = "0.1.0"
