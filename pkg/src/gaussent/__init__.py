"""Separability and bound entanglement of bipartite Gaussian states via LMIs."""

__version__ = "0.1.0"

from .errors import (
    GaussentError,
    InputError,
    NotPositiveDefiniteError,
    NotSymplecticError,
    NotUnitaryError,
    NumericalError,
    UnphysicalStateError,
)
from .gaussian import (
    CovarianceMatrix,
    ModePartition,
    is_physical,
    partial_transpose,
    ppt_check,
    symplectic_eigenvalues,
    symplectic_form,
)
from .lmi import LmiBlock, LmiProblem, Verdict, eval_constraints, solve_feasibility, verify_certificate
from .separability import StateClass, build_problem, classify, validate_witness
from .symplectic import (
    GaussianRecipe,
    compose_covariance,
    euler_decompose,
    unitary_to_symplectic,
    williamson_decompose,
)
from .circuit import CircuitDescription, replay_circuit, synthesize_circuit, synthesize_passive, verify_network
from .boundsearch import SearchConfig, paper_example, search

__all__ = [
    "__version__",
    "GaussentError",
    "InputError",
    "NotPositiveDefiniteError",
    "NotSymplecticError",
    "NotUnitaryError",
    "NumericalError",
    "UnphysicalStateError",
    "CovarianceMatrix",
    "ModePartition",
    "is_physical",
    "partial_transpose",
    "ppt_check",
    "symplectic_eigenvalues",
    "symplectic_form",
    "LmiBlock",
    "LmiProblem",
    "Verdict",
    "eval_constraints",
    "solve_feasibility",
    "verify_certificate",
    "StateClass",
    "build_problem",
    "classify",
    "validate_witness",
    "GaussianRecipe",
    "compose_covariance",
    "euler_decompose",
    "unitary_to_symplectic",
    "williamson_decompose",
    "CircuitDescription",
    "replay_circuit",
    "synthesize_circuit",
    "synthesize_passive",
    "verify_network",
    "SearchConfig",
    "paper_example",
    "search",
]
