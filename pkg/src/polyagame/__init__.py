"""Network contagion on Polya urns with an adversarial curing/infection game.

Each node holds an urn of red (infected) and black (healthy) ball
masses; draws sample the pooled urn of a node's closed neighborhood,
and budgeted players add curing or infection mass after every draw.
The package simulates the process, evaluates the one-step expected
network exposure with exact analytic gradients, computes the game's
Nash equilibrium with a certified duality gap, and reproduces the
three-network/three-case infection-rate comparison.
"""

from . import backend
from .exposure import (ENUMERATION_CAP, ExposureCoefficients, ExposureEvaluation,
                       OutcomeMatrices, coefficients, expected_exposure_exact,
                       expected_exposure_mc, gradient_check, node_exposure,
                       outcome_matrices, self_adjacency_matrix)
from .experiments import (CASE_NAMES, ExperimentConfig, InfectionCurve, case_policy,
                          run_case, run_figure4, write_curves_csv, write_gnuplot_script)
from .graphs import (Network, NetworkError, SelfAdjacency, builtin_network,
                     closed_neighborhood, load_network_document, parse_network,
                     self_adjacency)
from .saddle import (Equilibrium, SolverOptions, WarmStart, project_simplex,
                     restricted_gap, solve_equilibrium, solve_on_coefficients,
                     write_trace_csv)
from .urns import (ClassicalUrn, PolicyPair, Trajectory, UrnState,
                   all_super_urn_proportions, classical_step, network_exposure,
                   network_step, simulate_trajectory, super_urn_proportion,
                   trial_uniforms)

__version__ = "0.1.0"

__all__ = [
    "ENUMERATION_CAP", "CASE_NAMES",
    "Network", "NetworkError", "SelfAdjacency", "builtin_network",
    "closed_neighborhood", "load_network_document", "parse_network", "self_adjacency",
    "ClassicalUrn", "classical_step", "UrnState", "PolicyPair", "Trajectory",
    "super_urn_proportion", "all_super_urn_proportions", "network_exposure",
    "network_step", "simulate_trajectory", "trial_uniforms",
    "ExposureCoefficients", "OutcomeMatrices", "ExposureEvaluation", "coefficients",
    "outcome_matrices", "node_exposure", "self_adjacency_matrix",
    "expected_exposure_exact", "expected_exposure_mc", "gradient_check",
    "SolverOptions", "WarmStart", "Equilibrium", "project_simplex",
    "solve_equilibrium", "solve_on_coefficients", "restricted_gap", "write_trace_csv",
    "ExperimentConfig", "InfectionCurve", "case_policy", "run_case", "run_figure4",
    "write_curves_csv", "write_gnuplot_script",
    "backend", "__version__",
]
