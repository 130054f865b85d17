"""W-random graphs, graphon spectra, cut-norm geometry and edge-count large deviations."""

__version__ = "0.1.0"

from .errors import NumericError, ValidationError
from .graphon import (BlockPermutation, Bipartite, Constant, Graphon, SmallWorld, StepGraphon,
                      edge_density, ell, evaluate, parse_graphon, project_to_step, pullback)
from .sampler import AdjacencyMatrix, SampleConfig, lift, sample
from .cutnorm import cut_distance, cut_norm, cut_norm_exact, cut_norm_heuristic, difference
from .spectral import (align_spectra, closed_form_spectrum, decompose_kernel, decompose_laplacian,
                       project_interval, projection_distance, to_spectral_measure, vague_diagnostic)
from .ldp import (brute_force_ldp, conditioned_rate, constraint_F, first_order_expansion, monte_carlo_ldp,
                  rate_upsilon, solve_tilt, verify_order)

__all__ = [
    "AdjacencyMatrix", "Bipartite", "BlockPermutation", "Constant", "Graphon", "NumericError",
    "SampleConfig", "SmallWorld", "StepGraphon", "ValidationError", "align_spectra",
    "brute_force_ldp", "closed_form_spectrum", "conditioned_rate", "constraint_F", "cut_distance",
    "cut_norm", "cut_norm_exact", "difference", "monte_carlo_ldp",
    "cut_norm_heuristic", "decompose_kernel", "decompose_laplacian", "edge_density", "ell",
    "evaluate", "first_order_expansion", "lift", "parse_graphon", "project_interval",
    "project_to_step", "projection_distance", "pullback", "rate_upsilon", "sample", "solve_tilt",
    "to_spectral_measure", "vague_diagnostic", "verify_order",
]
