"""Disparity between two groups' influence on consensus under DeGroot and
Friedkin-Johnsen opinion dynamics."""
from .degroot import (DisparityReport, degroot_consensus, disparity_degroot, max_disparity_partition,
                      metropolis_chain, min_disparity_partition, mixing_time, optimal_opinions_degroot,
                      optimal_stationary_degroot, trivial_maximizers)
from .errors import DisconnectedGraphError, GraphError, GraphTooLargeError, ReducibleChainError
from .fj import (build_min_disparity_instance, disparity_fj, expected_gradient, fj_consensus,
                 fj_disparity_gradient, fj_max_balanced, fj_min_opinions_partition, fj_optimize_weights,
                 sparsify_disparity)
from .graph import (Partition, WeightedGraph, check_opinions, incidence_vector, laplacian, partition_stats,
                    random_opinions, read_edgelist, row_stochastic, write_edgelist)
from .interventions import ContractionPlan, contract, contraction_monotonicity_check
from .random_models import (SbmSpec, disparity_interval_check, gen_core_periphery, gen_two_cliques,
                            subgraph_eigenvalue_check)
from .spectral import (EigenPair, extreme_laplacian_eigs, principal_left_eigenvector, solve_I_plus_L,
                       spectral_partition)

__version__ = "0.1.0"
