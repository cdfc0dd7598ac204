from .markov import (StochasticMatrix, DistributionVector, Partition,
                     stationary_distribution, transient_distribution,
                     mixing_time, sample_trajectory, build_aggregatable,
                     sample_dirichlet_rows, sample_perturbed,
                     spectral_summary, random_partition)
from .jumpmodel import (JumpModel, Trajectory, simulate, estimate_modes,
                        check_separability, poles_to_ar_coeffs, robot_model,
                        sample_jump_model)
from .estimation import (TransitionCounts, count_transitions,
                         empirical_matrix, empirical_frequency,
                         perturbation_stats)
from .spectral import (truncate_svd, sin_theta_distance, weyl_gap,
                       wedin_combined_bound, procrustes_align)
from .clustering import (kmeans, misclustering_rate, clustering_error,
                         kmeans_epsilon_certificate)
from .reduction import (ReducedModel, BoundReport, aggregate_reestimate,
                        reduced_multiply, reduced_stationary,
                        bound_stationary_diff, bound_mr, bound_p_diff,
                        run_pipeline)
from .experiments import (ExperimentConfig, ExperimentRecord,
                          run_synthetic_sweep, run_perturbation_sweep,
                          run_robot, emit_plot_data)
from .settings import set_options


__version__ = '0.1.0'
