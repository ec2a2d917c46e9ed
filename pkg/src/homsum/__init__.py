"""homsum: exact and Monte Carlo machinery for Gaussian approximation of
vectors of homogeneous sums in high dimensions."""

from .kernels import (SymmetricKernel, ContractionResult, contract, symmetrize,
                      tensor_sym, nr_identity_check, offdiag_tensor_bound_check,
                      c_q, read_kernel, write_kernel, banded_kernel,
                      banded_spike_family, banded_loo_family, random_sparse_kernel)
from .distributions import (VariableSpec, MomentTable, parse_law, law_to_str,
                            gaussian_spec, rademacher_spec, gamma_plus_spec,
                            gamma_minus_spec, poisson_spec, two_point_spec,
                            multiplier_two_point_spec, match_third_moment,
                            psi_alpha_norm, tail_bound_check)
from .moments import (HomSumSystem, exact_product_moment, kappa4, kappa4_exact,
                      dejong_q2_fourth_moment, contraction_bound_check,
                      transfer_inequality_check)
from .gammacalc import (GammaCalcContext, ChaosDecomposition, var_Jk,
                        gamma_variance, gamma_pathwise, gamma_pathwise_samples,
                        prop52_bound_terms, zheng_inequalities_check,
                        key_inequalities_check, hypercontractivity_constants)
from .smoothmax import (phi_beta, phi_derivatives, g0, g0_derivative_sup,
                        derivative_sum_bound_check, delta_epsilon_estimate,
                        nazarov_check, RescaledCutoff)
from .lindeberg import (HybridPath, LindebergParams, uv_split, lambda_rates,
                        interpolation_experiment, evaluate_q)
from .simulate import (sample_Q, sample_gaussian, kolmogorov_orthant,
                       kolmogorov_max_stat, bound_rates, rate_conformance_study,
                       wasserstein_kolmogorov_check_1d, moment_growth_diagnostic,
                       BoundRates)
from .config import ExperimentConfig, FamilySpec, load_config, write_config, build_systems
from .records import ResultRecord, write_results_csv, RESULT_HEADER
from .errors import CapExceeded, ConfigError

__version__ = "0.1.0"
