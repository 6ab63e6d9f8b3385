"""Local noise statistics of filtered back-projection on discrete grids.

Simulates pure sinogram noise pushed through discrete filtered
back-projection, predicts the limiting Gaussian covariance of the local
reconstruction, and validates the prediction by Monte Carlo.
"""

from .config import ConfigError, ExperimentConfig, default_config
from .ensemble import (
    ComparisonReport,
    EnsembleStats,
    compare,
    epsilon_sweep,
    gaussian_pdf_on_grid,
    run_ensemble,
)
from .fbp import (
    ReconstructionResult,
    local_weights,
    prefactor,
    radon_disk,
    reconstruct_image,
    reconstruct_local,
)
from .geometry import (
    AssumptionReport,
    GridSpec,
    LocalPatch,
    a_k_all,
    a_k_of,
    build_grid,
    check_assumptions,
    continued_fraction,
    estimate_irrationality_type,
)
from .kernels import (
    Autocorrelation,
    FilteredKernelTable,
    Kernel,
    TableBuildError,
    autocorrelation_exact,
    build_autocorrelation,
    build_filtered_kernel,
    filtered_autocorrelation,
    filtered_derivative,
    kernel_spectrum,
    keys_kernel,
)
from .noise import (
    NoiseDraw,
    VarianceField,
    absolute_third_moment,
    draw_noise,
    make_sigma2_constant,
    make_sigma2_custom,
    make_sigma2_product,
    noise_scale,
    third_moment_bound_check,
)
from .theory import (
    LatticeSumProbe,
    PredictedCovariance,
    big_psi_sum,
    d_epsilon,
    d_epsilon_limit,
    lyapunov_ratio,
    lyapunov_ratio_multi,
    predicted_cov_matrix,
    predicted_cov_scalar,
    psi_sum,
    second_moment_multi,
)

__version__ = "0.1.0"
