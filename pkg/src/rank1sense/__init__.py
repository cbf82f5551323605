"""Low-rank matrix recovery from rank-one Gaussian measurements by alternating minimization."""

__version__ = "0.1.0"

from .altmin import (
    ConvergenceTrace,
    DecayRatios,
    SolverConfig,
    decay_ratios,
    fast_matrix_sensing,
    required_iterations,
)
from .diagnostics import (
    BlockMatrices,
    OperatorReport,
    ShrinkingReport,
    ZNormReport,
    b_operators,
    build_block_matrices,
    check_all,
    fourth_moment_check,
    g_operators,
    init_operator,
    orthogonal_complement,
    random_probe,
    sample_size,
    shrinking_step_report,
    z_norm_check,
)
from .errors import *  # noqa: F401,F403
from .linalg import (
    power_spectral_norm,
    row_kron,
    sigma_min,
    spectral_norm,
    thin_qr,
    top_k_left_singular_vectors,
    top_k_right_singular_vectors,
    unvectorize,
    vectorize,
)
from .regression import (
    RegressionProblem,
    build_design_matrix,
    build_design_matrix_naive,
    condition_number,
    kappa_factors,
    sensing_objective,
    solve_naive,
    solve_sensing_step,
    solve_sketched,
)
from .sensing import (
    GroundTruth,
    MeasurementEnsemble,
    evaluate,
    make_ground_truth,
    make_rng,
    sample_ensemble,
    split_ensemble,
)
from .subspace import cos_theta, dist, sin_theta, tan_theta
