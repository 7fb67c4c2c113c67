"""Toeplitz covariance estimation by overparameterized gradient descent."""

from .bench import (
    BenchConfig,
    parse_method,
    run_bench,
    run_lipschitz_scan,
    run_speed_compare,
    speed_summary,
    summarize,
    trial_seed,
)
from .curvature import (
    HessianBlocks,
    dcov_da,
    dcov_domega,
    de_dtheta,
    hessian_blocks,
    lipschitz_approx,
)
from .likelihood import NllEvaluation, PositivityError, e_matrix, gradient, kl_divergence, nll
from .metrics import CrbResult, TrialRecord, classify_success, first_row_mse, toeplitz_crb
from .model import (
    CaratheodoryModel,
    assemble_covariance,
    hermitian_deviation,
    softplus_chain,
    steering_matrix,
    steering_vector,
    toeplitz_deviation,
)
from .optimizer import (
    AUTO,
    FitResult,
    IterTrace,
    LineSearchStall,
    OptimizerConfig,
    armijo_joint,
    armijo_split,
    default_epsilon,
    fit_gd1,
    fit_gd2,
    fit_gda,
    initialize,
    resolve_eta_w0,
)
from .scenarios import (
    SampleBatch,
    ScenarioSpec,
    atom_covariance,
    ar3_covariance,
    gohberg_semencul_precision,
    random_cara_covariance,
    read_batch,
    sample,
    sample_covariance,
    scenario_covariance,
    write_batch,
)

__version__ = "0.1.0"
