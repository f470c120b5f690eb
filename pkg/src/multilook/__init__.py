"""Maximum-likelihood reconstruction from multilook speckled coherent measurements."""

from .bagging import BaggedResult, BagSpec, bagged_project, partition, reassemble
from .decoder import (
    AdamState,
    DecoderConfig,
    DecoderParams,
    decoder_forward,
    decoder_loss_grads,
    fit_decoder,
    param_count,
)
from .errors import (
    BadShapeError,
    ConfigError,
    ConvergenceError,
    CorruptFileError,
    DivergedError,
    MultilookError,
    NonFiniteError,
    SingularMatrixError,
)
from .likelihood import (
    ColumnCache,
    CovarianceState,
    build_column_cache,
    build_covariance,
    grad_nll_fast,
    grad_nll_full,
    grad_nll_real,
    nll_complex,
    nll_real,
    refresh_inverse,
)
from .linalg import (
    BlockHermitian,
    block_embed,
    exact_inverse_block,
    newton_schulz_converge,
    newton_schulz_step,
    spectral_bounds,
)
from .measurement import (
    LookSet,
    SceneImage,
    SensingMatrix,
    generate_looks,
    init_estimate,
    make_sensing,
    stack_real,
)
from .metrics import psnr, ssim
from .pgd import IterationRecord, PgdConfig, default_step_size, pgd_run, pgd_step
from .rng import RngSpec
from .theory import (
    LemmaReport,
    LipschitzGenerator,
    MleOptions,
    SweepConfig,
    lemma_checks,
    mle_solve_real,
    sweep_mse,
)

__version__ = "0.1.0"
