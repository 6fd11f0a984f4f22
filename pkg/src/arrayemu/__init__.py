"""MIMO radar DOA estimation via neural emulation of large virtual arrays."""

from .arrays import (
    ArrayConfig,
    SnapshotBlock,
    TargetScene,
    draw_rcs,
    draw_scene,
    snr_to_noise_var,
    steering_matrix,
    steering_rx,
    steering_tx,
    synthesize_block,
    synthesize_pair,
    virtual_steering,
)
from .music import (
    CovarianceEstimate,
    EigenStructure,
    SpectrumResult,
    doa_mse,
    hermitian_eig,
    music_spectrum,
    noise_subspace,
    pick_peaks,
    sample_covariance,
)
from .metrics import CrbResult, cov_error, cov_error_offset, crb, steering_derivative
from .network import (
    MlpModel,
    OptimizerState,
    TrainConfig,
    TrainingError,
    adam_step,
    load_model,
    minmax_apply,
    minmax_fit,
    minmax_invert,
    mlp_backward,
    mlp_forward,
    predict,
    save_model,
    stack_real_imag,
    train,
    unstack_real_imag,
)
from .harness import (
    ExperimentConfig,
    Harness,
    SweepResult,
    SweepRow,
    best_train_snr_grid,
    build_datasets,
    denoise_analysis,
    parse_config_file,
    read_dataset,
    read_results,
    run_case_sweep,
    write_dataset,
    write_results,
)

__version__ = "0.1.0"
