//! Seeded Monte Carlo harnesses: the MSE-versus-sparsity sweep, empirical
//! checks of the concentration bounds, and the `M_k / M_f` ratio figure.
//!
//! Every random draw is keyed through [`crate::seed::derive_seed`], so output
//! tables depend only on the configuration and the master seed, never on the
//! number of worker threads.

mod concentration;
mod figure;
mod sweep;

pub use concentration::{
    epsilon_i, epsilon_p, epsilon_s, pinv_column_norms, verify_eigenvalue_bound, verify_inner_product_bound,
    verify_pinv_norm_bound, BoundCheck, ConcentrationProbe, PinvCheck,
};
pub use figure::{default_ratio_config, manifest_path, run_ratio_figure, RunManifest};
pub use sweep::{
    prepare_trial, run_mse_sweep, write_sweep_csv, write_trials_csv, CellSummary, ExperimentConfig, MseSweep,
    TrialOutcome, TrialRecord, SWEEP_CSV_HEADER, TRIALS_CSV_HEADER,
};
