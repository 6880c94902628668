//! Sparse recovery under random nonlinear Fourier feature (NFF) models.
//!
//! Data pairs `(x_i, y_i)` follow `y_i = Σ_k θ_k · N^{-1/2} exp(-j x_iᵀω_k)` with a
//! sparse coefficient vector `θ` over a fixed frequency dictionary `Ω`. The crate
//! provides:
//!
//! * [`kernelspace`]: frequency sets, the kernel induced by the input
//!   distribution, and the kernel matrix statistics (`λ_min`, `λ_max`, `β`, `k_max`);
//! * [`bounds`]: sufficient sample counts for exact recovery, the partial-DFT
//!   baseline, and ratio curves across input dimension;
//! * [`sensing`]: sparse ground truth, NFF and partial-DFT measurement matrices;
//! * [`bpsolver`]: an operator-splitting basis pursuit solver over complex or
//!   real coefficients;
//! * [`experiments`]: seeded Monte Carlo harnesses and concentration verifiers.
//!
//! Numerical code is generic over [`Real`]; the `*64` aliases fix `f64`.

pub mod bounds;
pub mod bpsolver;
pub mod error;
pub mod experiments;
pub mod kernelspace;
pub mod scalar;
pub mod seed;
pub mod sensing;

pub use error::{Error, Result};
pub use scalar::Real;

pub type FrequencySet64 = kernelspace::FrequencySet<f64>;
pub type InputDistribution64 = kernelspace::InputDistribution<f64>;
pub type KernelStats64 = kernelspace::KernelStats<f64>;
pub type BoundReport64 = bounds::BoundReport<f64>;
pub type SparseModel64 = sensing::SparseModel<f64>;
pub type FeatureMatrix64 = sensing::FeatureMatrix<f64>;
pub type SolverConfig64 = bpsolver::SolverConfig<f64>;
pub type SolverResult64 = bpsolver::SolverResult<f64>;

pub type FrequencySet32 = kernelspace::FrequencySet<f32>;
pub type KernelStats32 = kernelspace::KernelStats<f32>;
pub type BoundReport32 = bounds::BoundReport<f32>;
pub type SolverConfig32 = bpsolver::SolverConfig<f32>;
