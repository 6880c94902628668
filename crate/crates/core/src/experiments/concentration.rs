use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernelspace::{build_kernel_matrix, kernel_value, FrequencySet, InputDistribution};
use crate::scalar::cis_neg;
use crate::seed::derive_seed;
use crate::sensing::sample_inputs;

/// Deviation parameters of the concentration events.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationProbe {
    /// Eigenvalue slack, in `(0, λ_min(K))`.
    pub t_i: f64,
    /// Cross-correlation slack, in `(0, 2]`.
    pub t_p: f64,
    /// Inner-product slack, `>= 0`.
    pub t_s: f64,
    pub trials: usize,
}

impl ConcentrationProbe {
    fn check_t_i(&self, lambda_min: f64) -> Result<()> {
        if !(self.t_i > 0.0 && self.t_i < lambda_min) {
            return Err(Error::param(format!("t_I must lie in (0, {lambda_min}), got {}", self.t_i)));
        }
        Ok(())
    }

    fn check_t_p(&self) -> Result<()> {
        if !(self.t_p > 0.0 && self.t_p <= 2.0) {
            return Err(Error::param(format!("t_P must lie in (0, 2], got {}", self.t_p)));
        }
        Ok(())
    }

    fn check_trials(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::param("trials must be >= 1"));
        }
        Ok(())
    }
}

/// `ε_I = 2D exp(−t_I² M / (2D λ_min (β + 2/3)))`.
pub fn epsilon_i(t_i: f64, m: f64, sparsity_d: usize, lambda_min: f64, beta: f64) -> f64 {
    let d = sparsity_d as f64;
    2.0 * d * (-t_i * t_i * m / (2.0 * d * lambda_min * (beta + 2.0 / 3.0))).exp()
}

/// `ε_P = N² exp(−t_P² M / (14/3))`.
pub fn epsilon_p(t_p: f64, m: f64, n: usize) -> f64 {
    let n = n as f64;
    n * n * (-t_p * t_p * m / (14.0 / 3.0)).exp()
}

/// `ε_s = 2 exp(−t_s² / (2M + 4 t_s / 3))`.
pub fn epsilon_s(t_s: f64, m: f64) -> f64 {
    2.0 * (-t_s * t_s / (2.0 * m + 4.0 * t_s / 3.0)).exp()
}

/// Empirical frequency of a concentration event against its failure bound `ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub trials: usize,
    /// Trials in which the event held.
    pub holds: usize,
    pub empirical_rate: f64,
    pub failure_rate: f64,
    pub epsilon: f64,
    /// `3 sqrt(ε(1 − ε) / trials)`, with `ε` clamped to `[0, 1]`.
    pub slack: f64,
    /// `ε >= 1`: the bound says nothing.
    pub vacuous: bool,
    pub within_bound: bool,
}

impl BoundCheck {
    fn new(trials: usize, holds: usize, epsilon: f64) -> Self {
        let vacuous = epsilon >= 1.0;
        let (empirical_rate, failure_rate, slack) = if trials == 0 {
            (0.0, 1.0, 0.0)
        } else {
            let t = trials as f64;
            let e = epsilon.clamp(0.0, 1.0);
            let rate = holds as f64 / t;
            (rate, 1.0 - rate, 3.0 * (e * (1.0 - e) / t).sqrt())
        };
        Self {
            trials,
            holds,
            empirical_rate,
            failure_rate,
            epsilon,
            slack,
            vacuous,
            within_bound: vacuous || failure_rate <= epsilon + slack,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinvCheck {
    /// Counted over the trials where the eigenvalue event held.
    pub check: BoundCheck,
    pub eta: f64,
    pub conditioning_failures: usize,
}

fn check_support(support: &[usize], n: usize) -> Result<()> {
    if support.is_empty() {
        return Err(Error::param("support must be nonempty"));
    }
    if let Some(&bad) = support.iter().find(|&&k| k >= n) {
        return Err(Error::IndexOutOfRange { index: bad, len: n });
    }
    let mut s = support.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.len() != support.len() {
        return Err(Error::param("support indices must be distinct"));
    }
    Ok(())
}

/// Columns `cols` of the `N`-column NFF matrix, scaled by `N^{-1/2}` of the full set.
fn nff_columns(x: &DMatrix<f64>, freqs: &FrequencySet<f64>, cols: &[usize]) -> DMatrix<Complex<f64>> {
    let scale = 1.0 / (freqs.n() as f64).sqrt();
    let w = freqs.matrix();
    DMatrix::from_fn(x.nrows(), cols.len(), |i, k| {
        let phase = (0..x.ncols()).map(|j| x[(i, j)] * w[(cols[k], j)]).sum::<f64>();
        cis_neg(phase, scale)
    })
}

fn gram_lambda_min(z_d: &DMatrix<Complex<f64>>) -> f64 {
    z_d.ad_mul(z_d).symmetric_eigenvalues().min()
}

/// Frequency of `λ_min(Z_Dᴴ Z_D) ≥ (M/N)(λ_min(K) − t_I)` over fresh input draws.
pub fn verify_eigenvalue_bound(
    dist: &InputDistribution<f64>,
    freqs: &FrequencySet<f64>,
    support: &[usize],
    m: usize,
    probe: &ConcentrationProbe,
    rng_seed: u64,
) -> Result<BoundCheck> {
    let n = freqs.n();
    check_support(support, n)?;
    probe.check_trials()?;
    let stats = build_kernel_matrix(dist, freqs)?;
    probe.check_t_i(stats.lambda_min)?;
    let threshold = m as f64 / n as f64 * (stats.lambda_min - probe.t_i);
    let holds = (0..probe.trials)
        .into_par_iter()
        .map(|t| {
            let x = sample_inputs(m, dist, derive_seed(rng_seed, "eigen-bound", &[t as u64]))?;
            Ok(gram_lambda_min(&nff_columns(&x, freqs, support)) >= threshold)
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&h| h)
        .count();
    let eps = epsilon_i(probe.t_i, m as f64, support.len(), stats.lambda_min, stats.beta);
    Ok(BoundCheck::new(probe.trials, holds, eps))
}

/// `‖Z_D† z_l‖₂` for each column `z_l` of `others`; `None` if `Z_D` has dependent columns.
pub fn pinv_column_norms(z_d: &DMatrix<Complex<f64>>, others: &DMatrix<Complex<f64>>) -> Option<Vec<f64>> {
    let chol = Cholesky::new(z_d.ad_mul(z_d))?;
    let coeffs = chol.solve(&z_d.ad_mul(others));
    Some(coeffs.column_iter().map(|c| c.norm()).collect())
}

/// Frequency of `max_{l ∉ D} ‖Z_D† z_l‖₂ ≤ η` among trials where the eigenvalue event holds.
pub fn verify_pinv_norm_bound(
    dist: &InputDistribution<f64>,
    freqs: &FrequencySet<f64>,
    support: &[usize],
    m: usize,
    probe: &ConcentrationProbe,
    rng_seed: u64,
) -> Result<PinvCheck> {
    let n = freqs.n();
    check_support(support, n)?;
    if support.len() == n {
        return Err(Error::param("support must leave at least one column outside"));
    }
    probe.check_trials()?;
    probe.check_t_p()?;
    let stats = build_kernel_matrix(dist, freqs)?;
    probe.check_t_i(stats.lambda_min)?;

    let d = support.len();
    let eta = (d as f64).sqrt() * (probe.t_p + stats.k_max) / (stats.lambda_min - probe.t_i);
    let threshold = m as f64 / n as f64 * (stats.lambda_min - probe.t_i);
    let complement: Vec<usize> = (0..n).filter(|k| !support.contains(k)).collect();

    // None: eigenvalue event failed
    let outcomes = (0..probe.trials)
        .into_par_iter()
        .map(|t| {
            let x = sample_inputs(m, dist, derive_seed(rng_seed, "pinv-bound", &[t as u64]))?;
            let z_d = nff_columns(&x, freqs, support);
            if gram_lambda_min(&z_d) < threshold {
                return Ok(None);
            }
            let rest = nff_columns(&x, freqs, &complement);
            Ok(pinv_column_norms(&z_d, &rest).map(|norms| norms.into_iter().fold(0.0, f64::max) <= eta))
        })
        .collect::<Result<Vec<Option<bool>>>>()?;
    let conditioned = outcomes.iter().filter(|o| o.is_some()).count();
    let holds = outcomes.iter().filter(|o| **o == Some(true)).count();
    Ok(PinvCheck {
        check: BoundCheck::new(conditioned, holds, epsilon_p(probe.t_p, m as f64, n)),
        eta,
        conditioning_failures: probe.trials - conditioned,
    })
}

/// Frequency of `|z_kᴴ z_l| ≤ (M·k_const + t_s)/N`. `k_const` defaults to `|k(ω_k − ω_l)|`.
#[allow(clippy::too_many_arguments)]
pub fn verify_inner_product_bound(
    dist: &InputDistribution<f64>,
    freq_pair: (&[f64], &[f64]),
    n: usize,
    m: usize,
    t_s: f64,
    k_const: Option<f64>,
    trials: usize,
    rng_seed: u64,
) -> Result<BoundCheck> {
    let (wk, wl) = freq_pair;
    if wk.len() != dist.dim || wl.len() != dist.dim {
        return Err(Error::DimensionMismatch {
            expected: dist.dim,
            got: if wk.len() != dist.dim { wk.len() } else { wl.len() },
            context: "frequency length vs input dimension",
        });
    }
    if wk == wl {
        return Err(Error::param("the two frequencies must differ"));
    }
    if !(t_s >= 0.0) {
        return Err(Error::param("t_s must be >= 0"));
    }
    if n == 0 || m == 0 || trials == 0 {
        return Err(Error::param("n, m and trials must be >= 1"));
    }
    let delta: Vec<f64> = wk.iter().zip(wl).map(|(a, b)| a - b).collect();
    let k_const = match k_const {
        Some(k) => k,
        None => kernel_value(dist, &delta)?.abs(),
    };
    let bound = (m as f64 * k_const + t_s) / n as f64;
    let holds = (0..trials)
        .into_par_iter()
        .map(|t| {
            let x = sample_inputs(m, dist, derive_seed(rng_seed, "inner-product", &[t as u64]))?;
            let sum: Complex<f64> = x
                .row_iter()
                .map(|row| {
                    let phase: f64 = row.iter().zip(&delta).map(|(a, b)| a * b).sum();
                    Complex::from_polar(1.0, phase)
                })
                .sum();
            Ok(sum.norm() / n as f64 <= bound)
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&h| h)
        .count();
    Ok(BoundCheck::new(trials, holds, epsilon_s(t_s, m as f64)))
}
