//! Sufficient sample counts for exact recovery.
//!
//! * `M_k = C · D · ln(3N/δ)` for the NFF model, with `C = C_q · C_β` built
//!   from the kernel matrix spectrum, valid under three side conditions;
//! * `M_f = C' · D · ln²(6N/δ)` for random rows of the unitary DFT;
//! * `M_k^g`, the NFF bound evaluated at `K = I`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernelspace::{build_kernel_matrix, generate_frequencies, InputDistribution, KernelStats};
use crate::scalar::Real;
use crate::seed::derive_seed;

/// Constant of the partial-DFT recovery guarantee.
pub const DEFAULT_C_PRIME: f64 = 35.0;

/// The parts of [`KernelStats`] the bounds depend on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SpectralSummary<T: Real> {
    pub n: usize,
    pub lambda_min: T,
    pub lambda_max: T,
    pub k_max: T,
}

impl<T: Real> SpectralSummary<T> {
    pub fn identity(n: usize) -> Self {
        Self { n, lambda_min: T::one(), lambda_max: T::one(), k_max: T::zero() }
    }

    pub fn beta(&self) -> T {
        self.lambda_max / self.lambda_min
    }
}

impl<T: Real> From<&KernelStats<T>> for SpectralSummary<T> {
    fn from(s: &KernelStats<T>) -> Self {
        Self { n: s.n(), lambda_min: s.lambda_min, lambda_max: s.lambda_max, k_max: s.k_max }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feasibility {
    /// `2D ≤ N`.
    pub two_d_le_n: bool,
    /// `λ_min(K) > q·√D·k_max`.
    pub lambda_min_gt_q_sqrtd_kmax: bool,
    /// `C_η / √C_q ≤ 2√D`.
    pub c_eta_ratio_le_2sqrtd: bool,
}

impl Feasibility {
    pub fn all(&self) -> bool {
        self.two_d_le_n && self.lambda_min_gt_q_sqrtd_kmax && self.c_eta_ratio_le_2sqrtd
    }
}

/// Every quantity entering the sample-count bounds for one `(K, N, D, δ)`.
///
/// `m_k`, `c_q` and `c` are `None` when the bound is not available: `m_k`
/// whenever a side condition fails, `c_q` and `c` when `λ_min ≤ q√D·k_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BoundReport<T: Real> {
    pub n: usize,
    pub sparsity_d: usize,
    pub delta: T,
    pub lambda_min: T,
    pub lambda_max: T,
    pub beta: T,
    pub k_max: T,
    pub q: T,
    pub c_beta: T,
    pub c_eta: T,
    pub c_q: Option<T>,
    pub c: Option<T>,
    pub m_k: Option<T>,
    pub m_k_ceil: Option<u64>,
    pub c_prime: T,
    pub m_f: T,
    pub m_f_ceil: u64,
    pub c_g: T,
    pub m_k_gaussian_limit: T,
    pub m_k_gaussian_limit_ceil: u64,
    pub feasibility: Feasibility,
}

impl<T: Real> BoundReport<T> {
    pub fn is_feasible(&self) -> bool {
        self.m_k.is_some()
    }

    /// `M_k / M_f` when `M_k` is available.
    pub fn ratio(&self) -> Option<T> {
        self.m_k.map(|m| m / self.m_f)
    }
}

fn validate(n: usize, sparsity_d: usize, delta: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::param("N must be >= 1"));
    }
    if sparsity_d == 0 {
        return Err(Error::param("sparsity D must be >= 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

fn ceil_count<T: Real>(m: T) -> u64 {
    m.ceil().as_f64() as u64
}

/// `q = sqrt(2 ln(6N/δ))`.
pub fn q_factor<T: Real>(n: usize, delta: T) -> T {
    (T::lit(2.0) * (T::lit(6.0 * n as f64) / delta).ln()).sqrt()
}

/// NFF sample-complexity bound from kernel statistics with the default `C' = 35` baseline.
pub fn compute_mk<T: Real>(
    stats: &KernelStats<T>,
    n: usize,
    sparsity_d: usize,
    delta: T,
) -> Result<BoundReport<T>> {
    if stats.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: stats.n(),
            context: "kernel matrix size vs N",
        });
    }
    compute_mk_from_summary(&SpectralSummary::from(stats), sparsity_d, delta, T::lit(DEFAULT_C_PRIME))
}

pub fn compute_mk_from_summary<T: Real>(
    spec: &SpectralSummary<T>,
    sparsity_d: usize,
    delta: T,
    c_prime: T,
) -> Result<BoundReport<T>> {
    let n = spec.n;
    validate(n, sparsity_d, delta.as_f64())?;
    if !(spec.lambda_min > T::zero()) || spec.lambda_max < spec.lambda_min {
        return Err(Error::param("kernel spectrum must satisfy 0 < lambda_min <= lambda_max"));
    }
    let two = T::lit(2.0);
    let nf = T::lit(n as f64);
    let d = T::lit(sparsity_d as f64);
    let sqrt_d = d.sqrt();

    let beta = spec.beta();
    let q = q_factor(n, delta);
    let c_beta = two * (beta + T::lit(2.0 / 3.0)) * spec.lambda_min;
    let c_eta = (T::lit(28.0 / 3.0) / c_beta).sqrt();
    let margin = spec.lambda_min - q * sqrt_d * spec.k_max;
    let (c_q, c) = if margin > T::zero() {
        let c_q = ((T::one() + q * c_eta) / margin).powi(2);
        (Some(c_q), Some(c_q * c_beta))
    } else {
        (None, None)
    };

    let feasibility = Feasibility {
        two_d_le_n: 2 * sparsity_d <= n,
        lambda_min_gt_q_sqrtd_kmax: margin > T::zero(),
        c_eta_ratio_le_2sqrtd: c_q.is_some_and(|cq| c_eta / cq.sqrt() <= two * sqrt_d),
    };
    let log_3n = (T::lit(3.0) * nf / delta).ln();
    let m_k = match c {
        Some(c) if feasibility.all() => Some(c * d * log_3n),
        _ => None,
    };
    let m_f = compute_mf(n, sparsity_d, delta, c_prime)?;
    let (m_k_gaussian_limit, c_g) = compute_mk_gaussian_limit(n, sparsity_d, delta)?;

    Ok(BoundReport {
        n,
        sparsity_d,
        delta,
        lambda_min: spec.lambda_min,
        lambda_max: spec.lambda_max,
        beta,
        k_max: spec.k_max,
        q,
        c_beta,
        c_eta,
        c_q,
        c,
        m_k_ceil: m_k.map(ceil_count),
        m_k,
        c_prime,
        m_f_ceil: ceil_count(m_f),
        m_f,
        c_g,
        m_k_gaussian_limit_ceil: ceil_count(m_k_gaussian_limit),
        m_k_gaussian_limit,
        feasibility,
    })
}

/// Partial-DFT baseline `M_f = C' · D · ln²(6N/δ)`.
pub fn compute_mf<T: Real>(n: usize, sparsity_d: usize, delta: T, c_prime: T) -> Result<T> {
    validate(n, sparsity_d, delta.as_f64())?;
    if c_prime < T::zero() {
        return Err(Error::param("C' must be non-negative"));
    }
    let l = (T::lit(6.0 * n as f64) / delta).ln();
    Ok(c_prime * T::lit(sparsity_d as f64) * l * l)
}

/// Identity-kernel limit: returns `(M_k^g, C_g)` with
/// `C_g = (10/3)(1 + sqrt(14/5)·sqrt(2 ln(6N/δ)))²`.
pub fn compute_mk_gaussian_limit<T: Real>(n: usize, sparsity_d: usize, delta: T) -> Result<(T, T)> {
    validate(n, sparsity_d, delta.as_f64())?;
    let q = q_factor(n, delta);
    let c_g = T::lit(10.0 / 3.0) * (T::one() + T::lit(14.0 / 5.0).sqrt() * q).powi(2);
    let m = c_g * T::lit(sparsity_d as f64) * (T::lit(3.0 * n as f64) / delta).ln();
    Ok((m, c_g))
}

/// Parameters of an `M_k / M_f` sweep over input dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioCurveConfig {
    pub dims: Vec<usize>,
    pub sparsities: Vec<usize>,
    pub n: usize,
    /// Input variance `σ²` of the Gaussian distribution.
    pub sigma2: f64,
    /// Per-component variance of the random frequencies.
    #[serde(default = "one")]
    pub freq_variance: f64,
    pub delta: f64,
    #[serde(default = "default_c_prime")]
    pub c_prime: f64,
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

fn default_c_prime() -> f64 {
    DEFAULT_C_PRIME
}

impl RatioCurveConfig {
    pub fn new(dims: Vec<usize>, sparsities: Vec<usize>, n: usize, sigma2: f64, delta: f64, seed: u64) -> Self {
        Self { dims, sparsities, n, sigma2, freq_variance: 1.0, delta, c_prime: DEFAULT_C_PRIME, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.sparsities.is_empty() {
            return Err(Error::param("ratio curve needs at least one d and one D"));
        }
        if self.dims.contains(&0) {
            return Err(Error::param("input dimension d must be >= 1"));
        }
        if !(self.sigma2 > 0.0) || !(self.freq_variance > 0.0) {
            return Err(Error::param("variances must be positive"));
        }
        for &d in &self.sparsities {
            validate(self.n, d, self.delta)?;
        }
        if self.c_prime < 0.0 {
            return Err(Error::param("C' must be non-negative"));
        }
        Ok(())
    }

    /// Seed of the frequency set used at input dimension `d`.
    pub fn frequency_seed(&self, d: usize) -> u64 {
        derive_seed(self.seed, "ratio-curve-omega", &[d as u64])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub d: usize,
    pub sparsity_d: usize,
    pub m_k: Option<f64>,
    pub m_f: f64,
    pub ratio: Option<f64>,
    pub feasible: bool,
    /// False when the kernel matrix at this `d` was numerically singular.
    pub kernel_ok: bool,
}

/// Evaluates `M_k`, `M_f` and their ratio on the `(d, D)` grid, ordered by `(d, D)`.
pub fn ratio_curve(config: &RatioCurveConfig) -> Result<Vec<RatioRow>> {
    config.validate()?;
    let mut dims = config.dims.clone();
    dims.sort_unstable();
    dims.dedup();
    let mut sparsities = config.sparsities.clone();
    sparsities.sort_unstable();
    sparsities.dedup();

    let per_dim: Vec<Result<Vec<RatioRow>>> = dims
        .par_iter()
        .map(|&d| {
            let freqs = generate_frequencies::<f64>(config.n, d, config.freq_variance, config.frequency_seed(d))?;
            let dist = InputDistribution::gaussian(config.sigma2, d)?;
            let stats = match build_kernel_matrix(&dist, &freqs) {
                Ok(s) => Some(s),
                Err(Error::DegenerateKernel { .. }) => None,
                Err(e) => return Err(e),
            };
            sparsities
                .iter()
                .map(|&sd| match &stats {
                    Some(stats) => {
                        let r = compute_mk_from_summary(&SpectralSummary::from(stats), sd, config.delta, config.c_prime)?;
                        Ok(RatioRow {
                            d,
                            sparsity_d: sd,
                            m_k: r.m_k,
                            m_f: r.m_f,
                            ratio: r.ratio(),
                            feasible: r.is_feasible(),
                            kernel_ok: true,
                        })
                    }
                    None => Ok(RatioRow {
                        d,
                        sparsity_d: sd,
                        m_k: None,
                        m_f: compute_mf(config.n, sd, config.delta, config.c_prime)?,
                        ratio: None,
                        feasible: false,
                        kernel_ok: false,
                    }),
                })
                .collect()
        })
        .collect();

    let mut rows = Vec::with_capacity(dims.len() * sparsities.len());
    for r in per_dim {
        rows.extend(r?);
    }
    Ok(rows)
}

pub const RATIO_CSV_HEADER: [&str; 6] = ["d", "D", "M_k", "M_f", "ratio", "feasible"];

/// Writes rows under `d,D,M_k,M_f,ratio,feasible`; unavailable values are empty cells.
pub fn write_ratio_csv<W: Write>(rows: &[RatioRow], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(RATIO_CSV_HEADER)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        out.write_record([
            r.d.to_string(),
            r.sparsity_d.to_string(),
            opt(r.m_k),
            r.m_f.to_string(),
            opt(r.ratio),
            r.feasible.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
