//! Frequency dictionaries, shift-invariant kernels of the input distribution,
//! and the spectral statistics of the resulting kernel matrix.
//!
//! The kernel attached to an input distribution `p(x)` is its characteristic
//! function, `k(Δω) = E[exp(-j xᵀΔω)]`. For a symmetric distribution it is
//! real, equals one at the origin, and is bounded by one in modulus.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed::{child_rng, rng_from_seed};

/// Relative floor on `lambda_min / lambda_max` below which `K` is treated as singular.
pub const DEGENERACY_RATIO: f64 = 1e-10;

/// The `N` frequency vectors defining the feature dictionary, one per row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FrequencySet<T: Real> {
    freqs: DMatrix<T>,
}

impl<T: Real> FrequencySet<T> {
    /// Wraps an `N × d` matrix whose rows are frequencies.
    ///
    /// Rejects empty sets and sets containing a repeated frequency.
    pub fn from_matrix(freqs: DMatrix<T>) -> Result<Self> {
        if freqs.nrows() == 0 || freqs.ncols() == 0 {
            return Err(Error::param("frequency set needs n >= 1 and dim >= 1"));
        }
        if let Some((i, j)) = first_duplicate(&freqs) {
            return Err(Error::param(format!("frequencies {i} and {j} coincide")));
        }
        Ok(Self { freqs })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
                context: "frequency row length",
            });
        }
        Self::from_matrix(DMatrix::from_fn(n, dim, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.freqs.nrows()
    }

    pub fn dim(&self) -> usize {
        self.freqs.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.freqs
    }

    pub fn freq(&self, k: usize) -> RowDVector<T> {
        self.freqs.row(k).into_owned()
    }

    /// `ω_k − ω_l` as a column vector.
    pub fn difference(&self, k: usize, l: usize) -> DVector<T> {
        (self.freqs.row(k) - self.freqs.row(l)).transpose()
    }

    /// Restricts the dictionary to the listed rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        for &r in rows {
            if r >= self.n() {
                return Err(Error::IndexOutOfRange { index: r, len: self.n() });
            }
        }
        Self::from_matrix(self.freqs.select_rows(rows))
    }

    /// Writes one row per frequency under the header `w1,...,wd`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record((1..=self.dim()).map(|j| format!("w{j}")))?;
        for row in self.freqs.row_iter() {
            out.write_record(row.iter().map(|v| v.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut input = csv::Reader::from_reader(reader);
        let header = input.headers()?.clone();
        for (j, name) in header.iter().enumerate() {
            if name.trim() != format!("w{}", j + 1) {
                return Err(Error::param(format!(
                    "unexpected frequency CSV column `{name}`, expected `w{}`",
                    j + 1
                )));
            }
        }
        let mut rows = Vec::new();
        for record in input.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|s| {
                    s.trim()
                        .parse::<T>()
                        .map_err(|_| Error::param(format!("not a number in frequency CSV: `{s}`")))
                })
                .collect::<Result<Vec<T>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }
}

fn first_duplicate<T: Real>(freqs: &DMatrix<T>) -> Option<(usize, usize)> {
    let n = freqs.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if freqs.row(i) == freqs.row(j) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Draws `n` i.i.d. frequencies from `N(0, component_variance · I_dim)`.
pub fn generate_frequencies<T: Real>(
    n: usize,
    dim: usize,
    component_variance: T,
    rng_seed: u64,
) -> Result<FrequencySet<T>> {
    if n == 0 || dim == 0 {
        return Err(Error::param("generate_frequencies needs n >= 1 and dim >= 1"));
    }
    if !(component_variance > T::zero()) || !component_variance.is_finite() {
        return Err(Error::param("component variance must be positive and finite"));
    }
    let std = component_variance.sqrt();
    let mut rng = rng_from_seed(rng_seed);
    let mut freqs = DMatrix::<T>::zeros(n, dim);
    for k in 0..n {
        loop {
            for j in 0..dim {
                freqs[(k, j)] = T::sample_standard_normal(&mut rng) * std;
            }
            let collides = (0..k).any(|l| freqs.row(l) == freqs.row(k));
            if !collides {
                break;
            }
        }
    }
    Ok(FrequencySet { freqs })
}

/// Symmetric input distributions with independent, identically scaled components.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "")]
pub enum DistributionKind<T: Real> {
    /// `N(0, variance · I)`, giving the Gaussian kernel `exp(-variance/2 · ‖Δω‖²)`.
    GaussianIsotropic { variance: T },
    /// Laplace components, giving the Cauchy kernel `Π 1 / (1 + scale² Δω_j²)`.
    Laplace { scale: T },
    /// Cauchy components, giving the exponential kernel `exp(-scale · ‖Δω‖₁)`.
    Cauchy { scale: T },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct InputDistribution<T: Real> {
    pub kind: DistributionKind<T>,
    pub dim: usize,
}

impl<T: Real> InputDistribution<T> {
    pub fn new(kind: DistributionKind<T>, dim: usize) -> Result<Self> {
        let param = match kind {
            DistributionKind::GaussianIsotropic { variance } => variance,
            DistributionKind::Laplace { scale } | DistributionKind::Cauchy { scale } => scale,
        };
        if !(param > T::zero()) || !param.is_finite() {
            return Err(Error::param("distribution scale must be positive and finite"));
        }
        if dim == 0 {
            return Err(Error::param("distribution dimension must be >= 1"));
        }
        Ok(Self { kind, dim })
    }

    pub fn gaussian(variance: T, dim: usize) -> Result<Self> {
        Self::new(DistributionKind::GaussianIsotropic { variance }, dim)
    }

    /// Draws one input vector.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> DVector<T> {
        DVector::from_fn(self.dim, |_, _| self.sample_component(rng))
    }

    pub(crate) fn sample_component<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> T {
        let half = T::lit(0.5);
        match self.kind {
            DistributionKind::GaussianIsotropic { variance } => {
                T::sample_standard_normal(rng) * variance.sqrt()
            }
            DistributionKind::Laplace { scale } => {
                // inverse CDF on u in (-1/2, 1/2)
                let u = T::sample_unit(rng) - half;
                let tail = T::one() - T::lit(2.0) * u.abs();
                if tail <= T::zero() {
                    return T::zero();
                }
                -scale * u.signum() * tail.ln()
            }
            DistributionKind::Cauchy { scale } => {
                let u = T::sample_unit(rng);
                scale * (T::pi() * (u - half)).tan()
            }
        }
    }
}

/// Characteristic function of `dist` at `delta_omega`.
pub fn kernel_value<T: Real>(dist: &InputDistribution<T>, delta_omega: &[T]) -> Result<T> {
    if delta_omega.len() != dist.dim {
        return Err(Error::DimensionMismatch {
            expected: dist.dim,
            got: delta_omega.len(),
            context: "kernel_value delta_omega",
        });
    }
    Ok(kernel_unchecked(&dist.kind, delta_omega.iter().copied()))
}

fn kernel_unchecked<T: Real>(kind: &DistributionKind<T>, delta: impl Iterator<Item = T>) -> T {
    match *kind {
        DistributionKind::GaussianIsotropic { variance } => {
            let sq: T = delta.fold(T::zero(), |acc, w| acc + w * w);
            (-(variance * T::lit(0.5)) * sq).exp()
        }
        DistributionKind::Laplace { scale } => delta.fold(T::one(), |acc, w| {
            let sw = scale * w;
            acc / (T::one() + sw * sw)
        }),
        DistributionKind::Cauchy { scale } => {
            let l1: T = delta.fold(T::zero(), |acc, w| acc + w.abs());
            (-scale * l1).exp()
        }
    }
}

/// Kernel matrix of a frequency set together with its spectral summary.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct KernelStats<T: Real> {
    pub matrix: DMatrix<T>,
    pub lambda_min: T,
    pub lambda_max: T,
    /// Condition number `lambda_max / lambda_min`.
    pub beta: T,
    /// Largest off-diagonal entry in absolute value; zero for a 1×1 matrix.
    pub k_max: T,
}

impl<T: Real> KernelStats<T> {
    /// Computes the spectral summary of a symmetric positive-definite matrix.
    pub fn from_matrix(matrix: DMatrix<T>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::param("kernel matrix must be square and non-empty"));
        }
        let n = matrix.nrows();
        let eig = matrix.clone().symmetric_eigenvalues();
        let lambda_min = eig.min();
        let lambda_max = eig.max();
        if !(lambda_max > T::zero()) || lambda_min <= T::lit(DEGENERACY_RATIO) * lambda_max {
            return Err(Error::DegenerateKernel {
                lambda_min: lambda_min.as_f64(),
                lambda_max: lambda_max.as_f64(),
            });
        }
        let mut k_max = T::zero();
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    k_max = k_max.max(matrix[(i, j)].abs());
                }
            }
        }
        Ok(Self {
            beta: lambda_max / lambda_min,
            matrix,
            lambda_min,
            lambda_max,
            k_max,
        })
    }

    /// Statistics of the `n × n` identity, the limit of a vanishing kernel.
    pub fn identity(n: usize) -> Self {
        Self {
            matrix: DMatrix::identity(n, n),
            lambda_min: T::one(),
            lambda_max: T::one(),
            beta: T::one(),
            k_max: T::zero(),
        }
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Assembles `K_ij = k(ω_i − ω_j)` and its spectral statistics.
pub fn build_kernel_matrix<T: Real>(
    dist: &InputDistribution<T>,
    freqs: &FrequencySet<T>,
) -> Result<KernelStats<T>> {
    if dist.dim != freqs.dim() {
        return Err(Error::DimensionMismatch {
            expected: dist.dim,
            got: freqs.dim(),
            context: "distribution vs frequency dimension",
        });
    }
    let n = freqs.n();
    let w = freqs.matrix();
    let mut k = DMatrix::<T>::identity(n, n);
    for j in 0..n {
        for i in (j + 1)..n {
            let v = kernel_unchecked(&dist.kind, (0..dist.dim).map(|c| w[(i, c)] - w[(j, c)]));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    KernelStats::from_matrix(k)
}

/// Sample-mean estimate of the characteristic function at one frequency offset.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EmpiricalKernel<T: Real> {
    pub estimate: Complex<T>,
    /// `|estimate − kernel_value|`.
    pub abs_error: T,
    /// Standard error of the complex sample mean, `sqrt((1 − |estimate|²) / n)`.
    pub std_error: T,
}

const KERNEL_MC_CHUNK: usize = 1 << 16;

/// Monte Carlo estimate of `E[exp(-j xᵀΔω)]` from `n_samples` draws of `dist`.
///
/// Samples are drawn in fixed-size chunks with independent seeded substreams,
/// so the result does not depend on how chunks are scheduled.
pub fn empirical_kernel_check<T: Real>(
    dist: &InputDistribution<T>,
    delta_omega: &[T],
    n_samples: usize,
    rng_seed: u64,
) -> Result<EmpiricalKernel<T>> {
    if n_samples == 0 {
        return Err(Error::param("n_samples must be >= 1"));
    }
    let exact = kernel_value(dist, delta_omega)?;
    let n_chunks = n_samples.div_ceil(KERNEL_MC_CHUNK);
    let partial: Vec<(f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = child_rng(rng_seed, "kernel-mc", &[c as u64]);
            let count = KERNEL_MC_CHUNK.min(n_samples - c * KERNEL_MC_CHUNK);
            let mut re = 0.0f64;
            let mut im = 0.0f64;
            for _ in 0..count {
                let mut phase = T::zero();
                for &w in delta_omega {
                    phase += dist.sample_component(&mut rng) * w;
                }
                let p = phase.as_f64();
                re += p.cos();
                im -= p.sin();
            }
            (re, im)
        })
        .collect();
    let (re, im) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), (r, i)| (a + r, b + i));
    let n = n_samples as f64;
    let estimate = Complex::new(re / n, im / n);
    let abs_error = (estimate - Complex::new(exact.as_f64(), 0.0)).norm();
    let std_error = ((1.0 - estimate.norm_sqr()).max(0.0) / n).sqrt();
    Ok(EmpiricalKernel {
        estimate: Complex::new(T::lit(estimate.re), T::lit(estimate.im)),
        abs_error: T::lit(abs_error),
        std_error: T::lit(std_error),
    })
}
