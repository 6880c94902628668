//! Sparse ground truth, sampled inputs, and the two measurement models:
//! NFF features `Z_{ik} = N^{-1/2} exp(-j x_iᵀω_k)` and randomly selected rows
//! of the unitary DFT.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernelspace::{FrequencySet, InputDistribution};
use crate::scalar::{cis_neg, Real};
use crate::seed::rng_from_seed;

/// Distribution of the phases (signs) of the nonzero coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignModel {
    /// Uniform ±1.
    Rademacher,
    /// Uniform on the complex unit circle.
    Steinhaus,
    /// Always +1, with magnitudes drawn from U[0, 1] by default.
    UniformPositive,
}

impl SignModel {
    /// Whether every coefficient drawn under this model is real.
    pub fn is_real(self) -> bool {
        !matches!(self, SignModel::Steinhaus)
    }

    pub fn default_magnitude(self) -> MagnitudeModel {
        match self {
            SignModel::UniformPositive => MagnitudeModel::Uniform,
            _ => MagnitudeModel::Unit,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MagnitudeModel {
    Unit,
    /// i.i.d. U[0, 1].
    Uniform,
}

/// A `D`-sparse coefficient vector together with its support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SparseModel<T: Real> {
    pub theta_bar: DVector<Complex<T>>,
    /// Ascending indices of the possibly nonzero coefficients.
    pub support: Vec<usize>,
    pub sign_model: SignModel,
    pub magnitude_model: MagnitudeModel,
}

impl<T: Real> SparseModel<T> {
    pub fn n(&self) -> usize {
        self.theta_bar.len()
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn l1_norm(&self) -> T {
        self.theta_bar.iter().fold(T::zero(), |acc, c| acc + c.modulus())
    }
}

pub fn generate_sparse_model<T: Real>(
    n: usize,
    sparsity_d: usize,
    sign_model: SignModel,
    magnitude_model: MagnitudeModel,
    rng_seed: u64,
) -> Result<SparseModel<T>> {
    if sparsity_d == 0 || sparsity_d > n {
        return Err(Error::param(format!("sparsity must satisfy 1 <= D <= N, got D = {sparsity_d}, N = {n}")));
    }
    let mut rng = rng_from_seed(rng_seed);
    let mut support = sample(&mut rng, n, sparsity_d).into_vec();
    support.sort_unstable();

    let mut theta_bar = DVector::<Complex<T>>::zeros(n);
    for &k in &support {
        let magnitude = match magnitude_model {
            MagnitudeModel::Unit => T::one(),
            MagnitudeModel::Uniform => T::sample_unit(&mut rng),
        };
        theta_bar[k] = match sign_model {
            SignModel::Rademacher => {
                let s = if rng.gen::<bool>() { T::one() } else { -T::one() };
                Complex::new(s * magnitude, T::zero())
            }
            SignModel::Steinhaus => {
                let phase = T::two_pi() * T::sample_unit(&mut rng);
                Complex::new(phase.cos() * magnitude, phase.sin() * magnitude)
            }
            SignModel::UniformPositive => Complex::new(magnitude, T::zero()),
        };
    }
    Ok(SparseModel { theta_bar, support, sign_model, magnitude_model })
}

/// `m` i.i.d. draws from `dist`, one per row.
pub fn sample_inputs<T: Real>(m: usize, dist: &InputDistribution<T>, rng_seed: u64) -> Result<DMatrix<T>> {
    if m == 0 {
        return Err(Error::param("need at least one input sample"));
    }
    let mut rng = rng_from_seed(rng_seed);
    let mut x = DMatrix::<T>::zeros(m, dist.dim);
    // row-major draw order so a prefix of rows is independent of m
    for i in 0..m {
        for j in 0..dist.dim {
            x[(i, j)] = dist.sample_component(&mut rng);
        }
    }
    Ok(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "")]
pub enum FeatureKind<T: Real> {
    Nff { inputs: DMatrix<T>, freqs: FrequencySet<T> },
    /// Ascending, 0-based row indices into the `N`-point DFT.
    PartialDft { selected_rows: Vec<usize> },
}

/// `M × N` complex measurement matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix<T: Real> {
    entries: DMatrix<Complex<T>>,
    kind: FeatureKind<T>,
}

impl<T: Real> FeatureMatrix<T> {
    pub fn entries(&self) -> &DMatrix<Complex<T>> {
        &self.entries
    }

    pub fn kind(&self) -> &FeatureKind<T> {
        &self.kind
    }

    /// Number of measurements `M`.
    pub fn m(&self) -> usize {
        self.entries.nrows()
    }

    /// Dictionary size `N`.
    pub fn n(&self) -> usize {
        self.entries.ncols()
    }

    pub fn column(&self, k: usize) -> DVector<Complex<T>> {
        self.entries.column(k).into_owned()
    }
}

pub fn build_nff_matrix<T: Real>(inputs: &DMatrix<T>, freqs: &FrequencySet<T>) -> Result<FeatureMatrix<T>> {
    if inputs.ncols() != freqs.dim() {
        return Err(Error::DimensionMismatch {
            expected: freqs.dim(),
            got: inputs.ncols(),
            context: "input dimension vs frequency dimension",
        });
    }
    let scale = T::one() / T::lit(freqs.n() as f64).sqrt();
    let phases = inputs * freqs.matrix().transpose();
    let entries = phases.map(|p| cis_neg(p, scale));
    Ok(FeatureMatrix {
        entries,
        kind: FeatureKind::Nff { inputs: inputs.clone(), freqs: freqs.clone() },
    })
}

/// Rows `selected_rows` of the unitary `n`-point DFT.
pub fn partial_dft_from_rows<T: Real>(n: usize, selected_rows: &[usize]) -> Result<FeatureMatrix<T>> {
    if n == 0 || selected_rows.is_empty() {
        return Err(Error::param("partial DFT needs n >= 1 and at least one row"));
    }
    let mut rows = selected_rows.to_vec();
    rows.sort_unstable();
    if rows.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::param("partial DFT rows must be distinct"));
    }
    if let Some(&bad) = rows.iter().find(|&&r| r >= n) {
        return Err(Error::IndexOutOfRange { index: bad, len: n });
    }
    let scale = T::one() / T::lit(n as f64).sqrt();
    let step = T::two_pi() / T::lit(n as f64);
    let entries = DMatrix::from_fn(rows.len(), n, |i, k| {
        // reduce t·k mod n first so the phase stays exact for large n
        let tk = ((rows[i] as u128 * k as u128) % n as u128) as f64;
        cis_neg(step * T::lit(tk), scale)
    });
    Ok(FeatureMatrix { entries, kind: FeatureKind::PartialDft { selected_rows: rows } })
}

/// `m` distinct DFT rows chosen uniformly without replacement.
pub fn build_partial_dft<T: Real>(n: usize, m: usize, rng_seed: u64) -> Result<FeatureMatrix<T>> {
    if m == 0 || m > n {
        return Err(Error::param(format!("partial DFT needs 1 <= m <= n, got m = {m}, n = {n}")));
    }
    let mut rng = rng_from_seed(rng_seed);
    let rows = sample(&mut rng, n, m).into_vec();
    partial_dft_from_rows(n, &rows)
}

/// Noiseless observations `y = Z θ̄`.
pub fn synthesize_observations<T: Real>(z: &FeatureMatrix<T>, model: &SparseModel<T>) -> Result<DVector<Complex<T>>> {
    if z.n() != model.n() {
        return Err(Error::DimensionMismatch {
            expected: z.n(),
            got: model.n(),
            context: "feature columns vs coefficient length",
        });
    }
    Ok(&z.entries * &model.theta_bar)
}

/// Columns of `Z` on `support`, in ascending index order.
pub fn restrict_columns<T: Real>(z: &FeatureMatrix<T>, support: &[usize]) -> Result<DMatrix<Complex<T>>> {
    let mut cols = support.to_vec();
    cols.sort_unstable();
    cols.dedup();
    if let Some(&bad) = cols.iter().find(|&&c| c >= z.n()) {
        return Err(Error::IndexOutOfRange { index: bad, len: z.n() });
    }
    Ok(z.entries.select_columns(&cols))
}

/// Everything needed to replay one recovery trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialDataset {
    pub measurement: MeasurementSpec,
    pub y: Vec<Complex<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<SparseModel<f64>>,
    #[serde(default)]
    pub seeds: TrialSeeds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasurementSpec {
    Nff { freqs: Vec<Vec<f64>>, inputs: Vec<Vec<f64>> },
    PartialDft { n: usize, selected_rows: Vec<usize> },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSeeds {
    pub master: Option<u64>,
    pub frequencies: Option<u64>,
    pub model: Option<u64>,
    pub inputs: Option<u64>,
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl TrialDataset {
    pub fn from_parts(z: &FeatureMatrix<f64>, y: &DVector<Complex<f64>>, truth: Option<&SparseModel<f64>>, seeds: TrialSeeds) -> Self {
        let measurement = match z.kind() {
            FeatureKind::Nff { inputs, freqs } => MeasurementSpec::Nff {
                freqs: matrix_rows(freqs.matrix()),
                inputs: matrix_rows(inputs),
            },
            FeatureKind::PartialDft { selected_rows } => MeasurementSpec::PartialDft {
                n: z.n(),
                selected_rows: selected_rows.clone(),
            },
        };
        Self { measurement, y: y.iter().copied().collect(), truth: truth.cloned(), seeds }
    }

    pub fn feature_matrix(&self) -> Result<FeatureMatrix<f64>> {
        match &self.measurement {
            MeasurementSpec::Nff { freqs, inputs } => {
                let freqs = FrequencySet::from_rows(freqs)?;
                let dim = freqs.dim();
                if let Some(bad) = inputs.iter().find(|r| r.len() != dim) {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: bad.len(),
                        context: "input row length",
                    });
                }
                if inputs.is_empty() {
                    return Err(Error::param("dataset has no inputs"));
                }
                let x = DMatrix::from_fn(inputs.len(), dim, |i, j| inputs[i][j]);
                build_nff_matrix(&x, &freqs)
            }
            MeasurementSpec::PartialDft { n, selected_rows } => partial_dft_from_rows(*n, selected_rows),
        }
    }

    pub fn observations(&self) -> DVector<Complex<f64>> {
        DVector::from_vec(self.y.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernelspace::generate_frequencies;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn dense_rademacher_model() {
        let m = generate_sparse_model::<f64>(5, 5, SignModel::Rademacher, MagnitudeModel::Unit, 1).unwrap();
        assert_eq!(m.support, vec![0, 1, 2, 3, 4]);
        for c in m.theta_bar.iter() {
            assert_eq!(c.im, 0.0);
            assert_eq!(c.re.abs(), 1.0);
        }
    }

    #[test]
    fn steinhaus_model_has_unit_modulus_on_support() {
        let m = generate_sparse_model::<f64>(8, 3, SignModel::Steinhaus, MagnitudeModel::Unit, 2).unwrap();
        assert_eq!(m.support.len(), 3);
        for (i, c) in m.theta_bar.iter().enumerate() {
            if m.support.contains(&i) {
                assert_relative_eq!(c.norm(), 1.0, epsilon = 1e-15);
            } else {
                assert_eq!(*c, Complex::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn uniform_positive_model() {
        let m = generate_sparse_model::<f64>(500, 60, SignModel::UniformPositive, MagnitudeModel::Uniform, 3).unwrap();
        assert_eq!(m.sparsity(), 60);
        assert!(m.support.windows(2).all(|w| w[0] < w[1]));
        for &k in &m.support {
            let c = m.theta_bar[k];
            assert!(c.im == 0.0 && c.re >= 0.0 && c.re < 1.0);
        }
        let nonzero = m.theta_bar.iter().filter(|c| c.norm() > 0.0).count();
        assert!(nonzero <= 60);
    }

    #[test]
    fn sparse_model_rejects_d_above_n() {
        assert!(generate_sparse_model::<f64>(4, 5, SignModel::Rademacher, MagnitudeModel::Unit, 0).is_err());
        assert!(generate_sparse_model::<f64>(4, 0, SignModel::Rademacher, MagnitudeModel::Unit, 0).is_err());
    }

    #[test]
    fn input_batch_shapes() {
        let d1 = InputDistribution::gaussian(1.0, 1).unwrap();
        assert_eq!(sample_inputs(1, &d1, 0).unwrap().shape(), (1, 1));
        let d20 = InputDistribution::gaussian(1.0, 20).unwrap();
        assert_eq!(sample_inputs(200, &d20, 0).unwrap().shape(), (200, 20));
        assert!(sample_inputs(0, &d20, 0).is_err());
    }

    #[test]
    fn input_sample_variance() {
        // chi-square: relative sd of the sample variance is sqrt(2/m) ≈ 0.0045
        let x = sample_inputs(100_000, &InputDistribution::gaussian(1.0, 1).unwrap(), 12).unwrap();
        let mean = x.mean();
        let var = x.iter().map(|v: &f64| (v - mean).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0);
        assert!((var - 1.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn zero_inputs_give_constant_features() {
        let f = generate_frequencies::<f64>(6, 2, 1.0, 4).unwrap();
        let z = build_nff_matrix(&DMatrix::zeros(3, 2), &f).unwrap();
        let c = 1.0 / 6f64.sqrt();
        for v in z.entries().iter() {
            assert_eq!(*v, Complex::new(c, 0.0));
        }
        let model = generate_sparse_model::<f64>(6, 2, SignModel::Steinhaus, MagnitudeModel::Unit, 5).unwrap();
        let y = synthesize_observations(&z, &model).unwrap();
        let expected = model.theta_bar.sum() * c;
        for v in y.iter() {
            assert_relative_eq!((v - expected).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn single_feature_has_unit_modulus() {
        let f = FrequencySet::from_rows(&[vec![1.7, -0.3]]).unwrap();
        let z = build_nff_matrix(&DMatrix::from_row_slice(1, 2, &[0.4, 2.2]), &f).unwrap();
        assert_relative_eq!(z.entries()[(0, 0)].norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn nff_dimension_mismatch() {
        let f = generate_frequencies::<f64>(3, 2, 1.0, 4).unwrap();
        assert!(build_nff_matrix(&DMatrix::zeros(3, 3), &f).is_err());
    }

    #[test]
    fn zero_coefficients_give_zero_observations() {
        let f = generate_frequencies::<f64>(5, 2, 1.0, 4).unwrap();
        let x = sample_inputs(4, &InputDistribution::gaussian(1.0, 2).unwrap(), 1).unwrap();
        let z = build_nff_matrix(&x, &f).unwrap();
        let mut model = generate_sparse_model::<f64>(5, 2, SignModel::Rademacher, MagnitudeModel::Unit, 5).unwrap();
        model.theta_bar.fill(Complex::new(0.0, 0.0));
        assert!(synthesize_observations(&z, &model).unwrap().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn full_dft_is_unitary() {
        let z = build_partial_dft::<f64>(16, 16, 3).unwrap();
        let g = z.entries().adjoint() * z.entries();
        for i in 0..16 {
            for j in 0..16 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - Complex::new(target, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn partial_dft_rows() {
        let z = build_partial_dft::<f64>(8, 3, 9).unwrap();
        let FeatureKind::PartialDft { selected_rows } = z.kind() else { panic!() };
        assert_eq!(selected_rows.len(), 3);
        assert!(selected_rows.windows(2).all(|w| w[0] < w[1]));
        for v in z.entries().iter() {
            assert_relative_eq!(v.norm(), 1.0 / 8f64.sqrt(), epsilon = 1e-15);
        }
        // entries match the DFT definition
        for (i, &t) in selected_rows.iter().enumerate() {
            for k in 0..8 {
                let phase = -2.0 * std::f64::consts::PI * (t * k) as f64 / 8.0;
                let want = Complex::from_polar(1.0 / 8f64.sqrt(), phase);
                assert!((z.entries()[(i, k)] - want).norm() < 1e-14);
            }
        }
        // orthonormal rows
        let g = z.entries() * z.entries().adjoint();
        assert!((g - DMatrix::identity(3, 3)).norm() < 1e-13);
        assert!(build_partial_dft::<f64>(8, 9, 0).is_err());
        assert!(build_partial_dft::<f64>(8, 0, 0).is_err());
    }

    #[test]
    fn restrict_columns_cases() {
        let f = generate_frequencies::<f64>(7, 2, 1.0, 4).unwrap();
        let x = sample_inputs(5, &InputDistribution::gaussian(1.0, 2).unwrap(), 1).unwrap();
        let z = build_nff_matrix(&x, &f).unwrap();
        assert_eq!(&restrict_columns(&z, &(0..7).collect::<Vec<_>>()).unwrap(), z.entries());
        assert_eq!(restrict_columns(&z, &[4]).unwrap(), z.entries().columns(4, 1).into_owned());
        let zd = restrict_columns(&z, &[5, 1, 3]).unwrap();
        assert_eq!(zd.column(0), z.entries().column(1));
        assert_eq!(zd.column(2), z.entries().column(5));
        let g = zd.adjoint() * &zd;
        for i in 0..3 {
            assert_relative_eq!(g[(i, i)].re, 5.0 / 7.0, epsilon = 1e-14);
            for j in 0..3 {
                assert!((g[(i, j)] - g[(j, i)].conj()).norm() < 1e-15);
            }
        }
        assert!(restrict_columns(&z, &[7]).is_err());
    }

    #[test]
    fn dataset_json_round_trip() {
        let f = generate_frequencies::<f64>(6, 3, 1.0, 4).unwrap();
        let x = sample_inputs(4, &InputDistribution::gaussian(1.0, 3).unwrap(), 1).unwrap();
        let z = build_nff_matrix(&x, &f).unwrap();
        let model = generate_sparse_model::<f64>(6, 2, SignModel::Steinhaus, MagnitudeModel::Unit, 5).unwrap();
        let y = synthesize_observations(&z, &model).unwrap();
        let ds = TrialDataset::from_parts(&z, &y, Some(&model), TrialSeeds { master: Some(1), ..Default::default() });
        let text = serde_json::to_string(&ds).unwrap();
        let back: TrialDataset = serde_json::from_str(&text).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.feature_matrix().unwrap().entries(), z.entries());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn modulus_and_gram_diagonal(m in 1usize..12, n in 1usize..12, dim in 1usize..5, seed: u64) {
            let f = generate_frequencies::<f64>(n, dim, 1.0, seed).unwrap();
            let x = sample_inputs(m, &InputDistribution::gaussian(1.0, dim).unwrap(), seed.wrapping_add(1)).unwrap();
            let z = build_nff_matrix(&x, &f).unwrap();
            let inv = 1.0 / (n as f64).sqrt();
            for v in z.entries().iter() {
                prop_assert!((v.norm() - inv).abs() < 1e-14);
            }
            let g = z.entries().adjoint() * z.entries();
            for k in 0..n {
                prop_assert!((g[(k, k)].re - m as f64 / n as f64).abs() < 1e-13);
            }
        }

        #[test]
        fn observations_lie_in_support_span(m in 2usize..10, n in 2usize..10, seed: u64) {
            let d = 1 + (seed as usize % n);
            let f = generate_frequencies::<f64>(n, 2, 1.0, seed).unwrap();
            let x = sample_inputs(m, &InputDistribution::gaussian(1.0, 2).unwrap(), seed ^ 1).unwrap();
            let z = build_nff_matrix(&x, &f).unwrap();
            let model = generate_sparse_model::<f64>(n, d, SignModel::Steinhaus, MagnitudeModel::Unit, seed ^ 2).unwrap();
            let y = synthesize_observations(&z, &model).unwrap();
            let zd = restrict_columns(&z, &model.support).unwrap();
            let coeffs = DVector::from_iterator(d, model.support.iter().map(|&k| model.theta_bar[k]));
            prop_assert!((zd * coeffs - y).norm() < 1e-12);
        }
    }
}
