//! Equality-constrained basis pursuit, `min ‖θ‖₁ s.t. Zθ = y`, by ADMM.
//!
//! Each iteration projects onto the affine set `{θ : Zθ = y}` with a cached
//! Cholesky factor of `Z Zᴴ`, then applies modulus soft-thresholding, which
//! shrinks `|θ_k|` and keeps the phase. The same loop runs over complex
//! coefficients or, with [`CoefficientDomain::Real`], over real coefficients
//! against the stacked system `[Re Z; Im Z] θ = [Re y; Im y]`.

use nalgebra::{Cholesky, ComplexField, DMatrix, DVector, Dyn};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sensing::{FeatureMatrix, SparseModel};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientDomain {
    #[default]
    Complex,
    Real,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default)]
pub struct SolverConfig<T: Real> {
    /// Augmented-Lagrangian weight.
    pub rho: T,
    /// Relative primal residual tolerance.
    pub tol_primal: T,
    /// Relative dual residual tolerance.
    pub tol_dual: T,
    pub max_iters: usize,
    /// Relative bound on `‖Zθ̂ − y‖₂ / (1 + ‖y‖₂)` expected of a converged solve.
    pub feasibility_tol: T,
    /// Rows are rank deficient when `σ_min ≤ rank_tol · σ_max`.
    pub rank_tol: T,
    pub domain: CoefficientDomain,
    /// Rebalance `ρ` toward equal primal and dual residuals.
    pub adaptive_rho: bool,
    /// Over-relaxation factor `α ∈ (0, 2)`; 1 is plain ADMM.
    pub relaxation: T,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            rho: T::one(),
            tol_primal: T::lit(1e-9),
            tol_dual: T::lit(1e-9),
            max_iters: 50_000,
            feasibility_tol: T::lit(1e-8),
            rank_tol: T::lit(1e-6),
            domain: CoefficientDomain::Complex,
            adaptive_rho: true,
            relaxation: T::lit(1.6),
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn with_domain(mut self, domain: CoefficientDomain) -> Self {
        self.domain = domain;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.rho, self.tol_primal, self.tol_dual, self.feasibility_tol, self.rank_tol];
        if positive.iter().any(|v| !(*v > T::zero())) {
            return Err(Error::param("solver weights and tolerances must be positive"));
        }
        if !(self.relaxation > T::zero() && self.relaxation < T::lit(2.0)) {
            return Err(Error::param("relaxation must lie in (0, 2)"));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SolverResult<T: Real> {
    pub theta_hat: DVector<Complex<T>>,
    pub iterations: usize,
    pub converged: bool,
    /// `‖x − z‖ / max(‖x‖, ‖z‖)` at the last iteration.
    pub primal_residual: T,
    /// `ρ‖z − z_prev‖ / ‖ρu‖` at the last iteration.
    pub dual_residual: T,
    /// `‖Zθ̂ − y‖₂`.
    pub constraint_violation: T,
    /// `Σ |θ̂_k|`.
    pub objective: T,
    /// Lagrange multiplier `v` of `Zθ = y`; `Zᴴv` approximates a subgradient of `‖·‖₁` at `θ̂`.
    pub dual: DVector<Complex<T>>,
    pub domain: CoefficientDomain,
}

/// Shrinks the modulus of `v` by `kappa`, keeping its phase; zero inside the disc.
pub fn soft_threshold<F: ComplexField>(v: F, kappa: F::RealField) -> F {
    let m = v.clone().modulus();
    if m <= kappa {
        F::zero()
    } else {
        v.scale((m.clone() - kappa) / m)
    }
}

struct AdmmOutput<F: ComplexField> {
    x: DVector<F>,
    dual: DVector<F>,
    iterations: usize,
    converged: bool,
    primal: F::RealField,
    dual_res: F::RealField,
}

/// Constraint system with a factorized Gram matrix. `lift` maps a multiplier of
/// the factorized rows back to the rows of the original system.
struct AffineSet<F: ComplexField> {
    a: DMatrix<F>,
    b: DVector<F>,
    gram: Cholesky<F, Dyn>,
    lift: Option<DMatrix<F>>,
}

fn relative<T: Real>(num: T, den: T) -> T {
    if den > T::zero() {
        num / den
    } else if num > T::zero() {
        T::max_value().unwrap_or(T::one() / T::EPS)
    } else {
        T::zero()
    }
}

fn admm<T: Real, F: ComplexField<RealField = T> + Copy>(set: &AffineSet<F>, cfg: &SolverConfig<T>) -> AdmmOutput<F> {
    let (m, n) = set.a.shape();
    let mut rho = cfg.rho;
    let alpha = cfg.relaxation;
    let mut x = DVector::<F>::zeros(n);
    let mut z = DVector::<F>::zeros(n);
    let mut u = DVector::<F>::zeros(n);
    let mut v = DVector::<F>::zeros(n);
    let mut w = DVector::<F>::zeros(m);

    let mut iterations = 0;
    let mut converged = false;
    let mut primal = T::zero();
    let mut dual_res = T::zero();
    let mut rho_w = rho;
    let (mu, tau) = (T::lit(10.0), T::lit(2.0));

    for it in 1..=cfg.max_iters {
        iterations = it;
        // x = Π(z − u)
        v.copy_from(&z);
        v -= &u;
        w.copy_from(&set.b);
        w.gemv(F::one(), &set.a, &v, -F::one());
        set.gram.solve_mut(&mut w);
        rho_w = rho;
        x.copy_from(&v);
        x.gemv_ad(-F::one(), &set.a, &w, F::one());

        let kappa = T::one() / rho;
        let mut r2 = T::zero();
        let mut s2 = T::zero();
        let mut z2 = T::zero();
        let mut u2 = T::zero();
        for k in 0..n {
            let z_prev = z[k];
            let xr = x[k].scale(alpha) + z_prev.scale(T::one() - alpha);
            let zk = soft_threshold(xr + u[k], kappa);
            let uk = u[k] + xr - zk;
            r2 += (x[k] - zk).modulus_squared();
            s2 += (zk - z_prev).modulus_squared();
            z2 += zk.modulus_squared();
            u2 += uk.modulus_squared();
            z[k] = zk;
            u[k] = uk;
        }
        let x_norm = x.norm();
        primal = relative(r2.sqrt(), x_norm.max(z2.sqrt()));
        dual_res = relative(s2.sqrt(), u2.sqrt());
        if primal <= cfg.tol_primal && dual_res <= cfg.tol_dual {
            converged = true;
            break;
        }
        if cfg.adaptive_rho && it % 10 == 0 {
            if primal > mu * dual_res {
                rho *= tau;
                u.unscale_mut(tau);
            } else if dual_res > mu * primal {
                rho /= tau;
                u.scale_mut(tau);
            }
        }
    }

    // multiplier of the last projection, ν = −ρ w
    let nu = w * F::from_real(-rho_w);
    let dual = match &set.lift {
        Some(l) => l * nu,
        None => nu,
    };
    AdmmOutput { x, dual, iterations, converged, primal, dual_res }
}

/// `Z Zᴴ` assembled from real products, which run on the blocked real kernel.
fn complex_gram<T: Real>(z: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    let re = z.map(|c| c.re);
    let im = z.map(|c| c.im);
    let (re_t, im_t) = (re.transpose(), im.transpose());
    let real = &re * &re_t + &im * &im_t;
    let imag = &im * &re_t - &re * &im_t;
    real.zip_map(&imag, Complex::new)
}

fn complex_set<T: Real>(z: &DMatrix<Complex<T>>, y: &DVector<Complex<T>>, rank_tol: T) -> Result<AffineSet<Complex<T>>> {
    let gram = complex_gram(z);
    let eig = gram.clone().symmetric_eigenvalues();
    check_rank(eig.min(), eig.max(), rank_tol)?;
    let chol = Cholesky::new(gram).ok_or(Error::RankDeficient { sigma_min: 0.0 })?;
    Ok(AffineSet { a: z.clone(), b: y.clone(), gram: chol, lift: None })
}

fn check_rank<T: Real>(lambda_min: T, lambda_max: T, rank_tol: T) -> Result<()> {
    let sigma_min = lambda_min.max(T::zero()).sqrt();
    let sigma_max = lambda_max.max(T::zero()).sqrt();
    if !(sigma_max > T::zero()) || sigma_min <= rank_tol * sigma_max {
        return Err(Error::RankDeficient { sigma_min: sigma_min.as_f64() });
    }
    Ok(())
}

/// Stacked real system. Dependent rows (conjugate DFT rows, more real rows
/// than unknowns) are replaced by an orthonormal basis of the row space.
/// Left singular vectors and singular values of `a`, with a reconstruction check.
///
/// nalgebra's bidiagonal SVD can deflate wrongly for some matrices holding
/// exact zeros, so failed attempts are retried with other convergence
/// thresholds and on `aᵀ`.
fn left_singular<T: Real>(a: &DMatrix<T>) -> Result<(DMatrix<T>, DVector<T>)> {
    let tol = T::lit(1e-10) * (T::one() + a.norm());
    let at = a.transpose();
    for eps in [T::default_epsilon() * T::lit(5.0), T::default_epsilon(), T::lit(1e-14), T::lit(1e-12)] {
        for transposed in [false, true] {
            let m = if transposed { &at } else { a };
            let Some(svd) = m.clone().try_svd(true, true, eps, 0) else { continue };
            if !svd.clone().recompose().is_ok_and(|r| (r - m).norm() <= tol) {
                continue;
            }
            let u = if transposed { svd.v_t.expect("requested").transpose() } else { svd.u.expect("requested") };
            return Ok((u, svd.singular_values));
        }
    }
    Err(Error::Numerical("singular value decomposition failed its reconstruction check".into()))
}

/// Singular values below this fraction of the largest count as exact zeros.
const STRUCTURAL_ZERO: f64 = 1e-10;

fn real_set<T: Real>(
    z: &DMatrix<Complex<T>>,
    y: &DVector<Complex<T>>,
    rank_tol: T,
    feasibility_tol: T,
) -> Result<AffineSet<T>> {
    let (m, n) = z.shape();
    let a = DMatrix::<T>::from_fn(2 * m, n, |i, k| if i < m { z[(i, k)].re } else { z[(i - m, k)].im });
    let b = DVector::<T>::from_fn(2 * m, |i, _| if i < m { y[i].re } else { y[i - m].im });
    let gram = &a * a.transpose();
    let eig = gram.clone().symmetric_eigenvalues();
    if check_rank(eig.min(), eig.max(), rank_tol).is_ok() {
        if let Some(chol) = Cholesky::new(gram) {
            return Ok(AffineSet { a, b, gram: chol, lift: None });
        }
    }

    let (u, sigma) = left_singular(&a)?;
    let (u, sigma) = (&u, &sigma);
    let sigma_max = sigma.max();
    let keep: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] > rank_tol * sigma_max).collect();
    if keep.is_empty() {
        return Err(Error::RankDeficient { sigma_min: 0.0 });
    }
    // dropped directions above round-off mean ill-conditioning rather than
    // exact dependence such as conjugate DFT rows
    let dropped = (0..sigma.len())
        .filter(|i| !keep.contains(i))
        .fold(T::zero(), |acc, i| acc.max(sigma[i]));
    if dropped > T::lit(STRUCTURAL_ZERO) * sigma_max {
        return Err(Error::RankDeficient { sigma_min: dropped.as_f64() });
    }
    let r = keep.len();
    // P = Σ_r⁻¹ U_rᵀ gives PA = V_rᵀ with orthonormal rows
    let p = DMatrix::<T>::from_fn(r, 2 * m, |i, j| u[(j, keep[i])] / sigma[keep[i]]);
    let a_r = &p * &a;
    let b_r = &p * &b;
    let u_r = u.select_columns(&keep);
    let residual = &b - &u_r * (u_r.transpose() * &b);
    if residual.norm() > feasibility_tol * (T::one() + b.norm()) {
        return Err(Error::param(
            "observations are not reachable with real coefficients; use the complex domain",
        ));
    }
    let chol = Cholesky::new(DMatrix::identity(r, r)).expect("identity is positive definite");
    Ok(AffineSet { a: a_r, b: b_r, gram: chol, lift: Some(p.transpose()) })
}

/// Solves basis pursuit for a dense measurement matrix.
pub fn basis_pursuit_dense<T: Real>(
    z: &DMatrix<Complex<T>>,
    y: &DVector<Complex<T>>,
    config: &SolverConfig<T>,
) -> Result<SolverResult<T>> {
    config.validate()?;
    let (m, _) = z.shape();
    if y.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: y.len(), context: "observations vs rows of Z" });
    }
    if m == 0 {
        return Err(Error::param("need at least one measurement"));
    }

    let (theta_hat, dual, iterations, converged, primal, dual_res) = match config.domain {
        CoefficientDomain::Complex => {
            let set = complex_set(z, y, config.rank_tol)?;
            let out = admm(&set, config);
            (out.x, out.dual, out.iterations, out.converged, out.primal, out.dual_res)
        }
        CoefficientDomain::Real => {
            let set = real_set(z, y, config.rank_tol, config.feasibility_tol)?;
            let out = admm(&set, config);
            let theta = out.x.map(|v| Complex::new(v, T::zero()));
            let dual = DVector::from_fn(m, |i, _| Complex::new(out.dual[i], out.dual[m + i]));
            (theta, dual, out.iterations, out.converged, out.primal, out.dual_res)
        }
    };

    let constraint_violation = (z * &theta_hat - y).norm();
    let converged = converged && constraint_violation <= config.feasibility_tol * (T::one() + y.norm());
    let objective = theta_hat.iter().fold(T::zero(), |acc, c| acc + c.modulus());
    Ok(SolverResult {
        theta_hat,
        iterations,
        converged,
        primal_residual: primal,
        dual_residual: dual_res,
        constraint_violation,
        objective,
        dual,
        domain: config.domain,
    })
}

pub fn basis_pursuit<T: Real>(
    z: &FeatureMatrix<T>,
    y: &DVector<Complex<T>>,
    config: &SolverConfig<T>,
) -> Result<SolverResult<T>> {
    basis_pursuit_dense(z.entries(), y, config)
}

/// Dual-side evidence that `θ̂` minimizes `‖θ‖₁` over `{θ : Zθ = y}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct OptimalityCertificate<T: Real> {
    /// `‖c‖_∞` with `c = Zᴴv` (real part only in the real domain).
    pub dual_sup_norm: T,
    /// `‖θ̂‖₁ − Re⟨c, θ̂⟩`, zero at an exact optimum.
    pub alignment_gap: T,
    /// `Re⟨v, y⟩ / max(1, ‖c‖_∞)`: a lower bound on the optimal objective.
    pub lower_bound: T,
    /// `objective − lower_bound`.
    pub duality_gap: T,
}

pub fn optimality_certificate<T: Real>(
    z: &DMatrix<Complex<T>>,
    y: &DVector<Complex<T>>,
    result: &SolverResult<T>,
) -> OptimalityCertificate<T> {
    let mut corr = z.ad_mul(&result.dual);
    if result.domain == CoefficientDomain::Real {
        corr.iter_mut().for_each(|c| c.im = T::zero());
    }
    let sup = corr.iter().fold(T::zero(), |acc, c| acc.max(c.modulus()));
    let aligned = corr
        .iter()
        .zip(result.theta_hat.iter())
        .fold(T::zero(), |acc, (c, t)| acc + (c.conj() * t).re);
    let value = result.dual.dotc(y).re;
    let lower_bound = value / sup.max(T::one());
    OptimalityCertificate {
        dual_sup_norm: sup,
        alignment_gap: result.objective - aligned,
        lower_bound,
        duality_gap: result.objective - lower_bound,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RecoveryVerdict<T: Real> {
    pub success: bool,
    /// `Σ |θ̄_i − θ̂_i|²`.
    pub sq_error: T,
    /// `sqrt(sq_error) / ‖θ̄‖₂`, or `sqrt(sq_error)` when `θ̄ = 0`.
    pub rel_error: T,
}

/// Recovery threshold on the relative error for "exact" recovery.
pub const DEFAULT_REL_TOL: f64 = 1e-5;

pub fn recovery_verdict<T: Real>(result: &SolverResult<T>, truth: &SparseModel<T>, rel_tol: T) -> Result<RecoveryVerdict<T>> {
    if result.theta_hat.len() != truth.n() {
        return Err(Error::DimensionMismatch {
            expected: truth.n(),
            got: result.theta_hat.len(),
            context: "estimate vs ground truth length",
        });
    }
    let sq_error = result
        .theta_hat
        .iter()
        .zip(truth.theta_bar.iter())
        .fold(T::zero(), |acc, (a, b)| acc + (*a - *b).modulus_squared());
    let truth_norm = truth.theta_bar.norm();
    let rel_error = if truth_norm > T::zero() { sq_error.sqrt() / truth_norm } else { sq_error.sqrt() };
    Ok(RecoveryVerdict { success: rel_error <= rel_tol, sq_error, rel_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernelspace::{generate_frequencies, InputDistribution};
    use crate::sensing::{
        build_nff_matrix, build_partial_dft, generate_sparse_model, sample_inputs, synthesize_observations,
        MagnitudeModel, SignModel,
    };
    use proptest::prelude::*;

    fn nff(m: usize, n: usize, dim: usize, seed: u64) -> FeatureMatrix<f64> {
        let f = generate_frequencies::<f64>(n, dim, 1.0, seed).unwrap();
        let x = sample_inputs(m, &InputDistribution::gaussian(1.0, dim).unwrap(), seed ^ 0xabc).unwrap();
        build_nff_matrix(&x, &f).unwrap()
    }

    #[test]
    fn gram_from_real_products_matches_direct() {
        let z = nff(5, 9, 2, 4);
        let direct = z.entries() * z.entries().adjoint();
        assert!((complex_gram(z.entries()) - direct).norm() < 1e-14);
    }

    #[test]
    fn soft_threshold_keeps_phase() {
        let v = Complex::new(3.0, 4.0);
        let s = soft_threshold(v, 1.0);
        assert!((s.norm() - 4.0).abs() < 1e-15);
        assert!((s.arg() - v.arg()).abs() < 1e-15);
        assert_eq!(soft_threshold(Complex::new(0.3, 0.4), 0.5), Complex::new(0.0, 0.0));
        assert_eq!(soft_threshold(-2.5f64, 1.0), -1.5);
        assert_eq!(soft_threshold(0.7f64, 1.0), 0.0);
    }

    #[test]
    fn zero_observations_give_zero_solution() {
        let z = nff(6, 10, 3, 1);
        let y = DVector::zeros(6);
        let r = basis_pursuit(&z, &y, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert!(r.iterations <= 2);
        assert_eq!(r.objective, 0.0);
        assert!(r.theta_hat.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn square_unitary_system_returns_unique_point() {
        let z = build_partial_dft::<f64>(12, 12, 4).unwrap();
        let model = generate_sparse_model::<f64>(12, 5, SignModel::Steinhaus, MagnitudeModel::Unit, 3).unwrap();
        let y = synthesize_observations(&z, &model).unwrap();
        let r = basis_pursuit(&z, &y, &SolverConfig::default()).unwrap();
        let direct = z.entries().adjoint() * &y;
        assert!((&r.theta_hat - &direct).norm() < 1e-8);
        assert!((&r.theta_hat - &model.theta_bar).norm() < 1e-8);
    }

    #[test]
    fn steinhaus_spike_is_recovered_with_zero_duality_gap() {
        let z = nff(6, 10, 3, 7);
        let model = generate_sparse_model::<f64>(10, 1, SignModel::Steinhaus, MagnitudeModel::Unit, 8).unwrap();
        let y = synthesize_observations(&z, &model).unwrap();
        let cfg = SolverConfig::default();
        let r = basis_pursuit(&z, &y, &cfg).unwrap();
        assert!(r.converged);
        let v = recovery_verdict(&r, &model, 1e-5).unwrap();
        assert!(v.success, "{v:?}");
        let cert = optimality_certificate(z.entries(), &y, &r);
        assert!(cert.dual_sup_norm <= 1.0 + 10.0 * cfg.tol_dual, "{cert:?}");
        assert!(cert.alignment_gap <= 10.0 * cfg.tol_dual, "{cert:?}");
        assert!(cert.duality_gap.abs() <= 1e-7, "{cert:?}");
    }

    #[test]
    fn real_domain_handles_dependent_dft_rows() {
        // rows 0 and 4 of the 8-point DFT are real, so the stacked system is rank deficient
        let z = crate::sensing::partial_dft_from_rows::<f64>(8, &[0, 3, 4]).unwrap();
        let model = generate_sparse_model::<f64>(8, 1, SignModel::Rademacher, MagnitudeModel::Unit, 2).unwrap();
        let y = synthesize_observations(&z, &model).unwrap();
        let cfg = SolverConfig::default().with_domain(CoefficientDomain::Real);
        let r = basis_pursuit(&z, &y, &cfg).unwrap();
        assert!(r.converged);
        assert!(r.constraint_violation < 1e-8 * (1.0 + y.norm()));
        assert!(r.theta_hat.iter().all(|c| c.im == 0.0));
        let cert = optimality_certificate(z.entries(), &y, &r);
        assert!(cert.dual_sup_norm <= 1.0 + 1e-8, "{cert:?}");
        assert!(cert.duality_gap.abs() <= 1e-7, "{cert:?}");
    }

    #[test]
    fn row_basis_survives_exact_zero_entries() {
        // the default-threshold SVD of this stacked matrix does not reconstruct it
        let z = crate::sensing::partial_dft_from_rows::<f64>(6, &[2, 3, 4]).unwrap();
        let e = z.entries();
        let a = DMatrix::from_fn(6, 6, |i, k| if i < 3 { e[(i, k)].re } else { e[(i - 3, k)].im });
        let (u, sigma) = left_singular(&a).unwrap();
        assert!((u.transpose() * &u - DMatrix::identity(6, 6)).norm() < 1e-12);
        let kept = sigma.iter().filter(|&&s| s > 1e-6).count();
        assert_eq!(kept, 3);

        let model = generate_sparse_model::<f64>(6, 2, SignModel::Rademacher, MagnitudeModel::Unit, 9).unwrap();
        let y = synthesize_observations(&z, &model).unwrap();
        let r = basis_pursuit(&z, &y, &SolverConfig::default().with_domain(CoefficientDomain::Real)).unwrap();
        assert!(r.converged && r.constraint_violation < 1e-8 * (1.0 + y.norm()));
    }

    #[test]
    fn real_domain_rejects_complex_only_observations() {
        let z = build_partial_dft::<f64>(8, 8, 1).unwrap();
        let model = generate_sparse_model::<f64>(8, 2, SignModel::Steinhaus, MagnitudeModel::Unit, 2).unwrap();
        let y = synthesize_observations(&z, &model).unwrap();
        let cfg = SolverConfig::default().with_domain(CoefficientDomain::Real);
        assert!(matches!(basis_pursuit(&z, &y, &cfg), Err(Error::Parameter(_))));
    }

    #[test]
    fn rank_deficient_rows_rejected() {
        let z = nff(3, 6, 2, 1);
        let mut e = z.entries().clone();
        let row = e.row(0).into_owned();
        e.set_row(2, &row);
        let y = DVector::from_element(3, Complex::new(1.0, 0.0));
        assert!(matches!(
            basis_pursuit_dense(&e, &y, &SolverConfig::default()),
            Err(Error::RankDeficient { .. })
        ));
        // more rows than columns
        let z = nff(7, 5, 2, 1);
        assert!(basis_pursuit(&z, &DVector::zeros(7), &SolverConfig::default()).is_err());
    }

    #[test]
    fn budget_exhaustion_is_reported_not_raised() {
        let z = nff(20, 60, 4, 3);
        let model = generate_sparse_model::<f64>(60, 8, SignModel::Steinhaus, MagnitudeModel::Unit, 2).unwrap();
        let y = synthesize_observations(&z, &model).unwrap();
        let cfg = SolverConfig { max_iters: 3, ..SolverConfig::default() };
        let r = basis_pursuit(&z, &y, &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn invalid_config_rejected() {
        let z = nff(3, 6, 2, 1);
        let y = DVector::zeros(3);
        for cfg in [
            SolverConfig { rho: 0.0, ..SolverConfig::default() },
            SolverConfig { tol_dual: -1.0, ..SolverConfig::default() },
            SolverConfig { max_iters: 0, ..SolverConfig::default() },
        ] {
            assert!(basis_pursuit(&z, &y, &cfg).is_err());
        }
        assert!(basis_pursuit(&z, &DVector::zeros(4), &SolverConfig::default()).is_err());
    }

    #[test]
    fn verdict_cases() {
        let model = generate_sparse_model::<f64>(6, 2, SignModel::Steinhaus, MagnitudeModel::Unit, 2).unwrap();
        let mut r = SolverResult {
            theta_hat: model.theta_bar.clone(),
            iterations: 1,
            converged: true,
            primal_residual: 0.0,
            dual_residual: 0.0,
            constraint_violation: 0.0,
            objective: 2.0,
            dual: DVector::zeros(1),
            domain: CoefficientDomain::Complex,
        };
        let v = recovery_verdict(&r, &model, 1e-5).unwrap();
        assert!(v.success && v.sq_error == 0.0);

        let mut unit = model.clone();
        unit.theta_bar = unit.theta_bar.unscale(2f64.sqrt());
        r.theta_hat.fill(Complex::new(0.0, 0.0));
        let v = recovery_verdict(&r, &unit, 1e-5).unwrap();
        assert!((v.sq_error - 1.0).abs() < 1e-15 && (v.rel_error - 1.0).abs() < 1e-15);
        assert!(!v.success);

        r.theta_hat = DVector::zeros(5);
        assert!(recovery_verdict(&r, &model, 1e-5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn feasibility_certificate_and_phase_equivariance(seed: u64, m in 3usize..7, extra in 2usize..6, d in 1usize..3) {
            let n = m + extra;
            let z = nff(m, n, 3, seed);
            let model = generate_sparse_model::<f64>(n, d, SignModel::Steinhaus, MagnitudeModel::Unit, seed ^ 5).unwrap();
            let y = synthesize_observations(&z, &model).unwrap();
            let cfg = SolverConfig::default();
            let r = basis_pursuit(&z, &y, &cfg).unwrap();
            prop_assume!(r.converged);
            prop_assert!(r.constraint_violation <= cfg.feasibility_tol * (1.0 + y.norm()));
            let cert = optimality_certificate(z.entries(), &y, &r);
            prop_assert!(cert.dual_sup_norm <= 1.0 + 10.0 * cfg.tol_dual);
            prop_assert!(cert.alignment_gap <= 10.0 * cfg.tol_dual * (1.0 + r.objective));
            prop_assert!(r.objective <= model.l1_norm() + 10.0 * cfg.tol_dual);

            let phase = Complex::from_polar(1.0, (seed % 1000) as f64 * 0.00628);
            let r2 = basis_pursuit(&z, &y.map(|v| v * phase), &cfg).unwrap();
            prop_assume!(r2.converged);
            // only meaningful when the minimizer is unique; a zero duality gap on both pins the objective
            prop_assert!((r2.objective - r.objective).abs() < 1e-6);
            let recovered = recovery_verdict(&r, &model, 1e-5).unwrap().success;
            if recovered {
                prop_assert!((r2.theta_hat - r.theta_hat.map(|v| v * phase)).norm() < 1e-6);
            }
        }
    }
}
