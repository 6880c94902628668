use std::io::Write;
use std::path::PathBuf;

use nalgebra::DVector;
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bpsolver::{basis_pursuit, recovery_verdict, CoefficientDomain, SolverConfig, DEFAULT_REL_TOL};
use crate::error::{Error, Result};
use crate::kernelspace::{generate_frequencies, FrequencySet, InputDistribution};
use crate::seed::derive_seed;
use crate::sensing::{
    build_nff_matrix, generate_sparse_model, sample_inputs, synthesize_observations, FeatureMatrix, MagnitudeModel,
    SignModel, SparseModel,
};

/// MSE sweep over measurement counts `M` and sparsity levels `D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub n: usize,
    pub dim: usize,
    /// Input variance `σ²`.
    pub sigma2: f64,
    /// Per-component variance of the frequency dictionary.
    pub freq_variance: f64,
    pub m_values: Vec<usize>,
    pub d_sweep: Vec<usize>,
    pub trials: usize,
    pub delta: f64,
    pub sign_model: SignModel,
    /// Defaults to the sign model's own magnitude convention.
    pub magnitude_model: Option<MagnitudeModel>,
    /// Defaults to real coefficients for real sign models, complex otherwise.
    pub domain: Option<CoefficientDomain>,
    pub rel_tol: f64,
    pub master_seed: u64,
    pub output_path: Option<PathBuf>,
    pub solver: SolverConfig<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 500,
            dim: 20,
            sigma2: 1.0,
            freq_variance: 1.0,
            m_values: vec![100, 200],
            d_sweep: (1..=12).map(|k| 10 * k).collect(),
            trials: 50,
            delta: 0.1,
            sign_model: SignModel::UniformPositive,
            magnitude_model: None,
            domain: None,
            rel_tol: DEFAULT_REL_TOL,
            master_seed: 0,
            output_path: None,
            solver: SolverConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.dim == 0 {
            return Err(Error::param("n and dim must be >= 1"));
        }
        if !(self.sigma2 > 0.0) || !(self.freq_variance > 0.0) {
            return Err(Error::param("variances must be positive"));
        }
        if self.m_values.is_empty() || self.d_sweep.is_empty() {
            return Err(Error::param("m_values and d_sweep must be nonempty"));
        }
        if let Some(m) = self.m_values.iter().find(|&&m| m == 0 || m > self.n) {
            return Err(Error::param(format!("each M must satisfy 1 <= M <= N, got {m}")));
        }
        if let Some(d) = self.d_sweep.iter().find(|&&d| d == 0 || d > self.n) {
            return Err(Error::param(format!("each D must satisfy 1 <= D <= N, got {d}")));
        }
        if self.trials == 0 {
            return Err(Error::param("trials must be >= 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::param("delta must lie in (0, 1)"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::param("rel_tol must be positive"));
        }
        if self.domain() == CoefficientDomain::Real && !self.sign_model.is_real() {
            return Err(Error::param("real coefficient domain needs a real sign model"));
        }
        self.solver.validate()
    }

    pub fn magnitude(&self) -> MagnitudeModel {
        self.magnitude_model.unwrap_or(self.sign_model.default_magnitude())
    }

    pub fn domain(&self) -> CoefficientDomain {
        self.domain.unwrap_or(if self.sign_model.is_real() {
            CoefficientDomain::Real
        } else {
            CoefficientDomain::Complex
        })
    }

    pub fn frequency_seed(&self) -> u64 {
        derive_seed(self.master_seed, "omega", &[])
    }

    /// Seed of the ground truth for trial `t` at sparsity `D`; shared across `M`.
    pub fn model_seed(&self, sparsity_d: usize, trial: usize) -> u64 {
        derive_seed(self.master_seed, "theta", &[sparsity_d as u64, trial as u64])
    }

    pub fn input_seed(&self, m: usize, sparsity_d: usize, trial: usize) -> u64 {
        derive_seed(self.master_seed, "inputs", &[m as u64, sparsity_d as u64, trial as u64])
    }

    pub fn frequencies(&self) -> Result<FrequencySet<f64>> {
        generate_frequencies(self.n, self.dim, self.freq_variance, self.frequency_seed())
    }

    pub fn input_distribution(&self) -> Result<InputDistribution<f64>> {
        InputDistribution::gaussian(self.sigma2, self.dim)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialOutcome {
    Success,
    Failure,
    NonConverged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub m: usize,
    pub sparsity_d: usize,
    pub trial: usize,
    pub outcome: TrialOutcome,
    pub converged: bool,
    pub sq_error: f64,
    pub rel_error: f64,
    pub iterations: usize,
    pub constraint_violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub m: usize,
    pub sparsity_d: usize,
    pub trials: usize,
    pub successes: usize,
    pub failures: usize,
    pub non_converged: usize,
    /// Mean square error over all trials, non-converged ones included.
    pub mean_sq_error: f64,
    pub success_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MseSweep {
    pub cells: Vec<CellSummary>,
    pub trials: Vec<TrialRecord>,
}

impl MseSweep {
    pub fn cell(&self, m: usize, sparsity_d: usize) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.m == m && c.sparsity_d == sparsity_d)
    }
}

/// Draws the measurement matrix, ground truth and observations of one trial.
pub fn prepare_trial(
    config: &ExperimentConfig,
    freqs: &FrequencySet<f64>,
    m: usize,
    sparsity_d: usize,
    trial: usize,
) -> Result<(FeatureMatrix<f64>, SparseModel<f64>, DVector<Complex<f64>>)> {
    let dist = config.input_distribution()?;
    let x = sample_inputs(m, &dist, config.input_seed(m, sparsity_d, trial))?;
    let z = build_nff_matrix(&x, freqs)?;
    let model = generate_sparse_model(
        config.n,
        sparsity_d,
        config.sign_model,
        config.magnitude(),
        config.model_seed(sparsity_d, trial),
    )?;
    let y = synthesize_observations(&z, &model)?;
    Ok((z, model, y))
}

fn run_trial(config: &ExperimentConfig, freqs: &FrequencySet<f64>, m: usize, sparsity_d: usize, trial: usize) -> Result<TrialRecord> {
    let (z, model, y) = prepare_trial(config, freqs, m, sparsity_d, trial)?;
    let solver = config.solver.with_domain(config.domain());
    let result = basis_pursuit(&z, &y, &solver)?;
    let verdict = recovery_verdict(&result, &model, config.rel_tol)?;
    let outcome = match (result.converged, verdict.success) {
        (false, _) => TrialOutcome::NonConverged,
        (true, true) => TrialOutcome::Success,
        (true, false) => TrialOutcome::Failure,
    };
    Ok(TrialRecord {
        m,
        sparsity_d,
        trial,
        outcome,
        converged: result.converged,
        sq_error: verdict.sq_error,
        rel_error: verdict.rel_error,
        iterations: result.iterations,
        constraint_violation: result.constraint_violation,
    })
}

/// Runs every `(M, D, trial)` solve; cells come out in ascending `(M, D)` order.
pub fn run_mse_sweep(config: &ExperimentConfig) -> Result<MseSweep> {
    config.validate()?;
    let freqs = config.frequencies()?;
    let mut ms = config.m_values.clone();
    ms.sort_unstable();
    ms.dedup();
    let mut ds = config.d_sweep.clone();
    ds.sort_unstable();
    ds.dedup();

    let jobs: Vec<(usize, usize, usize)> = ms
        .iter()
        .flat_map(|&m| ds.iter().flat_map(move |&d| (0..config.trials).map(move |t| (m, d, t))))
        .collect();
    let trials = jobs
        .par_iter()
        .map(|&(m, d, t)| run_trial(config, &freqs, m, d, t))
        .collect::<Result<Vec<_>>>()?;

    let cells = trials
        .chunks(config.trials)
        .map(|chunk| {
            let count = |o: TrialOutcome| chunk.iter().filter(|r| r.outcome == o).count();
            let successes = count(TrialOutcome::Success);
            let total: f64 = chunk.iter().map(|r| r.sq_error).sum();
            CellSummary {
                m: chunk[0].m,
                sparsity_d: chunk[0].sparsity_d,
                trials: chunk.len(),
                successes,
                failures: count(TrialOutcome::Failure),
                non_converged: count(TrialOutcome::NonConverged),
                mean_sq_error: total / chunk.len() as f64,
                success_rate: successes as f64 / chunk.len() as f64,
            }
        })
        .collect();
    Ok(MseSweep { cells, trials })
}

pub const SWEEP_CSV_HEADER: [&str; 8] =
    ["M", "D", "trials", "successes", "failures", "non_converged", "mse", "success_rate"];

pub const TRIALS_CSV_HEADER: [&str; 9] =
    ["M", "D", "trial", "outcome", "converged", "sq_error", "rel_error", "iterations", "constraint_violation"];

pub fn write_sweep_csv<W: Write>(cells: &[CellSummary], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SWEEP_CSV_HEADER)?;
    for c in cells {
        w.write_record([
            c.m.to_string(),
            c.sparsity_d.to_string(),
            c.trials.to_string(),
            c.successes.to_string(),
            c.failures.to_string(),
            c.non_converged.to_string(),
            format!("{:e}", c.mean_sq_error),
            c.success_rate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trials_csv<W: Write>(records: &[TrialRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRIALS_CSV_HEADER)?;
    for r in records {
        let outcome = match r.outcome {
            TrialOutcome::Success => "success",
            TrialOutcome::Failure => "failure",
            TrialOutcome::NonConverged => "non_converged",
        };
        w.write_record([
            r.m.to_string(),
            r.sparsity_d.to_string(),
            r.trial.to_string(),
            outcome.to_string(),
            r.converged.to_string(),
            format!("{:e}", r.sq_error),
            format!("{:e}", r.rel_error),
            r.iterations.to_string(),
            format!("{:e}", r.constraint_violation),
        ])?;
    }
    w.flush()?;
    Ok(())
}
