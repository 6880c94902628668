//! Command-line front end. Every subcommand reads a JSON config (all fields
//! optional unless noted), honours `--seed` and `--out`, and exits with 0 on
//! success, 2 on a parameter error and 3 when a bound is infeasible.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use num_complex::Complex;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use nff_core::bounds::{compute_mk_from_summary, RatioCurveConfig, SpectralSummary, DEFAULT_C_PRIME};
use nff_core::bpsolver::{
    basis_pursuit, optimality_certificate, recovery_verdict, CoefficientDomain, OptimalityCertificate,
    RecoveryVerdict, SolverConfig, DEFAULT_REL_TOL,
};
use nff_core::experiments::{
    default_ratio_config, manifest_path, run_mse_sweep, run_ratio_figure, verify_eigenvalue_bound,
    verify_inner_product_bound, verify_pinv_norm_bound, write_sweep_csv, write_trials_csv, ConcentrationProbe,
    ExperimentConfig, RunManifest,
};
use nff_core::kernelspace::{build_kernel_matrix, generate_frequencies, DistributionKind, InputDistribution};
use nff_core::seed::derive_seed;
use nff_core::sensing::{
    build_nff_matrix, build_partial_dft, generate_sparse_model, sample_inputs, synthesize_observations, SignModel,
    TrialDataset, TrialSeeds,
};
use nff_core::{Error, Result};

#[derive(Parser)]
#[command(name = "nff", version, about = "Sparse recovery with nonlinear Fourier features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    config: Option<PathBuf>,
    /// Overrides the master seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the sample-complexity report for one (N, D, δ) as JSON.
    Bounds(Common),
    /// Write the M_k / M_f ratio table over input dimensions as CSV.
    RatioCurve(Common),
    /// Draw one recovery trial and write it as a trial JSON.
    MakeTrial(Common),
    /// Solve basis pursuit on a trial JSON (the positional argument) and write a result JSON.
    Recover {
        #[command(flatten)]
        common: Common,
        /// JSON solver configuration.
        #[arg(long)]
        solver: Option<PathBuf>,
        /// Coefficient domain; defaults to real when the trial's ground truth is real.
        #[arg(long, value_enum)]
        domain: Option<DomainArg>,
    },
    /// Run the MSE-versus-sparsity sweep and write its CSV tables.
    MseSweep(Common),
    /// Check the smallest-eigenvalue concentration event.
    VerifyThm2(Common),
    /// Check the pseudo-inverse column norm event.
    VerifyThm3(Common),
    /// Check the pairwise inner-product event.
    VerifyLemma3(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Complex,
    Real,
}

fn read_config<C: DeserializeOwned + Default>(path: Option<&Path>) -> Result<C> {
    match path {
        None => Ok(C::default()),
        Some(p) => {
            let f = File::open(p).map_err(|e| Error::Parameter(format!("cannot open {}: {e}", p.display())))?;
            serde_json::from_reader(BufReader::new(f))
                .map_err(|e| Error::Parameter(format!("bad config {}: {e}", p.display())))
        }
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn finish_manifest(mut manifest: RunManifest, outputs: &[&Path], anchor: &Path) -> Result<()> {
    let mpath = manifest_path(anchor);
    let mut all: Vec<&Path> = outputs.to_vec();
    all.push(&mpath);
    manifest.finish(&all);
    manifest.write(&mpath)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
struct BoundsConfig {
    n: usize,
    sparsity_d: usize,
    delta: f64,
    c_prime: f64,
    /// Input distribution; without it the kernel is taken to be the identity.
    distribution: Option<DistributionKind<f64>>,
    dim: usize,
    freq_variance: f64,
    seed: u64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            sparsity_d: 10,
            delta: 0.1,
            c_prime: DEFAULT_C_PRIME,
            distribution: None,
            dim: 100,
            freq_variance: 1.0,
            seed: 0,
        }
    }
}

fn cmd_bounds(c: &Common) -> Result<ExitCode> {
    let mut cfg: BoundsConfig = read_config(c.config.as_deref())?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    let report = match cfg.distribution {
        None => compute_mk_from_summary(&SpectralSummary::identity(cfg.n), cfg.sparsity_d, cfg.delta, cfg.c_prime)?,
        Some(kind) => {
            let dist = InputDistribution::new(kind, cfg.dim)?;
            let freqs = generate_frequencies(cfg.n, cfg.dim, cfg.freq_variance, derive_seed(cfg.seed, "omega", &[]))?;
            let stats = match build_kernel_matrix(&dist, &freqs) {
                Ok(s) => s,
                Err(e @ Error::DegenerateKernel { .. }) => {
                    eprintln!("bound unavailable: {e}");
                    return Ok(ExitCode::from(3));
                }
                Err(e) => return Err(e),
            };
            compute_mk_from_summary(&SpectralSummary::from(&stats), cfg.sparsity_d, cfg.delta, cfg.c_prime)?
        }
    };
    print_json(&report)?;
    if let Some(out) = &c.out {
        let manifest = RunManifest::start("bounds", Some(cfg.seed), &cfg)?;
        write_json(&report, out)?;
        finish_manifest(manifest, &[out], out)?;
    }
    Ok(if report.is_feasible() { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

#[derive(Deserialize)]
#[serde(transparent)]
struct RatioFile(RatioCurveConfig);

impl Default for RatioFile {
    fn default() -> Self {
        Self(default_ratio_config())
    }
}

fn cmd_ratio_curve(c: &Common) -> Result<ExitCode> {
    let RatioFile(mut cfg) = read_config(c.config.as_deref())?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("ratio_curve.csv"));
    let (rows, _) = run_ratio_figure(&cfg, &out)?;
    eprintln!("wrote {} rows to {}", rows.len(), out.display());
    Ok(if rows.iter().any(|r| r.feasible) { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum MeasurementKind {
    #[default]
    Nff,
    PartialDft,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
struct TrialConfig {
    measurement: MeasurementKind,
    n: usize,
    m: usize,
    sparsity_d: usize,
    dim: usize,
    sigma2: f64,
    freq_variance: f64,
    sign_model: SignModel,
    seed: u64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            measurement: MeasurementKind::Nff,
            n: 500,
            m: 200,
            sparsity_d: 60,
            dim: 20,
            sigma2: 1.0,
            freq_variance: 1.0,
            sign_model: SignModel::UniformPositive,
            seed: 0,
        }
    }
}

fn cmd_make_trial(c: &Common) -> Result<ExitCode> {
    let mut cfg: TrialConfig = read_config(c.config.as_deref())?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    let model_seed = derive_seed(cfg.seed, "theta", &[]);
    let input_seed = derive_seed(cfg.seed, "inputs", &[]);
    let model = generate_sparse_model(cfg.n, cfg.sparsity_d, cfg.sign_model, cfg.sign_model.default_magnitude(), model_seed)?;
    let (z, seeds) = match cfg.measurement {
        MeasurementKind::Nff => {
            let freq_seed = derive_seed(cfg.seed, "omega", &[]);
            let freqs = generate_frequencies(cfg.n, cfg.dim, cfg.freq_variance, freq_seed)?;
            let x = sample_inputs(cfg.m, &InputDistribution::gaussian(cfg.sigma2, cfg.dim)?, input_seed)?;
            let seeds = TrialSeeds {
                master: Some(cfg.seed),
                frequencies: Some(freq_seed),
                model: Some(model_seed),
                inputs: Some(input_seed),
            };
            (build_nff_matrix(&x, &freqs)?, seeds)
        }
        MeasurementKind::PartialDft => {
            let seeds = TrialSeeds { master: Some(cfg.seed), frequencies: None, model: Some(model_seed), inputs: Some(input_seed) };
            (build_partial_dft(cfg.n, cfg.m, input_seed)?, seeds)
        }
    };
    let y = synthesize_observations(&z, &model)?;
    let dataset = TrialDataset::from_parts(&z, &y, Some(&model), seeds);
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("trial.json"));
    let manifest = RunManifest::start("make-trial", Some(cfg.seed), &cfg)?;
    write_json(&dataset, &out)?;
    finish_manifest(manifest, &[&out], &out)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct RecoverOutput {
    theta_hat: Vec<Complex<f64>>,
    iterations: usize,
    converged: bool,
    primal_residual: f64,
    dual_residual: f64,
    constraint_violation: f64,
    objective: f64,
    dual: Vec<Complex<f64>>,
    domain: CoefficientDomain,
    certificate: OptimalityCertificate<f64>,
    verdict: Option<RecoveryVerdict<f64>>,
}

fn cmd_recover(c: &Common, solver: Option<&Path>, domain: Option<DomainArg>) -> Result<ExitCode> {
    let trial_path = c.config.as_deref().ok_or_else(|| Error::Parameter("recover needs a trial JSON".into()))?;
    let dataset: TrialDataset = {
        let f = File::open(trial_path)
            .map_err(|e| Error::Parameter(format!("cannot open {}: {e}", trial_path.display())))?;
        serde_json::from_reader(BufReader::new(f))
            .map_err(|e| Error::Parameter(format!("bad trial {}: {e}", trial_path.display())))?
    };
    let mut cfg: SolverConfig<f64> = read_config(solver)?;
    cfg.domain = match domain {
        Some(DomainArg::Complex) => CoefficientDomain::Complex,
        Some(DomainArg::Real) => CoefficientDomain::Real,
        None if dataset.truth.as_ref().is_some_and(|t| t.sign_model.is_real()) => CoefficientDomain::Real,
        None => cfg.domain,
    };
    let z = dataset.feature_matrix()?;
    let y: DVector<Complex<f64>> = dataset.observations();
    let result = basis_pursuit(&z, &y, &cfg)?;
    let verdict = match &dataset.truth {
        Some(t) => Some(recovery_verdict(&result, t, DEFAULT_REL_TOL)?),
        None => None,
    };
    let output = RecoverOutput {
        certificate: optimality_certificate(z.entries(), &y, &result),
        theta_hat: result.theta_hat.iter().copied().collect(),
        iterations: result.iterations,
        converged: result.converged,
        primal_residual: result.primal_residual,
        dual_residual: result.dual_residual,
        constraint_violation: result.constraint_violation,
        objective: result.objective,
        dual: result.dual.iter().copied().collect(),
        domain: result.domain,
        verdict,
    };
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("result.json"));
    let manifest = RunManifest::start("recover", c.seed, &serde_json::json!({ "trial": trial_path, "solver": cfg }))?;
    write_json(&output, &out)?;
    finish_manifest(manifest, &[&out], &out)?;
    eprintln!(
        "converged={} iterations={} objective={:e}{}",
        output.converged,
        output.iterations,
        output.objective,
        output.verdict.map(|v| format!(" rel_error={:e}", v.rel_error)).unwrap_or_default()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_mse_sweep(c: &Common) -> Result<ExitCode> {
    let mut cfg: ExperimentConfig = read_config(c.config.as_deref())?;
    if let Some(s) = c.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &c.out {
        cfg.output_path = Some(o.clone());
    }
    let out = cfg.output_path.clone().unwrap_or_else(|| PathBuf::from("mse_sweep.csv"));
    let trials_out = out.with_extension("trials.csv");
    let mut manifest = RunManifest::start("mse-sweep", Some(cfg.master_seed), &cfg)?;
    manifest.derived_seeds.insert("omega".into(), cfg.frequency_seed());
    let sweep = run_mse_sweep(&cfg)?;
    write_sweep_csv(&sweep.cells, BufWriter::new(File::create(&out)?))?;
    write_trials_csv(&sweep.trials, BufWriter::new(File::create(&trials_out)?))?;
    finish_manifest(manifest, &[&out, &trials_out], &out)?;
    for cell in &sweep.cells {
        eprintln!(
            "M={:4} D={:4} success={:.2} mse={:.3e} non_converged={}",
            cell.m, cell.sparsity_d, cell.success_rate, cell.mean_sq_error, cell.non_converged
        );
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
struct VerifyConfig {
    n: usize,
    dim: usize,
    sigma2: f64,
    freq_variance: f64,
    sparsity_d: usize,
    m: usize,
    /// Absolute `t_I`; defaults to `t_i_fraction · λ_min(K)`.
    t_i: Option<f64>,
    t_i_fraction: f64,
    t_p: f64,
    /// Defaults to `3 sqrt(M)`.
    t_s: Option<f64>,
    /// Constant in the inner-product bound; defaults to `|k(ω_k − ω_l)|`.
    k_const: Option<f64>,
    trials: usize,
    seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            n: 50,
            dim: 20,
            sigma2: 1.0,
            freq_variance: 1.0,
            sparsity_d: 3,
            m: 2000,
            t_i: None,
            t_i_fraction: 0.5,
            t_p: 0.5,
            t_s: None,
            k_const: None,
            trials: 500,
            seed: 0,
        }
    }
}

#[derive(Serialize)]
struct VerifyReport<R: Serialize> {
    config: VerifyConfig,
    support: Vec<usize>,
    t_i: Option<f64>,
    result: R,
}

fn verify_setup(cfg: &VerifyConfig) -> Result<(InputDistribution<f64>, nff_core::FrequencySet64, Vec<usize>, f64)> {
    let dist = InputDistribution::gaussian(cfg.sigma2, cfg.dim)?;
    let freqs = generate_frequencies(cfg.n, cfg.dim, cfg.freq_variance, derive_seed(cfg.seed, "omega", &[]))?;
    if cfg.sparsity_d == 0 || cfg.sparsity_d > cfg.n {
        return Err(Error::Parameter("sparsity_d must lie in 1..=n".into()));
    }
    let mut rng = nff_core::seed::child_rng(cfg.seed, "support", &[]);
    let mut support = rand::seq::index::sample(&mut rng, cfg.n, cfg.sparsity_d).into_vec();
    support.sort_unstable();
    let lambda_min = build_kernel_matrix(&dist, &freqs)?.lambda_min;
    let t_i = cfg.t_i.unwrap_or(cfg.t_i_fraction * lambda_min);
    Ok((dist, freqs, support, t_i))
}

fn write_report<R: Serialize>(report: &R, out: Option<&Path>, command: &str, cfg: &VerifyConfig) -> Result<()> {
    print_json(report)?;
    if let Some(out) = out {
        let manifest = RunManifest::start(command, Some(cfg.seed), cfg)?;
        write_json(report, out)?;
        finish_manifest(manifest, &[out], out)?;
    }
    Ok(())
}

fn verify_config(c: &Common) -> Result<VerifyConfig> {
    let mut cfg: VerifyConfig = read_config(c.config.as_deref())?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn cmd_verify_thm2(c: &Common) -> Result<ExitCode> {
    let cfg = verify_config(c)?;
    let (dist, freqs, support, t_i) = verify_setup(&cfg)?;
    let probe = ConcentrationProbe { t_i, t_p: cfg.t_p, t_s: 0.0, trials: cfg.trials };
    let result = verify_eigenvalue_bound(&dist, &freqs, &support, cfg.m, &probe, derive_seed(cfg.seed, "trials", &[]))?;
    let report = VerifyReport { config: cfg.clone(), support, t_i: Some(t_i), result };
    write_report(&report, c.out.as_deref(), "verify-thm2", &cfg)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify_thm3(c: &Common) -> Result<ExitCode> {
    let cfg = verify_config(c)?;
    let (dist, freqs, support, t_i) = verify_setup(&cfg)?;
    let probe = ConcentrationProbe { t_i, t_p: cfg.t_p, t_s: 0.0, trials: cfg.trials };
    let result = verify_pinv_norm_bound(&dist, &freqs, &support, cfg.m, &probe, derive_seed(cfg.seed, "trials", &[]))?;
    let report = VerifyReport { config: cfg.clone(), support, t_i: Some(t_i), result };
    write_report(&report, c.out.as_deref(), "verify-thm3", &cfg)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify_lemma3(c: &Common) -> Result<ExitCode> {
    let mut cfg = verify_config(c)?;
    if c.config.is_none() {
        cfg.dim = 10;
        cfg.m = 500;
        cfg.trials = 10_000;
    }
    let dist = InputDistribution::gaussian(cfg.sigma2, cfg.dim)?;
    let pair = generate_frequencies(2, cfg.dim, cfg.freq_variance, derive_seed(cfg.seed, "pair", &[]))?;
    let (wk, wl) = (pair.freq(0), pair.freq(1));
    let t_s = cfg.t_s.unwrap_or(3.0 * (cfg.m as f64).sqrt());
    let result = verify_inner_product_bound(
        &dist,
        (wk.as_slice(), wl.as_slice()),
        cfg.n,
        cfg.m,
        t_s,
        cfg.k_const,
        cfg.trials,
        derive_seed(cfg.seed, "trials", &[]),
    )?;
    #[derive(Serialize)]
    struct Lemma3Report<'a> {
        config: &'a VerifyConfig,
        t_s: f64,
        result: nff_core::experiments::BoundCheck,
    }
    write_report(&Lemma3Report { config: &cfg, t_s, result }, c.out.as_deref(), "verify-lemma3", &cfg)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Bounds(c) => cmd_bounds(c),
        Command::RatioCurve(c) => cmd_ratio_curve(c),
        Command::MakeTrial(c) => cmd_make_trial(c),
        Command::Recover { common, solver, domain } => cmd_recover(common, solver.as_deref(), *domain),
        Command::MseSweep(c) => cmd_mse_sweep(c),
        Command::VerifyThm2(c) => cmd_verify_thm2(c),
        Command::VerifyThm3(c) => cmd_verify_thm3(c),
        Command::VerifyLemma3(c) => cmd_verify_lemma3(c),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_parameter_error() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
