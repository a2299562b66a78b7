//! Command-line surface. Data goes to files; diagnostics go to stderr.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::DVector;
use serde::Serialize;

use crate::algorithms::{AlgorithmKind, AlgorithmSpec, ErrorWeights};
use crate::analysis::{self, ModeFactor, MsdPrediction, SteadyStateInputs};
use crate::error::{Error, Result};
use crate::experiments::{apply_change_schedule, parameter_sweep, run_trials, track_series};
use crate::io::complexity::complexity_report;
use crate::io::config::{ExperimentConfig, Prepared};
use crate::io::output::{prediction_csv, sweep_csv, write_run_outputs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gsp-hqc", version, about = "Robust adaptive estimation of bandlimited graph signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every configured algorithm and write learning curves and a summary.
    Run {
        config: PathBuf,
        /// Override the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for trials (results do not depend on it).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Sweep tau and/or mu for each algorithm over the configured grid.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Step-size bounds, per-mode factors and the steady-state MSD prediction.
    Analyze {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Track the signal over time and export per-node true and estimated values.
    Predict {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Noise seed for the single tracking run.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Per-iteration operation counts relative to a baseline algorithm.
    Complexity {
        #[arg(long)]
        n: u128,
        #[arg(long)]
        f: u128,
        #[arg(long)]
        s: u128,
        #[arg(long, value_enum, default_value = "log")]
        baseline: KindArg,
        /// Write the JSON report here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Parse and check a configuration file.
    ValidateConfig { config: PathBuf },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum KindArg {
    Lms,
    Nlms,
    Mcc,
    Gmcc,
    Log,
    Hqc,
}

impl From<KindArg> for AlgorithmKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Lms => AlgorithmKind::Lms,
            KindArg::Nlms => AlgorithmKind::Nlms,
            KindArg::Mcc => AlgorithmKind::Mcc,
            KindArg::Gmcc => AlgorithmKind::Gmcc,
            KindArg::Log => AlgorithmKind::Log,
            KindArg::Hqc => AlgorithmKind::Hqc,
        }
    }
}

/// Failure tagged with the exit code it maps to.
struct Failure {
    code: i32,
    error: Error,
}

fn config_err(error: Error) -> Failure {
    Failure { code: EXIT_CONFIG, error }
}

fn runtime_err(error: Error) -> Failure {
    let code = match error {
        Error::Config(_) | Error::Schema(_) | Error::Parse { .. } | Error::Json(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    };
    Failure { code, error }
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.error);
            f.code
        }
    }
}

fn load(path: &Path) -> Result<(ExperimentConfig, PathBuf), Failure> {
    let cfg = ExperimentConfig::load(path).map_err(config_err)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn prepare(cfg: &ExperimentConfig, base: &Path) -> Result<Prepared, Failure> {
    let prepared = cfg.prepare(base).map_err(runtime_err)?;
    if let Some(d) = &prepared.dataset {
        for (id, line) in &d.dropped {
            eprintln!("warning: station {id} (line {line}) has missing values and was dropped");
        }
    }
    Ok(prepared)
}

fn output_dir(cfg: &ExperimentConfig, base: &Path, over: Option<PathBuf>) -> PathBuf {
    match over {
        Some(p) => p,
        None if cfg.output.dir.is_absolute() => cfg.output.dir.clone(),
        None => base.join(&cfg.output.dir),
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| runtime_err(Error::Input(format!("thread pool: {e}"))))?;
            Ok(pool.install(f))
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| runtime_err(e.into()))?;
        }
    }
    std::fs::write(path, text).map_err(|e| runtime_err(e.into()))
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::ValidateConfig { config } => {
            load(&config)?;
            eprintln!("{}: ok", config.display());
            Ok(())
        }
        Command::Run { config, out, threads } => {
            let (cfg, base) = load(&config)?;
            let prepared = prepare(&cfg, &base)?;
            let plan = cfg.plan(&prepared.problem);
            let results = with_threads(threads, || run_trials(&plan, &cfg.algorithms))?.map_err(runtime_err)?;
            let dir = output_dir(&cfg, &base, out);
            let written = write_run_outputs(&dir, &results).map_err(runtime_err)?;
            eprintln!("wrote {} files to {}", written.len(), dir.display());
            Ok(())
        }
        Command::Sweep { config, out, threads } => {
            let (cfg, base) = load(&config)?;
            let Some(grid) = cfg.sweep.clone() else {
                return Err(config_err(Error::Config("config has no sweep block".into())));
            };
            let prepared = prepare(&cfg, &base)?;
            let plan = cfg.plan(&prepared.problem);
            let dir = output_dir(&cfg, &base, out);
            for spec in &cfg.algorithms {
                let points = with_threads(threads, || parameter_sweep(&plan, spec, &grid))?.map_err(runtime_err)?;
                write(&dir.join(format!("sweep_{}.csv", spec.slug())), &sweep_csv(&points))?;
                let unstable = points.iter().filter(|p| p.unstable).count();
                if unstable > 0 {
                    eprintln!("warning: {}: {unstable} grid point(s) flagged unstable", spec.display_name());
                }
            }
            eprintln!("wrote sweep tables to {}", dir.display());
            Ok(())
        }
        Command::Analyze { config, out } => {
            let (cfg, base) = load(&config)?;
            let prepared = prepare(&cfg, &base)?;
            let report = analyze(&cfg, &prepared).map_err(runtime_err)?;
            for a in &report.algorithms {
                for w in &a.warnings {
                    eprintln!("warning: {}: {w}", a.name);
                }
            }
            let path = out.unwrap_or_else(|| output_dir(&cfg, &base, None).join("analysis.json"));
            let json = serde_json::to_string_pretty(&report).map_err(|e| runtime_err(e.into()))?;
            write(&path, &(json + "\n"))?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        Command::Predict { config, out, seed } => {
            let (cfg, base) = load(&config)?;
            let prepared = prepare(&cfg, &base)?;
            let p = &prepared.problem;
            let (ids, series): (Vec<String>, Vec<DVector<f64>>) = match &prepared.dataset {
                Some(d) => (
                    d.stations.iter().map(|s| s.id.clone()).collect(),
                    (0..d.series_len()).map(|t| d.snapshot(t)).collect::<Result<_>>().map_err(runtime_err)?,
                ),
                None => (
                    (0..p.node_count()).map(|k| k.to_string()).collect(),
                    (0..cfg.iterations)
                        .map(|i| apply_change_schedule(&p.truth, i, cfg.change_schedule.as_ref()).into_owned())
                        .collect(),
                ),
            };
            let dir = output_dir(&cfg, &base, out);
            for spec in &cfg.algorithms {
                let est = track_series(&p.basis, &p.sampling, spec, &series, &cfg.noise, seed).map_err(runtime_err)?;
                write(&dir.join(format!("prediction_{}.csv", spec.slug())), &prediction_csv(&ids, &series, &est))?;
            }
            eprintln!("wrote predictions to {}", dir.display());
            Ok(())
        }
        Command::Complexity { n, f, s, baseline, output } => {
            let report = complexity_report(n, f, s, baseline.into()).map_err(config_err)?;
            let json = serde_json::to_string_pretty(&report).map_err(|e| runtime_err(e.into()))? + "\n";
            match output {
                Some(path) => write(&path, &json),
                None => {
                    print!("{json}");
                    Ok(())
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Bounds {
    pub lambda_max: f64,
    pub mean_step_bound: f64,
    pub mean_square_step_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgorithmAnalysis {
    pub name: String,
    pub spec: AlgorithmSpec,
    /// Bounds with every weight equal to one (exact for LMS).
    pub unit_weight_bounds: Bounds,
    pub mode_factors: Vec<ModeFactor>,
    pub steady_state_weight_factor: Option<f64>,
    pub steady_state_bounds: Option<Bounds>,
    pub msd_prediction: Option<MsdPrediction>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub node_count: usize,
    pub band_size: usize,
    pub sample_count: usize,
    pub algorithms: Vec<AlgorithmAnalysis>,
}

fn bounds(op: &analysis::WeightedOperator) -> Result<Bounds> {
    Ok(Bounds {
        lambda_max: op.lambda_max(),
        mean_step_bound: analysis::mean_step_bound(op)?,
        mean_square_step_bound: analysis::mean_square_step_bound(op)?,
    })
}

pub fn analyze(cfg: &ExperimentConfig, prepared: &Prepared) -> Result<AnalysisReport> {
    let p = &prepared.problem;
    let unit_op = analysis::weighted_operator(&p.basis, &p.sampling, &ErrorWeights::ones(p.node_count()))?;
    let unit = bounds(&unit_op)?;
    let mut algorithms = Vec::new();
    for spec in &cfg.algorithms {
        let mut warnings = Vec::new();
        let (mut ss_factor, mut ss_bounds, mut prediction) = (None, None, None);
        let mut op = unit_op.clone();

        if spec.kind == AlgorithmKind::Hqc {
            match cfg.noise.as_bernoulli_gaussian() {
                Some(bg) => {
                    let tau = spec.tau.unwrap_or(f64::NAN);
                    let wf = analysis::steady_state_weight_factor(tau, &bg);
                    ss_factor = Some(wf.factor);
                    if wf.validity_warning {
                        warnings.push(format!(
                            "tau * E[w^2] = {:.4} exceeds {}; the second-order steady-state expansion is unreliable",
                            wf.expansion_load,
                            analysis::TAYLOR_VALIDITY_THRESHOLD
                        ));
                    }
                    let g = ErrorWeights(DVector::from_element(p.node_count(), wf.factor));
                    let ss_op = analysis::weighted_operator(&p.basis, &p.sampling, &g)?;
                    match bounds(&ss_op) {
                        Ok(b) => {
                            ss_bounds = Some(b);
                            op = ss_op;
                        }
                        Err(e) => warnings.push(format!("steady-state operator has no positive eigenvalue: {e}")),
                    }
                    let inputs = SteadyStateInputs { mu: spec.mu, tau, noise: bg, basis: &p.basis, sampling: &p.sampling };
                    match analysis::steady_state_msd(&inputs) {
                        Ok(pred) => prediction = Some(pred),
                        Err(e @ Error::Unstable { .. }) => warnings.push(format!("instability: {e}")),
                        Err(e) => return Err(e),
                    }
                }
                None => warnings.push("steady-state prediction needs Gaussian or Bernoulli-Gaussian noise".into()),
            }
        }

        let reference = ss_bounds.as_ref().unwrap_or(&unit);
        if spec.kind != AlgorithmKind::Nlms {
            if spec.mu >= reference.mean_step_bound {
                warnings.push(format!(
                    "instability: mu = {} is at or above the mean bound {:.6}",
                    spec.mu, reference.mean_step_bound
                ));
            } else if spec.mu >= reference.mean_square_step_bound {
                warnings.push(format!(
                    "instability: mu = {} is at or above the mean-square bound {:.6}",
                    spec.mu, reference.mean_square_step_bound
                ));
            }
        }
        let mode_factors = analysis::mode_convergence_factors(&op, spec.mu, 1.0);

        algorithms.push(AlgorithmAnalysis {
            name: spec.display_name(),
            spec: spec.clone(),
            unit_weight_bounds: unit.clone(),
            mode_factors,
            steady_state_weight_factor: ss_factor,
            steady_state_bounds: ss_bounds,
            msd_prediction: prediction,
            warnings,
        });
    }
    Ok(AnalysisReport {
        node_count: p.node_count(),
        band_size: p.basis.band_size(),
        sample_count: p.sampling.len(),
        algorithms,
    })
}
