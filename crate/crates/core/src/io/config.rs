//! JSON experiment configuration.
//!
//! Every numeric parameter that changes results (`mu`, `tau`, `theta_km`,
//! `f_count`, ...) must be written out; only the optional blocks have
//! defaults. Relative dataset paths are resolved against the config file's
//! directory.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::algorithms::AlgorithmSpec;
use crate::error::{Error, Result};
use crate::experiments::{
    synthetic_points, temperature_field, ChangeSchedule, Problem, ProblemSpec, StepSwitch, SweepGrid, TrialPlan,
};
use crate::graph::SamplingStrategy;
use crate::io::dataset::{load_station_csv, StationDataset};
use crate::noise::NoiseModel;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSource {
    /// Uniform random stations in a latitude/longitude box with a smooth
    /// temperature-like reference field.
    Synthetic { nodes: usize, seed: u64, lat_range: [f64; 2], lon_range: [f64; 2] },
    /// Station CSV. The reference signal is the snapshot at `time_index`, or
    /// the per-station temporal mean when omitted.
    Dataset {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        time_index: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub strategy: SamplingStrategy,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub graph: GraphSource,
    pub k: usize,
    pub theta_km: f64,
    pub f_count: usize,
    pub sample_count: usize,
    pub sampling: SamplingConfig,
    pub algorithms: Vec<AlgorithmSpec>,
    pub noise: NoiseModel,
    pub iterations: usize,
    pub trial_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub change_schedule: Option<ChangeSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_switch: Option<StepSwitch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_estimate: Option<Vec<f64>>,
    pub output: OutputConfig,
}

/// Problem instance built from a config, with the dataset when one was used.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub problem: Problem,
    pub dataset: Option<StationDataset>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path.as_ref())?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Structural checks that need no file access.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if let GraphSource::Synthetic { nodes, lat_range, lon_range, .. } = &self.graph {
            if *nodes < 2 {
                return bad("synthetic graph needs at least 2 nodes".into());
            }
            if !(lat_range[0] < lat_range[1] && lat_range[0] >= -90.0 && lat_range[1] <= 90.0) {
                return bad(format!("lat_range {lat_range:?} must be increasing within [-90, 90]"));
            }
            if !(lon_range[0] < lon_range[1] && lon_range[0] >= -180.0 && lon_range[1] <= 180.0) {
                return bad(format!("lon_range {lon_range:?} must be increasing within [-180, 180]"));
            }
            if self.sample_count > *nodes {
                return bad(format!("sample_count {} exceeds node count {nodes}", self.sample_count));
            }
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(self.theta_km > 0.0 && self.theta_km.is_finite()) {
            return bad(format!("theta_km = {} must be positive", self.theta_km));
        }
        if self.f_count == 0 {
            return bad("f_count must be at least 1".into());
        }
        if self.sample_count < self.f_count {
            return bad(format!(
                "sample_count {} is below f_count {}; no sampling set can be recoverable",
                self.sample_count, self.f_count
            ));
        }
        if self.algorithms.is_empty() {
            return bad("algorithms list is empty".into());
        }
        let mut slugs = HashSet::new();
        for a in &self.algorithms {
            a.validate()?;
            if !slugs.insert(a.slug()) {
                return bad(format!("two algorithms share the output name {:?}; set distinct labels", a.slug()));
            }
        }
        self.noise.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if self.trial_count == 0 {
            return bad("trial_count must be at least 1".into());
        }
        if let Some(s) = &self.change_schedule {
            if s.iteration >= self.iterations || !s.factor.is_finite() {
                return bad(format!("change_schedule {s:?} must lie within the run and have a finite factor"));
            }
        }
        if let Some(s) = &self.step_switch {
            if s.start >= self.iterations || !(s.multiple >= 0.0 && s.multiple.is_finite()) {
                return bad(format!("step_switch {s:?} needs start < iterations and a finite multiple >= 0"));
            }
        }
        if let Some(g) = &self.sweep {
            if g.tau.is_empty() && g.mu.is_empty() {
                return bad("sweep grid has no tau or mu values".into());
            }
            if g.tau.iter().chain(&g.mu).any(|v| !(*v > 0.0 && v.is_finite())) {
                return bad("sweep grid values must be positive".into());
            }
        }
        if let (Some(x0), GraphSource::Synthetic { nodes, .. }) = (&self.initial_estimate, &self.graph) {
            if x0.len() != *nodes {
                return bad(format!("initial_estimate has {} entries for {nodes} nodes", x0.len()));
            }
        }
        Ok(())
    }

    pub fn problem_spec(&self) -> ProblemSpec {
        ProblemSpec {
            k: self.k,
            theta_km: self.theta_km,
            f_count: self.f_count,
            sample_count: self.sample_count,
            strategy: self.sampling.strategy,
            sampling_seed: self.sampling.seed,
        }
    }

    /// Builds the graph, band, sampling set and true signal. `base_dir` is
    /// the directory relative dataset paths are taken from.
    pub fn prepare(&self, base_dir: &Path) -> Result<Prepared> {
        let spec = self.problem_spec();
        match &self.graph {
            GraphSource::Synthetic { nodes, seed, lat_range, lon_range } => {
                let pts = synthetic_points(*nodes, (lat_range[0], lat_range[1]), (lon_range[0], lon_range[1]), *seed)?;
                let reference = temperature_field(&pts);
                Ok(Prepared { problem: Problem::build(&pts, &reference, &spec)?, dataset: None })
            }
            GraphSource::Dataset { path, time_index } => {
                let path = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
                let data = load_station_csv(&path)?;
                let reference = match time_index {
                    Some(t) => data.snapshot(*t)?,
                    None => data.temporal_mean(),
                };
                if self.sample_count > data.node_count() {
                    return Err(Error::Config(format!(
                        "sample_count {} exceeds the {} usable stations",
                        self.sample_count,
                        data.node_count()
                    )));
                }
                if let Some(x0) = &self.initial_estimate {
                    if x0.len() != data.node_count() {
                        return Err(Error::Config(format!(
                            "initial_estimate has {} entries for {} stations",
                            x0.len(),
                            data.node_count()
                        )));
                    }
                }
                let problem = Problem::build(&data.points(), &reference, &spec)?;
                Ok(Prepared { problem, dataset: Some(data) })
            }
        }
    }

    pub fn plan<'a>(&self, problem: &'a Problem) -> TrialPlan<'a> {
        TrialPlan {
            problem,
            noise: self.noise,
            iterations: self.iterations,
            trials: self.trial_count,
            schedule: self.change_schedule,
            step_switch: self.step_switch,
            initial: self.initial_estimate.as_ref().map(|v| DVector::from_vec(v.clone())),
        }
    }
}
