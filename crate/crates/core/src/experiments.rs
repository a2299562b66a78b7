//! Seeded multi-trial runs, learning curves, step-size switching, parameter
//! sweeps and threshold-crossing convergence counts.
//!
//! Trial `r` (1-based) draws all of its noise from seed `r`, and every
//! algorithm in a comparison sees the same draws. Trials run on the rayon pool
//! but are aggregated in trial order, so curves are bit-identical whatever the
//! thread count or scheduling.

use std::borrow::Cow;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{run_filter, AdaptiveFilter, AlgorithmSpec, FilterState, RunSetup, StepPolicy};
use crate::analysis::{self, to_db, DB_FLOOR};
use crate::error::{Error, Result};
use crate::graph::{
    build_knn_graph, build_sampling_set, check_len, spectral_decompose, GeoPoint, SamplingSet, SamplingStrategy,
    SpectralBasis,
};
use crate::noise::{seeded_rng, NoiseModel};

/// Scale the true signal by `factor` from `iteration` onward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChangeSchedule {
    pub iteration: usize,
    pub factor: f64,
}

pub fn apply_change_schedule<'a>(
    truth: &'a DVector<f64>,
    iteration: usize,
    schedule: Option<&ChangeSchedule>,
) -> Cow<'a, DVector<f64>> {
    match schedule {
        Some(s) if iteration >= s.iteration => Cow::Owned(truth * s.factor),
        _ => Cow::Borrowed(truth),
    }
}

/// `||estimate - truth||^2`.
pub fn msd_linear(estimate: &DVector<f64>, truth: &DVector<f64>) -> f64 {
    (estimate - truth).norm_squared()
}

/// `10 log10 ||estimate - truth||^2`, floored at -300 dB.
pub fn msd_db(estimate: &DVector<f64>, truth: &DVector<f64>) -> Result<f64> {
    check_len(estimate, truth.len(), "estimate")?;
    Ok(to_db(msd_linear(estimate, truth)))
}

/// Switch to `mu(i) = multiple * mean_square_step_bound(G(e(i)))` from `start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSwitch {
    pub start: usize,
    pub multiple: f64,
}

/// Graph, band, sampling set and true signal shared by every trial.
#[derive(Debug, Clone)]
pub struct Problem {
    pub basis: SpectralBasis,
    pub sampling: SamplingSet,
    pub truth: DVector<f64>,
}

/// How a [`Problem`] is assembled from station locations and a reference signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    pub k: usize,
    pub theta_km: f64,
    pub f_count: usize,
    pub sample_count: usize,
    pub strategy: SamplingStrategy,
    pub sampling_seed: u64,
}

impl Problem {
    /// Builds the kNN graph, keeps the `f_count` frequencies carrying most of
    /// `reference`, and uses the band-limited projection of `reference` as
    /// the true signal.
    pub fn build(points: &[GeoPoint], reference: &DVector<f64>, spec: &ProblemSpec) -> Result<Self> {
        check_len(reference, points.len(), "reference signal")?;
        let graph = build_knn_graph(points, spec.k, spec.theta_km)?;
        let basis = spectral_decompose(&graph)?.select_frequency_set(reference, spec.f_count)?;
        let truth = basis.bandlimit_project(reference)?;
        let sampling = build_sampling_set(&basis, spec.sample_count, spec.strategy, spec.sampling_seed)?;
        Ok(Self { basis, sampling, truth })
    }

    pub fn node_count(&self) -> usize {
        self.basis.node_count()
    }
}

/// Points scattered uniformly over a latitude/longitude box.
pub fn synthetic_points(n: usize, lat_range: (f64, f64), lon_range: (f64, f64), seed: u64) -> Result<Vec<GeoPoint>> {
    if n == 0 {
        return Err(Error::Input("synthetic graph needs at least one node".into()));
    }
    if !(lat_range.0 < lat_range.1) || !(lon_range.0 < lon_range.1) {
        return Err(Error::Input("synthetic coordinate ranges must be increasing".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let lat = rng.random_range(lat_range.0..lat_range.1);
            let lon = rng.random_range(lon_range.0..lon_range.1);
            GeoPoint::new(lat, lon)
        })
        .collect()
}

/// Smooth temperature-like field: warmer towards the equator, with a gentle
/// east-west wave. Values are in the 10-30 range.
pub fn temperature_field(points: &[GeoPoint]) -> DVector<f64> {
    DVector::from_iterator(
        points.len(),
        points.iter().map(|p| 28.0 - 0.35 * p.lat().abs() + 2.0 * (p.lon().to_radians() * 3.0).sin()),
    )
}

/// Everything a batch of trials needs apart from the algorithm.
#[derive(Debug, Clone)]
pub struct TrialPlan<'a> {
    pub problem: &'a Problem,
    pub noise: NoiseModel,
    pub iterations: usize,
    pub trials: usize,
    pub schedule: Option<ChangeSchedule>,
    pub step_switch: Option<StepSwitch>,
    pub initial: Option<DVector<f64>>,
}

impl TrialPlan<'_> {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trial_count must be at least 1".into()));
        }
        if let Some(s) = &self.step_switch {
            if s.start >= self.iterations {
                return Err(Error::Config(format!(
                    "step_switch.start = {} is not below iterations = {}",
                    s.start, self.iterations
                )));
            }
            if !(s.multiple >= 0.0) {
                return Err(Error::Config("step_switch.multiple must be non-negative".into()));
            }
        }
        if let Some(s) = &self.schedule {
            if !s.factor.is_finite() {
                return Err(Error::Config("change_schedule.factor must be finite".into()));
            }
        }
        if let Some(x0) = &self.initial {
            check_len(x0, self.problem.node_count(), "initial estimate")?;
        }
        self.noise.validate()
    }

    fn policy(&self) -> StepPolicy {
        match self.step_switch {
            Some(s) => StepPolicy::BoundMultiple { start: s.start, multiple: s.multiple },
            None => StepPolicy::Fixed,
        }
    }
}

/// Per-iteration linear MSD of trial `trial` (seed = `trial`).
pub fn run_trial(plan: &TrialPlan<'_>, spec: &AlgorithmSpec, trial: u64) -> Result<Vec<f64>> {
    let filter = AdaptiveFilter::new(&plan.problem.basis, &plan.problem.sampling, spec.clone())?;
    let setup = RunSetup {
        truth: &plan.problem.truth,
        noise: &plan.noise,
        iterations: plan.iterations,
        seed: trial,
        schedule: plan.schedule,
        policy: plan.policy(),
        initial: plan.initial.as_ref(),
    };
    Ok(run_filter(&filter, &setup)?.msd)
}

/// Mean and spread of the MSD across trials, one entry per iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub msd_mean_linear: Vec<f64>,
    pub msd_std_linear: Vec<f64>,
    pub msd_mean_db: Vec<f64>,
    pub band_lower_db: Vec<f64>,
    pub band_upper_db: Vec<f64>,
    pub trials: usize,
}

impl LearningCurve {
    /// Aggregates per-trial linear MSD series. The sample standard deviation
    /// uses the `n - 1` divisor (zero for a single trial); dB values and bands
    /// are taken after averaging in the linear domain.
    pub fn from_trials(runs: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = runs.first() else {
            return Err(Error::Input("no trials to aggregate".into()));
        };
        let len = first.len();
        if runs.iter().any(|r| r.len() != len) {
            return Err(Error::Input("trials have different lengths".into()));
        }
        let n = runs.len() as f64;
        let mut curve = Self {
            msd_mean_linear: Vec::with_capacity(len),
            msd_std_linear: Vec::with_capacity(len),
            msd_mean_db: Vec::with_capacity(len),
            band_lower_db: Vec::with_capacity(len),
            band_upper_db: Vec::with_capacity(len),
            trials: runs.len(),
        };
        for i in 0..len {
            let mean = runs.iter().map(|r| r[i]).sum::<f64>() / n;
            let std = if runs.len() > 1 {
                (runs.iter().map(|r| (r[i] - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            curve.msd_mean_linear.push(mean);
            curve.msd_std_linear.push(std);
            curve.msd_mean_db.push(to_db(mean));
            curve.band_upper_db.push(to_db(mean + std));
            curve.band_lower_db.push(if mean - std > 0.0 { to_db(mean - std) } else { DB_FLOOR });
        }
        Ok(curve)
    }

    pub fn len(&self) -> usize {
        self.msd_mean_linear.len()
    }

    pub fn is_empty(&self) -> bool {
        self.msd_mean_linear.is_empty()
    }

    /// Mean of the linear MSD over `start..end`.
    pub fn window_mean_linear(&self, start: usize, end: usize) -> f64 {
        let w = &self.msd_mean_linear[start.min(self.len())..end.min(self.len())];
        if w.is_empty() {
            return f64::NAN;
        }
        w.iter().sum::<f64>() / w.len() as f64
    }

    /// Mean linear MSD over the final 10% of iterations (at least one).
    pub fn steady_state_linear(&self) -> f64 {
        let n = self.len();
        self.window_mean_linear(n - steady_window(n), n)
    }

    pub fn steady_state_db(&self) -> f64 {
        to_db(self.steady_state_linear())
    }

    /// Mean linear MSD over the final quarter of iterations.
    pub fn last_quarter_linear(&self) -> f64 {
        let n = self.len();
        self.window_mean_linear(n - (n / 4).max(1), n)
    }

    pub fn last_quarter_db(&self) -> f64 {
        to_db(self.last_quarter_linear())
    }
}

fn steady_window(n: usize) -> usize {
    n.div_ceil(10).max(1).min(n)
}

/// Runs `plan.trials` seeded trials of one algorithm and aggregates them.
pub fn run_algorithm(plan: &TrialPlan<'_>, spec: &AlgorithmSpec) -> Result<LearningCurve> {
    plan.validate()?;
    spec.validate()?;
    let runs = (1..=plan.trials as u64)
        .into_par_iter()
        .map(|r| run_trial(plan, spec, r))
        .collect::<Result<Vec<_>>>()?;
    LearningCurve::from_trials(&runs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmCurve {
    pub spec: AlgorithmSpec,
    pub curve: LearningCurve,
}

/// Learning curve for each algorithm, in input order, on paired noise.
pub fn run_trials(plan: &TrialPlan<'_>, specs: &[AlgorithmSpec]) -> Result<Vec<AlgorithmCurve>> {
    if specs.is_empty() {
        return Err(Error::Config("algorithm list is empty".into()));
    }
    specs
        .iter()
        .map(|spec| Ok(AlgorithmCurve { spec: spec.clone(), curve: run_algorithm(plan, spec)? }))
        .collect()
}

/// Runs the configured step until `switch.start`, then ties the step to a
/// multiple of the instantaneous mean-square bound.
pub fn step_switch_run(plan: &TrialPlan<'_>, spec: &AlgorithmSpec, switch: StepSwitch) -> Result<LearningCurve> {
    let plan = TrialPlan { step_switch: Some(switch), ..plan.clone() };
    run_algorithm(&plan, spec)
}

/// How a convergence threshold is derived from the steady-state level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceRule {
    /// `10 log10(factor * steady_linear)`.
    #[default]
    LinearFactor,
    /// `factor * steady_db`. For negative dB levels this threshold lies below
    /// the steady state and is never reached.
    DbFactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCrossing {
    pub threshold_db: f64,
    pub first_iteration: Option<usize>,
    /// `None` when the threshold was given explicitly.
    pub rule: Option<ReferenceRule>,
}

/// First iteration whose mean MSD is strictly below `threshold_db`.
pub fn first_crossing(curve: &LearningCurve, threshold_db: f64) -> ThresholdCrossing {
    ThresholdCrossing {
        threshold_db,
        first_iteration: curve.msd_mean_db.iter().position(|&v| v < threshold_db),
        rule: None,
    }
}

pub fn steady_state_threshold(curve: &LearningCurve, factor: f64, rule: ReferenceRule) -> f64 {
    match rule {
        ReferenceRule::LinearFactor => to_db(factor * curve.steady_state_linear()),
        ReferenceRule::DbFactor => factor * curve.steady_state_db(),
    }
}

/// [`first_crossing`] against a threshold derived from the curve's own
/// steady state.
pub fn crossing_from_steady_state(curve: &LearningCurve, factor: f64, rule: ReferenceRule) -> ThresholdCrossing {
    let threshold = steady_state_threshold(curve, factor, rule);
    ThresholdCrossing { rule: Some(rule), ..first_crossing(curve, threshold) }
}

/// Grid of step sizes and HQC scale parameters. An empty list keeps the
/// base algorithm's value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(default)]
    pub tau: Vec<f64>,
    #[serde(default)]
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub tau: Option<f64>,
    pub mu: f64,
    pub unstable: bool,
    pub steady_state_linear: Option<f64>,
    pub steady_state_db: Option<f64>,
    pub crossing_iteration: Option<usize>,
}

/// One [`run_algorithm`] per grid point, in row-major (tau, then mu) order.
///
/// A point is flagged unstable when `mu` is at or above the mean bound
/// `2 / lambda_max(U_F^T D_s U_F)`, when the curve is not finite, or when the
/// steady state exceeds the first-iteration MSD.
pub fn parameter_sweep(plan: &TrialPlan<'_>, base: &AlgorithmSpec, grid: &SweepGrid) -> Result<Vec<SweepPoint>> {
    let taus: Vec<Option<f64>> = if grid.tau.is_empty() { vec![base.tau] } else { grid.tau.iter().map(|&t| Some(t)).collect() };
    let mus: Vec<f64> = if grid.mu.is_empty() { vec![base.mu] } else { grid.mu.clone() };
    let unit = crate::algorithms::ErrorWeights::ones(plan.problem.node_count());
    let op = analysis::weighted_operator(&plan.problem.basis, &plan.problem.sampling, &unit)?;
    let bound = analysis::mean_step_bound(&op)?;

    let mut out = Vec::with_capacity(taus.len() * mus.len());
    for &tau in &taus {
        for &mu in &mus {
            let mut spec = base.with_mu(mu);
            spec.tau = tau.or(spec.tau);
            let curve = run_algorithm(plan, &spec)?;
            let ss = curve.steady_state_linear();
            let unstable = mu >= bound
                || !curve.msd_mean_linear.iter().all(|v| v.is_finite())
                || ss > curve.msd_mean_linear[0];
            let crossing = crossing_from_steady_state(&curve, 1.03, ReferenceRule::LinearFactor);
            out.push(SweepPoint {
                tau: spec.tau,
                mu,
                unstable,
                steady_state_linear: (!unstable).then_some(ss),
                steady_state_db: (!unstable).then(|| to_db(ss)),
                crossing_iteration: if unstable { None } else { crossing.first_iteration },
            });
        }
    }
    Ok(out)
}

/// Tracks a time-varying signal with one update per time step and returns
/// the estimate after each step. `seed` drives the observation noise.
pub fn track_series(
    basis: &SpectralBasis,
    sampling: &SamplingSet,
    spec: &AlgorithmSpec,
    series: &[DVector<f64>],
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<DVector<f64>>> {
    let filter = AdaptiveFilter::new(basis, sampling, spec.clone())?;
    noise.validate()?;
    let n = basis.node_count();
    let mut rng = seeded_rng(seed);
    let mut state = FilterState::zeros(n);
    series
        .iter()
        .map(|x| {
            check_len(x, n, "snapshot")?;
            let observed = x + noise.sample(n, &mut rng)?;
            state = filter.step(&state, &observed)?;
            Ok(state.estimate.clone())
        })
        .collect()
}
