//! Error-weighting kernels and the online graph-signal update.
//!
//! Every algorithm shares one update shape,
//!
//! ```text
//! e(i)     = D_s (x_w(i) - x_hat(i))
//! x_hat(i+1) = x_hat(i) + mu * U_F U_F^T diag(w(e)) e(i)
//! ```
//!
//! and differs only in the per-node weight `w(e)`. NLMS instead replaces
//! `U_F U_F^T` with `U_F (U_F^T D_s U_F)^{-1} U_F^T` and uses unit weights.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::error::{Error, Result};
use crate::experiments::{apply_change_schedule, msd_linear, ChangeSchedule};
use crate::graph::{check_len, SamplingSet, SpectralBasis, RANK_TOLERANCE};
use crate::noise::{seeded_rng, NoiseModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    Lms,
    Nlms,
    Mcc,
    Gmcc,
    Log,
    Hqc,
}

impl AlgorithmKind {
    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Lms => "GSP LMS",
            AlgorithmKind::Nlms => "GSP NLMS",
            AlgorithmKind::Mcc => "GSP MCC",
            AlgorithmKind::Gmcc => "GSP GMCC",
            AlgorithmKind::Log => "GSP LOG",
            AlgorithmKind::Hqc => "GSP HQC",
        }
    }
}

/// Which algorithm to run and its parameters.
///
/// `tau` is used by HQC, `alpha_shape` by GMCC and LOG, `lambda_kernel` by
/// MCC and GMCC. Parameters a kind does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub kind: AlgorithmKind,
    pub mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_shape: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_kernel: Option<f64>,
    /// Output label; defaults to a name built from the kind and parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl AlgorithmSpec {
    fn bare(kind: AlgorithmKind, mu: f64) -> Self {
        Self { kind, mu, tau: None, alpha_shape: None, lambda_kernel: None, label: None }
    }

    pub fn lms(mu: f64) -> Self {
        Self::bare(AlgorithmKind::Lms, mu)
    }

    pub fn nlms(mu: f64) -> Self {
        Self::bare(AlgorithmKind::Nlms, mu)
    }

    pub fn mcc(mu: f64, lambda_kernel: f64) -> Self {
        Self { lambda_kernel: Some(lambda_kernel), ..Self::bare(AlgorithmKind::Mcc, mu) }
    }

    pub fn gmcc(mu: f64, alpha_shape: f64, lambda_kernel: f64) -> Self {
        Self {
            alpha_shape: Some(alpha_shape),
            lambda_kernel: Some(lambda_kernel),
            ..Self::bare(AlgorithmKind::Gmcc, mu)
        }
    }

    pub fn log(mu: f64, alpha_shape: f64) -> Self {
        Self { alpha_shape: Some(alpha_shape), ..Self::bare(AlgorithmKind::Log, mu) }
    }

    pub fn hqc(mu: f64, tau: f64) -> Self {
        Self { tau: Some(tau), ..Self::bare(AlgorithmKind::Hqc, mu) }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..self.clone() }
    }

    pub fn display_name(&self) -> String {
        if let Some(label) = &self.label {
            return label.clone();
        }
        let mut s = format!("{} mu={}", self.kind.name(), self.mu);
        match self.kind {
            AlgorithmKind::Hqc => s += &format!(" tau={}", self.tau.unwrap_or(f64::NAN)),
            AlgorithmKind::Log => s += &format!(" alpha={}", self.alpha_shape.unwrap_or(f64::NAN)),
            AlgorithmKind::Mcc => s += &format!(" lambda={}", self.lambda_kernel.unwrap_or(f64::NAN)),
            AlgorithmKind::Gmcc => {
                s += &format!(
                    " alpha={} lambda={}",
                    self.alpha_shape.unwrap_or(f64::NAN),
                    self.lambda_kernel.unwrap_or(f64::NAN)
                )
            }
            AlgorithmKind::Lms | AlgorithmKind::Nlms => {}
        }
        s
    }

    /// File-name friendly version of [`Self::display_name`].
    pub fn slug(&self) -> String {
        let mut out = String::new();
        for c in self.display_name().chars() {
            match c {
                'a'..='z' | 'A'..='Z' | '0'..='9' | '.' | '-' => out.push(c.to_ascii_lowercase()),
                _ if !out.ends_with('_') => out.push('_'),
                _ => {}
            }
        }
        out.trim_matches('_').to_string()
    }

    /// Checks that `mu` is positive and that the parameters the kind needs are
    /// present and positive.
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::Config(format!("{}: step size mu = {} must be positive", self.kind.name(), self.mu)));
        }
        self.validate_shape()
    }

    fn validate_shape(&self) -> Result<()> {
        let need = |name: &str, v: Option<f64>| -> Result<f64> {
            match v {
                Some(x) if x > 0.0 && x.is_finite() => Ok(x),
                Some(x) => Err(Error::Config(format!("{}: {name} = {x} must be positive", self.kind.name()))),
                None => Err(Error::Config(format!("{}: missing parameter {name}", self.kind.name()))),
            }
        };
        match self.kind {
            AlgorithmKind::Lms | AlgorithmKind::Nlms => {}
            AlgorithmKind::Hqc => {
                need("tau", self.tau)?;
            }
            AlgorithmKind::Log => {
                need("alpha_shape", self.alpha_shape)?;
            }
            AlgorithmKind::Mcc => {
                need("lambda_kernel", self.lambda_kernel)?;
            }
            AlgorithmKind::Gmcc => {
                need("alpha_shape", self.alpha_shape)?;
                need("lambda_kernel", self.lambda_kernel)?;
            }
        }
        Ok(())
    }
}

/// Diagonal of the error-weighting matrix (`G(e)` for HQC, `F(e)` for LOG).
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorWeights(pub DVector<f64>);

impl ErrorWeights {
    pub fn ones(n: usize) -> Self {
        Self(DVector::from_element(n, 1.0))
    }

    pub fn diagonal(&self) -> &DVector<f64> {
        &self.0
    }
}

/// `sum_k (sqrt(1 + tau e_k^2) - 1) / tau`, evaluated as
/// `e_k^2 / (sqrt(1 + tau e_k^2) + 1)` to avoid cancellation for small `tau`.
pub fn hqc_cost(e: &[f64], tau: f64) -> Result<f64> {
    check_positive("tau", tau)?;
    Ok(e.iter().map(|&x| x * x / ((1.0 + tau * x * x).sqrt() + 1.0)).sum())
}

/// HQC weight `1/sqrt(1 + tau e^2)`.
pub fn hqc_weight(e: f64, tau: f64) -> f64 {
    1.0 / (1.0 + tau * e * e).sqrt()
}

/// LOG weight `1/(1 + alpha e^2)`.
pub fn log_weight(e: f64, alpha: f64) -> f64 {
    1.0 / (1.0 + alpha * e * e)
}

/// Correntropy weight `exp(-lambda e^2)`.
pub fn mcc_weight(e: f64, lambda: f64) -> f64 {
    (-lambda * e * e).exp()
}

/// Generalized-correntropy weight `exp(-lambda |e|^alpha) |e|^(alpha - 2)`.
///
/// At `e = 0` the weight is 1 for `alpha = 2` and 0 otherwise; for
/// `alpha < 2` the true limit is unbounded and is replaced by 0.
pub fn gmcc_weight(e: f64, alpha: f64, lambda: f64) -> f64 {
    let a = e.abs();
    if a == 0.0 {
        return if alpha == 2.0 { 1.0 } else { 0.0 };
    }
    (-lambda * a.powf(alpha)).exp() * a.powf(alpha - 2.0)
}

/// Per-node weights for the algorithm described by `spec`.
pub fn error_weights(e: &DVector<f64>, spec: &AlgorithmSpec) -> Result<ErrorWeights> {
    spec.validate_shape()?;
    let w = match spec.kind {
        AlgorithmKind::Lms | AlgorithmKind::Nlms => DVector::from_element(e.len(), 1.0),
        AlgorithmKind::Hqc => {
            let tau = spec.tau.expect("validated");
            e.map(|x| hqc_weight(x, tau))
        }
        AlgorithmKind::Log => {
            let alpha = spec.alpha_shape.expect("validated");
            e.map(|x| log_weight(x, alpha))
        }
        AlgorithmKind::Mcc => {
            let lambda = spec.lambda_kernel.expect("validated");
            e.map(|x| mcc_weight(x, lambda))
        }
        AlgorithmKind::Gmcc => {
            let alpha = spec.alpha_shape.expect("validated");
            let lambda = spec.lambda_kernel.expect("validated");
            e.map(|x| gmcc_weight(x, alpha, lambda))
        }
    };
    Ok(ErrorWeights(w))
}

/// Second derivative of the scalar HQC cost: `(1 + tau e^2)^(-3/2)`.
pub fn hqc_hessian_coeff(e: f64, tau: f64) -> f64 {
    (1.0 + tau * e * e).powf(-1.5)
}

/// LOG Hessian coefficient `2 tau (1 - tau e^2) / (1 + tau e^2)^2`; negative
/// once `|e| > sqrt(1/tau)`.
pub fn log_hessian_coeff(e: f64, tau: f64) -> f64 {
    let q = tau * e * e;
    2.0 * tau * (1.0 - q) / ((1.0 + q) * (1.0 + q))
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("{name} = {v} must be positive")))
    }
}

/// Current estimate `x_hat(i)` and the number of updates applied so far.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub estimate: DVector<f64>,
    pub iteration: usize,
}

impl FilterState {
    pub fn zeros(n: usize) -> Self {
        Self { estimate: DVector::zeros(n), iteration: 0 }
    }

    /// Starts from the band projection of `initial`, so the estimate lies in
    /// `span(U_F)` from the outset.
    pub fn projected(basis: &SpectralBasis, initial: &DVector<f64>) -> Result<Self> {
        Ok(Self { estimate: basis.bandlimit_project(initial)?, iteration: 0 })
    }
}

/// An algorithm bound to a basis and sampling set, with the update operator
/// precomputed.
#[derive(Debug, Clone)]
pub struct AdaptiveFilter<'a> {
    basis: &'a SpectralBasis,
    sampling: &'a SamplingSet,
    spec: AlgorithmSpec,
    mask: DVector<f64>,
    // U_F U_F^T, or U_F (U_F^T D_s U_F)^{-1} U_F^T for NLMS
    gain: DMatrix<f64>,
}

impl<'a> AdaptiveFilter<'a> {
    pub fn new(basis: &'a SpectralBasis, sampling: &'a SamplingSet, spec: AlgorithmSpec) -> Result<Self> {
        spec.validate_shape()?;
        if sampling.node_count() != basis.node_count() {
            return Err(Error::Input(format!(
                "sampling set is over {} nodes but the basis has {}",
                sampling.node_count(),
                basis.node_count()
            )));
        }
        let gain = match spec.kind {
            AlgorithmKind::Nlms => nlms_gain(basis, sampling)?,
            _ => basis.band_projector(),
        };
        Ok(Self { basis, sampling, spec, mask: sampling.mask(), gain })
    }

    pub fn spec(&self) -> &AlgorithmSpec {
        &self.spec
    }

    pub fn basis(&self) -> &SpectralBasis {
        self.basis
    }

    pub fn sampling(&self) -> &SamplingSet {
        self.sampling
    }

    /// Sampled error `D_s (observed - x_hat)`.
    pub fn error(&self, state: &FilterState, observed: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(observed, self.basis.node_count(), "observation")?;
        Ok((observed - &state.estimate).component_mul(&self.mask))
    }

    pub fn weights(&self, error: &DVector<f64>) -> Result<ErrorWeights> {
        error_weights(error, &self.spec)
    }

    /// One update with the configured step size.
    pub fn step(&self, state: &FilterState, observed: &DVector<f64>) -> Result<FilterState> {
        self.step_with_mu(state, observed, self.spec.mu)
    }

    /// One update with an explicit step size.
    pub fn step_with_mu(&self, state: &FilterState, observed: &DVector<f64>, mu: f64) -> Result<FilterState> {
        let e = self.error(state, observed)?;
        let w = self.weights(&e)?;
        Ok(self.apply(state, &e, &w, mu))
    }

    /// Applies `x_hat + mu * gain * (w .* e)` for a precomputed error and weights.
    pub fn apply(&self, state: &FilterState, error: &DVector<f64>, weights: &ErrorWeights, mu: f64) -> FilterState {
        let weighted = error.component_mul(&weights.0);
        FilterState { estimate: &state.estimate + mu * (&self.gain * weighted), iteration: state.iteration + 1 }
    }
}

/// `U_F (U_F^T D_s U_F)^{-1} U_F^T`, inverted through an SVD with the crate's
/// rank tolerance.
fn nlms_gain(basis: &SpectralBasis, sampling: &SamplingSet) -> Result<DMatrix<f64>> {
    let uf = basis.uf();
    let normal = uf.transpose() * DMatrix::from_diagonal(&sampling.mask()) * uf;
    let svd = normal.svd(true, true);
    let max = svd.singular_values.max();
    if !(max > 0.0) || svd.singular_values.min() <= RANK_TOLERANCE * max {
        return Err(Error::Numeric(
            "U_F^T D_s U_F is singular; the sampling set does not recover the band".into(),
        ));
    }
    let inverse = svd
        .pseudo_inverse(RANK_TOLERANCE * max)
        .map_err(|e| Error::Numeric(format!("NLMS normalisation inverse failed: {e}")))?;
    Ok(uf * inverse * uf.transpose())
}

/// Single update from scratch; builds the filter on every call. Prefer
/// [`AdaptiveFilter`] inside loops.
pub fn filter_step(
    state: &FilterState,
    observed: &DVector<f64>,
    sampling: &SamplingSet,
    basis: &SpectralBasis,
    spec: &AlgorithmSpec,
) -> Result<FilterState> {
    AdaptiveFilter::new(basis, sampling, spec.clone())?.step(state, observed)
}

/// How the step size evolves during a run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum StepPolicy {
    /// Use the configured `mu` throughout.
    #[default]
    Fixed,
    /// From `start` onward, `mu(i) = multiple / lambda_max(U_F^T G(e(i)) D_s U_F)`
    /// using the weights of the current error.
    BoundMultiple { start: usize, multiple: f64 },
}

/// Per-iteration record of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRun {
    /// `||x_hat(i+1) - x_o(i)||^2` after each update.
    pub msd: Vec<f64>,
    /// Step size used at each update.
    pub step_sizes: Vec<f64>,
    pub final_state: FilterState,
}

/// Inputs shared by every run on one problem instance.
#[derive(Debug, Clone, Copy)]
pub struct RunSetup<'a> {
    pub truth: &'a DVector<f64>,
    pub noise: &'a NoiseModel,
    pub iterations: usize,
    pub seed: u64,
    pub schedule: Option<ChangeSchedule>,
    pub policy: StepPolicy,
    pub initial: Option<&'a DVector<f64>>,
}

/// Runs one seeded trial: at each iteration draw `w(i)`, observe
/// `x_o(i) + w(i)`, update, and record the MSD against `x_o(i)`.
pub fn run_filter(filter: &AdaptiveFilter<'_>, setup: &RunSetup<'_>) -> Result<FilterRun> {
    let n = filter.basis().node_count();
    check_len(setup.truth, n, "true signal")?;
    if setup.iterations == 0 {
        return Err(Error::Input("iterations must be at least 1".into()));
    }
    setup.noise.validate()?;

    let mut rng = seeded_rng(setup.seed);
    let mut state = match setup.initial {
        Some(x0) => FilterState::projected(filter.basis(), x0)?,
        None => FilterState::zeros(n),
    };
    let mut msd = Vec::with_capacity(setup.iterations);
    let mut step_sizes = Vec::with_capacity(setup.iterations);

    for i in 0..setup.iterations {
        let truth = apply_change_schedule(setup.truth, i, setup.schedule.as_ref());
        let observed = &*truth + setup.noise.sample(n, &mut rng)?;
        let e = filter.error(&state, &observed)?;
        let w = filter.weights(&e)?;
        let mu = match setup.policy {
            StepPolicy::BoundMultiple { start, multiple } if i >= start => {
                let op = analysis::weighted_operator(filter.basis(), filter.sampling(), &w)?;
                multiple * analysis::mean_square_step_bound(&op)?
            }
            _ => filter.spec().mu,
        };
        state = filter.apply(&state, &e, &w, mu);
        msd.push(msd_linear(&state.estimate, &truth));
        step_sizes.push(mu);
    }
    Ok(FilterRun { msd, step_sizes, final_state: state })
}
