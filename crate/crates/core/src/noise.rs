//! Seeded noise generators and the absolute moments used by the
//! steady-state theory.
//!
//! All samplers draw from an explicit [`Rng`]; the experiment harness hands
//! each trial its own [`ChaCha8Rng`] seeded with the trial number, so a
//! `(model, length, seed)` triple always yields the same bits.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The generator used for every seeded stream in the crate.
pub type NoiseRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> NoiseRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Background Gaussian plus a Bernoulli-gated high-variance Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernoulliGaussianParams {
    /// Probability that an impulse is present at a node.
    pub pr: f64,
    /// Background variance.
    pub var_eta: f64,
    /// Impulse variance; normally much larger than `var_eta`.
    pub var_gamma: f64,
}

impl BernoulliGaussianParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.pr) {
            return Err(Error::Input(format!("impulse probability {} outside [0, 1]", self.pr)));
        }
        if !(self.var_eta >= 0.0) || !(self.var_gamma >= 0.0) {
            return Err(Error::Input("noise variances must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Stable law with characteristic function
/// `exp{ j*delta*k - gamma*|k|^alpha * [1 + j*beta*sgn(k)*S(k, alpha)] }`,
/// where `S = tan(alpha*pi/2)` for `alpha != 1` and `(2/pi) log|k|` otherwise.
///
/// `gamma_scale` is the dispersion: the usual scale is `gamma^(1/alpha)`, so
/// `alpha = 2` gives a Gaussian of variance `2*gamma` and `alpha = 1, beta = 0`
/// a Cauchy law with half-width `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaStableParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma_scale: f64,
    pub delta: f64,
}

impl AlphaStableParams {
    pub fn cauchy(gamma_scale: f64) -> Self {
        Self { alpha: 1.0, beta: 0.0, gamma_scale, delta: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::Input(format!("alpha = {} outside (0, 2]", self.alpha)));
        }
        if !(-1.0..=1.0).contains(&self.beta) {
            return Err(Error::Input(format!("beta = {} outside [-1, 1]", self.beta)));
        }
        if !(self.gamma_scale > 0.0) || !self.gamma_scale.is_finite() {
            return Err(Error::Input(format!("gamma = {} must be positive", self.gamma_scale)));
        }
        if !self.delta.is_finite() {
            return Err(Error::Input("delta must be finite".into()));
        }
        Ok(())
    }
}

/// Laplace law with density `exp(-|x - mu_loc| / b) / (2b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceParams {
    pub mu_loc: f64,
    pub b: f64,
}

impl LaplaceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0) || !self.b.is_finite() {
            return Err(Error::Input(format!("Laplace scale b = {} must be positive", self.b)));
        }
        Ok(())
    }
}

/// Additive observation noise `w(i)`, drawn independently per node and per
/// iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NoiseModel {
    BernoulliGaussian(BernoulliGaussianParams),
    AlphaStable(AlphaStableParams),
    Laplace(LaplaceParams),
    Gaussian { var: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseModel::BernoulliGaussian(p) => p.validate(),
            NoiseModel::AlphaStable(p) => p.validate(),
            NoiseModel::Laplace(p) => p.validate(),
            NoiseModel::Gaussian { var } if *var >= 0.0 => Ok(()),
            NoiseModel::Gaussian { var } => Err(Error::Input(format!("Gaussian variance {var} is negative"))),
        }
    }

    /// Draws a length-`n` noise vector.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<DVector<f64>> {
        match self {
            NoiseModel::BernoulliGaussian(p) => sample_bernoulli_gaussian(p, n, rng),
            NoiseModel::AlphaStable(p) => sample_alpha_stable(p, n, rng),
            NoiseModel::Laplace(p) => sample_laplace(p, n, rng),
            NoiseModel::Gaussian { var } => {
                self.validate()?;
                let sd = var.sqrt();
                Ok(DVector::from_fn(n, |_, _| sd * rng.sample::<f64, _>(StandardNormal)))
            }
        }
    }

    /// Bernoulli-Gaussian view of the model for the steady-state theory:
    /// a pure Gaussian is the `pr = 0` case. Other families have no such form.
    pub fn as_bernoulli_gaussian(&self) -> Option<BernoulliGaussianParams> {
        match *self {
            NoiseModel::BernoulliGaussian(p) => Some(p),
            NoiseModel::Gaussian { var } => Some(BernoulliGaussianParams { pr: 0.0, var_eta: var, var_gamma: 0.0 }),
            _ => None,
        }
    }
}

/// `eta + b * gamma` per component with `b ~ Bernoulli(pr)`.
///
/// Each component consumes one background normal, one uniform and one
/// impulse normal, whether or not the impulse fires.
pub fn sample_bernoulli_gaussian<R: Rng + ?Sized>(
    p: &BernoulliGaussianParams,
    n: usize,
    rng: &mut R,
) -> Result<DVector<f64>> {
    p.validate()?;
    let (sd_eta, sd_gamma) = (p.var_eta.sqrt(), p.var_gamma.sqrt());
    Ok(DVector::from_fn(n, |_, _| {
        let eta = sd_eta * rng.sample::<f64, _>(StandardNormal);
        let fire = rng.random::<f64>() < p.pr;
        let gamma = sd_gamma * rng.sample::<f64, _>(StandardNormal);
        if fire {
            eta + gamma
        } else {
            eta
        }
    }))
}

/// Chambers-Mallows-Stuck sampler for [`AlphaStableParams`].
pub fn sample_alpha_stable<R: Rng + ?Sized>(p: &AlphaStableParams, n: usize, rng: &mut R) -> Result<DVector<f64>> {
    p.validate()?;
    let alpha = p.alpha;
    let scale = p.gamma_scale.powf(1.0 / alpha);
    Ok(DVector::from_fn(n, |_, _| {
        let u: f64 = rng.sample(Open01);
        let v = PI * (u - 0.5);
        let w: f64 = rng.sample(Exp1);
        let x = if alpha == 1.0 {
            let beta = p.beta;
            let core = (FRAC_PI_2 + beta * v) * v.tan()
                - beta * ((FRAC_PI_2 * w * v.cos()) / (FRAC_PI_2 + beta * v)).ln();
            let standard = core / FRAC_PI_2;
            scale * standard + (2.0 / PI) * beta * scale * scale.ln()
        } else {
            // The +j*beta sign in the characteristic function is the negative
            // of the usual S1 skewness for alpha != 1.
            let beta = -p.beta;
            let t = beta * (PI * alpha / 2.0).tan();
            let b = t.atan() / alpha;
            let s = (1.0 + t * t).powf(1.0 / (2.0 * alpha));
            let standard = s * (alpha * (v + b)).sin() / v.cos().powf(1.0 / alpha)
                * ((v - alpha * (v + b)).cos() / w).powf((1.0 - alpha) / alpha);
            scale * standard
        };
        x + p.delta
    }))
}

/// Laplace quantile function; `u = 0.5` maps to `mu_loc` exactly.
pub fn laplace_quantile(p: &LaplaceParams, u: f64) -> f64 {
    let c = u - 0.5;
    if c == 0.0 {
        return p.mu_loc;
    }
    p.mu_loc - p.b * c.signum() * (1.0 - 2.0 * c.abs()).ln()
}

/// Inverse-CDF Laplace sampler over `u ~ Uniform(0, 1)` (open interval).
pub fn sample_laplace<R: Rng + ?Sized>(p: &LaplaceParams, n: usize, rng: &mut R) -> Result<DVector<f64>> {
    p.validate()?;
    Ok(DVector::from_fn(n, |_, _| laplace_quantile(p, rng.sample(Open01))))
}

/// `E|Z|^k` for a standard normal `Z`.
///
/// Even orders give `(k-1)!!`; odd orders `sqrt(2/pi) * (k-1)!!`.
pub fn theta_moment(k: u32) -> f64 {
    let double_factorial = (1..k).rev().step_by(2).map(f64::from).product::<f64>();
    if k % 2 == 0 {
        double_factorial
    } else {
        (2.0 / PI).sqrt() * double_factorial
    }
}

/// `E|w|^k = Pr * sd_gamma^k * theta(k) + (1 - Pr) * sd_eta^k * theta(k)`.
pub fn mixture_abs_moment(p: &BernoulliGaussianParams, k: u32) -> f64 {
    let th = theta_moment(k);
    let kf = f64::from(k);
    p.pr * p.var_gamma.sqrt().powf(kf) * th + (1.0 - p.pr) * p.var_eta.sqrt().powf(kf) * th
}
