//! Stability bounds and steady-state predictions for the weighted update.
//!
//! All quantities are built from the `|F| x |F|` operator
//! `M = U_F^T G D_s U_F`, where `G` is the diagonal error-weighting matrix.
//! The mean recursion contracts when `0 < mu < 2 / lambda_max(M)`; the
//! mean-square analysis, which drops the `mu^2 M (x) M` term, gives
//! `0 < mu < 1 / lambda_max(M)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algorithms::ErrorWeights;
use crate::error::{Error, Result};
use crate::graph::{check_len, SamplingSet, SpectralBasis};
use crate::noise::{mixture_abs_moment, theta_moment, BernoulliGaussianParams};

/// `tau * E[w^2]` above this value marks the second-order expansion of the
/// steady-state weights as unreliable.
pub const TAYLOR_VALIDITY_THRESHOLD: f64 = 0.1;

/// Lowest value reported for a dB quantity whose linear value is zero.
pub const DB_FLOOR: f64 = -300.0;

pub fn to_db(linear: f64) -> f64 {
    if linear > 0.0 {
        (10.0 * linear.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// Symmetric operator `U_F^T G D_s U_F` and its eigenvalues, largest first.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedOperator {
    pub matrix: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
}

impl WeightedOperator {
    fn from_matrix(matrix: DMatrix<f64>) -> Self {
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let mut ev: Vec<f64> = sym.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        Self { matrix: sym, eigenvalues: DVector::from_vec(ev) }
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn weighted_operator(basis: &SpectralBasis, sampling: &SamplingSet, weights: &ErrorWeights) -> Result<WeightedOperator> {
    check_len(weights.diagonal(), basis.node_count(), "weight vector")?;
    if sampling.node_count() != basis.node_count() {
        return Err(Error::Input("sampling set and basis disagree on N".into()));
    }
    let diag = weights.diagonal().component_mul(&sampling.mask());
    Ok(operator_from_diagonal(basis.uf(), &diag))
}

fn operator_from_diagonal(uf: &DMatrix<f64>, diag: &DVector<f64>) -> WeightedOperator {
    let mut scaled = uf.clone();
    for (mut row, &d) in scaled.row_iter_mut().zip(diag.iter()) {
        row *= d;
    }
    WeightedOperator::from_matrix(uf.transpose() * scaled)
}

/// `2 / lambda_max(M)`.
pub fn mean_step_bound(op: &WeightedOperator) -> Result<f64> {
    let l = op.lambda_max();
    if !(l > 0.0) {
        return Err(Error::Numeric(format!(
            "lambda_max(U_F^T G D_s U_F) = {l} is not positive; the band is not excited on the sampled nodes"
        )));
    }
    Ok(2.0 / l)
}

/// `1 / lambda_max(M)`, always half of [`mean_step_bound`].
pub fn mean_square_step_bound(op: &WeightedOperator) -> Result<f64> {
    Ok(mean_step_bound(op)? / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeFactor {
    pub eigenvalue: f64,
    /// `|1 - c mu lambda_i|`.
    pub factor: f64,
    pub contracting: bool,
}

/// Linear convergence factor of each spectral mode.
pub fn mode_convergence_factors(op: &WeightedOperator, mu: f64, c: f64) -> Vec<ModeFactor> {
    op.eigenvalues
        .iter()
        .map(|&l| {
            let factor = (1.0 - c * mu * l).abs();
            ModeFactor { eigenvalue: l, factor, contracting: factor < 1.0 }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightFactor {
    /// `1 - (tau/2) Pr var_gamma theta(2) - (tau/2) (1 - Pr) var_eta theta(2)`.
    pub factor: f64,
    /// `tau * E[w^2]`.
    pub expansion_load: f64,
    pub validity_warning: bool,
}

/// Scalar multiplying `D_s` in the second-order steady-state approximation of
/// `G(e)` when the error has settled to the noise.
pub fn steady_state_weight_factor(tau: f64, noise: &BernoulliGaussianParams) -> WeightFactor {
    let th2 = theta_moment(2);
    let factor = 1.0 - tau / 2.0 * noise.pr * noise.var_gamma * th2 - tau / 2.0 * (1.0 - noise.pr) * noise.var_eta * th2;
    let expansion_load = tau * mixture_abs_moment(noise, 2);
    WeightFactor { factor, expansion_load, validity_warning: expansion_load > TAYLOR_VALIDITY_THRESHOLD }
}

#[derive(Debug, Clone, Copy)]
pub struct SteadyStateInputs<'a> {
    pub mu: f64,
    pub tau: f64,
    pub noise: BernoulliGaussianParams,
    pub basis: &'a SpectralBasis,
    pub sampling: &'a SamplingSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MsdPrediction {
    pub msd_linear: f64,
    pub msd_db: f64,
    pub validity_warning: bool,
    pub weight_factor: f64,
    /// Spectral radius of `R = (I - mu M)^T (x) (I - mu M)`.
    pub spectral_radius: f64,
}

/// Closed-form steady-state MSD `mu^2 vec(H)^T (I - R)^{-1} vec(I)`.
///
/// `G` is the steady-state factor times `D_s`, `M = U_F^T G D_s U_F`,
/// `H = (var_eta + Pr var_gamma) U_F^T G D_s G U_F` and
/// `R = (I - mu M)^T (x) (I - mu M)`. The expansion-validity warning is
/// reported, not enforced; a spectral radius of `R` at or above one is an
/// error.
pub fn steady_state_msd(inputs: &SteadyStateInputs<'_>) -> Result<MsdPrediction> {
    inputs.noise.validate()?;
    if !(inputs.mu >= 0.0) || !(inputs.tau > 0.0) {
        return Err(Error::Input(format!("need mu >= 0 and tau > 0, got mu = {}, tau = {}", inputs.mu, inputs.tau)));
    }
    let wf = steady_state_weight_factor(inputs.tau, &inputs.noise);
    let mask = inputs.sampling.mask();
    let uf = inputs.basis.uf();
    let f = uf.ncols();

    let g = &mask * wf.factor;
    let m = operator_from_diagonal(uf, &g.component_mul(&mask));
    // The Gaussian term carries no (1 - Pr) factor here, unlike the absolute
    // moment it comes from; kept as the covariance is usually written.
    let noise_power = inputs.noise.var_eta + inputs.noise.pr * inputs.noise.var_gamma;
    let h = operator_from_diagonal(uf, &g.component_mul(&mask).component_mul(&g)).matrix * noise_power;

    let radius = m
        .eigenvalues
        .iter()
        .map(|l| (1.0 - inputs.mu * l).abs())
        .fold(0.0_f64, f64::max)
        .powi(2);
    if radius >= 1.0 {
        let bound = mean_square_step_bound(&m).unwrap_or(f64::NAN);
        return Err(Error::Unstable { spectral_radius: radius, mu: inputs.mu, bound });
    }

    let a = DMatrix::identity(f, f) - inputs.mu * &m.matrix;
    let r = a.transpose().kronecker(&a);
    let lhs = DMatrix::identity(f * f, f * f) - r;
    let vec_i = DVector::from_iterator(f * f, DMatrix::<f64>::identity(f, f).iter().copied());
    let k = lhs
        .lu()
        .solve(&vec_i)
        .ok_or_else(|| Error::Numeric("I - R is singular".into()))?;
    let vec_h = DVector::from_iterator(f * f, h.iter().copied());
    let msd = (inputs.mu * inputs.mu * vec_h.dot(&k)).max(0.0);

    Ok(MsdPrediction {
        msd_linear: msd,
        msd_db: to_db(msd),
        validity_warning: wf.validity_warning,
        weight_factor: wf.factor,
        spectral_radius: radius,
    })
}

/// Spectral radii of the exact mean-square recursion `(I - mu M) (x) (I - mu M)`
/// and of the first-order form `I - 2 (I (x) mu M)` used to derive the
/// mean-square bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecursionGap {
    pub exact_radius: f64,
    pub first_order_radius: f64,
    pub gap: f64,
}

pub fn recursion_gap(op: &WeightedOperator, mu: f64) -> RecursionGap {
    let exact = op.eigenvalues.iter().map(|l| (1.0 - mu * l).abs()).fold(0.0_f64, f64::max).powi(2);
    let first = op.eigenvalues.iter().map(|l| (1.0 - 2.0 * mu * l).abs()).fold(0.0_f64, f64::max);
    RecursionGap { exact_radius: exact, first_order_radius: first, gap: (exact - first).abs() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{AdaptiveFilter, AlgorithmSpec, FilterState};
    use crate::graph::{build_sampling_set, SamplingStrategy};
    use crate::noise::{seeded_rng, NoiseModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(n: usize, f: usize, s: usize, seed: u64) -> (SpectralBasis, SamplingSet, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let w = rng.random::<f64>();
                a[(i, j)] = w;
                a[(j, i)] = w;
            }
        }
        let full = SpectralBasis::from_symmetric(&a).unwrap();
        let reference = DVector::from_fn(n, |i, _| 5.0 + 2.0 * (0.7 * i as f64).cos());
        let basis = full.select_frequency_set(&reference, f).unwrap();
        let truth = basis.bandlimit_project(&reference).unwrap();
        let sampling = build_sampling_set(&basis, s, SamplingStrategy::RandomSeeded, seed).unwrap();
        (basis, sampling, truth)
    }

    // Power iteration, independent of the symmetric eigensolver.
    fn power_lambda_max(m: &DMatrix<f64>) -> f64 {
        let mut v = DVector::from_element(m.nrows(), 1.0).normalize();
        let mut l = 0.0;
        for _ in 0..5000 {
            let w = m * &v;
            l = v.dot(&w);
            v = w.normalize();
        }
        l
    }

    #[test]
    fn identity_and_scaled_operators() {
        let (basis, _, _) = problem(6, 3, 6, 1);
        let full = SamplingSet::full(6);
        let op = weighted_operator(&basis, &full, &ErrorWeights::ones(6)).unwrap();
        assert!((op.matrix.clone() - DMatrix::identity(3, 3)).norm() < 1e-12);
        assert!((mean_step_bound(&op).unwrap() - 2.0).abs() < 1e-12);
        assert!((mean_square_step_bound(&op).unwrap() - 1.0).abs() < 1e-12);

        let c = 0.37;
        let op = weighted_operator(&basis, &full, &ErrorWeights(DVector::from_element(6, c))).unwrap();
        assert!(op.eigenvalues.iter().all(|l| (l - c).abs() < 1e-12));
    }

    #[test]
    fn bound_arithmetic_and_degenerate_operator() {
        let op = WeightedOperator::from_matrix(DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.2])));
        assert!((mean_step_bound(&op).unwrap() - 4.0).abs() < 1e-15);
        assert_eq!(mean_square_step_bound(&op).unwrap(), mean_step_bound(&op).unwrap() / 2.0);
        let zero = WeightedOperator::from_matrix(DMatrix::zeros(2, 2));
        assert!(matches!(mean_step_bound(&zero), Err(Error::Numeric(_))));
    }

    #[test]
    fn random_operator_matches_dense_eigensolver() {
        let (basis, sampling, _) = problem(8, 4, 6, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = ErrorWeights(DVector::from_fn(8, |_, _| rng.random::<f64>()));
        let op = weighted_operator(&basis, &sampling, &w).unwrap();
        // dense oracle: explicit D_s, G and the raw product
        let dense = basis.uf().transpose() * DMatrix::from_diagonal(&w.0) * sampling.matrix() * basis.uf();
        assert!((&dense - dense.transpose()).amax() < 1e-10);
        let mut oracle: Vec<f64> = dense.symmetric_eigen().eigenvalues.iter().copied().collect();
        oracle.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in op.eigenvalues.iter().zip(oracle) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn converged_bound_matches_power_iteration() {
        let (basis, sampling, truth) = problem(10, 4, 7, 2);
        let spec = AlgorithmSpec::hqc(0.5, 2.0);
        let filter = AdaptiveFilter::new(&basis, &sampling, spec).unwrap();
        let noise = NoiseModel::Gaussian { var: 0.01 };
        let mut rng = seeded_rng(1);
        let mut state = FilterState::zeros(10);
        for _ in 0..400 {
            let obs = &truth + noise.sample(10, &mut rng).unwrap();
            state = filter.step(&state, &obs).unwrap();
        }
        let obs = &truth + noise.sample(10, &mut rng).unwrap();
        let e = filter.error(&state, &obs).unwrap();
        let op = weighted_operator(&basis, &sampling, &filter.weights(&e).unwrap()).unwrap();
        let oracle = power_lambda_max(&op.matrix);
        assert!((mean_step_bound(&op).unwrap() - 2.0 / oracle).abs() < 1e-8);
    }

    #[test]
    fn mode_factors() {
        let op = WeightedOperator::from_matrix(DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5])));
        assert!(mode_convergence_factors(&op, 0.0, 1.0).iter().all(|m| m.factor == 1.0 && !m.contracting));
        let f = mode_convergence_factors(&op, 2.0, 1.0);
        assert_eq!(f[1].factor, 0.0);
        assert!(!f[0].contracting);
        assert!(f[1].contracting);
    }

    #[test]
    fn noiseless_mode_decay_matches_predicted_factor() {
        // LMS weights are constant, so every mode of U_F^T D_s U_F decays
        // geometrically at exactly |1 - mu lambda_i|
        let (basis, sampling, truth) = problem(10, 4, 7, 9);
        let mu = 0.3;
        let filter = AdaptiveFilter::new(&basis, &sampling, AlgorithmSpec::lms(mu)).unwrap();
        let op = weighted_operator(&basis, &sampling, &ErrorWeights::ones(10)).unwrap();
        let eig = op.matrix.clone().symmetric_eigen();
        let predicted = mode_convergence_factors(&op, mu, 1.0);

        let mut state = FilterState::zeros(10);
        let mut coords: Vec<DVector<f64>> = Vec::new();
        for _ in 0..200 {
            let s_err = basis.gft(&(&truth - &state.estimate)).unwrap();
            coords.push(eig.eigenvectors.transpose() * s_err);
            state = filter.step(&state, &truth).unwrap();
        }
        for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
            let expected = predicted.iter().find(|m| (m.eigenvalue - lambda).abs() < 1e-12).unwrap().factor;
            // regression slope of log|coord| over the first iterations before round-off
            let pts: Vec<(f64, f64)> = coords
                .iter()
                .enumerate()
                .map(|(i, c)| (i as f64, c[j].abs()))
                .take_while(|&(_, v)| v > 1e-12)
                .take(60)
                .map(|(i, v)| (i, v.ln()))
                .collect();
            if pts.len() < 5 {
                continue;
            }
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
                / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
            assert!((slope.exp() / expected - 1.0).abs() < 0.05, "mode {j}: {} vs {expected}", slope.exp());
        }
    }

    #[test]
    fn weight_factor_values() {
        let g = BernoulliGaussianParams { pr: 0.0, var_eta: 0.01, var_gamma: 0.0 };
        let wf = steady_state_weight_factor(2.0, &g);
        assert!((wf.factor - 0.99).abs() < 1e-15);
        assert!(!wf.validity_warning);
        assert!((steady_state_weight_factor(1e-12, &g).factor - 1.0).abs() < 1e-12);

        let imp = BernoulliGaussianParams { pr: 0.1, var_eta: 0.01, var_gamma: 1e4 };
        let wf = steady_state_weight_factor(2.0, &imp);
        assert!((wf.factor + 999.009).abs() < 1e-9, "{}", wf.factor);
        assert!(wf.validity_warning);
    }

    #[test]
    fn steady_state_msd_basic_properties() {
        let (basis, sampling, _) = problem(8, 4, 6, 4);
        let base = SteadyStateInputs {
            mu: 0.05,
            tau: 2.0,
            noise: BernoulliGaussianParams { pr: 0.0, var_eta: 0.0, var_gamma: 0.0 },
            basis: &basis,
            sampling: &sampling,
        };
        let zero = steady_state_msd(&base).unwrap();
        assert_eq!(zero.msd_linear, 0.0);
        assert_eq!(zero.msd_db, DB_FLOOR);

        let noisy = SteadyStateInputs { noise: BernoulliGaussianParams { var_eta: 0.01, ..base.noise }, ..base };
        let small = steady_state_msd(&SteadyStateInputs { mu: 0.005, ..noisy }).unwrap();
        let double = steady_state_msd(&SteadyStateInputs { mu: 0.01, ..noisy }).unwrap();
        // MSD ~ mu^2 vec(H)^T (I - R)^{-1} vec(I) with (I - R) ~ 2 mu (I (x) M) gives
        // roughly linear growth in mu; the ratio for doubling stays near 2
        let ratio = double.msd_linear / small.msd_linear;
        assert!(ratio > 1.9 && ratio < 2.1, "{ratio}");
    }

    #[test]
    fn steady_state_msd_matches_lyapunov_iteration() {
        // iterate the covariance recursion P <- A P A^T + mu^2 H to convergence
        let (basis, sampling, _) = problem(8, 4, 6, 5);
        let inputs = SteadyStateInputs {
            mu: 0.2,
            tau: 2.0,
            noise: BernoulliGaussianParams { pr: 0.05, var_eta: 0.01, var_gamma: 0.02 },
            basis: &basis,
            sampling: &sampling,
        };
        let pred = steady_state_msd(&inputs).unwrap();
        let wf = steady_state_weight_factor(2.0, &inputs.noise).factor;
        let g = sampling.mask() * wf;
        let gd = DMatrix::from_diagonal(&g.component_mul(&sampling.mask()));
        let m = basis.uf().transpose() * &gd * basis.uf();
        let h = basis.uf().transpose() * &gd * DMatrix::from_diagonal(&g) * basis.uf()
            * (inputs.noise.var_eta + inputs.noise.pr * inputs.noise.var_gamma);
        let a = DMatrix::identity(4, 4) - inputs.mu * &m;
        let mut p = DMatrix::zeros(4, 4);
        for _ in 0..20_000 {
            p = &a * &p * a.transpose() + inputs.mu * inputs.mu * &h;
        }
        assert!((p.trace() / pred.msd_linear - 1.0).abs() < 1e-8, "{} vs {}", p.trace(), pred.msd_linear);
    }

    #[test]
    fn steady_state_msd_monotone_in_noise() {
        let (basis, sampling, _) = problem(8, 4, 6, 6);
        let mut last = -1.0;
        for var in [0.0, 0.001, 0.005, 0.01, 0.02] {
            let p = steady_state_msd(&SteadyStateInputs {
                mu: 0.1,
                tau: 2.0,
                noise: BernoulliGaussianParams { pr: 0.0, var_eta: var, var_gamma: 0.0 },
                basis: &basis,
                sampling: &sampling,
            })
            .unwrap();
            assert!(p.msd_linear >= last);
            last = p.msd_linear;
        }
    }

    #[test]
    fn unstable_step_is_an_error() {
        let (basis, sampling, _) = problem(8, 4, 6, 4);
        let op = weighted_operator(&basis, &sampling, &ErrorWeights::ones(8)).unwrap();
        let mu = 2.5 / op.lambda_max();
        let r = steady_state_msd(&SteadyStateInputs {
            mu,
            tau: 1e-9,
            noise: BernoulliGaussianParams { pr: 0.0, var_eta: 0.01, var_gamma: 0.0 },
            basis: &basis,
            sampling: &sampling,
        });
        assert!(matches!(r, Err(Error::Unstable { .. })));
    }

    #[test]
    fn recursion_gap_is_second_order() {
        let op = WeightedOperator::from_matrix(DMatrix::from_diagonal(&DVector::from_vec(vec![0.9, 0.3])));
        let g1 = recursion_gap(&op, 0.01).gap;
        let g2 = recursion_gap(&op, 0.02).gap;
        assert!((g2 / g1 - 4.0).abs() < 1e-6);
        assert!((g1 - 0.01f64.powi(2) * 0.3f64.powi(2)).abs() < 1e-15);
    }
}
