// Step-size bounds, per-mode contraction factors and the closed-form
// steady-state MSD, checked against a Monte Carlo run.

use gsp_hqc::algorithms::{AlgorithmSpec, ErrorWeights};
use gsp_hqc::analysis::{
    mean_square_step_bound, mean_step_bound, mode_convergence_factors, recursion_gap, steady_state_msd,
    steady_state_weight_factor, weighted_operator, SteadyStateInputs,
};
use gsp_hqc::experiments::{run_algorithm, synthetic_points, temperature_field, Problem, ProblemSpec, TrialPlan};
use gsp_hqc::graph::SamplingStrategy;
use gsp_hqc::noise::{BernoulliGaussianParams, NoiseModel};

fn main() -> gsp_hqc::Result<()> {
    let stations = synthetic_points(8, (-30.0, -5.0), (-70.0, -40.0), 11)?;
    let spec = ProblemSpec {
        k: 4,
        theta_km: 500.0,
        f_count: 4,
        sample_count: 6,
        strategy: SamplingStrategy::GreedyMinSv,
        sampling_seed: 1,
    };
    let problem = Problem::build(&stations, &temperature_field(&stations), &spec)?;

    let op = weighted_operator(&problem.basis, &problem.sampling, &ErrorWeights::ones(8))?;
    println!("eigenvalues of U_F^T D_s U_F: {:.4?}", op.eigenvalues.as_slice());
    println!("mean bound {:.4}, mean-square bound {:.4}", mean_step_bound(&op)?, mean_square_step_bound(&op)?);
    for m in mode_convergence_factors(&op, 0.05, 1.0) {
        println!("  lambda {:.4}: factor {:.4}", m.eigenvalue, m.factor);
    }
    let gap = recursion_gap(&op, 0.05);
    println!("exact vs first-order recursion radius: {:.6} vs {:.6}", gap.exact_radius, gap.first_order_radius);

    let noise = BernoulliGaussianParams { pr: 0.0, var_eta: 0.01, var_gamma: 0.0 };
    let (mu, tau) = (0.05, 2.0);
    println!("steady-state weight factor {:.4}", steady_state_weight_factor(tau, &noise).factor);
    let predicted = steady_state_msd(&SteadyStateInputs { mu, tau, noise, basis: &problem.basis, sampling: &problem.sampling })?;

    let plan = TrialPlan {
        problem: &problem,
        noise: NoiseModel::Gaussian { var: 0.01 },
        iterations: 6000,
        trials: 50,
        schedule: None,
        step_switch: None,
        initial: None,
    };
    let curve = run_algorithm(&plan, &AlgorithmSpec::hqc(mu, tau))?;
    println!(
        "steady-state MSD: predicted {:.2} dB, simulated {:.2} dB",
        predicted.msd_db,
        curve.last_quarter_db()
    );
    Ok(())
}
