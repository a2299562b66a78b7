// Run with a fixed step, then tie the step to a multiple k of the
// instantaneous mean-square bound 1 / lambda_max(U_F^T G(e) D_s U_F) and
// compare the new steady state with the old one.

use gsp_hqc::algorithms::{AlgorithmSpec, ErrorWeights};
use gsp_hqc::analysis::{mean_square_step_bound, to_db, weighted_operator};
use gsp_hqc::experiments::{
    run_algorithm, step_switch_run, synthetic_points, temperature_field, Problem, ProblemSpec, StepSwitch, TrialPlan,
};
use gsp_hqc::graph::SamplingStrategy;
use gsp_hqc::noise::{BernoulliGaussianParams, NoiseModel};

fn main() -> gsp_hqc::Result<()> {
    let stations = synthetic_points(10, (-30.0, -5.0), (-70.0, -40.0), 7)?;
    let spec = ProblemSpec {
        k: 4,
        theta_km: 500.0,
        f_count: 1,
        sample_count: 3,
        strategy: SamplingStrategy::GreedyMinSv,
        sampling_seed: 1,
    };
    let problem = Problem::build(&stations, &temperature_field(&stations), &spec)?;
    let unit = weighted_operator(&problem.basis, &problem.sampling, &ErrorWeights::ones(10))?;
    let critical = mean_square_step_bound(&unit)?;
    let algorithm = AlgorithmSpec::hqc(1.1 * critical, 2.0);

    let plan = TrialPlan {
        problem: &problem,
        noise: NoiseModel::BernoulliGaussian(BernoulliGaussianParams { pr: 0.1, var_eta: 0.01, var_gamma: 100.0 }),
        iterations: 2000,
        trials: 20,
        schedule: None,
        step_switch: None,
        initial: None,
    };
    let start = 1000;
    let before = to_db(run_algorithm(&plan, &algorithm)?.window_mean_linear(900, 1000));
    println!("critical step {critical:.4}; steady state before the switch {before:.2} dB");
    for k in [0.4, 0.8, 1.0, 1.2, 1.6] {
        let curve = step_switch_run(&plan, &algorithm, StepSwitch { start, multiple: k })?;
        println!("k = {k:.1}: last quarter {:+.2} dB relative", curve.last_quarter_db() - before);
    }
    Ok(())
}
