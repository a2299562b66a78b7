// Steady-state MSD over a grid of tau and mu, with unstable points flagged.

use gsp_hqc::algorithms::AlgorithmSpec;
use gsp_hqc::experiments::{
    parameter_sweep, synthetic_points, temperature_field, Problem, ProblemSpec, SweepGrid, TrialPlan,
};
use gsp_hqc::graph::SamplingStrategy;
use gsp_hqc::io::output::sweep_csv;
use gsp_hqc::noise::{BernoulliGaussianParams, NoiseModel};

fn main() -> gsp_hqc::Result<()> {
    let stations = synthetic_points(10, (-30.0, -5.0), (-70.0, -40.0), 11)?;
    let spec = ProblemSpec {
        k: 4,
        theta_km: 500.0,
        f_count: 4,
        sample_count: 6,
        strategy: SamplingStrategy::GreedyMinSv,
        sampling_seed: 1,
    };
    let problem = Problem::build(&stations, &temperature_field(&stations), &spec)?;
    let plan = TrialPlan {
        problem: &problem,
        noise: NoiseModel::BernoulliGaussian(BernoulliGaussianParams { pr: 0.1, var_eta: 0.01, var_gamma: 100.0 }),
        iterations: 800,
        trials: 10,
        schedule: None,
        step_switch: None,
        initial: None,
    };
    let grid = SweepGrid { tau: vec![0.5, 2.0, 8.0], mu: vec![0.1, 0.5, 1.0, 2.5] };
    let points = parameter_sweep(&plan, &AlgorithmSpec::hqc(0.5, 2.0), &grid)?;
    print!("{}", sweep_csv(&points));
    Ok(())
}
