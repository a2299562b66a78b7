// Drive a single HQC filter by hand through impulsive observations and
// compare it with LMS on the same draws.

use gsp_hqc::algorithms::{AdaptiveFilter, AlgorithmSpec, FilterState};
use gsp_hqc::experiments::{msd_db, synthetic_points, temperature_field, Problem, ProblemSpec};
use gsp_hqc::graph::SamplingStrategy;
use gsp_hqc::noise::{seeded_rng, BernoulliGaussianParams, NoiseModel};

fn main() -> gsp_hqc::Result<()> {
    let stations = synthetic_points(20, (-30.0, -5.0), (-70.0, -40.0), 5)?;
    let spec = ProblemSpec {
        k: 5,
        theta_km: 500.0,
        f_count: 6,
        sample_count: 12,
        strategy: SamplingStrategy::GreedyMinSv,
        sampling_seed: 1,
    };
    let problem = Problem::build(&stations, &temperature_field(&stations), &spec)?;
    let noise = NoiseModel::BernoulliGaussian(BernoulliGaussianParams { pr: 0.1, var_eta: 0.01, var_gamma: 100.0 });

    for algorithm in [AlgorithmSpec::hqc(0.98, 2.0), AlgorithmSpec::lms(0.98)] {
        let filter = AdaptiveFilter::new(&problem.basis, &problem.sampling, algorithm)?;
        let mut rng = seeded_rng(1);
        let mut state = FilterState::zeros(problem.node_count());
        let mut report = Vec::new();
        for i in 1..=1000 {
            let observed = &problem.truth + noise.sample(problem.node_count(), &mut rng)?;
            state = filter.step(&state, &observed)?;
            if [1, 10, 100, 1000].contains(&i) {
                report.push(format!("{i}: {:.1} dB", msd_db(&state.estimate, &problem.truth)?));
            }
        }
        println!("{:<20} {}", filter.spec().display_name(), report.join(", "));
    }

    // the weights an impulse receives
    let filter = AdaptiveFilter::new(&problem.basis, &problem.sampling, AlgorithmSpec::hqc(0.98, 2.0))?;
    let mut observed = problem.truth.clone();
    observed[problem.sampling.indices()[0]] += 30.0;
    let state = FilterState::projected(&problem.basis, &problem.truth)?;
    let e = filter.error(&state, &observed)?;
    let w = filter.weights(&e)?;
    let k = problem.sampling.indices()[0];
    println!("impulse of 30 at node {k}: error {:.1}, weight {:.4}", e[k], w.diagonal()[k]);
    Ok(())
}
