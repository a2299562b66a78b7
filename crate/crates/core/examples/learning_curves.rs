// Seeded multi-trial comparison of the algorithms under impulsive noise with
// an abrupt change of the signal halfway through. Curves and a summary are
// written to a temporary directory.

use gsp_hqc::algorithms::AlgorithmSpec;
use gsp_hqc::experiments::{
    crossing_from_steady_state, run_trials, synthetic_points, temperature_field, ChangeSchedule, Problem,
    ProblemSpec, ReferenceRule, TrialPlan,
};
use gsp_hqc::graph::SamplingStrategy;
use gsp_hqc::io::output::write_run_outputs;
use gsp_hqc::noise::{BernoulliGaussianParams, NoiseModel};

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
    let plan = TrialPlan {
        problem: &problem,
        noise: NoiseModel::BernoulliGaussian(BernoulliGaussianParams { pr: 0.1, var_eta: 0.01, var_gamma: 100.0 }),
        iterations: 1000,
        trials: 20,
        schedule: Some(ChangeSchedule { iteration: 500, factor: 1.4 }),
        step_switch: None,
        initial: None,
    };
    let algorithms = [
        AlgorithmSpec::hqc(0.98, 2.0),
        AlgorithmSpec::log(0.98, 0.06),
        AlgorithmSpec::gmcc(0.98, 1.4, 0.01),
        AlgorithmSpec::mcc(0.98, 0.01),
        AlgorithmSpec::nlms(0.07),
        AlgorithmSpec::lms(0.98),
    ];
    let results = run_trials(&plan, &algorithms)?;
    println!("{:<34} {:>10} {:>10} {:>10}", "algorithm", "i=499 dB", "i=999 dB", "crossing");
    for r in &results {
        let c = &r.curve;
        let x = crossing_from_steady_state(c, 1.03, ReferenceRule::LinearFactor);
        println!(
            "{:<34} {:>10.2} {:>10.2} {:>10}",
            r.spec.display_name(),
            c.msd_mean_db[499],
            c.msd_mean_db[999],
            x.first_iteration.map_or("-".into(), |i| i.to_string())
        );
    }

    let dir = std::env::temp_dir().join("gsp-hqc-learning-curves");
    let written = write_run_outputs(&dir, &results)?;
    println!("wrote {} files under {}", written.len(), dir.display());
    Ok(())
}
