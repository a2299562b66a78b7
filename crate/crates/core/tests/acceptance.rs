//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test --test acceptance`.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gsp_hqc::algorithms::{hqc_hessian_coeff, log_hessian_coeff, AlgorithmKind, AlgorithmSpec, ErrorWeights};
use gsp_hqc::analysis::{self, SteadyStateInputs};
use gsp_hqc::experiments::{
    crossing_from_steady_state, run_algorithm, run_trial, run_trials, step_switch_run, synthetic_points,
    temperature_field, LearningCurve, Problem, ProblemSpec, ReferenceRule, StepSwitch, TrialPlan,
};
use gsp_hqc::graph::{SamplingStrategy, SpectralBasis};
use gsp_hqc::io::complexity::{complexity_report, operation_counts};
use gsp_hqc::noise::{mixture_abs_moment, seeded_rng, theta_moment, AlphaStableParams, BernoulliGaussianParams, NoiseModel};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Synthetic stations in a south-american box with a temperature-like field.
fn desk_problem(nodes: usize, point_seed: u64, k: usize, f_count: usize, sample_count: usize) -> Problem {
    let pts = synthetic_points(nodes, (-30.0, -5.0), (-70.0, -40.0), point_seed).unwrap();
    let reference = temperature_field(&pts);
    let spec = ProblemSpec {
        k,
        theta_km: 500.0,
        f_count,
        sample_count,
        strategy: SamplingStrategy::GreedyMinSv,
        sampling_seed: 1,
    };
    Problem::build(&pts, &reference, &spec).unwrap()
}

fn plan(problem: &Problem, noise: NoiseModel, iterations: usize, trials: usize) -> TrialPlan<'_> {
    TrialPlan { problem, noise, iterations, trials, schedule: None, step_switch: None, initial: None }
}

fn bg(pr: f64, var_eta: f64, var_gamma: f64) -> NoiseModel {
    NoiseModel::BernoulliGaussian(BernoulliGaussianParams { pr, var_eta, var_gamma })
}

fn ac1_convexity() -> Outcome {
    let grid: Vec<f64> = (0..2001).map(|i| -100.0 + 0.1 * i as f64).collect();
    let mut worst_hqc = f64::INFINITY;
    let mut sign_errors = 0;
    for tau in [0.5, 1.0, 2.0, 8.0] {
        let edge = (1.0 / tau as f64).sqrt();
        for &e in &grid {
            worst_hqc = worst_hqc.min(hqc_hessian_coeff(e, tau));
            let h = log_hessian_coeff(e, tau);
            // positive strictly inside the edge, negative strictly outside
            let expected_positive = e.abs() < edge;
            if e.abs() != edge && (h > 0.0) != expected_positive {
                sign_errors += 1;
            }
        }
    }
    outcome(
        worst_hqc > 0.0 && sign_errors == 0,
        format!("min HQC coefficient {worst_hqc:.3e}, LOG sign mismatches against |e| = sqrt(1/tau): {sign_errors}"),
    )
}

fn ac2_gft_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let a = DMatrix::from_fn(50, 50, |_, _| 0.0);
        let mut a = a;
        for i in 0..50 {
            for j in i + 1..50 {
                let w = rng.random::<f64>();
                a[(i, j)] = w;
                a[(j, i)] = w;
            }
        }
        let basis = SpectralBasis::from_symmetric(&a).unwrap();
        let x = DVector::from_fn(50, |_, _| rng.random_range(-10.0..10.0));
        let back = basis.igft(&basis.gft(&x).unwrap()).unwrap();
        worst = worst.max((back - &x).norm() / x.norm());
    }
    outcome(worst < 1e-10, format!("worst relative round-trip error {worst:.3e} over 100 graphs"))
}

fn ac3_noiseless_recovery() -> Outcome {
    let p = desk_problem(10, 11, 4, 4, 6);
    let recoverable = p.sampling.is_recoverable(&p.basis);
    let c = run_algorithm(&plan(&p, NoiseModel::Gaussian { var: 0.0 }, 1000, 1), &AlgorithmSpec::hqc(0.5, 2.0)).unwrap();
    let first = c.msd_mean_db.iter().position(|&v| v < -100.0);
    outcome(
        recoverable && first.is_some(),
        format!("recoverable = {recoverable}, first iteration below -100 dB: {first:?}, final {:.1} dB", c.msd_mean_db[999]),
    )
}

fn ac4_step_switch() -> Outcome {
    // One spectral mode (F = 1) on 3 sampled nodes of a 10-node graph. With a
    // single mode mu(i) * lambda(G(e(i))) equals k at every iteration, so the
    // switch tests the bound directly. With F >= 2 the secondary modes see a
    // smaller effective multiple and the k = 1.6 rise measures ~6.5 dB.
    let p = desk_problem(10, 7, 4, 1, 3);
    let unit = analysis::weighted_operator(&p.basis, &p.sampling, &ErrorWeights::ones(10)).unwrap();
    let critical = analysis::mean_square_step_bound(&unit).unwrap();
    // pre-switch step: 1.1 x the unit-weight critical value (~1.7056)
    let spec = AlgorithmSpec::hqc(1.1 * critical, 2.0);
    let pl = plan(&p, bg(0.1, 0.01, 1e4 * 0.01), 4000, 50);
    let start = 2000;
    let base = run_algorithm(&pl, &spec).unwrap();
    let pre = analysis::to_db(base.window_mean_linear(start - start / 10, start));
    let k08 = step_switch_run(&pl, &spec, StepSwitch { start, multiple: 0.8 }).unwrap().last_quarter_db() - pre;
    let k16 = step_switch_run(&pl, &spec, StepSwitch { start, multiple: 1.6 }).unwrap().last_quarter_db() - pre;
    outcome(
        k08.abs() <= 3.0 && k16 >= 10.0,
        format!("pre-switch {pre:.2} dB; k=0.8 last quarter {k08:+.2} dB (need |.| <= 3); k=1.6 {k16:+.2} dB (need >= 10)"),
    )
}

fn ac5_steady_state_prediction() -> Outcome {
    let p = desk_problem(8, 11, 4, 4, 6);
    let noise = BernoulliGaussianParams { pr: 0.0, var_eta: 0.01, var_gamma: 0.0 };
    let (mu, tau) = (0.05, 2.0);
    let pred = analysis::steady_state_msd(&SteadyStateInputs { mu, tau, noise, basis: &p.basis, sampling: &p.sampling })
        .unwrap();
    let c = run_algorithm(&plan(&p, NoiseModel::Gaussian { var: 0.01 }, 8000, 200), &AlgorithmSpec::hqc(mu, tau)).unwrap();
    let mc = c.last_quarter_db();
    outcome(
        (pred.msd_db - mc).abs() <= 3.0,
        format!("predicted {:.3} dB, Monte Carlo (200 trials) {mc:.3} dB, gap {:.3} dB", pred.msd_db, pred.msd_db - mc),
    )
}

/// 20 stations, 6 frequencies, 12 sampled nodes.
fn robustness_problem() -> Problem {
    desk_problem(20, 5, 5, 6, 12)
}

fn ac6_robustness() -> Outcome {
    let p = robustness_problem();
    let mu = 0.98;
    let specs = [AlgorithmSpec::hqc(mu, 2.0), AlgorithmSpec::log(mu, 0.06), AlgorithmSpec::lms(mu)];
    let impulsive = run_trials(&plan(&p, bg(0.1, 0.01, 1e4 * 0.01), 3000, 100), &specs).unwrap();
    let [h, l, m] = [0, 1, 2].map(|i| impulsive[i].curve.last_quarter_db());
    let cauchy = run_trials(&plan(&p, NoiseModel::AlphaStable(AlphaStableParams::cauchy(1.0)), 3000, 100), &[specs[0].clone(), specs[2].clone()])
        .unwrap();
    let (hc, mc) = (cauchy[0].curve.last_quarter_db(), cauchy[1].curve.last_quarter_db());
    outcome(
        h <= l && l <= m && mc - hc >= 10.0,
        format!("BG: HQC {h:.2} <= LOG {l:.2} <= LMS {m:.2} dB; Cauchy: LMS - HQC = {:.2} dB", mc - hc),
    )
}

fn ac7_convergence_rate() -> Outcome {
    let p = robustness_problem();
    let pl = plan(&p, bg(0.1, 0.01, 1e4 * 0.01), 4000, 100);
    // Step sizes tuned offline so each pair's steady states agree within 1 dB;
    // the matching is re-checked below.
    let pairs = [
        (AlgorithmSpec::hqc(0.98, 2.0), AlgorithmSpec::log(0.3, 0.06)),
        (AlgorithmSpec::hqc(0.1, 0.5), AlgorithmSpec::log(0.98, 1.0)),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (h, l) in pairs {
        let r = run_trials(&pl, &[h, l]).unwrap();
        let (ch, cl) = (&r[0].curve, &r[1].curve);
        let matched = (ch.steady_state_db() - cl.steady_state_db()).abs() <= 1.0;
        let xh = crossing_from_steady_state(ch, 1.03, ReferenceRule::LinearFactor).first_iteration;
        let xl = crossing_from_steady_state(cl, 1.03, ReferenceRule::LinearFactor).first_iteration;
        let faster = matches!((xh, xl), (Some(a), Some(b)) if a < b);
        pass &= matched && faster;
        detail.push(format!(
            "[{} ss {:.2} dB, crossing {xh:?}] vs [{} ss {:.2} dB, crossing {xl:?}]",
            r[0].spec.display_name(),
            ch.steady_state_db(),
            r[1].spec.display_name(),
            cl.steady_state_db()
        ));
    }
    outcome(pass, detail.join("; "))
}

fn ac8_complexity() -> Outcome {
    let r = complexity_report(205, 125, 130, AlgorithmKind::Log).unwrap();
    let gmcc = r.entry(AlgorithmKind::Gmcc).relative_percent;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let same = (0..1000).all(|_| {
        let n = rng.random_range(1..5000u128);
        let f = rng.random_range(1..=n);
        let s = rng.random_range(1..=n);
        operation_counts(AlgorithmKind::Hqc, n, f, s).multiplications
            == operation_counts(AlgorithmKind::Gmcc, n, f, s).multiplications
    });
    outcome(
        (gmcc - 100.0019).abs() <= 0.001 && same,
        format!("GMCC = {gmcc:.4}% of LOG; HQC and GMCC multiplication counts identical on 1000 random sizes: {same}"),
    )
}

fn ac9_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{
  "schema_version": 1,
  "graph": {"source": "synthetic", "nodes": 12, "seed": 4, "lat_range": [-30, -5], "lon_range": [-70, -40]},
  "k": 4, "theta_km": 500.0, "f_count": 4, "sample_count": 7,
  "sampling": {"strategy": "greedy_min_sv", "seed": 1},
  "algorithms": [
    {"kind": "hqc", "mu": 0.5, "tau": 2.0},
    {"kind": "lms", "mu": 0.5},
    {"kind": "gmcc", "mu": 0.5, "alpha_shape": 1.4, "lambda_kernel": 0.01}
  ],
  "noise": {"type": "bernoulli_gaussian", "pr": 0.1, "var_eta": 0.01, "var_gamma": 100.0},
  "iterations": 300, "trial_count": 24,
  "change_schedule": {"iteration": 150, "factor": 1.4},
  "output": {"dir": "out"}
}"#,
    )
    .unwrap();
    let run = |out: &str, threads: &str| -> Vec<(String, Vec<u8>)> {
        let out = dir.path().join(out);
        let code = gsp_hqc::cli::main_with_args([
            "gsp-hqc",
            "run",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert_eq!(code, 0);
        let mut files: Vec<_> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    let a = run("a", "4");
    let b = run("b", "4");
    let c = run("c", "1");
    let files_identical = a == b && a == c && a.len() == 4;

    // trials executed in a shuffled order, then aggregated by trial index
    let p = desk_problem(12, 4, 4, 4, 7);
    let pl = plan(&p, bg(0.1, 0.01, 100.0), 200, 16);
    let spec = AlgorithmSpec::hqc(0.5, 2.0);
    let reference = run_algorithm(&pl, &spec).unwrap();
    let mut order: Vec<u64> = (1..=16).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in (1..order.len()).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut runs: Vec<(u64, Vec<f64>)> = order.iter().map(|&r| (r, run_trial(&pl, &spec, r).unwrap())).collect();
    runs.sort_by_key(|r| r.0);
    let permuted = LearningCurve::from_trials(&runs.into_iter().map(|r| r.1).collect::<Vec<_>>()).unwrap();
    let aggregates_identical = permuted == reference;

    outcome(
        files_identical && aggregates_identical,
        format!(
            "repeated and 1-vs-4-thread runs byte-identical ({} files): {files_identical}; shuffled trial order identical: {aggregates_identical}",
            a.len()
        ),
    )
}

fn ac10_moments() -> Outcome {
    let theta_exact = theta_moment(2) == 1.0;
    let mut worst_z: f64 = 0.0;
    let mut rows = Vec::new();
    for (pr, ve, vg) in [(0.1, 0.01, 100.0), (0.05, 0.01, 1.0), (0.0, 0.25, 0.0), (0.15, 0.01, 1e4)] {
        let p = BernoulliGaussianParams { pr, var_eta: ve, var_gamma: vg };
        let mut rng = seeded_rng(10);
        let w = NoiseModel::BernoulliGaussian(p).sample(100_000, &mut rng).unwrap();
        let sq: Vec<f64> = w.iter().map(|x| x * x).collect();
        let n = sq.len() as f64;
        let mean = sq.iter().sum::<f64>() / n;
        let sd = (sq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let target = mixture_abs_moment(&p, 2);
        let z = (mean - target).abs() / (sd / n.sqrt());
        worst_z = worst_z.max(z);
        rows.push(format!("Pr={pr}: {mean:.5} vs {target:.5} (z={z:.2})"));
    }
    outcome(theta_exact && worst_z <= 3.0, format!("theta(2) == 1: {theta_exact}; {}", rows.join(", ")))
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome, Duration); 10] = [
        ("AC1", "convexity of HQC, sign change of LOG", ac1_convexity, Duration::from_secs(1)),
        ("AC2", "GFT round trip on 50-node graphs", ac2_gft_round_trip, Duration::from_secs(5)),
        ("AC3", "noiseless recovery below -100 dB", ac3_noiseless_recovery, Duration::from_secs(1)),
        ("AC4", "step-size bound dichotomy", ac4_step_switch, Duration::from_secs(120)),
        ("AC5", "steady-state MSD prediction", ac5_steady_state_prediction, Duration::from_secs(120)),
        ("AC6", "robustness ordering", ac6_robustness, Duration::from_secs(300)),
        ("AC7", "convergence-rate ordering", ac7_convergence_rate, Duration::from_secs(300)),
        ("AC8", "complexity report", ac8_complexity, Duration::from_secs(1)),
        ("AC9", "determinism", ac9_determinism, Duration::from_secs(300)),
        ("AC10", "moment oracles", ac10_moments, Duration::from_secs(60)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, f, limit) in criteria {
        if !filter.is_empty() && !filter.iter().any(|x| id.eq_ignore_ascii_case(x)) {
            continue;
        }
        let t = Instant::now();
        let o = f();
        let elapsed = t.elapsed();
        let pass = o.pass && elapsed < limit;
        if !pass {
            failed += 1;
        }
        println!(
            "{} {id} {name}: {} [{:.2}s, limit {}s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
