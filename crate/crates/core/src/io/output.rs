//! Result files. Floats are written with Rust's shortest round-trip
//! formatting, so CSV values parse back to the identical `f64`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::Serialize;

use crate::algorithms::AlgorithmSpec;
use crate::error::Result;
use crate::experiments::{crossing_from_steady_state, AlgorithmCurve, LearningCurve, ReferenceRule, SweepPoint, ThresholdCrossing};

pub const CURVE_HEADER: &str = "iteration,msd_mean_db,band_lower_db,band_upper_db,msd_mean_linear,msd_std_linear";

/// Convergence threshold factor applied to the steady-state level.
pub const CROSSING_FACTOR: f64 = 1.03;

pub fn curve_csv(curve: &LearningCurve) -> String {
    let mut out = String::with_capacity(64 * (curve.len() + 1));
    out.push_str(CURVE_HEADER);
    out.push('\n');
    for i in 0..curve.len() {
        let _ = writeln!(
            out,
            "{i},{},{},{},{},{}",
            curve.msd_mean_db[i],
            curve.band_lower_db[i],
            curve.band_upper_db[i],
            curve.msd_mean_linear[i],
            curve.msd_std_linear[i]
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmSummary {
    pub name: String,
    pub file: String,
    pub spec: AlgorithmSpec,
    pub trials: usize,
    pub iterations: usize,
    pub steady_state_linear: f64,
    pub steady_state_db: f64,
    pub last_quarter_db: f64,
    pub crossing: ThresholdCrossing,
}

pub fn summarize(result: &AlgorithmCurve) -> AlgorithmSummary {
    let c = &result.curve;
    AlgorithmSummary {
        name: result.spec.display_name(),
        file: curve_file_name(&result.spec),
        spec: result.spec.clone(),
        trials: c.trials,
        iterations: c.len(),
        steady_state_linear: c.steady_state_linear(),
        steady_state_db: c.steady_state_db(),
        last_quarter_db: c.last_quarter_db(),
        crossing: crossing_from_steady_state(c, CROSSING_FACTOR, ReferenceRule::LinearFactor),
    }
}

pub fn curve_file_name(spec: &AlgorithmSpec) -> String {
    format!("curve_{}.csv", spec.slug())
}

/// Writes one curve CSV per algorithm and `summary.json`; returns the paths
/// written, in order.
pub fn write_run_outputs(dir: &Path, results: &[AlgorithmCurve]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(results.len() + 1);
    for r in results {
        let path = dir.join(curve_file_name(&r.spec));
        std::fs::write(&path, curve_csv(&r.curve))?;
        written.push(path);
    }
    let summary: Vec<AlgorithmSummary> = results.iter().map(summarize).collect();
    let path = dir.join("summary.json");
    std::fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")?;
    written.push(path);
    Ok(written)
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut out = String::from("tau,mu,unstable,steady_state_linear,steady_state_db,crossing_iteration\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            opt(p.tau),
            p.mu,
            p.unstable,
            opt(p.steady_state_linear),
            opt(p.steady_state_db),
            p.crossing_iteration.map_or(String::new(), |i| i.to_string())
        );
    }
    out
}

/// `t,node_id,true,estimated`, one row per time step and node.
pub fn prediction_csv(node_ids: &[String], truth: &[DVector<f64>], estimates: &[DVector<f64>]) -> String {
    let mut out = String::from("t,node_id,true,estimated\n");
    for (t, (x, xh)) in truth.iter().zip(estimates).enumerate() {
        for (k, id) in node_ids.iter().enumerate() {
            let _ = writeln!(out, "{t},{id},{},{}", x[k], xh[k]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_csv_round_trips_exactly() {
        let runs = vec![vec![0.1, 1.0 / 3.0, 2e-17, 12345.678901234567], vec![0.3, 0.7, 1e-300, 1.0]];
        let c = LearningCurve::from_trials(&runs).unwrap();
        let text = curve_csv(&c);
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>().join(","), CURVE_HEADER);
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.unwrap();
            assert_eq!(rec[0].parse::<usize>().unwrap(), i);
            assert_eq!(rec[1].parse::<f64>().unwrap(), c.msd_mean_db[i]);
            assert_eq!(rec[2].parse::<f64>().unwrap(), c.band_lower_db[i]);
            assert_eq!(rec[3].parse::<f64>().unwrap(), c.band_upper_db[i]);
            assert_eq!(rec[4].parse::<f64>().unwrap(), c.msd_mean_linear[i]);
            assert_eq!(rec[5].parse::<f64>().unwrap(), c.msd_std_linear[i]);
        }
    }

    #[test]
    fn prediction_rows() {
        let ids = vec!["a".to_string(), "b".to_string()];
        let x = vec![DVector::from_vec(vec![1.0, 2.0])];
        let xh = vec![DVector::from_vec(vec![1.5, 2.5])];
        assert_eq!(prediction_csv(&ids, &x, &xh), "t,node_id,true,estimated\n0,a,1,1.5\n0,b,2,2.5\n");
    }

    #[test]
    fn sweep_rows_leave_unstable_blank() {
        let p = SweepPoint {
            tau: Some(2.0),
            mu: 3.0,
            unstable: true,
            steady_state_linear: None,
            steady_state_db: None,
            crossing_iteration: None,
        };
        assert!(sweep_csv(&[p]).ends_with("2,3,true,,,\n"));
    }
}
