//! Per-iteration operation counts of each update rule.
//!
//! Counts cover only the correction term of the update (for HQC,
//! `U_F U_F^T G(e) e`). Matrix products follow the usual convention: a
//! `T1 x T2` by `T2 x T3` product costs `T1 T2 T3` multiplications and
//! `T1 T3 (T2 - 1)` additions; a dense inverse costs `F^3 / 3`.

use serde::{Deserialize, Serialize};

use crate::algorithms::AlgorithmKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperationCounts {
    /// Multiplications and divisions.
    pub multiplications: u128,
    /// Additions and subtractions.
    pub additions: u128,
    pub square_roots: u128,
    pub exponentials: u128,
    pub powers: u128,
    /// Direct matrix inversion, `F^3 / 3`.
    pub inversion: f64,
}

impl OperationCounts {
    /// Unweighted sum of every operation.
    pub fn total(&self) -> f64 {
        (self.multiplications + self.additions + self.square_roots + self.exponentials + self.powers) as f64
            + self.inversion
    }
}

pub fn operation_counts(kind: AlgorithmKind, n: u128, f: u128, s: u128) -> OperationCounts {
    let zero = OperationCounts {
        multiplications: 0,
        additions: 0,
        square_roots: 0,
        exponentials: 0,
        powers: 0,
        inversion: 0.0,
    };
    // N^2 (F + 1) + 2N + S, shared by GMCC, LOG and HQC
    let weighted_mults = n * n * (f + 1) + 2 * n + s;
    match kind {
        AlgorithmKind::Lms => OperationCounts { multiplications: f * (s + n), additions: f * s + n * f - f - n, ..zero },
        AlgorithmKind::Nlms => OperationCounts {
            multiplications: (s + n) * (f * f + f),
            additions: f * f * (s + n - 1) + f * (s - 1) - n,
            inversion: (f as f64).powi(3) / 3.0,
            ..zero
        },
        AlgorithmKind::Mcc => OperationCounts {
            multiplications: n * n * (f + 1) + n + s,
            additions: n * (n * f - 1),
            exponentials: n,
            powers: n,
            ..zero
        },
        AlgorithmKind::Gmcc => OperationCounts {
            multiplications: weighted_mults,
            additions: n * (n * f - 1),
            exponentials: n,
            powers: 2 * n,
            ..zero
        },
        AlgorithmKind::Log => OperationCounts { multiplications: weighted_mults, additions: n * n * f, powers: n, ..zero },
        AlgorithmKind::Hqc => OperationCounts {
            multiplications: weighted_mults,
            additions: n * n * f,
            square_roots: n,
            powers: n,
            ..zero
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityEntry {
    pub algorithm: AlgorithmKind,
    pub counts: OperationCounts,
    pub total: f64,
    /// `100 * total / total(baseline)`.
    pub relative_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub n: u128,
    pub f: u128,
    pub s: u128,
    pub baseline: AlgorithmKind,
    pub entries: Vec<ComplexityEntry>,
}

impl ComplexityReport {
    pub fn entry(&self, kind: AlgorithmKind) -> &ComplexityEntry {
        self.entries.iter().find(|e| e.algorithm == kind).expect("every kind is reported")
    }
}

pub const ALL_KINDS: [AlgorithmKind; 6] = [
    AlgorithmKind::Lms,
    AlgorithmKind::Nlms,
    AlgorithmKind::Mcc,
    AlgorithmKind::Gmcc,
    AlgorithmKind::Log,
    AlgorithmKind::Hqc,
];

pub fn complexity_report(n: u128, f: u128, s: u128, baseline: AlgorithmKind) -> Result<ComplexityReport> {
    if n == 0 || f == 0 || s == 0 {
        return Err(Error::Input(format!("dimensions must be positive, got N = {n}, F = {f}, S = {s}")));
    }
    if f > n || s > n {
        return Err(Error::Input(format!("need F <= N and S <= N, got N = {n}, F = {f}, S = {s}")));
    }
    let base = operation_counts(baseline, n, f, s).total();
    let entries = ALL_KINDS
        .iter()
        .map(|&k| {
            let counts = operation_counts(k, n, f, s);
            let total = counts.total();
            ComplexityEntry { algorithm: k, counts, total, relative_percent: 100.0 * total / base }
        })
        .collect();
    Ok(ComplexityReport { n, f, s, baseline, entries })
}

/// Tally kept by [`counted_hqc_correction`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpTally {
    pub multiplications: u128,
    pub additions: u128,
    pub square_roots: u128,
    pub powers: u128,
}

/// Evaluates `U_F U_F^T G(e) e` with every scalar operation counted.
///
/// `error` is the full length-`N` vector `e = D_s (x_w - x_hat)`. Counting
/// convention: the projector `U_F U_F^T` is formed explicitly; `G(e)` costs a
/// square (power), a multiply by `tau`, an add, a square root and a division
/// on all `N` nodes; `G(e) e` multiplies only the `S` sampled entries; the
/// final projector-vector product is dense.
pub fn counted_hqc_correction(
    uf: &nalgebra::DMatrix<f64>,
    error: &nalgebra::DVector<f64>,
    sampled: &[usize],
    tau: f64,
    tally: &mut OpTally,
) -> nalgebra::DVector<f64> {
    let n = uf.nrows();
    let f = uf.ncols();
    let mut p = nalgebra::DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = uf[(i, 0)] * uf[(j, 0)];
            tally.multiplications += 1;
            for k in 1..f {
                acc += uf[(i, k)] * uf[(j, k)];
                tally.multiplications += 1;
                tally.additions += 1;
            }
            p[(i, j)] = acc;
        }
    }

    let mut g = nalgebra::DVector::zeros(n);
    for k in 0..n {
        let sq = error[k].powi(2);
        tally.powers += 1;
        let scaled = tau * sq;
        tally.multiplications += 1;
        let inner = 1.0 + scaled;
        tally.additions += 1;
        let root = inner.sqrt();
        tally.square_roots += 1;
        g[k] = 1.0 / root;
        tally.multiplications += 1;
    }

    let mut v = nalgebra::DVector::zeros(n);
    for &k in sampled {
        v[k] = g[k] * error[k];
        tally.multiplications += 1;
    }

    let mut out = nalgebra::DVector::zeros(n);
    for i in 0..n {
        let mut acc = p[(i, 0)] * v[0];
        tally.multiplications += 1;
        for j in 1..n {
            acc += p[(i, j)] * v[j];
            tally.multiplications += 1;
            tally.additions += 1;
        }
        out[i] = acc;
    }
    out
}
