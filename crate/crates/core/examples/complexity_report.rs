// Per-iteration operation counts at the size of a 205-station network, and
// the same count obtained by instrumenting the HQC correction on a toy case.

use gsp_hqc::algorithms::AlgorithmKind;
use gsp_hqc::graph::{SamplingSet, SpectralBasis};
use gsp_hqc::io::complexity::{complexity_report, counted_hqc_correction, operation_counts, OpTally};
use nalgebra::{DMatrix, DVector};

fn main() -> gsp_hqc::Result<()> {
    let report = complexity_report(205, 125, 130, AlgorithmKind::Log)?;
    println!("{:<10} {:>14} {:>14} {:>10}", "algorithm", "mult/div", "total", "% of LOG");
    for e in &report.entries {
        println!(
            "{:<10} {:>14} {:>14.1} {:>9.4}%",
            e.algorithm.name(),
            e.counts.multiplications,
            e.total,
            e.relative_percent
        );
    }

    let n = 6;
    let a = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 / (1.0 + i.abs_diff(j) as f64) });
    let basis = SpectralBasis::from_symmetric(&a)?.with_frequency_set(&[0, 1, 2])?;
    let sampling = SamplingSet::new(n, &[0, 2, 3, 5])?;
    let e = sampling.apply(&DVector::from_vec(vec![0.3, -1.0, 2.0, 0.1, -0.7, 1.5]))?;
    let mut tally = OpTally::default();
    counted_hqc_correction(basis.uf(), &e, sampling.indices(), 2.0, &mut tally);
    let formula = operation_counts(AlgorithmKind::Hqc, 6, 3, 4);
    println!(
        "instrumented HQC at N=6, F=3, S=4: {} mult/div, {} add (formula {} / {})",
        tally.multiplications, tally.additions, formula.multiplications, formula.additions
    );
    Ok(())
}
