// Build a geographic k-NN graph, take its adjacency eigenbasis, pick the
// frequencies that carry a temperature-like field and choose a sampling set
// from which that band can be recovered.

use gsp_hqc::experiments::{synthetic_points, temperature_field};
use gsp_hqc::graph::{
    build_knn_graph, build_sampling_set, haversine_distance, spectral_decompose, SamplingStrategy,
};

fn main() -> gsp_hqc::Result<()> {
    let stations = synthetic_points(30, (-30.0, -5.0), (-70.0, -40.0), 42)?;
    println!(
        "first two stations are {:.1} km apart",
        haversine_distance(&stations[0], &stations[1])
    );

    let graph = build_knn_graph(&stations, 5, 500.0)?;
    println!("{} nodes, {} edges", graph.node_count(), graph.edge_count());

    let full = spectral_decompose(&graph)?;
    println!("largest adjacency eigenvalues: {:.3?}", &full.eigenvalues().as_slice()[..4]);

    let field = temperature_field(&stations);
    let spectrum = full.gft(&field)?;
    let energy: f64 = spectrum.norm_squared();

    let basis = full.select_frequency_set(&field, 8)?;
    let truth = basis.bandlimit_project(&field)?;
    let kept = basis.gft(&truth)?.norm_squared() / energy;
    println!("band {:?} keeps {:.4} of the signal energy", basis.freq_set(), kept);

    for strategy in [SamplingStrategy::RandomSeeded, SamplingStrategy::GreedyMinSv] {
        let sampling = build_sampling_set(&basis, 12, strategy, 7)?;
        println!(
            "{strategy:?}: nodes {:?}, recoverable = {}",
            sampling.indices(),
            sampling.is_recoverable(&basis)
        );
    }

    let back = full.igft(&spectrum)?;
    println!("GFT round-trip error: {:.2e}", (back - &field).norm());
    Ok(())
}
