//! Geographic graphs, the adjacency eigenbasis and graph sampling.
//!
//! Everything here is immutable once built. A [`SpectralBasis`] owns the full
//! orthonormal eigenvector matrix of a symmetric adjacency matrix together
//! with the currently selected frequency set `F`; the graph Fourier transform
//! and its inverse act through the `N x |F|` slice `U_F`.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius used by [`haversine_distance`], in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Singular values below this fraction of the largest do not count toward rank.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Number of reseeded attempts made by [`SamplingStrategy::RandomSeeded`].
pub const SAMPLING_RETRIES: u64 = 100;

/// Latitude/longitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeoPoint", into = "RawGeoPoint")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[derive(Serialize, Deserialize)]
struct RawGeoPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawGeoPoint> for GeoPoint {
    type Error = Error;
    fn try_from(raw: RawGeoPoint) -> Result<Self> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl From<GeoPoint> for RawGeoPoint {
    fn from(p: GeoPoint) -> Self {
        RawGeoPoint { lat: p.lat, lon: p.lon }
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::Input(format!("latitude {lat} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(Error::Input(format!("longitude {lon} outside [-180, 180]")));
        }
        Ok(Self { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

/// Great-circle distance in kilometres.
pub fn haversine_distance(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let half_dphi = (phi2 - phi1) / 2.0;
    let half_dlambda = (b.lon - a.lon).to_radians() / 2.0;
    // Each term is even in the sign of the half-difference, so swapping the
    // arguments reproduces the same bits.
    let h = half_dphi.sin().powi(2) + phi1.cos() * phi2.cos() * half_dlambda.sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.clamp(0.0, 1.0).sqrt().asin()
}

/// Gaussian kernel weight `exp(-d^2 / (2 theta^2))` for a distance `d`.
pub fn kernel_weight(distance_km: f64, theta_km: f64) -> f64 {
    (-(distance_km * distance_km) / (2.0 * theta_km * theta_km)).exp()
}

/// Undirected weighted graph stored as a dense symmetric adjacency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: DMatrix<f64>,
}

impl Graph {
    /// Wraps an adjacency matrix after checking it is square, symmetric,
    /// nonnegative and has a zero diagonal.
    pub fn from_adjacency(adjacency: DMatrix<f64>) -> Result<Self> {
        let n = adjacency.nrows();
        if n == 0 || adjacency.ncols() != n {
            return Err(Error::Input(format!(
                "adjacency must be a non-empty square matrix, got {}x{}",
                n,
                adjacency.ncols()
            )));
        }
        check_symmetric(&adjacency)?;
        for i in 0..n {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::Input(format!("adjacency diagonal entry {i} is nonzero")));
            }
            for j in 0..n {
                let a = adjacency[(i, j)];
                if !(a >= 0.0) || !a.is_finite() {
                    return Err(Error::Input(format!("adjacency entry ({i}, {j}) = {a} is not a finite nonnegative weight")));
                }
            }
        }
        Ok(Self { adjacency })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn edge_count(&self) -> usize {
        let n = self.node_count();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.adjacency[(i, j)] > 0.0)
            .count()
    }
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in i + 1..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::Input(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

/// Connects every point to its `k` nearest neighbours by haversine distance.
///
/// The neighbour relation is symmetrised by union: an edge exists when either
/// endpoint lists the other. Equal distances are broken by the lower node
/// index. Coincident distinct points get weight 1.
pub fn build_knn_graph(points: &[GeoPoint], k: usize, theta_km: f64) -> Result<Graph> {
    let n = points.len();
    if k == 0 {
        return Err(Error::Input("K must be positive".into()));
    }
    if k >= n {
        return Err(Error::Input(format!("K = {k} requires at least {} points, got {n}", k + 1)));
    }
    if !(theta_km > 0.0) || !theta_km.is_finite() {
        return Err(Error::Input(format!("theta must be positive, got {theta_km}")));
    }

    let mut dist = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let d = haversine_distance(&points[i], &points[j]);
            dist[(i, j)] = d;
            dist[(j, i)] = d;
        }
    }

    let mut adjacency = DMatrix::<f64>::zeros(n, n);
    let mut order: Vec<usize> = Vec::with_capacity(n - 1);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&a, &b| dist[(i, a)].total_cmp(&dist[(i, b)]).then(a.cmp(&b)));
        for &j in &order[..k] {
            let w = kernel_weight(dist[(i, j)], theta_km);
            adjacency[(i, j)] = w;
            adjacency[(j, i)] = w;
        }
    }
    Graph::from_adjacency(adjacency)
}

/// Eigendecomposition `A = U diag(lambda) U^T` plus a selected frequency set.
///
/// Eigenpairs are sorted by descending eigenvalue (ties keep the solver's
/// order) and each eigenvector is signed so its first non-negligible
/// component is positive. Frequency indices are 0-based positions in that
/// order and are kept ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    eigenvectors: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    freq_set: Vec<usize>,
    uf: DMatrix<f64>,
}

/// Decomposes the adjacency matrix of `graph`; the frequency set starts full.
pub fn spectral_decompose(graph: &Graph) -> Result<SpectralBasis> {
    SpectralBasis::from_symmetric(graph.adjacency())
}

impl SpectralBasis {
    /// Decomposes any real symmetric matrix.
    pub fn from_symmetric(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::Input("expected a non-empty square matrix".into()));
        }
        check_symmetric(a)?;
        let eig = a.clone().symmetric_eigen();

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            eig.eigenvalues[j]
                .partial_cmp(&eig.eigenvalues[i])
                .unwrap_or(Ordering::Equal)
                .then(i.cmp(&j))
        });

        let mut eigenvectors = DMatrix::<f64>::zeros(n, n);
        let mut eigenvalues = DVector::<f64>::zeros(n);
        for (dst, &src) in order.iter().enumerate() {
            let mut col = eig.eigenvectors.column(src).clone_owned();
            let pivot = col.iter().copied().find(|v| v.abs() > 1e-12).unwrap_or(0.0);
            if pivot < 0.0 {
                col.neg_mut();
            }
            eigenvectors.set_column(dst, &col);
            eigenvalues[dst] = eig.eigenvalues[src];
        }
        let freq_set: Vec<usize> = (0..n).collect();
        let uf = eigenvectors.clone();
        Ok(Self { eigenvectors, eigenvalues, freq_set, uf })
    }

    pub fn node_count(&self) -> usize {
        self.eigenvectors.nrows()
    }

    /// `|F|`, the number of selected frequencies.
    pub fn band_size(&self) -> usize {
        self.freq_set.len()
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn freq_set(&self) -> &[usize] {
        &self.freq_set
    }

    /// The `N x |F|` matrix of selected eigenvectors.
    pub fn uf(&self) -> &DMatrix<f64> {
        &self.uf
    }

    /// Restricts the basis to an explicit set of 0-based frequency indices.
    pub fn with_frequency_set(&self, indices: &[usize]) -> Result<Self> {
        let n = self.node_count();
        let mut set = indices.to_vec();
        set.sort_unstable();
        set.dedup();
        if set.is_empty() {
            return Err(Error::Input("frequency set must be non-empty".into()));
        }
        if set.len() != indices.len() {
            return Err(Error::Input("frequency set contains duplicates".into()));
        }
        if let Some(&bad) = set.iter().find(|&&i| i >= n) {
            return Err(Error::Input(format!("frequency index {bad} out of range for N = {n}")));
        }
        let uf = self.eigenvectors.select_columns(set.iter());
        Ok(Self {
            eigenvectors: self.eigenvectors.clone(),
            eigenvalues: self.eigenvalues.clone(),
            freq_set: set,
            uf,
        })
    }

    /// Keeps the `f_count` frequencies where the full GFT of `reference` has
    /// the largest magnitude; ties go to the lower index.
    pub fn select_frequency_set(&self, reference: &DVector<f64>, f_count: usize) -> Result<Self> {
        let n = self.node_count();
        check_len(reference, n, "reference signal")?;
        if f_count == 0 || f_count > n {
            return Err(Error::Input(format!("F_count = {f_count} must lie in 1..={n}")));
        }
        let spectrum = self.eigenvectors.tr_mul(reference);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| spectrum[j].abs().total_cmp(&spectrum[i].abs()).then(i.cmp(&j)));
        self.with_frequency_set(&order[..f_count])
    }

    /// `U_F^T x`. With the full frequency set this is the complete GFT.
    pub fn gft(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(x, self.node_count(), "vertex-domain signal")?;
        Ok(self.uf.tr_mul(x))
    }

    /// `U_F s`.
    pub fn igft(&self, s: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(s, self.band_size(), "spectral signal")?;
        Ok(&self.uf * s)
    }

    /// Orthogonal projection `U_F U_F^T x` onto the selected band.
    pub fn bandlimit_project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let s = self.gft(x)?;
        Ok(&self.uf * s)
    }

    /// The dense projector `U_F U_F^T`.
    pub fn band_projector(&self) -> DMatrix<f64> {
        &self.uf * self.uf.transpose()
    }
}

pub(crate) fn check_len(v: &DVector<f64>, expected: usize, what: &str) -> Result<()> {
    if v.len() != expected {
        return Err(Error::Input(format!("{what} has length {}, expected {expected}", v.len())));
    }
    Ok(())
}

/// Observed node subset `S`, equivalently the diagonal 0/1 matrix `D_s`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingSet {
    node_count: usize,
    indices: Vec<usize>,
}

impl SamplingSet {
    /// Builds a set from 0-based node indices; duplicates are rejected.
    pub fn new(node_count: usize, indices: &[usize]) -> Result<Self> {
        let mut set = indices.to_vec();
        set.sort_unstable();
        set.dedup();
        if set.len() != indices.len() {
            return Err(Error::Input("sampling set contains duplicates".into()));
        }
        if let Some(&bad) = set.iter().find(|&&i| i >= node_count) {
            return Err(Error::Input(format!("sampled node {bad} out of range for N = {node_count}")));
        }
        Ok(Self { node_count, indices: set })
    }

    pub fn full(node_count: usize) -> Self {
        Self { node_count, indices: (0..node_count).collect() }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.indices.binary_search(&node).is_ok()
    }

    /// Diagonal of `D_s` as a 0/1 vector.
    pub fn mask(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.node_count);
        for &i in &self.indices {
            m[i] = 1.0;
        }
        m
    }

    /// `D_s` materialised as a dense diagonal matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.mask())
    }

    /// `D_s x`: zero at unsampled nodes.
    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_len(x, self.node_count, "signal")?;
        let mut out = DVector::zeros(self.node_count);
        for &i in &self.indices {
            out[i] = x[i];
        }
        Ok(out)
    }

    /// Whether `rank(D_s U_F) = |F|`, so a bandlimited signal is determined by
    /// its samples.
    pub fn is_recoverable(&self, basis: &SpectralBasis) -> bool {
        sampled_rows(basis, &self.indices)
            .map(|rows| numerical_rank(&rows) == basis.band_size())
            .unwrap_or(false)
    }
}

/// How [`build_sampling_set`] chooses nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingStrategy {
    /// Uniform subset from a seeded stream, reseeding with `seed + attempt`
    /// until the subset is recoverable.
    RandomSeeded,
    /// Greedily adds the node that maximises the smallest singular value of
    /// the sampled rows of `U_F`.
    GreedyMinSv,
}

pub fn build_sampling_set(
    basis: &SpectralBasis,
    sample_count: usize,
    strategy: SamplingStrategy,
    seed: u64,
) -> Result<SamplingSet> {
    let n = basis.node_count();
    let f = basis.band_size();
    if sample_count < f {
        return Err(Error::Input(format!(
            "sample_count = {sample_count} is below F_count = {f}; rank(D_s U_F) cannot reach F"
        )));
    }
    if sample_count > n {
        return Err(Error::Input(format!("sample_count = {sample_count} exceeds N = {n}")));
    }

    match strategy {
        SamplingStrategy::RandomSeeded => {
            for attempt in 0..SAMPLING_RETRIES {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
                let picked = rand::seq::index::sample(&mut rng, n, sample_count).into_vec();
                let set = SamplingSet::new(n, &picked)?;
                if set.is_recoverable(basis) {
                    return Ok(set);
                }
            }
            Err(Error::Construction(format!(
                "no recoverable random sampling set of size {sample_count} after {SAMPLING_RETRIES} seeds starting at {seed}"
            )))
        }
        SamplingStrategy::GreedyMinSv => {
            let mut chosen: Vec<usize> = Vec::with_capacity(sample_count);
            while chosen.len() < sample_count {
                let mut best: Option<(usize, f64)> = None;
                for cand in (0..n).filter(|c| !chosen.contains(c)) {
                    let mut trial = chosen.clone();
                    trial.push(cand);
                    let rows = sampled_rows(basis, &trial)?;
                    let score = smallest_singular_value(&rows);
                    if best.is_none_or(|(_, s)| score > s) {
                        best = Some((cand, score));
                    }
                }
                chosen.push(best.expect("candidates remain while |S| < N").0);
            }
            let set = SamplingSet::new(n, &chosen)?;
            if set.is_recoverable(basis) {
                Ok(set)
            } else {
                Err(Error::Construction(format!(
                    "greedy sampling of size {sample_count} is not recoverable for F = {f}"
                )))
            }
        }
    }
}

fn sampled_rows(basis: &SpectralBasis, indices: &[usize]) -> Result<DMatrix<f64>> {
    if indices.is_empty() {
        return Err(Error::Input("empty sampling set".into()));
    }
    Ok(basis.uf().select_rows(indices.iter()))
}

fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    m.clone().svd(false, false).singular_values
}

fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    singular_values(m).min()
}

/// Number of singular values above `RANK_TOLERANCE * sigma_max`.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = singular_values(m);
    let max = sv.max();
    if max <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOLERANCE * max).count()
}
