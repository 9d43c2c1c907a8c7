//! Shared inputs for the benchmarks.

use pairdiag_core::sim::{gen_paired_bernoulli, GeneratorSpec};
use pairdiag_core::ScoreMatrix;

/// A ten-model binary matrix with `n` items and adjacent gaps of one point,
/// optionally labelled with `clusters` round-robin groups.
pub fn synthetic_matrix(n: usize, clusters: Option<usize>) -> ScoreMatrix {
    let columns: Vec<Vec<f64>> = (0..10)
        .map(|m| {
            let spec = GeneratorSpec {
                p: 0.55 + 0.01 * m as f64,
                delta: 0.0,
                rho_z: 0.6,
                n,
                seed: 1000 + m as u64,
            };
            gen_paired_bernoulli(&spec).expect("valid spec").0
        })
        .collect();
    let names = (0..10).map(|m| format!("m{m}")).collect();
    let matrix = ScoreMatrix::from_columns(names, columns).expect("rectangular");
    match clusters {
        Some(k) => matrix
            .with_clusters(Some((0..n).map(|i| format!("c{}", i % k)).collect()))
            .expect("one label per item"),
        None => matrix,
    }
}
