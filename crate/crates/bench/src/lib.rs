//! Shared instance builders for the benchmark suite.

use mtbrw_core::chain::SpatialChain;
use mtbrw_core::rng::SplitMix64;
use mtbrw_core::typegraph::TypeGraph;

/// Dense random graph on `n` types with random weights in (0, 4).
pub fn dense_graph(n: usize, seed: u64) -> TypeGraph {
    let mut rng = SplitMix64::new(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            edges.push((i, j, 0.05 + 3.95 * rng.next_f64()));
        }
    }
    TypeGraph::build(&edges).unwrap()
}

/// Random irreducible chain on `s` sites.
pub fn dense_chain(s: usize, seed: u64) -> SpatialChain {
    if s == 1 {
        return SpatialChain::trivial();
    }
    let mut rng = SplitMix64::new(seed);
    let rows: Vec<Vec<f64>> = (0..s)
        .map(|_| {
            let mut row: Vec<f64> = (0..s).map(|_| 0.05 + rng.next_f64()).collect();
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= total);
            let head: f64 = row[..s - 1].iter().sum();
            row[s - 1] = 1.0 - head;
            row
        })
        .collect();
    SpatialChain::new(rows).unwrap()
}
