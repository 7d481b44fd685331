//! The spatial Markov chain, the auxiliary uniform type chain, their
//! independent product, and empirical pair measures of product paths.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::typegraph::{TypeGraph, TypePairMeasure};

/// Irreducible row-stochastic transition matrix on a finite site set
/// `0..n_sites`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialChain {
    n_sites: usize,
    p: Vec<f64>, // dense row-major
}

const ROW_SUM_TOL: f64 = 1e-12;

impl SpatialChain {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("empty transition matrix".into()));
        }
        let mut p = Vec::with_capacity(n * n);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "row {r} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                if v < 0.0 || !v.is_finite() {
                    return Err(Error::NegativeEntry { row: r, col: c });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::RowNotStochastic { row: r, sum });
            }
            p.extend_from_slice(row);
        }
        let support: Vec<Vec<bool>> = (0..n)
            .map(|i| (0..n).map(|j| p[i * n + j] > 0.0).collect())
            .collect();
        if !crate::numeric::is_irreducible(&support) {
            return Err(Error::NotIrreducible);
        }
        Ok(SpatialChain { n_sites: n, p })
    }

    /// The one-site chain that drops migration.
    pub fn trivial() -> Self {
        SpatialChain {
            n_sites: 1,
            p: vec![1.0],
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.p[x * self.n_sites + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.p[x * self.n_sites..(x + 1) * self.n_sites]
    }

    /// Stationary distribution, solved from the balance equations
    /// (works for periodic chains too).
    pub fn stationary(&self) -> Vec<f64> {
        stationary_of_kernel(self.n_sites, |x, y| self.prob(x, y))
    }
}

/// Stationary distribution of an irreducible kernel by replacing one
/// balance equation with normalization and solving the linear system.
pub fn stationary_of_kernel(n: usize, kernel: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    // rows 0..n-1: (K^T - I) pi = 0; last row: normalization
    let mut a: Vec<Vec<f64>> = (0..n - 1)
        .map(|i| {
            (0..n)
                .map(|j| kernel(j, i) - if i == j { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    a.push(vec![1.0; n]);
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    crate::numeric::solve_linear(&a, &b, 1e-13)
        .expect("irreducible kernel has a unique stationary distribution")
}

/// Uniform-on-out-neighbors transition matrix on types:
/// `p_ij = 1{(i,j) edge} / outdeg(i)`.
pub fn type_kernel(g: &TypeGraph) -> Vec<Vec<f64>> {
    let n = g.n_types();
    (0..n)
        .map(|i| {
            let d = g.outdeg(i) as f64;
            (0..n)
                .map(|j| if g.has_edge(i, j) { 1.0 / d } else { 0.0 })
                .collect()
        })
        .collect()
}

/// A trajectory of the product chain: types move by the uniform type
/// kernel, sites by the spatial chain, independently.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductPath {
    steps: Vec<(usize, usize)>,
}

impl ProductPath {
    pub fn new(steps: Vec<(usize, usize)>) -> Self {
        ProductPath { steps }
    }

    pub fn steps(&self) -> &[(usize, usize)] {
        &self.steps
    }

    /// Number of transitions (one less than the number of states).
    pub fn n_transitions(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn is_closed(&self) -> bool {
        self.steps.len() > 1 && self.steps.first() == self.steps.last()
    }

    /// Every type step must be an edge and every site step must have
    /// positive transition probability. Sampled paths satisfy this by
    /// construction; hand-built ones can be checked here.
    pub fn validate(&self, g: &TypeGraph, chain: &SpatialChain) -> Result<()> {
        for (k, pair) in self.steps.windows(2).enumerate() {
            let ((i, x), (j, y)) = (pair[0], pair[1]);
            if !g.has_edge(i, j) {
                return Err(Error::PreconditionViolated(format!(
                    "path step {k} uses non-edge ({i}, {j})"
                )));
            }
            if chain.prob(x, y) == 0.0 {
                return Err(Error::PreconditionViolated(format!(
                    "path step {k} moves {x} -> {y} with probability 0"
                )));
            }
        }
        Ok(())
    }
}

/// Sample `n` steps of the product chain from `start`, deterministically in
/// the seed. Type and site components are drawn independently.
pub fn sample_product_path(
    g: &TypeGraph,
    chain: &SpatialChain,
    start: (usize, usize),
    n: usize,
    seed: u64,
) -> ProductPath {
    let mut rng = SplitMix64::new(seed);
    let succ: Vec<Vec<usize>> = (0..g.n_types())
        .map(|i| g.successors(i).collect())
        .collect();
    let (mut t, mut x) = start;
    let mut steps = Vec::with_capacity(n + 1);
    steps.push((t, x));
    for _ in 0..n {
        t = succ[t][rng.next_index(succ[t].len())];
        x = rng.next_categorical(chain.row(x));
        steps.push((t, x));
    }
    ProductPath::new(steps)
}

/// Probability measure on ordered pairs of (type, site) states with its
/// marginal projections cached. Shift invariant exactly when built from a
/// closed path; open paths leave an O(1/n) boundary defect which is kept
/// and flagged rather than rejected.
#[derive(Debug, Clone)]
pub struct PairMeasure {
    n_types: usize,
    n_sites: usize,
    weights: Vec<f64>, // dense (n_types*n_sites)^2, row-major over flat states
    nu_ijx: Vec<f64>,  // projection on (i, j, x)
    nu_ix: Vec<f64>,   // projection on (i, x)
    nu_ij: Vec<f64>,   // projection on (i, j)
    nu_i: Vec<f64>,    // projection on i
    closed: bool,
}

impl PairMeasure {
    pub fn from_weights(n_types: usize, n_sites: usize, weights: Vec<f64>) -> Self {
        let s = n_types * n_sites;
        assert_eq!(weights.len(), s * s, "pair measure dimension mismatch");
        let mut m = PairMeasure {
            n_types,
            n_sites,
            weights,
            nu_ijx: vec![0.0; n_types * n_types * n_sites],
            nu_ix: vec![0.0; s],
            nu_ij: vec![0.0; n_types * n_types],
            nu_i: vec![0.0; n_types],
            closed: false,
        };
        m.recompute_projections();
        m.closed = m.marginal_gap() < 1e-12;
        m
    }

    fn recompute_projections(&mut self) {
        let (t, s) = (self.n_types, self.n_sites);
        self.nu_ijx.iter_mut().for_each(|v| *v = 0.0);
        self.nu_ix.iter_mut().for_each(|v| *v = 0.0);
        self.nu_ij.iter_mut().for_each(|v| *v = 0.0);
        self.nu_i.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..t {
            for x in 0..s {
                for j in 0..t {
                    for y in 0..s {
                        let w = self.weight((i, x), (j, y));
                        self.nu_ijx[(i * t + j) * s + x] += w;
                        self.nu_ix[i * s + x] += w;
                        self.nu_ij[i * t + j] += w;
                        self.nu_i[i] += w;
                    }
                }
            }
        }
    }

    #[inline]
    pub fn flat(&self, state: (usize, usize)) -> usize {
        state.0 * self.n_sites + state.1
    }

    pub fn weight(&self, from: (usize, usize), to: (usize, usize)) -> f64 {
        let s = self.n_types * self.n_sites;
        self.weights[self.flat(from) * s + self.flat(to)]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_types(&self) -> usize {
        self.n_types
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// ν̄(i, j, x) = Σ_y ν((i,x),(j,y)).
    pub fn nu_ijx(&self, i: usize, j: usize, x: usize) -> f64 {
        self.nu_ijx[(i * self.n_types + j) * self.n_sites + x]
    }

    /// ν̄(i, x) = Σ_j ν̄(i, j, x).
    pub fn nu_ix(&self, i: usize, x: usize) -> f64 {
        self.nu_ix[i * self.n_sites + x]
    }

    /// ν̄(i, j) = Σ_x ν̄(i, j, x).
    pub fn nu_ij(&self, i: usize, j: usize) -> f64 {
        self.nu_ij[i * self.n_types + j]
    }

    /// ν̄(i) = Σ_j ν̄(i, j).
    pub fn nu_i(&self, i: usize) -> f64 {
        self.nu_i[i]
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Exactly shift invariant (true for closed paths).
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// L1 gap between first- and second-coordinate marginals on the
    /// product state space; 2/n for an open length-n path.
    pub fn marginal_gap(&self) -> f64 {
        let s = self.n_types * self.n_sites;
        let mut gap = 0.0;
        for a in 0..s {
            let row: f64 = (0..s).map(|b| self.weights[a * s + b]).sum();
            let col: f64 = (0..s).map(|b| self.weights[b * s + a]).sum();
            gap += (row - col).abs();
        }
        gap
    }

    /// The marginal on type pairs, as a plain dense table.
    pub fn type_marginal_weights(&self) -> Vec<f64> {
        self.nu_ij.clone()
    }

    /// The type marginal as a validated `TypePairMeasure`.
    pub fn type_marginal(&self, g: &TypeGraph) -> Result<TypePairMeasure> {
        TypePairMeasure::new(g, self.nu_ij.clone())
    }
}

/// Empirical pair measure `ν_n = (1/n) Σ_l δ((state_{l-1}), (state_l))` of a
/// product path.
pub fn empirical_pair_measure(
    n_types: usize,
    n_sites: usize,
    path: &ProductPath,
) -> Result<PairMeasure> {
    let n = path.n_transitions();
    if n == 0 {
        return Err(Error::EmptyPath);
    }
    let s = n_types * n_sites;
    let mut weights = vec![0.0; s * s];
    let w = 1.0 / n as f64;
    for pair in path.steps().windows(2) {
        let a = pair[0].0 * n_sites + pair[0].1;
        let b = pair[1].0 * n_sites + pair[1].1;
        weights[a * s + b] += w;
    }
    Ok(PairMeasure::from_weights(n_types, n_sites, weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cycle() -> TypeGraph {
        TypeGraph::build(&[(0, 1, 1.0), (1, 0, 1.0)]).unwrap()
    }

    #[test]
    fn validates_stochastic_rows() {
        assert!(matches!(
            SpatialChain::new(vec![vec![0.5, 0.6], vec![0.5, 0.5]]),
            Err(Error::RowNotStochastic { row: 0, .. })
        ));
        assert!(matches!(
            SpatialChain::new(vec![vec![1.5, -0.5], vec![0.5, 0.5]]),
            Err(Error::NegativeEntry { row: 0, col: 1 })
        ));
        assert_eq!(
            SpatialChain::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]),
            Err(Error::NotIrreducible)
        );
        assert!(SpatialChain::new(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).is_ok());
    }

    #[test]
    fn type_kernel_rows() {
        let g = TypeGraph::build(&[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let k = type_kernel(&g);
        assert_eq!(k[0], vec![0.5, 0.5]);
        assert_eq!(k[1], vec![1.0, 0.0]);
        let k = type_kernel(&two_cycle());
        assert_eq!(k, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let k = type_kernel(&TypeGraph::build(&[(0, 0, 2.0)]).unwrap());
        assert_eq!(k, vec![vec![1.0]]);
    }

    #[test]
    fn type_kernel_rows_sum_to_one_rationally() {
        // each entry is exactly 1/outdeg as an f64, outdeg entries per row
        let g = TypeGraph::build(&[
            (0, 0, 1.0),
            (0, 1, 1.0),
            (0, 2, 1.0),
            (1, 0, 1.0),
            (1, 2, 1.0),
            (2, 1, 1.0),
        ])
        .unwrap();
        let k = type_kernel(&g);
        for (i, row) in k.iter().enumerate() {
            let d = g.outdeg(i);
            let nonzero = row.iter().filter(|&&v| v > 0.0).count();
            assert_eq!(nonzero, d);
            for &v in row.iter().filter(|&&v| v > 0.0) {
                assert_eq!(v, 1.0 / d as f64);
            }
            // d * (1/d) = 1 in exact rational arithmetic
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn path_of_length_zero_is_the_start() {
        let g = two_cycle();
        let chain = SpatialChain::trivial();
        let p = sample_product_path(&g, &chain, (1, 0), 0, 5);
        assert_eq!(p.steps(), &[(1, 0)]);
    }

    #[test]
    fn two_cycle_types_are_forced() {
        let g = two_cycle();
        let chain = SpatialChain::trivial();
        let p = sample_product_path(&g, &chain, (0, 0), 3, 9);
        let types: Vec<usize> = p.steps().iter().map(|s| s.0).collect();
        assert_eq!(types, vec![0, 1, 0, 1]);
    }

    #[test]
    fn path_sampling_is_deterministic_in_seed() {
        let g = TypeGraph::build(&[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let chain = SpatialChain::new(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let a = sample_product_path(&g, &chain, (0, 0), 50, 123);
        let b = sample_product_path(&g, &chain, (0, 0), 50, 123);
        assert_eq!(a, b);
        let c = sample_product_path(&g, &chain, (0, 0), 50, 124);
        assert_ne!(a, c);
        a.validate(&g, &chain).unwrap();
    }

    #[test]
    fn hand_built_paths_are_validated() {
        let g = TypeGraph::build(&[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let chain = SpatialChain::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let ok = ProductPath::new(vec![(0, 0), (1, 1), (0, 0)]);
        ok.validate(&g, &chain).unwrap();
        let bad_type = ProductPath::new(vec![(0, 0), (0, 1)]);
        assert!(bad_type.validate(&g, &chain).is_err());
        let bad_site = ProductPath::new(vec![(0, 0), (1, 0)]);
        assert!(bad_site.validate(&g, &chain).is_err());
    }

    #[test]
    fn empirical_frequencies_match_product_kernel() {
        let g = TypeGraph::build(&[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let chain = SpatialChain::new(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let kernel = type_kernel(&g);
        let n = 100_000;
        let path = sample_product_path(&g, &chain, (0, 0), n, 2718);
        // count transitions out of each (type, site) state
        let s = g.n_types() * chain.n_sites();
        let mut visits = vec![0usize; s];
        let mut counts = vec![vec![0usize; s]; s];
        for w in path.steps().windows(2) {
            let a = w[0].0 * chain.n_sites() + w[0].1;
            let b = w[1].0 * chain.n_sites() + w[1].1;
            visits[a] += 1;
            counts[a][b] += 1;
        }
        for (a, &na) in visits.iter().enumerate() {
            if na < 1000 {
                continue;
            }
            let (i, x) = (a / chain.n_sites(), a % chain.n_sites());
            for (b, &count) in counts[a].iter().enumerate() {
                let (j, y) = (b / chain.n_sites(), b % chain.n_sites());
                let p = kernel[i][j] * chain.prob(x, y);
                let hat = count as f64 / na as f64;
                let sigma = (p * (1.0 - p) / na as f64).sqrt();
                assert!(
                    (hat - p).abs() <= 3.0 * sigma + 1e-12,
                    "({i},{x})->({j},{y}): hat {hat} vs {p}"
                );
            }
        }
    }

    #[test]
    fn closed_path_measure_is_exactly_shift_invariant() {
        // (a, b, a) with a = (0,0), b = (1,0)
        let path = ProductPath::new(vec![(0, 0), (1, 0), (0, 0)]);
        let nu = empirical_pair_measure(2, 1, &path).unwrap();
        assert!(nu.is_closed());
        assert_eq!(nu.weight((0, 0), (1, 0)), 0.5);
        assert_eq!(nu.weight((1, 0), (0, 0)), 0.5);
        assert_eq!(nu.marginal_gap(), 0.0);
    }

    #[test]
    fn open_path_measure_carries_boundary_defect() {
        // (a, b, c) distinct on 3 types, single site
        let path = ProductPath::new(vec![(0, 0), (1, 0), (2, 0)]);
        let nu = empirical_pair_measure(3, 1, &path).unwrap();
        assert!(!nu.is_closed());
        assert_eq!(nu.weight((0, 0), (1, 0)), 0.5);
        assert_eq!(nu.weight((1, 0), (2, 0)), 0.5);
        // row marginal has 1/2 at a, col marginal has 1/2 at c
        assert!((nu.marginal_gap() - 1.0).abs() < 1e-15); // 2/n with n = 2
    }

    #[test]
    fn long_path_marginal_gap_is_at_most_two_over_n() {
        let g = TypeGraph::build(&[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let chain = SpatialChain::new(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let n = 1000;
        let path = sample_product_path(&g, &chain, (0, 0), n, 5);
        let nu = empirical_pair_measure(2, 2, &path).unwrap();
        assert!(nu.marginal_gap() <= 2.0 / n as f64 + 1e-12);
        assert!((nu.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_identities_hold() {
        let g = TypeGraph::build(&[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let chain = SpatialChain::new(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let path = sample_product_path(&g, &chain, (0, 0), 500, 77);
        let nu = empirical_pair_measure(2, 2, &path).unwrap();
        let (t, s) = (2, 2);
        for i in 0..t {
            for j in 0..t {
                for x in 0..s {
                    let direct: f64 = (0..s).map(|y| nu.weight((i, x), (j, y))).sum();
                    assert!((nu.nu_ijx(i, j, x) - direct).abs() < 1e-12);
                }
            }
        }
        for i in 0..t {
            for x in 0..s {
                let via: f64 = (0..t).map(|j| nu.nu_ijx(i, j, x)).sum();
                assert!((nu.nu_ix(i, x) - via).abs() < 1e-12);
            }
            for j in 0..t {
                let via: f64 = (0..s).map(|x| nu.nu_ijx(i, j, x)).sum();
                assert!((nu.nu_ij(i, j) - via).abs() < 1e-12);
            }
            let via: f64 = (0..t).map(|j| nu.nu_ij(i, j)).sum();
            assert!((nu.nu_i(i) - via).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_path_is_rejected() {
        let path = ProductPath::new(vec![(0, 0)]);
        assert!(matches!(
            empirical_pair_measure(1, 1, &path),
            Err(Error::EmptyPath)
        ));
    }

    #[test]
    fn stationary_distribution_balances() {
        let chain = SpatialChain::new(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let pi = chain.stationary();
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for y in 0..2 {
            let lhs: f64 = (0..2).map(|x| pi[x] * chain.prob(x, y)).sum();
            assert!((lhs - pi[y]).abs() < 1e-12);
        }
        // periodic chain still has the uniform stationary law
        let per = SpatialChain::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let pi = per.stationary();
        assert!((pi[0] - 0.5).abs() < 1e-12 && (pi[1] - 0.5).abs() < 1e-12);
    }
}
