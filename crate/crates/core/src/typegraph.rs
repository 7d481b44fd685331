//! The finite directed type graph, its simple cycles, and shift-invariant
//! pair measures on the type set.
//!
//! Simple cycles matter because they are exactly the extreme points of the
//! convex set of pair measures with equal marginals; the leading growth
//! exponent is a maximum of edge-weight means over them, and arbitrary
//! shift-invariant measures peel into convex cycle mixtures.

use crate::error::{Error, Result};

/// Directed graph on types `0..n_types` with a positive weight `rho` per
/// edge. Every type has at least one outgoing edge and the graph is
/// connected when edge directions are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeGraph {
    n_types: usize,
    edges: Vec<(usize, usize)>,
    rho: Vec<f64>,       // parallel to `edges`
    rho_dense: Vec<f64>, // n_types * n_types, 0 off the edge set
    outdeg: Vec<usize>,
    strongly_connected: bool,
}

impl TypeGraph {
    /// Build and validate a graph from `(source, target, rho)` triples.
    /// The type set is `0..=max index` seen in the list.
    pub fn build(edge_list: &[(usize, usize, f64)]) -> Result<Self> {
        if edge_list.is_empty() {
            return Err(Error::DanglingType(0));
        }
        let n_types = edge_list.iter().map(|&(i, j, _)| i.max(j)).max().unwrap() + 1;
        let mut rho_dense = vec![0.0; n_types * n_types];
        let mut edges = Vec::with_capacity(edge_list.len());
        let mut rho = Vec::with_capacity(edge_list.len());
        let mut seen = vec![false; n_types * n_types];
        for &(i, j, r) in edge_list {
            if seen[i * n_types + j] {
                return Err(Error::DuplicateEdge(i, j));
            }
            seen[i * n_types + j] = true;
            if r <= 0.0 || !r.is_finite() {
                return Err(Error::NonpositiveRho { i, j, rho: r });
            }
            rho_dense[i * n_types + j] = r;
            edges.push((i, j));
            rho.push(r);
        }
        edges_sorted(&mut edges, &mut rho);
        let mut outdeg = vec![0usize; n_types];
        for &(i, _) in &edges {
            outdeg[i] += 1;
        }
        if let Some(t) = outdeg.iter().position(|&d| d == 0) {
            return Err(Error::DanglingType(t));
        }
        if !undirected_connected(n_types, &edges) {
            return Err(Error::Disconnected);
        }
        let strongly_connected = strongly_connected(n_types, &edges);
        Ok(TypeGraph {
            n_types,
            edges,
            rho,
            rho_dense,
            outdeg,
            strongly_connected,
        })
    }

    pub fn n_types(&self) -> usize {
        self.n_types
    }

    /// Edges sorted by (source, target), weights parallel.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n_types && j < self.n_types && self.rho_dense[i * self.n_types + j] > 0.0
    }

    /// Edge weight; 0 for non-edges.
    pub fn rho(&self, i: usize, j: usize) -> f64 {
        self.rho_dense[i * self.n_types + j]
    }

    /// Weight of the k-th edge in `edges()` order.
    pub fn rho_at(&self, edge_idx: usize) -> f64 {
        self.rho[edge_idx]
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.edges.binary_search(&(i, j)).ok()
    }

    pub fn outdeg(&self, i: usize) -> usize {
        self.outdeg[i]
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .filter(move |&&(s, _)| s == i)
            .map(|&(_, t)| t)
    }

    /// Diagnostic only: cycles never cross strongly connected components,
    /// so weak connectivity is all construction requires.
    pub fn is_strongly_connected(&self) -> bool {
        self.strongly_connected
    }

    /// Graph with every weight multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let list: Vec<(usize, usize, f64)> = self
            .edges
            .iter()
            .zip(&self.rho)
            .map(|(&(i, j), &r)| (i, j, c * r))
            .collect();
        TypeGraph::build(&list)
    }
}

fn edges_sorted(edges: &mut Vec<(usize, usize)>, rho: &mut Vec<f64>) {
    let mut idx: Vec<usize> = (0..edges.len()).collect();
    idx.sort_by_key(|&k| edges[k]);
    *edges = idx.iter().map(|&k| edges[k]).collect();
    *rho = idx.iter().map(|&k| rho[k]).collect();
}

fn undirected_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(i, j) in edges {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        parent[ri] = rj;
    }
    let root = find(&mut parent, 0);
    (0..n).all(|v| find(&mut parent, v) == root)
}

fn strongly_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut fwd = vec![vec![false; n]; n];
    for &(i, j) in edges {
        fwd[i][j] = true;
    }
    crate::numeric::is_irreducible(&fwd)
}

/// A directed cycle without repeated vertices or edges, stored in canonical
/// rotation: the smallest vertex index first. `vertices` holds the distinct
/// vertices `i_1, …, i_l`; the step back to `i_1` is implied.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimpleCycle {
    vertices: Vec<usize>,
}

impl SimpleCycle {
    /// Canonicalize (rotate minimal vertex to front) and validate against a
    /// graph: all steps must be edges, no vertex repeats.
    pub fn new(vertices: Vec<usize>, g: &TypeGraph) -> Result<Self> {
        if vertices.is_empty() || vertices.len() > g.n_types() {
            return Err(Error::PreconditionViolated(format!(
                "cycle length {} out of range 1..={}",
                vertices.len(),
                g.n_types()
            )));
        }
        let mut sorted = vertices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != vertices.len() {
            return Err(Error::PreconditionViolated("cycle repeats a vertex".into()));
        }
        let cycle = Self::rotated(vertices);
        for (i, j) in cycle.edge_pairs() {
            if !g.has_edge(i, j) {
                return Err(Error::PreconditionViolated(format!(
                    "cycle step ({i}, {j}) is not an edge"
                )));
            }
        }
        Ok(cycle)
    }

    fn rotated(vertices: Vec<usize>) -> Self {
        let start = vertices
            .iter()
            .enumerate()
            .min_by_key(|&(_, &v)| v)
            .map(|(k, _)| k)
            .unwrap();
        let mut rotated = Vec::with_capacity(vertices.len());
        rotated.extend_from_slice(&vertices[start..]);
        rotated.extend_from_slice(&vertices[..start]);
        SimpleCycle { vertices: rotated }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// The vertex sequence with the closing vertex repeated at the end.
    pub fn closed_vertices(&self) -> Vec<usize> {
        let mut v = self.vertices.clone();
        v.push(self.vertices[0]);
        v
    }

    /// The directed steps `(i_m, i_{m+1})`, wrapping back to the start.
    pub fn edge_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let l = self.vertices.len();
        (0..l).map(move |m| (self.vertices[m], self.vertices[(m + 1) % l]))
    }

    pub fn contains_edge(&self, i: usize, j: usize) -> bool {
        self.edge_pairs().any(|e| e == (i, j))
    }

    /// Mean of `rho` along the cycle.
    pub fn rho_mean(&self, g: &TypeGraph) -> f64 {
        let total: f64 = self.edge_pairs().map(|(i, j)| g.rho(i, j)).sum();
        total / self.len() as f64
    }
}

/// All simple cycles of the graph, each reported once (canonical rotation),
/// sorted lexicographically by vertex sequence.
///
/// Depth-first search rooted at each vertex in turn, visiting only larger
/// vertices, so every cycle appears exactly at its minimal vertex.
pub fn enumerate_simple_cycles(g: &TypeGraph) -> Vec<SimpleCycle> {
    let n = g.n_types();
    let mut cycles = Vec::new();
    let succ: Vec<Vec<usize>> = (0..n).map(|i| g.successors(i).collect()).collect();
    let mut path = Vec::new();
    let mut on_path = vec![false; n];
    for root in 0..n {
        path.clear();
        path.push(root);
        on_path[root] = true;
        dfs_cycles(root, root, &succ, &mut path, &mut on_path, &mut cycles);
        on_path[root] = false;
    }
    cycles.sort();
    cycles
}

fn dfs_cycles(
    root: usize,
    at: usize,
    succ: &[Vec<usize>],
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut Vec<SimpleCycle>,
) {
    for &next in &succ[at] {
        if next == root {
            out.push(SimpleCycle {
                vertices: path.clone(),
            });
        } else if next > root && !on_path[next] {
            path.push(next);
            on_path[next] = true;
            dfs_cycles(root, next, succ, path, on_path, out);
            on_path[next] = false;
            path.pop();
        }
    }
}

/// Length of a shortest simple cycle, by breadth-first search from every
/// vertex back to itself. Always defined: each vertex has an outgoing edge
/// on a finite graph.
pub fn girth(g: &TypeGraph) -> usize {
    let n = g.n_types();
    let succ: Vec<Vec<usize>> = (0..n).map(|i| g.successors(i).collect()).collect();
    let mut best = usize::MAX;
    for v in 0..n {
        if succ[v].contains(&v) {
            return 1;
        }
        let mut dist = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::new();
        for &w in &succ[v] {
            if dist[w] == usize::MAX {
                dist[w] = 1;
                queue.push_back(w);
            }
        }
        while let Some(u) = queue.pop_front() {
            if dist[u] + 1 >= best {
                continue;
            }
            for &w in &succ[u] {
                if w == v {
                    best = best.min(dist[u] + 1);
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    best
}

/// A probability measure on ordered type pairs with support inside the edge
/// set. Equal marginals make it shift invariant; construction checks the
/// support and total mass, marginal equality is checked where required.
#[derive(Debug, Clone, PartialEq)]
pub struct TypePairMeasure {
    n_types: usize,
    weights: Vec<f64>, // dense n_types * n_types
}

impl TypePairMeasure {
    pub fn new(g: &TypeGraph, weights: Vec<f64>) -> Result<Self> {
        let n = g.n_types();
        if weights.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} weights, got {}",
                n * n,
                weights.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let w = weights[i * n + j];
                if w != 0.0 && !g.has_edge(i, j) {
                    return Err(Error::UnsupportedPair { i, j, weight: w });
                }
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::PreconditionViolated(format!(
                "pair measure has total mass {total}"
            )));
        }
        Ok(TypePairMeasure {
            n_types: n,
            weights,
        })
    }

    /// Uniform measure `1/|γ|` on the edges of a simple cycle.
    pub fn from_cycle(g: &TypeGraph, cycle: &SimpleCycle) -> Self {
        let n = g.n_types();
        let mut weights = vec![0.0; n * n];
        let w = 1.0 / cycle.len() as f64;
        for (i, j) in cycle.edge_pairs() {
            weights[i * n + j] = w;
        }
        TypePairMeasure {
            n_types: n,
            weights,
        }
    }

    pub fn n_types(&self) -> usize {
        self.n_types
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n_types + j]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Σ_j w(i, j).
    pub fn out_marginal(&self, i: usize) -> f64 {
        (0..self.n_types).map(|j| self.weight(i, j)).sum()
    }

    /// Σ_j w(j, i).
    pub fn in_marginal(&self, i: usize) -> f64 {
        (0..self.n_types).map(|j| self.weight(j, i)).sum()
    }

    /// Largest marginal discrepancy max_i |out(i) − in(i)|.
    pub fn marginal_gap(&self) -> f64 {
        (0..self.n_types)
            .map(|i| (self.out_marginal(i) - self.in_marginal(i)).abs())
            .fold(0.0, f64::max)
    }

    /// ⟨μ, ρ⟩ = Σ_{(i,j)} μ(i,j) ρ_ij.
    pub fn dot_rho(&self, g: &TypeGraph) -> f64 {
        g.edges()
            .iter()
            .map(|&(i, j)| self.weight(i, j) * g.rho(i, j))
            .sum()
    }
}

/// Write a shift-invariant pair measure as a convex combination of cycle
/// measures by greedy peeling: among the simple cycles of the current
/// support, repeatedly subtract the largest feasible multiple (ties broken
/// by canonical lexicographic order). Each peel zeroes at least one edge,
/// so at most |A| rounds run.
pub fn cycle_decomposition(
    g: &TypeGraph,
    mu: &TypePairMeasure,
    tol: f64,
) -> Result<Vec<(f64, SimpleCycle)>> {
    let n = g.n_types();
    for i in 0..n {
        let gap = (mu.out_marginal(i) - mu.in_marginal(i)).abs();
        if gap > tol {
            return Err(Error::NotShiftInvariant { index: i, gap, tol });
        }
    }
    let mut residual = mu.weights().to_vec();
    let mut parts = Vec::new();
    loop {
        let support: Vec<(usize, usize, f64)> = g
            .edges()
            .iter()
            .filter(|&&(i, j)| residual[i * n + j] > tol)
            .map(|&(i, j)| (i, j, 1.0))
            .collect();
        if support.is_empty() {
            break;
        }
        // Support subgraph can have dangling vertices; bypass full
        // validation and enumerate its cycles directly.
        let cycles = enumerate_support_cycles(n, &support);
        let best = cycles
            .into_iter()
            .map(|c| {
                let m = c
                    .edge_pairs()
                    .map(|(i, j)| residual[i * n + j])
                    .fold(f64::INFINITY, f64::min);
                (c.len() as f64 * m, c)
            })
            .max_by(|(wa, ca), (wb, cb)| {
                wa.partial_cmp(wb).unwrap().then_with(|| cb.cmp(ca)) // on ties prefer lexicographically smaller
            });
        let Some((weight, cycle)) = best else { break };
        if weight <= tol {
            break;
        }
        let per_edge = weight / cycle.len() as f64;
        for (i, j) in cycle.edge_pairs() {
            residual[i * n + j] = (residual[i * n + j] - per_edge).max(0.0);
        }
        parts.push((weight, cycle));
    }
    Ok(parts)
}

fn enumerate_support_cycles(n: usize, support: &[(usize, usize, f64)]) -> Vec<SimpleCycle> {
    let mut succ = vec![Vec::new(); n];
    for &(i, j, _) in support {
        succ[i].push(j);
    }
    let mut cycles = Vec::new();
    let mut path = Vec::new();
    let mut on_path = vec![false; n];
    for root in 0..n {
        path.clear();
        path.push(root);
        on_path[root] = true;
        dfs_cycles(root, root, &succ, &mut path, &mut on_path, &mut cycles);
        on_path[root] = false;
    }
    cycles.sort();
    cycles
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cycle() -> TypeGraph {
        TypeGraph::build(&[(0, 1, 1.0), (1, 0, 3.0)]).unwrap()
    }

    #[test]
    fn builds_single_self_loop() {
        let g = TypeGraph::build(&[(0, 0, 2.0)]).unwrap();
        assert_eq!(g.n_types(), 1);
        assert_eq!(g.outdeg(0), 1);
        assert_eq!(g.rho(0, 0), 2.0);
    }

    #[test]
    fn builds_two_cycle() {
        let g = two_cycle();
        assert_eq!(g.n_types(), 2);
        assert_eq!(g.outdeg(0), 1);
        assert_eq!(g.outdeg(1), 1);
        assert!(g.is_strongly_connected());
    }

    #[test]
    fn rejects_dangling_type() {
        assert_eq!(
            TypeGraph::build(&[(0, 1, 1.0)]),
            Err(Error::DanglingType(1))
        );
    }

    #[test]
    fn rejects_duplicates_bad_rho_disconnect() {
        assert_eq!(
            TypeGraph::build(&[(0, 0, 1.0), (0, 0, 2.0)]),
            Err(Error::DuplicateEdge(0, 0))
        );
        assert!(matches!(
            TypeGraph::build(&[(0, 0, 0.0)]),
            Err(Error::NonpositiveRho { .. })
        ));
        assert_eq!(
            TypeGraph::build(&[(0, 0, 1.0), (1, 1, 1.0)]),
            Err(Error::Disconnected)
        );
    }

    #[test]
    fn weakly_connected_graph_flags_non_strong() {
        // 0 <-> 1 plus a sink-ish loop at 2 reachable only from 1
        let g = TypeGraph::build(&[(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 2, 1.0)]).unwrap();
        assert!(!g.is_strongly_connected());
    }

    #[test]
    fn enumerates_loop_and_two_cycle() {
        let g = TypeGraph::build(&[(0, 0, 1.0)]).unwrap();
        let cycles = enumerate_simple_cycles(&g);
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].vertices(), &[0]);

        let cycles = enumerate_simple_cycles(&two_cycle());
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].vertices(), &[0, 1]);
        assert_eq!(cycles[0].closed_vertices(), vec![0, 1, 0]);
    }

    #[test]
    fn complete_graph_on_three_types_has_eight_cycles() {
        let mut edges = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                edges.push((i, j, 1.0));
            }
        }
        let g = TypeGraph::build(&edges).unwrap();
        let cycles = enumerate_simple_cycles(&g);
        // 3 loops + 3 two-cycles + 2 triangle orientations
        assert_eq!(cycles.len(), 8);
        assert_eq!(cycles.iter().filter(|c| c.len() == 1).count(), 3);
        assert_eq!(cycles.iter().filter(|c| c.len() == 2).count(), 3);
        assert_eq!(cycles.iter().filter(|c| c.len() == 3).count(), 2);
        // lexicographic order and canonical rotations
        for w in cycles.windows(2) {
            assert!(w[0] < w[1]);
        }
        for c in &cycles {
            assert_eq!(c.vertices()[0], *c.vertices().iter().min().unwrap());
        }
    }

    /// Independent oracle: count rotation classes of vertex-simple closed
    /// walks by brute force over all starting vertices and walks.
    fn count_cycles_oracle(g: &TypeGraph) -> usize {
        use std::collections::HashSet;
        let n = g.n_types();
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        // stack of (path, visited-mask)
        let mut stack: Vec<(Vec<usize>, u64)> = (0..n).map(|v| (vec![v], 1u64 << v)).collect();
        while let Some((path, mask)) = stack.pop() {
            let last = *path.last().unwrap();
            for next in 0..n {
                if !g.has_edge(last, next) {
                    continue;
                }
                if next == path[0] {
                    // canonical rotation: minimal vertex first
                    let min_pos = path
                        .iter()
                        .enumerate()
                        .min_by_key(|&(_, &v)| v)
                        .map(|(k, _)| k)
                        .unwrap();
                    let mut canon = path[min_pos..].to_vec();
                    canon.extend_from_slice(&path[..min_pos]);
                    seen.insert(canon);
                } else if mask & (1 << next) == 0 {
                    let mut p = path.clone();
                    p.push(next);
                    stack.push((p, mask | (1 << next)));
                }
            }
        }
        seen.len()
    }

    #[test]
    fn cycle_count_matches_dfs_oracle_on_small_graphs() {
        let mut rng = crate::rng::SplitMix64::new(2024);
        let mut tested = 0;
        while tested < 60 {
            let n = 2 + rng.next_index(4); // up to 5 types
            let mut edges = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if rng.next_f64() < 0.45 {
                        edges.push((i, j, 1.0 + rng.next_f64()));
                    }
                }
            }
            let Ok(g) = TypeGraph::build(&edges) else {
                continue;
            };
            tested += 1;
            assert_eq!(enumerate_simple_cycles(&g).len(), count_cycles_oracle(&g));
        }
    }

    #[test]
    fn girth_examples() {
        assert_eq!(girth(&TypeGraph::build(&[(0, 0, 1.0)]).unwrap()), 1);
        assert_eq!(girth(&two_cycle()), 2);
        // Directed 4-cycle plus chord (0, 2): shortest cycle 0 -> 2 -> 3 -> 0
        let g = TypeGraph::build(&[
            (0, 1, 1.0),
            (1, 2, 1.0),
            (2, 3, 1.0),
            (3, 0, 1.0),
            (0, 2, 1.0),
        ])
        .unwrap();
        assert_eq!(girth(&g), 3);
        let cycles = enumerate_simple_cycles(&g);
        assert_eq!(girth(&g), cycles.iter().map(|c| c.len()).min().unwrap());
    }

    #[test]
    fn girth_agrees_with_enumeration_on_random_graphs() {
        let mut rng = crate::rng::SplitMix64::new(7);
        let mut tested = 0;
        while tested < 40 {
            let n = 2 + rng.next_index(4);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if rng.next_f64() < 0.4 {
                        edges.push((i, j, 0.5 + rng.next_f64()));
                    }
                }
            }
            let Ok(g) = TypeGraph::build(&edges) else {
                continue;
            };
            tested += 1;
            let cycles = enumerate_simple_cycles(&g);
            assert_eq!(girth(&g), cycles.iter().map(|c| c.len()).min().unwrap());
        }
    }

    #[test]
    fn cycle_measures_are_shift_invariant() {
        let g = TypeGraph::build(&[
            (0, 0, 1.0),
            (0, 1, 1.0),
            (1, 0, 1.0),
            (1, 2, 1.0),
            (2, 0, 1.0),
        ])
        .unwrap();
        for c in enumerate_simple_cycles(&g) {
            let mu = TypePairMeasure::from_cycle(&g, &c);
            let total: f64 = mu.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(mu.marginal_gap() < 1e-12);
            for (i, j) in c.edge_pairs() {
                assert!((mu.weight(i, j) - 1.0 / c.len() as f64).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn cycle_measure_examples() {
        let loop_g = TypeGraph::build(&[(0, 0, 1.0)]).unwrap();
        let c = enumerate_simple_cycles(&loop_g).remove(0);
        assert_eq!(TypePairMeasure::from_cycle(&loop_g, &c).weight(0, 0), 1.0);

        let g2 = two_cycle();
        let c = enumerate_simple_cycles(&g2).remove(0);
        let mu = TypePairMeasure::from_cycle(&g2, &c);
        assert_eq!(mu.weight(0, 1), 0.5);
        assert_eq!(mu.weight(1, 0), 0.5);

        let tri = TypeGraph::build(&[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        let c = enumerate_simple_cycles(&tri).remove(0);
        let mu = TypePairMeasure::from_cycle(&tri, &c);
        for (i, j) in [(0, 1), (1, 2), (2, 0)] {
            assert!((mu.weight(i, j) - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn decomposition_recovers_extremal_cycle() {
        let g = two_cycle();
        let c = enumerate_simple_cycles(&g).remove(0);
        let mu = TypePairMeasure::from_cycle(&g, &c);
        let parts = cycle_decomposition(&g, &mu, 1e-9).unwrap();
        assert_eq!(parts.len(), 1);
        assert!((parts[0].0 - 1.0).abs() < 1e-9);
        assert_eq!(parts[0].1, c);
    }

    #[test]
    fn decomposition_reconstructs_mixture() {
        let g = TypeGraph::build(&[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let n = g.n_types();
        let cycles = enumerate_simple_cycles(&g);
        assert_eq!(cycles.len(), 2);
        let mut weights = vec![0.0; n * n];
        for c in &cycles {
            let mu = TypePairMeasure::from_cycle(&g, c);
            for (w, &m) in weights.iter_mut().zip(mu.weights()) {
                *w += 0.5 * m;
            }
        }
        let mu = TypePairMeasure::new(&g, weights.clone()).unwrap();
        let tol = 1e-9;
        let parts = cycle_decomposition(&g, &mu, tol).unwrap();
        let mut rebuilt = vec![0.0; n * n];
        for (w, c) in &parts {
            let m = TypePairMeasure::from_cycle(&g, c);
            for (r, &v) in rebuilt.iter_mut().zip(m.weights()) {
                *r += w * v;
            }
        }
        let err = rebuilt
            .iter()
            .zip(&weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err <= 10.0 * tol, "reconstruction error {err}");
    }

    #[test]
    fn decomposition_rejects_marginal_violation() {
        let g = two_cycle();
        let mut weights = vec![0.0; 4];
        weights[1] = 1.0; // all mass on (0, 1)
        let mu = TypePairMeasure {
            n_types: 2,
            weights,
        };
        assert!(matches!(
            cycle_decomposition(&g, &mu, 1e-9),
            Err(Error::NotShiftInvariant { .. })
        ));
    }

    #[test]
    fn decomposition_reconstructs_random_mixtures() {
        let mut rng = crate::rng::SplitMix64::new(99);
        let mut tested = 0;
        while tested < 40 {
            let n = 2 + rng.next_index(4);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if rng.next_f64() < 0.5 {
                        edges.push((i, j, 1.0));
                    }
                }
            }
            let Ok(g) = TypeGraph::build(&edges) else {
                continue;
            };
            if g.n_types() != n {
                continue;
            }
            let cycles = enumerate_simple_cycles(&g);
            if cycles.is_empty() {
                continue;
            }
            tested += 1;
            // random convex combination
            let mut w: Vec<f64> = (0..cycles.len()).map(|_| rng.next_exponential()).collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= total);
            let mut weights = vec![0.0; n * n];
            for (wk, c) in w.iter().zip(&cycles) {
                for (i, j) in c.edge_pairs() {
                    weights[i * n + j] += wk / c.len() as f64;
                }
            }
            let mu = TypePairMeasure::new(&g, weights.clone()).unwrap();
            let tol = 1e-9;
            let parts = cycle_decomposition(&g, &mu, tol).unwrap();
            let mut rebuilt = vec![0.0; n * n];
            for (wk, c) in &parts {
                for (i, j) in c.edge_pairs() {
                    rebuilt[i * n + j] += wk / c.len() as f64;
                }
            }
            let err = rebuilt
                .iter()
                .zip(&weights)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err <= 10.0 * tol, "reconstruction error {err}");
            let wsum: f64 = parts.iter().map(|(w, _)| w).sum();
            assert!((wsum - 1.0).abs() <= 10.0 * tol * (n * n) as f64);
        }
    }
}
