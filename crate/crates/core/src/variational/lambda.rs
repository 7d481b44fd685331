//! The leading growth exponent λ(ρ): the maximum mean of ρ over simple
//! cycles, equivalently the maximum of ⟨μ, ρ⟩ over shift-invariant pair
//! measures on types. Three independent routes live here — Karp's
//! minimum-mean-cycle dynamic program on negated weights, a linear program
//! over the equal-marginal polytope, and plain cycle enumeration — plus
//! vertex enumeration of that polytope, whose extreme points are exactly
//! the cycle measures.

use crate::error::{Error, Result};
use crate::numeric::{lp, solve_linear};
use crate::typegraph::{enumerate_simple_cycles, SimpleCycle, TypeGraph};

/// Above this many types, Γ(ρ) is reported as a single witness cycle
/// instead of the full enumeration.
pub const ENUMERATION_LIMIT: usize = 12;

/// Relative tolerance for membership of a cycle in the optimal set.
const GAMMA_REL_TOL: f64 = 1e-9;

/// λ(ρ) with its optimal cycle set Γ(ρ).
///
/// The value comes from Karp's algorithm run per strongly connected
/// component (cycles cannot cross components). For graphs with at most
/// [`ENUMERATION_LIMIT`] types the full optimal set is enumerated;
/// beyond that a single witness cycle is recovered from the tight-edge
/// subgraph of the optimal component.
pub fn lambda_max_mean_cycle(g: &TypeGraph) -> (f64, Vec<SimpleCycle>) {
    let mut best = f64::NEG_INFINITY;
    let mut best_scc = Vec::new();
    for scc in strongly_connected_components(g) {
        if let Some(val) = karp_max_mean(g, &scc) {
            if val > best {
                best = val;
                best_scc = scc;
            }
        }
    }
    debug_assert!(best.is_finite(), "every valid graph contains a cycle");
    let cycles = if g.n_types() <= ENUMERATION_LIMIT {
        enumerate_simple_cycles(g)
            .into_iter()
            .filter(|c| (c.rho_mean(g) - best).abs() <= GAMMA_REL_TOL * best.abs())
            .collect()
    } else {
        vec![witness_cycle(g, &best_scc, best)]
    };
    (best, cycles)
}

/// Tarjan's strongly connected components, iterative.
pub fn strongly_connected_components(g: &TypeGraph) -> Vec<Vec<usize>> {
    let n = g.n_types();
    let succ: Vec<Vec<usize>> = (0..n).map(|i| g.successors(i).collect()).collect();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut comps = Vec::new();

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        // explicit DFS: (node, next successor position)
        let mut call = vec![(root, 0usize)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < succ[v].len() {
                let w = succ[v][*pos];
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&mut (parent, _)) = call.last_mut() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

/// Karp's minimum mean cycle on `-ρ` restricted to one component; returns
/// the maximum ρ-mean of a cycle inside it, or None when the component has
/// no internal edge.
#[allow(clippy::needless_range_loop)] // the DP table is indexed by walk length and vertex
fn karp_max_mean(g: &TypeGraph, scc: &[usize]) -> Option<f64> {
    let n = scc.len();
    let local: std::collections::HashMap<usize, usize> =
        scc.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let mut edges = Vec::new();
    for &u in scc {
        for v in g.successors(u) {
            if let Some(&lv) = local.get(&v) {
                edges.push((local[&u], lv, -g.rho(u, v)));
            }
        }
    }
    if edges.is_empty() {
        return None;
    }
    const INF: f64 = f64::INFINITY;
    // dist[k][v] = min weight over walks of exactly k edges from source
    let mut dist = vec![vec![INF; n]; n + 1];
    dist[0][0] = 0.0;
    for k in 1..=n {
        for &(u, v, w) in &edges {
            if dist[k - 1][u] < INF && dist[k - 1][u] + w < dist[k][v] {
                dist[k][v] = dist[k - 1][u] + w;
            }
        }
    }
    let mut min_mean = INF;
    for v in 0..n {
        if dist[n][v] == INF {
            continue;
        }
        let mut worst = f64::NEG_INFINITY;
        for k in 0..n {
            if dist[k][v] < INF {
                worst = worst.max((dist[n][v] - dist[k][v]) / (n - k) as f64);
            }
        }
        if worst > f64::NEG_INFINITY {
            min_mean = min_mean.min(worst);
        }
    }
    (min_mean < INF).then_some(-min_mean)
}

/// Recover one cycle of mean λ inside `scc`: with modified weights
/// `λ - ρ` no cycle is negative, so Bellman-Ford potentials exist and
/// every optimal cycle lies in the subgraph of tight edges; any cycle of
/// tight edges is optimal.
fn witness_cycle(g: &TypeGraph, scc: &[usize], lambda: f64) -> SimpleCycle {
    let n = scc.len();
    let local: std::collections::HashMap<usize, usize> =
        scc.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let mut edges = Vec::new();
    for &u in scc {
        for v in g.successors(u) {
            if let Some(&lv) = local.get(&v) {
                edges.push((local[&u], lv, lambda - g.rho(u, v)));
            }
        }
    }
    let mut pot = vec![f64::INFINITY; n];
    pot[0] = 0.0;
    for _ in 0..n {
        for &(u, v, w) in &edges {
            if pot[u].is_finite() && pot[u] + w < pot[v] {
                pot[v] = pot[u] + w;
            }
        }
    }
    let mut tol = 1e-9 * lambda.abs().max(1.0);
    for _ in 0..8 {
        let mut tight = vec![Vec::new(); n];
        for &(u, v, w) in &edges {
            if pot[u].is_finite() && pot[v].is_finite() && pot[u] + w - pot[v] <= tol {
                tight[u].push(v);
            }
        }
        if let Some(cycle) = find_any_cycle(&tight) {
            let verts: Vec<usize> = cycle.into_iter().map(|k| scc[k]).collect();
            let cycle = SimpleCycle::new(verts, g).expect("tight cycle uses graph edges");
            if (cycle.rho_mean(g) - lambda).abs() <= 1e-8 * lambda.abs().max(1.0) {
                return cycle;
            }
        }
        tol *= 10.0;
    }
    unreachable!("an optimal cycle always lies among the tight edges");
}

fn find_any_cycle(succ: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = succ.len();
    // colors: 0 unvisited, 1 on stack, 2 done
    let mut color = vec![0u8; n];
    let mut parent_pos = vec![0usize; n];
    for root in 0..n {
        if color[root] != 0 {
            continue;
        }
        let mut path = vec![root];
        color[root] = 1;
        while let Some(&v) = path.last() {
            if parent_pos[v] < succ[v].len() {
                let w = succ[v][parent_pos[v]];
                parent_pos[v] += 1;
                if color[w] == 1 {
                    let start = path.iter().position(|&u| u == w).unwrap();
                    return Some(path[start..].to_vec());
                }
                if color[w] == 0 {
                    color[w] = 1;
                    path.push(w);
                }
            } else {
                color[v] = 2;
                path.pop();
            }
        }
    }
    None
}

/// Constraint matrix of the shift-invariant polytope over the edge set:
/// one net-flow row per type plus the normalization row.
fn polytope_constraints(g: &TypeGraph) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = g.n_types();
    let m = g.n_edges();
    let mut a = Vec::with_capacity(n + 1);
    for t in 0..n {
        let mut row = vec![0.0; m];
        for (e, &(i, j)) in g.edges().iter().enumerate() {
            if i == t {
                row[e] += 1.0;
            }
            if j == t {
                row[e] -= 1.0;
            }
        }
        a.push(row);
    }
    a.push(vec![1.0; m]);
    let mut b = vec![0.0; n];
    b.push(1.0);
    (a, b)
}

/// λ(ρ) as the value of the linear program
/// `max Σ μ(i,j) ρ_ij over μ ≥ 0 on edges, equal marginals, total mass 1`.
/// Independent of the cycle characterization; used as a cross-check.
pub fn lambda_lp_oracle(g: &TypeGraph) -> f64 {
    let (a, b) = polytope_constraints(g);
    let c: Vec<f64> = g.edges().iter().map(|&(i, j)| g.rho(i, j)).collect();
    lp::maximize(&a, &b, &c)
        .expect("the shift-invariant polytope is nonempty and bounded")
        .value
}

/// All vertices of the shift-invariant polytope, by enumeration of basic
/// feasible solutions. Returned as edge-weight tables in `g.edges()` order.
pub fn polytope_vertices(g: &TypeGraph, basis_guard: usize) -> Result<Vec<Vec<f64>>> {
    let (a, b) = polytope_constraints(g);
    let m = g.n_edges();
    // independent rows (the net-flow rows sum to zero, so rank < n + 1)
    let mut kept_rows: Vec<usize> = Vec::new();
    let mut basis_vectors: Vec<Vec<f64>> = Vec::new();
    for (r, row) in a.iter().enumerate() {
        let mut v = row.clone();
        for bv in &basis_vectors {
            let dot: f64 = v.iter().zip(bv).map(|(x, y)| x * y).sum();
            let norm: f64 = bv.iter().map(|x| x * x).sum();
            let f = dot / norm;
            for (vi, bi) in v.iter_mut().zip(bv) {
                *vi -= f * bi;
            }
        }
        if v.iter().map(|x| x * x).sum::<f64>().sqrt() > 1e-9 {
            kept_rows.push(r);
            basis_vectors.push(v);
        }
    }
    let r = kept_rows.len();
    let combos = binomial(m, r);
    if combos > basis_guard as u128 {
        return Err(Error::EnumerationTooLarge {
            n_types: g.n_types(),
            limit: basis_guard,
        });
    }
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut cols = (0..r).collect::<Vec<usize>>();
    loop {
        // solve the square system on the selected columns
        let sub: Vec<Vec<f64>> = kept_rows
            .iter()
            .map(|&row| cols.iter().map(|&c| a[row][c]).collect())
            .collect();
        let rhs: Vec<f64> = kept_rows.iter().map(|&row| b[row]).collect();
        if let Some(x) = solve_linear(&sub, &rhs, 1e-10) {
            if x.iter().all(|&v| v >= -1e-9) {
                let mut full = vec![0.0; m];
                for (&c, &v) in cols.iter().zip(&x) {
                    full[c] = v.max(0.0);
                }
                // all original constraints, including dependent rows
                let ok = a.iter().zip(&b).all(|(row, &bi)| {
                    let lhs: f64 = row.iter().zip(&full).map(|(x, y)| x * y).sum();
                    (lhs - bi).abs() < 1e-8
                });
                if ok && !vertices.iter().any(|v| close(v, &full, 1e-7)) {
                    vertices.push(full);
                }
            }
        }
        if !next_combination(&mut cols, m) {
            break;
        }
    }
    Ok(vertices)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut r: u128 = 1;
    for i in 0..k.min(n - k) {
        r = r.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    r
}

fn next_combination(cols: &mut [usize], m: usize) -> bool {
    let k = cols.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if cols[i] < m - (k - i) {
            cols[i] += 1;
            for j in i + 1..k {
                cols[j] = cols[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
