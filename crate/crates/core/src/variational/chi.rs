//! The second-order constant χ(ρ): the infimum of entropy minus energy
//! over shift-invariant pair measures on (type, site) states whose type
//! marginal is an optimal-mean measure.
//!
//! The feasible set is parametrized by a weight vector on the optimal
//! cycles (their convex hull is the maximizing face) together with one
//! spatial table per optimal edge; iterative proportional fitting pushes
//! the product measure onto the marginal constraints and multi-start
//! projected gradient descent with numerical gradients does the rest. The
//! problem is nonconvex (the energy enters with a minus sign), so restarts
//! are reported rather than hidden.

use crate::chain::{PairMeasure, SpatialChain};
use crate::error::{Error, Result};
use crate::numeric::project_simplex;
use crate::rng::SplitMix64;
use crate::typegraph::{girth, SimpleCycle, TypeGraph};
use crate::variational::balance_sweep;
use crate::variational::functionals::{energy, entropy};
use crate::variational::lambda::{lambda_max_mean_cycle, ENUMERATION_LIMIT};

#[derive(Debug, Clone)]
pub struct ChiOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub ipf_sweeps: usize,
}

impl Default for ChiOptions {
    fn default() -> Self {
        ChiOptions {
            restarts: 20,
            seed: 0,
            max_iters: 300,
            ipf_sweeps: 200,
        }
    }
}

/// Output of the coupled variational solve.
#[derive(Debug, Clone)]
pub struct VariationalResult {
    pub lambda: f64,
    pub optimal_cycles: Vec<SimpleCycle>,
    pub chi: f64,
    pub minimizer: PairMeasure,
    /// Best objective reached by each restart, in restart order.
    pub objective_per_restart: Vec<f64>,
    /// Objective value after every accepted step, per restart.
    pub traces: Vec<Vec<f64>>,
}

struct Parametrization<'a> {
    g: &'a TypeGraph,
    chain: &'a SpatialChain,
    cycles: &'a [SimpleCycle],
    opt_edges: Vec<(usize, usize)>,
    site_pairs: Vec<(usize, usize)>,
    ipf_sweeps: usize,
}

impl<'a> Parametrization<'a> {
    fn new(
        g: &'a TypeGraph,
        chain: &'a SpatialChain,
        cycles: &'a [SimpleCycle],
        ipf_sweeps: usize,
    ) -> Self {
        let mut opt_edges: Vec<(usize, usize)> = cycles
            .iter()
            .flat_map(|c| c.edge_pairs().collect::<Vec<_>>())
            .collect();
        opt_edges.sort_unstable();
        opt_edges.dedup();
        let mut site_pairs = Vec::new();
        for x in 0..chain.n_sites() {
            for y in 0..chain.n_sites() {
                if chain.prob(x, y) > 0.0 {
                    site_pairs.push((x, y));
                }
            }
        }
        Parametrization {
            g,
            chain,
            cycles,
            opt_edges,
            site_pairs,
            ipf_sweeps,
        }
    }

    fn dim(&self) -> usize {
        self.cycles.len() + self.opt_edges.len() * self.site_pairs.len()
    }

    /// Normalize the raw parameter vector group-wise: cycle weights on the
    /// simplex, each spatial table positive and normalized.
    fn groups(&self, theta: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let nc = self.cycles.len();
        let np = self.site_pairs.len();
        let mut w: Vec<f64> = theta[..nc].iter().map(|&v| v.max(0.0)).collect();
        let ws: f64 = w.iter().sum();
        if ws <= 0.0 {
            w.iter_mut().for_each(|v| *v = 1.0 / nc as f64);
        } else {
            w.iter_mut().for_each(|v| *v /= ws);
        }
        let mut qs = Vec::with_capacity(self.opt_edges.len());
        for e in 0..self.opt_edges.len() {
            let start = nc + e * np;
            let mut q: Vec<f64> = theta[start..start + np]
                .iter()
                .map(|&v| v.max(1e-12))
                .collect();
            let qsum: f64 = q.iter().sum();
            q.iter_mut().for_each(|v| *v /= qsum);
            qs.push(q);
        }
        (w, qs)
    }

    /// Assemble the product measure and project it onto both constraint
    /// families: type marginal pinned to the cycle mixture, equal
    /// (type, site) marginals by balancing.
    fn build(&self, theta: &[f64]) -> PairMeasure {
        let (w, qs) = self.groups(theta);
        let t = self.g.n_types();
        let s = self.chain.n_sites();
        let dim = t * s;
        let mut mu = vec![0.0; t * t];
        for (wk, c) in w.iter().zip(self.cycles) {
            for (i, j) in c.edge_pairs() {
                mu[i * t + j] += wk / c.len() as f64;
            }
        }
        let mut table = vec![0.0; dim * dim];
        for (e, &(i, j)) in self.opt_edges.iter().enumerate() {
            let target = mu[i * t + j];
            if target == 0.0 {
                continue;
            }
            for (k, &(x, y)) in self.site_pairs.iter().enumerate() {
                table[(i * s + x) * dim + (j * s + y)] = target * qs[e][k];
            }
        }
        for _ in 0..self.ipf_sweeps {
            let gap = balance_sweep(&mut table, dim);
            let block_gap = self.rescale_blocks(&mut table, &mu);
            if gap < 1e-13 && block_gap < 1e-13 {
                break;
            }
        }
        self.rescale_blocks(&mut table, &mu);
        PairMeasure::from_weights(t, s, table)
    }

    /// Scale each (i, j) block back to its target mass; returns the largest
    /// relative correction applied.
    fn rescale_blocks(&self, table: &mut [f64], mu: &[f64]) -> f64 {
        let t = self.g.n_types();
        let s = self.chain.n_sites();
        let dim = t * s;
        let mut worst: f64 = 0.0;
        for &(i, j) in &self.opt_edges {
            let target = mu[i * t + j];
            let mut sum = 0.0;
            for x in 0..s {
                for y in 0..s {
                    sum += table[(i * s + x) * dim + (j * s + y)];
                }
            }
            if target == 0.0 || sum == 0.0 {
                continue;
            }
            let f = target / sum;
            worst = worst.max((f - 1.0).abs());
            for x in 0..s {
                for y in 0..s {
                    table[(i * s + x) * dim + (j * s + y)] *= f;
                }
            }
        }
        worst
    }

    fn objective(&self, theta: &[f64]) -> f64 {
        let nu = self.build(theta);
        let i = entropy(&nu, self.chain, self.g);
        if !i.is_finite() {
            return 1e50;
        }
        i - energy(&nu, self.g)
    }

    /// Group-wise projection after a gradient step.
    fn project(&self, theta: &mut [f64]) {
        let nc = self.cycles.len();
        let np = self.site_pairs.len();
        let w = project_simplex(&theta[..nc]);
        theta[..nc].copy_from_slice(&w);
        for e in 0..self.opt_edges.len() {
            let start = nc + e * np;
            let q = project_simplex(&theta[start..start + np]);
            theta[start..start + np].copy_from_slice(&q);
        }
    }
}

/// Minimize `I - S` over the feasible set. Needs the optimal cycle set,
/// so the graph must be small enough to enumerate.
pub fn chi_solve(
    g: &TypeGraph,
    chain: &SpatialChain,
    opts: &ChiOptions,
) -> Result<VariationalResult> {
    if g.n_types() > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            n_types: g.n_types(),
            limit: ENUMERATION_LIMIT,
        });
    }
    let (lambda, cycles) = lambda_max_mean_cycle(g);
    let par = Parametrization::new(g, chain, &cycles, opts.ipf_sweeps);
    let pi = chain.stationary();

    let mut best_theta: Option<Vec<f64>> = None;
    let mut best_obj = f64::INFINITY;
    let mut per_restart = Vec::with_capacity(opts.restarts);
    let mut traces = Vec::with_capacity(opts.restarts);

    for restart in 0..opts.restarts.max(1) {
        let mut theta = initial_theta(&par, &pi, restart, opts.seed);
        par.project(&mut theta);
        let (obj, trace) = descend(&par, &mut theta, opts.max_iters);
        per_restart.push(obj);
        traces.push(trace);
        if obj < best_obj {
            best_obj = obj;
            best_theta = Some(theta);
        }
    }

    let theta = best_theta.expect("at least one restart runs");
    let minimizer = par.build(&theta);
    Ok(VariationalResult {
        lambda,
        optimal_cycles: cycles.clone(),
        chi: best_obj,
        minimizer,
        objective_per_restart: per_restart,
        traces,
    })
}

fn initial_theta(par: &Parametrization, pi: &[f64], restart: usize, seed: u64) -> Vec<f64> {
    let nc = par.cycles.len();
    let np = par.site_pairs.len();
    let mut theta = Vec::with_capacity(par.dim());
    if restart == 0 {
        // natural start: uniform cycle weights, stationary-flow spatial tables
        theta.extend(std::iter::repeat_n(1.0 / nc as f64, nc));
        for _ in 0..par.opt_edges.len() {
            let mut q: Vec<f64> = par
                .site_pairs
                .iter()
                .map(|&(x, y)| pi[x] * par.chain.prob(x, y))
                .collect();
            let s: f64 = q.iter().sum();
            q.iter_mut().for_each(|v| *v /= s);
            theta.extend(q);
        }
    } else {
        let mut rng = SplitMix64::new(crate::rng::derive(seed, restart as u64));
        for _ in 0..nc {
            theta.push(rng.next_exponential());
        }
        for _ in 0..par.opt_edges.len() * np {
            theta.push(rng.next_exponential());
        }
    }
    theta
}

/// Projected gradient descent with central-difference gradients and
/// backtracking. Returns the final objective and the accepted-step trace.
fn descend(par: &Parametrization, theta: &mut Vec<f64>, max_iters: usize) -> (f64, Vec<f64>) {
    const FD_EPS: f64 = 1e-6;
    let mut obj = par.objective(theta);
    let mut trace = vec![obj];
    let mut step = 0.25;
    let mut stall = 0;
    for _ in 0..max_iters {
        let mut grad = vec![0.0; theta.len()];
        for k in 0..theta.len() {
            let saved = theta[k];
            theta[k] = saved + FD_EPS;
            let up = par.objective(theta);
            theta[k] = saved - FD_EPS;
            let down = par.objective(theta);
            theta[k] = saved;
            grad[k] = (up - down) / (2.0 * FD_EPS);
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-13 {
            break;
        }
        let mut improved = false;
        let mut eta = step;
        for _ in 0..30 {
            let mut cand: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - eta * g).collect();
            par.project(&mut cand);
            let cand_obj = par.objective(&cand);
            if cand_obj < obj - 1e-13 {
                *theta = cand;
                obj = cand_obj;
                trace.push(obj);
                step = (eta * 1.5).min(1.0);
                improved = true;
                break;
            }
            eta *= 0.5;
        }
        if !improved {
            stall += 1;
            if stall >= 2 {
                break;
            }
            step = 0.25;
        } else {
            stall = 0;
        }
    }
    (obj, trace)
}

/// Closed-form χ in the no-migration regime where `ρ_ij = ρ_i ≥ 1`:
/// the minimum over optimal cycles of
/// `λ log|γ| − (1/|γ|) Σ_m ρ_{i_m} log ρ_{i_m}`.
#[derive(Debug, Clone)]
pub struct NoMigrationChi {
    pub chi: f64,
    pub lambda: f64,
    /// The optimal cycles attaining the minimum.
    pub minimizers: Vec<SimpleCycle>,
}

pub fn chi_no_migration(g: &TypeGraph) -> Result<NoMigrationChi> {
    let n = g.n_types();
    if n > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            n_types: n,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut rho_i = vec![None; n];
    for &(i, j) in g.edges() {
        let r = g.rho(i, j);
        match rho_i[i] {
            None => rho_i[i] = Some(r),
            Some(prev) if prev == r => {}
            Some(prev) => {
                return Err(Error::PreconditionViolated(format!(
                    "rho must depend on the source type only; type {i} has {prev} and {r}"
                )))
            }
        }
    }
    let rho_i: Vec<f64> = rho_i
        .into_iter()
        .map(|r| r.expect("every type has an outgoing edge"))
        .collect();
    if let Some(r) = rho_i.iter().find(|&&r| r < 1.0) {
        return Err(Error::PreconditionViolated(format!(
            "closed form requires rho_i >= 1, got {r}"
        )));
    }
    let (lambda, cycles) = lambda_max_mean_cycle(g);
    let value = |c: &SimpleCycle| -> f64 {
        let avg: f64 = c
            .vertices()
            .iter()
            .map(|&v| rho_i[v] * rho_i[v].ln())
            .sum::<f64>()
            / c.len() as f64;
        lambda * (c.len() as f64).ln() - avg
    };
    let chi = cycles.iter().map(&value).fold(f64::INFINITY, f64::min);
    let minimizers: Vec<SimpleCycle> = cycles
        .iter()
        .filter(|c| (value(c) - chi).abs() <= 1e-12 * chi.abs().max(1.0))
        .cloned()
        .collect();
    // uniform case cross-check: χ = ρ log l_min − ρ log ρ on the shortest cycles
    if rho_i.windows(2).all(|w| w[0] == w[1]) {
        let rho = rho_i[0];
        let lmin = girth(g) as f64;
        let closed = rho * lmin.ln() - rho * rho.ln();
        debug_assert!((chi - closed).abs() <= 1e-12 * chi.abs().max(1.0));
    }
    Ok(NoMigrationChi {
        chi,
        lambda,
        minimizers,
    })
}
