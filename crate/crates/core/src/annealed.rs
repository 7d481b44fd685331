//! Environment-averaged (annealed) moments of the population size.
//!
//! Averaging the path-sum representation over the environment factorizes
//! into closed-form moments `⟨m^c⟩ = Γ(ρ c + 1)` per (edge, source-site)
//! slot, where `c` counts how often a path uses that slot. The exact
//! engine is a dynamic program over (current state, slot-count vector);
//! grouping paths by their count vector is what keeps it polynomial in
//! cases where raw enumeration is hopeless. A Monte Carlo estimator over
//! sampled environments cross-checks it.

use std::collections::HashMap;

use crate::chain::SpatialChain;
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::expectation::{log_expected_population, MeanMatrix};
use crate::numeric::{ln_gamma, pairwise_logsumexp};
use crate::typegraph::TypeGraph;

/// Default cap on cumulative (state, count-vector) entries in the DP.
pub const DP_BUDGET: usize = 50_000_000;

/// Occupation counts per (edge, source site) slot along a path; the total
/// equals the path length.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CountVector {
    counts: Vec<u16>,
}

impl CountVector {
    fn zero(n_slots: usize) -> Self {
        CountVector {
            counts: vec![0; n_slots],
        }
    }

    fn bumped(&self, slot: usize) -> Self {
        let mut c = self.counts.clone();
        c[slot] += 1;
        CountVector { counts: c }
    }

    pub fn counts(&self) -> &[u16] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

/// Exact `log ⟨u_n(i, x)⟩` under the canonical environment.
///
/// States are `(type, site, CountVector)`; the accumulated weight of a
/// state is the total path probability under the spatial chain of all
/// paths reaching it — type transitions carry weight 1, which keeps the
/// outdegree bookkeeping exact without any cancellation. Terminal states
/// are weighted by `Π_slots Γ(ρ c + 1)` in the log domain.
pub fn annealed_moment_exact(
    g: &TypeGraph,
    chain: &SpatialChain,
    i: usize,
    x: usize,
    n: usize,
    budget: Option<usize>,
) -> Result<f64> {
    let budget = budget.unwrap_or(DP_BUDGET);
    if n == 0 {
        return Ok(0.0);
    }
    let s = chain.n_sites();
    let n_slots = g.n_edges() * s;
    let slot = |edge_idx: usize, src_site: usize| edge_idx * s + src_site;

    let mut layer: HashMap<(usize, usize, CountVector), f64> = HashMap::new();
    layer.insert((i, x, CountVector::zero(n_slots)), 1.0);
    let mut entries = layer.len();

    for _ in 0..n {
        let mut next: HashMap<(usize, usize, CountVector), f64> =
            HashMap::with_capacity(layer.len() * 2);
        for ((t, site, counts), w) in layer {
            for j in g.successors(t) {
                let e = g.edge_index(t, j).unwrap();
                let bumped = counts.bumped(slot(e, site));
                for y in 0..s {
                    let p = chain.prob(site, y);
                    if p == 0.0 {
                        continue;
                    }
                    *next.entry((j, y, bumped.clone())).or_insert(0.0) += w * p;
                }
            }
        }
        entries += next.len();
        if entries > budget {
            return Err(Error::DpBudgetExceeded { entries, budget });
        }
        layer = next;
    }

    let mut terms = Vec::with_capacity(layer.len());
    for ((_, _, counts), w) in &layer {
        let mut log_term = w.ln();
        for (k, &c) in counts.counts().iter().enumerate() {
            if c > 0 {
                let rho = g.rho_at(k / s);
                log_term += ln_gamma(rho * c as f64 + 1.0);
            }
        }
        terms.push(log_term);
    }
    // deterministic reduction order
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(pairwise_logsumexp(&terms))
}

/// Monte Carlo estimate of `log ⟨u_n(i, x)⟩` over sampled environments.
#[derive(Debug, Clone)]
pub struct McMoment {
    /// log of the sample mean of `u_n` (linear-domain average, log-sum-exp
    /// stabilized).
    pub log_mean: f64,
    /// Jackknife standard error of `log_mean`.
    pub stderr: f64,
    /// True when one environment carries more than half the sample mass;
    /// the estimate is then dominated by a single tail event.
    pub heavy_tail: bool,
}

/// Average `u_n` exactly-per-environment over `num_envs` sampled
/// environments. Replica `k` uses the derived seed `derive(seed, k)`, so
/// partitioning replicas across `threads` workers cannot change the
/// result.
#[allow(clippy::too_many_arguments)]
pub fn annealed_moment_mc(
    g: &TypeGraph,
    chain: &SpatialChain,
    i: usize,
    x: usize,
    n: usize,
    num_envs: usize,
    seed: u64,
    threads: usize,
) -> Result<McMoment> {
    if num_envs < 2 {
        return Err(Error::PreconditionViolated(format!(
            "need at least 2 environments, got {num_envs}"
        )));
    }
    let logs = sample_log_populations(g, chain, i, x, n, num_envs, seed, threads.max(1))?;
    let k = num_envs as f64;
    let lse = pairwise_logsumexp(&logs);
    let log_mean = lse - k.ln();

    // jackknife over leave-one-out log means
    let mut loo = Vec::with_capacity(num_envs);
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logs.iter().map(|&v| (v - m).exp()).sum();
    for &v in &logs {
        let rest = (total - (v - m).exp()).max(f64::MIN_POSITIVE);
        loo.push(m + rest.ln() - (k - 1.0).ln());
    }
    let loo_mean = loo.iter().sum::<f64>() / k;
    let var = loo
        .iter()
        .map(|&t| (t - loo_mean) * (t - loo_mean))
        .sum::<f64>()
        * (k - 1.0)
        / k;
    let heavy_tail = logs.iter().any(|&v| v - lse > 0.5f64.ln());
    Ok(McMoment {
        log_mean,
        stderr: var.sqrt(),
        heavy_tail,
    })
}

#[allow(clippy::too_many_arguments)]
fn sample_log_populations(
    g: &TypeGraph,
    chain: &SpatialChain,
    i: usize,
    x: usize,
    n: usize,
    num_envs: usize,
    seed: u64,
    threads: usize,
) -> Result<Vec<f64>> {
    let one = |k: u64| -> Result<f64> {
        let env = Environment::sample(g, chain.n_sites(), crate::rng::derive(seed, k));
        let b = MeanMatrix::new(&env, chain, g)?;
        Ok(log_expected_population(&b, i, x, n))
    };
    if threads <= 1 {
        return (0..num_envs as u64).map(one).collect();
    }
    let chunk = num_envs.div_ceil(threads);
    let mut logs = vec![0.0; num_envs];
    let mut first_err = None;
    std::thread::scope(|scope| {
        let handles: Vec<_> = logs
            .chunks_mut(chunk)
            .enumerate()
            .map(|(c, out)| {
                scope.spawn(move || -> Result<()> {
                    for (off, slot) in out.iter_mut().enumerate() {
                        *slot = one((c * chunk + off) as u64)?;
                    }
                    Ok(())
                })
            })
            .collect();
        for h in handles {
            if let Err(e) = h.join().expect("worker panicked") {
                first_err.get_or_insert(e);
            }
        }
    });
    match first_err {
        Some(e) => Err(e),
        None => Ok(logs),
    }
}

/// Normalized remainders `r_n = (log⟨u_n⟩ − λ log Γ(n+1)) / n`; under the
/// moment asymptotics these tend to `−χ`.
#[derive(Debug, Clone)]
pub struct AsymFit {
    pub ns: Vec<usize>,
    pub logmoments: Vec<f64>,
    pub lambda_used: f64,
    pub r: Vec<f64>,
}

impl AsymFit {
    /// The last remainder — the best available point estimate of `−χ`.
    pub fn last_r(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// Least-squares slope of `r_n` against `n`; shrinks toward 0 as the
    /// `o(n)/n` corrections die out.
    pub fn trend_slope(&self) -> f64 {
        let k = self.ns.len() as f64;
        let mx = self.ns.iter().map(|&n| n as f64).sum::<f64>() / k;
        let my = self.r.iter().sum::<f64>() / k;
        let mut num = 0.0;
        let mut den = 0.0;
        for (&n, &r) in self.ns.iter().zip(&self.r) {
            num += (n as f64 - mx) * (r - my);
            den += (n as f64 - mx) * (n as f64 - mx);
        }
        num / den
    }
}

pub fn asymptotic_fit(ns: &[usize], logmoments: &[f64], lambda: f64) -> Result<AsymFit> {
    if ns.len() != logmoments.len() {
        return Err(Error::LengthMismatch {
            left: ns.len(),
            right: logmoments.len(),
        });
    }
    if ns.is_empty() {
        return Err(Error::PreconditionViolated("empty n-grid".into()));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) || ns[0] == 0 {
        return Err(Error::PreconditionViolated(
            "n-grid must be positive and strictly increasing".into(),
        ));
    }
    let r = ns
        .iter()
        .zip(logmoments)
        .map(|(&n, &lm)| (lm - lambda * ln_gamma(n as f64 + 1.0)) / n as f64)
        .collect();
    Ok(AsymFit {
        ns: ns.to_vec(),
        logmoments: logmoments.to_vec(),
        lambda_used: lambda,
        r,
    })
}
