//! The energy, entropy and degree functionals on shift-invariant pair
//! measures of the product chain. The second-order growth constant is the
//! constrained infimum of entropy minus energy.

use crate::chain::{PairMeasure, SpatialChain};
use crate::numeric::xlogx;
use crate::typegraph::TypeGraph;

/// Energy functional:
/// `S(ν) = Σ_(i,j) ρ_ij Σ_x ν̄(i,j,x) log ν̄(i,j,x) + Σ_(i,j) ν̄(i,j) ρ_ij log ρ_ij`,
/// with 0·log 0 = 0.
pub fn energy(nu: &PairMeasure, g: &TypeGraph) -> f64 {
    let mut s = 0.0;
    for &(i, j) in g.edges() {
        let rho = g.rho(i, j);
        for x in 0..nu.n_sites() {
            s += rho * xlogx(nu.nu_ijx(i, j, x));
        }
        s += nu.nu_ij(i, j) * rho * rho.ln();
    }
    s
}

/// Entropy functional:
/// `I(ν) = Σ ν((i,x),(j,y)) log[ ν((i,x),(j,y)) / (ν̄(i,x) P_xy 1{(i,j) edge}) ]`.
///
/// Returns `+∞` when ν charges a pair the reference measure does not — the
/// sentinel is in-band, not an error.
pub fn entropy(nu: &PairMeasure, chain: &SpatialChain, g: &TypeGraph) -> f64 {
    let mut total = 0.0;
    for i in 0..nu.n_types() {
        for x in 0..nu.n_sites() {
            let base = nu.nu_ix(i, x);
            for j in 0..nu.n_types() {
                let edge = g.has_edge(i, j);
                for y in 0..nu.n_sites() {
                    let w = nu.weight((i, x), (j, y));
                    if w == 0.0 {
                        continue;
                    }
                    let reference = if edge { base * chain.prob(x, y) } else { 0.0 };
                    if reference == 0.0 {
                        return f64::INFINITY;
                    }
                    total += w * (w / reference).ln();
                }
            }
        }
    }
    total
}

/// Degree functional `D(ν) = Σ_k ν̄(k) log deg⁺(k)`.
pub fn degree_term(nu: &PairMeasure, g: &TypeGraph) -> f64 {
    (0..nu.n_types())
        .map(|k| nu.nu_i(k) * (g.outdeg(k) as f64).ln())
        .sum()
}

/// The good rate function of the pair empirical measure of the product
/// chain, `I'(ν) = I(ν) + D(ν)`. Nonnegative, zero exactly at the chain's
/// own stationary pair measure.
pub fn rate_function(nu: &PairMeasure, chain: &SpatialChain, g: &TypeGraph) -> f64 {
    entropy(nu, chain, g) + degree_term(nu, g)
}
