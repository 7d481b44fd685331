//! The coupled variational problems behind the moment asymptotics: the
//! leading exponent λ(ρ) over simple cycles, the functionals S, I, D on
//! pair measures, the second-order constant χ(ρ), its no-migration closed
//! form, and Frobenius-eigenvalue utilities with their variational dual.

mod chi;
mod frobenius;
mod functionals;
mod lambda;

pub use chi::{chi_no_migration, chi_solve, ChiOptions, NoMigrationChi, VariationalResult};
pub use frobenius::{frobenius_mu, frobenius_mu_variational, FrobeniusOptions};
pub use functionals::{degree_term, energy, entropy, rate_function};
pub use lambda::{
    lambda_lp_oracle, lambda_max_mean_cycle, polytope_vertices, strongly_connected_components,
    ENUMERATION_LIMIT,
};

/// One multiplicative balancing sweep pushing a nonnegative square table
/// toward equal row and column sums (conjugation by a diagonal matrix, so
/// support and cycle products are untouched). The quarter-power damping
/// keeps the iteration from oscillating on periodic supports, where the
/// undamped update just swaps the two marginals. Returns the pre-sweep
/// maximum row/column discrepancy.
pub(crate) fn balance_sweep(table: &mut [f64], n: usize) -> f64 {
    let mut row = vec![0.0; n];
    let mut col = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let v = table[i * n + j];
            row[i] += v;
            col[j] += v;
        }
    }
    let mut gap = 0.0f64;
    let phi: Vec<f64> = (0..n)
        .map(|i| {
            gap = gap.max((row[i] - col[i]).abs());
            if row[i] > 0.0 && col[i] > 0.0 {
                (col[i] / row[i]).powf(0.25)
            } else {
                1.0
            }
        })
        .collect();
    for i in 0..n {
        for j in 0..n {
            table[i * n + j] *= phi[i] / phi[j];
        }
    }
    gap
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balancing_equalizes_marginals() {
        let mut rng = crate::rng::SplitMix64::new(1);
        let n = 4;
        let mut table: Vec<f64> = (0..n * n).map(|_| rng.next_exponential()).collect();
        for _ in 0..500 {
            balance_sweep(&mut table, n);
        }
        let gap = balance_sweep(&mut table, n);
        assert!(gap < 1e-12, "gap {gap}");
    }
}
