//! The logarithmic Frobenius eigenvalue μ(A) of a nonnegative irreducible
//! matrix — the growth rate of row sums of A^k — computed two independent
//! ways: power iteration with Collatz-Wielandt bounds, and its variational
//! dual over shift-invariant pair measures.

use crate::error::{Error, Result};
use crate::numeric::is_irreducible;
use crate::rng::SplitMix64;
use crate::variational::balance_sweep;

fn validate(a: &[Vec<f64>]) -> Result<usize> {
    let n = a.len();
    if n == 0 || a.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch("matrix must be square".into()));
    }
    for row in a {
        for &v in row {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::PreconditionViolated(
                    "matrix entries must be finite and nonnegative".into(),
                ));
            }
        }
    }
    let support: Vec<Vec<bool>> = a
        .iter()
        .map(|row| row.iter().map(|&v| v > 0.0).collect())
        .collect();
    if !is_irreducible(&support) {
        return Err(Error::NotIrreducible);
    }
    Ok(n)
}

/// `μ(A) = log` of the spectral radius, for nonnegative irreducible `A`.
///
/// The iteration runs on `A + cI` (primitive, so periodicity cannot make it
/// oscillate); the Perron root shifts by exactly `c`. Collatz-Wielandt
/// ratios give two-sided bounds, and the limit is start-independent — the
/// value is computed from two different starting vectors and the runs must
/// agree.
pub fn frobenius_mu(a: &[Vec<f64>]) -> Result<f64> {
    let n = validate(a)?;
    let shift = a.iter().flatten().copied().fold(0.0f64, f64::max).max(1.0);
    let r1 = shifted_perron_root(a, shift, &vec![1.0; n]);
    let alt: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
    let r2 = shifted_perron_root(a, shift, &alt);
    debug_assert!(
        ((r1 - shift).ln() - (r2 - shift).ln()).abs() < 1e-9,
        "start dependence: {r1} vs {r2}"
    );
    Ok((0.5 * (r1 + r2) - shift).ln())
}

/// Perron root of `A + shift·I` by power iteration; converges when the
/// Collatz-Wielandt bounds pinch to relative 1e-14.
fn shifted_perron_root(a: &[Vec<f64>], shift: f64, start: &[f64]) -> f64 {
    let n = a.len();
    let mut v = start.to_vec();
    let mut bounds = (0.0, f64::INFINITY);
    for _ in 0..200_000 {
        let mut w = vec![0.0; n];
        for (i, wi) in w.iter_mut().enumerate() {
            let mut acc = shift * v[i];
            for j in 0..n {
                acc += a[i][j] * v[j];
            }
            *wi = acc;
        }
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..n {
            if v[i] > 0.0 {
                let r = w[i] / v[i];
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        bounds = (lo, hi);
        if hi - lo <= 1e-14 * hi {
            break;
        }
        let m = w.iter().copied().fold(0.0, f64::max);
        v = w;
        v.iter_mut().for_each(|x| *x /= m);
    }
    0.5 * (bounds.0 + bounds.1)
}

#[derive(Debug, Clone)]
pub struct FrobeniusOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub balance_sweeps: usize,
}

impl Default for FrobeniusOptions {
    fn default() -> Self {
        FrobeniusOptions {
            restarts: 3,
            seed: 0,
            max_iters: 1500,
            balance_sweeps: 250,
        }
    }
}

/// The variational dual:
/// `μ(A) = sup { ⟨ν, log A⟩ − Σ ν(i,j) log(ν(i,j)/ν̄(i)) }` over
/// shift-invariant pair measures supported on the positive entries of `A`.
///
/// Maximized by multi-start gradient ascent with numerical gradients; the
/// feasible set is parametrized by positive tables pushed onto the
/// equal-marginal constraint with balancing sweeps.
pub fn frobenius_mu_variational(a: &[Vec<f64>], opts: &FrobeniusOptions) -> Result<f64> {
    let n = validate(a)?;
    let support: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| a[i][j] > 0.0)
        .collect();
    let log_a: Vec<f64> = support.iter().map(|&(i, j)| a[i][j].ln()).collect();

    let build = |theta: &[f64]| -> Vec<f64> {
        let mut table = vec![0.0; n * n];
        for (&(i, j), &t) in support.iter().zip(theta) {
            table[i * n + j] = t.clamp(-30.0, 30.0).exp();
        }
        for _ in 0..opts.balance_sweeps {
            if balance_sweep(&mut table, n) < 1e-14 {
                break;
            }
        }
        let total: f64 = table.iter().sum();
        table.iter_mut().for_each(|v| *v /= total);
        table
    };
    let objective = |theta: &[f64]| -> f64 {
        let nu = build(theta);
        let mut rows = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                rows[i] += nu[i * n + j];
            }
        }
        let mut val = 0.0;
        for (k, &(i, j)) in support.iter().enumerate() {
            let w = nu[i * n + j];
            if w > 0.0 {
                val += w * log_a[k] - w * (w / rows[i]).ln();
            }
        }
        val
    };

    let mut best = f64::NEG_INFINITY;
    for restart in 0..opts.restarts.max(1) {
        let mut rng = SplitMix64::new(crate::rng::derive(opts.seed, restart as u64));
        let mut theta: Vec<f64> = if restart == 0 {
            vec![0.0; support.len()]
        } else {
            (0..support.len())
                .map(|_| 2.0 * (rng.next_f64() - 0.5))
                .collect()
        };
        let mut obj = objective(&theta);
        const FD_EPS: f64 = 1e-6;
        let fd_grad = |theta: &mut Vec<f64>| -> Vec<f64> {
            let mut grad = vec![0.0; theta.len()];
            for k in 0..theta.len() {
                let saved = theta[k];
                theta[k] = saved + FD_EPS;
                let up = objective(theta);
                theta[k] = saved - FD_EPS;
                let down = objective(theta);
                theta[k] = saved;
                grad[k] = (up - down) / (2.0 * FD_EPS);
            }
            grad
        };
        // gradient ascent with Barzilai-Borwein steps; a plain backtracking
        // step crawls near the flat optimum
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut stall = 0;
        for _ in 0..opts.max_iters {
            let grad = fd_grad(&mut theta);
            let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if gnorm < 1e-11 {
                break;
            }
            let bb = prev.as_ref().map(|(pt, pg)| {
                let mut sy = 0.0;
                let mut yy = 0.0;
                for k in 0..theta.len() {
                    let s = theta[k] - pt[k];
                    let y = grad[k] - pg[k];
                    sy += s * y;
                    yy += y * y;
                }
                if yy > 0.0 {
                    (sy / yy).abs()
                } else {
                    0.5
                }
            });
            let mut eta = bb.unwrap_or(0.5).clamp(1e-7, 50.0);
            let mut improved = false;
            for _ in 0..50 {
                let cand: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t + eta * g).collect();
                let cand_obj = objective(&cand);
                if cand_obj > obj {
                    prev = Some((theta.clone(), grad.clone()));
                    theta = cand;
                    obj = cand_obj;
                    improved = true;
                    break;
                }
                eta *= 0.5;
            }
            if !improved {
                stall += 1;
                prev = None;
                if stall >= 3 {
                    break;
                }
            } else {
                stall = 0;
            }
        }
        best = best.max(obj);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_ones_matrix_gives_log_two() {
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let mu = frobenius_mu(&a).unwrap();
        assert!((mu - 2f64.ln()).abs() < 1e-12);
        let dual = frobenius_mu_variational(&a, &FrobeniusOptions::default()).unwrap();
        assert!((dual - 2f64.ln()).abs() < 1e-7, "dual {dual}");
    }

    #[test]
    fn periodic_two_cycle_gives_half_log_six() {
        // eigenvalues ±√6: plain power iteration would oscillate
        let a = vec![vec![0.0, 2.0], vec![3.0, 0.0]];
        let mu = frobenius_mu(&a).unwrap();
        assert!((mu - 0.5 * 6f64.ln()).abs() < 1e-12, "mu = {mu}");
        let dual = frobenius_mu_variational(&a, &FrobeniusOptions::default()).unwrap();
        assert!((dual - 0.5 * 6f64.ln()).abs() < 1e-7, "dual {dual}");
    }

    #[test]
    fn rejects_reducible_matrices() {
        let a = vec![vec![1.0, 0.0], vec![1.0, 1.0]];
        assert_eq!(frobenius_mu(&a), Err(Error::NotIrreducible));
        assert!(matches!(
            frobenius_mu_variational(&a, &FrobeniusOptions::default()),
            Err(Error::NotIrreducible)
        ));
        let neg = vec![vec![1.0, -1.0], vec![1.0, 1.0]];
        assert!(frobenius_mu(&neg).is_err());
    }

    #[test]
    fn mu_scales_additively_under_matrix_scaling() {
        // r(cA) = c r(A)
        let a = vec![vec![0.5, 1.5], vec![2.0, 0.25]];
        let mu = frobenius_mu(&a).unwrap();
        let scaled: Vec<Vec<f64>> = a
            .iter()
            .map(|r| r.iter().map(|v| 4.0 * v).collect())
            .collect();
        let mu4 = frobenius_mu(&scaled).unwrap();
        assert!((mu4 - mu - 4f64.ln()).abs() < 1e-11);
    }

    #[test]
    fn dual_matches_power_iteration_on_random_matrices() {
        let mut rng = SplitMix64::new(303);
        for trial in 0..12 {
            let n = 2 + (trial % 4); // 2..=5
            let a: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| 0.1 + 2.0 * rng.next_f64()).collect())
                .collect();
            let mu = frobenius_mu(&a).unwrap();
            let dual = frobenius_mu_variational(&a, &FrobeniusOptions::default()).unwrap();
            assert!((mu - dual).abs() < 1e-6, "n={n}: power {mu} vs dual {dual}");
        }
    }
}
