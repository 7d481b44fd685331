//! The static random environment: one positive mean-offspring value per
//! (type edge, site), drawn once and fixed for all time.
//!
//! The canonical law is `m = E^ρ` with `E` standard exponential, so the
//! upper tail is exactly Weibull, `P(m > r) = exp(-r^{1/ρ})`, and the
//! log-moment generating function is available in closed form,
//! `H(t) = log⟨m^t⟩ = log Γ(ρ t + 1)`. That closed form is what makes the
//! annealed computations exact.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::numeric::ln_gamma;
use crate::rng::SplitMix64;
use crate::typegraph::TypeGraph;

/// Sampled mean-offspring field `m_ij(y) > 0` for edges `(i,j)` and sites
/// `y`; zero off the edge set.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    n_types: usize,
    n_sites: usize,
    means: Vec<f64>, // dense (i * n_types + j) * n_sites + y, 0 off edges
}

impl Environment {
    /// Draw the canonical environment: independently per edge and site,
    /// `m_ij(y) = E^{ρ_ij}` with `E` standard exponential.
    pub fn sample(g: &TypeGraph, n_sites: usize, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let n = g.n_types();
        let mut means = vec![0.0; n * n * n_sites];
        for &(i, j) in g.edges() {
            let rho = g.rho(i, j);
            for y in 0..n_sites {
                let e = rng.next_exponential();
                means[(i * n + j) * n_sites + y] = e.powf(rho);
            }
        }
        Environment {
            n_types: n,
            n_sites,
            means,
        }
    }

    /// Build from explicit per-edge, per-site means (one row per edge in
    /// `g.edges()` order).
    pub fn from_means(g: &TypeGraph, n_sites: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != g.n_edges() {
            return Err(Error::DimensionMismatch(format!(
                "{} mean rows for {} edges",
                rows.len(),
                g.n_edges()
            )));
        }
        let n = g.n_types();
        let mut means = vec![0.0; n * n * n_sites];
        for (&(i, j), row) in g.edges().iter().zip(rows) {
            if row.len() != n_sites {
                return Err(Error::DimensionMismatch(format!(
                    "edge ({i},{j}) has {} means for {n_sites} sites",
                    row.len()
                )));
            }
            for (y, &m) in row.iter().enumerate() {
                if m <= 0.0 || !m.is_finite() {
                    return Err(Error::NonpositiveParameter {
                        name: "mean offspring",
                        value: m,
                    });
                }
                means[(i * n + j) * n_sites + y] = m;
            }
        }
        Ok(Environment {
            n_types: n,
            n_sites,
            means,
        })
    }

    pub fn n_types(&self) -> usize {
        self.n_types
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// `m_ij(y)`; zero when `(i,j)` is not an edge.
    pub fn mean(&self, i: usize, j: usize, y: usize) -> f64 {
        self.means[(i * self.n_types + j) * self.n_sites + y]
    }

    /// Serialize as `i,j,y,m` CSV lines (17 significant digits).
    pub fn to_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "i,j,y,m")?;
        for i in 0..self.n_types {
            for j in 0..self.n_types {
                for y in 0..self.n_sites {
                    let m = self.mean(i, j, y);
                    if m > 0.0 {
                        writeln!(out, "{i},{j},{y},{m:.16e}")?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Read back an `i,j,y,m` CSV (comment lines start with '#').
    pub fn from_csv(g: &TypeGraph, n_sites: usize, input: &mut impl BufRead) -> Result<Self> {
        let n = g.n_types();
        let mut means = vec![0.0; n * n * n_sites];
        let mut filled = vec![false; n * n * n_sites];
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::ConfigParse {
                line: lineno + 1,
                msg: e.to_string(),
            })?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with("i,") {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::ConfigParse {
                    line: lineno + 1,
                    msg: format!("expected i,j,y,m, got `{trimmed}`"),
                });
            }
            let parse_idx = |s: &str| -> Result<usize> {
                s.trim().parse().map_err(|_| Error::ConfigParse {
                    line: lineno + 1,
                    msg: format!("bad index `{s}`"),
                })
            };
            let (i, j, y) = (
                parse_idx(fields[0])?,
                parse_idx(fields[1])?,
                parse_idx(fields[2])?,
            );
            let m: f64 = fields[3].trim().parse().map_err(|_| Error::ConfigParse {
                line: lineno + 1,
                msg: format!("bad mean `{}`", fields[3]),
            })?;
            if !g.has_edge(i, j) || y >= n_sites {
                return Err(Error::ConfigParse {
                    line: lineno + 1,
                    msg: format!("({i},{j},{y}) is outside the graph/site set"),
                });
            }
            means[(i * n + j) * n_sites + y] = m;
            filled[(i * n + j) * n_sites + y] = true;
        }
        for &(i, j) in g.edges() {
            for y in 0..n_sites {
                if !filled[(i * n + j) * n_sites + y] {
                    return Err(Error::DimensionMismatch(format!(
                        "environment CSV is missing edge ({i},{j}) at site {y}"
                    )));
                }
            }
        }
        Ok(Environment {
            n_types: n,
            n_sites,
            means,
        })
    }
}

/// Log-moment generating function of the canonical environment law:
/// `H(t) = log⟨m^t⟩ = log Γ(ρ t + 1)` for `m = E^ρ`.
pub fn log_mgf(rho: f64, t: f64) -> Result<f64> {
    if rho <= 0.0 {
        return Err(Error::NonpositiveParameter {
            name: "rho",
            value: rho,
        });
    }
    if t <= 0.0 {
        return Err(Error::NonpositiveParameter {
            name: "t",
            value: t,
        });
    }
    Ok(ln_gamma(rho * t + 1.0))
}

/// The normalized defect `(H(ct) − c H(t))/t − ρ c log c`, which tends to 0
/// as `t → ∞`; how fast it vanishes is the tail regularity the whole
/// asymptotic analysis rests on.
pub fn assumption_residual(rho: f64, c: f64, t: f64) -> Result<f64> {
    if !(0.0 < c && c < 1.0) {
        return Err(Error::PreconditionViolated(format!(
            "c must lie in (0,1), got {c}"
        )));
    }
    let h_ct = log_mgf(rho, c * t)?;
    let h_t = log_mgf(rho, t)?;
    Ok((h_ct - c * h_t) / t - rho * c * c.ln())
}

/// Offspring distribution attached to one (edge, site) pair. The model
/// constrains only the mean; Poisson is the concrete family used here,
/// which keeps per-cell aggregation exact (sums of independent Poissons
/// are Poisson).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffspringLaw {
    mean: f64,
    family: OffspringFamily,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffspringFamily {
    Poisson,
}

impl OffspringLaw {
    pub fn poisson(mean: f64) -> Result<Self> {
        if mean <= 0.0 || !mean.is_finite() {
            return Err(Error::NonpositiveParameter {
                name: "mean",
                value: mean,
            });
        }
        Ok(OffspringLaw {
            mean,
            family: OffspringFamily::Poisson,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn family(&self) -> OffspringFamily {
        self.family
    }

    /// Draw one offspring count with a fresh generator.
    pub fn sample(&self, seed: u64) -> u64 {
        self.sample_with(&mut SplitMix64::new(seed))
    }

    pub fn sample_with(&self, rng: &mut SplitMix64) -> u64 {
        sample_poisson(self.mean, rng)
    }
}

/// Exact Poisson sampling: Knuth multiplication below mean 10, Hörmann's
/// PTRS transformed rejection above (exact, O(1) per draw).
pub fn sample_poisson(mean: f64, rng: &mut SplitMix64) -> u64 {
    debug_assert!(mean > 0.0);
    if mean < 10.0 {
        let limit = (-mean).exp();
        let mut product = rng.next_f64_open();
        let mut count = 0u64;
        while product > limit {
            product *= rng.next_f64_open();
            count += 1;
        }
        count
    } else {
        poisson_ptrs(mean, rng)
    }
}

fn poisson_ptrs(mean: f64, rng: &mut SplitMix64) -> u64 {
    let b = 0.931 + 2.53 * mean.sqrt();
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    let ln_mean = mean.ln();
    loop {
        let u = rng.next_f64() - 0.5;
        let v = rng.next_f64_open();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let rhs = k * ln_mean - mean - ln_gamma(k + 1.0);
        if (v * inv_alpha / (a / (us * us) + b)).ln() <= rhs {
            return k as u64;
        }
    }
}
