//! Dense two-phase primal simplex for the small equality-form linear
//! programs that show up here (transportation-style polytopes over edge
//! sets, separation checks). Bland's rule throughout, so degenerate
//! vertices cannot cycle.

const EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

struct Tableau {
    rows: Vec<Vec<f64>>, // m rows of n coefficients plus rhs
    basis: Vec<usize>,
    n_cols: usize,
}

impl Tableau {
    fn rhr(&self, r: usize) -> f64 {
        self.rows[r][self.n_cols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= piv;
        }
        let pivot_row = self.rows[row].clone();
        for (r, other) in self.rows.iter_mut().enumerate() {
            if r != row && other[col] != 0.0 {
                let f = other[col];
                for (v, p) in other.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Maximize c over the current basis; `allowed` masks columns that may
    /// enter. Returns false when unbounded.
    fn run(&mut self, c: &[f64], allowed: &[bool]) -> bool {
        loop {
            // reduced costs from the basis
            let mut y = vec![0.0; self.rows.len()];
            for (r, &b) in self.basis.iter().enumerate() {
                y[r] = c[b];
            }
            let mut entering = None;
            for j in 0..self.n_cols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut red = c[j];
                for (r, row) in self.rows.iter().enumerate() {
                    red -= y[r] * row[j];
                }
                if red > EPS {
                    entering = Some(j); // Bland: first improving index
                    break;
                }
            }
            let Some(j) = entering else { return true };
            let mut leaving: Option<(usize, f64)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if row[j] > EPS {
                    let ratio = self.rhr(r) / row[j];
                    let better = match leaving {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - EPS
                                || (ratio < lratio + EPS && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leaving = Some((r, ratio));
                    }
                }
            }
            let Some((row, _)) = leaving else {
                return false;
            };
            self.pivot(row, j);
        }
    }
}

/// Phase 1: find a basic feasible solution of `a x = b, x >= 0`.
/// Rows with negative rhs are flipped first. Returns the tableau (with
/// artificial columns removed from eligibility) or None if infeasible.
fn phase1(a: &[Vec<f64>], b: &[f64]) -> Option<(Tableau, usize)> {
    let m = a.len();
    let n = a[0].len();
    let total = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut r = vec![0.0; total + 1];
        for (j, &v) in row.iter().enumerate() {
            r[j] = sign * v;
        }
        r[n + i] = 1.0;
        r[total] = sign * b[i];
        rows.push(r);
    }
    let mut t = Tableau {
        rows,
        basis: (n..total).collect(),
        n_cols: total,
    };
    let mut cost = vec![0.0; total];
    for cj in cost.iter_mut().skip(n) {
        *cj = -1.0;
    }
    let allowed = vec![true; total];
    t.run(&cost, &allowed);
    let infeasibility: f64 = t
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= n)
        .map(|(r, _)| t.rhr(r))
        .sum();
    if infeasibility > 1e-7 {
        return None;
    }
    // Drive remaining artificials (basic at zero) out where possible.
    for r in 0..m {
        if t.basis[r] >= n {
            if let Some(j) = (0..n).find(|&j| t.rows[r][j].abs() > EPS) {
                t.pivot(r, j);
            }
        }
    }
    Some((t, n))
}

/// Maximize `c · x` subject to `a x = b`, `x >= 0`.
/// Returns None when infeasible or unbounded.
pub fn maximize(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<LpSolution> {
    let (mut t, n) = phase1(a, b)?;
    let mut cost = vec![0.0; t.n_cols];
    cost[..n].copy_from_slice(c);
    let mut allowed = vec![false; t.n_cols];
    for flag in allowed.iter_mut().take(n) {
        *flag = true;
    }
    // A leftover artificial basic at zero sits on a redundant row; it never
    // carries value, so it is simply not eligible to re-enter.
    if !t.run(&cost, &allowed) {
        return None;
    }
    let mut x = vec![0.0; n];
    for (r, &bv) in t.basis.iter().enumerate() {
        if bv < n {
            x[bv] = t.rhr(r).max(0.0);
        }
    }
    let value = x.iter().zip(c).map(|(xi, ci)| xi * ci).sum();
    Some(LpSolution { x, value })
}

/// Is `a x = b, x >= 0` feasible?
pub fn feasible(a: &[Vec<f64>], b: &[f64]) -> bool {
    phase1(a, b).is_some()
}
