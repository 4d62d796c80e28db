//! Dense tableau simplex for small linear feasibility problems.
//!
//! The only question asked here is "does `A x = b, x ≥ 0` have a solution",
//! answered by minimising the ℓ₁ residual
//!
//! ```text
//! min Σ (s⁺ + s⁻)   s.t.   A x + s⁺ − s⁻ = b,   x, s⁺, s⁻ ≥ 0
//! ```
//!
//! which always has the slack basis as a feasible start. Bland's rule keeps
//! the method finite on the degenerate systems that stochastic-matrix
//! constraints tend to produce (redundant row sums).

const PIVOT_EPS: f64 = 1e-12;

/// Best ℓ₁ fit of `A x = b` over `x ≥ 0`.
#[derive(Debug, Clone)]
pub struct L1Fit {
    pub x: Vec<f64>,
    /// Optimal `Σ |b − A x|`.
    pub residual: f64,
    pub pivots: usize,
}

impl L1Fit {
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

/// Minimises `‖A x − b‖₁` subject to `x ≥ 0`. `a` is row-major, one `Vec`
/// per constraint, all of the same length.
pub fn l1_feasibility(a: &[Vec<f64>], b: &[f64]) -> L1Fit {
    assert_eq!(a.len(), b.len(), "one right-hand side per constraint");
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let cols = n + 2 * m;
    let rhs = cols;

    // Rows with negative rhs are negated so the s⁺ columns form a feasible basis.
    let mut tab = vec![vec![0.0; cols + 1]; m];
    for (i, (row, &bi)) in a.iter().zip(b).enumerate() {
        assert_eq!(row.len(), n, "constraint rows must share a length");
        let sign = if bi < 0.0 { -1.0 } else { 1.0 };
        for (t, &v) in tab[i].iter_mut().zip(row) {
            *t = sign * v;
        }
        tab[i][n + i] = 1.0;
        tab[i][n + m + i] = -1.0;
        tab[i][rhs] = sign * bi;
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let cost = |j: usize| if j < n { 0.0 } else { 1.0 };
    // Reduced costs: r_j = c_j - Σ_i c_{B_i} T_ij, all basic costs start at 1.
    let mut reduced = vec![0.0; cols + 1];
    for j in 0..=cols {
        let c = if j == rhs { 0.0 } else { cost(j) };
        reduced[j] = c - tab.iter().map(|row| row[j]).sum::<f64>();
    }

    let mut pivots = 0;
    let max_pivots = 50 * (m + cols).max(1);
    while pivots < max_pivots {
        let Some(enter) = (0..cols).find(|&j| reduced[j] < -PIVOT_EPS) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for (i, row) in tab.iter().enumerate() {
            let coef = row[enter];
            if coef <= PIVOT_EPS {
                continue;
            }
            let ratio = row[rhs] / coef;
            leave = match leave {
                None => Some((i, ratio)),
                Some((li, lr)) => {
                    if ratio < lr - PIVOT_EPS
                        || ((ratio - lr).abs() <= PIVOT_EPS && basis[i] < basis[li])
                    {
                        Some((i, ratio))
                    } else {
                        Some((li, lr))
                    }
                }
            };
        }
        // The objective is bounded below by zero, so an entering column always
        // has a blocking row; a missing one only happens through round-off.
        let Some((row_idx, _)) = leave else { break };
        pivot(&mut tab, &mut reduced, row_idx, enter);
        basis[row_idx] = enter;
        pivots += 1;
    }

    let mut x = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = tab[i][rhs].max(0.0);
        }
    }
    let residual = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| (bi - row.iter().zip(&x).map(|(r, v)| r * v).sum::<f64>()).abs())
        .sum();
    L1Fit {
        x,
        residual,
        pivots,
    }
}

fn pivot(tab: &mut [Vec<f64>], reduced: &mut [f64], row: usize, col: usize) {
    let p = tab[row][col];
    tab[row].iter_mut().for_each(|v| *v /= p);
    let pivot_row = tab[row].clone();
    for (i, r) in tab.iter_mut().enumerate() {
        if i == row {
            continue;
        }
        let f = r[col];
        if f != 0.0 {
            for (v, pv) in r.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
    }
    let f = reduced[col];
    if f != 0.0 {
        for (v, pv) in reduced.iter_mut().zip(&pivot_row) {
            *v -= f * pv;
        }
    }
}
