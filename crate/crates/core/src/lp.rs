//! Dense two-phase simplex for small linear programs in standard form
//!
//! ```text
//! maximize c^T x  subject to  A x = b,  x >= 0
//! ```
//!
//! Bland's rule picks the lowest-index entering column and breaks ratio ties
//! by the lowest basic index, so the returned vertex is reproducible.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    pub x: DVector<f64>,
    pub objective: f64,
    /// Phase-one residual `||A x - b||_1` at the end of phase one.
    pub infeasibility: f64,
}

struct Tableau {
    t: DMatrix<f64>, // (m + 1) x (cols + 1); last row is the objective row, last column the rhs
    basis: Vec<usize>,
    m: usize,
    cols: usize,
    eps: f64,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[(row, col)];
        let width = self.cols + 1;
        for j in 0..width {
            self.t[(row, j)] /= p;
        }
        for i in 0..=self.m {
            if i == row {
                continue;
            }
            let f = self.t[(i, col)];
            if f != 0.0 {
                for j in 0..width {
                    let v = self.t[(row, j)];
                    self.t[(i, j)] -= f * v;
                }
                self.t[(i, col)] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Run simplex iterations on the current objective row, allowing only columns in `allowed`.
    /// The objective row stores reduced costs `z_j - c_j` for a maximization, so a negative entry
    /// means the column improves the objective.
    fn run(&mut self, allowed: &[bool], max_iter: usize) -> Result<(), LpStatus> {
        for _ in 0..max_iter {
            let mut enter = None;
            for j in 0..self.cols {
                if allowed[j] && self.t[(self.m, j)] < -self.eps {
                    enter = Some(j);
                    break;
                }
            }
            let Some(col) = enter else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.t[(i, col)];
                if a > self.eps {
                    let ratio = self.t[(i, self.cols)] / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            let tie = (ratio - lr).abs() <= 1e-12 * (1.0 + lr.abs());
                            if ratio < lr && !tie || tie && self.basis[i] < self.basis[li] {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = leave else { return Err(LpStatus::Unbounded) };
            self.pivot(row, col);
        }
        Ok(())
    }
}

/// Maximize `c^T x` subject to `A x = b`, `x >= 0`.
///
/// `feas_tol` is the phase-one tolerance on `||A x - b||_1`, scaled by `1 + ||b||_1`.
pub fn simplex_max(c: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>, feas_tol: f64) -> LpResult {
    let (m, n) = a.shape();
    assert_eq!(c.len(), n);
    assert_eq!(b.len(), m);
    let scale = a.iter().fold(1e-300f64, |s, v| s.max(v.abs()));
    let eps = 1e-11 * scale.max(1.0);
    let cols = n + m;
    let mut t = DMatrix::zeros(m + 1, cols + 1);
    for i in 0..m {
        let sgn = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(i, j)] = sgn * a[(i, j)];
        }
        t[(i, n + i)] = 1.0;
        t[(i, cols)] = sgn * b[i];
    }
    // Phase one: maximize -sum(artificials). Reduced costs after pricing out the basis.
    for j in 0..=cols {
        let mut s = 0.0;
        for i in 0..m {
            if j < n || j == cols {
                s += t[(i, j)];
            }
        }
        t[(m, j)] = if j < n || j == cols { -s } else { 0.0 };
    }
    let mut tab = Tableau {
        t,
        basis: (n..n + m).collect(),
        m,
        cols,
        eps,
    };
    let max_iter = 50 * (m + cols + 10);
    let all: Vec<bool> = vec![true; cols];
    let _ = tab.run(&all, max_iter);
    let infeas = -tab.t[(m, cols)];
    let b1 = b.iter().map(|v| v.abs()).sum::<f64>();
    if infeas.abs() > feas_tol * (1.0 + b1) {
        return LpResult {
            status: LpStatus::Infeasible,
            x: DVector::zeros(n),
            objective: f64::NAN,
            infeasibility: infeas.abs(),
        };
    }
    // Drive artificials out of the basis where possible; rows where that fails are redundant.
    let mut active_rows = vec![true; m];
    for i in 0..m {
        if tab.basis[i] >= n {
            let mut piv = None;
            let mut best = eps;
            for j in 0..n {
                if tab.t[(i, j)].abs() > best {
                    best = tab.t[(i, j)].abs();
                    piv = Some(j);
                }
            }
            match piv {
                Some(j) => tab.pivot(i, j),
                None => active_rows[i] = false,
            }
        }
    }
    // Zero out redundant rows so they cannot be chosen for pivoting.
    for i in 0..m {
        if !active_rows[i] {
            for j in 0..=cols {
                tab.t[(i, j)] = 0.0;
            }
        }
    }
    // Phase two objective row: z_j - c_j with basis priced out.
    for j in 0..=cols {
        tab.t[(m, j)] = if j < n { -c[j] } else { 0.0 };
    }
    for i in 0..m {
        let bj = tab.basis[i];
        if active_rows[i] && bj < n {
            let f = tab.t[(m, bj)];
            if f != 0.0 {
                for j in 0..=cols {
                    let v = tab.t[(i, j)];
                    tab.t[(m, j)] -= f * v;
                }
            }
        }
    }
    let mut allowed = vec![false; cols];
    for a in allowed.iter_mut().take(n) {
        *a = true;
    }
    let status = match tab.run(&allowed, max_iter) {
        Ok(()) => LpStatus::Optimal,
        Err(s) => s,
    };
    let mut x = DVector::zeros(n);
    for i in 0..m {
        let bj = tab.basis[i];
        if active_rows[i] && bj < n {
            x[bj] = tab.t[(i, cols)].max(0.0);
        }
    }
    let objective = c.dot(&x);
    LpResult {
        status,
        x,
        objective,
        infeasibility: infeas.abs(),
    }
}
