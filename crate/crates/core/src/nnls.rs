//! Lawson-Hanson non-negative least squares: `min ||A x - b||_2` subject to `x >= 0`.

use nalgebra::{DMatrix, DVector};

use crate::linalg::lstsq;

/// Result of an NNLS solve.
#[derive(Debug, Clone)]
pub struct NnlsResult {
    pub x: DVector<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Solve `min ||A x - b||` over `x >= 0` with the active-set method of Lawson and Hanson.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> NnlsResult {
    let (m, n) = a.shape();
    assert_eq!(m, b.len(), "nnls: row mismatch");
    let mut x = DVector::zeros(n);
    if n == 0 {
        return NnlsResult {
            x,
            residual_norm: b.norm(),
            iterations: 0,
        };
    }
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    let tol = 1e-12 * scale * (1.0 + b.norm()) * (m.max(n) as f64);
    let mut passive = vec![false; n];
    let max_outer = 3 * n + 30;
    let mut iterations = 0;

    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let mut z = DVector::zeros(n);
        if idx.is_empty() {
            return z;
        }
        let sub = a.select_columns(&idx);
        let zs = lstsq(&sub, b);
        for (k, &j) in idx.iter().enumerate() {
            z[j] = zs[k];
        }
        z
    };

    for _ in 0..max_outer {
        iterations += 1;
        let r = b - a * &x;
        let grad = a.transpose() * r;
        // Most positive gradient among the zero set.
        let mut best = None;
        let mut best_val = tol;
        for j in 0..n {
            if !passive[j] && grad[j] > best_val {
                best_val = grad[j];
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        passive[j] = true;

        let mut inner = 0;
        loop {
            inner += 1;
            let z = solve_passive(&passive);
            let all_pos = (0..n).all(|k| !passive[k] || z[k] > 0.0);
            if all_pos || inner > 3 * n + 30 {
                x = z;
                for k in 0..n {
                    if !passive[k] {
                        x[k] = 0.0;
                    }
                }
                break;
            }
            // Step toward z until the first passive coordinate hits zero.
            let mut alpha = 1.0f64;
            for k in 0..n {
                if passive[k] && z[k] <= 0.0 {
                    let denom = x[k] - z[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[k] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            x = &x + (z - &x) * alpha;
            for k in 0..n {
                if passive[k] && x[k] <= tol.min(1e-14) {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
        }
    }
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let residual_norm = (b - a * &x).norm();
    NnlsResult {
        x,
        residual_norm,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scalar_negative_column() {
        // min |(-1) rho - (-0.3)| over rho >= 0 -> rho = 0.3
        let a = DMatrix::from_row_slice(1, 1, &[-1.0]);
        let b = DVector::from_vec(vec![-0.3]);
        let r = nnls(&a, &b);
        assert!((r.x[0] - 0.3).abs() < 1e-14);
        assert!(r.residual_norm < 1e-14);
    }

    #[test]
    fn clamps_to_zero() {
        let a = DMatrix::identity(2, 2);
        let b = DVector::from_vec(vec![1.0, -2.0]);
        let r = nnls(&a, &b);
        assert_eq!(r.x[1], 0.0);
        assert!((r.x[0] - 1.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn kkt_conditions_hold(vals in prop::collection::vec(-3.0f64..3.0, 12), rhs in prop::collection::vec(-3.0f64..3.0, 4)) {
            let a = DMatrix::from_row_slice(4, 3, &vals);
            let b = DVector::from_vec(rhs);
            let r = nnls(&a, &b);
            let g = a.transpose() * (&b - &a * &r.x);
            for j in 0..3 {
                prop_assert!(r.x[j] >= 0.0);
                // Gradient of the objective is nonpositive off the support and zero on it.
                prop_assert!(g[j] <= 1e-8);
                if r.x[j] > 1e-10 {
                    prop_assert!(g[j].abs() <= 1e-8);
                }
            }
        }
    }
}
