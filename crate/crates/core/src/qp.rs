//! Convex quadratic programs over a polytope in standard form
//!
//! ```text
//! minimize 1/2 a^T Q a + q^T a  subject to  G a = b,  a >= 0
//! ```
//!
//! solved with a primal active-set method started from a feasible point. The
//! optimal-set selections always have such a point at hand (the coefficients of
//! the solution being described), so no phase-one is needed.

use nalgebra::{DMatrix, DVector};

use crate::error::{CglError, Result};
use crate::linalg::lstsq;

#[derive(Debug, Clone)]
pub struct QpResult {
    pub x: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Most negative bound multiplier at termination (>= -tol when optimal).
    pub min_multiplier: f64,
}

pub fn qp_objective(q_mat: &DMatrix<f64>, q_vec: &DVector<f64>, x: &DVector<f64>) -> f64 {
    0.5 * x.dot(&(q_mat * x)) + q_vec.dot(x)
}

/// Solve the QP starting from `x0`, which must satisfy `G x0 = b` and `x0 >= 0` up to rounding.
pub fn active_set_qp(
    q_mat: &DMatrix<f64>,
    q_vec: &DVector<f64>,
    g: &DMatrix<f64>,
    x0: &DVector<f64>,
) -> Result<QpResult> {
    let n = q_mat.nrows();
    let m = g.nrows();
    if q_mat.ncols() != n || q_vec.len() != n || g.ncols() != n || x0.len() != n {
        return Err(CglError::Shape("qp: inconsistent dimensions".into()));
    }
    let mut x = x0.map(|v| v.max(0.0));
    let qscale = q_mat.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    let zero_tol = 1e-12 * (1.0 + x.norm());
    let mut working: Vec<bool> = x.iter().map(|&v| v <= zero_tol).collect();
    for (i, w) in working.iter().enumerate() {
        if *w {
            x[i] = 0.0;
        }
    }
    let max_iter = 50 * (n + m + 10);
    let mut last_min_mult = 0.0;
    for it in 0..max_iter {
        let free: Vec<usize> = (0..n).filter(|&i| !working[i]).collect();
        let k = free.len();
        let grad = q_mat * &x + q_vec;
        // KKT system on the free set: [Q_FF G_F^T; G_F 0] [p; -nu] = [-g_F; 0]
        let mut kkt = DMatrix::zeros(k + m, k + m);
        let mut rhs = DVector::zeros(k + m);
        for (a, &i) in free.iter().enumerate() {
            for (b, &j) in free.iter().enumerate() {
                kkt[(a, b)] = q_mat[(i, j)];
            }
            for r in 0..m {
                kkt[(a, k + r)] = g[(r, i)];
                kkt[(k + r, a)] = g[(r, i)];
            }
            rhs[a] = -grad[i];
        }
        let sol = lstsq(&kkt, &rhs);
        let mut p = DVector::zeros(n);
        for (a, &i) in free.iter().enumerate() {
            p[i] = sol[a];
        }
        let nu = DVector::from_fn(m, |r, _| -sol[k + r]);
        // A nonzero step that does not decrease the model is numerical noise.
        let decrease = grad.dot(&p) + 0.5 * p.dot(&(q_mat * &p));
        let p_small = p.norm() <= 1e-11 * (1.0 + x.norm()) || decrease > -1e-15 * qscale * (1.0 + x.norm_squared());
        if p_small {
            // Bound multipliers mu_i = grad_i - (G^T nu)_i on the working set.
            let gtnu = g.transpose() * &nu;
            let mut worst = None;
            let mut worst_val = 0.0;
            let mtol = 1e-10 * (1.0 + grad.norm());
            for i in 0..n {
                if working[i] {
                    let mu = grad[i] - gtnu[i];
                    if mu < worst_val {
                        worst_val = mu;
                        if mu < -mtol {
                            worst = Some(i);
                        }
                    }
                }
            }
            last_min_mult = worst_val;
            match worst {
                None => {
                    return Ok(QpResult {
                        objective: qp_objective(q_mat, q_vec, &x),
                        x,
                        iterations: it + 1,
                        min_multiplier: worst_val,
                    })
                }
                Some(i) => working[i] = false,
            }
            continue;
        }
        let mut step = 1.0f64;
        let mut block = None;
        for i in 0..n {
            if !working[i] && p[i] < 0.0 {
                let s = -x[i] / p[i];
                if s < step {
                    step = s;
                    block = Some(i);
                }
            }
        }
        x += &p * step;
        if let Some(i) = block {
            working[i] = true;
            x[i] = 0.0;
        }
        for v in x.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
    Err(CglError::QpNotConverged(format!(
        "active-set method hit {max_iter} iterations (min multiplier {last_min_mult:.3e})"
    )))
}
