//! Dual recovery from a primal solution.
//!
//! Active blocks: `K_T rho = c - lambda w/||w||` over the tight columns `T`
//! with `rho >= 0`. Inactive blocks: non-negative regression of `c` on `K`.

use nalgebra::{DMatrix, DVector};

use crate::error::{CglError, Result};
use crate::nnls::nnls;
use crate::problem::{kkt_report, CglProblem, DualCertificate, Weights};
use crate::qp::active_set_qp;

/// How to pick among multiple valid dual vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DualChoice {
    /// First NNLS minimizer found by the active-set method.
    #[default]
    Nnls,
    /// Smallest-norm vector among the NNLS minimizers.
    MinNorm,
}

// Relative tightness thresholds tried for active blocks; the best block defect wins.
const TIGHT_THRESHOLDS: [f64; 4] = [1e-10, 1e-8, 1e-6, 1e-4];

/// Columns of `K` whose constraint `K_j^T w <= 0` is tight at `w` up to `tau`.
pub fn tight_rows(k: &DMatrix<f64>, wb: &DVector<f64>, tau: f64) -> Vec<usize> {
    let wn = wb.norm();
    (0..k.ncols())
        .filter(|&j| {
            let col = k.column(j);
            col.dot(wb) >= -tau * (1.0 + col.norm() * wn)
        })
        .collect()
}

fn min_norm_refine(k: &DMatrix<f64>, rho: &DVector<f64>) -> DVector<f64> {
    let m = rho.len();
    if m == 0 {
        return rho.clone();
    }
    // min ||rho||^2 st K rho = K rho*, rho >= 0; equality rows reduced to an orthonormal basis.
    let svd = crate::linalg::svd(k.clone(), true, false);
    let u = svd.u.unwrap();
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = k.nrows().max(m) as f64 * smax * 1e-12;
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > tol).collect();
    if keep.is_empty() {
        return DVector::zeros(m);
    }
    let basis = u.select_columns(&keep);
    let g = basis.transpose() * k;
    let q = DMatrix::identity(m, m);
    let qv = DVector::zeros(m);
    match active_set_qp(&q, &qv, &g, rho) {
        Ok(r) => r.x,
        Err(_) => rho.clone(),
    }
}

/// Per-block dual vector and its defect (stationarity plus slackness).
fn block_dual(
    problem: &CglProblem,
    w: &Weights,
    c: &DVector<f64>,
    i: usize,
    choice: DualChoice,
) -> DVector<f64> {
    let Some(k) = problem.constraint(i) else {
        return DVector::zeros(0);
    };
    let a = k.ncols();
    if a == 0 {
        return DVector::zeros(0);
    }
    let lambda = problem.lambda();
    let wb = w.block(problem.partition(), i);
    let wn = wb.norm();
    if wn <= w.active_tol() {
        let r = nnls(k, c);
        return match choice {
            DualChoice::Nnls => r.x,
            DualChoice::MinNorm => min_norm_refine(k, &r.x),
        };
    }
    let target = c - &wb * (lambda / wn);
    let kw = k.transpose() * &wb;
    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut tried: Vec<Vec<usize>> = Vec::new();
    for &tau in TIGHT_THRESHOLDS.iter() {
        let rows = tight_rows(k, &wb, tau);
        if tried.contains(&rows) {
            continue;
        }
        let sub = k.select_columns(&rows);
        let r = nnls(&sub, &target);
        let mut rho_sub = r.x;
        if choice == DualChoice::MinNorm {
            rho_sub = min_norm_refine(&sub, &rho_sub);
        }
        let mut rho = DVector::zeros(a);
        for (t, &j) in rows.iter().enumerate() {
            rho[j] = rho_sub[t];
        }
        let stat = (&target - k * &rho).norm();
        let slack = (0..a).map(|j| (rho[j] * kw[j]).abs()).fold(0.0, f64::max);
        let defect = stat.max(slack);
        if best.as_ref().map(|(d, _)| defect < *d).unwrap_or(true) {
            best = Some((defect, rho));
        }
        tried.push(rows);
    }
    best.map(|(_, r)| r).unwrap_or_else(|| DVector::zeros(a))
}

/// Best-effort dual vector; never fails. Use [`recover_dual`] for a certified one.
pub fn dual_estimate(problem: &CglProblem, w: &Weights, choice: DualChoice) -> DualCertificate {
    let residual = problem.y() - problem.fit(w);
    let corr = problem.correlations(&residual);
    DualCertificate {
        rho: (0..problem.num_blocks())
            .map(|i| block_dual(problem, w, &corr[i], i, choice))
            .collect(),
    }
}

/// Recover a non-negative dual certificate for a verified solution `w`, checked at `tol`.
pub fn recover_dual_with(problem: &CglProblem, w: &Weights, choice: DualChoice, tol: f64) -> Result<DualCertificate> {
    let rho = dual_estimate(problem, w, choice);
    let rep = kkt_report(problem, w, &rho, tol)?;
    if !rep.satisfied {
        return Err(CglError::Certificate(format!(
            "no dual certificate within {tol:.1e}: stationarity {:.3e}, feasibility {:.3e}, slackness {:.3e}",
            rep.stationarity_violation, rep.feasibility_violation, rep.slackness_violation
        )));
    }
    Ok(rho)
}

/// Recover a dual certificate at the default tolerance `1e-6`.
pub fn recover_dual(problem: &CglProblem, w: &Weights) -> Result<DualCertificate> {
    recover_dual_with(problem, w, DualChoice::Nnls, 1e-6)
}
