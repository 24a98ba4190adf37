//! Local sensitivity of minimal solutions to `lambda` and `y`.
//!
//! On the active blocks `A` with active constraint multipliers `rho`, the KKT
//! system is differentiated to give
//!
//! ```text
//! D = [ X_A^T X_A + lambda M    K_A           ]
//!     [ diag(rho) K_A^T         diag(K_A^T w) ]
//! dw/dlambda = -[D^-1]_AA u_A,    dw/dy = [D^-1]_AA X_A^T
//! ```
//!
//! with `M` block diagonal, `M_b = (I - u_b u_b^T) / ||w_b||` and `u_b = w_b / ||w_b||`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{CglError, Result};
use crate::json;
use crate::linalg::FullSvd;
use crate::nnls::nnls;
use crate::optimal_set::dual::tight_rows;
use crate::problem::{CglProblem, DualCertificate, Weights};
use crate::pruning::is_minimal;
use crate::solver::{solve_with_init, SolverOptions};

/// Lower bound imposed on active multipliers when searching for a strictly complementary dual.
pub const SCS_EPS: f64 = 1e-8;
/// Relative tightness for active constraint rows.
pub const ACTIVE_ROW_TOL: f64 = 1e-8;

/// Coordinates of the active blocks in the order of the reduced problem.
pub fn active_coordinates(problem: &CglProblem, w: &Weights) -> (Vec<usize>, Vec<usize>) {
    let part = problem.partition();
    let active = w.active_set(part);
    let coords = active.iter().flat_map(|&b| part.block(b).iter().copied()).collect();
    (active, coords)
}

/// Restriction of the problem to the active blocks of a minimal solution.
pub fn reduced_problem(problem: &CglProblem, w: &Weights) -> Result<CglProblem> {
    let chk = is_minimal(problem, w);
    if !chk.minimal {
        return Err(CglError::Argument(format!(
            "the reduced problem needs a minimal solution (sigma_min {:.3e} <= {:.3e})",
            chk.sigma_min, chk.rank_tol
        )));
    }
    let (active, _) = active_coordinates(problem, w);
    problem.restrict(&active)
}

/// Block-diagonal `M(w)` over the active coordinates.
pub fn projection_matrix(problem: &CglProblem, w: &Weights) -> DMatrix<f64> {
    let part = problem.partition();
    let (active, coords) = active_coordinates(problem, w);
    let mut m = DMatrix::zeros(coords.len(), coords.len());
    let mut off = 0;
    for &b in &active {
        let wb = w.block(part, b);
        let n = wb.norm();
        let u = &wb / n;
        let k = wb.len();
        let blk = (DMatrix::identity(k, k) - &u * u.transpose()) / n;
        m.view_mut((off, off), (k, k)).copy_from(&blk);
        off += k;
    }
    m
}

/// `X_A^T X_A + lambda M(w)`.
pub fn reduced_hessian(problem: &CglProblem, w: &Weights) -> DMatrix<f64> {
    let (_, coords) = active_coordinates(problem, w);
    let xa = problem.x().select_columns(&coords);
    xa.transpose() * &xa + projection_matrix(problem, w) * problem.lambda()
}

#[derive(Debug, Clone, Serialize)]
pub struct CqReport {
    pub licq: bool,
    pub scs: bool,
    /// `(block, constraint column)` pairs tight at `w`, over active blocks.
    pub active_constraints: Vec<(usize, usize)>,
    /// Multipliers with every active entry at least `SCS_EPS`, when found.
    #[serde(skip)]
    pub scs_rho: Option<DualCertificate>,
}

/// LICQ and strict complementarity over the active blocks.
///
/// Inactive blocks are excluded: they are removed in the reduced problem the
/// Jacobians are built from. Without constraints both conditions hold vacuously.
pub fn check_cq(problem: &CglProblem, w: &Weights, rho: &DualCertificate) -> Result<CqReport> {
    let part = problem.partition();
    let (active, _) = active_coordinates(problem, w);
    let lambda = problem.lambda();
    let r = problem.y() - problem.fit(w);
    let mut licq = true;
    let mut scs = true;
    let mut tight = Vec::new();
    let mut scs_rho = rho.clone();
    for &b in &active {
        let Some(k) = problem.constraint(b) else { continue };
        if k.ncols() == 0 {
            continue;
        }
        let wb = w.block(part, b);
        let rows = tight_rows(k, &wb, ACTIVE_ROW_TOL);
        tight.extend(rows.iter().map(|&j| (b, j)));
        let kt = k.select_columns(&rows);
        if !rows.is_empty() && FullSvd::new(&kt).rank() < rows.len() {
            licq = false;
        }
        // rho = eps + rho' with rho' >= 0 solves K_T rho = c_b - lambda u_b.
        let xb = problem.design(b);
        let target = xb.transpose() * &r - &wb * (lambda / wb.norm());
        let mut full = DVector::zeros(k.ncols());
        if !rows.is_empty() {
            let shifted = &target - &kt * DVector::from_element(rows.len(), SCS_EPS);
            let sol = nnls(&kt, &shifted);
            let rho_t = sol.x.add_scalar(SCS_EPS);
            let resid = (&kt * &rho_t - &target).norm();
            if resid > 1e-6 * (1.0 + target.norm()) {
                scs = false;
            }
            for (i, &j) in rows.iter().enumerate() {
                full[j] = rho_t[i];
            }
        }
        scs_rho.rho[b] = full;
    }
    Ok(CqReport {
        licq,
        scs,
        active_constraints: tight,
        scs_rho: if scs { Some(scs_rho) } else { None },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SensitivityReport {
    pub active_blocks: Vec<usize>,
    /// Coordinates of `w` the Jacobian rows refer to.
    pub active_coordinates: Vec<usize>,
    pub minimal: bool,
    pub licq: bool,
    pub scs: bool,
    #[serde(with = "json::opt_vector")]
    pub jacobian_lambda: Option<DVector<f64>>,
    #[serde(with = "json::opt_matrix")]
    pub jacobian_y: Option<DMatrix<f64>>,
    /// 2-norm condition number of `D`.
    pub d_condition: f64,
    /// Smallest eigenvalue of the reduced Hessian.
    pub hessian_min_eig: f64,
    pub note: String,
}

impl SensitivityReport {
    pub fn to_json(&self) -> Result<String> {
        json::to_json("sensitivity", self)
    }

    /// Write the Jacobians as CSV: `jacobian_lambda.csv` and `jacobian_y.csv` in `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        let io = |e: csv::Error| CglError::Io(std::io::Error::other(e));
        if let Some(jl) = &self.jacobian_lambda {
            let mut w = csv::Writer::from_path(dir.join("jacobian_lambda.csv")).map_err(io)?;
            w.write_record(["coordinate", "d_w_d_lambda"]).map_err(io)?;
            for (i, &c) in self.active_coordinates.iter().enumerate() {
                w.write_record([c.to_string(), format!("{:.12e}", jl[i])]).map_err(io)?;
            }
            w.flush()?;
        }
        if let Some(jy) = &self.jacobian_y {
            let mut w = csv::Writer::from_path(dir.join("jacobian_y.csv")).map_err(io)?;
            let mut header = vec!["coordinate".to_string()];
            header.extend((0..jy.ncols()).map(|j| format!("y{j}")));
            w.write_record(&header).map_err(io)?;
            for (i, &c) in self.active_coordinates.iter().enumerate() {
                let mut rec = vec![c.to_string()];
                rec.extend(jy.row(i).iter().map(|v| format!("{v:.12e}")));
                w.write_record(&rec).map_err(io)?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

/// Assemble `D` over the active coordinates and the constraint columns of active blocks.
pub fn kkt_jacobian(problem: &CglProblem, w: &Weights, rho: &DualCertificate) -> DMatrix<f64> {
    let part = problem.partition();
    let (active, coords) = active_coordinates(problem, w);
    let h = reduced_hessian(problem, w);
    let na = coords.len();
    let mc: usize = active.iter().map(|&b| problem.constraint_count(b)).sum();
    let mut d = DMatrix::zeros(na + mc, na + mc);
    d.view_mut((0, 0), (na, na)).copy_from(&h);
    let (mut off_w, mut off_c) = (0, na);
    for &b in &active {
        let width = part.width(b);
        if let Some(k) = problem.constraint(b) {
            let wb = w.block(part, b);
            let kw = k.transpose() * &wb;
            for j in 0..k.ncols() {
                let rj = rho.rho.get(b).and_then(|r| r.get(j).copied()).unwrap_or(0.0);
                for i in 0..width {
                    d[(off_w + i, off_c + j)] = k[(i, j)];
                    d[(off_c + j, off_w + i)] = rj * k[(i, j)];
                }
                d[(off_c + j, off_c + j)] = kw[j];
            }
            off_c += k.ncols();
        }
        off_w += width;
    }
    d
}

/// Analytic Jacobians, emitted only when the solution is minimal and LICQ and SCS hold.
pub fn jacobians(problem: &CglProblem, w: &Weights, rho: &DualCertificate) -> Result<SensitivityReport> {
    let part = problem.partition();
    let (active, coords) = active_coordinates(problem, w);
    let minimal = is_minimal(problem, w).minimal;
    let cq = check_cq(problem, w, rho)?;
    let h = reduced_hessian(problem, w);
    let hessian_min_eig = if h.nrows() == 0 {
        f64::INFINITY
    } else {
        h.clone().symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let mut report = SensitivityReport {
        active_blocks: active.clone(),
        active_coordinates: coords.clone(),
        minimal,
        licq: cq.licq,
        scs: cq.scs,
        jacobian_lambda: None,
        jacobian_y: None,
        d_condition: f64::NAN,
        hessian_min_eig,
        note: String::new(),
    };
    let failed: Vec<&str> = [(!minimal, "minimality"), (!cq.licq, "LICQ"), (!cq.scs, "SCS")]
        .iter()
        .filter(|(f, _)| *f)
        .map(|(_, n)| *n)
        .collect();
    if !failed.is_empty() {
        report.note = format!("jacobians absent: {} failed", failed.join(", "));
        return Ok(report);
    }
    let rho_used = cq.scs_rho.as_ref().unwrap_or(rho);
    let d = kkt_jacobian(problem, w, rho_used);
    let na = coords.len();
    if na == 0 {
        report.jacobian_lambda = Some(DVector::zeros(0));
        report.jacobian_y = Some(DMatrix::zeros(0, problem.n()));
        report.d_condition = 1.0;
        report.note = "empty active set".into();
        return Ok(report);
    }
    let sv = d.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    report.d_condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if smin <= d.nrows() as f64 * smax * 1e-14 {
        report.note = format!("D is singular (condition {:.3e})", report.d_condition);
        return Ok(report);
    }
    let dinv = d
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| CglError::Certificate("D is singular".into()))?;
    let lead = dinv.view((0, 0), (na, na)).into_owned();
    let mut u = DVector::zeros(na);
    let mut off = 0;
    for &b in &active {
        let wb = w.block(part, b);
        u.rows_mut(off, wb.len()).copy_from(&(&wb / wb.norm()));
        off += wb.len();
    }
    let xa = problem.x().select_columns(&coords);
    report.jacobian_lambda = Some(-(&lead * u));
    report.jacobian_y = Some(&lead * xa.transpose());
    report.note = "jacobians from the leading block of D^-1".into();
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FdTarget {
    Lambda,
    Y,
}

/// Central differences through re-solves of the reduced problem at tolerance 1e-10.
///
/// Restricting to the active blocks keeps the re-solves on the branch through `w`;
/// full re-solves can land elsewhere in a non-singleton optimal set. Returns a `|A| x 1` matrix for `Lambda` and `|A| x n` for `Y`, plus a note per
/// perturbed coordinate whose re-solve did not certify.
pub fn fd_jacobian(problem: &CglProblem, w: &Weights, what: FdTarget, h: f64) -> Result<(DMatrix<f64>, Vec<String>)> {
    if !(h > 0.0) {
        return Err(CglError::Argument("finite-difference step must be positive".into()));
    }
    let (_, coords) = active_coordinates(problem, w);
    let problem = &reduced_problem(problem, w)?;
    let w0 = Weights::new(DVector::from_iterator(coords.len(), coords.iter().map(|&c| w.w[c])));
    let opts = SolverOptions {
        kkt_tol: 1e-10,
        max_iters: 200_000,
        ..SolverOptions::default()
    };
    let mut notes = Vec::new();
    let mut solve_at = |p: &CglProblem, label: String| -> Result<DVector<f64>> {
        let s = match solve_with_init(p, &opts, &w0) {
            Ok(s) => s,
            Err(CglError::NotConverged { best, violation, .. }) => {
                notes.push(format!("{label}: re-solve not certified (kkt violation {violation:.3e})"));
                *best
            }
            Err(e) => return Err(e),
        };
        Ok(s.weights.w)
    };
    match what {
        FdTarget::Lambda => {
            let l = problem.lambda();
            if l - h < 0.0 {
                return Err(CglError::Argument("lambda - h must be nonnegative".into()));
            }
            let wp = solve_at(&problem.with_lambda(l + h)?, "lambda+h".into())?;
            let wm = solve_at(&problem.with_lambda(l - h)?, "lambda-h".into())?;
            Ok((DMatrix::from_column_slice(coords.len(), 1, ((wp - wm) / (2.0 * h)).as_slice()), notes))
        }
        FdTarget::Y => {
            let n = problem.n();
            let mut jac = DMatrix::zeros(coords.len(), n);
            for i in 0..n {
                let mut yp = problem.y().clone();
                yp[i] += h;
                let mut ym = problem.y().clone();
                ym[i] -= h;
                let wp = solve_at(&problem.with_y(yp)?, format!("y[{i}]+h"))?;
                let wm = solve_at(&problem.with_y(ym)?, format!("y[{i}]-h"))?;
                jac.set_column(i, &((wp - wm) / (2.0 * h)));
            }
            Ok((jac, notes))
        }
    }
}

/// `max |a - b| / max |b|` (entrywise max norms).
pub fn max_relative_error(analytic: &DMatrix<f64>, numeric: &DMatrix<f64>) -> f64 {
    let diff = (analytic - numeric).amax();
    let scale = numeric.amax().max(1e-300);
    diff / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::BlockPartition;
    use crate::solver::solve;

    #[test]
    fn scalar_lasso_sensitivity() {
        // One width-1 block: M = 0, dw/dlambda = -sign(w)/||x||^2.
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, -1.0]);
        let y = DVector::from_vec(vec![2.0, 3.0, 0.5]);
        let p = CglProblem::unconstrained(x, y, BlockPartition::singletons(1), 0.5).unwrap();
        let s = solve(&p, &SolverOptions::default()).unwrap();
        let r = jacobians(&p, &s.weights, &s.dual).unwrap();
        let jl = r.jacobian_lambda.unwrap();
        assert!((jl[0] + s.weights.w[0].signum() / 6.0).abs() < 1e-12);
    }

    #[test]
    fn projection_matrix_properties() {
        let x = DMatrix::from_row_slice(4, 3, &[1.0, 0.2, 0.0, 0.3, 1.0, 0.5, 0.0, 0.1, 1.0, 0.4, 0.4, 0.4]);
        let y = DVector::from_vec(vec![1.0, 2.0, -1.0, 0.5]);
        let p = CglProblem::unconstrained(x, y, BlockPartition::contiguous(&[2, 1]).unwrap(), 0.3).unwrap();
        let s = solve(&p, &SolverOptions::default()).unwrap();
        let m = projection_matrix(&p, &s.weights);
        assert!((&m - m.transpose()).amax() == 0.0);
        assert!(m.clone().symmetric_eigenvalues().min() > -1e-12);
        let (_, coords) = active_coordinates(&p, &s.weights);
        let wa = DVector::from_iterator(coords.len(), coords.iter().map(|&c| s.weights.w[c]));
        assert!((&m * wa).amax() < 1e-15);
        let r = jacobians(&p, &s.weights, &s.dual).unwrap();
        assert!(r.hessian_min_eig > 0.0);
        let jy = r.jacobian_y.unwrap();
        assert_eq!(jy.shape(), (coords.len(), 4));
    }

    #[test]
    fn fd_matches_least_squares_map() {
        // lambda = 0 and full column rank: dw/dy = (X^T X)^-1 X^T.
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 0.0, 2.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let p = CglProblem::unconstrained(x.clone(), y, BlockPartition::singletons(2), 0.0).unwrap();
        let s = solve(&p, &SolverOptions::default().with_tol(1e-10)).unwrap();
        let (fd, notes) = fd_jacobian(&p, &s.weights, FdTarget::Y, 1e-3).unwrap();
        assert!(notes.is_empty());
        let exact = (x.transpose() * &x).try_inverse().unwrap() * x.transpose();
        assert!((fd - exact).amax() < 1e-8);
    }

    #[test]
    fn cq_vacuous_and_duplicated_rows() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let y = DVector::from_vec(vec![2.0, -1.0]);
        let p = CglProblem::unconstrained(x.clone(), y.clone(), BlockPartition::singletons(2), 0.5).unwrap();
        let s = solve(&p, &SolverOptions::default()).unwrap();
        let cq = check_cq(&p, &s.weights, &s.dual).unwrap();
        assert!(cq.licq && cq.scs && cq.active_constraints.is_empty());
        // One width-2 block with w_1 <= 0 written twice; the solution sits on it.
        let k = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]);
        let y = DVector::from_vec(vec![2.0, 1.0]);
        let p = CglProblem::new(x, y, BlockPartition::contiguous(&[2]).unwrap(), vec![Some(k)], 0.5).unwrap();
        let s = solve(&p, &SolverOptions::default()).unwrap();
        let cq = check_cq(&p, &s.weights, &s.dual).unwrap();
        assert_eq!(cq.active_constraints.len(), 2);
        assert!(!cq.licq);
        let r = jacobians(&p, &s.weights, &s.dual).unwrap();
        assert!(r.jacobian_lambda.is_none() && r.note.contains("LICQ"));
    }

    #[test]
    fn reduced_problem_of_pruned_duplicate() {
        let x = DMatrix::from_element(2, 2, 1.0);
        let y = DVector::from_vec(vec![2.0, 2.0]);
        let p = CglProblem::unconstrained(x, y, BlockPartition::singletons(2), 1.0).unwrap();
        assert!(reduced_problem(&p, &Weights::new(DVector::from_vec(vec![0.75, 0.75]))).is_err());
        let r = reduced_problem(&p, &Weights::new(DVector::from_vec(vec![1.5, 0.0]))).unwrap();
        assert_eq!(r.d(), 1);
        let s = solve(&r, &SolverOptions::default()).unwrap();
        assert!((s.weights.w[0] - 1.5).abs() < 1e-8);
    }
}
