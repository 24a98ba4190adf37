//! Distinguished members of the optimal set: min-norm, approximate max-norm and validation-tuned.

use nalgebra::{DMatrix, DVector};

use crate::error::{CglError, Result};
use crate::lp::{simplex_max, LpStatus};
use crate::problem::{BlockPartition, Weights};
use crate::qp::active_set_qp;

use super::describe::OptimalSetDescription;

/// The only member when the generators are independent, so selections agree exactly.
fn singleton(desc: &OptimalSetDescription) -> Option<Weights> {
    if desc.support.is_empty() {
        return Some(desc.weights_from_alpha(&DVector::zeros(0)));
    }
    let (smin, tol) = desc.generator_margin();
    (smin > tol).then(|| desc.weights_from_alpha(&desc.base_alpha))
}

fn solve_alpha_qp(desc: &OptimalSetDescription, q: &DMatrix<f64>, qv: &DVector<f64>) -> Result<Weights> {
    if let Some(w) = singleton(desc) {
        return Ok(w);
    }
    let (g, _) = desc.reduced_constraints();
    let r = active_set_qp(q, qv, &g, &desc.base_alpha)?;
    Ok(desc.weights_from_alpha(&r.x))
}

/// Minimum Euclidean norm solution.
pub fn min_norm(desc: &OptimalSetDescription) -> Result<Weights> {
    let k = desc.support.len();
    let q = DMatrix::from_diagonal(&DVector::from_iterator(
        k,
        desc.support.iter().map(|&b| desc.v_vectors[b].norm_squared()),
    ));
    solve_alpha_qp(desc, &q, &DVector::zeros(k))
}

/// Vertex maximizing `sum alpha`, a surrogate for the maximum-norm solution.
pub fn max_norm_approx(desc: &OptimalSetDescription) -> Result<Weights> {
    if let Some(w) = singleton(desc) {
        return Ok(w);
    }
    let k = desc.support.len();
    let (g, b) = desc.reduced_constraints();
    let r = simplex_max(&DVector::from_element(k, 1.0), &g, &b, 1e-7);
    match r.status {
        LpStatus::Optimal => Ok(desc.weights_from_alpha(&r.x)),
        s => Err(CglError::Certificate(format!("max-norm LP returned {s:?}"))),
    }
}

/// Member of the optimal set minimizing `1/2 ||X_val w - y_val||^2`.
pub fn tune_over_set(desc: &OptimalSetDescription, x_val: &DMatrix<f64>, y_val: &DVector<f64>) -> Result<Weights> {
    let part: &BlockPartition = desc.problem.partition();
    if x_val.ncols() != desc.problem.d() || x_val.nrows() != y_val.len() {
        return Err(CglError::Shape(format!(
            "validation data is {}x{} with {} targets, problem has d = {}",
            x_val.nrows(),
            x_val.ncols(),
            y_val.len(),
            desc.problem.d()
        )));
    }
    let k = desc.support.len();
    let mut pmat = DMatrix::zeros(x_val.nrows(), k);
    for (j, &b) in desc.support.iter().enumerate() {
        let cols = part.block(b);
        let xb = x_val.select_columns(cols);
        pmat.set_column(j, &(xb * &desc.v_vectors[b]));
    }
    let q = pmat.transpose() * &pmat;
    let qv = -(pmat.transpose() * y_val);
    solve_alpha_qp(desc, &q, &qv)
}
