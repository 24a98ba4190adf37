//! Polyhedral description `{ w : w_b = alpha_b v_b, alpha >= 0, X w = y_hat }` of all solutions.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{CglError, Result};
use crate::json;
use crate::linalg::{columns_to_matrix, FullSvd};
use crate::lp::{simplex_max, LpStatus};
use crate::problem::{kkt_report, CglProblem, DualCertificate, Weights};

/// Threshold on the probe LP optimum for adding a block to the support.
pub const SUPPORT_PROBE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct OptimalSetDescription {
    #[serde(skip)]
    pub problem: CglProblem,
    #[serde(with = "json::vector")]
    pub y_hat: DVector<f64>,
    pub lambda: f64,
    pub equicorrelation: Vec<usize>,
    /// Blocks of the equicorrelation set whose `v` also satisfies feasibility and slackness.
    pub candidates: Vec<usize>,
    pub support: Vec<usize>,
    /// False when some probe LP failed numerically; `support` is then only a subset.
    pub support_certified: bool,
    /// Candidate blocks whose probe failed.
    pub unresolved: Vec<usize>,
    /// `v_b = c_b - K_b rho_b` for every block.
    #[serde(with = "json::vectors")]
    pub v_vectors: Vec<DVector<f64>>,
    /// Columns `X_b v_b` for `b` in the support, in support order.
    #[serde(with = "json::matrix")]
    pub generators: DMatrix<f64>,
    /// Coefficients of the described solution over the support.
    #[serde(with = "json::vector")]
    pub base_alpha: DVector<f64>,
    /// Probe vertices, one per support block, over the support.
    #[serde(skip)]
    pub probe_vertices: Vec<DVector<f64>>,
    #[serde(skip)]
    pub rho: DualCertificate,
}

/// Reduce `G a = b` to `U_r^T G a = U_r^T b` with `U_r` an orthonormal basis of range(G).
pub(crate) fn reduced_equality(g: &DMatrix<f64>, b: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
    if g.ncols() == 0 {
        return (DMatrix::zeros(0, 0), DVector::zeros(0));
    }
    let svd = crate::linalg::svd(g.clone(), true, false);
    let u = svd.u.expect("u requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = g.nrows().max(g.ncols()) as f64 * smax * 1e-12;
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > tol).collect();
    let ur = u.select_columns(&keep);
    (ur.transpose() * g, ur.transpose() * b)
}

fn probe(g_red: &DMatrix<f64>, b_red: &DVector<f64>, target: usize) -> Option<DVector<f64>> {
    let mut c = DVector::zeros(g_red.ncols());
    c[target] = 1.0;
    let r = simplex_max(&c, g_red, b_red, 1e-7);
    match r.status {
        LpStatus::Optimal => Some(r.x),
        _ => None,
    }
}

impl OptimalSetDescription {
    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    /// Weights from coefficients over the support.
    pub fn weights_from_alpha(&self, alpha: &DVector<f64>) -> Weights {
        let part = self.problem.partition();
        let mut w = Weights::zeros(self.problem.d());
        for (k, &b) in self.support.iter().enumerate() {
            let blk = &self.v_vectors[b] * alpha[k];
            w.set_block(part, b, &blk);
        }
        w
    }

    /// Coefficients over the support of a member (projection onto each `v_b`).
    pub fn alpha_of(&self, w: &Weights) -> DVector<f64> {
        let part = self.problem.partition();
        DVector::from_iterator(
            self.support.len(),
            self.support.iter().map(|&b| {
                let v = &self.v_vectors[b];
                let vn = v.norm_squared();
                if vn == 0.0 {
                    0.0
                } else {
                    w.block(part, b).dot(v) / vn
                }
            }),
        )
    }

    /// `(U_r^T G, U_r^T y_hat)`: equality constraints of the coefficient polytope.
    pub fn reduced_constraints(&self) -> (DMatrix<f64>, DVector<f64>) {
        reduced_equality(&self.generators, &self.y_hat)
    }

    /// Smallest singular value of the generator matrix and the rank threshold.
    pub fn generator_margin(&self) -> (f64, f64) {
        if self.generators.ncols() == 0 {
            return (f64::INFINITY, 0.0);
        }
        let svd = FullSvd::new(&self.generators);
        (svd.sigma_min(), svd.tolerance())
    }

    pub fn to_json(&self) -> Result<String> {
        json::to_json("optimal_set", self)
    }
}

/// Describe the optimal set from a verified primal-dual pair.
pub fn describe_set(problem: &CglProblem, w: &Weights, rho: &DualCertificate) -> Result<OptimalSetDescription> {
    let lambda = problem.lambda();
    if !(lambda > 0.0) {
        return Err(CglError::Argument("the optimal-set description needs lambda > 0".into()));
    }
    let rep = kkt_report(problem, w, rho, 1e-6)?;
    if !rep.satisfied {
        return Err(CglError::Certificate(format!(
            "describe_set needs a verified pair (kkt violation {:.3e})",
            rep.max_violation()
        )));
    }
    let part = problem.partition();
    let y_hat = problem.fit(w);
    let v_vectors = rep.v_vectors.clone();
    // Side conditions for blocks that could become active with the same dual.
    let side_tol = 1e-8 * (1.0 + lambda);
    let mut candidates = Vec::new();
    for &b in &rep.equicorrelation {
        let ok = match problem.constraint(b) {
            Some(k) if k.ncols() > 0 => {
                let kv = k.transpose() * &v_vectors[b];
                let feas = kv.iter().all(|&s| s <= side_tol * (1.0 + k.norm()));
                let slack = kv.iter().zip(rho.rho[b].iter()).all(|(s, r)| (s * r).abs() <= side_tol);
                feas && slack
            }
            _ => true,
        };
        if ok || rep.active.contains(&b) {
            candidates.push(b);
        }
    }
    for &a in &rep.active {
        if !candidates.contains(&a) {
            candidates.push(a);
        }
    }
    candidates.sort_unstable();
    let gen_of = |b: usize| problem.block_fit(b, &v_vectors[b]);
    let g_all = columns_to_matrix(problem.n(), &candidates.iter().map(|&b| gen_of(b)).collect::<Vec<_>>());
    let (g_red, b_red) = reduced_equality(&g_all, &y_hat);
    let mut support = Vec::new();
    let mut unresolved = Vec::new();
    let mut vertices_all = Vec::new();
    for (k, &b) in candidates.iter().enumerate() {
        match probe(&g_red, &b_red, k) {
            Some(x) => {
                if x[k] > SUPPORT_PROBE_TOL || rep.active.contains(&b) {
                    support.push(b);
                    vertices_all.push(x);
                }
            }
            None => {
                if rep.active.contains(&b) {
                    support.push(b);
                } else {
                    unresolved.push(b);
                }
            }
        }
    }
    let pos: Vec<usize> = support.iter().map(|b| candidates.iter().position(|c| c == b).unwrap()).collect();
    let probe_vertices = vertices_all
        .into_iter()
        .map(|x| DVector::from_iterator(pos.len(), pos.iter().map(|&p| x[p])))
        .collect();
    let generators = columns_to_matrix(problem.n(), &support.iter().map(|&b| gen_of(b)).collect::<Vec<_>>());
    let mut desc = OptimalSetDescription {
        problem: problem.clone(),
        y_hat,
        lambda,
        equicorrelation: rep.equicorrelation.clone(),
        candidates,
        support_certified: unresolved.is_empty(),
        unresolved,
        support,
        v_vectors,
        generators,
        base_alpha: DVector::zeros(0),
        probe_vertices,
        rho: rho.clone(),
    };
    desc.base_alpha = desc.alpha_of(w).map(|a| a.max(0.0));
    let _ = part;
    Ok(desc)
}

/// Outcome of a membership test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Membership {
    pub member: bool,
    /// The test failed only on blocks whose support status is unresolved.
    pub indeterminate_support: bool,
}

/// Membership of `w2` in the described optimal set.
pub fn contains(desc: &OptimalSetDescription, w2: &Weights, tol: f64) -> Membership {
    let problem = &desc.problem;
    let part = problem.partition();
    if w2.w.len() != problem.d() {
        return Membership {
            member: false,
            indeterminate_support: false,
        };
    }
    let mut ok = true;
    let mut support_only_failure = true;
    for b in 0..part.len() {
        let wb = w2.block(part, b);
        if let Some(k) = desc.support.iter().position(|&s| s == b) {
            let _ = k;
            let v = &desc.v_vectors[b];
            let vn = v.norm_squared();
            let alpha = if vn == 0.0 { 0.0 } else { wb.dot(v) / vn };
            let dev = (&wb - v * alpha).norm();
            if alpha < -tol || dev > tol * (1.0 + wb.norm()) {
                ok = false;
                support_only_failure = false;
            }
        } else if wb.norm() > tol {
            ok = false;
            if !desc.unresolved.contains(&b) {
                support_only_failure = false;
            }
        }
    }
    let fit_err = (problem.fit(w2) - &desc.y_hat).norm();
    if fit_err > tol * (1.0 + desc.y_hat.norm()) {
        ok = false;
        support_only_failure = false;
    }
    Membership {
        member: ok,
        indeterminate_support: !ok && support_only_failure && !desc.support_certified,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::BlockPartition;

    pub(crate) fn duplicate() -> (CglProblem, Weights, DualCertificate) {
        let x = DMatrix::from_element(2, 2, 1.0);
        let y = DVector::from_vec(vec![2.0, 2.0]);
        let p = CglProblem::unconstrained(x, y, BlockPartition::singletons(2), 1.0).unwrap();
        let w = Weights::new(DVector::from_vec(vec![0.75, 0.75]));
        let rho = DualCertificate::zeros(&p);
        (p, w, rho)
    }

    #[test]
    fn duplicate_instance() {
        let (p, w, rho) = duplicate();
        let d = describe_set(&p, &w, &rho).unwrap();
        assert_eq!(d.equicorrelation, vec![0, 1]);
        assert_eq!(d.support, vec![0, 1]);
        assert!(d.support_certified);
        assert!((d.y_hat[0] - 1.5).abs() < 1e-12 && (d.y_hat[1] - 1.5).abs() < 1e-12);
        let pt = |a: f64, b: f64| Weights::new(DVector::from_vec(vec![a, b]));
        assert!(contains(&d, &pt(0.75, 0.75), 1e-8).member);
        assert!(contains(&d, &pt(1.5, 0.0), 1e-8).member);
        assert!(!contains(&d, &pt(2.0, -0.5), 1e-8).member);
        assert!(contains(&d, &w, 1e-8).member);
    }

    #[test]
    fn full_rank_instance_support_is_active_set() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let y = DVector::from_vec(vec![2.0, -3.0, 1.0]);
        let p = CglProblem::unconstrained(x, y, BlockPartition::singletons(2), 1.0).unwrap();
        let w = Weights::new(DVector::from_vec(vec![1.0, -2.0]));
        let d = describe_set(&p, &w, &DualCertificate::zeros(&p)).unwrap();
        assert_eq!(d.support, vec![0, 1]);
        let (smin, tol) = d.generator_margin();
        assert!(smin > tol);
    }

    #[test]
    fn unverified_pair_is_rejected() {
        let (p, _, rho) = duplicate();
        let w = Weights::new(DVector::from_vec(vec![0.0, 0.0]));
        assert!(describe_set(&p, &w, &rho).is_err());
    }
}
