//! Constrained group lasso problems, weights, dual certificates and KKT evaluation.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, CglError, Result};
use crate::json;

/// Ordered partition of the columns `0..d` into non-empty disjoint blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct BlockPartition {
    blocks: Vec<Vec<usize>>,
    dim: usize,
}

impl BlockPartition {
    pub fn new(blocks: Vec<Vec<usize>>) -> Result<Self> {
        let dim: usize = blocks.iter().map(|b| b.len()).sum();
        let mut seen = vec![false; dim];
        for (i, b) in blocks.iter().enumerate() {
            if b.is_empty() {
                return Err(CglError::Argument(format!("block {i} is empty")));
            }
            for &j in b {
                if j >= dim || seen[j] {
                    return Err(CglError::Argument(format!(
                        "blocks do not partition 0..{dim}: column {j} repeated or out of range"
                    )));
                }
                seen[j] = true;
            }
        }
        Ok(BlockPartition { blocks, dim })
    }

    /// Consecutive blocks with the given widths.
    pub fn contiguous(widths: &[usize]) -> Result<Self> {
        let mut start = 0;
        let blocks = widths
            .iter()
            .map(|&w| {
                let b: Vec<usize> = (start..start + w).collect();
                start += w;
                b
            })
            .collect();
        Self::new(blocks)
    }

    pub fn singletons(d: usize) -> Self {
        Self::new((0..d).map(|j| vec![j]).collect()).expect("singletons partition")
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block(&self, i: usize) -> &[usize] {
        &self.blocks[i]
    }

    pub fn width(&self, i: usize) -> usize {
        self.blocks[i].len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Partition restricted to the listed blocks, renumbered contiguously.
    pub fn restrict(&self, keep: &[usize]) -> BlockPartition {
        let widths: Vec<usize> = keep.iter().map(|&i| self.width(i)).collect();
        BlockPartition::contiguous(&widths).expect("restricted partition")
    }
}

impl TryFrom<Vec<Vec<usize>>> for BlockPartition {
    type Error = CglError;
    fn try_from(v: Vec<Vec<usize>>) -> Result<Self> {
        BlockPartition::new(v)
    }
}

impl From<BlockPartition> for Vec<Vec<usize>> {
    fn from(p: BlockPartition) -> Self {
        p.blocks
    }
}

/// Primal weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    #[serde(with = "json::vector")]
    pub w: DVector<f64>,
}

impl Weights {
    pub fn new(w: DVector<f64>) -> Self {
        Weights { w }
    }

    pub fn zeros(d: usize) -> Self {
        Weights { w: DVector::zeros(d) }
    }

    pub fn block(&self, partition: &BlockPartition, i: usize) -> DVector<f64> {
        DVector::from_iterator(partition.width(i), partition.block(i).iter().map(|&j| self.w[j]))
    }

    pub fn blocks(&self, partition: &BlockPartition) -> Vec<DVector<f64>> {
        (0..partition.len()).map(|i| self.block(partition, i)).collect()
    }

    pub fn set_block(&mut self, partition: &BlockPartition, i: usize, v: &DVector<f64>) {
        for (k, &j) in partition.block(i).iter().enumerate() {
            self.w[j] = v[k];
        }
    }

    pub fn from_blocks(partition: &BlockPartition, blocks: &[DVector<f64>]) -> Result<Self> {
        if blocks.len() != partition.len() {
            return shape_err("block count does not match partition");
        }
        let mut w = Weights::zeros(partition.dim());
        for (i, b) in blocks.iter().enumerate() {
            if b.len() != partition.width(i) {
                return shape_err(format!("block {i} has wrong width"));
            }
            w.set_block(partition, i, b);
        }
        Ok(w)
    }

    pub fn block_norms(&self, partition: &BlockPartition) -> Vec<f64> {
        (0..partition.len()).map(|i| self.block(partition, i).norm()).collect()
    }

    /// Sum of block norms.
    pub fn group_norm(&self, partition: &BlockPartition) -> f64 {
        self.block_norms(partition).iter().sum()
    }

    /// Activity threshold `1e-8 * (1 + ||w||)`.
    pub fn active_tol(&self) -> f64 {
        1e-8 * (1.0 + self.w.norm())
    }

    pub fn active_set(&self, partition: &BlockPartition) -> Vec<usize> {
        let tol = self.active_tol();
        self.block_norms(partition)
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > tol)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Non-negative multipliers, one vector per block (empty for unconstrained blocks).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    #[serde(with = "json::vectors")]
    pub rho: Vec<DVector<f64>>,
}

impl DualCertificate {
    pub fn zeros(problem: &CglProblem) -> Self {
        DualCertificate {
            rho: (0..problem.num_blocks())
                .map(|i| DVector::zeros(problem.constraint_count(i)))
                .collect(),
        }
    }

    pub fn min_entry(&self) -> f64 {
        self.rho.iter().flat_map(|r| r.iter().copied()).fold(f64::INFINITY, f64::min)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.rho.iter().all(|r| r.iter().all(|&v| v >= -1e-10))
    }
}

/// Constrained group lasso instance
/// `min 1/2 ||X w - y||^2 + lambda sum_b ||w_b||  s.t.  K_b^T w_b <= 0`.
#[derive(Debug, Clone)]
pub struct CglProblem {
    x: DMatrix<f64>,
    y: DVector<f64>,
    partition: BlockPartition,
    constraints: Vec<Option<DMatrix<f64>>>,
    lambda: f64,
    designs: Vec<DMatrix<f64>>,
}

fn check_finite<'a>(what: &str, mut it: impl Iterator<Item = &'a f64>) -> Result<()> {
    if it.any(|v| !v.is_finite()) {
        return Err(CglError::Input(format!("{what} contains NaN or infinite values")));
    }
    Ok(())
}

impl CglProblem {
    pub fn new(
        x: DMatrix<f64>,
        y: DVector<f64>,
        partition: BlockPartition,
        constraints: Vec<Option<DMatrix<f64>>>,
        lambda: f64,
    ) -> Result<Self> {
        if x.nrows() != y.len() {
            return shape_err(format!("X has {} rows but y has length {}", x.nrows(), y.len()));
        }
        if x.ncols() != partition.dim() {
            return shape_err(format!(
                "X has {} columns but the partition covers {}",
                x.ncols(),
                partition.dim()
            ));
        }
        if constraints.len() != partition.len() {
            return shape_err("one constraint entry per block is required");
        }
        for (i, k) in constraints.iter().enumerate() {
            if let Some(k) = k {
                if k.nrows() != partition.width(i) {
                    return shape_err(format!(
                        "constraint matrix of block {i} has {} rows, block width is {}",
                        k.nrows(),
                        partition.width(i)
                    ));
                }
                check_finite("constraint matrix", k.iter())?;
            }
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(CglError::Argument(format!("lambda must be a finite nonnegative number, got {lambda}")));
        }
        check_finite("X", x.iter())?;
        check_finite("y", y.iter())?;
        let designs = (0..partition.len()).map(|i| x.select_columns(partition.block(i))).collect();
        Ok(CglProblem {
            x,
            y,
            partition,
            constraints,
            lambda,
            designs,
        })
    }

    pub fn unconstrained(x: DMatrix<f64>, y: DVector<f64>, partition: BlockPartition, lambda: f64) -> Result<Self> {
        let m = partition.len();
        Self::new(x, y, partition, vec![None; m], lambda)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }
    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }
    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }
    pub fn constraints(&self) -> &[Option<DMatrix<f64>>] {
        &self.constraints
    }
    pub fn constraint(&self, i: usize) -> Option<&DMatrix<f64>> {
        self.constraints[i].as_ref()
    }
    pub fn constraint_count(&self, i: usize) -> usize {
        self.constraints[i].as_ref().map(|k| k.ncols()).unwrap_or(0)
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn n(&self) -> usize {
        self.x.nrows()
    }
    pub fn d(&self) -> usize {
        self.x.ncols()
    }
    pub fn num_blocks(&self) -> usize {
        self.partition.len()
    }
    pub fn design(&self, i: usize) -> &DMatrix<f64> {
        &self.designs[i]
    }
    pub fn is_constrained(&self) -> bool {
        self.constraints.iter().any(|k| k.as_ref().map(|k| k.ncols() > 0).unwrap_or(false))
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.x.clone(), self.y.clone(), self.partition.clone(), self.constraints.clone(), lambda)
    }

    pub fn with_y(&self, y: DVector<f64>) -> Result<Self> {
        Self::new(self.x.clone(), y, self.partition.clone(), self.constraints.clone(), self.lambda)
    }

    /// Sub-problem on the listed blocks (columns and constraints kept, blocks renumbered).
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let cols: Vec<usize> = keep.iter().flat_map(|&i| self.partition.block(i).iter().copied()).collect();
        let x = self.x.select_columns(&cols);
        let constraints = keep.iter().map(|&i| self.constraints[i].clone()).collect();
        Self::new(x, self.y.clone(), self.partition.restrict(keep), constraints, self.lambda)
    }

    /// Smallest lambda at which zero is optimal when every block is unconstrained.
    pub fn lambda_max_unconstrained(&self) -> f64 {
        (0..self.num_blocks())
            .map(|i| (self.design(i).transpose() * &self.y).norm())
            .fold(0.0, f64::max)
    }

    fn check_weights(&self, w: &Weights) -> Result<()> {
        if w.w.len() != self.d() {
            return shape_err(format!("weights have length {}, problem dimension is {}", w.w.len(), self.d()));
        }
        Ok(())
    }

    pub fn fit(&self, w: &Weights) -> DVector<f64> {
        &self.x * &w.w
    }

    /// `X_b w_b`.
    pub fn block_fit(&self, i: usize, wb: &DVector<f64>) -> DVector<f64> {
        self.design(i) * wb
    }

    pub fn correlations(&self, residual: &DVector<f64>) -> Vec<DVector<f64>> {
        (0..self.num_blocks()).map(|i| self.design(i).transpose() * residual).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        json::to_json("cgl_problem", &ProblemRaw::from(self))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ProblemRaw = json::from_json("cgl_problem", text)?;
        raw.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct ProblemRaw {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    blocks: Vec<Vec<usize>>,
    constraints: Vec<Option<Vec<Vec<f64>>>>,
    lambda: f64,
}

impl From<&CglProblem> for ProblemRaw {
    fn from(p: &CglProblem) -> Self {
        ProblemRaw {
            x: json::matrix_to_rows(&p.x),
            y: p.y.iter().copied().collect(),
            blocks: p.partition.blocks().to_vec(),
            constraints: p.constraints.iter().map(|k| k.as_ref().map(json::matrix_to_rows)).collect(),
            lambda: p.lambda,
        }
    }
}

impl TryFrom<ProblemRaw> for CglProblem {
    type Error = CglError;
    fn try_from(raw: ProblemRaw) -> Result<Self> {
        let partition = BlockPartition::new(raw.blocks)?;
        let x = json::rows_to_matrix(&raw.x, partition.dim())?;
        let constraints = raw
            .constraints
            .iter()
            .map(|k| k.as_ref().map(|rows| json::rows_to_matrix(rows, 0)).transpose())
            .collect::<Result<Vec<_>>>()?;
        CglProblem::new(x, DVector::from_vec(raw.y), partition, constraints, raw.lambda)
    }
}

/// `1/2 ||X w - y||^2 + lambda sum_b ||w_b||` (constraints are not checked).
pub fn objective(problem: &CglProblem, w: &Weights) -> Result<f64> {
    problem.check_weights(w)?;
    let r = problem.fit(w) - problem.y();
    Ok(0.5 * r.norm_squared() + problem.lambda() * w.group_norm(problem.partition()))
}

/// Equicorrelation tolerance `1e-6 * (1 + lambda)`.
pub fn equicorrelation_tol(lambda: f64) -> f64 {
    1e-6 * (1.0 + lambda)
}

/// Evaluation of the KKT conditions at a primal-dual pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KktReport {
    #[serde(with = "json::vector")]
    pub residual: DVector<f64>,
    #[serde(with = "json::vectors")]
    pub correlations: Vec<DVector<f64>>,
    #[serde(with = "json::vectors")]
    pub v_vectors: Vec<DVector<f64>>,
    pub block_stationarity: Vec<f64>,
    pub stationarity_violation: f64,
    pub feasibility_violation: f64,
    pub slackness_violation: f64,
    pub equicorrelation: Vec<usize>,
    pub active: Vec<usize>,
    pub tol: f64,
    pub satisfied: bool,
}

impl KktReport {
    pub fn max_violation(&self) -> f64 {
        self.stationarity_violation
            .max(self.feasibility_violation)
            .max(self.slackness_violation)
    }

    pub fn to_json(&self) -> Result<String> {
        json::to_json("kkt_report", self)
    }
}

pub fn kkt_report(problem: &CglProblem, w: &Weights, rho: &DualCertificate, tol: f64) -> Result<KktReport> {
    problem.check_weights(w)?;
    if !(tol > 0.0) {
        return Err(CglError::Argument("kkt tolerance must be positive".into()));
    }
    if rho.rho.len() != problem.num_blocks() {
        return shape_err("dual certificate has the wrong number of blocks");
    }
    for i in 0..problem.num_blocks() {
        if rho.rho[i].len() != problem.constraint_count(i) {
            return shape_err(format!(
                "dual block {i} has length {}, constraint count is {}",
                rho.rho[i].len(),
                problem.constraint_count(i)
            ));
        }
    }
    let part = problem.partition();
    let lambda = problem.lambda();
    let residual = problem.y() - problem.fit(w);
    let correlations = problem.correlations(&residual);
    let act_tol = w.active_tol();
    let eq_tol = equicorrelation_tol(lambda);
    let mut v_vectors = Vec::with_capacity(part.len());
    let mut block_stationarity = Vec::with_capacity(part.len());
    let mut feas: f64 = 0.0;
    let mut slack: f64 = 0.0;
    let mut equicorrelation = Vec::new();
    let mut active = Vec::new();
    for i in 0..part.len() {
        let wb = w.block(part, i);
        let c = &correlations[i];
        let v = match problem.constraint(i) {
            Some(k) if k.ncols() > 0 => {
                let kw = k.transpose() * &wb;
                for (j, &val) in kw.iter().enumerate() {
                    feas = feas.max(val);
                    slack = slack.max((rho.rho[i][j] * val).abs());
                }
                c - k * &rho.rho[i]
            }
            _ => c.clone(),
        };
        let wn = wb.norm();
        let defect = if wn > act_tol {
            active.push(i);
            (&v - &wb * (lambda / wn)).norm()
        } else {
            (v.norm() - lambda).max(0.0)
        };
        if (v.norm() - lambda).abs() <= eq_tol {
            equicorrelation.push(i);
        }
        block_stationarity.push(defect);
        v_vectors.push(v);
    }
    let stationarity_violation = block_stationarity.iter().cloned().fold(0.0, f64::max);
    let dual_neg = (-rho.min_entry()).max(0.0);
    // `f64::max` drops NaN, so non-finite inputs are rejected explicitly.
    let finite = w.w.iter().chain(rho.rho.iter().flat_map(|r| r.iter())).all(|v| v.is_finite())
        && block_stationarity.iter().all(|v| v.is_finite());
    let satisfied = finite && stationarity_violation <= tol && feas <= tol && slack <= tol && dual_neg <= 1e-10;
    Ok(KktReport {
        residual,
        correlations,
        v_vectors,
        block_stationarity,
        stationarity_violation,
        feasibility_violation: feas,
        slackness_violation: slack,
        equicorrelation,
        active,
        tol,
        satisfied,
    })
}

/// Union of the active sets of the given solutions. The activity threshold is
/// `max(tol, 1e-8 (1 + ||w||))` per solution.
pub fn support_set(problem: &CglProblem, solutions: &[Weights], tol: f64) -> Result<Vec<usize>> {
    if solutions.is_empty() {
        return Err(CglError::Argument("support_set needs at least one solution".into()));
    }
    let mut set = BTreeSet::new();
    for w in solutions {
        problem.check_weights(w)?;
        let thr = tol.max(w.active_tol());
        for (i, n) in w.block_norms(problem.partition()).iter().enumerate() {
            if *n > thr {
                set.insert(i);
            }
        }
    }
    Ok(set.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interp_problem(lambda: f64) -> CglProblem {
        let x = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, 1.0, 0.0, 2.0]);
        let y = DVector::from_vec(vec![1.0, 1.0]);
        let part = BlockPartition::new(vec![vec![0, 1], vec![2]]).unwrap();
        CglProblem::unconstrained(x, y, part, lambda).unwrap()
    }

    fn duplicate_problem() -> CglProblem {
        let x = DMatrix::from_element(2, 2, 1.0);
        let y = DVector::from_vec(vec![2.0, 2.0]);
        CglProblem::unconstrained(x, y, BlockPartition::singletons(2), 1.0).unwrap()
    }

    #[test]
    fn non_finite_weights_never_certify() {
        let p = interp_problem(0.1);
        let w = Weights::new(DVector::from_element(3, f64::NAN));
        let r = kkt_report(&p, &w, &DualCertificate::zeros(&p), 1e-6).unwrap();
        assert!(!r.satisfied);
    }

    #[test]
    fn partition_validation() {
        assert!(BlockPartition::new(vec![vec![0], vec![0]]).is_err());
        assert!(BlockPartition::new(vec![vec![0], vec![]]).is_err());
        assert!(BlockPartition::new(vec![vec![0, 2]]).is_err());
        let p = BlockPartition::new(vec![vec![2, 0], vec![1]]).unwrap();
        assert_eq!(p.dim(), 3);
    }

    #[test]
    fn objective_zero_weights() {
        let p = interp_problem(1.0);
        assert_eq!(objective(&p, &Weights::zeros(3)).unwrap(), 1.0);
    }

    #[test]
    fn objective_row_space_interpolant() {
        let p = interp_problem(1.0);
        let w = Weights::new(DVector::from_element(3, 1.0 / 3.0));
        let expected = (1.0 + 2f64.sqrt()) / 3.0;
        assert!((objective(&p, &w).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn objective_shape_error() {
        let p = interp_problem(1.0);
        assert!(matches!(objective(&p, &Weights::zeros(2)), Err(CglError::Shape(_))));
    }

    #[test]
    fn unregularized_least_squares_is_stationary() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 0.5]);
        let p = CglProblem::unconstrained(x.clone(), y.clone(), BlockPartition::singletons(2), 0.0).unwrap();
        let ls = (x.transpose() * &x).try_inverse().unwrap() * x.transpose() * y;
        let rep = kkt_report(&p, &Weights::new(ls), &DualCertificate::zeros(&p), 1e-9).unwrap();
        assert!(rep.satisfied, "{rep:?}");
        assert!(rep.max_violation() < 1e-12);
    }

    #[test]
    fn duplicate_instance_certificate() {
        let p = duplicate_problem();
        let w = Weights::new(DVector::from_vec(vec![0.75, 0.75]));
        let rep = kkt_report(&p, &w, &DualCertificate::zeros(&p), 1e-9).unwrap();
        assert!(rep.satisfied);
        assert_eq!(rep.equicorrelation, vec![0, 1]);
        assert_eq!(rep.active, vec![0, 1]);
    }

    #[test]
    fn support_set_union() {
        let p = duplicate_problem();
        let a = Weights::new(DVector::from_vec(vec![1.5, 0.0]));
        let b = Weights::new(DVector::from_vec(vec![0.0, 1.5]));
        assert_eq!(support_set(&p, &[a.clone()], 0.0).unwrap(), vec![0]);
        assert_eq!(support_set(&p, &[a, b], 0.0).unwrap(), vec![0, 1]);
        assert!(support_set(&p, &[Weights::zeros(2)], 0.0).unwrap().is_empty());
        assert!(support_set(&p, &[], 0.0).is_err());
    }

    #[test]
    fn constrained_violations() {
        // Single scalar block with K = (-1): constraint -w <= 0.
        let x = DMatrix::from_element(1, 1, 1.0);
        let y = DVector::from_vec(vec![-1.0]);
        let k = DMatrix::from_element(1, 1, -1.0);
        let p = CglProblem::new(x, y, BlockPartition::singletons(1), vec![Some(k)], 0.5).unwrap();
        // w = 0 with rho = 1: v = c - K rho = -1 + 1 = 0.
        let rho = DualCertificate { rho: vec![DVector::from_vec(vec![1.0])] };
        let rep = kkt_report(&p, &Weights::zeros(1), &rho, 1e-9).unwrap();
        assert!(rep.satisfied);
        // Infeasible point.
        let w = Weights::new(DVector::from_vec(vec![-0.5]));
        let rep = kkt_report(&p, &w, &rho, 1e-9).unwrap();
        assert!((rep.feasibility_violation - 0.5).abs() < 1e-15);
        assert!((rep.slackness_violation - 0.5).abs() < 1e-15);
    }

    #[test]
    fn json_roundtrip() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let k = DMatrix::from_row_slice(1, 2, &[-1.0, 0.5]);
        let p = CglProblem::new(
            x,
            DVector::from_vec(vec![1.0, -1.0]),
            BlockPartition::singletons(2),
            vec![Some(k), None],
            0.3,
        )
        .unwrap();
        let text = p.to_json().unwrap();
        assert!(text.contains("\"schema_version\": 1"));
        let q = CglProblem::from_json(&text).unwrap();
        assert_eq!(q.x(), p.x());
        assert_eq!(q.constraints(), p.constraints());
        assert_eq!(q.lambda(), 0.3);
    }

    #[test]
    fn rejects_nan() {
        let x = DMatrix::from_element(1, 1, f64::NAN);
        let r = CglProblem::unconstrained(x, DVector::from_vec(vec![1.0]), BlockPartition::singletons(1), 0.1);
        assert!(matches!(r, Err(CglError::Input(_))));
    }
}
