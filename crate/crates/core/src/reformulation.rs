//! Convex reformulations of two-layer ReLU and gated ReLU networks.
//!
//! Activation patterns are masks `1(Z u >= 0)`; each pattern contributes the
//! design block `D_i Z`. Plain ReLU models get two sign copies per pattern with
//! cone constraints `(2 D_i - I) Z w >= 0`, gated models one free block.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, CglError, Result};
use crate::json;
use crate::linalg::numerical_rank;
use crate::lp::{simplex_max, LpStatus};
use crate::problem::{BlockPartition, CglProblem, Weights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    Relu,
    Gated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PatternMode {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Enumerated,
    Sampled { count: usize, seed: u64 },
    Supplied,
}

/// Deduplicated activation masks with a realizing direction for each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSet {
    #[serde(with = "mask_strings")]
    pub patterns: Vec<Vec<bool>>,
    #[serde(with = "json::vectors")]
    pub witnesses: Vec<DVector<f64>>,
    pub provenance: Provenance,
    /// Numerical rank of `Z`.
    pub rank_of_z: usize,
    /// Masks realized on an open cell of the arrangement (no nonzero row on its hyperplane).
    pub cell_count: usize,
    /// `2 sum_{k<r} C(n-1, k)`, the region bound of a central arrangement of `n` hyperplanes in rank `r`.
    pub cell_bound: u128,
}

mod mask_strings {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    pub fn serialize<S: Serializer>(m: &[Vec<bool>], s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<String> = m.iter().map(|x| super::mask_to_string(x)).collect();
        v.serialize(s)
    }
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<bool>>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| {
                s.chars()
                    .map(|c| match c {
                        '1' => Ok(true),
                        '0' => Ok(false),
                        _ => Err(serde::de::Error::custom("mask strings use 0/1")),
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn mask_to_string(m: &[bool]) -> String {
    m.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// `1(Z u >= 0)` evaluated in floating point.
pub fn mask_of(z: &DMatrix<f64>, u: &DVector<f64>) -> Vec<bool> {
    (z * u).iter().map(|&v| v >= 0.0).collect()
}

/// Mask check that accepts rows within `1e-9 ||z_i|| ||u||` of zero as active (LP round-off on tight rows).
pub fn witness_matches(z: &DMatrix<f64>, u: &DVector<f64>, mask: &[bool]) -> bool {
    if mask_of(z, u) == mask {
        return true;
    }
    let un = u.norm();
    let zu = z * u;
    (0..z.nrows()).all(|i| {
        let tol = 1e-9 * z.row(i).norm() * un;
        if mask[i] {
            zu[i] >= -tol
        } else {
            zu[i] < 0.0
        }
    })
}

fn binom(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// `2 sum_{k<r} C(n-1, k)`.
pub fn arrangement_bound(n: usize, r: usize) -> u128 {
    if n == 0 {
        return 1;
    }
    2 * (0..r as u128).map(|k| binom(n as u128 - 1, k)).sum::<u128>()
}

/// LP certificate for a (partial) mask over the first `rows` rows of `Z`.
///
/// Maximizes a margin `s` with `z_i^T u <= -s` on 0-rows and `z_i^T u >= 0`
/// on 1-rows (`>= s` on nonzero 1-rows when `strict_ones`), `|u_k| <= 1`.
/// Returns a witness when the margin exceeds `1e-9`.
pub fn certify_mask(z: &DMatrix<f64>, mask: &[bool], strict_ones: bool) -> Option<DVector<f64>> {
    let d = z.ncols();
    let rows = mask.len();
    let zero_row = |i: usize| z.row(i).iter().all(|&v| v == 0.0);
    for (i, &m) in mask.iter().enumerate() {
        if !m && zero_row(i) {
            return None;
        }
    }
    // Variables: u+ (d), u- (d), s, row slacks (rows), box slacks (2d), s slack.
    let nv = 2 * d + 1 + rows + 2 * d + 1;
    let nr = rows + 2 * d + 1;
    let s_idx = 2 * d;
    let mut a = DMatrix::zeros(nr, nv);
    let mut b = DVector::zeros(nr);
    for i in 0..rows {
        let strict = !mask[i] || (strict_ones && !zero_row(i));
        let sign = if mask[i] { -1.0 } else { 1.0 };
        for k in 0..d {
            a[(i, k)] = sign * z[(i, k)];
            a[(i, d + k)] = -sign * z[(i, k)];
        }
        if strict {
            a[(i, s_idx)] = 1.0;
        }
        a[(i, s_idx + 1 + i)] = 1.0;
    }
    let box0 = s_idx + 1 + rows;
    for k in 0..2 * d {
        a[(rows + k, k)] = 1.0;
        a[(rows + k, box0 + k)] = 1.0;
        b[rows + k] = 1.0;
    }
    a[(rows + 2 * d, s_idx)] = 1.0;
    a[(rows + 2 * d, nv - 1)] = 1.0;
    b[rows + 2 * d] = 1.0;
    let mut c = DVector::zeros(nv);
    c[s_idx] = 1.0;
    let res = simplex_max(&c, &a, &b, 1e-9);
    if res.status != LpStatus::Optimal || res.x[s_idx] <= 1e-9 {
        return None;
    }
    Some(DVector::from_fn(d, |k, _| res.x[k] - res.x[d + k]))
}

fn sweep_candidates(z: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let d = z.ncols();
    let mut cands = vec![DVector::zeros(d)];
    if d == 1 {
        cands.push(DVector::from_vec(vec![1.0]));
        cands.push(DVector::from_vec(vec![-1.0]));
        return cands;
    }
    // d == 2: perpendiculars of each row plus mid-angles between consecutive critical angles.
    let mut angles = Vec::new();
    for i in 0..z.nrows() {
        let (a, b) = (z[(i, 0)], z[(i, 1)]);
        if a == 0.0 && b == 0.0 {
            continue;
        }
        cands.push(DVector::from_vec(vec![-b, a]));
        cands.push(DVector::from_vec(vec![b, -a]));
        let base = b.atan2(a);
        for off in [std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2] {
            angles.push((base + off).rem_euclid(std::f64::consts::TAU));
        }
    }
    if angles.is_empty() {
        cands.push(DVector::from_vec(vec![1.0, 0.0]));
        return cands;
    }
    angles.sort_by(f64::total_cmp);
    for k in 0..angles.len() {
        let a0 = angles[k];
        let a1 = if k + 1 < angles.len() {
            angles[k + 1]
        } else {
            angles[0] + std::f64::consts::TAU
        };
        if a1 - a0 > 1e-15 {
            let m = 0.5 * (a0 + a1);
            cands.push(DVector::from_vec(vec![m.cos(), m.sin()]));
        }
    }
    cands
}

fn incremental_enumeration(z: &DMatrix<f64>) -> Vec<(Vec<bool>, DVector<f64>)> {
    let (n, d) = z.shape();
    let mut partial: Vec<(Vec<bool>, DVector<f64>)> = vec![(vec![], DVector::zeros(d))];
    for k in 0..n {
        let mut next = Vec::with_capacity(2 * partial.len());
        for (mask, u) in partial {
            let val = z.row(k).dot(&u.transpose());
            let inherit_one = val >= 0.0;
            let mut inherited = mask.clone();
            inherited.push(inherit_one);
            let mut other = mask;
            other.push(!inherit_one);
            next.push((inherited, u));
            if let Some(w) = certify_mask(z, &other, false) {
                next.push((other, w));
            }
        }
        partial = next;
    }
    partial
}

impl PatternSet {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    fn assemble(z: &DMatrix<f64>, mut items: Vec<(Vec<bool>, DVector<f64>)>, provenance: Provenance) -> Self {
        items.sort_by(|a, b| a.0.cmp(&b.0));
        items.dedup_by(|a, b| a.0 == b.0);
        let cell_count = items.iter().filter(|(m, _)| certify_mask(z, m, true).is_some()).count();
        let rank = numerical_rank(z);
        let (patterns, witnesses) = items.into_iter().unzip();
        PatternSet {
            patterns,
            witnesses,
            provenance,
            rank_of_z: rank,
            cell_count,
            cell_bound: arrangement_bound(z.nrows(), rank),
        }
    }

    /// Pattern set from explicit masks, each certified by LP.
    pub fn from_masks(z: &DMatrix<f64>, masks: &[Vec<bool>]) -> Result<Self> {
        let mut items = Vec::new();
        for (i, m) in masks.iter().enumerate() {
            if m.len() != z.nrows() {
                return shape_err(format!("mask {i} has length {}, expected {}", m.len(), z.nrows()));
            }
            let u = certify_mask(z, m, false)
                .ok_or_else(|| CglError::Argument(format!("mask {} is not realizable", mask_to_string(m))))?;
            items.push((m.clone(), u));
        }
        Ok(Self::assemble(z, items, Provenance::Supplied))
    }

    /// Neither mask order nor dedup changes the supplied set when it is already sorted.
    pub fn index_of(&self, mask: &[bool]) -> Option<usize> {
        self.patterns.iter().position(|m| m == mask)
    }

    pub fn nnz(&self, i: usize) -> usize {
        self.patterns[i].iter().filter(|&&b| b).count()
    }

    pub fn to_json(&self) -> Result<String> {
        json::to_json("pattern_set", self)
    }
}

/// Enumerate or sample activation patterns of `Z`.
pub fn enumerate_patterns(z: &DMatrix<f64>, mode: PatternMode) -> Result<PatternSet> {
    let (n, d) = z.shape();
    if z.iter().any(|v| !v.is_finite()) {
        return Err(CglError::Input("Z contains NaN or infinite values".into()));
    }
    match mode {
        PatternMode::Exhaustive => {
            if !(n <= 20 || d <= 3) {
                return Err(CglError::Capability(format!(
                    "exhaustive pattern enumeration needs n <= 20 or d <= 3 (got n = {n}, d = {d})"
                )));
            }
            let items = if d <= 2 {
                sweep_candidates(z).into_iter().map(|u| (mask_of(z, &u), u)).collect()
            } else {
                incremental_enumeration(z)
            };
            Ok(PatternSet::assemble(z, items, Provenance::Enumerated))
        }
        PatternMode::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut items = vec![(vec![true; n], DVector::zeros(d))];
            for _ in 0..count {
                let u = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
                items.push((mask_of(z, &u), u));
            }
            Ok(PatternSet::assemble(z, items, Provenance::Sampled { count, seed }))
        }
    }
}

fn masked_design(z: &DMatrix<f64>, mask: &[bool]) -> DMatrix<f64> {
    let mut m = z.clone();
    for (i, &on) in mask.iter().enumerate() {
        if !on {
            m.row_mut(i).fill(0.0);
        }
    }
    m
}

/// `K = -Z^T (2 D - I)`, shape `d x n`.
pub fn cone_matrix(z: &DMatrix<f64>, mask: &[bool]) -> DMatrix<f64> {
    let mut k = -z.transpose();
    for (i, &on) in mask.iter().enumerate() {
        if !on {
            let mut col = k.column_mut(i);
            col *= -1.0;
        }
    }
    k
}

/// Assemble the CGL problem for the given patterns.
///
/// ReLU: blocks `0..p` are the positive copies and `p..2p` the negative copies,
/// with designs `D_i Z` and `-D_i Z` and the shared cone `K_i`.
pub fn build_cgl(z: &DMatrix<f64>, y: &DVector<f64>, patterns: &PatternSet, lambda: f64, arch: Arch) -> Result<CglProblem> {
    let (n, d) = z.shape();
    if y.len() != n {
        return shape_err(format!("Z has {n} rows but y has length {}", y.len()));
    }
    if patterns.is_empty() {
        return Err(CglError::Argument("pattern set is empty".into()));
    }
    let p = patterns.len();
    if patterns.patterns.iter().any(|m| m.len() != n) {
        return shape_err("pattern length does not match the number of samples");
    }
    let copies = match arch {
        Arch::Relu => 2,
        Arch::Gated => 1,
    };
    let mut x = DMatrix::zeros(n, copies * p * d);
    let mut constraints = Vec::with_capacity(copies * p);
    for c in 0..copies {
        for (i, mask) in patterns.patterns.iter().enumerate() {
            let blk = c * p + i;
            // Negative copies enter the fit with a minus sign: f = sum_i D_i Z (v_i - u_i).
            let sign = if c == 0 { 1.0 } else { -1.0 };
            x.view_mut((0, blk * d), (n, d)).copy_from(&(masked_design(z, mask) * sign));
            constraints.push(match arch {
                Arch::Relu => Some(cone_matrix(z, mask)),
                Arch::Gated => None,
            });
        }
    }
    let part = BlockPartition::contiguous(&vec![d; copies * p])?;
    CglProblem::new(x, y.clone(), part, constraints, lambda)
}

/// Two-layer network `sum_i (Z W1_i + b1_i)_+ w2_i + b2`, or the gated variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReluNetwork {
    #[serde(with = "json::matrix")]
    pub w1: DMatrix<f64>,
    #[serde(with = "json::vector")]
    pub w2: DVector<f64>,
    #[serde(with = "json::opt_matrix", default)]
    pub gates: Option<DMatrix<f64>>,
    #[serde(with = "json::opt_vector", default)]
    pub bias1: Option<DVector<f64>>,
    #[serde(default)]
    pub bias2: Option<f64>,
}

impl ReluNetwork {
    pub fn empty(d: usize) -> Self {
        ReluNetwork {
            w1: DMatrix::zeros(0, d),
            w2: DVector::zeros(0),
            gates: None,
            bias1: None,
            bias2: None,
        }
    }

    pub fn width(&self) -> usize {
        self.w2.len()
    }

    /// Neurons with a nonzero contribution.
    pub fn active_width(&self) -> usize {
        (0..self.width())
            .filter(|&i| self.w2[i] != 0.0 && self.w1.row(i).iter().any(|&v| v != 0.0))
            .count()
    }

    /// Output of neuron `i` on `Z` (without the output bias).
    pub fn neuron_output(&self, z: &DMatrix<f64>, i: usize) -> Result<DVector<f64>> {
        let pre = z * self.w1.row(i).transpose();
        let out = match &self.gates {
            Some(g) => {
                let gate = z * g.row(i).transpose();
                DVector::from_fn(z.nrows(), |r, _| if gate[r] >= 0.0 { pre[r] } else { 0.0 })
            }
            None => {
                let b = self.bias1.as_ref().map(|b| b[i]).unwrap_or(0.0);
                pre.map(|v| (v + b).max(0.0))
            }
        };
        Ok(out * self.w2[i])
    }

    /// `(lambda/2) sum_i (||W1_i||^2 + w2_i^2)`, biases unregularized.
    pub fn penalty(&self, lambda: f64) -> f64 {
        0.5 * lambda * (self.w1.norm_squared() + self.w2.norm_squared())
    }
}

/// Network predictions on `Z`.
pub fn predict(net: &ReluNetwork, z: &DMatrix<f64>) -> Result<DVector<f64>> {
    if z.ncols() != net.w1.ncols() {
        return shape_err(format!("Z has {} columns, network expects {}", z.ncols(), net.w1.ncols()));
    }
    if net.w1.nrows() != net.w2.len() {
        return shape_err("W1 rows and w2 length differ");
    }
    if let Some(g) = &net.gates {
        if g.shape() != net.w1.shape() {
            return shape_err("gates must have the shape of W1");
        }
    }
    let mut out = DVector::from_element(z.nrows(), net.bias2.unwrap_or(0.0));
    for i in 0..net.width() {
        out += net.neuron_output(z, i)?;
    }
    Ok(out)
}

/// `1/2 ||f(Z) - y||^2 + (lambda/2) sum_i (||W1_i||^2 + w2_i^2)`.
pub fn network_objective(net: &ReluNetwork, z: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<f64> {
    let f = predict(net, z)?;
    Ok(0.5 * (f - y).norm_squared() + net.penalty(lambda))
}

fn split_neuron(v: &DVector<f64>) -> (DVector<f64>, f64) {
    let n = v.norm();
    if n == 0.0 {
        (DVector::zeros(v.len()), 0.0)
    } else {
        let s = n.sqrt();
        (v / s, s)
    }
}

/// Map convex weights to a ReLU network: positive copies first, then negative copies.
pub fn convex_to_relu(v: &[DVector<f64>], u: &[DVector<f64>]) -> Result<ReluNetwork> {
    let d = v.first().or(u.first()).map(|x| x.len()).unwrap_or(0);
    if v.iter().chain(u.iter()).any(|x| x.len() != d) {
        return shape_err("all convex blocks must have the same width");
    }
    let m = v.len() + u.len();
    let mut w1 = DMatrix::zeros(m, d);
    let mut w2 = DVector::zeros(m);
    for (i, (blk, sign)) in v.iter().map(|b| (b, 1.0)).chain(u.iter().map(|b| (b, -1.0))).enumerate() {
        let (row, scale) = split_neuron(blk);
        w1.set_row(i, &row.transpose());
        w2[i] = sign * scale;
    }
    Ok(ReluNetwork {
        w1,
        w2,
        gates: None,
        bias1: None,
        bias2: None,
    })
}

/// Map gated convex weights (one block per pattern) to a gated network.
pub fn convex_to_gated(blocks: &[DVector<f64>], patterns: &PatternSet) -> Result<ReluNetwork> {
    if blocks.len() != patterns.len() {
        return shape_err("one block per pattern is required");
    }
    let mut net = convex_to_relu(blocks, &[])?;
    let d = net.w1.ncols();
    let mut g = DMatrix::zeros(blocks.len(), d);
    for (i, w) in patterns.witnesses.iter().enumerate() {
        g.set_row(i, &w.transpose());
    }
    net.gates = Some(g);
    Ok(net)
}

/// Split CGL weights of a ReLU build into positive and negative copies.
pub fn split_relu_weights(problem: &CglProblem, w: &Weights) -> Result<(Vec<DVector<f64>>, Vec<DVector<f64>>)> {
    let m = problem.num_blocks();
    if m % 2 != 0 {
        return Err(CglError::Mapping("a ReLU build has an even number of blocks".into()));
    }
    let blocks = w.blocks(problem.partition());
    let p = m / 2;
    Ok((blocks[..p].to_vec(), blocks[p..].to_vec()))
}

/// Map a plain ReLU network back to convex weights `(v, u)` indexed by pattern.
pub fn relu_to_convex(net: &ReluNetwork, z: &DMatrix<f64>, patterns: &PatternSet) -> Result<(Vec<DVector<f64>>, Vec<DVector<f64>>)> {
    if net.gates.is_some() {
        return Err(CglError::Mapping("relu_to_convex expects a network without gates".into()));
    }
    let d = z.ncols();
    if net.w1.ncols() != d {
        return shape_err("network width does not match Z");
    }
    let p = patterns.len();
    let mut v = vec![DVector::zeros(d); p];
    let mut u = vec![DVector::zeros(d); p];
    for i in 0..net.width() {
        let row: DVector<f64> = net.w1.row(i).transpose();
        if net.w2[i] == 0.0 || row.iter().all(|&x| x == 0.0) {
            continue;
        }
        let pre = z * &row;
        // Conforming patterns agree on every row with a nonzero preactivation.
        let mut best: Option<(usize, usize)> = None;
        for (j, mask) in patterns.patterns.iter().enumerate() {
            let ok = (0..z.nrows()).all(|r| (pre[r] > 0.0 && mask[r]) || (pre[r] < 0.0 && !mask[r]) || pre[r] == 0.0);
            if ok {
                let nnz = patterns.nnz(j);
                if best.map(|(_, b)| nnz < b).unwrap_or(true) {
                    best = Some((j, nnz));
                }
            }
        }
        let Some((j, _)) = best else {
            return Err(CglError::Mapping(format!("neuron {i} conforms to no supplied activation pattern")));
        };
        let contrib = &row * net.w2[i].abs();
        if net.w2[i] > 0.0 {
            v[j] += contrib;
        } else {
            u[j] += contrib;
        }
    }
    Ok((v, u))
}

/// Premise of the almost-sure uniqueness result for ReLU models: every pattern has `nnz >= p d`.
pub fn relu_unique_premise(patterns: &PatternSet, d: usize) -> bool {
    let need = patterns.len() * d;
    (0..patterns.len()).all(|i| patterns.nnz(i) >= need)
}

/// Lasso with an unpenalized intercept, `min 1/2 ||A v + b 1 - y||^2 + lambda ||v||_1`,
/// solved through the centered problem.
#[derive(Debug, Clone)]
pub struct InterceptLasso {
    pub a: DMatrix<f64>,
    pub y: DVector<f64>,
    pub lambda: f64,
    /// Centered design and targets with singleton blocks.
    pub centered: CglProblem,
    pub column_means: DVector<f64>,
    pub y_mean: f64,
}

impl InterceptLasso {
    pub fn new(a: DMatrix<f64>, y: DVector<f64>, lambda: f64) -> Result<Self> {
        let n = a.nrows();
        if n != y.len() {
            return shape_err("A and y disagree on the number of rows");
        }
        let column_means = DVector::from_fn(a.ncols(), |j, _| a.column(j).mean());
        let y_mean = y.mean();
        let mut ac = a.clone();
        for j in 0..a.ncols() {
            let m = column_means[j];
            ac.column_mut(j).add_scalar_mut(-m);
        }
        let yc = y.add_scalar(-y_mean);
        let centered = CglProblem::unconstrained(ac, yc, BlockPartition::singletons(a.ncols()), lambda)?;
        Ok(InterceptLasso {
            a,
            y,
            lambda,
            centered,
            column_means,
            y_mean,
        })
    }

    /// Optimal intercept for the given coefficients.
    pub fn intercept(&self, v: &DVector<f64>) -> f64 {
        self.y_mean - self.column_means.dot(v)
    }

    pub fn objective(&self, v: &DVector<f64>, b: f64) -> f64 {
        let r = &self.a * v - &self.y;
        0.5 * r.add_scalar(b).norm_squared() + self.lambda * v.iter().map(|x| x.abs()).sum::<f64>()
    }
}

/// The `n x 2(n-1)` lasso design for 1-D two-layer ReLU regression.
///
/// Column `j < n-1` is `(Z_i - Z_j)_+` (up-slope kink at `Z_j`); column `n-1+k` is
/// `(Z_{n-1-k} - Z_i)_+` (down-slope kink at `Z_{n-1-k}`).
pub fn one_d_lasso_matrix(z: &[f64]) -> Result<DMatrix<f64>> {
    let n = z.len();
    if n < 2 {
        return Err(CglError::Input("the 1-D reduction needs at least two points".into()));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(CglError::Input("Z contains NaN or infinite values".into()));
    }
    for i in 1..n {
        if z[i] == z[i - 1] {
            return Err(CglError::Input(format!("duplicate data point {}", z[i])));
        }
        if z[i] < z[i - 1] {
            return Err(CglError::Input("data points must be sorted increasingly".into()));
        }
    }
    let mut a = DMatrix::zeros(n, 2 * (n - 1));
    for i in 0..n {
        for j in 0..n - 1 {
            a[(i, j)] = (z[i] - z[j]).max(0.0);
            a[(i, n - 1 + j)] = (z[n - 1 - j] - z[i]).max(0.0);
        }
    }
    Ok(a)
}

pub fn one_d_lasso_build(z: &[f64], y: &DVector<f64>, lambda: f64) -> Result<InterceptLasso> {
    let a = one_d_lasso_matrix(z)?;
    InterceptLasso::new(a, y.clone(), lambda)
}

/// Network with one neuron per lasso column; predictions equal `A v + b` on the data.
pub fn one_d_lasso_to_network(v: &DVector<f64>, b: f64, z: &[f64]) -> Result<ReluNetwork> {
    let n = z.len();
    if n < 2 || v.len() != 2 * (n - 1) {
        return shape_err(format!("expected {} lasso coefficients for {n} points", 2 * n.saturating_sub(1)));
    }
    let m = v.len();
    let mut w1 = DMatrix::zeros(m, 1);
    let mut w2 = DVector::zeros(m);
    let mut b1 = DVector::zeros(m);
    for k in 0..m {
        let s = v[k].abs().sqrt();
        if s == 0.0 {
            continue;
        }
        let (slope, kink) = if k < n - 1 { (1.0, z[k]) } else { (-1.0, z[n - 1 - (k - (n - 1))]) };
        w1[(k, 0)] = slope * s;
        b1[k] = -slope * kink * s;
        w2[k] = v[k].signum() * s;
    }
    let net = ReluNetwork {
        w1,
        w2,
        gates: None,
        bias1: Some(b1),
        bias2: Some(b),
    };
    let a = one_d_lasso_matrix(z)?;
    let zm = DMatrix::from_column_slice(n, 1, z);
    let pred = predict(&net, &zm)?;
    let target = (a * v).add_scalar(b);
    let err = (&pred - &target).amax();
    if err > 1e-10 * (1.0 + target.amax()) {
        return Err(CglError::Mapping(format!("network predictions differ from A v + b by {err:.3e}")));
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: usize, cols: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, v)
    }

    fn masks(ps: &PatternSet) -> Vec<String> {
        ps.patterns.iter().map(|m| mask_to_string(m)).collect()
    }

    #[test]
    fn two_opposite_points() {
        let ps = enumerate_patterns(&m(2, 1, &[1.0, -1.0]), PatternMode::Exhaustive).unwrap();
        assert_eq!(masks(&ps), vec!["01", "10", "11"]);
        assert_eq!(ps.cell_count, 2);
        assert_eq!(ps.cell_bound, 2);
    }

    #[test]
    fn single_point() {
        let ps = enumerate_patterns(&m(1, 1, &[2.0]), PatternMode::Exhaustive).unwrap();
        assert_eq!(masks(&ps), vec!["0", "1"]);
    }

    #[test]
    fn incremental_matches_sweep_in_2d() {
        let z = m(5, 2, &[1.0, 0.2, -0.3, 1.0, 0.7, -0.9, -1.1, -0.4, 0.2, 0.5]);
        let a = enumerate_patterns(&z, PatternMode::Exhaustive).unwrap();
        let b: Vec<Vec<bool>> = {
            let mut v: Vec<_> = incremental_enumeration(&z).into_iter().map(|(m, _)| m).collect();
            v.sort();
            v
        };
        assert_eq!(a.patterns, b);
    }

    #[test]
    fn guard_rejects_large() {
        let z = DMatrix::zeros(21, 4);
        assert!(matches!(enumerate_patterns(&z, PatternMode::Exhaustive), Err(CglError::Capability(_))));
    }

    #[test]
    fn sampled_contains_all_ones() {
        let z = m(3, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, -1.0]);
        let ps = enumerate_patterns(&z, PatternMode::Sampled { count: 10, seed: 3 }).unwrap();
        assert!(ps.index_of(&[true, true, true]).is_some());
        let again = enumerate_patterns(&z, PatternMode::Sampled { count: 10, seed: 3 }).unwrap();
        assert_eq!(ps, again);
    }

    #[test]
    fn cone_matrix_example() {
        let z = m(2, 1, &[1.0, -1.0]);
        let k = cone_matrix(&z, &[true, false]);
        assert_eq!(k, m(1, 2, &[-1.0, -1.0]));
    }

    #[test]
    fn build_shapes() {
        let z = m(3, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, -1.0]);
        let y = DVector::from_vec(vec![1.0, 0.0, -1.0]);
        let ps = enumerate_patterns(&z, PatternMode::Exhaustive).unwrap();
        let p = ps.len();
        let g = build_cgl(&z, &y, &ps, 0.1, Arch::Gated).unwrap();
        assert_eq!(g.num_blocks(), p);
        assert!(!g.is_constrained());
        let r = build_cgl(&z, &y, &ps, 0.1, Arch::Relu).unwrap();
        assert_eq!(r.num_blocks(), 2 * p);
        for i in 0..2 * p {
            assert_eq!(r.constraint(i).unwrap().shape(), (2, 3));
            let sign = if i < p { 1.0 } else { -1.0 };
            assert_eq!(r.design(i), &(g.design(i % p) * sign));
        }
    }

    #[test]
    fn convex_to_relu_examples() {
        let net = convex_to_relu(&[DVector::from_vec(vec![3.0, 4.0]), DVector::zeros(2)], &[DVector::from_vec(vec![1.0, 0.0])]).unwrap();
        let s5 = 5f64.sqrt();
        assert!((net.w1[(0, 0)] - 3.0 / s5).abs() < 1e-15 && (net.w1[(0, 1)] - 4.0 / s5).abs() < 1e-15);
        assert!((net.w2[0] - s5).abs() < 1e-15);
        assert_eq!(net.w2[1], 0.0);
        assert_eq!(net.w1.row(1).norm(), 0.0);
        assert_eq!(net.w1.row(2).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0]);
        assert_eq!(net.w2[2], -1.0);
    }

    #[test]
    fn merge_collinear_neurons() {
        let z = m(2, 2, &[1.0, 0.0, -1.0, 0.5]);
        let ps = PatternSet::from_masks(&z, &[vec![true, false]]).unwrap();
        let net = ReluNetwork {
            w1: m(2, 2, &[1.0, 0.0, 2.0, 0.0]),
            w2: DVector::from_vec(vec![1.0, 0.5]),
            gates: None,
            bias1: None,
            bias2: None,
        };
        let (v, u) = relu_to_convex(&net, &z, &ps).unwrap();
        assert_eq!(v[0], DVector::from_vec(vec![2.0, 0.0]));
        assert_eq!(u[0], DVector::zeros(2));
    }

    #[test]
    fn nonconforming_neuron_is_named() {
        let z = m(2, 1, &[1.0, -1.0]);
        let ps = PatternSet::from_masks(&z, &[vec![true, false]]).unwrap();
        let net = ReluNetwork {
            w1: m(1, 1, &[-1.0]),
            w2: DVector::from_vec(vec![1.0]),
            gates: None,
            bias1: None,
            bias2: None,
        };
        match relu_to_convex(&net, &z, &ps) {
            Err(CglError::Mapping(msg)) => assert!(msg.contains("neuron 0")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn predict_examples() {
        let z = m(2, 1, &[1.0, -1.0]);
        let net = ReluNetwork {
            w1: m(1, 1, &[1.0]),
            w2: DVector::from_vec(vec![2.0]),
            gates: None,
            bias1: None,
            bias2: None,
        };
        assert_eq!(predict(&net, &z).unwrap(), DVector::from_vec(vec![2.0, 0.0]));
        assert_eq!(predict(&ReluNetwork::empty(1), &z).unwrap(), DVector::zeros(2));
        let gated = ReluNetwork {
            w1: m(1, 1, &[-1.0]),
            w2: DVector::from_vec(vec![1.0]),
            gates: Some(m(1, 1, &[1.0])),
            bias1: None,
            bias2: None,
        };
        assert_eq!(predict(&gated, &m(1, 1, &[1.0])).unwrap(), DVector::from_vec(vec![-1.0]));
    }

    #[test]
    fn one_d_matrices() {
        assert_eq!(one_d_lasso_matrix(&[0.0, 1.0]).unwrap(), m(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(
            one_d_lasso_matrix(&[0.0, 1.0, 2.0]).unwrap(),
            m(3, 4, &[0.0, 0.0, 2.0, 1.0, 1.0, 0.0, 1.0, 0.0, 2.0, 1.0, 0.0, 0.0])
        );
        assert!(matches!(one_d_lasso_matrix(&[0.0, 0.0, 1.0]), Err(CglError::Input(_))));
    }

    #[test]
    fn one_d_network_examples() {
        let net = one_d_lasso_to_network(&DVector::zeros(2), 3.0, &[0.0, 1.0]).unwrap();
        let pred = predict(&net, &m(3, 1, &[-5.0, 0.3, 9.0])).unwrap();
        assert_eq!(pred, DVector::from_element(3, 3.0));
        let net = one_d_lasso_to_network(&DVector::from_vec(vec![0.0, 1.0]), 0.0, &[0.0, 1.0]).unwrap();
        assert_eq!(predict(&net, &m(2, 1, &[0.0, 1.0])).unwrap(), DVector::from_vec(vec![1.0, 0.0]));
    }

    proptest! {
        #[test]
        fn witnesses_realize_masks(vals in prop::collection::vec(-2.0f64..2.0, 12), seed in 0u64..50) {
            let z = DMatrix::from_row_slice(4, 3, &vals);
            for mode in [PatternMode::Exhaustive, PatternMode::Sampled { count: 20, seed }] {
                let ps = enumerate_patterns(&z, mode).unwrap();
                for (mask, u) in ps.patterns.iter().zip(&ps.witnesses) {
                    prop_assert!(witness_matches(&z, u, mask));
                }
                prop_assert!(ps.cell_count as u128 <= ps.cell_bound);
            }
        }

        #[test]
        fn cone_membership_matches_sign_pattern(vals in prop::collection::vec(-2.0f64..2.0, 6), w in prop::collection::vec(-2.0f64..2.0, 2), bits in prop::collection::vec(any::<bool>(), 3)) {
            let z = DMatrix::from_row_slice(3, 2, &vals);
            let w = DVector::from_vec(w);
            let k = cone_matrix(&z, &bits);
            let in_cone = (k.transpose() * &w).iter().all(|&v| v <= 0.0);
            let zw = &z * &w;
            let signs = (0..3).all(|i| if bits[i] { zw[i] >= 0.0 } else { -zw[i] >= 0.0 });
            prop_assert_eq!(in_cone, signs);
        }

        #[test]
        fn convex_relu_roundtrip(vals in prop::collection::vec(-2.0f64..2.0, 10), coef in prop::collection::vec(0.0f64..2.0, 8), y in prop::collection::vec(-1.0f64..1.0, 5), lambda in 0.0f64..1.0) {
            let z = DMatrix::from_row_slice(5, 2, &vals);
            let ps = enumerate_patterns(&z, PatternMode::Exhaustive).unwrap();
            let y = DVector::from_vec(y);
            // Feasible convex weights: nonnegative multiples of the witnesses.
            let p = ps.len();
            let v: Vec<DVector<f64>> = (0..p).map(|i| &ps.witnesses[i] * coef[i % 8]).collect();
            let u: Vec<DVector<f64>> = (0..p).map(|i| &ps.witnesses[i] * coef[(i + 3) % 8]).collect();
            let net = convex_to_relu(&v, &u).unwrap();
            let prob = build_cgl(&z, &y, &ps, lambda, Arch::Relu).unwrap();
            let blocks: Vec<DVector<f64>> = v.iter().chain(u.iter()).cloned().collect();
            let w = Weights::from_blocks(prob.partition(), &blocks).unwrap();
            let cgl = crate::problem::objective(&prob, &w).unwrap();
            let nn = network_objective(&net, &z, &y, lambda).unwrap();
            prop_assert!((cgl - nn).abs() <= 1e-10 * (1.0 + cgl.abs()));
        }
    }
}
