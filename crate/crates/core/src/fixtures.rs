//! Built-in synthetic instances and the golden fixtures.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CglError, Result};
use crate::problem::{BlockPartition, CglProblem, Weights};
use crate::reformulation::{build_cgl, enumerate_patterns, Arch, PatternMode, PatternSet};

fn normal_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

fn normal_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Gaussian features with targets from a planted two-neuron ReLU network plus noise.
pub fn gaussian(n: usize, d: usize, noise: f64, seed: u64) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if n == 0 || d == 0 {
        return Err(CglError::Argument("gaussian generator needs n > 0 and d > 0".into()));
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(CglError::Argument("noise must be finite and non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = normal_matrix(&mut rng, n, d);
    let u = normal_matrix(&mut rng, 2, d);
    let mut y = DVector::zeros(n);
    for i in 0..n {
        let a = z.row(i).dot(&u.row(0)).max(0.0);
        let b = z.row(i).dot(&u.row(1)).max(0.0);
        let e: f64 = StandardNormal.sample(&mut rng);
        y[i] = a - 0.5 * b + noise * e;
    }
    Ok((z, y))
}

/// Two identical unit columns, `y = (2, 2)`, `lambda = 1`, together with the
/// symmetric solution `(0.75, 0.75)`. The optimal set is the segment `w1 + w2 = 1.5, w >= 0`.
pub fn duplicate() -> (CglProblem, Weights) {
    let x = DMatrix::from_element(2, 2, 1.0);
    let y = DVector::from_vec(vec![2.0, 2.0]);
    let p = CglProblem::unconstrained(x, y, BlockPartition::singletons(2), 1.0).expect("valid fixture");
    (p, Weights::new(DVector::from_vec(vec![0.75, 0.75])))
}

/// `X = [[1, 2, 0], [1, 0, 2]]`, blocks `{0, 1}` and `{2}`, `y = (1, 1)`.
pub fn min_norm_interp(lambda: f64) -> Result<CglProblem> {
    let x = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, 1.0, 0.0, 2.0]);
    let y = DVector::from_vec(vec![1.0, 1.0]);
    let part = BlockPartition::new(vec![vec![0, 1], vec![2]])?;
    CglProblem::unconstrained(x, y, part, lambda)
}

/// Unit vector spanning the null space of the `min_norm_interp` design.
pub fn min_norm_interp_null() -> DVector<f64> {
    DVector::from_vec(vec![2.0, -1.0, -1.0]) / 6f64.sqrt()
}

/// Scalar data `x = (-100, 1)`, `y = (1, 10)` for the one-neuron path.
pub fn one_neuron() -> (Vec<f64>, Vec<f64>) {
    (vec![-100.0, 1.0], vec![1.0, 10.0])
}

/// A group lasso instance whose block fits all lie in one `span`-dimensional subspace,
/// together with an optimal solution where every block is active.
///
/// Block designs are `U C_b` with orthonormal `U`. Each `C_b` is scaled so that
/// `||C_b^T s|| = lambda` for a common residual direction `s`. With `w_b = alpha_b C_b^T s`
/// and `y = X w + U s`, every block satisfies stationarity with equality.
pub fn group_dependent(
    n: usize,
    span: usize,
    blocks: usize,
    width: usize,
    lambda: f64,
    seed: u64,
) -> Result<(CglProblem, Weights)> {
    if span == 0 || span > n || blocks == 0 || width == 0 || !(lambda > 0.0) {
        return Err(CglError::Argument("group_dependent needs 0 < span <= n, blocks, width > 0 and lambda > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = normal_matrix(&mut rng, n, span).qr().q();
    let mut s = normal_vector(&mut rng, span);
    s /= s.norm();
    let mut x = DMatrix::zeros(n, blocks * width);
    let mut w = DVector::zeros(blocks * width);
    for b in 0..blocks {
        let mut c = normal_matrix(&mut rng, span, width);
        let corr = c.transpose() * &s;
        c *= lambda / corr.norm();
        let dir = c.transpose() * &s;
        let alpha: f64 = rng.random_range(0.2..1.0);
        x.view_mut((0, b * width), (n, width)).copy_from(&(&u * &c));
        w.rows_mut(b * width, width).copy_from(&(dir * alpha));
    }
    let y = &x * &w + &u * &s;
    let part = BlockPartition::contiguous(&vec![width; blocks])?;
    Ok((CglProblem::unconstrained(x, y, part, lambda)?, Weights::new(w)))
}

/// A seeded ReLU or gated instance with `lambda = lambda_frac * lambda_max`.
#[derive(Debug, Clone)]
pub struct NetworkInstance {
    pub z: DMatrix<f64>,
    pub y: DVector<f64>,
    pub patterns: PatternSet,
    pub problem: CglProblem,
}

/// Gaussian data with at most `max_patterns` sampled patterns (the all-ones mask always included).
pub fn network_instance(
    n: usize,
    d: usize,
    max_patterns: usize,
    arch: Arch,
    lambda_frac: f64,
    seed: u64,
) -> Result<NetworkInstance> {
    let (z, y) = gaussian(n, d, 0.1, seed)?;
    let mut patterns = enumerate_patterns(
        &z,
        PatternMode::Sampled {
            count: 4 * max_patterns,
            seed: seed.wrapping_add(1),
        },
    )?;
    if patterns.len() > max_patterns {
        let keep: Vec<Vec<bool>> = patterns.patterns[..max_patterns].to_vec();
        patterns = PatternSet::from_masks(&z, &keep)?;
    }
    let probe = build_cgl(&z, &y, &patterns, 1.0, Arch::Gated)?;
    let lambda = lambda_frac * probe.lambda_max_unconstrained();
    let problem = build_cgl(&z, &y, &patterns, lambda, arch)?;
    Ok(NetworkInstance { z, y, patterns, problem })
}
