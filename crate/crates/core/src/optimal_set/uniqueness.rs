//! Uniqueness certificates and general-position checks.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{CglError, Result};
use crate::linalg::{lstsq, FullSvd};
use crate::problem::{BlockPartition, CglProblem, DualCertificate, Weights};
use crate::pruning::prune_step;

use super::describe::{describe_set, OptimalSetDescription};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Unique,
    NonUnique,
    Unknown,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessCertificate {
    pub verdict: Verdict,
    /// Smallest singular value of the generator matrix over the support.
    pub sigma_min: f64,
    pub rank_tol: f64,
    /// A second verified solution when the verdict is `NonUnique`.
    #[serde(skip)]
    pub witness: Option<Weights>,
    pub note: String,
}

/// Second member of a non-singleton set, as far from `w` as the construction allows.
fn second_solution(desc: &OptimalSetDescription, problem: &CglProblem, w: &Weights) -> Option<Weights> {
    if let Some(w2) = prune_step(problem, w) {
        return Some(w2);
    }
    // `w` is a vertex: walk from an interior point along a null direction to the far boundary.
    let null = FullSvd::new(&desc.generators).null_space();
    if null.ncols() == 0 {
        return None;
    }
    let mut a0 = desc.base_alpha.clone();
    for v in &desc.probe_vertices {
        a0 += v;
    }
    a0 /= (desc.probe_vertices.len() + 1) as f64;
    let dir = null.column(0).into_owned();
    let base = &desc.base_alpha;
    let mut best: Option<(f64, DVector<f64>)> = None;
    for s in [1.0, -1.0] {
        let d = &dir * s;
        let t = (0..d.len())
            .filter(|&i| d[i] < -1e-14)
            .map(|i| -a0[i] / d[i])
            .fold(f64::INFINITY, f64::min);
        if t.is_finite() {
            let a = (&a0 + &d * t).map(|v| v.max(0.0));
            let dist = (&a - base).norm();
            if best.as_ref().is_none_or(|(b, _)| dist > *b) {
                best = Some((dist, a));
            }
        }
    }
    best.map(|(_, a)| desc.weights_from_alpha(&a))
}

/// Decide uniqueness from the independence of the generators over the support.
pub fn is_unique(problem: &CglProblem, w: &Weights, rho: &DualCertificate) -> Result<UniquenessCertificate> {
    let desc = describe_set(problem, w, rho)?;
    let (sigma_min, rank_tol) = desc.generator_margin();
    if sigma_min > rank_tol {
        if desc.support_certified {
            return Ok(UniquenessCertificate {
                verdict: Verdict::Unique,
                sigma_min,
                rank_tol,
                witness: None,
                note: "generators over the support are linearly independent".into(),
            });
        }
        return Ok(UniquenessCertificate {
            verdict: Verdict::Unknown,
            sigma_min,
            rank_tol,
            witness: None,
            note: format!("independent on a subset of the support; unresolved blocks {:?}", desc.unresolved),
        });
    }
    let witness = second_solution(&desc, problem, w);
    let note = match &witness {
        Some(_) => "generators are dependent; witness built from a null direction".to_string(),
        None => "generators are dependent but no second solution could be built".to_string(),
    };
    Ok(UniquenessCertificate {
        verdict: if witness.is_some() { Verdict::NonUnique } else { Verdict::Unknown },
        sigma_min,
        rank_tol,
        witness,
        note,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GgpMode {
    /// Every subset and pivot, grid over the pivot's sphere plus local refinement.
    ExactSmall,
    /// Random subsets and starts only.
    Sampled { probes: usize, seed: u64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct GgpReport {
    pub violation_found: bool,
    /// Smallest affine-membership residual seen.
    pub best_residual: f64,
    pub threshold: f64,
    /// Grid points per pivot sphere (2 for width-1 blocks).
    pub grid_resolution: usize,
    pub method: String,
    /// Blocks and pivot of the violating configuration.
    pub violating_subset: Option<(Vec<usize>, usize)>,
}

/// Residual of `t` against the affine hull of the columns of `p`, and the affine weights.
fn affine_residual(t: &DVector<f64>, pts: &[DVector<f64>]) -> (DVector<f64>, DVector<f64>) {
    let m = pts.len();
    if m == 1 {
        return (t - &pts[0], DVector::from_element(1, 1.0));
    }
    let diffs = DMatrix::from_fn(t.len(), m - 1, |r, c| pts[c + 1][r] - pts[0][r]);
    let rhs = t - &pts[0];
    let c = lstsq(&diffs, &rhs);
    let r = &rhs - &diffs * &c;
    let mut a = DVector::zeros(m);
    a[0] = 1.0 - c.sum();
    for k in 1..m {
        a[k] = c[k - 1];
    }
    (r, a)
}

fn sphere_grid(width: usize) -> Vec<DVector<f64>> {
    match width {
        1 => vec![DVector::from_element(1, 1.0), DVector::from_element(1, -1.0)],
        2 => (0..64)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 64.0;
                DVector::from_vec(vec![t.cos(), t.sin()])
            })
            .collect(),
        _ => {
            // Fibonacci lattice on the 2-sphere.
            let m = 256;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..m)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / m as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * k as f64;
                    DVector::from_vec(vec![r * phi.cos(), r * phi.sin(), z])
                })
                .collect()
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng, width: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(width, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-8 {
            return v / n;
        }
    }
}

struct PivotProblem<'a> {
    designs: Vec<&'a DMatrix<f64>>,
    /// Index into `designs` of the pivot.
    pivot: usize,
}

impl PivotProblem<'_> {
    fn residual(&self, z: &[DVector<f64>]) -> (DVector<f64>, DVector<f64>) {
        let t = self.designs[self.pivot] * &z[self.pivot];
        let pts: Vec<DVector<f64>> = (0..z.len()).filter(|&i| i != self.pivot).map(|i| self.designs[i] * &z[i]).collect();
        affine_residual(&t, &pts)
    }

    fn value(&self, z: &[DVector<f64>]) -> f64 {
        self.residual(z).0.norm_squared()
    }

    /// Riemannian gradient descent on the product of spheres; width-1 blocks stay fixed.
    fn refine(&self, mut z: Vec<DVector<f64>>, iters: usize) -> (f64, Vec<DVector<f64>>) {
        let mut f = self.value(&z);
        // Inverse curvature bound of the squared residual.
        let cap = 0.5 / self.designs.iter().map(|d| d.norm_squared()).sum::<f64>().max(1e-300);
        let mut step = cap;
        for _ in 0..iters {
            if f < 1e-30 {
                break;
            }
            let (r, a) = self.residual(&z);
            let mut grads = Vec::with_capacity(z.len());
            let mut k = 0;
            for i in 0..z.len() {
                let g = if i == self.pivot {
                    self.designs[i].transpose() * &r * 2.0
                } else {
                    let gi = self.designs[i].transpose() * &r * (-2.0 * a[k]);
                    k += 1;
                    gi
                };
                let g = if z[i].len() == 1 { g * 0.0 } else { &g - &z[i] * z[i].dot(&g) };
                grads.push(g);
            }
            let gn2: f64 = grads.iter().map(|g| g.norm_squared()).sum();
            if gn2 < 1e-30 {
                break;
            }
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<DVector<f64>> = z
                    .iter()
                    .zip(&grads)
                    .map(|(zi, gi)| {
                        let v = zi - gi * step;
                        let n = v.norm();
                        v / n
                    })
                    .collect();
                let ft = self.value(&trial);
                if ft <= f - 1e-4 * step * gn2 {
                    z = trial;
                    f = ft;
                    step = (step * 2.0).min(cap);
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (f, z)
    }
}

fn subsets_up_to(nb: usize, max_size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 1u32..(1u32 << nb) {
        let c = mask.count_ones() as usize;
        if c >= 2 && c <= max_size {
            out.push((0..nb).filter(|&i| mask & (1 << i) != 0).collect());
        }
    }
    out
}

/// Search for a violation of group general position.
///
/// A violation is a subset `E` (at most `n + 1` blocks), a pivot `j` and unit
/// vectors `z` with `X_j z_j` in the affine hull of `{X_i z_i : i in E, i != j}`.
/// The search is a grid over the pivot's sphere, every sign choice of width-1
/// blocks, seeded starts for wider blocks, and local refinement. Finding nothing
/// is reported as "no violation found", never as a proof.
pub fn ggp_check(x: &DMatrix<f64>, partition: &BlockPartition, mode: GgpMode) -> Result<GgpReport> {
    let n = x.nrows();
    let nb = partition.len();
    if partition.dim() != x.ncols() {
        return Err(CglError::Shape("partition does not cover the columns of X".into()));
    }
    let designs: Vec<DMatrix<f64>> = (0..nb).map(|b| x.select_columns(partition.block(b))).collect();
    let scale = 1.0 + designs.iter().map(|d| d.norm()).fold(0.0, f64::max);
    let threshold = 1e-9 * scale;
    let max_width = (0..nb).map(|b| partition.width(b)).max().unwrap_or(0);
    let mut report = GgpReport {
        violation_found: false,
        best_residual: f64::INFINITY,
        threshold,
        grid_resolution: sphere_grid(max_width.clamp(1, 3)).len(),
        method: String::new(),
        violating_subset: None,
    };
    let (subsets, starts, seed, keep_best) = match mode {
        GgpMode::ExactSmall => {
            if nb > 8 || max_width > 3 {
                return Err(CglError::Capability(format!(
                    "exact GGP search is limited to 8 blocks of width <= 3 (got {nb} blocks, max width {max_width})"
                )));
            }
            report.method = format!(
                "exhaustive subsets and pivots, {}-point grid on the widest pivot sphere, 3 seeded starts per point, refinement of the 4 best",
                report.grid_resolution
            );
            (subsets_up_to(nb, n + 1), 3usize, 0u64, 4usize)
        }
        GgpMode::Sampled { probes, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut subs = Vec::new();
            for _ in 0..probes {
                let size = rng.random_range(2..=(n + 1).min(nb).max(2));
                let mut idx: Vec<usize> = (0..nb).collect();
                for i in 0..idx.len() {
                    let j = rng.random_range(i..idx.len());
                    idx.swap(i, j);
                }
                let mut s: Vec<usize> = idx.into_iter().take(size.min(nb)).collect();
                s.sort_unstable();
                subs.push(s);
            }
            report.method = format!("{probes} random subsets, random starts, local refinement; verdict is 'no violation found' at best");
            (subs, 1usize, seed, 1usize)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    for e in &subsets {
        if e.len() < 2 {
            continue;
        }
        let dsub: Vec<&DMatrix<f64>> = e.iter().map(|&b| &designs[b]).collect();
        // Width-1 blocks other than the pivot: enumerate signs (one global flip is redundant only with the pivot).
        for (pj, &pivot_block) in e.iter().enumerate() {
            let prob = PivotProblem {
                designs: dsub.clone(),
                pivot: pj,
            };
            let singles: Vec<usize> = (0..e.len()).filter(|&i| i != pj && dsub[i].ncols() == 1).collect();
            if singles.len() > 16 {
                return Err(CglError::Capability("too many width-1 blocks for sign enumeration".into()));
            }
            let mut cands: Vec<(f64, Vec<DVector<f64>>)> = Vec::new();
            for pz in sphere_grid(dsub[pj].ncols()) {
                for signs in 0u32..(1u32 << singles.len()) {
                    for _ in 0..starts {
                        let z: Vec<DVector<f64>> = (0..e.len())
                            .map(|i| {
                                if i == pj {
                                    pz.clone()
                                } else if let Some(k) = singles.iter().position(|&s| s == i) {
                                    DVector::from_element(1, if signs & (1 << k) != 0 { -1.0 } else { 1.0 })
                                } else {
                                    random_unit(&mut rng, dsub[i].ncols())
                                }
                            })
                            .collect();
                        cands.push((prob.value(&z), z));
                    }
                    if matches!(mode, GgpMode::Sampled { .. }) {
                        break;
                    }
                }
            }
            cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
            // Every discrete candidate at zero residual is exact; refine the best few otherwise.
            for (_, z) in cands.into_iter().take(keep_best.max(1)) {
                let (f, _) = prob.refine(z, 400);
                let r = f.sqrt();
                if r < report.best_residual {
                    report.best_residual = r;
                }
                if r <= threshold {
                    report.violation_found = true;
                    report.violating_subset = Some((e.clone(), pivot_block));
                    return Ok(report);
                }
            }
        }
    }
    Ok(report)
}

/// Exhaustive general-position test for the columns of `a` (signed affine hulls).
pub fn lasso_general_position(a: &DMatrix<f64>) -> Result<bool> {
    let (n, k) = a.shape();
    let max_size = (n + 1).min(k);
    let mut budget: f64 = 0.0;
    for m in 2..=max_size {
        budget += binomial(k, m) * 2f64.powi(m as i32 - 1) * m as f64;
    }
    if budget > 1e6 {
        return Err(CglError::Capability(format!(
            "general-position check needs {budget:.0} affine tests (budget 1e6)"
        )));
    }
    let cols: Vec<DVector<f64>> = (0..k).map(|j| a.column(j).into_owned()).collect();
    let scale = 1.0 + cols.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let tol = 1e-9 * scale;
    for m in 2..=max_size {
        let mut idx: Vec<usize> = (0..m).collect();
        loop {
            for signs in 0u32..(1u32 << (m - 1)) {
                let pts: Vec<DVector<f64>> = idx
                    .iter()
                    .enumerate()
                    .map(|(p, &j)| if p > 0 && signs & (1 << (p - 1)) != 0 { -&cols[j] } else { cols[j].clone() })
                    .collect();
                for pivot in 0..m {
                    let others: Vec<DVector<f64>> = (0..m).filter(|&i| i != pivot).map(|i| pts[i].clone()).collect();
                    let (r, _) = affine_residual(&pts[pivot], &others);
                    if r.norm() <= tol {
                        return Ok(false);
                    }
                }
            }
            if !next_combination(&mut idx, k) {
                break;
            }
        }
    }
    Ok(true)
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let m = idx.len();
    for i in (0..m).rev() {
        if idx[i] < n - m + i {
            idx[i] += 1;
            for j in i + 1..m {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
