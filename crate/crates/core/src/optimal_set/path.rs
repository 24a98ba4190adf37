//! Regularization paths with fit-discontinuity diagnostics, and the one-neuron closed form.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{CglError, Result};
use crate::json;
use crate::problem::{objective, CglProblem, Weights};
use crate::reformulation::{build_cgl, Arch, PatternSet};
use crate::solver::{solve_with_init, SolverOptions};

#[derive(Debug, Clone, Serialize)]
pub struct PathRow {
    pub lambda: f64,
    pub objective: f64,
    pub fit_norm: f64,
    /// Sum of block norms.
    pub penalty: f64,
    pub support_size: usize,
    /// The fit is discontinuous between the previous grid point and this one.
    pub jump_flag: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathReport {
    pub rows: Vec<PathRow>,
    #[serde(with = "json::vectors")]
    pub fits: Vec<DVector<f64>>,
    /// Largest screening threshold applied to `||fit_k - fit_{k-1}|| / |lambda_k - lambda_{k-1}|`.
    pub jump_threshold: f64,
    /// Confirmed jump locations, refined by bisection.
    pub jumps: Vec<f64>,
}

impl PathReport {
    pub fn jump_count(&self) -> usize {
        self.rows.iter().filter(|r| r.jump_flag).count()
    }

    pub fn jump_locations(&self) -> Vec<f64> {
        self.jumps.clone()
    }

    pub fn to_json(&self) -> Result<String> {
        json::to_json("path", self)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| CglError::Io(std::io::Error::other(e));
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(["lambda", "objective", "fit_norm", "support_size", "jump_flag"]).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                format!("{:.12e}", r.lambda),
                format!("{:.12e}", r.objective),
                format!("{:.12e}", r.fit_norm),
                r.support_size.to_string(),
                (r.jump_flag as u8).to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(CglError::Argument("lambda grid is empty".into()));
    }
    if grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(CglError::Argument("lambda grid values must be finite and nonnegative".into()));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CglError::Argument("lambda grid must be strictly decreasing".into()));
    }
    Ok(())
}

/// Half-width of the window of neighboring intervals used for the local median rate.
pub const JUMP_WINDOW: usize = 2;
/// Screening factor over the local median rate.
pub const JUMP_SCREEN: f64 = 2.0;
/// Bisection steps used to confirm a candidate jump.
pub const JUMP_BISECTIONS: usize = 24;

/// Candidate jump intervals. The rate of interval `k` is `||fit_{k+1} - fit_k|| / dlambda`;
/// it is a candidate when it exceeds `JUMP_SCREEN` times the median rate of up to
/// `JUMP_WINDOW` intervals on each side and the difference exceeds `floor`. Returns the
/// largest applied threshold and the candidate interval indices.
pub fn screen_jumps(grid: &[f64], fits: &[DVector<f64>], floor: f64) -> (f64, Vec<usize>) {
    if fits.len() < 2 {
        return (f64::INFINITY, Vec::new());
    }
    let diffs: Vec<f64> = (1..fits.len()).map(|k| (&fits[k] - &fits[k - 1]).norm()).collect();
    let rates: Vec<f64> = (1..fits.len()).map(|k| diffs[k - 1] / (grid[k - 1] - grid[k])).collect();
    let mut max_thr: f64 = 0.0;
    let mut out = Vec::new();
    for k in 0..rates.len() {
        if diffs[k] <= floor {
            continue;
        }
        let lo = k.saturating_sub(JUMP_WINDOW);
        let hi = (k + JUMP_WINDOW).min(rates.len() - 1);
        let mut nb: Vec<f64> = (lo..=hi).filter(|&j| j != k).map(|j| rates[j]).collect();
        if nb.is_empty() {
            out.push(k);
            continue;
        }
        nb.sort_by(f64::total_cmp);
        let m = nb.len();
        let median = if m % 2 == 1 { nb[m / 2] } else { 0.5 * (nb[m / 2 - 1] + nb[m / 2]) };
        let thr = JUMP_SCREEN * median;
        max_thr = max_thr.max(thr);
        if rates[k] > thr {
            out.push(k);
        }
    }
    (max_thr, out)
}

/// Bisect `[b, a]` (with `a > b`) keeping the half with the larger fit change. A continuous
/// path shrinks the change with the interval; a jump keeps it. Returns the location when the
/// change after `JUMP_BISECTIONS` steps still exceeds `max(floor, 1e-2 * initial change)`.
pub fn confirm_jump<F>(
    a: (f64, DVector<f64>),
    b: (f64, DVector<f64>),
    floor: f64,
    mut fit_at: F,
) -> Result<Option<f64>>
where
    F: FnMut(f64) -> Result<DVector<f64>>,
{
    let (mut a, mut b) = (a, b);
    let d0 = (&a.1 - &b.1).norm();
    for _ in 0..JUMP_BISECTIONS {
        let m = 0.5 * (a.0 + b.0);
        let fm = fit_at(m)?;
        if (&fm - &a.1).norm() >= (&b.1 - &fm).norm() {
            b = (m, fm);
        } else {
            a = (m, fm);
        }
    }
    let d = (&a.1 - &b.1).norm();
    Ok((d > floor.max(1e-2 * d0)).then_some(0.5 * (a.0 + b.0)))
}

/// Screen, then confirm each candidate by bisection; sets flags and refined locations.
fn flag_jumps<F>(grid: &[f64], fits: &[DVector<f64>], floor: f64, mut fit_at: F) -> Result<(f64, Vec<bool>, Vec<f64>)>
where
    F: FnMut(usize, f64) -> Result<DVector<f64>>,
{
    let (thr, cands) = screen_jumps(grid, fits, floor);
    let mut flags = vec![false; fits.len()];
    let mut locs = Vec::new();
    for k in cands {
        let a = (grid[k], fits[k].clone());
        let b = (grid[k + 1], fits[k + 1].clone());
        if let Some(l) = confirm_jump(a, b, floor, |lam| fit_at(k, lam))? {
            flags[k + 1] = true;
            locs.push(l);
        }
    }
    Ok((thr, flags, locs))
}

/// Path of a CGL problem over a decreasing grid, warm-starting each solve from the previous one.
pub fn trace_cgl_path(problem: &CglProblem, grid: &[f64], options: &SolverOptions) -> Result<PathReport> {
    check_grid(grid)?;
    let part = problem.partition().clone();
    let mut warm = Weights::zeros(problem.d());
    let mut rows = Vec::with_capacity(grid.len());
    let mut fits = Vec::with_capacity(grid.len());
    let mut sols = Vec::with_capacity(grid.len());
    for &lam in grid {
        let p = problem.with_lambda(lam)?;
        let (w, error) = match solve_with_init(&p, options, &warm) {
            Ok(s) => (s.weights, None),
            Err(CglError::NotConverged { best, violation, .. }) => {
                (best.weights, Some(format!("not converged (kkt violation {violation:.3e})")))
            }
            Err(e) => (warm.clone(), Some(e.to_string())),
        };
        let fit = p.fit(&w);
        rows.push(PathRow {
            lambda: lam,
            objective: objective(&p, &w)?,
            fit_norm: fit.norm(),
            penalty: w.group_norm(&part),
            support_size: w.active_set(&part).len(),
            jump_flag: false,
            error,
        });
        fits.push(fit);
        sols.push(w.clone());
        warm = w;
    }
    let floor = 1e-6 * (1.0 + problem.y().norm());
    let (jump_threshold, flags, jumps) = flag_jumps(grid, &fits, floor, |k, lam| {
        let p = problem.with_lambda(lam)?;
        let w = match solve_with_init(&p, options, &sols[k]) {
            Ok(s) => s.weights,
            Err(CglError::NotConverged { best, .. }) => best.weights,
            Err(e) => return Err(e),
        };
        Ok(p.fit(&w))
    })?;
    for (r, f) in rows.iter_mut().zip(flags) {
        r.jump_flag = f;
    }
    Ok(PathReport {
        rows,
        fits,
        jump_threshold,
        jumps,
    })
}

/// Path of the convex reformulation of a (gated) ReLU network.
pub fn trace_path(
    z: &DMatrix<f64>,
    y: &DVector<f64>,
    patterns: &PatternSet,
    arch: Arch,
    grid: &[f64],
    options: &SolverOptions,
) -> Result<PathReport> {
    check_grid(grid)?;
    let problem = build_cgl(z, y, patterns, grid[0], arch)?;
    trace_cgl_path(&problem, grid, options)
}

/// Global minimizer of `1/2 sum_k ((x_k v)_+ g - y_k)^2 + lambda |v|` over `v` and `g in {-1, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneNeuronPoint {
    pub v: f64,
    pub gamma: f64,
    pub objective: f64,
}

fn one_neuron_objective(x: &[f64], y: &[f64], v: f64, gamma: f64, lambda: f64) -> f64 {
    let loss: f64 = x.iter().zip(y).map(|(&xk, &yk)| ((xk * v).max(0.0) * gamma - yk).powi(2)).sum();
    0.5 * loss + lambda * v.abs()
}

/// Closed-form solution of the single-neuron problem on scalar data.
///
/// For each sign of `v` the active samples are fixed, so the problem is a
/// one-dimensional nonnegative lasso in `|v|` with the output sign chosen to
/// match the correlation.
pub fn one_neuron_solution(x: &[f64], y: &[f64], lambda: f64) -> Result<OneNeuronPoint> {
    if x.len() != y.len() {
        return Err(CglError::Shape("x and y must have the same length".into()));
    }
    if !(lambda >= 0.0) {
        return Err(CglError::Argument("lambda must be nonnegative".into()));
    }
    let mut best = OneNeuronPoint {
        v: 0.0,
        gamma: 1.0,
        objective: one_neuron_objective(x, y, 0.0, 1.0, lambda),
    };
    for side in [1.0f64, -1.0] {
        let (mut cc, mut cy) = (0.0, 0.0);
        for (&xk, &yk) in x.iter().zip(y) {
            let c = side * xk;
            if c > 0.0 {
                cc += c * c;
                cy += c * yk;
            }
        }
        if cc == 0.0 {
            continue;
        }
        let gamma = if cy >= 0.0 { 1.0 } else { -1.0 };
        let a = ((cy.abs() - lambda) / cc).max(0.0);
        let v = side * a;
        let f = one_neuron_objective(x, y, v, gamma, lambda);
        if f < best.objective {
            best = OneNeuronPoint { v, gamma, objective: f };
        }
    }
    Ok(best)
}

fn one_neuron_fit(x: &[f64], p: &OneNeuronPoint) -> DVector<f64> {
    DVector::from_iterator(x.len(), x.iter().map(|&xk| (xk * p.v).max(0.0) * p.gamma))
}

/// Path of the single-neuron problem over a decreasing grid.
pub fn trace_one_neuron(x: &[f64], y: &[f64], grid: &[f64]) -> Result<PathReport> {
    check_grid(grid)?;
    let mut rows = Vec::with_capacity(grid.len());
    let mut fits = Vec::with_capacity(grid.len());
    for &lam in grid {
        let p = one_neuron_solution(x, y, lam)?;
        let fit = one_neuron_fit(x, &p);
        rows.push(PathRow {
            lambda: lam,
            objective: p.objective,
            fit_norm: fit.norm(),
            penalty: p.v.abs(),
            support_size: usize::from(p.v != 0.0),
            jump_flag: false,
            error: None,
        });
        fits.push(fit);
    }
    let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (jump_threshold, flags, jumps) = flag_jumps(grid, &fits, 1e-6 * (1.0 + ynorm), |_, lam| {
        Ok(one_neuron_fit(x, &one_neuron_solution(x, y, lam)?))
    })?;
    for (r, f) in rows.iter_mut().zip(flags) {
        r.jump_flag = f;
    }
    Ok(PathReport {
        rows,
        fits,
        jump_threshold,
        jumps,
    })
}

/// Values of lambda in `(lo, hi)` where the optimal sign of `v` switches, located by bisection.
pub fn one_neuron_breakpoints(x: &[f64], y: &[f64], lo: f64, hi: f64, scan: usize) -> Result<Vec<f64>> {
    let side = |lam: f64| -> Result<i8> {
        let p = one_neuron_solution(x, y, lam)?;
        Ok(if p.v > 0.0 {
            1
        } else if p.v < 0.0 {
            -1
        } else {
            0
        })
    };
    let scan = scan.max(2);
    let mut out = Vec::new();
    let mut prev_l = lo;
    let mut prev_s = side(lo)?;
    for k in 1..=scan {
        let l = lo + (hi - lo) * k as f64 / scan as f64;
        let s = side(l)?;
        // A switch between two nonzero branches is a jump; reaching zero is continuous.
        if s != prev_s && s != 0 && prev_s != 0 {
            let (mut a, mut b) = (prev_l, l);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if side(m)? == prev_s {
                    a = m;
                } else {
                    b = m;
                }
                if b - a <= 1e-15 * b.abs().max(1.0) {
                    break;
                }
            }
            out.push(0.5 * (a + b));
        }
        prev_l = l;
        prev_s = s;
    }
    Ok(out)
}
