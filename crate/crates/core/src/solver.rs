//! Primal-dual solver for the constrained group lasso.
//!
//! Stage one is accelerated proximal gradient (FISTA with function-value
//! restart). Cone constraints are handled either by an augmented Lagrangian
//! outer loop (default) or by projecting inside the prox. Every few hundred
//! iterations the current iterate is polished by Newton's method on the
//! active set, a dual certificate is recovered, and the KKT report decides
//! whether to stop.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{CglError, Result};
use crate::linalg::{lstsq, spectral_norm_sq};
use crate::nnls::nnls;
use crate::optimal_set::dual::{dual_estimate, tight_rows, DualChoice};
use crate::problem::{kkt_report, objective, CglProblem, DualCertificate, KktReport, Weights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    Fixed,
    Backtracking,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintMethod {
    /// Multipliers updated in an outer loop, inner problems penalize `(K^T w + rho/mu)_+`.
    AugmentedLagrangian,
    /// Exact prox of norm plus cone indicator: shrink the Euclidean projection onto the cone.
    ConeProjection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Budget of proximal-gradient iterations (inner iterations summed over outer loops).
    pub max_iters: usize,
    pub kkt_tol: f64,
    pub step_rule: StepRule,
    /// Initial augmented Lagrangian penalty, relative to `||X||^2 / max_b ||K_b||^2`.
    pub al_penalty_init: f64,
    pub al_penalty_growth: f64,
    pub seed: u64,
    /// Start from a seeded Gaussian point instead of zero.
    pub random_init: bool,
    pub constraint_method: ConstraintMethod,
    /// Newton refinement on the active set before certification.
    pub polish: bool,
    /// Iterations between certification attempts.
    pub check_every: usize,
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 50_000,
            kkt_tol: 1e-6,
            step_rule: StepRule::Backtracking,
            al_penalty_init: 1.0,
            al_penalty_growth: 10.0,
            seed: 0,
            random_init: false,
            constraint_method: ConstraintMethod::AugmentedLagrangian,
            polish: true,
            check_every: 100,
            record_trace: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(CglError::Argument("max_iters must be positive".into()));
        }
        if !(self.kkt_tol > 0.0) {
            return Err(CglError::Argument("kkt_tol must be positive".into()));
        }
        if !(self.al_penalty_growth > 1.0) {
            return Err(CglError::Argument("al_penalty_growth must exceed 1".into()));
        }
        if !(self.al_penalty_init > 0.0) {
            return Err(CglError::Argument("al_penalty_init must be positive".into()));
        }
        if self.check_every == 0 {
            return Err(CglError::Argument("check_every must be positive".into()));
        }
        Ok(())
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.kkt_tol = tol;
        self
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub kkt_violation: f64,
}

/// Certified (or best-effort) primal-dual pair.
#[derive(Debug, Clone)]
pub struct Solution {
    pub weights: Weights,
    pub dual: DualCertificate,
    pub report: KktReport,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

pub fn write_trace_csv(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| CglError::Io(std::io::Error::other(e)))?;
    for row in trace {
        wtr.serialize(row).map_err(|e| CglError::Io(std::io::Error::other(e)))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Block soft-threshold `(||v|| - t)_+ v / ||v||`.
pub fn prox_block(v: &DVector<f64>, threshold: f64) -> DVector<f64> {
    let n = v.norm();
    if n <= threshold || n == 0.0 {
        DVector::zeros(v.len())
    } else {
        v * ((n - threshold) / n)
    }
}

/// Euclidean projection onto `{x : K^T x <= 0}` via `x = v - K rho*` with `rho*` the NNLS fit of `v`.
pub fn project_cone(k: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    if k.ncols() == 0 {
        return v.clone();
    }
    // Fast path: already feasible.
    if (k.transpose() * v).iter().all(|&s| s <= 0.0) {
        return v.clone();
    }
    let r = nnls(k, v);
    v - k * r.x
}

/// Smooth part plus prox for one stage-one configuration.
struct Model<'a> {
    problem: &'a CglProblem,
    // Augmented Lagrangian state; `None` means cone projection (or no constraints).
    al: Option<(Vec<DVector<f64>>, f64)>,
    project: bool,
}

impl<'a> Model<'a> {
    fn smooth(&self, w: &DVector<f64>) -> (f64, DVector<f64>) {
        let p = self.problem;
        let r = p.x() * w - p.y();
        let mut val = 0.5 * r.norm_squared();
        let mut grad = p.x().transpose() * r;
        if let Some((rho, mu)) = &self.al {
            let part = p.partition();
            for i in 0..part.len() {
                if let Some(k) = p.constraint(i) {
                    if k.ncols() == 0 {
                        continue;
                    }
                    let wb = DVector::from_iterator(part.width(i), part.block(i).iter().map(|&j| w[j]));
                    let s = (k.transpose() * &wb + &rho[i] / *mu).map(|v| v.max(0.0));
                    val += 0.5 * mu * s.norm_squared();
                    let g = k * &s * *mu;
                    for (t, &j) in part.block(i).iter().enumerate() {
                        grad[j] += g[t];
                    }
                }
            }
        }
        (val, grad)
    }

    fn nonsmooth(&self, w: &DVector<f64>) -> f64 {
        let part = self.problem.partition();
        let mut s = 0.0;
        for b in part.blocks() {
            s += b.iter().map(|&j| w[j] * w[j]).sum::<f64>().sqrt();
        }
        self.problem.lambda() * s
    }

    fn prox(&self, v: &DVector<f64>, step: f64) -> DVector<f64> {
        let p = self.problem;
        let part = p.partition();
        let mut out = DVector::zeros(v.len());
        let thr = p.lambda() * step;
        for i in 0..part.len() {
            let mut vb = DVector::from_iterator(part.width(i), part.block(i).iter().map(|&j| v[j]));
            if self.project {
                if let Some(k) = p.constraint(i) {
                    vb = project_cone(k, &vb);
                }
            }
            let z = prox_block(&vb, thr);
            for (t, &j) in part.block(i).iter().enumerate() {
                out[j] = z[t];
            }
        }
        out
    }
}

/// FISTA state with monotone restart.
struct Fista {
    x: DVector<f64>,
    y: DVector<f64>,
    t: f64,
    fx: f64,
    l: f64,
}

impl Fista {
    fn new(model: &Model, x: DVector<f64>, l: f64) -> Self {
        let fx = model.smooth(&x).0 + model.nonsmooth(&x);
        Fista { y: x.clone(), x, t: 1.0, fx, l }
    }

    fn prox_step(&mut self, model: &Model, from: &DVector<f64>, backtracking: bool) -> DVector<f64> {
        let (f0, g) = model.smooth(from);
        loop {
            let cand = model.prox(&(from - &g / self.l), 1.0 / self.l);
            if !backtracking {
                return cand;
            }
            let d = &cand - from;
            let f1 = model.smooth(&cand).0;
            let bound = f0 + g.dot(&d) + 0.5 * self.l * d.norm_squared();
            if f1 <= bound + 1e-12 * (1.0 + f0.abs()) || self.l > 1e300 {
                return cand;
            }
            self.l *= 2.0;
        }
    }

    /// One accepted step; returns the gradient-mapping norm at the point stepped from.
    fn step(&mut self, model: &Model, backtracking: bool) -> f64 {
        let y = self.y.clone();
        let mut cand = self.prox_step(model, &y, backtracking);
        let mut fc = model.smooth(&cand).0 + model.nonsmooth(&cand);
        let mut from = y;
        if fc > self.fx + 1e-12 * (1.0 + self.fx.abs()) {
            // Restart momentum and take a plain proximal-gradient step.
            self.t = 1.0;
            let x = self.x.clone();
            cand = self.prox_step(model, &x, backtracking);
            fc = model.smooth(&cand).0 + model.nonsmooth(&cand);
            from = x;
            if fc > self.fx {
                // Rounding-level increase; keep the iterate.
                self.y = self.x.clone();
                return self.l * (&cand - &from).norm();
            }
        }
        let mapping = self.l * (&cand - &from).norm();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * self.t * self.t).sqrt());
        self.y = &cand + (&cand - &self.x) * ((self.t - 1.0) / t_next);
        self.x = cand;
        self.fx = fc;
        self.t = t_next;
        mapping
    }
}

/// Newton refinement on a fixed active set with the tight constraints held as equalities.
fn newton_polish(problem: &CglProblem, w0: &Weights, active: &[usize], tau: f64) -> Option<Weights> {
    if active.is_empty() {
        return Some(Weights::zeros(problem.d()));
    }
    let part = problem.partition();
    let lambda = problem.lambda();
    // Coordinates of active blocks, and tight constraint columns per active block.
    let mut cols: Vec<usize> = Vec::new();
    let mut offsets = Vec::new();
    let mut tight: Vec<Vec<usize>> = Vec::new();
    for &b in active {
        offsets.push(cols.len());
        cols.extend_from_slice(part.block(b));
        let wb = w0.block(part, b);
        tight.push(match problem.constraint(b) {
            Some(k) if k.ncols() > 0 => tight_rows(k, &wb, tau),
            _ => vec![],
        });
    }
    let na = cols.len();
    let nt: usize = tight.iter().map(|t| t.len()).sum();
    let xa = problem.x().select_columns(&cols);
    let hess_ls = xa.transpose() * &xa;
    let xty = xa.transpose() * problem.y();
    let mut z = DVector::from_iterator(na, cols.iter().map(|&j| w0.w[j]));
    let mut mult = DVector::<f64>::zeros(nt);

    let residual = |z: &DVector<f64>, mult: &DVector<f64>| -> Option<DVector<f64>> {
        let mut f = DVector::zeros(na + nt);
        let g = &hess_ls * z - &xty;
        f.rows_mut(0, na).copy_from(&g);
        let mut row = na;
        let mut mi = 0;
        for (a, &b) in active.iter().enumerate() {
            let off = offsets[a];
            let wd = part.width(b);
            let zb = z.rows(off, wd).into_owned();
            let zn = zb.norm();
            if zn == 0.0 {
                return None;
            }
            let mut blk = f.rows(off, wd).into_owned() + &zb * (lambda / zn);
            if let Some(k) = problem.constraint(b) {
                for &j in &tight[a] {
                    blk += k.column(j) * mult[mi];
                    f[row] = k.column(j).dot(&zb);
                    row += 1;
                    mi += 1;
                }
            }
            f.rows_mut(off, wd).copy_from(&blk);
        }
        Some(f)
    };

    let mut f = residual(&z, &mult)?;
    let scale = 1.0 + xty.norm() + lambda;
    for _ in 0..40 {
        let fn0 = f.norm();
        if fn0 <= 1e-15 * scale {
            break;
        }
        let mut jac = DMatrix::zeros(na + nt, na + nt);
        jac.view_mut((0, 0), (na, na)).copy_from(&hess_ls);
        let mut row = na;
        for (a, &b) in active.iter().enumerate() {
            let off = offsets[a];
            let wd = part.width(b);
            let zb = z.rows(off, wd).into_owned();
            let zn = zb.norm();
            let u = &zb / zn;
            let m = (DMatrix::identity(wd, wd) - &u * u.transpose()) * (lambda / zn);
            let mut view = jac.view_mut((off, off), (wd, wd));
            view += m;
            if let Some(k) = problem.constraint(b) {
                for &j in &tight[a] {
                    for t in 0..wd {
                        jac[(off + t, row)] = k[(t, j)];
                        jac[(row, off + t)] = k[(t, j)];
                    }
                    row += 1;
                }
            }
        }
        let step = lstsq(&jac, &(-&f));
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let zc = &z + step.rows(0, na) * alpha;
            let mc = &mult + step.rows(na, nt) * alpha;
            if let Some(fc) = residual(&zc, &mc) {
                if fc.norm() < fn0 * (1.0 - 1e-4 * alpha) || fc.norm() <= 1e-15 * scale {
                    z = zc;
                    mult = mc;
                    f = fc;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let mut w = Weights::zeros(problem.d());
    for (t, &j) in cols.iter().enumerate() {
        w.w[j] = z[t];
    }
    // Keep feasibility exact on the tight rows: clip tiny positive values by projection.
    for (a, &b) in active.iter().enumerate() {
        if let Some(k) = problem.constraint(b) {
            if k.ncols() > 0 && !tight[a].is_empty() {
                let wb = w.block(part, b);
                let proj = project_cone(k, &wb);
                w.set_block(part, b, &proj);
            }
        }
    }
    Some(w)
}

/// Euclidean projection of every constrained block onto its cone.
fn project_blocks(problem: &CglProblem, x: &DVector<f64>) -> Weights {
    let part = problem.partition();
    let mut w = Weights::new(x.clone());
    for i in 0..part.len() {
        if let Some(k) = problem.constraint(i) {
            let proj = project_cone(k, &w.block(part, i));
            w.set_block(part, i, &proj);
        }
    }
    w
}

fn random_start(problem: &CglProblem, seed: u64) -> Weights {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = problem.y().norm() / (1.0 + problem.x().norm());
    let w = DVector::from_fn(problem.d(), |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z * scale
    });
    Weights::new(w)
}

struct Certifier<'a> {
    problem: &'a CglProblem,
    tol: f64,
    polish: bool,
    tried: HashSet<Vec<u64>>,
    best: Option<Solution>,
}

impl<'a> Certifier<'a> {
    fn evaluate(&mut self, w: Weights, iterations: usize) -> Result<Option<Solution>> {
        let rho = dual_estimate(self.problem, &w, DualChoice::Nnls);
        let report = kkt_report(self.problem, &w, &rho, self.tol)?;
        let obj = objective(self.problem, &w)?;
        let sol = Solution {
            weights: w,
            dual: rho,
            objective: obj,
            converged: report.satisfied,
            iterations,
            report,
            trace: vec![],
        };
        let better = match &self.best {
            None => true,
            Some(b) => sol.report.max_violation() < b.report.max_violation(),
        };
        if sol.converged {
            return Ok(Some(sol));
        }
        if better {
            self.best = Some(sol);
        }
        Ok(None)
    }

    /// Check the raw iterate, then Newton-polished variants on candidate active sets.
    fn check(&mut self, w: &Weights, iterations: usize) -> Result<Option<Solution>> {
        let raw = self.evaluate(w.clone(), iterations)?;
        if !self.polish {
            return Ok(raw);
        }
        let part = self.problem.partition();
        if let Some(r) = raw {
            // Certified already; a polished point on the same active set is usually far more accurate.
            let act = r.weights.active_set(part);
            if let Some(pw) = newton_polish(self.problem, &r.weights, &act, 1e-8) {
                if pw.w.iter().all(|v| v.is_finite()) {
                    if let Some(sol) = self.evaluate(pw, iterations)? {
                        if sol.report.max_violation() < r.report.max_violation() {
                            return Ok(Some(sol));
                        }
                    }
                }
            }
            return Ok(Some(r));
        }
        let norms = w.block_norms(part);
        let max_norm = norms.iter().cloned().fold(0.0, f64::max);
        let base = w.active_set(part);
        let trimmed: Vec<usize> = base.iter().copied().filter(|&i| norms[i] > 1e-4 * max_norm).collect();
        let mut cands = vec![(base.clone(), 1e-8), (base, 1e-5)];
        if trimmed.len() < cands[0].0.len() {
            cands.push((trimmed.clone(), 1e-8));
            cands.push((trimmed, 1e-5));
        }
        for (act, tau) in cands {
            let key = self.signature(w, &act, tau);
            if !self.tried.insert(key) {
                continue;
            }
            if let Some(pw) = newton_polish(self.problem, w, &act, tau) {
                if pw.w.iter().all(|v| v.is_finite()) {
                    if let Some(sol) = self.evaluate(pw, iterations)? {
                        return Ok(Some(sol));
                    }
                }
            }
        }
        Ok(None)
    }

    // Active blocks plus tight rows identify a polish attempt; each is tried once.
    fn signature(&self, w: &Weights, act: &[usize], tau: f64) -> Vec<u64> {
        let part = self.problem.partition();
        let mut key = vec![tau.to_bits()];
        for &b in act {
            key.push(b as u64);
            if let Some(k) = self.problem.constraint(b) {
                let rows = tight_rows(k, &w.block(part, b), tau);
                key.push(u64::MAX);
                key.extend(rows.iter().map(|&r| r as u64));
            }
        }
        key
    }
}

fn trace_row(model_obj: f64, iter: usize, sol: Option<&Solution>) -> TraceRow {
    TraceRow {
        iter,
        objective: model_obj,
        kkt_violation: sol.map(|s| s.report.max_violation()).unwrap_or(f64::NAN),
    }
}

/// Solve from the initialization selected by `options` (zero or seeded random).
pub fn solve(problem: &CglProblem, options: &SolverOptions) -> Result<Solution> {
    let init = if options.random_init {
        random_start(problem, options.seed)
    } else {
        Weights::zeros(problem.d())
    };
    solve_with_init(problem, options, &init)
}

/// Solve starting from `init` (warm start).
pub fn solve_with_init(problem: &CglProblem, options: &SolverOptions, init: &Weights) -> Result<Solution> {
    options.validate()?;
    if init.w.len() != problem.d() {
        return Err(CglError::Shape("initial weights have the wrong length".into()));
    }
    let backtracking = options.step_rule == StepRule::Backtracking;
    let lx = spectral_norm_sq(problem.x(), 30, 1e-10).max(1e-12);
    let constrained = problem.is_constrained();
    let use_al = constrained && options.constraint_method == ConstraintMethod::AugmentedLagrangian;
    let kmax = (0..problem.num_blocks())
        .filter_map(|i| problem.constraint(i).map(|k| spectral_norm_sq(k, 30, 1e-10)))
        .fold(0.0, f64::max)
        .max(1e-12);
    let mut certifier = Certifier {
        problem,
        tol: options.kkt_tol,
        polish: options.polish,
        tried: HashSet::new(),
        best: None,
    };
    let mut trace = Vec::new();
    let mut iters = 0usize;

    let finish = |mut sol: Solution, trace: Vec<TraceRow>| -> Solution {
        sol.trace = trace;
        sol
    };

    if !use_al {
        let model = Model {
            problem,
            al: None,
            project: constrained,
        };
        let mut x0 = init.w.clone();
        if constrained {
            x0 = model.prox(&x0, 0.0);
        }
        let mut fista = Fista::new(&model, x0, lx);
        loop {
            let mut mapping = f64::INFINITY;
            for _ in 0..options.check_every {
                mapping = fista.step(&model, backtracking);
                iters += 1;
                if mapping <= 1e-3 * options.kkt_tol || iters >= options.max_iters {
                    break;
                }
            }
            let res = certifier.check(&Weights::new(fista.x.clone()), iters)?;
            if options.record_trace {
                trace.push(trace_row(fista.fx, iters, res.as_ref().or(certifier.best.as_ref())));
            }
            if let Some(sol) = res {
                return Ok(finish(sol, trace));
            }
            if iters >= options.max_iters || mapping == 0.0 {
                break;
            }
        }
    } else {
        let mut rho: Vec<DVector<f64>> = (0..problem.num_blocks())
            .map(|i| DVector::zeros(problem.constraint_count(i)))
            .collect();
        let mut mu = options.al_penalty_init * lx / kmax;
        let mu_cap = 1e8 * lx / kmax;
        let mut prev_viol = f64::INFINITY;
        let mut x = init.w.clone();
        let part = problem.partition();
        let mut inner_tol = options.kkt_tol;
        loop {
            let model = Model {
                problem,
                al: Some((rho.clone(), mu)),
                project: false,
            };
            // The penalty only curves along violated rows; backtracking finds the local constant.
            let l0 = if backtracking { lx } else { lx + mu * kmax };
            let mut fista = Fista::new(&model, x.clone(), l0);
            // Inner solve to `inner_tol`, certifying the projected iterate along the way.
            loop {
                let mut mapping = f64::INFINITY;
                for _ in 0..options.check_every {
                    mapping = fista.step(&model, backtracking);
                    iters += 1;
                    if mapping <= inner_tol || iters >= options.max_iters {
                        break;
                    }
                }
                let wf = project_blocks(problem, &fista.x);
                let res = certifier.check(&wf, iters)?;
                if options.record_trace {
                    let obj = objective(problem, &wf)?;
                    trace.push(trace_row(obj, iters, res.as_ref().or(certifier.best.as_ref())));
                }
                if let Some(sol) = res {
                    return Ok(finish(sol, trace));
                }
                if mapping <= inner_tol || iters >= options.max_iters {
                    break;
                }
            }
            x = fista.x.clone();
            // Multiplier update and violation of the current iterate.
            let mut viol: f64 = 0.0;
            for (i, r) in rho.iter_mut().enumerate() {
                if let Some(k) = problem.constraint(i) {
                    if k.ncols() == 0 {
                        continue;
                    }
                    let wb = DVector::from_iterator(part.width(i), part.block(i).iter().map(|&j| x[j]));
                    let kw = k.transpose() * &wb;
                    viol = viol.max(kw.max().max(0.0));
                    *r = (&*r + kw * mu).map(|v| v.max(0.0));
                }
            }
            // Grow the penalty only on a violation that matters, and never past a fixed
            // multiple of the data curvature (the step size shrinks with it).
            if viol > 0.5 * prev_viol && viol > 0.1 * options.kkt_tol {
                mu = (mu * options.al_penalty_growth).min(mu_cap);
            }
            prev_viol = viol;
            inner_tol = options.kkt_tol.max(0.1 * viol);
            if iters >= options.max_iters {
                break;
            }
        }
    }
    let best = certifier.best.take().expect("at least one certification attempt");
    Err(CglError::NotConverged {
        iterations: iters,
        violation: best.report.max_violation(),
        best: Box::new(finish(best, trace)),
    })
}

/// `objective(w) + delta/2 ||w||^2`.
pub fn objective_l2(problem: &CglProblem, w: &Weights, delta: f64) -> Result<f64> {
    Ok(objective(problem, w)? + 0.5 * delta * w.w.norm_squared())
}

/// Extended problem with design `[X; sqrt(delta) I]` and targets `[y; 0]`.
pub fn l2_extended_problem(problem: &CglProblem, delta: f64) -> Result<CglProblem> {
    if !(delta > 0.0) {
        return Err(CglError::Argument("delta must be positive".into()));
    }
    let (n, d) = (problem.n(), problem.d());
    let mut x = DMatrix::zeros(n + d, d);
    x.view_mut((0, 0), (n, d)).copy_from(problem.x());
    for j in 0..d {
        x[(n + j, j)] = delta.sqrt();
    }
    let mut y = DVector::zeros(n + d);
    y.rows_mut(0, n).copy_from(problem.y());
    CglProblem::new(
        x,
        y,
        problem.partition().clone(),
        problem.constraints().to_vec(),
        problem.lambda(),
    )
}

/// Solve the ridge-augmented problem; the report refers to the extended problem.
pub fn solve_l2(problem: &CglProblem, delta: f64, options: &SolverOptions) -> Result<Solution> {
    let ext = l2_extended_problem(problem, delta)?;
    solve(&ext, options)
}
