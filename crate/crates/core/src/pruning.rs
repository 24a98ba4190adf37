//! Exact pruning of optimal solutions to minimal ones, and approximate pruning of ReLU networks.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CglError, Result};
use crate::linalg::{lstsq, FullSvd};
use crate::optimal_set::recover_dual;
use crate::problem::{objective, CglProblem, Weights};
use crate::reformulation::{predict, ReluNetwork};

#[derive(Debug, Clone, Serialize)]
pub struct PruneStep {
    pub removed: usize,
    pub t: f64,
    pub beta_norm: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PruneTrace {
    pub initial_support: usize,
    pub final_support: usize,
    pub initial_objective: f64,
    pub steps: Vec<PruneStep>,
}

impl PruneTrace {
    pub fn to_json(&self) -> Result<String> {
        crate::json::to_json("prune_trace", self)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MinimalityCheck {
    pub minimal: bool,
    pub sigma_min: f64,
    pub rank_tol: f64,
}

/// Active blocks and the matrix whose columns are their fits `X_b w_b`.
pub fn active_fits(problem: &CglProblem, w: &Weights) -> (Vec<usize>, DMatrix<f64>) {
    let part = problem.partition();
    let active = w.active_set(part);
    let mut f = DMatrix::zeros(problem.n(), active.len());
    for (k, &b) in active.iter().enumerate() {
        f.set_column(k, &problem.block_fit(b, &w.block(part, b)));
    }
    (active, f)
}

/// Independence test of the active fits.
pub fn is_minimal(problem: &CglProblem, w: &Weights) -> MinimalityCheck {
    let (_, f) = active_fits(problem, w);
    if f.ncols() == 0 {
        return MinimalityCheck {
            minimal: true,
            sigma_min: f64::INFINITY,
            rank_tol: 0.0,
        };
    }
    let svd = FullSvd::new(&f);
    let (s, tol) = (svd.sigma_min(), svd.tolerance());
    MinimalityCheck {
        minimal: s > tol && svd.sigma_max() > 0.0,
        sigma_min: s,
        rank_tol: tol,
    }
}

/// Null combination of the columns, using only the first `rows + 1` of them.
fn null_combination(fits: &DMatrix<f64>) -> Option<DVector<f64>> {
    let cols = fits.ncols();
    if cols == 0 {
        return None;
    }
    let used = cols.min(fits.nrows() + 1);
    let sub = fits.columns(0, used).into_owned();
    let svd = FullSvd::new(&sub);
    let zero_col = sub.column_iter().position(|c| c.iter().all(|&v| v == 0.0));
    if svd.sigma_max() == 0.0 || zero_col.is_some() {
        let mut beta = DVector::zeros(cols);
        beta[zero_col.unwrap_or(0)] = 1.0;
        return Some(beta);
    }
    if svd.rank() == used {
        return None;
    }
    let v = svd.smallest_right_vector();
    let mut beta = DVector::zeros(cols);
    beta.rows_mut(0, used).copy_from(&v);
    Some(beta)
}

/// Sign-normalize so the largest-magnitude entry is positive; returns its index.
/// Near-ties resolve to the highest index, so lower-index blocks absorb the removed fit.
fn normalize_beta(beta: &mut DVector<f64>) -> usize {
    let m = beta.amax();
    let idx = (0..beta.len()).rev().find(|&i| beta[i].abs() >= m * (1.0 - 1e-9)).unwrap_or(0);
    if beta[idx] < 0.0 {
        beta.neg_mut();
    }
    idx
}

/// Scale factors `1 - t beta_i` with `t = 1 / beta_max`; the victim's factor is exactly 0.
fn prune_factors(beta: &mut DVector<f64>) -> (usize, f64, DVector<f64>) {
    let victim = normalize_beta(beta);
    let t = 1.0 / beta[victim];
    let mut f = beta.map(|b| (1.0 - t * b).clamp(0.0, 2.0));
    f[victim] = 0.0;
    (victim, t, f)
}

/// One exact pruning step from `w`, or `None` if `w` is minimal.
pub fn prune_step(problem: &CglProblem, w: &Weights) -> Option<Weights> {
    prune_step_detail(problem, w).map(|(w2, _)| w2)
}

fn prune_step_detail(problem: &CglProblem, w: &Weights) -> Option<(Weights, (usize, f64, f64))> {
    let part = problem.partition();
    let (active, fits) = active_fits(problem, w);
    let mut beta = null_combination(&fits)?;
    let bnorm = beta.norm();
    let (victim, t, factors) = prune_factors(&mut beta);
    let mut w2 = w.clone();
    for (k, &b) in active.iter().enumerate() {
        let blk = w.block(part, b) * factors[k];
        w2.set_block(part, b, &blk);
    }
    Some((w2, (active[victim], t, bnorm)))
}

/// Prune a verified solution to a minimal one with the same objective.
pub fn optimal_prune(problem: &CglProblem, w: &Weights) -> Result<(Weights, PruneTrace)> {
    recover_dual(problem, w).map_err(|e| CglError::Certificate(format!("pruning needs a verified optimal input: {e}")))?;
    let f0 = objective(problem, w)?;
    let mut trace = PruneTrace {
        initial_support: w.active_set(problem.partition()).len(),
        final_support: 0,
        initial_objective: f0,
        steps: Vec::new(),
    };
    let mut cur = w.clone();
    while let Some((next, (removed, t, beta_norm))) = prune_step_detail(problem, &cur) {
        cur = next;
        trace.steps.push(PruneStep {
            removed,
            t,
            beta_norm,
            objective: objective(problem, &cur)?,
        });
        if trace.steps.len() > problem.num_blocks() {
            return Err(CglError::Certificate("pruning failed to reduce the support".into()));
        }
    }
    trace.final_support = cur.active_set(problem.partition()).len();
    Ok((cur, trace))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PruneScore {
    Magnitude,
    Gradient,
    Random { seed: u64 },
    LsResidual,
}

impl PruneScore {
    pub fn name(&self) -> &'static str {
        match self {
            PruneScore::Magnitude => "magnitude",
            PruneScore::Gradient => "gradient",
            PruneScore::Random { .. } => "random",
            PruneScore::LsResidual => "ls_residual",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PruneRound {
    pub round: usize,
    pub active_width: usize,
    pub train_mse: f64,
    pub test_mse: Option<f64>,
    pub method: String,
    /// Step taken in the exact phase (neuron fits dependent).
    pub exact: bool,
}

fn is_active(net: &ReluNetwork, i: usize) -> bool {
    net.w2[i] != 0.0 && net.w1.row(i).iter().any(|&v| v != 0.0)
}

fn neuron_fits(net: &ReluNetwork, z: &DMatrix<f64>, active: &[usize]) -> Result<DMatrix<f64>> {
    let mut q = DMatrix::zeros(z.nrows(), active.len());
    for (k, &i) in active.iter().enumerate() {
        q.set_column(k, &net.neuron_output(z, i)?);
    }
    Ok(q)
}

fn ls_residual(q: &DMatrix<f64>, j: usize) -> (DVector<f64>, DVector<f64>) {
    let others: Vec<usize> = (0..q.ncols()).filter(|&k| k != j).collect();
    let a = q.select_columns(&others);
    let target = q.column(j).into_owned();
    let coef = if others.is_empty() { DVector::zeros(0) } else { lstsq(&a, &target) };
    let res = &target - &a * &coef;
    (coef, res)
}

/// Per-neuron scores; pruning removes the smallest. Inactive neurons score 0.
pub fn score_neurons(
    z: &DMatrix<f64>,
    y: &DVector<f64>,
    net: &ReluNetwork,
    method: PruneScore,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<DVector<f64>> {
    let m = net.width();
    if m == 0 {
        return Err(CglError::Argument("cannot score an empty network".into()));
    }
    let mut s = DVector::zeros(m);
    match method {
        PruneScore::Magnitude => {
            for i in 0..m {
                s[i] = net.w1.row(i).norm() * net.w2[i].abs();
            }
        }
        PruneScore::Gradient => {
            let r = predict(net, z)? - y;
            for i in 0..m {
                let b = net.bias1.as_ref().map(|b| b[i]).unwrap_or(0.0);
                let pre = z * net.w1.row(i).transpose();
                let gate_src = match &net.gates {
                    Some(g) => z * g.row(i).transpose(),
                    None => pre.add_scalar(b),
                };
                let mask = gate_src.map(|v| if v > 0.0 || (net.gates.is_some() && v >= 0.0) { 1.0 } else { 0.0 });
                let act = match &net.gates {
                    Some(_) => pre.component_mul(&mask),
                    None => pre.add_scalar(b).map(|v| v.max(0.0)),
                };
                let g2 = act.dot(&r);
                let g1 = z.transpose() * mask.component_mul(&r) * net.w2[i];
                let w1g1 = net.w1.row(i).transpose().component_mul(&g1);
                s[i] = w1g1.norm() * (net.w2[i] * g2).abs();
            }
        }
        PruneScore::Random { seed } => {
            let mut local;
            let rng = match rng {
                Some(r) => r,
                None => {
                    local = ChaCha8Rng::seed_from_u64(seed);
                    &mut local
                }
            };
            for i in 0..m {
                s[i] = rng.random::<f64>();
            }
        }
        PruneScore::LsResidual => {
            let active: Vec<usize> = (0..m).filter(|&i| is_active(net, i)).collect();
            let q = neuron_fits(net, z, &active)?;
            for (k, &i) in active.iter().enumerate() {
                s[i] = ls_residual(&q, k).1.norm();
            }
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PruneOptions {
    pub score: PruneScore,
    /// Exact phase on dependent fits, then least-squares correction of the survivors.
    /// Without it the selected neuron is simply zeroed.
    pub ls_correction: bool,
}

impl PruneOptions {
    pub fn optimal_ls() -> Self {
        PruneOptions {
            score: PruneScore::LsResidual,
            ls_correction: true,
        }
    }

    pub fn baseline(score: PruneScore) -> Self {
        PruneOptions {
            score,
            ls_correction: false,
        }
    }

    pub fn label(&self) -> String {
        if self.ls_correction {
            if self.score == PruneScore::LsResidual {
                "optimal_ls".into()
            } else {
                format!("{}_ls", self.score.name())
            }
        } else {
            self.score.name().into()
        }
    }
}

fn mse(net: &ReluNetwork, z: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
    let n = y.len().max(1) as f64;
    Ok((predict(net, z)? - y).norm_squared() / n)
}

fn scale_neuron(net: &mut ReluNetwork, i: usize, factor: f64) {
    if factor == 0.0 {
        net.w1.row_mut(i).fill(0.0);
        net.w2[i] = 0.0;
        if let Some(b) = net.bias1.as_mut() {
            b[i] = 0.0;
        }
        return;
    }
    let s = factor.sqrt();
    net.w1.row_mut(i).scale_mut(s);
    net.w2[i] *= s;
    if let Some(b) = net.bias1.as_mut() {
        b[i] *= s;
    }
}

/// Prune `net` down to `target_width` active neurons, recording train/test MSE per round.
pub fn approximate_prune_relu(
    z: &DMatrix<f64>,
    y: &DVector<f64>,
    net: &ReluNetwork,
    target_width: usize,
    options: PruneOptions,
    test: Option<(&DMatrix<f64>, &DVector<f64>)>,
) -> Result<(ReluNetwork, Vec<PruneRound>)> {
    if target_width > net.active_width() {
        return Err(CglError::Argument(format!(
            "target width {target_width} exceeds the active width {}",
            net.active_width()
        )));
    }
    let mut cur = net.clone();
    let mut rng = match options.score {
        PruneScore::Random { seed } => ChaCha8Rng::seed_from_u64(seed),
        _ => ChaCha8Rng::seed_from_u64(0),
    };
    let label = options.label();
    let record = |cur: &ReluNetwork, round: usize, exact: bool| -> Result<PruneRound> {
        Ok(PruneRound {
            round,
            active_width: cur.active_width(),
            train_mse: mse(cur, z, y)?,
            test_mse: match test {
                Some((zt, yt)) => Some(mse(cur, zt, yt)?),
                None => None,
            },
            method: label.clone(),
            exact,
        })
    };
    let mut rounds = vec![record(&cur, 0, false)?];
    let mut round = 0;
    while cur.active_width() > target_width {
        round += 1;
        let active: Vec<usize> = (0..cur.width()).filter(|&i| is_active(&cur, i)).collect();
        let q = neuron_fits(&cur, z, &active)?;
        let mut exact = false;
        if options.ls_correction {
            let mut beta = match null_combination(&q) {
                Some(b) => {
                    exact = true;
                    b
                }
                None => {
                    let scores = score_neurons(z, y, &cur, options.score, Some(&mut rng))?;
                    let j = pick_victim(&active, &scores);
                    let (coef, _) = ls_residual(&q, j);
                    let mut beta = DVector::zeros(active.len());
                    let mut c = 0;
                    for k in 0..active.len() {
                        if k == j {
                            beta[k] = -1.0;
                        } else {
                            beta[k] = coef[c];
                            c += 1;
                        }
                    }
                    beta
                }
            };
            let (_, _, factors) = prune_factors(&mut beta);
            for (k, &i) in active.iter().enumerate() {
                scale_neuron(&mut cur, i, factors[k]);
            }
        } else {
            let scores = score_neurons(z, y, &cur, options.score, Some(&mut rng))?;
            let j = pick_victim(&active, &scores);
            scale_neuron(&mut cur, active[j], 0.0);
        }
        rounds.push(record(&cur, round, exact)?);
    }
    Ok((cur, rounds))
}

/// Position in `active` of the smallest score; ties go to the lowest index.
fn pick_victim(active: &[usize], scores: &DVector<f64>) -> usize {
    let mut best = 0;
    for k in 1..active.len() {
        if scores[active[k]] < scores[active[best]] {
            best = k;
        }
    }
    best
}

pub fn write_prune_csv(path: &std::path::Path, rounds: &[PruneRound]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CglError::Io(std::io::Error::other(e)))?;
    w.write_record(["round", "active_width", "train_mse", "test_mse", "method"])
        .map_err(|e| CglError::Io(std::io::Error::other(e)))?;
    for r in rounds {
        w.write_record([
            r.round.to_string(),
            r.active_width.to_string(),
            format!("{:.12e}", r.train_mse),
            r.test_mse.map(|v| format!("{v:.12e}")).unwrap_or_default(),
            r.method.clone(),
        ])
        .map_err(|e| CglError::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{kkt_report, BlockPartition, DualCertificate};

    fn dup() -> CglProblem {
        let x = DMatrix::from_element(2, 2, 1.0);
        let y = DVector::from_vec(vec![2.0, 2.0]);
        CglProblem::unconstrained(x, y, BlockPartition::singletons(2), 1.0).unwrap()
    }

    #[test]
    fn duplicate_prunes_in_one_step() {
        let p = dup();
        let w = Weights::new(DVector::from_vec(vec![0.75, 0.75]));
        assert!(!is_minimal(&p, &w).minimal);
        let (out, tr) = optimal_prune(&p, &w).unwrap();
        assert_eq!(tr.steps.len(), 1);
        assert_eq!(tr.steps[0].removed, 1);
        assert!((out.w[0] - 1.5).abs() < 1e-12 && out.w[1] == 0.0);
        assert!((tr.steps[0].objective - tr.initial_objective).abs() < 1e-12);
        assert!(is_minimal(&p, &out).minimal);
        assert!(kkt_report(&p, &out, &DualCertificate::zeros(&p), 1e-8).unwrap().satisfied);
    }

    #[test]
    fn minimal_input_is_unchanged() {
        let p = dup();
        let w = Weights::new(DVector::from_vec(vec![1.5, 0.0]));
        assert!(is_minimal(&p, &w).minimal);
        let (out, tr) = optimal_prune(&p, &w).unwrap();
        assert!(tr.steps.is_empty());
        assert_eq!(out, w);
    }

    #[test]
    fn non_optimal_input_is_refused() {
        let p = dup();
        let w = Weights::new(DVector::from_vec(vec![1.0, 1.0]));
        assert!(matches!(optimal_prune(&p, &w), Err(CglError::Certificate(_))));
    }

    fn two_neuron_net() -> (DMatrix<f64>, DVector<f64>, ReluNetwork) {
        let z = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, -1.0, 0.5]);
        let y = DVector::from_vec(vec![1.0, 0.5, 2.0, 0.0]);
        let w1 = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, 1.0, 0.5, 0.2, 1.0]);
        let w2 = DVector::from_vec(vec![0.7, 0.4, -0.3]);
        let net = ReluNetwork {
            w1,
            w2,
            gates: None,
            bias1: None,
            bias2: None,
        };
        (z, y, net)
    }

    #[test]
    fn duplicated_neuron_step_is_exact() {
        let (z, y, net) = two_neuron_net();
        let before = predict(&net, &z).unwrap();
        let (out, rounds) = approximate_prune_relu(&z, &y, &net, 2, PruneOptions::optimal_ls(), None).unwrap();
        assert!(rounds[1].exact);
        assert_eq!(out.active_width(), 2);
        assert!((predict(&out, &z).unwrap() - before).norm() <= 1e-8);
    }

    #[test]
    fn independent_round_changes_fit_by_residual() {
        // Victim's least-squares coefficients are small, so t = 1 and the change equals the residual.
        let z = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let y = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        let net = ReluNetwork {
            w1: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            w2: DVector::from_vec(vec![2.0, 0.1]),
            gates: None,
            bias1: None,
            bias2: None,
        };
        let before = predict(&net, &z).unwrap();
        let q = neuron_fits(&net, &z, &[0, 1]).unwrap();
        let (coef, res) = ls_residual(&q, 1);
        assert!(coef.amax() < 1.0);
        let (out, rounds) = approximate_prune_relu(&z, &y, &net, 1, PruneOptions::optimal_ls(), None).unwrap();
        assert!(!rounds[1].exact);
        let change = (predict(&out, &z).unwrap() - before).norm();
        assert!((change - res.norm()).abs() < 1e-12);
    }

    #[test]
    fn prune_to_zero() {
        let (z, y, net) = two_neuron_net();
        for opts in [PruneOptions::optimal_ls(), PruneOptions::baseline(PruneScore::Magnitude)] {
            let (out, _) = approximate_prune_relu(&z, &y, &net, 0, opts, None).unwrap();
            assert_eq!(out.active_width(), 0);
            assert!(predict(&out, &z).unwrap().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn scores() {
        let (z, y, mut net) = two_neuron_net();
        net.w2[2] = 0.0;
        let m = score_neurons(&z, &y, &net, PruneScore::Magnitude, None).unwrap();
        assert_eq!(m[2], 0.0);
        let g = score_neurons(&z, &y, &net, PruneScore::Gradient, None).unwrap();
        assert_eq!(g[2], 0.0);
        assert!(g.iter().all(|&v| v >= 0.0));
        let r1 = score_neurons(&z, &y, &net, PruneScore::Random { seed: 3 }, None).unwrap();
        let r2 = score_neurons(&z, &y, &net, PruneScore::Random { seed: 3 }, None).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn gradient_score_matches_finite_differences() {
        let (z, y, net) = two_neuron_net();
        let loss = |n: &ReluNetwork| 0.5 * (predict(n, &z).unwrap() - &y).norm_squared();
        let s = score_neurons(&z, &y, &net, PruneScore::Gradient, None).unwrap();
        let h = 1e-6;
        for i in 0..net.width() {
            let mut g1 = DVector::zeros(2);
            for c in 0..2 {
                let (mut a, mut b) = (net.clone(), net.clone());
                a.w1[(i, c)] += h;
                b.w1[(i, c)] -= h;
                g1[c] = (loss(&a) - loss(&b)) / (2.0 * h);
            }
            let (mut a, mut b) = (net.clone(), net.clone());
            a.w2[i] += h;
            b.w2[i] -= h;
            let g2 = (loss(&a) - loss(&b)) / (2.0 * h);
            let expect = net.w1.row(i).transpose().component_mul(&g1).norm() * (net.w2[i] * g2).abs();
            assert!((s[i] - expect).abs() < 1e-6 * (1.0 + expect));
        }
    }
}
