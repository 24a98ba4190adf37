//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every criterion reports even when an
//! earlier one fails. Criteria listed in `EXPECTED_FAIL` assert published values
//! that the closed form contradicts; they still print FAIL, and the target only
//! fails on an unexpected FAIL or on an expected failure that starts passing.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relu_optset::fixtures::{self, network_instance};
use relu_optset::optimal_set::path::{one_neuron_breakpoints, one_neuron_solution, trace_one_neuron};
use relu_optset::optimal_set::{
    describe_set, is_unique, lasso_general_position, max_norm_approx, min_norm, recover_dual, sample_solutions,
    tune_over_set, Verdict,
};
use relu_optset::pruning::{is_minimal, optimal_prune};
use relu_optset::reformulation::{
    arrangement_bound, enumerate_patterns, mask_of, network_objective, one_d_lasso_build, one_d_lasso_matrix,
    one_d_lasso_to_network, Arch, PatternMode, ReluNetwork,
};
use relu_optset::sensitivity::{
    fd_jacobian, jacobians, max_relative_error, projection_matrix, active_coordinates, FdTarget,
};
use relu_optset::{
    kkt_report, objective, solve, solve_l2, BlockPartition, CglProblem, SolverOptions, Weights,
};

const EXPECTED_FAIL: &[usize] = &[4, 5];

/// Named sub-checks of one criterion.
#[derive(Default)]
struct Check {
    items: Vec<(String, bool)>,
}

impl Check {
    fn add(&mut self, name: impl Into<String>, ok: bool) {
        self.items.push((name.into(), ok));
    }
    fn ok(&self) -> bool {
        self.items.iter().all(|(_, ok)| *ok)
    }
}

fn tight() -> SolverOptions {
    SolverOptions {
        kkt_tol: 1e-10,
        max_iters: 200_000,
        ..SolverOptions::default()
    }
}

fn instance_shape(seed: u64) -> (usize, usize, Arch) {
    let n = 8 + (seed as usize * 7) % 13;
    let d = 1 + (seed as usize) % 5;
    let arch = if seed % 2 == 0 { Arch::Gated } else { Arch::Relu };
    (n, d, arch)
}

fn kkt_suite(c: &mut Check) {
    let start = Instant::now();
    let mut failures = Vec::new();
    for seed in 0..50u64 {
        let (n, d, arch) = instance_shape(seed);
        let inst = network_instance(n, d, 8, arch, 0.1, seed).expect("instance");
        match solve(&inst.problem, &SolverOptions::default()) {
            Ok(s) => {
                let r = kkt_report(&inst.problem, &s.weights, &s.dual, 1e-6).expect("report");
                if !r.satisfied {
                    failures.push(format!("seed {seed}: violation {:.2e}", r.max_violation()));
                }
            }
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    c.add(format!("50 instances certified at 1e-6 ({} failures {:?})", failures.len(), failures), failures.is_empty());
    c.add(format!("runtime {secs:.1}s < 60s"), secs < 60.0);
}

fn fit_uniqueness(c: &mut Check) {
    let mut worst_fit = 0.0f64;
    let mut worst_pen = 0.0f64;
    let mut errors = Vec::new();
    for seed in 0..50u64 {
        let (n, d, arch) = instance_shape(seed);
        let p = network_instance(n, d, 8, arch, 0.1, seed).expect("instance").problem;
        let a = solve(&p, &tight());
        let b = solve(
            &p,
            &SolverOptions {
                random_init: true,
                seed: 1000 + seed,
                ..tight()
            },
        );
        match (a, b) {
            (Ok(a), Ok(b)) => {
                let scale = 1.0 + p.y().norm();
                worst_fit = worst_fit.max((p.fit(&a.weights) - p.fit(&b.weights)).norm() / scale);
                let part = p.partition();
                worst_pen = worst_pen.max((a.weights.group_norm(part) - b.weights.group_norm(part)).abs());
            }
            (a, b) => errors.push(format!("seed {seed}: {:?} / {:?}", a.err(), b.err())),
        }
    }
    c.add(format!("both initializations certified ({errors:?})"), errors.is_empty());
    c.add(format!("fits agree: max |Xa - Xb| / (1 + |y|) = {worst_fit:.2e}"), worst_fit <= 1e-6);
    c.add(format!("penalties agree: max diff {worst_pen:.2e}"), worst_pen <= 1e-6);
}

fn min_norm_interp(c: &mut Check) {
    let target = (1.0 + 2f64.sqrt()) / 3.0;
    let p = fixtures::min_norm_interp(0.05).unwrap();
    let part = p.partition().clone();
    let row = p.x().clone().svd(true, true).solve(p.y(), 1e-14).unwrap();
    let g = Weights::new(row.clone()).group_norm(&part);
    c.add(format!("row-space interpolant group norm {g:.12} vs {target:.12}"), (g - target).abs() <= 1e-10);

    let null = fixtures::min_norm_interp_null();
    let s = solve(&p, &tight()).unwrap();
    let desc = describe_set(&p, &s.weights, &s.dual).unwrap();
    let w = min_norm(&desc).unwrap();
    let comp = w.w.dot(&null);
    c.add(format!("min_norm at lambda 0.05 has null component {comp:.4e}"), comp.abs() > 1e-6);

    // Interpolation limit: minimize the group norm over w_row + t * null.
    let gn = |t: f64| Weights::new(&row + &null * t).group_norm(&part);
    let (mut lo, mut hi) = (-2.0f64, 2.0f64);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if gn(m1) < gn(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let oracle = gn(0.5 * (lo + hi));
    let small = solve(&p.with_lambda(1e-7).unwrap(), &tight()).unwrap();
    let limit = small.weights.group_norm(&part);
    c.add(
        format!("interpolation limit {limit:.8} vs gamma-search {oracle:.8}"),
        (limit - oracle).abs() <= 1e-5,
    );
    c.add(format!("limit {limit:.8} < {target:.8}"), limit < target - 1e-6);
}

fn one_neuron(c: &mut Check) {
    let (x, y) = fixtures::one_neuron();
    let lambda_max = 100.0;
    let count = 200;
    let grid: Vec<f64> = (0..count)
        .map(|i| lambda_max * (1.0 - (1.0 - 0.005) * i as f64 / (count - 1) as f64))
        .collect();
    let resolution = grid[0] - grid[1];
    let bps = one_neuron_breakpoints(&x, &y, grid[count - 1], grid[0], 4000).unwrap();
    let claimed = 99.0 / 9.99;
    let found = bps.first().copied().unwrap_or(f64::NAN);
    c.add(
        format!("breakpoint {found:.5} vs {claimed:.5} within grid resolution {resolution:.3}"),
        bps.len() == 1 && (found - claimed).abs() <= resolution,
    );
    let above_err = [20.0, 50.0, 90.0]
        .iter()
        .map(|&l| (one_neuron_solution(&x, &y, l).unwrap().v - (l / 1e4 - 0.01)).abs())
        .fold(0.0, f64::max);
    c.add(format!("above-breakpoint v = lambda/1e4 - 0.01 (err {above_err:.1e})"), above_err <= 1e-8);
    let below_err = [1.0, 3.0, 5.0]
        .iter()
        .map(|&l| (one_neuron_solution(&x, &y, l).unwrap().v - (0.1 - l / 100.0)).abs())
        .fold(0.0, f64::max);
    c.add(format!("below-breakpoint v = 0.1 - lambda/100 (err {below_err:.3})"), below_err <= 1e-8);
    let obj = one_neuron_solution(&x, &y, 10.0).unwrap().objective;
    c.add(format!("objective at lambda 10 is {obj:.4} vs 99.99"), (obj - 99.99).abs() <= 1e-8);
    let path = trace_one_neuron(&x, &y, &grid).unwrap();
    c.add(
        format!("exactly one jump flagged (at {:?})", path.jump_locations()),
        path.jump_count() == 1,
    );
}

/// Full-batch subgradient descent on the 1-D network with all weights and biases trainable.
fn subgradient_oracle(net: &ReluNetwork, z: &[f64], y: &DVector<f64>, lambda: f64, steps: usize, seed: u64) -> f64 {
    let m = net.width();
    let mut w1: Vec<f64> = (0..m).map(|k| net.w1[(k, 0)]).collect();
    let mut b1: Vec<f64> = net.bias1.clone().unwrap().iter().copied().collect();
    let mut w2: Vec<f64> = net.w2.iter().copied().collect();
    let mut b2 = net.bias2.unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in w1.iter_mut().chain(b1.iter_mut()).chain(w2.iter_mut()) {
        *v += rng.random_range(-1e-3..1e-3);
    }
    b2 += rng.random_range(-1e-3..1e-3);
    let eval = |w1: &[f64], b1: &[f64], w2: &[f64], b2: f64| -> (f64, Vec<f64>) {
        let r: Vec<f64> = z
            .iter()
            .zip(y.iter())
            .map(|(&zi, &yi)| (0..m).map(|k| (w1[k] * zi + b1[k]).max(0.0) * w2[k]).sum::<f64>() + b2 - yi)
            .collect();
        let pen: f64 = (0..m).map(|k| w1[k] * w1[k] + w2[k] * w2[k]).sum();
        (0.5 * r.iter().map(|v| v * v).sum::<f64>() + 0.5 * lambda * pen, r)
    };
    let mut best = f64::INFINITY;
    for t in 0..steps {
        let (f, r) = eval(&w1, &b1, &w2, b2);
        best = best.min(f);
        let eta = 1e-2 / (1.0 + t as f64).sqrt();
        let mut g = vec![0.0; 3 * m + 1];
        for (i, &zi) in z.iter().enumerate() {
            for k in 0..m {
                let pre = w1[k] * zi + b1[k];
                if pre > 0.0 {
                    g[k] += r[i] * w2[k] * zi;
                    g[m + k] += r[i] * w2[k];
                    g[2 * m + k] += r[i] * pre;
                }
            }
            g[3 * m] += r[i];
        }
        for k in 0..m {
            g[k] += lambda * w1[k];
            g[2 * m + k] += lambda * w2[k];
            w1[k] -= eta * g[k];
            b1[k] -= eta * g[m + k];
            w2[k] -= eta * g[2 * m + k];
        }
        b2 -= eta * g[3 * m];
    }
    best.min(eval(&w1, &b1, &w2, b2).0)
}

fn one_d(c: &mut Check) {
    let a2 = one_d_lasso_matrix(&[0.0, 1.0]).unwrap();
    c.add("A for Z = (0, 1)", a2 == DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    let a3 = one_d_lasso_matrix(&[0.0, 1.0, 2.0]).unwrap();
    let want = DMatrix::from_row_slice(3, 4, &[0.0, 0.0, 2.0, 1.0, 1.0, 0.0, 1.0, 0.0, 2.0, 1.0, 0.0, 0.0]);
    c.add("A for Z = (0, 1, 2)", a3 == want);

    let lambda = 0.1;
    for (z, seed) in [(vec![0.0, 1.0], 11u64), (vec![0.0, 1.0, 2.0], 12)] {
        let n = z.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let lasso = one_d_lasso_build(&z, &y, lambda).unwrap();
        let sol = solve(&lasso.centered, &tight()).unwrap();
        let v = sol.weights.w.clone();
        let b = lasso.intercept(&v);
        let lasso_obj = lasso.objective(&v, b);
        let net = one_d_lasso_to_network(&v, b, &z).unwrap();
        let zm = DMatrix::from_column_slice(n, 1, &z);
        let mapped = network_objective(&net, &zm, &y, lambda).unwrap();
        c.add(
            format!("n = {n}: mapped objective {mapped:.10} equals lasso objective"),
            (mapped - lasso_obj).abs() <= 1e-10,
        );
        let direct = subgradient_oracle(&net, &z, &y, lambda, 1_000_000, seed);
        c.add(
            format!("n = {n}: subgradient oracle {direct:.10} within 1e-6 of {mapped:.10}"),
            (direct - mapped).abs() <= 1e-6,
        );
    }

    for (z, seed) in [(vec![0.0, 1.0], 21u64), (vec![0.0, 1.0, 2.0], 22), (vec![0.0, 1.0, 2.0, 3.0], 23)] {
        let n = z.len();
        let a = one_d_lasso_matrix(&z).unwrap();
        let gp = lasso_general_position(&a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let p = CglProblem::unconstrained(a.clone(), y, BlockPartition::singletons(a.ncols()), lambda).unwrap();
        let s = solve(&p, &SolverOptions { kkt_tol: 1e-9, ..tight() }).unwrap();
        let rho = recover_dual(&p, &s.weights).unwrap();
        let verdict = if gp { Verdict::Unique } else { is_unique(&p, &s.weights, &rho).unwrap().verdict };
        if n <= 3 {
            c.add(format!("n = {n}: general position {gp}, verdict {verdict:?}"), verdict == Verdict::Unique);
        } else {
            c.add(format!("n = {n}: recorded general position {gp}, verdict {verdict:?}"), true);
        }
    }
}

fn pruning(c: &mut Check) {
    let mut bad = Vec::new();
    for seed in 0..20u64 {
        let span = 1 + (seed as usize) % 3;
        let blocks = span + 2 + (seed as usize) % 3;
        let (p, w) = fixtures::group_dependent(8, span, blocks, 2, 0.5, seed).unwrap();
        let (pruned, trace) = optimal_prune(&p, &w).unwrap();
        let f0 = objective(&p, &w).unwrap();
        let f1 = objective(&p, &pruned).unwrap();
        let rel = (f1 - f0).abs() / f0.abs().max(1e-300);
        let minimal = is_minimal(&p, &pruned).minimal;
        if rel > 1e-8 || !minimal || trace.final_support != span {
            bad.push(format!("seed {seed}: rel {rel:.1e} minimal {minimal} support {} vs {span}", trace.final_support));
        }
    }
    c.add(format!("20 instances: objective kept, minimal, support = span dim ({bad:?})"), bad.is_empty());
}

fn l2_convergence(c: &mut Check) {
    let (dup, _) = fixtures::duplicate();
    let interp = fixtures::min_norm_interp(0.05).unwrap();
    for (name, p) in [("duplicate", dup), ("min_norm_interp", interp)] {
        let s = solve(&p, &tight()).unwrap();
        let desc = describe_set(&p, &s.weights, &s.dual).unwrap();
        let star = min_norm(&desc).unwrap();
        let errs: Vec<f64> = [1e-2, 1e-4, 1e-6]
            .iter()
            .map(|&delta| {
                let w = solve_l2(&p, delta, &SolverOptions { kkt_tol: 1e-12, ..tight() }).unwrap().weights;
                (w.w - &star.w).norm()
            })
            .collect();
        c.add(
            format!("{name}: errors {errs:?} decreasing, last <= 1e-3"),
            errs[0] > errs[1] && errs[1] > errs[2] && errs[2] <= 1e-3,
        );
    }
}

fn sensitivity_suite(c: &mut Check) {
    let mut used = 0;
    let mut worst = (0.0f64, 0.0f64);
    let mut psd_ok = true;
    let mut mw = 0.0f64;
    let mut hess_ok = true;
    let mut skipped = 0;
    for seed in 0..60u64 {
        if used == 10 {
            break;
        }
        let arch = if seed % 2 == 0 { Arch::Relu } else { Arch::Gated };
        let inst = network_instance(10, 2 + (seed as usize) % 2, 6, arch, 0.1, seed).unwrap();
        let p = inst.problem;
        let Ok(s) = solve(&p, &tight()) else {
            skipped += 1;
            continue;
        };
        let (w, _) = optimal_prune(&p, &s.weights).unwrap();
        let Ok(rho) = recover_dual(&p, &w) else {
            skipped += 1;
            continue;
        };
        let rep = jacobians(&p, &w, &rho).unwrap();
        if !(rep.minimal && rep.licq && rep.scs) || rep.active_blocks.is_empty() {
            skipped += 1;
            continue;
        }
        used += 1;
        let (fl, _) = fd_jacobian(&p, &w, FdTarget::Lambda, 1e-6).unwrap();
        let (fy, _) = fd_jacobian(&p, &w, FdTarget::Y, 1e-6).unwrap();
        let jl = rep.jacobian_lambda.clone().unwrap();
        let jl = DMatrix::from_column_slice(jl.len(), 1, jl.as_slice());
        worst.0 = worst.0.max(max_relative_error(&jl, &fl));
        worst.1 = worst.1.max(max_relative_error(rep.jacobian_y.as_ref().unwrap(), &fy));
        let m = projection_matrix(&p, &w);
        let (_, coords) = active_coordinates(&p, &w);
        let wa = DVector::from_iterator(coords.len(), coords.iter().map(|&i| w.w[i]));
        mw = mw.max((&m * &wa).amax() / wa.amax());
        let eig = m.clone().symmetric_eigen().eigenvalues.min();
        psd_ok &= eig >= -1e-12 * m.amax();
        hess_ok &= rep.hessian_min_eig > 0.0;
    }
    c.add(format!("10 minimal solutions with LICQ and SCS ({used} found, {skipped} skipped)"), used == 10);
    c.add(format!("FD relative error lambda {:.1e}, y {:.1e} <= 1e-4", worst.0, worst.1), worst.0.max(worst.1) <= 1e-4);
    c.add("M(w) positive semidefinite", psd_ok);
    c.add(format!("M(w) w = 0 (max relative {mw:.1e})"), mw <= 1e-14);
    c.add("reduced Hessian positive definite", hess_ok);
}

fn tuning(c: &mut Check) {
    let (p, w) = fixtures::group_dependent(8, 2, 5, 2, 0.5, 3).unwrap();
    let rho = recover_dual(&p, &w).unwrap();
    let desc = describe_set(&p, &w, &rho).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let held = |rng: &mut ChaCha8Rng, rows: usize| {
        let x = DMatrix::from_fn(rows, p.d(), |_, _| rng.random_range(-1.0..1.0));
        let planted = &sample_solutions(&desc, 1, rng.random())[0];
        let y = &x * &planted.w + DVector::from_fn(rows, |_, _| 0.05 * rng.random_range(-1.0..1.0));
        (x, y)
    };
    let (xv, yv) = held(&mut rng, 30);
    let (xt, yt) = held(&mut rng, 30);
    let picks = [
        min_norm(&desc).unwrap(),
        max_norm_approx(&desc).unwrap(),
        tune_over_set(&desc, &xv, &yv).unwrap(),
        tune_over_set(&desc, &xt, &yt).unwrap(),
    ];
    let mse: Vec<f64> = picks.iter().map(|w| (&xt * &w.w - &yt).norm_squared() / yt.len() as f64).collect();
    let objs: Vec<f64> = picks.iter().map(|w| objective(&p, w).unwrap()).collect();
    let spread = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
    c.add(format!("test-tuned MSE {:.4e} <= min-norm MSE {:.4e}", mse[3], mse[0]), mse[3] <= mse[0]);
    c.add(format!("max diff of test MSE {:.3e} > 0", spread(&mse)), spread(&mse) > 0.0);
    c.add(format!("training objectives agree (spread {:.1e})", spread(&objs)), spread(&objs) <= 1e-8);
}

/// Masks at `u = 0`, at both perpendiculars of each row, and between consecutive critical angles.
fn sweep_oracle(z: &DMatrix<f64>) -> usize {
    let mut dirs = vec![DVector::zeros(2)];
    let mut angles = Vec::new();
    for i in 0..z.nrows() {
        let (a, b) = (z[(i, 0)], z[(i, 1)]);
        if a == 0.0 && b == 0.0 {
            continue;
        }
        for u in [DVector::from_vec(vec![-b, a]), DVector::from_vec(vec![b, -a])] {
            angles.push(u[1].atan2(u[0]));
            dirs.push(u);
        }
    }
    angles.sort_by(f64::total_cmp);
    for k in 0..angles.len() {
        let next = if k + 1 < angles.len() { angles[k + 1] } else { angles[0] + std::f64::consts::TAU };
        // Collinear rows give critical angles that differ only by rounding.
        if next - angles[k] < 1e-9 {
            continue;
        }
        let mid = 0.5 * (angles[k] + next);
        dirs.push(DVector::from_vec(vec![mid.cos(), mid.sin()]));
    }
    if angles.is_empty() {
        dirs.push(DVector::from_vec(vec![1.0, 0.0]));
    }
    let mut masks: Vec<Vec<bool>> = dirs.iter().map(|u| mask_of(z, u)).collect();
    masks.sort();
    masks.dedup();
    masks.len()
}

fn census(c: &mut Check) {
    let mut bad = Vec::new();
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 5 + (seed as usize) % 4;
        let b = [rng.random_range(1..4) as f64, rng.random_range(-3..4) as f64];
        // Small integers keep every product exact, so collinear rows hit their hyperplanes exactly.
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-3..=3) as f64).collect();
        let rank1 = DMatrix::from_fn(n, 2, |i, j| a[i] * b[j]);
        let gauss = fixtures::gaussian(n, 2, 0.0, seed).unwrap().0;
        for (kind, z) in [("rank-1", rank1), ("2-D", gauss)] {
            let ps = enumerate_patterns(&z, PatternMode::Exhaustive).unwrap();
            let oracle = sweep_oracle(&z);
            let r = ps.rank_of_z;
            let bound = arrangement_bound(n, r);
            let manual: u128 = 2 * (0..r as u128)
                .map(|k| (0..k).fold(1u128, |acc, j| acc * (n as u128 - 1 - j) / (j + 1)))
                .sum::<u128>();
            if ps.len() != oracle || ps.cell_bound != manual || bound != manual || ps.cell_count as u128 > manual {
                bad.push(format!(
                    "seed {seed} {kind}: count {} oracle {oracle} cells {} bound {} manual {manual}",
                    ps.len(),
                    ps.cell_count,
                    ps.cell_bound
                ));
            }
        }
    }
    c.add(format!("5 rank-1 and 5 2-D instances match the sweep oracle and the cell bound ({bad:?})"), bad.is_empty());
}

fn main() {
    let criteria: [(&str, fn(&mut Check)); 10] = [
        ("KKT certification suite", kkt_suite),
        ("model-fit uniqueness across initializations", fit_uniqueness),
        ("min-norm interpolation fixture", min_norm_interp),
        ("one-neuron path fixture", one_neuron),
        ("1-D lasso reduction", one_d),
        ("pruning exactness", pruning),
        ("min-norm convergence of the ridge path", l2_convergence),
        ("sensitivity Jacobians", sensitivity_suite),
        ("optimal-set tuning", tuning),
        ("pattern census", census),
    ];
    let start = Instant::now();
    let mut unexpected = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        let t = Instant::now();
        let mut c = Check::default();
        run(&mut c);
        let ok = c.ok();
        let expected_fail = EXPECTED_FAIL.contains(&id);
        let tag = match (ok, expected_fail) {
            (true, false) => "PASS",
            (false, true) => "FAIL (expected, documented conflict)",
            (true, true) => "PASS (unexpected: listed as expected failure)",
            (false, false) => "FAIL",
        };
        println!("criterion {id:>2} {tag}: {name} [{:.1}s]", t.elapsed().as_secs_f64());
        for (item, ok) in &c.items {
            println!("    [{}] {item}", if *ok { "ok" } else { "x" });
        }
        if ok == expected_fail {
            unexpected.push(id);
        }
    }
    println!("acceptance finished in {:.1}s", start.elapsed().as_secs_f64());
    if !unexpected.is_empty() {
        println!("unexpected outcomes: {unexpected:?}");
        std::process::exit(1);
    }
}
