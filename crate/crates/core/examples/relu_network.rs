//! Train a two-layer ReLU network through its convex reformulation, map the
//! solution back to network weights and pick among optimal networks by
//! validation error.
//!
//! cargo run --release --example relu_network

use relu_optset::fixtures::gaussian;
use relu_optset::optimal_set::{describe_set, min_norm, sample_solutions};
use relu_optset::reformulation::{
    build_cgl, convex_to_relu, enumerate_patterns, network_objective, predict, split_relu_weights, Arch,
    PatternMode,
};
use relu_optset::{objective, solve, SolverOptions, Weights};

fn main() -> relu_optset::Result<()> {
    let (z, y) = gaussian(18, 2, 0.1, 12)?;
    let (ztr, ytr) = (z.rows(0, 12).into_owned(), y.rows(0, 12).into_owned());
    let (zva, yva) = (z.rows(12, 6).into_owned(), y.rows(12, 6).into_owned());

    let patterns = enumerate_patterns(&ztr, PatternMode::Exhaustive)?;
    let probe = build_cgl(&ztr, &ytr, &patterns, 1.0, Arch::Relu)?;
    let lambda = 0.1 * probe.lambda_max_unconstrained();
    let p = build_cgl(&ztr, &ytr, &patterns, lambda, Arch::Relu)?;
    println!("{} patterns, {} convex variables, lambda {lambda:.4}", patterns.patterns.len(), p.d());

    let s = solve(&p, &SolverOptions::default())?;
    let to_net = |w: &Weights| -> relu_optset::Result<_> {
        let (v, u) = split_relu_weights(&p, w)?;
        convex_to_relu(&v, &u)
    };
    let net = to_net(&s.weights)?;
    println!("convex objective {:.8}", objective(&p, &s.weights)?);
    println!("network objective {:.8} with {} neurons", network_objective(&net, &ztr, &ytr, lambda)?, net.active_width());

    let desc = describe_set(&p, &s.weights, &s.dual)?;
    // Validation error of a convex solution through the shared activation patterns.
    let val_mse = |w: &Weights| -> relu_optset::Result<f64> {
        Ok((predict(&to_net(w)?, &zva)? - &yva).norm_squared() / yva.len() as f64)
    };
    println!("validation mse: solver {:.5}", val_mse(&s.weights)?);
    println!("validation mse: min-norm {:.5}", val_mse(&min_norm(&desc)?)?);
    let mut best = (val_mse(&s.weights)?, "solver".to_string());
    for (k, w) in sample_solutions(&desc, 16, 3).iter().enumerate() {
        let m = val_mse(w)?;
        if m < best.0 {
            best = (m, format!("sample {k}"));
        }
    }
    println!("validation mse: best of 16 optimal samples {:.5} ({})", best.0, best.1);
    Ok(())
}
