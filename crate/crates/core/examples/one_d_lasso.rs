//! Fit a scalar-input ReLU network as a lasso over data-point breakpoints
//! and check whether the lasso has a unique solution.
//!
//! cargo run --release --example one_d_lasso

use nalgebra::{DMatrix, DVector};
use relu_optset::optimal_set::{is_unique, lasso_general_position, recover_dual};
use relu_optset::reformulation::{one_d_lasso_build, one_d_lasso_to_network, predict};
use relu_optset::{solve, SolverOptions};

fn main() -> relu_optset::Result<()> {
    let z = [0.0, 0.7, 1.5, 2.0, 3.1];
    let y = DVector::from_vec(vec![0.0, 0.9, 0.2, 0.6, -0.4]);
    let lasso = one_d_lasso_build(&z, &y, 0.05)?;
    println!("design matrix ({} x {})", lasso.a.nrows(), lasso.a.ncols());
    println!("columns in general position: {}", lasso_general_position(&lasso.a)?);

    let s = solve(&lasso.centered, &SolverOptions { kkt_tol: 1e-10, ..SolverOptions::default() })?;
    let v = s.weights.w.clone();
    let rho = recover_dual(&lasso.centered, &s.weights)?;
    println!("uniqueness: {:?}", is_unique(&lasso.centered, &s.weights, &rho)?.verdict);

    let net = one_d_lasso_to_network(&v, lasso.intercept(&v), &z)?;
    println!("network width {}", net.active_width());
    let grid: Vec<f64> = (0..=8).map(|k| -0.5 + 4.0 * k as f64 / 8.0).collect();
    let f = predict(&net, &DMatrix::from_column_slice(grid.len(), 1, &grid))?;
    for (t, v) in grid.iter().zip(f.iter()) {
        println!("  f({t:+.2}) = {v:+.4}");
    }
    Ok(())
}
