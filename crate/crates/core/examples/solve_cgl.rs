//! Solve a small constrained group lasso and print its KKT certificate.
//!
//! cargo run --release --example solve_cgl

use nalgebra::{DMatrix, DVector};
use relu_optset::{kkt_report, solve, BlockPartition, CglProblem, SolverOptions};

fn main() -> relu_optset::Result<()> {
    let x = DMatrix::from_row_slice(4, 4, &[
        1.0, 0.2, 0.0, 0.5,
        0.0, 1.0, 0.3, 0.1,
        0.4, 0.0, 1.0, 0.0,
        0.1, 0.6, 0.2, 1.0,
    ]);
    let y = DVector::from_vec(vec![1.0, -0.5, 0.8, 0.3]);
    let part = BlockPartition::contiguous(&[2, 2])?;
    // The second block is restricted to the cone {w : K^T w <= 0}.
    let k2 = DMatrix::from_row_slice(2, 1, &[-1.0, 0.0]);
    let problem = CglProblem::new(x, y, part, vec![None, Some(k2)], 0.2)?;

    let sol = solve(&problem, &SolverOptions::default())?;
    println!("objective   {:.10}", sol.objective);
    println!("iterations  {}", sol.iterations);
    println!("weights     {:?}", sol.weights.w.as_slice());
    println!("active      {:?}", sol.report.active);

    let rep = kkt_report(&problem, &sol.weights, &sol.dual, 1e-8)?;
    println!(
        "kkt         stationarity {:.1e}  feasibility {:.1e}  slackness {:.1e}  satisfied {}",
        rep.stationarity_violation, rep.feasibility_violation, rep.slackness_violation, rep.satisfied
    );
    Ok(())
}
