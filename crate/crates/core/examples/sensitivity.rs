//! Differentiate a minimal solution with respect to lambda and the targets,
//! and compare against finite differences.
//!
//! cargo run --release --example sensitivity

use relu_optset::fixtures::network_instance;
use relu_optset::optimal_set::recover_dual;
use relu_optset::pruning::optimal_prune;
use relu_optset::reformulation::Arch;
use relu_optset::sensitivity::{fd_jacobian, jacobians, max_relative_error, FdTarget};
use relu_optset::{solve, SolverOptions};

fn main() -> relu_optset::Result<()> {
    let inst = network_instance(10, 2, 6, Arch::Gated, 0.2, 2)?;
    let p = &inst.problem;
    let opts = SolverOptions { kkt_tol: 1e-10, ..SolverOptions::default() };
    let s = solve(p, &opts)?;
    // Jacobians exist at minimal solutions; prune first.
    let (w, _) = optimal_prune(p, &s.weights)?;
    let rho = recover_dual(p, &w)?;
    let rep = jacobians(p, &w, &rho)?;
    println!("active blocks {:?}  licq {}  scs {}  minimal {}", rep.active_blocks, rep.licq, rep.scs, rep.minimal);
    println!("cond(D) {:.3e}  reduced hessian min eig {:.3e}", rep.d_condition, rep.hessian_min_eig);
    let Some(jl) = rep.jacobian_lambda.clone() else {
        println!("not differentiable here: {}", rep.note);
        return Ok(());
    };
    let (fd, _) = fd_jacobian(p, &w, FdTarget::Lambda, 1e-6)?;
    let jl = nalgebra::DMatrix::from_column_slice(jl.len(), 1, jl.as_slice());
    println!("dw/dlambda relative error vs finite differences {:.2e}", max_relative_error(&jl, &fd));
    if let Some(jy) = &rep.jacobian_y {
        let (fd, _) = fd_jacobian(p, &w, FdTarget::Y, 1e-6)?;
        println!("dw/dy      relative error vs finite differences {:.2e}", max_relative_error(jy, &fd));
    }
    Ok(())
}
