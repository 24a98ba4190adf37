//! Pick distinguished points of a non-singleton optimal set and watch the
//! minimum-norm solution approach the minimum-norm interpolator as lambda shrinks.
//!
//! cargo run --release --example min_norm

use relu_optset::fixtures::{duplicate, min_norm_interp};
use relu_optset::optimal_set::{describe_set, max_norm_approx, min_norm, recover_dual};
use relu_optset::{solve, SolverOptions};

fn main() -> relu_optset::Result<()> {
    // Two identical columns: every split of the weight between them is optimal.
    let (p, w) = duplicate();
    let rho = recover_dual(&p, &w)?;
    let desc = describe_set(&p, &w, &rho)?;
    println!("duplicate columns:");
    println!("  min-norm  {:?}", min_norm(&desc)?.w.as_slice());
    println!("  max-norm  {:?}", max_norm_approx(&desc)?.w.as_slice());

    let opts = SolverOptions { kkt_tol: 1e-10, max_iters: 200_000, ..SolverOptions::default() };
    println!("under-determined interpolation:");
    for lambda in [1e-1, 1e-2, 1e-3, 1e-4] {
        let p = min_norm_interp(lambda)?;
        let s = solve(&p, &opts)?;
        let desc = describe_set(&p, &s.weights, &s.dual)?;
        let m = min_norm(&desc)?;
        println!("  lambda {lambda:.0e}  group norm {:.8}", m.group_norm(p.partition()));
    }
    Ok(())
}
