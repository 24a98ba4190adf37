//! Describe the full solution set of a group lasso with dependent block fits,
//! decide uniqueness and draw a few other optimal points.
//!
//! cargo run --release --example optimal_set

use relu_optset::fixtures::group_dependent;
use relu_optset::objective;
use relu_optset::optimal_set::{contains, describe_set, is_unique, recover_dual, sample_solutions};

fn main() -> relu_optset::Result<()> {
    // Four blocks whose fits all live in a 2-dimensional subspace.
    let (problem, w) = group_dependent(8, 2, 4, 2, 0.5, 7)?;
    let rho = recover_dual(&problem, &w)?;
    let desc = describe_set(&problem, &w, &rho)?;
    println!("equicorrelation set  {:?}", desc.equicorrelation);
    println!("support              {:?} (certified {})", desc.support, desc.support_certified);
    println!("shared fit norm      {:.6}", desc.y_hat.norm());

    let cert = is_unique(&problem, &w, &rho)?;
    println!("verdict              {:?} (sigma_min {:.2e})", cert.verdict, cert.sigma_min);

    let f0 = objective(&problem, &w)?;
    for (i, s) in sample_solutions(&desc, 3, 11).iter().enumerate() {
        let m = contains(&desc, s, 1e-8);
        println!(
            "sample {i}: objective gap {:.1e}, distance {:.3}, member {}",
            objective(&problem, s)? - f0,
            (&s.w - &w.w).norm(),
            m.member
        );
    }
    Ok(())
}
