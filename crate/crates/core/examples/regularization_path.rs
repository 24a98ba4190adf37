//! Trace fits along a lambda grid and locate discontinuities, first on a
//! single-neuron problem with a closed form, then on a gated network.
//!
//! cargo run --release --example regularization_path

use relu_optset::fixtures::{network_instance, one_neuron};
use relu_optset::optimal_set::path::{one_neuron_solution, trace_cgl_path, trace_one_neuron};
use relu_optset::reformulation::Arch;
use relu_optset::SolverOptions;

fn main() -> relu_optset::Result<()> {
    let (x, y) = one_neuron();
    let grid: Vec<f64> = (0..200).map(|k| 100.0 - 99.5 * k as f64 / 199.0).collect();
    let report = trace_one_neuron(&x, &y, &grid)?;
    println!("one neuron: jumps at {:?}", report.jump_locations());
    for lambda in [20.0, 10.0, 5.0, 1.0] {
        let pt = one_neuron_solution(&x, &y, lambda)?;
        println!("  lambda {lambda:>5}: v {:+.4}  gamma {:+.0}  objective {:.4}", pt.v, pt.gamma, pt.objective);
    }

    let inst = network_instance(12, 2, 8, Arch::Gated, 1.0, 4)?;
    let top = inst.problem.lambda_max_unconstrained();
    let grid: Vec<f64> = (0..12).map(|k| top * 0.7f64.powi(k)).collect();
    let report = trace_cgl_path(&inst.problem, &grid, &SolverOptions::default())?;
    println!("gated network path:");
    for row in &report.rows {
        println!("  lambda {:.4e}  support {:>2}  fit norm {:.4}", row.lambda, row.support_size, row.fit_norm);
    }
    println!("  jumps {:?}", report.jump_locations());
    Ok(())
}
