//! Prune a solution down to a minimal one without changing the objective,
//! then prune a ReLU network past minimality and compare scoring rules.
//!
//! cargo run --release --example pruning

use relu_optset::fixtures::{group_dependent, network_instance};
use relu_optset::pruning::{approximate_prune_relu, is_minimal, optimal_prune, PruneOptions, PruneScore};
use relu_optset::reformulation::{convex_to_relu, split_relu_weights, Arch};
use relu_optset::{objective, solve, SolverOptions};

fn main() -> relu_optset::Result<()> {
    let (p, w) = group_dependent(9, 2, 5, 2, 0.5, 3)?;
    let (pruned, trace) = optimal_prune(&p, &w)?;
    println!("exact pruning: {} -> {} active blocks", trace.initial_support, trace.final_support);
    println!("  objective before {:.12}  after {:.12}", objective(&p, &w)?, objective(&p, &pruned)?);
    println!("  minimal {}", is_minimal(&p, &pruned).minimal);

    let inst = network_instance(20, 2, 12, Arch::Relu, 0.02, 5)?;
    let s = solve(&inst.problem, &SolverOptions::default())?;
    let (v, u) = split_relu_weights(&inst.problem, &s.weights)?;
    let net = convex_to_relu(&v, &u)?;
    println!("relu network with {} active neurons", net.active_width());
    for options in [PruneOptions::optimal_ls(), PruneOptions::baseline(PruneScore::Magnitude)] {
        let label = options.label();
        let (_, rounds) = approximate_prune_relu(&inst.z, &inst.y, &net, 2, options, None)?;
        let last = rounds.last().expect("at least one round");
        println!("  {label:<12} width {} train mse {:.4e}", last.active_width, last.train_mse);
    }
    Ok(())
}
