//! Enumerate activation patterns of a data matrix and compare with the
//! region count of its hyperplane arrangement.
//!
//! cargo run --release --example pattern_census

use relu_optset::fixtures::gaussian;
use relu_optset::reformulation::{enumerate_patterns, mask_to_string, PatternMode};

fn main() -> relu_optset::Result<()> {
    for (n, d) in [(6, 1), (6, 2), (8, 3)] {
        let (z, _) = gaussian(n, d, 0.0, 9)?;
        let ps = enumerate_patterns(&z, PatternMode::Exhaustive)?;
        println!(
            "n {n} d {d}: {} patterns, {} open cells, region bound {}",
            ps.patterns.len(),
            ps.cell_count,
            ps.cell_bound
        );
        let sampled = enumerate_patterns(&z, PatternMode::Sampled { count: 50, seed: 1 })?;
        println!("  50 random gates found {} distinct patterns", sampled.patterns.len());
        if d == 1 {
            for m in &ps.patterns {
                println!("  {}", mask_to_string(m));
            }
        }
    }
    Ok(())
}
