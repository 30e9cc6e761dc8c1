//! Index of the shift on subspaces of polynomials vanishing on random zero sets.

use shiftlab::stability::{beurling_index_sweep, random_zero_sets};

fn main() -> shiftlab::Result<()> {
    let sets = random_zero_sets(20, 11, 1e-2);
    let report = beurling_index_sweep(&sets, 128, 1e-8)?;
    for (set, step) in sets.iter().zip(&report.per_step) {
        println!("{} zeros  index {}  gap {:.1e}", set.len(), step.metrics["index"], step.metrics["gap"]);
    }
    println!("verdict {:?}", report.verdict);
    Ok(())
}
