//! Jordan chains of the Bergman adjoint at a few points of the disk.

use shiftlab::operator::jordan_chain;
use shiftlab::weights::WeightSequence;
use shiftlab::Complex64;

fn main() -> shiftlab::Result<()> {
    let w = WeightSequence::Bergman;
    for lambda in [Complex64::new(0.3, 0.0), Complex64::new(0.0, 0.5), Complex64::new(-0.6, 0.0)] {
        let chain = jordan_chain(&w, lambda, 3, 400)?;
        print!("lambda = {lambda}:");
        for k in 0..chain.len() {
            print!("  |f{}|^2 = {:.6} (residual {:.1e})", k + 1, chain.norm_sqr(k), chain.residuals[k]);
        }
        println!("  tail <= {:.1e}", chain.tail_bound);
    }
    Ok(())
}
