//! Classify the preset weights and print their radius estimates.

use shiftlab::weights::{classify, radius_estimates, WeightSequence};

fn main() -> shiftlab::Result<()> {
    for w in [
        WeightSequence::Unweighted,
        WeightSequence::Bergman,
        WeightSequence::QuasianalyticSqrt,
    ] {
        let c = classify(&w, 4096)?;
        let r = radius_estimates(&w, 4096)?;
        println!(
            "{:<20} {:?}  slope {:.3}  shields {}  r_point {:.4}  r0 {:.4}",
            w.label(),
            c.divergence_verdict,
            c.growth_slope.unwrap_or(f64::NAN),
            c.shields_hypotheses_met,
            r.r_point,
            r.r0
        );
    }
    Ok(())
}
