//! Relative index of a zero-based subspace under weight jitter.

use shiftlab::stability::{semicontinuity_run, PerturbationKind, PerturbationPlan, SemicontinuitySetup};
use shiftlab::weights::WeightSequence;
use shiftlab::Complex64;

fn main() -> shiftlab::Result<()> {
    let setup = SemicontinuitySetup {
        blocks: 1,
        n: 64,
        zeros: vec![Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.5)],
        trials: 50,
        tol: 1e-8,
    };
    let plan = PerturbationPlan::halving(PerturbationKind::WeightJitter, 10, 7);
    let report = semicontinuity_run(&WeightSequence::Unweighted, &setup, &plan)?;
    println!("{}", report.to_json()?);
    Ok(())
}
