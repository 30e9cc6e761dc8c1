//! Rebuild an invariant subspace of the Bergman adjoint from dense random
//! perturbations of shrinking size.

use shiftlab::stability::{norm_stability_run, NormStabilityConfig, PerturbationKind, PerturbationPlan};
use shiftlab::weights::WeightSequence;
use shiftlab::Complex64;

fn main() -> shiftlab::Result<()> {
    let plan = PerturbationPlan::decades(PerturbationKind::DenseRandom, 5, 42);
    let cfg = NormStabilityConfig {
        roots: vec![Complex64::new(0.3, 0.0), Complex64::new(-0.4, 0.0)],
        n: 200,
        tol: 1e-8,
        trial: 0,
    };
    let report = norm_stability_run(&WeightSequence::Bergman, &plan, &cfg)?;
    for step in &report.per_step {
        println!("eps {:.0e}  distance {:.3e}", step.epsilon.unwrap_or(f64::NAN), step.metrics["distance"]);
    }
    println!("slope {:?}, verdict {:?}", report.fitted_slope, report.verdict);
    Ok(())
}
