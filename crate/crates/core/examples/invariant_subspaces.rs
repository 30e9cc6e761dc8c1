//! Invariance and relative index of subspaces of a shift window, and the
//! kernel of p(T*) on a square truncation.

use shiftlab::operator::{adjoint_window, shift_window};
use shiftlab::polynomial::Polynomial;
use shiftlab::subspace::{gram_schmidt_projection, is_invariant, kernel_of_polynomial, rel_index, SubspaceBasis};
use shiftlab::weights::WeightSequence;
use shiftlab::Complex64;

fn main() -> shiftlab::Result<()> {
    let n = 128;
    let zeros = [Complex64::new(0.5, 0.2), Complex64::new(-0.3, -0.6)];
    let t = shift_window(&WeightSequence::Unweighted, n)?;
    let m_in = SubspaceBasis::vanishing_polynomials(&zeros, n)?;
    let m_out = SubspaceBasis::vanishing_polynomials(&zeros, n + 1)?;
    let (_, p) = gram_schmidt_projection(&m_in)?;
    let inv = is_invariant(&t, &p, 1e-10)?;
    let idx = rel_index(&t, &m_in, &m_out, 1e-8)?;
    println!("invariant: {} (defect {:.1e})", inv.invariant, inv.defect);
    println!("relative index {} (gap {:.1e})", idx.index, idx.gap);

    let a = adjoint_window(&WeightSequence::Bergman, 200)?.compress_square();
    let poly = Polynomial::from_roots(&[Complex64::new(0.3, 0.0), Complex64::new(-0.4, 0.0)]);
    let (k, _) = kernel_of_polynomial(&a, &poly, 1e-8)?;
    println!("dim ker p(T*) on the truncation: {}", k.len());
    Ok(())
}
