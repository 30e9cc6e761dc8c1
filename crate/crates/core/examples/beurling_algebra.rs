//! Weighted coefficient norms, products, division by z - 1 and the algebra
//! constant.

use shiftlab::beurling::{
    algebra_constant, beurling_norm, check_wa_batch, check_wc_batch, divide_by_z_minus_1, multiply,
    AlgebraKernel, CoefficientSeries,
};
use shiftlab::weights::WeightSequence;

fn main() -> shiftlab::Result<()> {
    let w = WeightSequence::power(1.0, 1024);
    let g = CoefficientSeries::from_real(&[-2.0, 1.0, 1.0]);
    let f = divide_by_z_minus_1(&g);
    println!("(z^2 + z - 2)/(z - 1) = {:?}", f.coeffs());
    println!("|f| = {:.6}", beurling_norm(&f, &w)?);
    println!("(z - 1) f = {:?}", multiply(&CoefficientSeries::z_minus_one(), &f).coeffs());

    let a = algebra_constant(AlgebraKernel::Displayed, 2000)?;
    println!("displayed kernel: running max {:.6} at N = 2000", a.constant);

    let p = CoefficientSeries::z_minus_one();
    for d in [16, 32, 64] {
        let wa = check_wa_batch(&p, &w, 500, d, 3)?;
        let wc = check_wc_batch(&WeightSequence::power(3.0, 1024), 500, d, 5)?;
        println!("degree {d:>3}: max wa ratio {wa:.4}  min wc ratio {:.4}", wc.ratio);
    }
    Ok(())
}
