//! Finitely supported power series measured in weighted coefficient norms
//! `‖f‖² = Σ |f̂(n)|² ω(n)²`, with the inequalities that make such spaces
//! Banach algebras checked on concrete and random inputs.

use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{ONE, ZERO};
use crate::weights::{increasing_on, ShiftedWeight, Weight};

/// Coefficients `f̂(0..=d)` of a polynomial. Trailing zeros are trimmed, so
/// the zero series has no coefficients and no degree.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoefficientSeries {
    coeffs: Vec<Complex64>,
}

impl CoefficientSeries {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last() == Some(&ZERO) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self { coeffs: vec![ONE] }
    }

    /// `z^n`.
    pub fn monomial(n: usize) -> Self {
        let mut coeffs = vec![ZERO; n + 1];
        coeffs[n] = ONE;
        Self { coeffs }
    }

    /// `z − 1`.
    pub fn z_minus_one() -> Self {
        Self::from_real(&[-1.0, 1.0])
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `None` for the zero series.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, n: usize) -> Complex64 {
        self.coeffs.get(n).copied().unwrap_or(ZERO)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// `f′`, with coefficients `(n+1) f̂(n+1)`.
    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(n, &c)| c * n as f64)
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..len).map(|n| self.coeff(n) + other.coeff(n)).collect())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Uniform coefficients in the square `[−1,1] + i[−1,1]`, degree uniform
    /// in `0..=max_degree`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_degree: usize) -> Self {
        let d = rng.random_range(0..=max_degree);
        loop {
            let coeffs: Vec<Complex64> = (0..=d)
                .map(|_| Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
                .collect();
            let f = Self::new(coeffs);
            if !f.is_zero() {
                return f;
            }
        }
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

impl Serialize for CoefficientSeries {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.coeffs.iter().map(|c| [c.re, c.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoefficientSeries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(Self::new(
            pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect(),
        ))
    }
}

pub fn beurling_norm<W: Weight + ?Sized>(f: &CoefficientSeries, w: &W) -> Result<f64> {
    let mut sum = 0.0;
    for (n, c) in f.coeffs.iter().enumerate() {
        let wn = w.value(n)?;
        sum += c.norm_sqr() * wn * wn;
    }
    Ok(sum.sqrt())
}

/// Cauchy product.
pub fn multiply(f: &CoefficientSeries, g: &CoefficientSeries) -> CoefficientSeries {
    if f.is_zero() || g.is_zero() {
        return CoefficientSeries::zero();
    }
    let mut out = vec![ZERO; f.coeffs.len() + g.coeffs.len() - 1];
    for (i, &a) in f.coeffs.iter().enumerate() {
        for (j, &b) in g.coeffs.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    CoefficientSeries::new(out)
}

/// `f = (g − g(1))/(z − 1)`, i.e. `f̂(k) = Σ_{n>k} ĝ(n)`.
pub fn divide_by_z_minus_1(g: &CoefficientSeries) -> CoefficientSeries {
    let n = g.coeffs.len();
    if n <= 1 {
        return CoefficientSeries::zero();
    }
    let mut f = vec![ZERO; n - 1];
    let mut acc = ZERO;
    for k in (0..n - 1).rev() {
        acc += g.coeffs[k + 1];
        f[k] = acc;
    }
    CoefficientSeries::new(f)
}

/// Which summand the algebra constant is built from.
#[derive(Clone, Copy)]
pub enum AlgebraKernel<'a> {
    /// `(ω(n)/(ω(k)ω(n−k)))²`.
    Weight(&'a dyn Weight),
    /// `(n+1)²/((k+1)²(n−k+1)²)`.
    Displayed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgebraConstant {
    /// Kernel sum at each `n ≤ N`.
    pub sums: Vec<f64>,
    /// Running maximum of `sums`.
    pub running_max: Vec<f64>,
    pub constant: f64,
    /// The sums still grow like a power of `n` at the end of the range.
    pub unbounded_trend: bool,
}

/// Growth of the kernel sum between `N/2` and `N` above which it is reported
/// as unbounded.
const UNBOUNDED_GROWTH: f64 = 1.25;

/// `max_{n ≤ N} Σ_{k ≤ n} kernel(n, k)`, the square of the constant in
/// `‖fg‖ ≤ C‖f‖‖g‖` obtained by Cauchy–Schwarz.
pub fn algebra_constant(kernel: AlgebraKernel<'_>, n_max: usize) -> Result<AlgebraConstant> {
    if n_max < 1 {
        return Err(Error::Precondition("N must be at least 1".into()));
    }
    let sums: Vec<f64> = match kernel {
        AlgebraKernel::Displayed => (0..=n_max)
            .into_par_iter()
            .map(|n| {
                let top = (n + 1) as f64;
                (0..=n)
                    .map(|k| {
                        let r = top / (((k + 1) * (n - k + 1)) as f64);
                        r * r
                    })
                    .sum()
            })
            .collect(),
        AlgebraKernel::Weight(w) => {
            let omega = (0..=n_max).map(|n| w.value(n)).collect::<Result<Vec<f64>>>()?;
            (0..=n_max)
                .into_par_iter()
                .map(|n| {
                    (0..=n)
                        .map(|k| {
                            let r = omega[n] / (omega[k] * omega[n - k]);
                            r * r
                        })
                        .sum()
                })
                .collect()
        }
    };
    let running_max: Vec<f64> = sums
        .iter()
        .scan(f64::NEG_INFINITY, |m, &s| {
            *m = m.max(s);
            Some(*m)
        })
        .collect();
    let constant = *running_max.last().expect("n_max >= 1");
    let unbounded_trend = sums[n_max] >= UNBOUNDED_GROWTH * sums[n_max / 2];
    Ok(AlgebraConstant {
        sums,
        running_max,
        constant,
        unbounded_trend,
    })
}

/// `‖p f₁ f₂‖ / (‖p f₁‖ ‖p f₂‖)`.
pub fn check_wa<W: Weight + ?Sized>(
    p: &CoefficientSeries,
    f1: &CoefficientSeries,
    f2: &CoefficientSeries,
    w: &W,
) -> Result<f64> {
    let pf1 = multiply(p, f1);
    let pf2 = multiply(p, f2);
    let denom = beurling_norm(&pf1, w)? * beurling_norm(&pf2, w)?;
    if denom == 0.0 {
        return Err(Error::Precondition("p·f₁ and p·f₂ must be nonzero".into()));
    }
    Ok(beurling_norm(&multiply(&pf1, f2), w)? / denom)
}

fn sample_rng(seed: u64, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample as u64);
    rng
}

/// Largest [`check_wa`] ratio over `samples` random pairs of degree
/// `≤ max_degree`.
pub fn check_wa_batch<W: Weight + Sync + ?Sized>(
    p: &CoefficientSeries,
    w: &W,
    samples: usize,
    max_degree: usize,
    seed: u64,
) -> Result<f64> {
    let ratios = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let f1 = CoefficientSeries::random(&mut rng, max_degree);
            let f2 = CoefficientSeries::random(&mut rng, max_degree);
            check_wa(p, &f1, &f2, w)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WcCheck {
    pub ratio: f64,
    /// Set when `ω₂(n) = ω(n)(n+1)^{−2}` fails to increase on the checked tail.
    pub warning: Option<String>,
}

/// Tail on which `ω₂` is required to increase for inputs of degree `d`.
fn omega2_tail(d: usize) -> (usize, usize) {
    let top = (d + 1).max(64);
    (top / 2, top)
}

fn omega2_warning<W: Weight + ?Sized>(w: &W, d: usize) -> Result<Option<String>> {
    let (from, to) = omega2_tail(d);
    let omega2 = ShiftedWeight::new(w, 2.0);
    Ok(if increasing_on(&omega2, from, to)? {
        None
    } else {
        Some(format!(
            "omega(n)(n+1)^-2 is not increasing on [{from}, {to}]; the lower bound is not expected"
        ))
    })
}

fn wc_ratio<W: Weight + ?Sized>(f: &CoefficientSeries, w: &W) -> Result<f64> {
    if f.is_zero() {
        return Err(Error::ZeroVector);
    }
    let lhs = beurling_norm(&multiply(&CoefficientSeries::z_minus_one(), f), w)?;
    let rhs = beurling_norm(f, &ShiftedWeight::new(w, 1.0))?;
    Ok(lhs / rhs)
}

/// `‖(z−1)f‖_ω / ‖f‖_{ω₁}`.
pub fn check_wc<W: Weight + ?Sized>(f: &CoefficientSeries, w: &W) -> Result<WcCheck> {
    let ratio = wc_ratio(f, w)?;
    let warning = omega2_warning(w, f.degree().unwrap_or(0) + 1)?;
    Ok(WcCheck { ratio, warning })
}

/// Smallest [`check_wc`] ratio over `samples` random series of degree
/// `≤ max_degree`.
pub fn check_wc_batch<W: Weight + Sync + ?Sized>(
    w: &W,
    samples: usize,
    max_degree: usize,
    seed: u64,
) -> Result<WcCheck> {
    let ratios = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            wc_ratio(&CoefficientSeries::random(&mut rng, max_degree), w)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(WcCheck {
        ratio: ratios.into_iter().fold(f64::INFINITY, f64::min),
        warning: omega2_warning(w, max_degree + 1)?,
    })
}

/// `(‖f‖_ω, |f(0)| + ‖f′‖_{ω₁})`.
pub fn derivative_equivalence_probe<W: Weight + ?Sized>(
    f: &CoefficientSeries,
    w: &W,
) -> Result<(f64, f64)> {
    if f.is_zero() {
        return Err(Error::ZeroVector);
    }
    let left = beurling_norm(f, w)?;
    let right = f.coeff(0).norm() + beurling_norm(&f.derivative(), &ShiftedWeight::new(w, 1.0))?;
    Ok((left, right))
}

/// Smallest and largest `left/right` ratio of
/// [`derivative_equivalence_probe`] over random series.
pub fn derivative_equivalence_batch<W: Weight + Sync + ?Sized>(
    w: &W,
    samples: usize,
    max_degree: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let ratios = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let (l, r) =
                derivative_equivalence_probe(&CoefficientSeries::random(&mut rng, max_degree), w)?;
            Ok(l / r)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ratios
        .into_iter()
        .fold((f64::INFINITY, 0.0), |(lo, hi), r| (lo.min(r), hi.max(r))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightSequence;
    use approx::assert_relative_eq;

    fn linear() -> WeightSequence {
        WeightSequence::power(1.0, 4096)
    }

    /// Closed form of the displayed kernel sum from the partial fractions
    /// `(n+1)/((k+1)(n−k+1)) = (n+1)/(n+2) · (1/(k+1) + 1/(n−k+1))`.
    fn displayed_sum_oracle(n: usize) -> f64 {
        let m = n + 1;
        let squares: f64 = (1..=m).map(|j| 1.0 / (j * j) as f64).sum();
        let harmonic: f64 = (1..=m).map(|j| 1.0 / j as f64).sum();
        let c = m as f64 / (m + 1) as f64;
        c * c * (2.0 * squares + 4.0 * harmonic / (m + 1) as f64)
    }

    #[test]
    fn norm_examples() {
        assert_eq!(beurling_norm(&CoefficientSeries::one(), &WeightSequence::Bergman).unwrap(), 1.0);
        assert_relative_eq!(
            beurling_norm(&CoefficientSeries::monomial(3), &WeightSequence::QuasianalyticSqrt).unwrap(),
            3f64.sqrt().exp(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            beurling_norm(&CoefficientSeries::from_real(&[1.0, 2.0]), &linear()).unwrap(),
            17f64.sqrt(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn shifted_norm() {
        // ω₁(n) = ω(n)/(n+1) = 1 for ω(n) = n+1
        let f = CoefficientSeries::from_real(&[3.0, 4.0]);
        let w = linear();
        assert_relative_eq!(beurling_norm(&f, &ShiftedWeight::new(&w, 1.0)).unwrap(), 5.0);
    }

    #[test]
    fn products() {
        let f = CoefficientSeries::from_real(&[1.0, -2.0, 0.5]);
        assert_eq!(multiply(&f, &CoefficientSeries::one()), f);
        let g = multiply(&CoefficientSeries::from_real(&[1.0, 1.0]), &CoefficientSeries::from_real(&[1.0, -1.0]));
        assert_eq!(g, CoefficientSeries::from_real(&[1.0, 0.0, -1.0]));
        let h = multiply(&CoefficientSeries::z_minus_one(), &CoefficientSeries::from_real(&[2.0, 1.0]));
        assert_eq!(h, CoefficientSeries::from_real(&[-2.0, 1.0, 1.0]));
        assert!(multiply(&f, &CoefficientSeries::zero()).is_zero());
        assert_eq!(CoefficientSeries::zero().degree(), None);
    }

    #[test]
    fn division_examples() {
        let g = CoefficientSeries::from_real(&[-2.0, 1.0, 1.0]);
        assert_eq!(divide_by_z_minus_1(&g), CoefficientSeries::from_real(&[2.0, 1.0]));
        assert!(divide_by_z_minus_1(&CoefficientSeries::one()).is_zero());
        assert_eq!(
            divide_by_z_minus_1(&CoefficientSeries::monomial(5)),
            CoefficientSeries::from_real(&[1.0; 5])
        );
    }

    #[test]
    fn displayed_kernel_prefix() {
        let a = algebra_constant(AlgebraKernel::Displayed, 2).unwrap();
        assert_eq!(a.running_max, vec![1.0, 2.0, 2.5625]);
    }

    #[test]
    fn displayed_kernel_matches_partial_fractions() {
        let a = algebra_constant(AlgebraKernel::Displayed, 2000).unwrap();
        for n in [0, 1, 2, 10, 100, 1999, 2000] {
            assert_relative_eq!(a.sums[n], displayed_sum_oracle(n), max_relative = 1e-12);
        }
        assert!(!a.unbounded_trend);
        // the general-weight kernel with ω(n) = n+1 is the same sum
        let w = linear();
        let b = algebra_constant(AlgebraKernel::Weight(&w), 200).unwrap();
        for n in 0..=200 {
            assert_relative_eq!(b.sums[n], a.sums[n], max_relative = 1e-12);
        }
    }

    #[test]
    fn unit_weight_is_unbounded() {
        let a = algebra_constant(AlgebraKernel::Weight(&WeightSequence::Unweighted), 100).unwrap();
        assert_eq!(a.sums[100], 101.0);
        assert!(a.unbounded_trend);
    }

    #[test]
    fn wa_examples() {
        let w = linear();
        let one = CoefficientSeries::one();
        // ‖z − 1‖ / ‖z − 1‖² with ‖z − 1‖² = 1 + 4
        let r = check_wa(&CoefficientSeries::z_minus_one(), &one, &one, &w).unwrap();
        assert_relative_eq!(r, 1.0 / 5f64.sqrt(), max_relative = 1e-14);
        // the product (p f₁)(p f₂) itself has the ratio √26/5
        let p = CoefficientSeries::z_minus_one();
        let sq = beurling_norm(&multiply(&p, &p), &w).unwrap() / beurling_norm(&p, &w).unwrap().powi(2);
        assert_relative_eq!(sq, 26f64.sqrt() / 5.0, max_relative = 1e-14);
        assert!(check_wa(&CoefficientSeries::zero(), &one, &one, &w).is_err());
    }

    #[test]
    fn product_bound_with_algebra_constant() {
        let w = linear();
        let c = algebra_constant(AlgebraKernel::Weight(&w), 128).unwrap().constant.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let f = CoefficientSeries::random(&mut rng, 64);
            let g = CoefficientSeries::random(&mut rng, 64);
            let lhs = beurling_norm(&multiply(&f, &g), &w).unwrap();
            let rhs = c * beurling_norm(&f, &w).unwrap() * beurling_norm(&g, &w).unwrap();
            assert!(lhs <= rhs * (1.0 + 1e-12));
            assert!(check_wa(&CoefficientSeries::one(), &f, &g, &w).unwrap() <= c * (1.0 + 1e-12));
        }
    }

    #[test]
    fn product_algebra_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let f = CoefficientSeries::random(&mut rng, 20);
            let g = CoefficientSeries::random(&mut rng, 20);
            let h = CoefficientSeries::random(&mut rng, 20);
            let fg = multiply(&f, &g);
            let gf = multiply(&g, &f);
            let a = multiply(&fg, &h);
            let b = multiply(&f, &multiply(&g, &h));
            for n in 0..a.coeffs().len().max(b.coeffs().len()) {
                assert!((a.coeff(n) - b.coeff(n)).norm() <= 1e-12);
            }
            for n in 0..fg.coeffs().len() {
                assert!((fg.coeff(n) - gf.coeff(n)).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn wc_examples() {
        let w = WeightSequence::Bergman;
        let c = check_wc(&CoefficientSeries::one(), &w).unwrap();
        assert_relative_eq!(c.ratio, (1.0 + 2.0f64).sqrt(), max_relative = 1e-14);
        assert!(check_wc(&CoefficientSeries::zero(), &w).is_err());
        let flat = check_wc(&CoefficientSeries::one(), &WeightSequence::Unweighted).unwrap();
        assert!(flat.warning.is_some());
        let cubic = WeightSequence::power(3.0, 512);
        assert!(check_wc(&CoefficientSeries::one(), &cubic).unwrap().warning.is_none());
    }

    #[test]
    fn wc_ratio_decays_without_the_hypothesis() {
        let w = WeightSequence::Unweighted;
        let ratio = |d: usize| check_wc(&CoefficientSeries::from_real(&vec![1.0; d + 1]), &w).unwrap().ratio;
        assert!(ratio(64) < ratio(32) && ratio(32) < ratio(16));
    }

    #[test]
    fn derivative_examples() {
        let w = linear();
        assert_eq!(derivative_equivalence_probe(&CoefficientSeries::one(), &w).unwrap(), (1.0, 1.0));
        for n in [1usize, 5, 40] {
            let (l, r) = derivative_equivalence_probe(&CoefficientSeries::monomial(n), &w).unwrap();
            assert_relative_eq!(l, (n + 1) as f64, max_relative = 1e-14);
            assert_relative_eq!(r, n as f64, max_relative = 1e-14);
        }
        let (lo, hi) = derivative_equivalence_batch(&w, 200, 64, 4).unwrap();
        assert!(lo >= 0.1 && hi <= 10.0, "{lo} {hi}");
    }

    #[test]
    fn wa_sweep_is_stable_under_degree_doubling() {
        let w = WeightSequence::power(1.0, 256);
        let p = CoefficientSeries::z_minus_one();
        let m32 = check_wa_batch(&p, &w, 1000, 32, 3).unwrap();
        let m64 = check_wa_batch(&p, &w, 1000, 64, 3).unwrap();
        assert!(m32.is_finite() && m64 <= 1.05 * m32, "{m32} {m64}");
    }

    #[test]
    fn wc_sweep_is_stable_under_degree_doubling() {
        let w = WeightSequence::power(3.0, 512);
        let a = check_wc_batch(&w, 1000, 64, 5).unwrap();
        let b = check_wc_batch(&w, 1000, 128, 5).unwrap();
        assert!(a.warning.is_none());
        assert!(a.ratio > 0.0 && b.ratio >= 0.95 * a.ratio, "{} {}", a.ratio, b.ratio);
    }

    #[test]
    fn batches_are_deterministic() {
        let w = linear();
        let p = CoefficientSeries::z_minus_one();
        assert_eq!(
            check_wa_batch(&p, &w, 50, 16, 3).unwrap(),
            check_wa_batch(&p, &w, 50, 16, 3).unwrap()
        );
    }

    #[test]
    fn series_json_round_trip() {
        let f = CoefficientSeries::new(vec![Complex64::new(1.0, -0.5), Complex64::new(0.0, 2.0)]);
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(text, "[[1.0,-0.5],[0.0,2.0]]");
        let back: CoefficientSeries = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
    }
}
