//! Dense complex helpers shared by the operator, subspace and lab modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Operator 2-norm.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Outcome of a relative singular-value threshold decision.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericalRank {
    pub rank: usize,
    /// Distance of the decision from the threshold, as a ratio: the smaller of
    /// `sigma_kept_min / threshold` and `threshold / sigma_dropped_max`.
    pub gap: f64,
    pub threshold: f64,
    pub singular_values: Vec<f64>,
}

pub fn numerical_rank(m: &CMatrix, tol: f64) -> NumericalRank {
    rank_from_singular_values(singular_values(m), tol)
}

pub(crate) fn rank_from_singular_values(sv: Vec<f64>, tol: f64) -> NumericalRank {
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let threshold = tol * sigma_max;
    let rank = if sigma_max == 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > threshold).count()
    };
    let above = if rank > 0 {
        sv[rank - 1] / threshold
    } else {
        f64::INFINITY
    };
    let below = match sv.get(rank) {
        Some(&s) if s > 0.0 => threshold / s,
        _ => f64::INFINITY,
    };
    NumericalRank {
        rank,
        gap: above.min(below),
        threshold,
        singular_values: sv,
    }
}

/// Orthonormal basis (as columns) of the numerical right kernel of `m`:
/// right singular vectors whose singular value is at most `tol * sigma_max`.
/// Wide matrices are padded with zero rows so the full right factor is
/// available.
pub fn null_space(m: &CMatrix, tol: f64) -> CMatrix {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return CMatrix::zeros(0, 0);
    }
    let square = if rows < cols {
        let mut padded = CMatrix::zeros(cols, cols);
        padded.view_mut((0, 0), (rows, cols)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv = &svd.singular_values;
    let sigma_max = sv.iter().copied().fold(0.0, f64::max);
    let threshold = tol * sigma_max;
    let picked: Vec<usize> = (0..sv.len())
        .filter(|&i| sigma_max == 0.0 || sv[i] <= threshold)
        .collect();
    let mut basis = CMatrix::zeros(cols, picked.len());
    for (j, &i) in picked.iter().enumerate() {
        for r in 0..cols {
            basis[(r, j)] = v_t[(i, r)].conj();
        }
    }
    basis
}

/// `‖P₁ − P₂‖` for the orthogonal projections onto the column spans of two
/// matrices with orthonormal columns living in the same ambient space.
pub fn projection_distance(q1: &CMatrix, q2: &CMatrix) -> f64 {
    assert_eq!(q1.nrows(), q2.nrows(), "ambient dimensions differ");
    let leak = |a: &CMatrix, b: &CMatrix| -> f64 {
        if b.ncols() == 0 {
            return 0.0;
        }
        let residual = b - a * (a.adjoint() * b);
        spectral_norm(&residual)
    };
    leak(q1, q2).max(leak(q2, q1)).min(1.0)
}

/// Ordinary least-squares slope of `ys` against `xs`; `None` with fewer than
/// two distinct abscissae.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    least_squares_slope(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_gap_reports_margin() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1e-3, 0.0),
            Complex64::new(1e-14, 0.0),
        ]));
        let r = numerical_rank(&m, 1e-8);
        assert_eq!(r.rank, 2);
        // min(1e-3 / 1e-8, 1e-8 / 1e-14)
        assert!((r.gap / 1e5 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        // [1 0 0] has a two-dimensional kernel in C^3
        let m = CMatrix::from_row_slice(1, 3, &[ONE, ZERO, ZERO]);
        let k = null_space(&m, 1e-10);
        assert_eq!(k.ncols(), 2);
        assert!((m * &k).norm() < 1e-14);
    }

    #[test]
    fn zero_matrix_has_full_kernel() {
        let k = null_space(&CMatrix::zeros(3, 3), 1e-8);
        assert_eq!(k.ncols(), 3);
    }

    #[test]
    fn distance_between_coordinate_lines() {
        let e0 = CMatrix::from_column_slice(2, 1, &[ONE, ZERO]);
        let e1 = CMatrix::from_column_slice(2, 1, &[ZERO, ONE]);
        assert!((projection_distance(&e0, &e1) - 1.0).abs() < 1e-15);
        assert!(projection_distance(&e0, &e0) < 1e-15);
    }

    #[test]
    fn slope_of_line() {
        let xs = [1.0, 2.0, 3.0];
        let ys = [2.0, 4.0, 6.0];
        assert!((least_squares_slope(&xs, &ys).unwrap() - 2.0).abs() < 1e-14);
        assert!(least_squares_slope(&[1.0], &[1.0]).is_none());
    }
}
