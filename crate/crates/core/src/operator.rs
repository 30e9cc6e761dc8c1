//! Finite windows of a weighted shift `T e_n = α_n e_{n+1}` and its adjoint,
//! plus the eigenvectors and Jordan chains of `T*`.
//!
//! Windows are rectangular: the shift maps `ℂ^N → ℂ^{N+1}` and the adjoint
//! maps `ℂ^{N+1} → ℂ^N`, so both act on their window with no truncation
//! error. Everything the window cannot see is reported as a tail bound.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, CMatrix, CVector, ONE, ZERO};
use crate::polynomial::Polynomial;
use crate::weights::{point_radius, WeightSequence, MIN_RADIUS_WINDOW};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowTag {
    Shift,
    Adjoint,
    PolynomialInAdjoint,
    Perturbed,
    Custom,
}

/// An exact linear map from coordinates `0..cols` to coordinates `0..rows`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorWindow {
    matrix: CMatrix,
    tag: WindowTag,
}

impl OperatorWindow {
    pub fn new(matrix: CMatrix, tag: WindowTag) -> Self {
        Self { matrix, tag }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn tag(&self) -> WindowTag {
        self.tag
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.matrix.is_square()
    }

    /// Conjugate transpose; shift and adjoint tags swap.
    pub fn adjoint(&self) -> Self {
        let tag = match self.tag {
            WindowTag::Shift => WindowTag::Adjoint,
            WindowTag::Adjoint => WindowTag::Shift,
            t => t,
        };
        Self::new(self.matrix.adjoint(), tag)
    }

    /// Leading square block `min(rows, cols)`.
    pub fn compress_square(&self) -> Self {
        let k = self.rows().min(self.cols());
        Self::new(self.matrix.view((0, 0), (k, k)).into_owned(), self.tag)
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(parts: &[OperatorWindow]) -> Self {
        let rows = parts.iter().map(Self::rows).sum();
        let cols = parts.iter().map(Self::cols).sum();
        let mut m = CMatrix::zeros(rows, cols);
        let (mut r, mut c) = (0, 0);
        for p in parts {
            m.view_mut((r, c), (p.rows(), p.cols())).copy_from(&p.matrix);
            r += p.rows();
            c += p.cols();
        }
        let tag = match parts.first().map(|p| p.tag) {
            Some(t) if parts.iter().all(|p| p.tag == t) => t,
            _ => WindowTag::Custom,
        };
        Self::new(m, tag)
    }

    /// Row-major CSV; each cell is the string `re,im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for i in 0..self.rows() {
            let row: Vec<String> = (0..self.cols())
                .map(|j| format_cell(self.matrix[(i, j)]))
                .collect();
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, tag: WindowTag) -> Result<Self> {
        let rows = read_cells(input)?;
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Parse("ragged window CSV".into()));
        }
        let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
        let nrows = flat.len().checked_div(ncols).unwrap_or(0);
        Ok(Self::new(CMatrix::from_row_slice(nrows, ncols, &flat), tag))
    }
}

pub(crate) fn format_cell(z: Complex64) -> String {
    format!("{:?},{:?}", z.re, z.im)
}

pub(crate) fn parse_cell(cell: &str) -> Result<Complex64> {
    let (re, im) = cell
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("cell `{cell}` is not `re,im`")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("cell `{cell}` is not `re,im`")))
    };
    Ok(Complex64::new(parse(re)?, parse(im)?))
}

pub(crate) fn read_cells<R: Read>(input: R) -> Result<Vec<Vec<Complex64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        rows.push(record.iter().map(parse_cell).collect::<Result<Vec<_>>>()?);
    }
    Ok(rows)
}

/// `(N+1)×N` window with subdiagonal `α_0..α_{N−1}`.
pub fn shift_window(w: &WeightSequence, n: usize) -> Result<OperatorWindow> {
    Ok(shift_window_from_alphas(&w.alphas(n)?))
}

pub fn shift_window_from_alphas(alphas: &[f64]) -> OperatorWindow {
    let n = alphas.len();
    let mut m = CMatrix::zeros(n + 1, n);
    for (k, &a) in alphas.iter().enumerate() {
        m[(k + 1, k)] = Complex64::new(a, 0.0);
    }
    OperatorWindow::new(m, WindowTag::Shift)
}

/// `N×(N+1)` window with superdiagonal `α_0..α_{N−1}`.
pub fn adjoint_window(w: &WeightSequence, n: usize) -> Result<OperatorWindow> {
    Ok(adjoint_window_from_alphas(&w.alphas(n)?))
}

pub fn adjoint_window_from_alphas(alphas: &[f64]) -> OperatorWindow {
    let n = alphas.len();
    let mut m = CMatrix::zeros(n, n + 1);
    for (k, &a) in alphas.iter().enumerate() {
        m[(k, k + 1)] = Complex64::new(a, 0.0);
    }
    OperatorWindow::new(m, WindowTag::Adjoint)
}

/// `[I_N | 0]`, the `N×(N+1)` inclusion used to form `T* − λ` on a window.
fn truncating_identity(rows: usize, cols: usize) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols);
    for i in 0..rows.min(cols) {
        m[(i, i)] = ONE;
    }
    m
}

/// Dimension of `Ker(T* − λ)` on the `N×(N+1)` window, by numerical rank.
pub fn adjoint_kernel_dim(w: &WeightSequence, lambda: Complex64, n: usize, tol: f64) -> Result<usize> {
    let a = adjoint_window(w, n)?;
    let shifted = a.matrix() - truncating_identity(n, n + 1) * lambda;
    Ok(n + 1 - numerical_rank(&shifted, tol).rank)
}

/// Vectors `f_{λ,1}, …, f_{λ,m}` with `(T* − λ) f_{λ,k+1} = f_{λ,k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct JordanChain {
    pub lambda: Complex64,
    pub vectors: Vec<CVector>,
    /// `residuals[0] = ‖(T*−λ)f_1‖`, `residuals[k] = ‖(T*−λ)f_{k+1} − f_k‖`,
    /// evaluated exactly on the first `N−1` coordinates.
    pub residuals: Vec<f64>,
    /// Estimated `ℓ²` mass of the last vector beyond the window.
    pub tail_bound: f64,
    pub in_l2: bool,
    pub r_point: f64,
}

impl JordanChain {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn norm_sqr(&self, k: usize) -> f64 {
        self.vectors[k].norm_squared()
    }
}

/// Chain vectors of length `len` for a weighted shift with the given weights,
/// zeroing the first `k−1` coordinates of `f_k`.
pub fn chain_from_alphas(alphas: &[f64], lambda: Complex64, m: usize, len: usize) -> Vec<CVector> {
    assert!(alphas.len() + 1 >= len, "need α_0..α_{{len−2}}");
    let mut chain: Vec<CVector> = Vec::with_capacity(m);
    for k in 0..m {
        let mut f = CVector::zeros(len);
        let start = if k == 0 {
            if len > 0 {
                f[0] = ONE;
            }
            0
        } else {
            k - 1
        };
        for n in start..len.saturating_sub(1) {
            let prev = if k == 0 { ZERO } else { chain[k - 1][n] };
            f[n + 1] = (prev + lambda * f[n]) / alphas[n];
        }
        chain.push(f);
    }
    chain
}

/// Residual norms of each link on the exact `(N−1)×N` adjoint window.
pub fn chain_residuals(alphas: &[f64], lambda: Complex64, chain: &[CVector]) -> Vec<f64> {
    let Some(first) = chain.first() else {
        return Vec::new();
    };
    let len = first.len();
    if len < 2 {
        return vec![0.0; chain.len()];
    }
    let a = adjoint_window_from_alphas(&alphas[..len - 1]);
    let shifted = a.matrix() - truncating_identity(len - 1, len) * lambda;
    chain
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let mut r = &shifted * f;
            if k > 0 {
                r -= chain[k - 1].rows(0, len - 1);
            }
            r.norm()
        })
        .collect()
}

fn radius_for(w: &WeightSequence, n: usize) -> Result<f64> {
    let est = match w.max_index_hint() {
        Some(h) => n.max(MIN_RADIUS_WINDOW).min(h),
        None => n.max(MIN_RADIUS_WINDOW),
    };
    point_radius(w, est)
}

/// Geometric majorization of `Σ_{n≥N} |f(n)|²` with ratio `(|λ|/r_point)²`.
fn tail_estimate(last: &CVector, lambda: Complex64, r_point: f64) -> (f64, bool) {
    if lambda.norm() == 0.0 {
        return (0.0, true);
    }
    let q2 = (lambda.norm() / r_point).powi(2);
    if q2 >= 1.0 {
        return (f64::INFINITY, false);
    }
    let edge = last[last.len() - 1].norm_sqr();
    (edge * q2 / (1.0 - q2), true)
}

/// `f_{λ,1} = (β_0, β_1, …)` with `β_0 = 1`, `β_n = λ^n/π_n`, on `N` coordinates.
pub fn eigenvector_f1(w: &WeightSequence, lambda: Complex64, n: usize) -> Result<JordanChain> {
    jordan_chain_unchecked(w, lambda, 1, n)
}

/// `m` chain vectors on `N` coordinates; requires `N ≥ m + 2`.
pub fn jordan_chain(w: &WeightSequence, lambda: Complex64, m: usize, n: usize) -> Result<JordanChain> {
    if m == 0 {
        return Err(Error::Precondition("chain length must be at least 1".into()));
    }
    if n < m + 2 {
        return Err(Error::WindowTooSmall { got: n, min: m + 2 });
    }
    jordan_chain_unchecked(w, lambda, m, n)
}

fn jordan_chain_unchecked(
    w: &WeightSequence,
    lambda: Complex64,
    m: usize,
    n: usize,
) -> Result<JordanChain> {
    if n == 0 {
        return Err(Error::WindowTooSmall { got: 0, min: 1 });
    }
    let alphas = w.alphas(n.saturating_sub(1))?;
    let vectors = chain_from_alphas(&alphas, lambda, m, n);
    let residuals = chain_residuals(&alphas, lambda, &vectors);
    let r_point = radius_for(w, n)?;
    let (tail_bound, in_l2) = tail_estimate(vectors.last().expect("m >= 1"), lambda, r_point);
    Ok(JordanChain {
        lambda,
        vectors,
        residuals,
        tail_bound,
        in_l2,
        r_point,
    })
}

/// Largest `‖f_{λ,k} − f_{λ',k}‖` over adjacent points of an equispaced grid of
/// `steps` points on the circle `|λ| = r`.
pub fn chain_continuity_probe(
    w: &WeightSequence,
    k: usize,
    r: f64,
    steps: usize,
    n: usize,
) -> Result<f64> {
    if k == 0 || steps < 2 {
        return Err(Error::Precondition("need k >= 1 and at least two grid points".into()));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let r_point = radius_for(w, n)?;
    if r >= 0.95 * r_point {
        return Err(Error::RadiusTooLarge {
            radius: r,
            limit: r_point,
        });
    }
    let alphas = w.alphas(n - 1)?;
    let grid: Vec<CVector> = (0..steps)
        .map(|j| {
            let theta = std::f64::consts::TAU * j as f64 / steps as f64;
            let lambda = Complex64::from_polar(r, theta);
            chain_from_alphas(&alphas, lambda, k, n).pop().expect("k >= 1")
        })
        .collect();
    Ok((0..steps)
        .map(|j| (&grid[j] - &grid[(j + 1) % steps]).norm())
        .fold(0.0, f64::max))
}

/// `T*` with its leading `N×(N+1)` block replaced by an arbitrary matrix.
///
/// The replaced operator is a finite-rank perturbation of the adjoint, so
/// every section `rows×(rows+1)` with `rows ≥ N` is exact, and `p(A)` maps
/// `ℂ^{rows+deg p}` to `ℂ^{rows}` exactly.
#[derive(Debug, Clone)]
pub struct LoweringOperator {
    weights: WeightSequence,
    head: CMatrix,
}

impl LoweringOperator {
    /// The unperturbed adjoint.
    pub fn adjoint(weights: WeightSequence) -> Self {
        Self {
            weights,
            head: CMatrix::zeros(0, 1),
        }
    }

    pub fn with_head(weights: WeightSequence, head: &OperatorWindow) -> Result<Self> {
        if head.cols() != head.rows() + 1 {
            return Err(Error::DimensionMismatch(format!(
                "head block must be N×(N+1), got {}×{}",
                head.rows(),
                head.cols()
            )));
        }
        Ok(Self {
            weights,
            head: head.matrix().clone(),
        })
    }

    pub fn weights(&self) -> &WeightSequence {
        &self.weights
    }

    /// Smallest section size that contains the replaced block.
    pub fn head_rows(&self) -> usize {
        self.head.nrows()
    }

    /// Exact `rows×(rows+1)` section.
    pub fn section(&self, rows: usize) -> Result<CMatrix> {
        let h = self.head.nrows();
        if rows < h {
            return Err(Error::WindowTooSmall { got: rows, min: h });
        }
        let mut m = CMatrix::zeros(rows, rows + 1);
        m.view_mut((0, 0), (h, h + 1)).copy_from(&self.head);
        for k in h..rows {
            m[(k, k + 1)] = Complex64::new(self.weights.alpha_at(k)?, 0.0);
        }
        Ok(m)
    }

    /// Exact `rows×(rows+deg p)` section of `p(A)`, by Horner's rule on
    /// sections of decreasing size.
    pub fn polynomial_section(&self, p: &Polynomial, rows: usize) -> Result<CMatrix> {
        let d = p.degree();
        let coeffs = p.coeffs();
        let width = rows + d;
        let mut acc = truncating_identity(width, width) * coeffs[d];
        for j in (0..d).rev() {
            let a = self.section(rows + j)?;
            acc = a * acc;
            for i in 0..rows + j {
                acc[(i, i)] += coeffs[j];
            }
        }
        Ok(acc)
    }

    /// `A v`, losing the last coordinate.
    pub fn apply(&self, v: &CVector) -> Result<CVector> {
        let rows = v.len() - 1;
        Ok(self.section(rows)? * v)
    }
}
