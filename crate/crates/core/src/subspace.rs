//! Subspaces of a window: bases, orthogonal projections, invariance and the
//! relative index, and the kernel/Krylov reconstruction of finite-dimensional
//! invariant subspaces of a perturbed adjoint.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{
    loglog_slope, null_space, numerical_rank, projection_distance, spectral_norm, CMatrix,
    CVector, ONE,
};
use crate::operator::{chain_from_alphas, format_cell, read_cells, LoweringOperator, OperatorWindow};
use crate::polynomial::{group_roots, Polynomial};
use crate::weights::point_radius;

/// Relative residual below which Gram-Schmidt declares a vector dependent.
pub const RANK_TOL: f64 = 1e-10;

/// Default singular-value threshold (relative to the largest) for numerical
/// ranks and kernels.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// A finite list of vectors spanning a subspace of `ℂ^ambient_dim`, stored as
/// matrix columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    vectors: CMatrix,
    orthonormal: bool,
}

impl SubspaceBasis {
    pub fn from_columns(vectors: CMatrix) -> Self {
        Self {
            vectors,
            orthonormal: false,
        }
    }

    pub fn from_vectors(ambient_dim: usize, vectors: &[CVector]) -> Result<Self> {
        if let Some(v) = vectors.iter().find(|v| v.len() != ambient_dim) {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} in ambient dimension {ambient_dim}",
                v.len()
            )));
        }
        let mut m = CMatrix::zeros(ambient_dim, vectors.len());
        for (j, v) in vectors.iter().enumerate() {
            m.set_column(j, v);
        }
        Ok(Self::from_columns(m))
    }

    /// `ℂ^n` itself, with its standard basis.
    pub fn whole(n: usize) -> Self {
        Self {
            vectors: CMatrix::identity(n, n),
            orthonormal: true,
        }
    }

    /// Coefficient vectors of the polynomials of degree `< n` that vanish on
    /// `zeros` (repeated points vanish to the repeated order): the basis
    /// `{z^j q(z)}` with `q = Π (z − λ)`.
    pub fn vanishing_polynomials(zeros: &[Complex64], n: usize) -> Result<Self> {
        let q = Polynomial::from_roots(zeros);
        let m = q.degree();
        if m > n {
            return Err(Error::DimensionMismatch(format!(
                "{m} zeros do not fit in {n} coefficients"
            )));
        }
        let mut basis = CMatrix::zeros(n, n - m);
        for j in 0..n - m {
            for (i, &c) in q.coeffs().iter().enumerate() {
                basis[(i + j, j)] = c;
            }
        }
        Ok(Self::from_columns(basis))
    }

    pub fn ambient_dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn len(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.ncols() == 0
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    /// Columns written as rows of `re,im` cells: CSV row `i` holds coordinate
    /// `i` of every vector.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for i in 0..self.ambient_dim() {
            let row: Vec<String> = (0..self.len())
                .map(|j| format_cell(self.vectors[(i, j)]))
                .collect();
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let rows = read_cells(input)?;
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Parse("ragged basis CSV".into()));
        }
        let flat: Vec<Complex64> = rows.iter().flatten().copied().collect();
        Ok(Self::from_columns(CMatrix::from_row_slice(
            rows.len(),
            ncols,
            &flat,
        )))
    }
}

/// Orthogonal projection onto a subspace, kept together with the orthonormal
/// basis it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    matrix: CMatrix,
    basis: CMatrix,
}

impl Projection {
    /// `P = Σ q_i q_i*` for orthonormal columns `q_i`.
    pub fn from_orthonormal(basis: CMatrix) -> Self {
        let matrix = &basis * basis.adjoint();
        Self { matrix, basis }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `(‖P² − P‖, ‖P − P*‖, |trace P − rank|)`.
    pub fn defects(&self) -> (f64, f64, f64) {
        let p = &self.matrix;
        let idem = spectral_norm(&(p * p - p));
        let herm = spectral_norm(&(p - p.adjoint()));
        let trace = (p.trace().re - self.rank() as f64).abs() + p.trace().im.abs();
        (idem, herm, trace)
    }

    /// The projection carried into a codomain of dimension `dim`: coordinates
    /// beyond the window are appended to the subspace, and when `dim` is
    /// smaller the subspace is truncated to its first `dim` coordinates.
    pub fn embed(&self, dim: usize) -> Self {
        let n = self.dim();
        if dim == n {
            return self.clone();
        }
        if dim > n {
            let r = self.rank();
            let mut q = CMatrix::zeros(dim, r + dim - n);
            q.view_mut((0, 0), (n, r)).copy_from(&self.basis);
            for k in 0..dim - n {
                q[(n + k, r + k)] = ONE;
            }
            return Self::from_orthonormal(q);
        }
        let truncated = self.basis.rows(0, dim).into_owned();
        Self::from_orthonormal(range_basis(&truncated, RANK_TOL))
    }
}

/// Orthonormal basis of the column space of `m` via its left singular vectors.
fn range_basis(m: &CMatrix, tol: f64) -> CMatrix {
    if m.ncols() == 0 {
        return CMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let rank = numerical_rank_from(svd.singular_values.as_slice(), tol);
    u.columns(0, rank).into_owned()
}

fn numerical_rank_from(sv: &[f64], tol: f64) -> usize {
    let max = sv.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * max).count()
}

/// Orthogonalize `v` against the orthonormal columns `q[.., ..k]` twice
/// (modified Gram-Schmidt plus one reorthogonalization pass).
fn orthogonalize_against(q: &CMatrix, k: usize, v: &mut CVector) {
    for _ in 0..2 {
        for j in 0..k {
            let col = q.column(j);
            let c = col.dotc(v);
            v.axpy(-c, &col, ONE);
        }
    }
}

/// Orthonormalize the columns in order. Returns the orthonormal columns and,
/// for each input column, the relative residual it had after projection.
/// `on_dependent` decides what happens to a column whose residual is below
/// `RANK_TOL`.
fn gram_schmidt_columns(
    b: &CMatrix,
    mut on_dependent: impl FnMut(usize, f64) -> Result<bool>,
) -> Result<CMatrix> {
    let mut q = CMatrix::zeros(b.nrows(), b.ncols());
    let mut k = 0;
    for j in 0..b.ncols() {
        let mut v = b.column(j).into_owned();
        let norm0 = v.norm();
        if norm0 == 0.0 {
            if on_dependent(j, 0.0)? {
                continue;
            } else {
                break;
            }
        }
        orthogonalize_against(&q, k, &mut v);
        let residual = v.norm() / norm0;
        if residual < RANK_TOL {
            if on_dependent(j, residual)? {
                continue;
            } else {
                break;
            }
        }
        v /= Complex64::new(v.norm(), 0.0);
        q.set_column(k, &v);
        k += 1;
    }
    Ok(q.columns(0, k).into_owned())
}

/// Orthonormal basis and projection of a linearly independent basis.
///
/// Errors with the offending index when a vector is (numerically) in the span
/// of its predecessors.
pub fn gram_schmidt_projection(b: &SubspaceBasis) -> Result<(SubspaceBasis, Projection)> {
    let q = gram_schmidt_columns(&b.vectors, |index, residual| {
        Err(Error::RankDeficient { index, residual })
    })?;
    let proj = Projection::from_orthonormal(q.clone());
    Ok((
        SubspaceBasis {
            vectors: q,
            orthonormal: true,
        },
        proj,
    ))
}

fn orthonormal(b: &SubspaceBasis) -> Result<CMatrix> {
    if b.orthonormal {
        Ok(b.vectors.clone())
    } else {
        Ok(gram_schmidt_projection(b)?.0.vectors)
    }
}

/// `‖(1 − P_out) T P_in‖` given orthonormal bases of both sides.
fn defect_of(t: &CMatrix, q_in: &CMatrix, q_out: &CMatrix) -> f64 {
    if q_in.ncols() == 0 {
        return 0.0;
    }
    let image = t * q_in;
    let leak = &image - q_out * (q_out.adjoint() * &image);
    spectral_norm(&leak)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariance {
    pub invariant: bool,
    pub defect: f64,
}

/// Checks `(1 − P)TP = 0`, with `P` carried into `T`'s codomain by
/// [`Projection::embed`].
pub fn is_invariant(t: &OperatorWindow, p: &Projection, tol: f64) -> Result<Invariance> {
    is_invariant_between(t, p, &p.embed(t.rows()), tol)
}

/// Checks `(1 − P_out) T P_in = 0` for explicitly given domain and codomain
/// projections.
pub fn is_invariant_between(
    t: &OperatorWindow,
    p_in: &Projection,
    p_out: &Projection,
    tol: f64,
) -> Result<Invariance> {
    if p_in.dim() != t.cols() || p_out.dim() != t.rows() {
        return Err(Error::DimensionMismatch(format!(
            "operator {}×{} against projections on C^{} and C^{}",
            t.rows(),
            t.cols(),
            p_in.dim(),
            p_out.dim()
        )));
    }
    let defect = defect_of(t.matrix(), p_in.basis(), p_out.basis());
    Ok(Invariance {
        invariant: defect <= tol,
        defect,
    })
}

/// Finite-window relative index `dim M_out − rank(T·M_in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeIndex {
    pub index: usize,
    pub dim_out: usize,
    pub image_rank: usize,
    /// Margin of the rank decision (see [`crate::linalg::NumericalRank::gap`]).
    pub gap: f64,
    /// `‖(1 − P_out) T P_in‖ / ‖T P_in‖`.
    pub defect: f64,
}

pub fn rel_index(
    t: &OperatorWindow,
    m_in: &SubspaceBasis,
    m_out: &SubspaceBasis,
    tol: f64,
) -> Result<RelativeIndex> {
    if m_in.ambient_dim() != t.cols() || m_out.ambient_dim() != t.rows() {
        return Err(Error::DimensionMismatch(format!(
            "operator {}×{} against subspaces of C^{} and C^{}",
            t.rows(),
            t.cols(),
            m_in.ambient_dim(),
            m_out.ambient_dim()
        )));
    }
    let q_in = orthonormal(m_in)?;
    let q_out = orthonormal(m_out)?;
    let image = t.matrix() * &q_in;
    let rank = numerical_rank(&image, tol);
    let scale = rank.singular_values.first().copied().unwrap_or(0.0);
    let leak = defect_of(t.matrix(), &q_in, &q_out);
    let defect = if scale > 0.0 { leak / scale } else { leak };
    if defect > tol {
        return Err(Error::NotInvariant { defect, tol });
    }
    let dim_out = q_out.ncols();
    Ok(RelativeIndex {
        index: dim_out.saturating_sub(rank.rank),
        dim_out,
        image_rank: rank.rank,
        gap: rank.gap,
        defect,
    })
}

/// Orthonormal basis and projection of the numerical kernel of `p(A)`.
pub fn kernel_of_polynomial(
    a: &OperatorWindow,
    p: &Polynomial,
    tol: f64,
) -> Result<(SubspaceBasis, Projection)> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "polynomial of a {}×{} window",
            a.rows(),
            a.cols()
        )));
    }
    if p.degree() == 0 {
        return Err(Error::Precondition("polynomial must have degree >= 1".into()));
    }
    let pa = p.eval_matrix(a.matrix());
    let k = null_space(&pa, tol);
    Ok((
        SubspaceBasis {
            vectors: k.clone(),
            orthonormal: true,
        },
        Projection::from_orthonormal(k),
    ))
}

/// `{v, Av, …, A^{m−1}v}` orthonormalized, stopping at the first power that
/// falls into the span of its predecessors.
pub fn krylov_span(a: &OperatorWindow, v: &CVector, m: usize) -> Result<SubspaceBasis> {
    if !a.is_square() || a.cols() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "Krylov space of a {}×{} window from a vector of length {}",
            a.rows(),
            a.cols(),
            v.len()
        )));
    }
    if v.norm() == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut powers = Vec::with_capacity(m);
    let mut current = v.clone();
    for _ in 0..m {
        let next = a.matrix() * &current;
        powers.push(current);
        current = next;
    }
    krylov_basis(v.len(), &powers)
}

fn krylov_basis(dim: usize, powers: &[CVector]) -> Result<SubspaceBasis> {
    let raw = SubspaceBasis::from_vectors(dim, powers)?;
    let q = gram_schmidt_columns(&raw.vectors, |_, _| Ok(false))?;
    Ok(SubspaceBasis {
        vectors: q,
        orthonormal: true,
    })
}

/// Result of rebuilding a finite-dimensional invariant subspace of `T*` from
/// the kernel of `p(A)` for a perturbation `A` of `T*`.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// `M_k = span{Q_k e, A Q_k e, …}` on the first `N` coordinates.
    pub rebuilt: SubspaceBasis,
    /// Span of the Jordan chains of `T*` at the roots, on the same coordinates.
    pub reference: SubspaceBasis,
    pub kernel_dim: usize,
    /// `‖P_{M_k} − P_M‖`.
    pub distance: f64,
}

/// Rebuild the `T*`-invariant subspace with minimal polynomial `Π (z − root)`
/// from a perturbed operator `A`.
///
/// The kernel of `p(A)` is computed on the exact section `ℂ^{N+deg p} → ℂ^N`
/// (so its dimension is the Fredholm index `deg p`), the cyclic vector `e`
/// is projected into it, and the Krylov vectors of `A` from there span `M_k`.
/// `e` defaults to the normalized sum of the chain vectors.
pub fn reconstruct_invariant_subspace(
    roots: &[Complex64],
    cyclic: Option<&CVector>,
    a: &LoweringOperator,
    n: usize,
    tol: f64,
) -> Result<Reconstruction> {
    if roots.is_empty() {
        return Err(Error::Precondition("minimal polynomial needs at least one root".into()));
    }
    if n < a.head_rows() || n == 0 {
        return Err(Error::WindowTooSmall {
            got: n,
            min: a.head_rows().max(1),
        });
    }
    let w = a.weights();
    let grouped = group_roots(roots);
    if let Some((_, m)) = grouped.iter().find(|(_, m)| *m > 3) {
        return Err(Error::Precondition(format!("root multiplicity {m} exceeds 3")));
    }
    let r_point = point_radius(w, n)?;
    if let Some((r, _)) = grouped.iter().find(|(r, _)| r.norm() > 0.9 * r_point) {
        return Err(Error::Precondition(format!(
            "root {r} lies outside 0.9·r_point = {}",
            0.9 * r_point
        )));
    }
    let p = Polynomial::from_roots(roots);
    let d = p.degree();
    let width = n + d;

    let alphas = w.alphas(width)?;
    let chains: Vec<CVector> = grouped
        .iter()
        .flat_map(|&(lambda, m)| chain_from_alphas(&alphas, lambda, m, width))
        .collect();

    let e = match cyclic {
        Some(e) if e.len() != width => {
            return Err(Error::DimensionMismatch(format!(
                "cyclic vector must have length N + deg p = {width}"
            )))
        }
        Some(e) => e.clone(),
        None => {
            let sum = chains.iter().fold(CVector::zeros(width), |acc, f| acc + f);
            let norm = sum.norm();
            sum / Complex64::new(norm, 0.0)
        }
    };

    let section = a.polynomial_section(&p, n)?;
    let kernel = null_space(&section, tol);
    let qe = &kernel * (kernel.adjoint() * &e);
    if qe.norm() == 0.0 {
        return Err(Error::CyclicityFailure {
            achieved: 0,
            required: d,
        });
    }

    let mut powers = Vec::with_capacity(d);
    let mut current = qe;
    for j in 0..d {
        powers.push(current.rows(0, n).into_owned());
        if j + 1 < d {
            current = a.apply(&current)?;
        }
    }
    let rebuilt = krylov_basis(n, &powers)?;
    if rebuilt.len() < d {
        return Err(Error::CyclicityFailure {
            achieved: rebuilt.len(),
            required: d,
        });
    }

    let truncated: Vec<CVector> = chains.iter().map(|f| f.rows(0, n).into_owned()).collect();
    let (reference, _) = gram_schmidt_projection(&SubspaceBasis::from_vectors(n, &truncated)?)?;
    let distance = projection_distance(rebuilt.vectors(), reference.vectors());
    Ok(Reconstruction {
        rebuilt,
        reference,
        kernel_dim: kernel.ncols(),
        distance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationProbe {
    /// `(δ, ‖P_δ − P‖)` pairs.
    pub points: Vec<(f64, f64)>,
    /// Log-log slope of the distances against `δ`.
    pub slope: Option<f64>,
}

/// Perturb every basis vector by `δ` times a fixed random unit direction and
/// measure `‖P_δ − P‖` for each `δ`.
pub fn basis_perturbation_probe(
    b: &SubspaceBasis,
    deltas: &[f64],
    seed: u64,
) -> Result<PerturbationProbe> {
    let (q, _) = gram_schmidt_projection(b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut directions = CMatrix::zeros(b.ambient_dim(), b.len());
    for j in 0..b.len() {
        let mut v = CVector::from_fn(b.ambient_dim(), |_, _| {
            Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        v /= Complex64::new(v.norm(), 0.0);
        directions.set_column(j, &v);
    }
    let mut points = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let moved = b.vectors() + &directions * Complex64::new(delta, 0.0);
        let (qd, _) = gram_schmidt_projection(&SubspaceBasis::from_columns(moved))?;
        points.push((delta, projection_distance(q.vectors(), qd.vectors())));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    Ok(PerturbationProbe {
        points,
        slope: loglog_slope(&xs, &ys),
    })
}
