//! Seeded perturbation experiments: recovery of invariant subspaces under
//! small perturbations of the adjoint, lower semicontinuity of the relative
//! index, and the index of zero-based subspaces of the shift.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::{loglog_slope, null_space, spectral_norm, CMatrix, CVector, ZERO};
use crate::operator::{
    adjoint_window, chain_from_alphas, shift_window_from_alphas, LoweringOperator, OperatorWindow,
    WindowTag,
};
use crate::polynomial::group_roots;
use crate::report::{ExperimentReport, StepRecord, Verdict};
use crate::subspace::{
    gram_schmidt_projection, reconstruct_invariant_subspace, rel_index, SubspaceBasis,
};
use crate::weights::WeightSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    DenseRandom,
    WeightJitter,
    CompactZeroing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationPlan {
    pub kind: PerturbationKind,
    pub epsilon_schedule: Vec<f64>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_set: Option<Vec<usize>>,
}

impl PerturbationPlan {
    pub fn new(kind: PerturbationKind, epsilon_schedule: Vec<f64>, seed: u64) -> Self {
        Self {
            kind,
            epsilon_schedule,
            seed,
            zero_set: None,
        }
    }

    /// `ε_n = 2^{−n}` for `n = 1..=steps`.
    pub fn halving(kind: PerturbationKind, steps: u32, seed: u64) -> Self {
        Self::new(kind, (1..=steps).map(|n| 0.5f64.powi(n as i32)).collect(), seed)
    }

    /// `10^{−1}, …, 10^{−steps}`.
    pub fn decades(kind: PerturbationKind, steps: u32, seed: u64) -> Self {
        Self::new(kind, (1..=steps).map(|n| 10f64.powi(-(n as i32))).collect(), seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon_schedule.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::InvalidPlan("every epsilon must be positive and finite".into()));
        }
        if self.epsilon_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidPlan("epsilon schedule must be strictly decreasing".into()));
        }
        match self.kind {
            PerturbationKind::CompactZeroing => {
                let zs = self.zero_set.as_ref().ok_or_else(|| {
                    Error::InvalidPlan("compact_zeroing needs a zero_set".into())
                })?;
                if zs.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidPlan("zero_set must be strictly increasing".into()));
                }
                if self.epsilon_schedule.len() > 1 {
                    return Err(Error::InvalidPlan(
                        "compact_zeroing is a fixed perturbation and cannot drive a convergence schedule"
                            .into(),
                    ));
                }
            }
            _ if self.zero_set.is_some() => {
                return Err(Error::InvalidPlan("zero_set only applies to compact_zeroing".into()))
            }
            _ => {}
        }
        Ok(())
    }
}

/// A perturbed window and its exact distance `‖S − T‖` from the original.
#[derive(Debug, Clone)]
pub struct Perturbed {
    pub window: OperatorWindow,
    pub distance: f64,
}

/// Generator for trial `trial` of a plan: one ChaCha8 stream per trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Positions of the nonzero entries, provided every row and column holds at
/// most one (a weighted partial permutation, such as a shift window).
fn weighted_entries(t: &CMatrix) -> Result<Vec<(usize, usize)>> {
    let mut entries = Vec::new();
    let mut row_used = vec![false; t.nrows()];
    let mut col_used = vec![false; t.ncols()];
    for j in 0..t.ncols() {
        for i in 0..t.nrows() {
            if t[(i, j)] != ZERO {
                if row_used[i] || col_used[j] {
                    return Err(Error::Precondition(
                        "weight jitter needs a window with at most one weight per row and column"
                            .into(),
                    ));
                }
                row_used[i] = true;
                col_used[j] = true;
                entries.push((i, j));
            }
        }
    }
    Ok(entries)
}

/// Relative jitter factors `u_n ∈ [−1, 1]`, one per weight, for a trial.
pub fn jitter_direction(seed: u64, trial: u64, count: usize) -> Vec<f64> {
    let mut rng = trial_rng(seed, trial);
    (0..count).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// `α_n (1 + ε u_n / ‖T‖)` for a trial's direction `u`.
pub fn jitter_alphas(alphas: &[f64], epsilon: f64, seed: u64, trial: u64) -> Vec<f64> {
    let norm = alphas.iter().copied().fold(0.0, f64::max);
    let u = jitter_direction(seed, trial, alphas.len());
    alphas
        .iter()
        .zip(u)
        .map(|(a, u)| a * (1.0 + epsilon * u / norm))
        .collect()
}

/// Apply one step of a plan. The random direction depends only on
/// `(plan.seed, trial)` and is scaled by `ε`.
pub fn perturb(
    t: &OperatorWindow,
    plan: &PerturbationPlan,
    epsilon: f64,
    trial: u64,
) -> Result<Perturbed> {
    plan.validate()?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Precondition(format!("epsilon must be positive, got {epsilon}")));
    }
    let m = t.matrix();
    let out = match plan.kind {
        PerturbationKind::DenseRandom => {
            let mut rng = trial_rng(plan.seed, trial);
            let g = CMatrix::from_fn(m.nrows(), m.ncols(), |_, _| {
                Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
            });
            let scale = epsilon / spectral_norm(&g);
            m + g * Complex64::new(scale, 0.0)
        }
        PerturbationKind::WeightJitter => {
            let entries = weighted_entries(m)?;
            let norm = spectral_norm(m);
            if norm == 0.0 {
                return Err(Error::Precondition("cannot jitter the zero window".into()));
            }
            let u = jitter_direction(plan.seed, trial, entries.len());
            let mut s = m.clone();
            for (&(i, j), u) in entries.iter().zip(u) {
                s[(i, j)] *= 1.0 + epsilon * u / norm;
            }
            s
        }
        PerturbationKind::CompactZeroing => {
            let zs = plan.zero_set.as_deref().unwrap_or_default();
            let mut s = m.clone();
            for &n in zs {
                let pos = match t.tag() {
                    WindowTag::Shift => (n + 1, n),
                    WindowTag::Adjoint => (n, n + 1),
                    other => {
                        return Err(Error::Precondition(format!(
                            "compact_zeroing needs a shift or adjoint window, got {other:?}"
                        )))
                    }
                };
                if pos.0 < s.nrows() && pos.1 < s.ncols() {
                    s[pos] = ZERO;
                }
            }
            s
        }
    };
    let distance = spectral_norm(&(&out - m));
    let tag = if plan.kind == PerturbationKind::CompactZeroing {
        t.tag()
    } else {
        WindowTag::Perturbed
    };
    Ok(Perturbed {
        window: OperatorWindow::new(out, tag),
        distance,
    })
}

/// For a lower-triangular square matrix that splits into diagonal blocks
/// each of which is strictly lower triangular, returns the block sizes;
/// `None` when the matrix is not of that form.
pub fn nilpotent_blocks(m: &CMatrix) -> Option<Vec<usize>> {
    if !m.is_square() {
        return None;
    }
    let n = m.nrows();
    // a block ends after column j when nothing below row j is reached from columns ≤ j
    let mut sizes = Vec::new();
    let mut start = 0;
    let mut reach = 0;
    for j in 0..n {
        for i in 0..n {
            if m[(i, j)] != ZERO {
                if i <= j || i < start {
                    return None;
                }
                reach = reach.max(i);
            }
        }
        if reach <= j {
            sizes.push(j + 1 - start);
            start = j + 1;
        }
    }
    Some(sizes)
}

fn verdict_from_slope(slope: Option<f64>, final_distance: f64, eps_min: f64) -> Verdict {
    match slope {
        None => Verdict::Inconclusive,
        Some(s) if (0.9..=1.1).contains(&s) && final_distance <= 10.0 * eps_min => Verdict::Pass,
        Some(_) => Verdict::Fail,
    }
}

/// Parameters of a norm-stability run besides the weights and the plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStabilityConfig {
    pub roots: Vec<Complex64>,
    pub n: usize,
    pub tol: f64,
    pub trial: u64,
}

/// Rebuilds the `T*`-invariant subspace with minimal polynomial
/// `Π (z − root)` from `A_k = T* + ε_k G` for each `ε_k` of the schedule and
/// records `‖P_{M_k} − P_M‖`.
pub fn norm_stability_run(
    w: &WeightSequence,
    plan: &PerturbationPlan,
    cfg: &NormStabilityConfig,
) -> Result<ExperimentReport> {
    plan.validate()?;
    if plan.kind == PerturbationKind::CompactZeroing {
        return Err(Error::InvalidPlan(
            "compact_zeroing cannot drive a norm-stability run".into(),
        ));
    }
    let base = adjoint_window(w, cfg.n)?;
    let mut report = ExperimentReport::new(
        "norm_stability",
        json!({
            "weight": w.label(),
            "plan": plan,
            "roots": cfg.roots.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "n": cfg.n,
            "tol": cfg.tol,
            "trial": cfg.trial,
        }),
    );
    let steps = plan
        .epsilon_schedule
        .par_iter()
        .map(|&eps| {
            let s = perturb(&base, plan, eps, cfg.trial)?;
            let a = LoweringOperator::with_head(w.clone(), &s.window)?;
            let r = reconstruct_invariant_subspace(&cfg.roots, None, &a, cfg.n, cfg.tol)?;
            Ok((eps, s.distance, r))
        })
        .collect::<Result<Vec<_>>>()?;
    for (i, (eps, pert, r)) in steps.iter().enumerate() {
        report.per_step.push(
            StepRecord::new(i, Some(*eps))
                .with("perturbation_norm", *pert)
                .with("distance", r.distance)
                .with("kernel_dim", r.kernel_dim as f64)
                .with("rebuilt_dim", r.rebuilt.len() as f64),
        );
    }
    let eps: Vec<f64> = steps.iter().map(|s| s.0).collect();
    let dist: Vec<f64> = steps.iter().map(|s| s.2.distance).collect();
    report.fitted_slope = loglog_slope(&eps, &dist);
    let eps_min = eps.last().copied().unwrap_or(f64::NAN);
    let final_distance = dist.last().copied().unwrap_or(f64::NAN);
    report.verdict = verdict_from_slope(report.fitted_slope, final_distance, eps_min);
    report.note("final_distance", final_distance);
    report.note("epsilon_min", eps_min);
    Ok(report)
}

/// Operator and subspace of a semicontinuity run: `blocks` copies of the
/// weighted shift on `ℂ^n`, and in each copy the subspace orthogonal to the
/// Jordan chains of the adjoint at `conj(λ)` for `λ ∈ zeros` (for the
/// unweighted shift, the polynomials vanishing on `zeros`). Empty `zeros`
/// selects the whole space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemicontinuitySetup {
    pub blocks: usize,
    pub n: usize,
    pub zeros: Vec<Complex64>,
    pub trials: usize,
    pub tol: f64,
}

/// Smallest singular value a window must have to count as bounded below.
pub const BOUNDED_BELOW_FLOOR: f64 = 0.1;

/// Basis of the orthogonal complement, in `ℂ^len`, of the adjoint chains at
/// the conjugated zeros for shift weights `alphas`.
fn chain_complement(alphas: &[f64], zeros: &[Complex64], len: usize) -> Result<CMatrix> {
    let chains: Vec<CVector> = group_roots(zeros)
        .into_iter()
        .flat_map(|(z, m)| chain_from_alphas(alphas, z.conj(), m, len))
        .collect();
    if chains.is_empty() {
        return Ok(CMatrix::identity(len, len));
    }
    let (q, _) = gram_schmidt_projection(&SubspaceBasis::from_vectors(len, &chains)?)?;
    Ok(null_space(&q.vectors().adjoint(), 1e-12))
}

/// Remove the components along the chains of the perturbed adjoint.
fn project_out(basis: &CMatrix, alphas: &[f64], zeros: &[Complex64]) -> Result<CMatrix> {
    let len = basis.nrows();
    let chains: Vec<CVector> = group_roots(zeros)
        .into_iter()
        .flat_map(|(z, m)| chain_from_alphas(alphas, z.conj(), m, len))
        .collect();
    if chains.is_empty() {
        return Ok(basis.clone());
    }
    let (q, _) = gram_schmidt_projection(&SubspaceBasis::from_vectors(len, &chains)?)?;
    let q = q.vectors();
    Ok(basis - q * (q.adjoint() * basis))
}

fn block_diag(parts: &[CMatrix]) -> CMatrix {
    let rows = parts.iter().map(|p| p.nrows()).sum();
    let cols = parts.iter().map(|p| p.ncols()).sum();
    let mut m = CMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for p in parts {
        m.view_mut((r, c), p.shape()).copy_from(p);
        r += p.nrows();
        c += p.ncols();
    }
    m
}

#[derive(Debug, Clone, Copy, Default)]
struct TrialStep {
    skipped: bool,
    index: usize,
    defect: f64,
}

/// Checks `ind(T, P) ≤ ind(S_n, P_n)` along a schedule of perturbations
/// `S_n` of `T`, where `P_n` is `P` transported to `S_n` by projecting its
/// basis off the perturbed adjoint chains. Trials whose transported basis
/// loses rank or invariance are skipped and counted.
pub fn semicontinuity_run(
    w: &WeightSequence,
    setup: &SemicontinuitySetup,
    plan: &PerturbationPlan,
) -> Result<ExperimentReport> {
    plan.validate()?;
    if plan.kind != PerturbationKind::WeightJitter {
        return Err(Error::InvalidPlan(
            "semicontinuity runs transport subspaces along weight jitter only".into(),
        ));
    }
    if setup.blocks == 0 || setup.n <= setup.zeros.len() {
        return Err(Error::Precondition("need at least one block wider than the zero set".into()));
    }
    let n = setup.n;
    let alphas = w.alphas(n + 1)?;
    let floor = alphas[..n].iter().copied().fold(f64::INFINITY, f64::min);
    if floor < BOUNDED_BELOW_FLOOR {
        return Err(Error::Precondition(format!(
            "operator is not bounded below on the window: smallest singular value {floor}"
        )));
    }

    let block = shift_window_from_alphas(&alphas[..n]);
    let t = OperatorWindow::direct_sum(&vec![block; setup.blocks]);
    let m_in_block = chain_complement(&alphas, &setup.zeros, n)?;
    let m_out_block = chain_complement(&alphas, &setup.zeros, n + 1)?;
    let m_in = block_diag(&vec![m_in_block.clone(); setup.blocks]);
    let m_out = block_diag(&vec![m_out_block.clone(); setup.blocks]);
    let base = rel_index(
        &t,
        &SubspaceBasis::from_columns(m_in.clone()),
        &SubspaceBasis::from_columns(m_out.clone()),
        setup.tol,
    )?;

    let trials: Vec<Vec<TrialStep>> = (0..setup.trials)
        .into_par_iter()
        .map(|trial| {
            plan.epsilon_schedule
                .iter()
                .map(|&eps| {
                    let mut s_parts = Vec::with_capacity(setup.blocks);
                    let mut in_parts = Vec::with_capacity(setup.blocks);
                    let mut out_parts = Vec::with_capacity(setup.blocks);
                    for b in 0..setup.blocks {
                        let stream = (trial * setup.blocks + b) as u64;
                        let a = jitter_alphas(&alphas, eps, plan.seed, stream);
                        s_parts.push(shift_window_from_alphas(&a[..n]));
                        in_parts.push(project_out(&m_in_block, &a, &setup.zeros)?);
                        out_parts.push(project_out(&m_out_block, &a, &setup.zeros)?);
                    }
                    let s = OperatorWindow::direct_sum(&s_parts);
                    let got = rel_index(
                        &s,
                        &SubspaceBasis::from_columns(block_diag(&in_parts)),
                        &SubspaceBasis::from_columns(block_diag(&out_parts)),
                        setup.tol,
                    );
                    match got {
                        Ok(r) => Ok(TrialStep {
                            skipped: false,
                            index: r.index,
                            defect: r.defect,
                        }),
                        Err(Error::RankDeficient { .. } | Error::NotInvariant { .. }) => {
                            Ok(TrialStep {
                                skipped: true,
                                ..TrialStep::default()
                            })
                        }
                        Err(e) => Err(e),
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = ExperimentReport::new(
        "semicontinuity",
        json!({
            "weight": w.label(),
            "plan": plan,
            "setup": {
                "blocks": setup.blocks,
                "n": setup.n,
                "zeros": setup.zeros.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "trials": setup.trials,
                "tol": setup.tol,
            },
        }),
    );
    let mut total_violations = 0usize;
    let mut skipped_trials = 0usize;
    for (k, &eps) in plan.epsilon_schedule.iter().enumerate() {
        let live: Vec<&TrialStep> = trials.iter().map(|t| &t[k]).filter(|s| !s.skipped).collect();
        let violations = live.iter().filter(|s| base.index > s.index).count();
        total_violations += violations;
        let min_index = live.iter().map(|s| s.index).min().unwrap_or(0);
        let max_index = live.iter().map(|s| s.index).max().unwrap_or(0);
        let max_defect = live.iter().map(|s| s.defect).fold(0.0, f64::max);
        report.per_step.push(
            StepRecord::new(k, Some(eps))
                .with("evaluated", live.len() as f64)
                .with("skipped", (setup.trials - live.len()) as f64)
                .with("violations", violations as f64)
                .with("index_t", base.index as f64)
                .with("min_index_s", min_index as f64)
                .with("max_index_s", max_index as f64)
                .with("max_defect", max_defect),
        );
    }
    for t in &trials {
        if t.iter().any(|s| s.skipped) {
            skipped_trials += 1;
        }
    }
    let skipped_fraction = if setup.trials == 0 {
        0.0
    } else {
        skipped_trials as f64 / setup.trials as f64
    };
    report.note("index_t", base.index as u64);
    report.note("violations", total_violations as u64);
    report.note("skipped_trials", skipped_trials as u64);
    report.note("skipped_fraction", skipped_fraction);
    report.note("smallest_singular_value", floor);
    report.verdict = if total_violations == 0 && skipped_fraction <= 0.1 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(report)
}

/// Largest admissible modulus of a zero.
pub const MAX_ZERO_MODULUS: f64 = 0.8;
/// Largest admissible zero set.
pub const MAX_ZEROS: usize = 5;
/// Pairwise distance below which a zero set is flagged as ill-conditioned.
pub const CLOSE_ZEROS: f64 = 1e-3;
/// Singular-value gap a rank decision must clear.
pub const MIN_RANK_GAP: f64 = 1e3;

fn min_separation(zs: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..zs.len() {
        for j in 0..i {
            best = best.min((zs[i] - zs[j]).norm());
        }
    }
    best
}

pub fn validate_zero_set(zs: &[Complex64]) -> Result<()> {
    if zs.is_empty() || zs.len() > MAX_ZEROS {
        return Err(Error::Precondition(format!(
            "zero sets need 1 to {MAX_ZEROS} points, got {}",
            zs.len()
        )));
    }
    if let Some(z) = zs.iter().find(|z| z.norm() > MAX_ZERO_MODULUS) {
        return Err(Error::Precondition(format!("|{z}| exceeds {MAX_ZERO_MODULUS}")));
    }
    if min_separation(zs) == 0.0 {
        return Err(Error::Precondition("zero set has a repeated point".into()));
    }
    Ok(())
}

/// `count` zero sets of 1 to 5 points drawn uniformly from the disk of
/// radius 0.8, every pair at least `min_sep` apart.
pub fn random_zero_sets(count: usize, seed: u64, min_sep: f64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let size = rng.random_range(1..=MAX_ZEROS);
            let mut zs: Vec<Complex64> = Vec::with_capacity(size);
            while zs.len() < size {
                let r = MAX_ZERO_MODULUS * rng.random::<f64>().sqrt();
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                let z = Complex64::from_polar(r, theta);
                if zs.iter().all(|y| (z - y).norm() >= min_sep) {
                    zs.push(z);
                }
            }
            zs
        })
        .collect()
}

/// Relative index of the unweighted shift on the subspace of polynomials
/// vanishing on each zero set. Passes when every index is 1 with a rank gap
/// of at least `10³`.
pub fn beurling_index_sweep(sets: &[Vec<Complex64>], n: usize, tol: f64) -> Result<ExperimentReport> {
    for zs in sets {
        validate_zero_set(zs)?;
        if zs.len() >= n {
            return Err(Error::WindowTooSmall { got: n, min: zs.len() + 1 });
        }
    }
    let t = crate::operator::shift_window(&WeightSequence::Unweighted, n)?;
    let results = sets
        .par_iter()
        .map(|zs| {
            let m_in = SubspaceBasis::vanishing_polynomials(zs, n)?;
            let m_out = SubspaceBasis::vanishing_polynomials(zs, n + 1)?;
            rel_index(&t, &m_in, &m_out, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = ExperimentReport::new(
        "beurling_index",
        json!({
            "n": n,
            "tol": tol,
            "zero_sets": sets
                .iter()
                .map(|zs| zs.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        }),
    );
    let mut flagged = 0u64;
    let mut all_good = true;
    for (i, (zs, r)) in sets.iter().zip(&results).enumerate() {
        let sep = if zs.len() > 1 { min_separation(zs) } else { f64::INFINITY };
        let close = sep < CLOSE_ZEROS;
        flagged += u64::from(close);
        all_good &= r.index == 1 && r.gap >= MIN_RANK_GAP;
        let mut step = StepRecord::new(i, None)
            .with("size", zs.len() as f64)
            .with("index", r.index as f64)
            .with("gap", r.gap)
            .with("defect", r.defect)
            .with("ill_conditioned", f64::from(u8::from(close)));
        if sep.is_finite() {
            step = step.with("min_separation", sep);
        }
        report.per_step.push(step);
    }
    report.note("flagged", flagged);
    report.note("sets", sets.len() as u64);
    report.verdict = if all_good { Verdict::Pass } else { Verdict::Fail };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::shift_window;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn plan_validation() {
        let mut p = PerturbationPlan::new(PerturbationKind::DenseRandom, vec![0.1, 0.1], 1);
        assert!(p.validate().is_err());
        p.epsilon_schedule = vec![0.1, 0.01];
        assert!(p.validate().is_ok());
        p.kind = PerturbationKind::CompactZeroing;
        p.zero_set = Some(vec![10, 20]);
        assert!(matches!(p.validate(), Err(Error::InvalidPlan(_))));
        p.epsilon_schedule = vec![1.0];
        assert!(p.validate().is_ok());
        p.zero_set = Some(vec![20, 10]);
        assert!(p.validate().is_err());
    }

    #[test]
    fn dense_perturbation_has_exact_size() {
        let t = shift_window(&WeightSequence::Bergman, 30).unwrap();
        let plan = PerturbationPlan::decades(PerturbationKind::DenseRandom, 3, 5);
        for &eps in &plan.epsilon_schedule {
            let s = perturb(&t, &plan, eps, 0).unwrap();
            assert!((s.distance - eps).abs() <= 1e-12);
        }
    }

    #[test]
    fn jitter_moves_weights_by_at_most_epsilon() {
        let t = shift_window(&WeightSequence::Bergman, 50).unwrap();
        let plan = PerturbationPlan::new(PerturbationKind::WeightJitter, vec![1e-3], 2);
        let s = perturb(&t, &plan, 1e-3, 0).unwrap();
        let diff = s.window.matrix() - t.matrix();
        assert!(diff.iter().all(|d| d.norm() <= 1e-3));
        assert!(s.distance <= 1e-3 * (1.0 + 1e-12));
        for i in 0..50 {
            for j in 0..50 {
                if i != j + 1 {
                    assert_eq!(s.window.matrix()[(i, j)], ZERO);
                }
            }
        }
    }

    #[test]
    fn jitter_rejects_dense_windows() {
        let t = OperatorWindow::new(CMatrix::from_element(3, 3, c(1.0, 0.0)), WindowTag::Custom);
        let plan = PerturbationPlan::new(PerturbationKind::WeightJitter, vec![1e-3], 2);
        assert!(perturb(&t, &plan, 1e-3, 0).is_err());
    }

    #[test]
    fn zeroing_splits_into_nilpotent_blocks() {
        let t = shift_window(&WeightSequence::Bergman, 45).unwrap();
        let mut plan = PerturbationPlan::new(PerturbationKind::CompactZeroing, vec![1.0], 0);
        plan.zero_set = Some((1..10).map(|k| 10 * k).collect());
        let s = perturb(&t, &plan, 1.0, 0).unwrap();
        let square = s.window.compress_square();
        assert_eq!(nilpotent_blocks(square.matrix()), Some(vec![11, 10, 10, 10, 4]));
        // the unperturbed shift is a single block
        assert_eq!(nilpotent_blocks(t.compress_square().matrix()), Some(vec![45]));
        let dense = CMatrix::from_element(2, 2, c(1.0, 0.0));
        assert_eq!(nilpotent_blocks(&dense), None);
    }

    #[test]
    fn single_step_schedule_is_inconclusive() {
        let plan = PerturbationPlan::new(PerturbationKind::DenseRandom, vec![1e-3], 42);
        let cfg = NormStabilityConfig {
            roots: vec![c(0.5, 0.0)],
            n: 80,
            tol: 1e-8,
            trial: 0,
        };
        let r = norm_stability_run(&WeightSequence::Unweighted, &plan, &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.fitted_slope.is_none());
        assert!(r.per_step[0].metrics["distance"] > 0.0);
    }

    #[test]
    fn norm_stability_examples() {
        let plan = PerturbationPlan::decades(PerturbationKind::DenseRandom, 5, 42);
        let bergman = NormStabilityConfig {
            roots: vec![c(0.3, 0.0), c(-0.4, 0.0)],
            n: 200,
            tol: 1e-8,
            trial: 0,
        };
        let r = norm_stability_run(&WeightSequence::Bergman, &plan, &bergman).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.fitted_slope);
        let unweighted = NormStabilityConfig {
            roots: vec![c(0.5, 0.0)],
            ..bergman
        };
        let r = norm_stability_run(&WeightSequence::Unweighted, &plan, &unweighted).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.fitted_slope);
        let d: Vec<f64> = r.per_step.iter().map(|s| s.metrics["distance"]).collect();
        assert!(d.windows(2).all(|w| w[1] <= 3.0 * w[0]));
    }

    #[test]
    fn zero_perturbation_keeps_the_index() {
        let setup = SemicontinuitySetup {
            blocks: 1,
            n: 48,
            zeros: vec![c(0.3, 0.2), c(-0.5, 0.0)],
            trials: 4,
            tol: 1e-8,
        };
        // jitter of size 1e-300 leaves every weight unchanged in floating point
        let plan = PerturbationPlan::new(PerturbationKind::WeightJitter, vec![1e-300], 1);
        let r = semicontinuity_run(&WeightSequence::Unweighted, &setup, &plan).unwrap();
        assert_eq!(r.summary["index_t"], 1);
        assert_eq!(r.per_step[0].metrics["min_index_s"], 1.0);
        assert_eq!(r.per_step[0].metrics["max_index_s"], 1.0);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn jittered_double_shift_keeps_index_two() {
        let setup = SemicontinuitySetup {
            blocks: 2,
            n: 24,
            zeros: vec![],
            trials: 8,
            tol: 1e-8,
        };
        let plan = PerturbationPlan::halving(PerturbationKind::WeightJitter, 6, 3);
        let r = semicontinuity_run(&WeightSequence::Unweighted, &setup, &plan).unwrap();
        assert_eq!(r.summary["index_t"], 2);
        assert!(r.per_step.iter().all(|s| s.metrics["min_index_s"] == 2.0));
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn semicontinuity_requires_bounded_below() {
        let w = WeightSequence::Unweighted;
        let setup = SemicontinuitySetup {
            blocks: 1,
            n: 20,
            zeros: vec![],
            trials: 1,
            tol: 1e-8,
        };
        let plan = PerturbationPlan::new(PerturbationKind::WeightJitter, vec![1e-3], 1);
        assert!(semicontinuity_run(&w, &setup, &plan).is_ok());
        let dense = PerturbationPlan::new(PerturbationKind::DenseRandom, vec![1e-3], 1);
        assert!(semicontinuity_run(&w, &setup, &dense).is_err());
        // ω(n) jumps by 100 at n = 2 → α_1 = 1/100 once ω drops back
        let spiky = WeightSequence::from_fn(100, |n| if n == 2 { 100.0 } else { 1.0 }).unwrap();
        assert!(matches!(
            semicontinuity_run(&spiky, &setup, &plan),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn sweep_examples() {
        let r = beurling_index_sweep(&[vec![ZERO]], 32, 1e-8).unwrap();
        assert_eq!(r.per_step[0].metrics["index"], 1.0);
        let sets = random_zero_sets(50, 11, 1e-2);
        assert!(sets.iter().all(|s| validate_zero_set(s).is_ok() && min_separation(s) >= 1e-2));
        let r = beurling_index_sweep(&sets, 128, 1e-8).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(beurling_index_sweep(&[vec![c(0.3, 0.0), c(0.3, 0.0)]], 32, 1e-8).is_err());
        assert!(beurling_index_sweep(&[vec![c(0.9, 0.0)]], 32, 1e-8).is_err());
    }

    #[test]
    fn close_zeros_are_flagged() {
        let r = beurling_index_sweep(&[vec![c(0.3, 0.0), c(0.3, 5e-4)]], 64, 1e-8).unwrap();
        assert_eq!(r.summary["flagged"], 1);
    }

    #[test]
    fn reruns_are_identical() {
        let setup = SemicontinuitySetup {
            blocks: 1,
            n: 32,
            zeros: vec![c(0.2, -0.1)],
            trials: 6,
            tol: 1e-8,
        };
        let plan = PerturbationPlan::halving(PerturbationKind::WeightJitter, 4, 9);
        let a = semicontinuity_run(&WeightSequence::Bergman, &setup, &plan).unwrap();
        let b = semicontinuity_run(&WeightSequence::Bergman, &setup, &plan).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }
}
