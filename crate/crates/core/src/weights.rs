//! Weight sequences `ω` and the shift weights `α_n` they induce.
//!
//! A [`WeightSequence`] is either one of three closed-form presets or an
//! explicit table of `ω(n)` values. Shift weights are always derived from the
//! sequence, never stored, so the telescoping product
//! `π_n = α_0 ⋯ α_{n−1}` stays exact.
//!
//! The Bergman preset is the one place where `ω` and `α` are not related by
//! `α_n = ω(n+1)/ω(n)`: the Bergman shift has weights `√((n+1)/(n+2)) < 1`,
//! so its natural weight `π_n = 1/√(n+1)` would violate `ω ≥ 1`. The preset
//! stores `ω(n) = 1/π_n = √(n+1)` instead, and `α_n = ω(n)/ω(n+1)`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::least_squares_slope;

/// Any positive weight used to measure coefficient norms.
///
/// Unlike [`WeightSequence`], implementors need not satisfy `ω ≥ 1`
/// (the shifted weights `ω_s` usually do not).
pub trait Weight {
    fn value(&self, n: usize) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Unweighted,
    Bergman,
    QuasianalyticSqrt,
    Explicit,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightSequence {
    /// `ω ≡ 1`, `α_n = 1`.
    Unweighted,
    /// `α_n = √((n+1)/(n+2))`, `ω(n) = √(n+1)`.
    Bergman,
    /// `ω(n) = exp(√n)`, `α_n = exp(√(n+1) − √n)`.
    QuasianalyticSqrt,
    /// Tabulated `ω(0..=max_index_hint)`.
    Explicit(Vec<f64>),
}

impl WeightSequence {
    /// Validated explicit sequence: `ω(0) = 1 ± 1e−9`, every value finite and `≥ 1`.
    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        let first = *values
            .first()
            .ok_or_else(|| Error::InvalidWeights("empty weight table".into()))?;
        if (first - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidWeights(format!(
                "omega(0) must be 1, got {first}"
            )));
        }
        if let Some((n, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 1.0)
        {
            return Err(Error::InvalidWeights(format!(
                "omega({n}) = {v} is not a finite value >= 1"
            )));
        }
        Ok(WeightSequence::Explicit(values))
    }

    /// Explicit sequence tabulated from a closure on `0..=max_index`.
    pub fn from_fn(max_index: usize, f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::explicit((0..=max_index).map(f).collect())
    }

    /// `ω(n) = (n+1)^p` tabulated on `0..=max_index`.
    pub fn power(p: f64, max_index: usize) -> Self {
        Self::from_fn(max_index, |n| ((n + 1) as f64).powf(p)).expect("(n+1)^p >= 1 for p >= 0")
    }

    /// Resolve a preset name, or read an explicit table from a file path.
    pub fn from_name_or_path(name: &str) -> Result<Self> {
        match name {
            "unweighted" => Ok(Self::Unweighted),
            "bergman" => Ok(Self::Bergman),
            "quasianalytic_sqrt" => Ok(Self::QuasianalyticSqrt),
            path => Self::read_file(path),
        }
    }

    /// One `ω(n)` per line, line number = `n`.
    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_table(&text)
    }

    pub fn parse_table(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        let lines: Vec<&str> = text.lines().collect();
        let last = lines
            .iter()
            .rposition(|l| !l.trim().is_empty())
            .map_or(0, |i| i + 1);
        for (n, line) in lines[..last].iter().enumerate() {
            let v: f64 = line.trim().parse().map_err(|_| {
                Error::Parse(format!("line {}: `{}` is not a decimal number", n + 1, line))
            })?;
            values.push(v);
        }
        Self::explicit(values)
    }

    pub fn kind(&self) -> WeightKind {
        match self {
            Self::Unweighted => WeightKind::Unweighted,
            Self::Bergman => WeightKind::Bergman,
            Self::QuasianalyticSqrt => WeightKind::QuasianalyticSqrt,
            Self::Explicit(_) => WeightKind::Explicit,
        }
    }

    /// Short label used in reports.
    pub fn label(&self) -> String {
        match self {
            Self::Unweighted => "unweighted".into(),
            Self::Bergman => "bergman".into(),
            Self::QuasianalyticSqrt => "quasianalytic_sqrt".into(),
            Self::Explicit(v) => format!("explicit[{}]", v.len()),
        }
    }

    /// Largest trustworthy index; `None` for the unbounded presets.
    pub fn max_index_hint(&self) -> Option<usize> {
        match self {
            Self::Explicit(v) => Some(v.len() - 1),
            _ => None,
        }
    }

    fn check_index(&self, n: usize) -> Result<()> {
        match self.max_index_hint() {
            Some(hint) if n > hint => Err(Error::IndexOutOfData { index: n, hint }),
            _ => Ok(()),
        }
    }

    pub fn omega_at(&self, n: usize) -> Result<f64> {
        self.check_index(n)?;
        Ok(match self {
            Self::Unweighted => 1.0,
            Self::Bergman => ((n + 1) as f64).sqrt(),
            Self::QuasianalyticSqrt => (n as f64).sqrt().exp(),
            Self::Explicit(v) => v[n],
        })
    }

    pub fn alpha_at(&self, n: usize) -> Result<f64> {
        self.check_index(n + 1)?;
        Ok(match self {
            Self::Unweighted => 1.0,
            Self::Bergman => ((n + 1) as f64 / (n + 2) as f64).sqrt(),
            // √(n+1) − √n without cancellation
            Self::QuasianalyticSqrt => (1.0 / (((n + 1) as f64).sqrt() + (n as f64).sqrt())).exp(),
            Self::Explicit(v) => v[n + 1] / v[n],
        })
    }

    /// `ln π_n`, telescoped in closed form.
    pub fn log_pi(&self, n: usize) -> Result<f64> {
        self.check_index(n)?;
        Ok(match self {
            Self::Unweighted => 0.0,
            Self::Bergman => -0.5 * ((n + 1) as f64).ln(),
            Self::QuasianalyticSqrt => (n as f64).sqrt(),
            Self::Explicit(v) => (v[n] / v[0]).ln(),
        })
    }

    /// `π_n = α_0 ⋯ α_{n−1}`, with `π_0 = 1`.
    pub fn pi_product(&self, n: usize) -> Result<f64> {
        Ok(self.log_pi(n)?.exp())
    }

    /// `α_0, …, α_{count−1}`.
    pub fn alphas(&self, count: usize) -> Result<Vec<f64>> {
        (0..count).map(|n| self.alpha_at(n)).collect()
    }

    /// `ω_s(n) = ω(n)(1+n)^{−s}` as a norm weight.
    pub fn shifted(&self, s: f64) -> ShiftedWeight<'_, Self> {
        ShiftedWeight { base: self, s }
    }

    /// Errors unless `0 < inf α_n ≤ sup α_n < ∞` on `0..n_max`.
    pub fn check_bounded_ratios(&self, n_max: usize) -> Result<(f64, f64)> {
        let alphas = self.alphas(n_max)?;
        let lo = alphas.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = alphas.iter().copied().fold(0.0, f64::max);
        if !(lo > 0.0 && hi.is_finite()) {
            return Err(Error::InvalidWeights(format!(
                "shift weights not bounded: inf {lo}, sup {hi}"
            )));
        }
        Ok((lo, hi))
    }
}

impl Weight for WeightSequence {
    fn value(&self, n: usize) -> Result<f64> {
        self.omega_at(n)
    }
}

/// `ω_s(n) = ω(n)(1+n)^{−s}`.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedWeight<'a, W: ?Sized> {
    base: &'a W,
    s: f64,
}

impl<'a, W: Weight + ?Sized> ShiftedWeight<'a, W> {
    pub fn new(base: &'a W, s: f64) -> Self {
        Self { base, s }
    }
}

impl<W: Weight + ?Sized> Weight for ShiftedWeight<'_, W> {
    fn value(&self, n: usize) -> Result<f64> {
        Ok(self.base.value(n)? * ((n + 1) as f64).powf(-self.s))
    }
}

/// Finite-window surrogates for the radii that govern the point spectrum of
/// the adjoint and the essential spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusEstimates {
    /// `π_N^{1/N}`, the surrogate of `liminf π_n^{1/n}`.
    pub r_point: f64,
    /// Largest geometric mean of `window_len` consecutive weights.
    pub r_spec: f64,
    /// Smallest geometric mean over windows starting in the tail `[N/2, N−L]`.
    pub r0: f64,
    pub window_len: usize,
}

pub const MIN_RADIUS_WINDOW: usize = 64;

/// Radius estimates with window length `⌊√N⌋`.
pub fn radius_estimates(w: &WeightSequence, n: usize) -> Result<RadiusEstimates> {
    radius_estimates_with_window(w, n, (n as f64).sqrt().floor() as usize)
}

pub fn radius_estimates_with_window(
    w: &WeightSequence,
    n: usize,
    window_len: usize,
) -> Result<RadiusEstimates> {
    if n < MIN_RADIUS_WINDOW {
        return Err(Error::WindowTooSmall {
            got: n,
            min: MIN_RADIUS_WINDOW,
        });
    }
    if window_len == 0 || window_len > n / 2 {
        return Err(Error::Precondition(format!(
            "window length {window_len} must lie in 1..={}",
            n / 2
        )));
    }
    let r_point = (w.log_pi(n)? / n as f64).exp();
    // prefix[k] = ln π_k
    let prefix: Vec<f64> = (0..=n).map(|k| w.log_pi(k)).collect::<Result<_>>()?;
    let mean = |k: usize| ((prefix[k + window_len] - prefix[k]) / window_len as f64).exp();
    let last = n - window_len;
    let r_spec = (0..=last).map(mean).fold(f64::NEG_INFINITY, f64::max);
    let r0 = (n / 2..=last).map(mean).fold(f64::INFINITY, f64::min);
    Ok(RadiusEstimates {
        r_point,
        r_spec,
        r0,
        window_len,
    })
}

/// `π_n^{1/n}` for any `n ≥ 1`; the chain modules use it for ℓ² flags.
pub fn point_radius(w: &WeightSequence, n: usize) -> Result<f64> {
    let n = n.max(1);
    Ok((w.log_pi(n)? / n as f64).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceVerdict {
    Diverges,
    Converges,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    /// Bounded shift-weight ratios and `ω(n)^{1/n}` decreasing toward 1.
    pub regular: bool,
    /// `t ↦ log ω(e^t)` convex on the integer tail.
    pub log_convex_tail: bool,
    pub tail_start: usize,
    pub tail_end: usize,
    /// `n ↦ log ω_s(n)` concave on the tail, for `s = 1, 2, 3`.
    pub omega_s_concave: BTreeMap<u32, bool>,
    /// Discrete convexity of `log ω_1(n)`; informational only.
    pub log_omega1_convex: bool,
    /// `(N, S_N)` with `S_N = Σ_{n≤N} log ω(n)/(n^{3/2}+1)`.
    pub quasianalytic_partial_sums: Vec<(usize, f64)>,
    /// Least-squares slope of `S_N` against `log N`.
    pub growth_slope: Option<f64>,
    /// Decay exponent `p` of the summands, fitted on the last checkpoint's tail.
    pub term_decay_exponent: Option<f64>,
    pub divergence_verdict: DivergenceVerdict,
    pub shields_hypotheses_met: bool,
}

/// Thresholds of the classifier; defaults are the shipped decision rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyConfig {
    pub checkpoints: [usize; 4],
    pub divergence_slope: f64,
    pub cauchy_tol: f64,
    /// Summands decaying at least this fast (`a_n ≲ n^{−p}`) count as summable.
    pub summable_exponent: f64,
    /// Summands decaying no faster than this count as harmonic-like.
    pub harmonic_exponent: f64,
    /// Cap on `log ω(N)/N` for the regularity check.
    pub root_growth_cap: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            checkpoints: [64, 256, 1024, 4096],
            divergence_slope: 0.1,
            cauchy_tol: 1e-3,
            summable_exponent: 1.25,
            harmonic_exponent: 1.05,
            root_growth_cap: 0.25,
        }
    }
}

pub fn classify(w: &WeightSequence, n: usize) -> Result<ClassificationReport> {
    classify_with(w, n, &ClassifyConfig::default())
}

pub fn classify_with(
    w: &WeightSequence,
    n: usize,
    cfg: &ClassifyConfig,
) -> Result<ClassificationReport> {
    if n < MIN_RADIUS_WINDOW {
        return Err(Error::WindowTooSmall {
            got: n,
            min: MIN_RADIUS_WINDOW,
        });
    }
    // explicit tables must cover the window; α needs one extra value
    if let Some(hint) = w.max_index_hint() {
        if hint < n + 1 {
            return Err(Error::IndexOutOfData {
                index: n + 1,
                hint,
            });
        }
    }
    let data_limit = w
        .max_index_hint()
        .map_or(n.max(cfg.checkpoints[3]) + 1, |h| h);
    let log_omega: Vec<f64> = (0..=data_limit)
        .map(|k| w.omega_at(k).map(f64::ln))
        .collect::<Result<_>>()?;
    let tail_start = n / 2;
    let tail_end = n;
    let tol = |x: f64| 1e-12 * (1.0 + x.abs());

    // regularity
    let ratios_bounded = w.check_bounded_ratios(n).is_ok();
    let root_growth: Vec<f64> = (tail_start.max(1)..=tail_end)
        .map(|k| log_omega[k] / k as f64)
        .collect();
    let root_decreasing = root_growth.windows(2).all(|p| p[1] <= p[0] + tol(p[0]));
    let regular = ratios_bounded
        && root_decreasing
        && root_growth.last().copied().unwrap_or(0.0) <= cfg.root_growth_cap;

    // log ω(e^t) convex: slopes against log n nondecreasing
    let loglog_slopes: Vec<f64> = (tail_start.max(1)..tail_end)
        .map(|k| {
            (log_omega[k + 1] - log_omega[k]) / (((k + 1) as f64).ln() - (k as f64).ln())
        })
        .collect();
    let log_convex_tail = loglog_slopes
        .windows(2)
        .all(|p| p[1] >= p[0] - tol(p[0]));

    let log_omega_s = |s: f64, k: usize| log_omega[k] - s * ((k + 1) as f64).ln();
    let second_diff = |s: f64, k: usize| {
        log_omega_s(s, k + 1) - 2.0 * log_omega_s(s, k) + log_omega_s(s, k - 1)
    };
    let mut omega_s_concave = BTreeMap::new();
    for s in 1..=3u32 {
        let concave = (tail_start.max(1)..tail_end)
            .all(|k| second_diff(s as f64, k) <= tol(log_omega_s(s as f64, k)));
        omega_s_concave.insert(s, concave);
    }
    let log_omega1_convex =
        (tail_start.max(1)..tail_end).all(|k| second_diff(1.0, k) >= -tol(log_omega_s(1.0, k)));

    // partial sums of log ω(n)/(n^{3/2}+1)
    let term = |k: usize| log_omega[k] / ((k as f64).powf(1.5) + 1.0);
    let checkpoints: Vec<usize> = cfg
        .checkpoints
        .iter()
        .copied()
        .filter(|&c| c <= data_limit)
        .collect();
    let mut sums = Vec::with_capacity(checkpoints.len());
    let mut acc = 0.0;
    let mut next = 0;
    for &c in &checkpoints {
        while next <= c {
            acc += term(next);
            next += 1;
        }
        sums.push((c, acc));
    }
    let xs: Vec<f64> = sums.iter().map(|(c, _)| (*c as f64).ln()).collect();
    let ys: Vec<f64> = sums.iter().map(|(_, s)| *s).collect();
    let growth_slope = least_squares_slope(&xs, &ys);

    let term_decay_exponent = checkpoints.last().and_then(|&last| {
        let (lx, ly): (Vec<f64>, Vec<f64>) = (last / 2..=last)
            .filter(|&k| k > 0 && term(k) > 0.0)
            .map(|k| ((k as f64).ln(), term(k).ln()))
            .unzip();
        if lx.len() < (last / 2) / 2 {
            None
        } else {
            least_squares_slope(&lx, &ly).map(|s| -s)
        }
    });

    let cauchy = ys.len() >= 2 && (ys[ys.len() - 1] - ys[ys.len() - 2]).abs() < cfg.cauchy_tol;
    let divergence_verdict = if cauchy
        || term_decay_exponent.is_some_and(|p| p >= cfg.summable_exponent)
    {
        DivergenceVerdict::Converges
    } else if growth_slope.is_some_and(|s| s >= cfg.divergence_slope)
        && term_decay_exponent.is_some_and(|p| p <= cfg.harmonic_exponent)
    {
        DivergenceVerdict::Diverges
    } else {
        DivergenceVerdict::Inconclusive
    };

    let shields_hypotheses_met = regular
        && log_convex_tail
        && omega_s_concave.values().all(|&c| c)
        && divergence_verdict == DivergenceVerdict::Diverges;

    Ok(ClassificationReport {
        regular,
        log_convex_tail,
        tail_start,
        tail_end,
        omega_s_concave,
        log_omega1_convex,
        quasianalytic_partial_sums: sums,
        growth_slope,
        term_decay_exponent,
        divergence_verdict,
        shields_hypotheses_met,
    })
}

/// True when `n ↦ w(n)` is nondecreasing on `[from, to]`.
pub fn increasing_on<W: Weight + ?Sized>(w: &W, from: usize, to: usize) -> Result<bool> {
    let mut prev = w.value(from)?;
    for k in from + 1..=to {
        let v = w.value(k)?;
        if v < prev * (1.0 - 1e-12) {
            return Ok(false);
        }
        prev = v;
    }
    Ok(true)
}
