//! Command-line front end: one command per process, a TOML config file
//! and/or flags resolved into a [`RunConfig`], a JSON report and a CSV of
//! per-step data on disk.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::beurling::{
    algebra_constant, check_wa, check_wa_batch, check_wc, check_wc_batch,
    derivative_equivalence_batch, derivative_equivalence_probe, AlgebraKernel, CoefficientSeries,
};
use crate::error::{Error, Result};
use crate::operator::jordan_chain;
use crate::report::{ExperimentReport, StepRecord, Verdict};
use crate::stability::{
    beurling_index_sweep, norm_stability_run, random_zero_sets, semicontinuity_run,
    NormStabilityConfig, PerturbationKind, PerturbationPlan, SemicontinuitySetup,
};
use crate::weights::{classify, radius_estimates, WeightSequence};

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "SHIFTLAB_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Classify,
    Radii,
    Chain,
    Stability,
    Semicont,
    BeurlingIndex,
    BeurlingCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BeurlingCheck {
    /// `max_n Σ_k (ω(n)/(ω(k)ω(n−k)))²` for the configured weight.
    Algebra,
    /// The same sum with the kernel `(n+1)²/((k+1)²(n−k+1)²)`.
    DisplayedKernel,
    Wa,
    Wc,
    Derivative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum PerturbationArg {
    DenseRandom,
    WeightJitter,
}

impl From<PerturbationArg> for PerturbationKind {
    fn from(p: PerturbationArg) -> Self {
        match p {
            PerturbationArg::DenseRandom => PerturbationKind::DenseRandom,
            PerturbationArg::WeightJitter => PerturbationKind::WeightJitter,
        }
    }
}

/// Everything a run depends on. Fields left as `None` take a per-command
/// default in [`RunConfig::resolve`]; the resolved config is echoed into the
/// report.
///
/// | key | default |
/// |-----|---------|
/// | `weight` | `power:1` for beurling-check, `unweighted` for semicont, else `bergman` |
/// | `n` | classify/radii 4096, chain/stability 200, semicont 64, beurling-index 128, beurling-check 10000 |
/// | `lambda` | `0.5` |
/// | `m` | 2 |
/// | `roots` | `0.3, -0.4` |
/// | `zeros` | none (random sets for beurling-index, whole space for semicont) |
/// | `random_sets` | 50 |
/// | `min_separation` | 0.01 |
/// | `epsilon` | `1e-1 … 1e-5` for stability, `2^-1 … 2^-14` for semicont |
/// | `perturbation` | `dense_random` for stability, `weight_jitter` for semicont |
/// | `seed` | 42 |
/// | `tol` | 1e-8 |
/// | `trials` | 200 |
/// | `blocks` | 1 |
/// | `check` | `wa` |
/// | `p` | `z − 1` as coefficients `-1, 1` |
/// | `degree` | 32 |
/// | `samples` | 1000 |
/// | `trend_tolerance` | 0.05 |
/// | `series` | none |
/// | `output` | `shiftlab` |
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<CommandName>,
    pub weight: Option<String>,
    pub n: Option<usize>,
    #[serde(with = "complex_text")]
    pub lambda: Complex64,
    pub m: usize,
    #[serde(with = "complex_list")]
    pub roots: Vec<Complex64>,
    #[serde(with = "complex_sets")]
    pub zeros: Vec<Vec<Complex64>>,
    pub random_sets: usize,
    pub min_separation: f64,
    pub epsilon: Option<Vec<f64>>,
    pub perturbation: Option<PerturbationArg>,
    pub seed: u64,
    pub tol: f64,
    pub trials: usize,
    pub blocks: usize,
    pub check: BeurlingCheck,
    #[serde(with = "complex_list")]
    pub p: Vec<Complex64>,
    pub degree: usize,
    pub samples: usize,
    pub trend_tolerance: f64,
    pub series: Option<PathBuf>,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            weight: None,
            n: None,
            lambda: Complex64::new(0.5, 0.0),
            m: 2,
            roots: vec![Complex64::new(0.3, 0.0), Complex64::new(-0.4, 0.0)],
            zeros: Vec::new(),
            random_sets: 50,
            min_separation: 1e-2,
            epsilon: None,
            perturbation: None,
            seed: 42,
            tol: 1e-8,
            trials: 200,
            blocks: 1,
            check: BeurlingCheck::Wa,
            p: vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)],
            degree: 32,
            samples: 1000,
            trend_tolerance: 0.05,
            series: None,
            output: PathBuf::from("shiftlab"),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_owned();
            let key = msg
                .strip_prefix("unknown field `")
                .and_then(|rest| rest.split('`').next())
                .map(str::to_owned)
                .unwrap_or_else(|| "config".to_owned());
            Error::Config { key, reason: msg }
        })
    }

    pub fn read_toml(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn command(&self) -> Result<CommandName> {
        self.command.ok_or_else(|| Error::Config {
            key: "command".into(),
            reason: "no command given".into(),
        })
    }

    /// Fill every per-command default.
    pub fn resolve(mut self) -> Result<Self> {
        let cmd = self.command()?;
        self.weight.get_or_insert_with(|| {
            match cmd {
                CommandName::BeurlingCheck => "power:1",
                CommandName::Semicont => "unweighted",
                _ => "bergman",
            }
            .to_owned()
        });
        self.n.get_or_insert(match cmd {
            CommandName::Classify | CommandName::Radii => 4096,
            CommandName::Chain | CommandName::Stability => 200,
            CommandName::Semicont => 64,
            CommandName::BeurlingIndex => 128,
            CommandName::BeurlingCheck => 10_000,
        });
        match cmd {
            CommandName::Stability => {
                self.epsilon
                    .get_or_insert_with(|| (1..=5).map(|k| 10f64.powi(-k)).collect());
                self.perturbation.get_or_insert(PerturbationArg::DenseRandom);
            }
            CommandName::Semicont => {
                self.epsilon
                    .get_or_insert_with(|| (1..=14).map(|k| 0.5f64.powi(k)).collect());
                self.perturbation.get_or_insert(PerturbationArg::WeightJitter);
            }
            _ => {}
        }
        Ok(self)
    }

    fn weight_sequence(&self) -> Result<WeightSequence> {
        let name = self.weight.as_deref().unwrap_or("bergman");
        if let Some(p) = name.strip_prefix("power:") {
            let p: f64 = p.parse().map_err(|_| Error::Config {
                key: "weight".into(),
                reason: format!("`{name}` is not of the form power:<exponent>"),
            })?;
            if p.is_nan() || p < 0.0 {
                return Err(Error::Config {
                    key: "weight".into(),
                    reason: "power weights need a nonnegative exponent".into(),
                });
            }
            let top = self.n.unwrap_or(0).max(4 * self.degree + 8);
            return Ok(WeightSequence::power(p, top));
        }
        WeightSequence::from_name_or_path(name).map_err(|e| Error::Config {
            key: "weight".into(),
            reason: e.to_string(),
        })
    }

    fn plan(&self) -> PerturbationPlan {
        PerturbationPlan::new(
            self.perturbation.unwrap_or(PerturbationArg::DenseRandom).into(),
            self.epsilon.clone().unwrap_or_default(),
            self.seed,
        )
    }

    fn n(&self) -> usize {
        self.n.expect("resolved config")
    }
}

/// Flags; any flag given overrides the config file.
#[derive(Debug, Parser)]
#[command(name = "shiftlab", version, about = "Weighted shift operator experiments")]
pub struct Cli {
    pub command: Option<CommandName>,
    /// TOML file with any of the config keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Preset (unweighted, bergman, quasianalytic_sqrt), power:<p>, or a file with one ω(n) per line.
    #[arg(long)]
    pub weight: Option<String>,
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Roots of the minimal polynomial, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub roots: Option<String>,
    /// Zero sets: points separated by commas, sets by semicolons.
    #[arg(long, allow_hyphen_values = true)]
    pub zeros: Option<String>,
    #[arg(long)]
    pub random_sets: Option<usize>,
    #[arg(long)]
    pub min_separation: Option<f64>,
    /// Strictly decreasing, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<String>,
    #[arg(long, value_enum)]
    pub perturbation: Option<PerturbationArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long, value_enum)]
    pub check: Option<BeurlingCheck>,
    /// Coefficients of the polynomial used by the wa check, lowest first.
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<String>,
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub trend_tolerance: Option<f64>,
    /// JSON file of [re, im] coefficient pairs.
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Path prefix of the written artifacts.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn keyed<T>(key: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::Config {
            key: key.to_owned(),
            reason: other.to_string(),
        },
    })
}

impl Cli {
    /// Merge the config file (if any), the flags and the seed override.
    pub fn into_config(self, seed_env: Option<String>) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::read_toml(path)?,
            None => RunConfig::default(),
        };
        if self.command.is_some() {
            c.command = self.command;
        }
        if self.weight.is_some() {
            c.weight = self.weight;
        }
        if self.n.is_some() {
            c.n = self.n;
        }
        if let Some(s) = &self.lambda {
            c.lambda = keyed("lambda", parse_complex(s))?;
        }
        if let Some(m) = self.m {
            c.m = m;
        }
        if let Some(s) = &self.roots {
            c.roots = keyed("roots", parse_complex_list(s))?;
        }
        if let Some(s) = &self.zeros {
            c.zeros = keyed("zeros", parse_complex_sets(s))?;
        }
        if let Some(s) = &self.epsilon {
            c.epsilon = Some(keyed("epsilon", parse_real_list(s))?);
        }
        if let Some(s) = &self.p {
            c.p = keyed("p", parse_complex_list(s))?;
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        take!(random_sets, min_separation, seed, tol, trials, blocks, check, degree, samples, trend_tolerance);
        if self.perturbation.is_some() {
            c.perturbation = self.perturbation;
        }
        if self.series.is_some() {
            c.series = self.series;
        }
        if let Some(o) = self.output {
            c.output = o;
        }
        if let Some(s) = seed_env {
            c.seed = s.trim().parse().map_err(|_| Error::Config {
                key: SEED_ENV.into(),
                reason: format!("`{s}` is not an unsigned 64-bit integer"),
            })?;
        }
        c.resolve()
    }
}

/// Parses `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`; `−` (U+2212) counts as a
/// minus sign.
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s = text.trim().replace('\u{2212}', "-");
    let bad = || Error::Parse(format!("`{text}` is not a complex number"));
    let real = |t: &str| t.parse::<f64>().map_err(|_| bad());
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(real(&s)?, 0.0));
    };
    let imag = |t: &str| match t {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        t => real(t),
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => Ok(Complex64::new(real(&body[..k])?, imag(&body[k..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

/// Inverse of [`parse_complex`], exact for every finite value.
pub fn format_complex(z: Complex64) -> String {
    let (re, im) = (z.re, z.im);
    if im == 0.0 {
        format!("{re}")
    } else if re == 0.0 {
        format!("{im}i")
    } else {
        format!("{re}{im:+}i")
    }
}

pub fn parse_complex_list(text: &str) -> Result<Vec<Complex64>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(parse_complex).collect()
}

pub fn parse_complex_sets(text: &str) -> Result<Vec<Vec<Complex64>>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(parse_complex_list)
        .collect()
}

fn parse_real_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            let t = t.trim().replace('\u{2212}', "-");
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("`{t}` is not a number")))
        })
        .collect()
}

mod complex_text {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_complex(*z))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Complex64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Complex64::new(x, 0.0)),
            Raw::Text(t) => parse_complex(&t).map_err(serde::de::Error::custom),
        }
    }
}

mod complex_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
        let text: Vec<String> = v.iter().map(|z| format_complex(*z)).collect();
        text.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Complex64>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|t| parse_complex(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

mod complex_sets {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<Complex64>], s: S) -> std::result::Result<S::Ok, S::Error> {
        let text: Vec<Vec<String>> = v
            .iter()
            .map(|set| set.iter().map(|z| format_complex(*z)).collect())
            .collect();
        text.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Vec<Complex64>>, D::Error> {
        let raw = Vec::<Vec<String>>::deserialize(d)?;
        raw.iter()
            .map(|set| {
                set.iter()
                    .map(|t| parse_complex(t).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

/// What a run produced.
#[derive(Debug)]
pub struct Outcome {
    pub report: ExperimentReport,
    pub written: Vec<PathBuf>,
}

impl Outcome {
    /// 2 when the verdict failed, 0 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.report.verdict == Verdict::Fail {
            2
        } else {
            0
        }
    }

    pub fn summary_line(&self) -> String {
        let files: Vec<String> = self.written.iter().map(|p| p.display().to_string()).collect();
        let verdict = serde_json::to_value(self.report.verdict).expect("plain enum");
        let mut line = format!(
            "{}: verdict {}",
            self.report.experiment,
            verdict.as_str().unwrap_or_default()
        );
        if let Some(s) = self.report.fitted_slope {
            line.push_str(&format!(", fitted slope {s:.4}"));
        }
        line.push_str(&format!("; wrote {}", files.join(", ")));
        line
    }
}

/// Execute a resolved config and write its artifacts.
pub fn run(config: &RunConfig) -> Result<Outcome> {
    let mut report = build_report(config)?;
    let mut inputs = serde_json::to_value(config)?;
    if let (Value::Object(map), Value::Object(extra)) = (&mut inputs, report.inputs.take()) {
        map.insert("resolved".into(), Value::Object(extra));
    }
    report.inputs = inputs;
    let written = report.write_artifacts(&config.output)?;
    Ok(Outcome { report, written })
}

fn build_report(c: &RunConfig) -> Result<ExperimentReport> {
    let w = c.weight_sequence()?;
    let n = c.n();
    match c.command()? {
        CommandName::Classify => {
            let cls = classify(&w, n)?;
            let mut r = ExperimentReport::new("classify", json!({ "weight": w.label(), "n": n }));
            for (i, &(k, s)) in cls.quasianalytic_partial_sums.iter().enumerate() {
                r.per_step.push(StepRecord::new(i, None).with("n", k as f64).with("partial_sum", s));
            }
            if let Value::Object(map) = serde_json::to_value(&cls)? {
                r.summary.extend(map);
            }
            r.fitted_slope = cls.growth_slope;
            Ok(r)
        }
        CommandName::Radii => {
            let est = radius_estimates(&w, n)?;
            let mut r = ExperimentReport::new("radii", json!({ "weight": w.label(), "n": n }));
            if let Value::Object(map) = serde_json::to_value(est)? {
                r.summary.extend(map);
            }
            Ok(r)
        }
        CommandName::Chain => {
            let ch = jordan_chain(&w, c.lambda, c.m, n)?;
            let mut r = ExperimentReport::new("chain", json!({ "weight": w.label(), "n": n }));
            for k in 0..ch.len() {
                r.per_step.push(
                    StepRecord::new(k, None)
                        .with("k", (k + 1) as f64)
                        .with("norm_sqr", ch.norm_sqr(k))
                        .with("residual", ch.residuals[k]),
                );
            }
            r.note("in_l2", ch.in_l2);
            r.note("tail_bound", ch.tail_bound);
            r.note("r_point", ch.r_point);
            if let Some(g) = ch.vectors.get(1) {
                let head: Vec<[f64; 2]> = g.iter().take(8).map(|z| [z.re, z.im]).collect();
                r.note("gamma", json!(head));
                if g.len() > 2 {
                    r.note("gamma_2", json!([g[2].re, g[2].im]));
                }
            }
            Ok(r)
        }
        CommandName::Stability => {
            let cfg = NormStabilityConfig {
                roots: c.roots.clone(),
                n,
                tol: c.tol,
                trial: 0,
            };
            norm_stability_run(&w, &c.plan(), &cfg)
        }
        CommandName::Semicont => {
            let zeros = match c.zeros.as_slice() {
                [] => Vec::new(),
                [one] => one.clone(),
                _ => {
                    return Err(Error::Config {
                        key: "zeros".into(),
                        reason: "semicont takes a single zero set".into(),
                    })
                }
            };
            let setup = SemicontinuitySetup {
                blocks: c.blocks,
                n,
                zeros,
                trials: c.trials,
                tol: c.tol,
            };
            semicontinuity_run(&w, &setup, &c.plan())
        }
        CommandName::BeurlingIndex => {
            let sets = if c.zeros.is_empty() {
                random_zero_sets(c.random_sets, c.seed, c.min_separation)
            } else {
                c.zeros.clone()
            };
            beurling_index_sweep(&sets, n, c.tol)
        }
        CommandName::BeurlingCheck => beurling_check(c, &w, n),
    }
}

fn beurling_check(c: &RunConfig, w: &WeightSequence, n: usize) -> Result<ExperimentReport> {
    let series = c
        .series
        .as_ref()
        .map(CoefficientSeries::read_json)
        .transpose()?;
    let inputs = json!({ "weight": w.label(), "n": n });
    let degrees = [c.degree, 2 * c.degree];
    match c.check {
        BeurlingCheck::Algebra | BeurlingCheck::DisplayedKernel => {
            let kernel = match c.check {
                BeurlingCheck::Algebra => AlgebraKernel::Weight(w),
                _ => AlgebraKernel::Displayed,
            };
            let a = algebra_constant(kernel, n)?;
            let mut r = ExperimentReport::new("algebra_constant", inputs);
            for (k, (&s, &m)) in a.sums.iter().zip(&a.running_max).enumerate() {
                r.per_step.push(StepRecord::new(k, None).with("sum", s).with("running_max", m));
            }
            r.note("constant", a.constant);
            r.note("unbounded_trend", a.unbounded_trend);
            Ok(r)
        }
        BeurlingCheck::Wa => {
            let p = CoefficientSeries::new(c.p.clone());
            let mut r = ExperimentReport::new("check_wa", inputs);
            if let Some(f) = series {
                r.note("ratio", check_wa(&p, &f, &f, w)?);
                return Ok(r);
            }
            let maxima = degrees
                .iter()
                .map(|&d| check_wa_batch(&p, w, c.samples, d, c.seed))
                .collect::<Result<Vec<f64>>>()?;
            for (i, (&d, &m)) in degrees.iter().zip(&maxima).enumerate() {
                r.per_step.push(StepRecord::new(i, None).with("degree", d as f64).with("max_ratio", m));
            }
            let growth = maxima[1] / maxima[0] - 1.0;
            r.note("growth", growth);
            r.verdict = if maxima.iter().all(|m| m.is_finite()) && growth <= c.trend_tolerance {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            Ok(r)
        }
        BeurlingCheck::Wc => {
            let mut r = ExperimentReport::new("check_wc", inputs);
            if let Some(f) = series {
                let wc = check_wc(&f, w)?;
                r.note("ratio", wc.ratio);
                if let Some(msg) = wc.warning {
                    eprintln!("warning: {msg}");
                    r.note("warning", msg);
                }
                return Ok(r);
            }
            let runs = degrees
                .iter()
                .map(|&d| check_wc_batch(w, c.samples, d, c.seed))
                .collect::<Result<Vec<_>>>()?;
            for (i, (&d, run)) in degrees.iter().zip(&runs).enumerate() {
                r.per_step.push(StepRecord::new(i, None).with("degree", d as f64).with("min_ratio", run.ratio));
            }
            let decrease = 1.0 - runs[1].ratio / runs[0].ratio;
            r.note("decrease", decrease);
            let warning = runs.iter().find_map(|run| run.warning.clone());
            r.verdict = match &warning {
                Some(msg) => {
                    eprintln!("warning: {msg}");
                    r.note("warning", msg.clone());
                    Verdict::Computed
                }
                None if runs[1].ratio > 0.0 && decrease <= c.trend_tolerance => Verdict::Pass,
                None => Verdict::Fail,
            };
            Ok(r)
        }
        BeurlingCheck::Derivative => {
            let mut r = ExperimentReport::new("derivative_equivalence", inputs);
            if let Some(f) = series {
                let (left, right) = derivative_equivalence_probe(&f, w)?;
                r.note("left", left);
                r.note("right", right);
                return Ok(r);
            }
            let mut inside = true;
            for (i, &d) in degrees.iter().enumerate() {
                let (lo, hi) = derivative_equivalence_batch(w, c.samples, d, c.seed)?;
                inside &= lo >= 0.1 && hi <= 10.0;
                r.per_step.push(
                    StepRecord::new(i, None)
                        .with("degree", d as f64)
                        .with("min_ratio", lo)
                        .with("max_ratio", hi),
                );
            }
            r.verdict = if inside { Verdict::Pass } else { Verdict::Fail };
            Ok(r)
        }
    }
}

/// Parse flags, run, report. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = cli
        .into_config(std::env::var(SEED_ENV).ok())
        .and_then(|c| run(&c));
    match outcome {
        Ok(o) => {
            eprintln!("{}", o.summary_line());
            o.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
