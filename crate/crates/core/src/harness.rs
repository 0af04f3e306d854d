//! Seeded Monte Carlo campaigns and the command implementations behind the
//! `lilrs` binary.

use std::fmt::Write as _;
use std::io;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

use crate::channel::{transmit, AllocationSampler, ChannelError, ChannelSpec};
use crate::code::{code_rate, lift, min_sum_subspace_distance, CodeError, CodeParams, MessageTuple};
use crate::decoder::{
    decode_with, failure_bound, region_list, region_unique, DecodeMode, DecodeStatus, DecoderError, DecoderOptions,
};
use crate::galois::{ExtField, FieldElement, FieldError};

/// A configuration problem, located by its dotted key and, when known, the
/// line of the offending value.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("config error at `{field}`{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
pub struct ConfigError {
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Decoder(#[from] DecoderError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    field: RawField,
    code: RawCode,
    #[serde(default)]
    sweep: RawSweep,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawField {
    q: Spanned<u64>,
    m: Spanned<usize>,
    modulus: Option<Spanned<Vec<u64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCode {
    ell: Option<Spanned<usize>>,
    s: Spanned<usize>,
    block_lengths: Spanned<Vec<usize>>,
    k: Spanned<usize>,
    representatives: Option<Spanned<Vec<Vec<u64>>>>,
    beta: Option<Spanned<Vec<Vec<Vec<u64>>>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    points: Option<Spanned<Vec<(usize, usize)>>>,
    trials: Option<Spanned<u64>>,
    seed: Option<u64>,
    mode: Option<Spanned<String>>,
    workers: Option<usize>,
    output: Option<PathBuf>,
    stop_after_failures: Option<u64>,
    list_cap: Option<u64>,
    search_cap: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub params: CodeParams,
    /// `(γ, δ)` pairs.
    pub points: Vec<(usize, usize)>,
    pub trials: u64,
    pub seed: u64,
    pub mode: DecodeMode,
    /// `None` lets the thread pool decide.
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub stop_after_failures: Option<u64>,
    pub list_cap: u64,
    pub search_cap: u64,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::from_toml_str(&text)?)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
            field: "document".into(),
            line: e.span().map(|s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        let err = |field: &str, span: Range<usize>, message: String| ConfigError {
            field: field.into(),
            line: Some(line_of(text, span.start)),
            message,
        };

        let modulus = raw.field.modulus.as_ref().map(|m| m.get_ref().clone());
        let field = ExtField::new(*raw.field.q.get_ref(), *raw.field.m.get_ref(), modulus).map_err(|e| {
            let (name, span) = match &e {
                FieldError::NotPrime(_) => ("field.q", raw.field.q.span()),
                FieldError::ZeroDegree => ("field.m", raw.field.m.span()),
                FieldError::TooLarge { .. } => ("field.m", raw.field.m.span()),
                _ => ("field.modulus", raw.field.modulus.as_ref().map_or(raw.field.q.span(), |m| m.span())),
            };
            err(name, span, e.to_string())
        })?;
        let field = Arc::new(field);

        let code = &raw.code;
        let lengths = code.block_lengths.get_ref().clone();
        if let Some(ell) = &code.ell {
            if *ell.get_ref() != lengths.len() {
                return Err(err(
                    "code.ell",
                    ell.span(),
                    format!("ell = {} but block_lengths has {} entries", ell.get_ref(), lengths.len()),
                ));
            }
        }
        let element = |coeffs: &[u64], name: &str, span: Range<usize>| -> Result<FieldElement, ConfigError> {
            let digits: Vec<u32> = coeffs.iter().map(|&c| c as u32).collect();
            if digits.len() != field.m() || coeffs.iter().any(|&c| c >= field.q() as u64) {
                return Err(err(
                    name,
                    span,
                    format!("elements are lists of {} coefficients below {}", field.m(), field.q()),
                ));
            }
            Ok(field.from_coeffs(&digits).expect("checked"))
        };
        let reps = match &code.representatives {
            None => None,
            Some(r) => Some(
                r.get_ref()
                    .iter()
                    .map(|c| element(c, "code.representatives", r.span()))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        };
        let beta = match &code.beta {
            None => None,
            Some(b) => Some(
                b.get_ref()
                    .iter()
                    .map(|block| block.iter().map(|c| element(c, "code.beta", b.span())).collect())
                    .collect::<Result<Vec<Vec<_>>, _>>()?,
            ),
        };
        let s = *code.s.get_ref();
        let k = *code.k.get_ref();
        let built = match (reps, beta) {
            (None, None) => CodeParams::new(field.clone(), s, lengths.clone(), k),
            (reps, beta) => {
                let ell = lengths.len();
                let reps = match reps {
                    Some(r) => r,
                    None => field.conjugacy_representatives(ell).map_err(|e| err("code.block_lengths", code.block_lengths.span(), e.to_string()))?,
                };
                let beta = beta.unwrap_or_else(|| {
                    lengths
                        .iter()
                        .map(|&n| (0..n as u64).map(|e| field.alpha_pow(e)).collect())
                        .collect()
                });
                if beta.iter().map(Vec::len).collect::<Vec<_>>() != lengths {
                    let span = code.beta.as_ref().map_or(code.block_lengths.span(), |b| b.span());
                    return Err(err("code.beta", span, "block sizes differ from block_lengths".into()));
                }
                CodeParams::with_points(field.clone(), s, k, reps, beta)
            }
        };
        let params = built.map_err(|e| {
            let (name, span) = match &e {
                CodeError::ZeroInterleaving => ("code.s", code.s.span()),
                CodeError::DimensionOutOfRange { .. } => ("code.k", code.k.span()),
                CodeError::ZeroRepresentative(_) | CodeError::ConjugateRepresentatives(..) => (
                    "code.representatives",
                    code.representatives.as_ref().map_or(code.block_lengths.span(), |r| r.span()),
                ),
                CodeError::DependentPoints(_) => ("code.beta", code.beta.as_ref().map_or(code.block_lengths.span(), |b| b.span())),
                _ => ("code.block_lengths", code.block_lengths.span()),
            };
            err(name, span, e.to_string())
        })?;

        let sweep = &raw.sweep;
        let points = sweep.points.as_ref().map(|p| p.get_ref().clone()).unwrap_or_default();
        if let Some(p) = &sweep.points {
            for &(gamma, delta) in p.get_ref() {
                if let Err(e) = AllocationSampler::for_code(&params, gamma, delta) {
                    return Err(err("sweep.points", p.span(), e.to_string()));
                }
            }
        }
        let trials = sweep.trials.as_ref().map_or(1, |t| *t.get_ref());
        if trials == 0 {
            let span = sweep.trials.as_ref().expect("zero only when given").span();
            return Err(err("sweep.trials", span, "trials must be at least 1".into()));
        }
        let mode = match &sweep.mode {
            None => DecodeMode::Unique,
            Some(m) => m.get_ref().parse().map_err(|e: String| err("sweep.mode", m.span(), e))?,
        };
        Ok(Self {
            params,
            points,
            trials,
            seed: sweep.seed.unwrap_or(0),
            mode,
            workers: sweep.workers.filter(|&w| w > 0),
            output: sweep.output.clone(),
            stop_after_failures: sweep.stop_after_failures,
            list_cap: sweep.list_cap.unwrap_or(DecoderOptions::DEFAULT_LIST_CAP),
            search_cap: sweep.search_cap.unwrap_or(DecoderOptions::DEFAULT_SEARCH_CAP),
        })
    }

    pub fn decoder_options(&self) -> DecoderOptions {
        DecoderOptions {
            mode: self.mode,
            list_cap: self.list_cap,
            search_cap: self.search_cap,
        }
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one trial; depends only on the master seed and the indices.
pub fn trial_seed(master: u64, point: usize, trial: u64) -> u64 {
    mix(mix(mix(master) ^ point as u64) ^ trial)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub point: usize,
    pub trial: u64,
    pub seed: u64,
    pub gamma: usize,
    pub delta: usize,
    pub allocation: ChannelSpec,
    pub interpolation_dim: usize,
    pub degree_bound: usize,
    pub status: DecodeStatus,
    pub list_len: usize,
    /// Unique mode: the output is exactly the transmitted message. List
    /// mode: the list contains it.
    pub success: bool,
    pub elapsed: Duration,
}

/// One full trial: draw a message, lift, sample the channel, decode.
pub fn run_trial(
    params: &CodeParams,
    sampler: &AllocationSampler,
    opts: &DecoderOptions,
    seed: u64,
) -> Result<(ChannelSpec, crate::decoder::DecodeOutcome, MessageTuple), HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let msg = MessageTuple::random(params, &mut rng);
    let v = lift(params, &msg)?;
    let spec = sampler.sample(&mut rng);
    let u = transmit(params, &v, &spec, &mut rng)?;
    let outcome = decode_with(params, &u, opts)?;
    Ok((spec, outcome, msg))
}

fn trial_record(
    cfg: &ExperimentConfig,
    sampler: &AllocationSampler,
    opts: &DecoderOptions,
    point: usize,
    trial: u64,
) -> Result<TrialRecord, HarnessError> {
    let (gamma, delta) = cfg.points[point];
    let seed = trial_seed(cfg.seed, point, trial);
    let start = Instant::now();
    let (allocation, outcome, msg) = run_trial(&cfg.params, sampler, opts, seed)?;
    let success = match opts.mode {
        DecodeMode::Unique => outcome.status == DecodeStatus::Unique && outcome.messages == [msg],
        DecodeMode::List => outcome.contains(&msg),
    };
    Ok(TrialRecord {
        point,
        trial,
        seed,
        gamma,
        delta,
        allocation,
        interpolation_dim: outcome.diagnostics.interpolation_dim,
        degree_bound: outcome.diagnostics.degree_bound,
        status: outcome.status,
        list_len: outcome.messages.len(),
        success,
        elapsed: start.elapsed(),
    })
}

/// How trials are scheduled. Results never depend on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Data-parallel over trials; `None` uses every available core. Runs
    /// sequentially when built without the `parallel` feature.
    Parallel { workers: Option<usize> },
}

impl Execution {
    pub fn from_workers(workers: Option<usize>) -> Self {
        match workers {
            Some(1) => Execution::Sequential,
            w => Execution::Parallel { workers: w },
        }
    }
}

enum Runner {
    Sequential,
    #[cfg(feature = "parallel")]
    Pool(rayon::ThreadPool),
}

impl Runner {
    fn new(exec: Execution) -> Self {
        match exec {
            Execution::Sequential => Runner::Sequential,
            #[cfg(feature = "parallel")]
            Execution::Parallel { workers } => {
                let mut builder = rayon::ThreadPoolBuilder::new();
                if let Some(w) = workers {
                    builder = builder.num_threads(w);
                }
                builder.build().map(Runner::Pool).unwrap_or(Runner::Sequential)
            }
            #[cfg(not(feature = "parallel"))]
            Execution::Parallel { .. } => Runner::Sequential,
        }
    }

    /// `f` over `indices`, results in index order.
    fn map<T, F>(&self, indices: Range<u64>, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        match self {
            Runner::Sequential => indices.map(f).collect(),
            #[cfg(feature = "parallel")]
            Runner::Pool(pool) => {
                use rayon::prelude::*;
                pool.install(|| indices.into_par_iter().map(f).collect())
            }
        }
    }
}

/// Trials are run in fixed chunks so that an early stop lands on the same
/// trial for every worker count.
const CHUNK: u64 = 512;

/// Wilson score interval at `z = 1.96`.
pub fn wilson_interval(failures: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.96f64;
    let n = trials as f64;
    let p = failures as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub gamma: usize,
    pub delta: usize,
    pub trials: u64,
    pub failures: u64,
    pub observed_rate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    /// Heuristic unique-decoding bound; only defined inside the unique
    /// region.
    pub bound: Option<f64>,
    pub in_list_region: bool,
    pub in_unique_region: bool,
    pub seed: u64,
}

impl PointSummary {
    pub fn wilson_half_width(&self) -> f64 {
        (self.wilson_hi - self.wilson_lo) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    /// Sorted by `(γ, δ)`.
    pub points: Vec<PointSummary>,
    /// Sorted by `(γ, δ)`, then trial.
    pub records: Vec<TrialRecord>,
}

pub fn run_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentReport, HarnessError> {
    let runner = Runner::new(exec);
    let opts = cfg.decoder_options();
    let mut points = Vec::with_capacity(cfg.points.len());
    let mut records = Vec::new();
    for (idx, &(gamma, delta)) in cfg.points.iter().enumerate() {
        let sampler = AllocationSampler::for_code(&cfg.params, gamma, delta)?;
        let mut point_records: Vec<TrialRecord> = Vec::new();
        let mut failures = 0;
        let mut start = 0;
        'chunks: while start < cfg.trials {
            let end = (start + CHUNK).min(cfg.trials);
            let chunk = runner.map(start..end, |t| trial_record(cfg, &sampler, &opts, idx, t));
            for rec in chunk {
                let rec = rec?;
                let failed = !rec.success;
                point_records.push(rec);
                if failed {
                    failures += 1;
                    if cfg.stop_after_failures.is_some_and(|n| failures >= n) {
                        break 'chunks;
                    }
                }
            }
            start = end;
        }
        let trials = point_records.len() as u64;
        let (lo, hi) = wilson_interval(failures, trials);
        let n_r = cfg.params.n_t() + gamma - delta.min(cfg.params.n_t() + gamma);
        let in_unique = region_unique(&cfg.params, gamma, delta);
        points.push(PointSummary {
            gamma,
            delta,
            trials,
            failures,
            observed_rate: failures as f64 / trials as f64,
            wilson_lo: lo,
            wilson_hi: hi,
            bound: in_unique.then(|| failure_bound(&cfg.params, gamma, n_r).value()),
            in_list_region: region_list(&cfg.params, gamma, delta),
            in_unique_region: in_unique,
            seed: cfg.seed,
        });
        records.extend(point_records);
    }
    points.sort_by_key(|p| (p.gamma, p.delta));
    records.sort_by_key(|r| (r.gamma, r.delta, r.point, r.trial));
    Ok(ExperimentReport { points, records })
}

pub const CSV_HEADER: [&str; 11] = [
    "gamma",
    "delta",
    "trials",
    "failures",
    "observed_rate",
    "wilson_lo",
    "wilson_hi",
    "bound",
    "d_min_region_list",
    "d_min_region_unique",
    "seed",
];

/// One row per point. `bound` is `NA` outside the unique region; the two
/// region columns are `true`/`false`.
pub fn write_csv<W: io::Write>(report: &ExperimentReport, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for p in &report.points {
        w.write_record([
            p.gamma.to_string(),
            p.delta.to_string(),
            p.trials.to_string(),
            p.failures.to_string(),
            p.observed_rate.to_string(),
            p.wilson_lo.to_string(),
            p.wilson_hi.to_string(),
            p.bound.map_or_else(|| "NA".to_string(), |b| b.to_string()),
            p.in_list_region.to_string(),
            p.in_unique_region.to_string(),
            p.seed.to_string(),
        ])?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: PathBuf::from("<csv>"),
        source,
    })?;
    Ok(())
}

pub fn csv_string(report: &ExperimentReport) -> Result<String, HarnessError> {
    let mut buf = Vec::new();
    write_csv(report, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn element_digits(field: &ExtField, e: FieldElement) -> String {
    let digits: Vec<String> = field.coeffs(e).iter().map(u32::to_string).collect();
    format!("[{}]", digits.join(","))
}

/// Code summary: lengths, rate, distance, decoding regions.
pub fn cmd_info(cfg: &ExperimentConfig) -> String {
    let p = &cfg.params;
    let f = p.field();
    let s = p.s();
    let rate = code_rate(p);
    let mut out = String::new();
    let modulus: Vec<String> = f.modulus().iter().map(u32::to_string).collect();
    let _ = writeln!(out, "field        F_{}^{} (order {}), modulus [{}]", f.q(), f.m(), f.order(), modulus.join(","));
    let _ = writeln!(out, "primitive    {}", element_digits(f, f.alpha()));
    let _ = writeln!(out, "shots        {}", p.ell());
    let _ = writeln!(out, "interleaving s = {}", s);
    let _ = writeln!(out, "n_i          {:?} (n_t = {})", p.block_lengths(), p.n_t());
    let _ = writeln!(out, "N_i          {:?}", p.ambient_dims());
    let _ = writeln!(out, "k            {}", p.k());
    let _ = writeln!(
        out,
        "rate         {}/{} = {:.6}",
        rate.numer(),
        rate.denom(),
        *rate.numer() as f64 / *rate.denom() as f64
    );
    let _ = writeln!(out, "distance     {}", min_sum_subspace_distance(p));
    let _ = writeln!(out, "list region  gamma + {s} delta < {}", s * (p.n_t() - p.k() + 1));
    let _ = writeln!(out, "unique region gamma + {s} delta <= {}", s * (p.n_t() - p.k()));
    let _ = writeln!(out, "worst list   {}", p.worst_case_list_size());
    let reps: Vec<String> = p.representatives().iter().map(|&a| element_digits(f, a)).collect();
    let _ = writeln!(out, "classes      {}", reps.join(" "));
    out
}

/// Human-readable trace of one trial.
pub fn cmd_roundtrip(
    cfg: &ExperimentConfig,
    seed: u64,
    gamma: usize,
    delta: usize,
    mode: DecodeMode,
) -> Result<String, HarnessError> {
    let p = &cfg.params;
    let f = p.field();
    let sampler = AllocationSampler::for_code(p, gamma, delta)?;
    let opts = DecoderOptions { mode, ..cfg.decoder_options() };
    let (spec, outcome, msg) = run_trial(p, &sampler, &opts, seed)?;
    let mut out = String::new();
    let _ = writeln!(out, "seed {seed}, gamma = {gamma}, delta = {delta}, mode {mode}");
    for (l, poly) in msg.polys().iter().enumerate() {
        let coeffs: Vec<String> = (0..p.k()).map(|j| element_digits(f, poly.coeff(j))).collect();
        let _ = writeln!(out, "f^({}) = {}", l + 1, coeffs.join(" "));
    }
    for i in 0..p.ell() {
        let n = p.block_lengths()[i];
        let _ = writeln!(
            out,
            "shot {i}: insertions {}, deletions {}, dim {} -> {}",
            spec.insertions[i],
            spec.deletions[i],
            n,
            n + spec.insertions[i] - spec.deletions[i]
        );
    }
    let d = &outcome.diagnostics;
    let _ = writeln!(
        out,
        "n_r = {}, D = {}, d_I = {}, root-finding rank {}",
        d.received_dim,
        d.degree_bound,
        d.interpolation_dim,
        d.root_rank.map_or("-".to_string(), |r| format!("{r} of {}", p.s() * p.k()))
    );
    let _ = writeln!(out, "status {}, {} candidate(s)", outcome.status, outcome.messages.len());
    if let Some(b) = d.failure_bound {
        let _ = writeln!(out, "failure bound {b:e}");
    }
    let success = match mode {
        DecodeMode::Unique => outcome.status == DecodeStatus::Unique && outcome.messages == [msg],
        DecodeMode::List => outcome.contains(&msg),
    };
    let _ = writeln!(out, "{}", if success { "success" } else { "failure" });
    Ok(out)
}
