//! Monte-Carlo FER/BER simulation, parameter sweeps and per-iteration timing.
//!
//! Frames are generated from per-frame RNG substreams and tallied in frame
//! order, so reports do not depend on the number of workers.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::admm::{AdmmState, DecodeError, DecoderParams, QpAdmmDecoder};
use crate::bp::{BpDecoder, BpParams};
use crate::channel::{
    frame_rng, llr, modulate_with_noise, standard_noise, ChannelConfig, ChannelError, RNG_ALGORITHM,
};
use crate::matrix::{Encoder, ParityCheckMatrix};
use crate::model::DecomposedModel;

/// Frames simulated between stop-rule checks.
const BATCH: u64 = 64;

/// Upper edges (exclusive) of the iteration histogram bins; the last bin is open.
pub const HISTOGRAM_EDGES: [usize; 9] = [2, 5, 10, 20, 50, 100, 200, 500, 1000];

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SimError {
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            SimError::Validation(_)
                | SimError::Channel(_)
                | SimError::Decode(
                    DecodeError::Mu(_)
                        | DecodeError::Alpha(_)
                        | DecodeError::Epsilon(_)
                        | DecodeError::MaxIters
                        | DecodeError::Curvature { .. }
                )
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    QpAdmm,
    Bp,
}

impl DecoderKind {
    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::QpAdmm => "qpadmm",
            DecoderKind::Bp => "bp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderChoice {
    QpAdmm,
    Bp,
    Both,
}

impl DecoderChoice {
    pub fn kinds(self) -> &'static [DecoderKind] {
        match self {
            DecoderChoice::QpAdmm => &[DecoderKind::QpAdmm],
            DecoderChoice::Bp => &[DecoderKind::Bp],
            DecoderChoice::Both => &[DecoderKind::QpAdmm, DecoderKind::Bp],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodewordSource {
    AllZeros,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Free-form label recorded in the manifest (typically the alist path).
    pub code_label: String,
    pub decoder: DecoderChoice,
    pub ebno_list: Vec<f64>,
    pub admm: DecoderParams,
    pub bp: BpParams,
    /// Each decoder must collect this many frame errors per point...
    pub min_errors: u64,
    /// ...unless this many frames have been simulated first.
    pub max_frames: u64,
    pub source: CodewordSource,
    pub seed: u64,
    pub workers: usize,
    /// Overrides the design rate `(n - m) / n` in the noise variance.
    pub rate: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            code_label: String::new(),
            decoder: DecoderChoice::QpAdmm,
            ebno_list: vec![2.0],
            admm: DecoderParams::default(),
            bp: BpParams::default(),
            min_errors: 200,
            max_frames: 10_000_000,
            source: CodewordSource::AllZeros,
            seed: 0,
            workers: 1,
            rate: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, model: &DecomposedModel) -> Result<(), SimError> {
        if self.ebno_list.is_empty() {
            return Err(SimError::Validation("ebno list is empty".into()));
        }
        if let Some(x) = self.ebno_list.iter().find(|x| !x.is_finite()) {
            return Err(SimError::Validation(format!("Eb/N0 {x} is not finite")));
        }
        if self.min_errors == 0 {
            return Err(SimError::Validation("min errors must be at least 1".into()));
        }
        if self.max_frames == 0 {
            return Err(SimError::Validation("max frames must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(SimError::Validation("workers must be at least 1".into()));
        }
        if self.bp.max_iters == 0 {
            return Err(SimError::Validation(
                "bp max iterations must be at least 1".into(),
            ));
        }
        if self.decoder != DecoderChoice::Bp {
            self.admm.validate(model)?;
        }
        Ok(())
    }
}

/// Static description of the simulated code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeInfo {
    pub n: usize,
    pub m: usize,
    pub gamma_a: usize,
    pub gamma_c: usize,
    pub rate: f64,
    /// SHA-256 of the canonical alist text.
    pub sha256: String,
}

impl CodeInfo {
    pub fn new(h: &ParityCheckMatrix, model: &DecomposedModel, rate: f64) -> Self {
        Self {
            n: h.n(),
            m: h.m(),
            gamma_a: model.gamma_a(),
            gamma_c: model.gamma_c(),
            rate,
            sha256: code_hash(h),
        }
    }
}

pub fn code_hash(h: &ParityCheckMatrix) -> String {
    hex::encode(Sha256::digest(h.to_alist().as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: usize,
    /// Exclusive; `None` for the open last bin.
    pub hi: Option<usize>,
    pub count: u64,
}

/// Tallies for one decoder at one Eb/N0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub decoder: DecoderKind,
    pub ebno_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub fer: f64,
    pub ber: f64,
    /// Wilson 95% interval for the FER.
    pub fer_ci: (f64, f64),
    pub converged_frames: u64,
    pub mean_iters: f64,
    pub median_iters: f64,
    pub histogram: Vec<HistogramBin>,
    /// Mean decode-only wall time in microseconds.
    pub mean_decode_us: f64,
    /// Frames per exact iteration count, index = iterations.
    #[serde(skip)]
    pub iteration_counts: Vec<u64>,
    /// Converged frames per exact iteration count.
    #[serde(skip)]
    pub converged_iteration_counts: Vec<u64>,
}

impl PointReport {
    /// Share of all frames that converged in fewer than `limit` iterations.
    pub fn fraction_converged_below(&self, limit: usize) -> f64 {
        let k: u64 = self.converged_iteration_counts.iter().take(limit).sum();
        k as f64 / self.frames as f64
    }

    /// Same tallies, ignoring wall-clock timing.
    pub fn same_tallies(&self, other: &Self) -> bool {
        let strip = |p: &Self| Self {
            mean_decode_us: 0.0,
            ..p.clone()
        };
        strip(self) == strip(other)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub code: CodeInfo,
    pub config: SimConfig,
    pub rng_algorithm: String,
    pub points: Vec<PointReport>,
}

impl SimReport {
    pub fn point(&self, decoder: DecoderKind, ebno_db: f64) -> Option<&PointReport> {
        self.points
            .iter()
            .find(|p| p.decoder == decoder && p.ebno_db == ebno_db)
    }

    pub fn same_tallies(&self, other: &Self) -> bool {
        self.points.len() == other.points.len()
            && self
                .points
                .iter()
                .zip(&other.points)
                .all(|(a, b)| a.same_tallies(b))
    }

    /// One row per (decoder, Eb/N0).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "decoder",
            "ebno_db",
            "frames",
            "frame_errors",
            "bit_errors",
            "fer",
            "ber",
            "fer_ci_lo",
            "fer_ci_hi",
            "converged_frames",
            "mean_iters",
            "median_iters",
            "mean_decode_us",
            "iter_histogram",
        ])?;
        for p in &self.points {
            let hist = p
                .histogram
                .iter()
                .map(|b| b.count.to_string())
                .collect::<Vec<_>>()
                .join(";");
            w.write_record([
                p.decoder.name().to_string(),
                p.ebno_db.to_string(),
                p.frames.to_string(),
                p.frame_errors.to_string(),
                p.bit_errors.to_string(),
                format!("{:.6e}", p.fer),
                format!("{:.6e}", p.ber),
                format!("{:.6e}", p.fer_ci.0),
                format!("{:.6e}", p.fer_ci.1),
                p.converged_frames.to_string(),
                format!("{:.3}", p.mean_iters),
                format!("{:.1}", p.median_iters),
                format!("{:.3}", p.mean_decode_us),
                hist,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// JSON run manifest: full config, code hash, RNG id and all tallies.
    pub fn manifest_json(&self) -> Result<String, SimError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + Z * Z / n;
    let center = (p + Z * Z / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + Z * Z / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

#[derive(Debug, Clone, Copy)]
struct DecoderOutcome {
    bit_errors: u32,
    iters: u32,
    converged: bool,
    nanos: u64,
}

#[derive(Default)]
struct Tally {
    frames: u64,
    frame_errors: u64,
    bit_errors: u64,
    converged: u64,
    nanos: u128,
    counts: Vec<u64>,
    converged_counts: Vec<u64>,
}

impl Tally {
    fn add(&mut self, o: &DecoderOutcome) {
        self.frames += 1;
        if o.bit_errors > 0 {
            self.frame_errors += 1;
        }
        self.bit_errors += u64::from(o.bit_errors);
        self.nanos += u128::from(o.nanos);
        let it = o.iters as usize;
        if self.counts.len() <= it {
            self.counts.resize(it + 1, 0);
            self.converged_counts.resize(it + 1, 0);
        }
        self.counts[it] += 1;
        if o.converged {
            self.converged += 1;
            self.converged_counts[it] += 1;
        }
    }

    fn report(self, decoder: DecoderKind, ebno_db: f64, n: usize) -> PointReport {
        let frames = self.frames.max(1) as f64;
        let total_iters: u64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(k, c)| k as u64 * c)
            .sum();
        let median_iters = median_from_counts(&self.counts);
        let mut histogram = Vec::with_capacity(HISTOGRAM_EDGES.len() + 1);
        let mut lo = 1;
        for &hi in HISTOGRAM_EDGES.iter() {
            histogram.push(HistogramBin {
                lo,
                hi: Some(hi),
                count: count_range(&self.counts, lo, hi),
            });
            lo = hi;
        }
        histogram.push(HistogramBin {
            lo,
            hi: None,
            count: count_range(&self.counts, lo, usize::MAX),
        });
        PointReport {
            decoder,
            ebno_db,
            frames: self.frames,
            frame_errors: self.frame_errors,
            bit_errors: self.bit_errors,
            fer: self.frame_errors as f64 / frames,
            ber: self.bit_errors as f64 / (frames * n as f64),
            fer_ci: wilson_interval(self.frame_errors, self.frames),
            converged_frames: self.converged,
            mean_iters: total_iters as f64 / frames,
            median_iters,
            histogram,
            mean_decode_us: self.nanos as f64 / frames / 1e3,
            iteration_counts: self.counts,
            converged_iteration_counts: self.converged_counts,
        }
    }
}

fn count_range(counts: &[u64], lo: usize, hi: usize) -> u64 {
    counts
        .iter()
        .enumerate()
        .filter(|(k, _)| *k >= lo && *k < hi)
        .map(|(_, c)| c)
        .sum()
}

fn median_from_counts(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let kth = |k: u64| {
        let mut acc = 0;
        for (it, &c) in counts.iter().enumerate() {
            acc += c;
            if acc > k {
                return it as f64;
            }
        }
        unreachable!()
    };
    if total % 2 == 1 {
        kth(total / 2)
    } else {
        0.5 * (kth(total / 2 - 1) + kth(total / 2))
    }
}

/// Everything a worker needs to simulate one frame.
struct FrameContext<'a> {
    h: &'a ParityCheckMatrix,
    model: &'a DecomposedModel,
    bp: BpDecoder<'a>,
    encoder: Option<Encoder>,
    cfg: &'a SimConfig,
}

impl FrameContext<'_> {
    fn run_frame(
        &self,
        channel: &ChannelConfig,
        stream: u64,
        frame: u64,
        active: &[bool],
    ) -> Result<Vec<Option<DecoderOutcome>>, SimError> {
        let n = self.h.n();
        let mut rng = frame_rng(self.cfg.seed, stream, frame);
        let codeword = match &self.encoder {
            Some(enc) => enc.random_codeword(&mut rng),
            None => vec![0u8; n],
        };
        let noise = standard_noise(n, &mut rng);
        let received = modulate_with_noise(&codeword, channel.sigma(), &noise);
        let gamma = llr(&received, channel);

        let mut out = Vec::with_capacity(2);
        for (&kind, &on) in self.cfg.decoder.kinds().iter().zip(active) {
            if !on {
                out.push(None);
                continue;
            }
            let start = Instant::now();
            let (x_hat, iters, converged) = match kind {
                DecoderKind::QpAdmm => {
                    let dec = QpAdmmDecoder::new(self.model, &gamma, self.cfg.admm)?;
                    let mut st = AdmmState::zeros(self.model);
                    let r = dec.run(&mut st, None)?;
                    (r.x_hat, r.iters, r.converged)
                }
                DecoderKind::Bp => {
                    let r = self.bp.decode(&gamma, &self.cfg.bp);
                    (r.x_hat, r.iters, r.converged)
                }
            };
            let nanos = start.elapsed().as_nanos() as u64;
            let bit_errors = x_hat.iter().zip(&codeword).filter(|(a, b)| a != b).count() as u32;
            out.push(Some(DecoderOutcome {
                bit_errors,
                iters: iters as u32,
                converged,
                nanos,
            }));
        }
        Ok(out)
    }
}

/// Runs the full Monte-Carlo protocol for every configured Eb/N0.
pub fn run_sim(h: &ParityCheckMatrix, cfg: &SimConfig) -> Result<SimReport, SimError> {
    let model = DecomposedModel::decompose(h);
    run_sim_with_model(h, &model, cfg)
}

pub fn run_sim_with_model(
    h: &ParityCheckMatrix,
    model: &DecomposedModel,
    cfg: &SimConfig,
) -> Result<SimReport, SimError> {
    cfg.validate(model)?;
    let rate = cfg.rate.unwrap_or_else(|| h.design_rate());
    let ctx = FrameContext {
        h,
        model,
        bp: BpDecoder::new(h),
        encoder: match cfg.source {
            CodewordSource::AllZeros => None,
            CodewordSource::Random => Some(Encoder::new(h)),
        },
        cfg,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| SimError::Validation(format!("thread pool: {e}")))?;

    let mut points = Vec::new();
    for (stream, &ebno) in cfg.ebno_list.iter().enumerate() {
        let channel = ChannelConfig::new(ebno, rate, cfg.seed)?;
        let kinds = cfg.decoder.kinds();
        let mut tallies: Vec<Tally> = kinds.iter().map(|_| Tally::default()).collect();
        // Each decoder stops at the frame where it reaches the error target;
        // frames past that point in the same batch are discarded for it.
        let mut active = vec![true; kinds.len()];
        let mut next = 0u64;
        while next < cfg.max_frames && active.iter().any(|&a| a) {
            let end = (next + BATCH).min(cfg.max_frames);
            let batch: Vec<Result<Vec<Option<DecoderOutcome>>, SimError>> = pool.install(|| {
                (next..end)
                    .into_par_iter()
                    .map(|f| ctx.run_frame(&channel, stream as u64, f, &active))
                    .collect()
            });
            next = end;
            for outcome in batch {
                for ((t, o), on) in tallies.iter_mut().zip(outcome?).zip(active.iter_mut()) {
                    if let (true, Some(o)) = (*on, o) {
                        t.add(&o);
                        *on = t.frame_errors < cfg.min_errors;
                    }
                }
            }
        }
        for (t, &kind) in tallies.into_iter().zip(kinds) {
            points.push(t.report(kind, ebno, h.n()));
        }
    }

    Ok(SimReport {
        code: CodeInfo::new(h, model, rate),
        config: cfg.clone(),
        rng_algorithm: RNG_ALGORITHM.to_string(),
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Mu,
    Alpha,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    /// Why the value was rejected, if it was.
    pub error: Option<String>,
    pub frames: u64,
    pub frame_errors: u64,
    pub fer: f64,
    pub mean_iters: f64,
}

impl SweepRow {
    pub fn is_valid(&self) -> bool {
        self.error.is_none()
    }
}

/// One QP-ADMM simulation per grid value at the single Eb/N0 of `cfg`.
/// Values that break parameter validation produce a flagged row.
pub fn sweep(
    h: &ParityCheckMatrix,
    cfg: &SimConfig,
    axis: SweepAxis,
    grid: &[f64],
) -> Result<Vec<SweepRow>, SimError> {
    if cfg.ebno_list.len() != 1 {
        return Err(SimError::Validation(
            "a sweep runs at exactly one Eb/N0".into(),
        ));
    }
    if grid.is_empty() {
        return Err(SimError::Validation("sweep grid is empty".into()));
    }
    let model = DecomposedModel::decompose(h);
    let mut rows = Vec::with_capacity(grid.len());
    for &value in grid {
        let mut run = cfg.clone();
        run.decoder = DecoderChoice::QpAdmm;
        match axis {
            SweepAxis::Mu => run.admm.mu = value,
            SweepAxis::Alpha => run.admm.alpha = value,
        }
        if let Err(e) = run.admm.validate(&model) {
            rows.push(SweepRow {
                axis,
                value,
                error: Some(e.to_string()),
                frames: 0,
                frame_errors: 0,
                fer: f64::NAN,
                mean_iters: f64::NAN,
            });
            continue;
        }
        let report = run_sim_with_model(h, &model, &run)?;
        let p = &report.points[0];
        rows.push(SweepRow {
            axis,
            value,
            error: None,
            frames: p.frames,
            frame_errors: p.frame_errors,
            fer: p.fer,
            mean_iters: p.mean_iters,
        });
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "axis",
        "value",
        "valid",
        "frames",
        "frame_errors",
        "fer",
        "mean_iters",
        "error",
    ])?;
    for r in rows {
        w.write_record([
            match r.axis {
                SweepAxis::Mu => "mu".to_string(),
                SweepAxis::Alpha => "alpha".to_string(),
            },
            r.value.to_string(),
            r.is_valid().to_string(),
            r.frames.to_string(),
            r.frame_errors.to_string(),
            format!("{:.6e}", r.fer),
            format!("{:.3}", r.mean_iters),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    pub admm: DecoderParams,
    /// Timed QP-ADMM sweeps per repetition.
    pub qp_iterations: usize,
    /// Timed BP iterations per repetition.
    pub bp_iterations: usize,
    /// Repetitions; the fastest is kept.
    pub repeats: usize,
    pub ebno_db: f64,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            admm: DecoderParams::default(),
            qp_iterations: 10_000,
            bp_iterations: 1_000,
            repeats: 5,
            ebno_db: 2.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub label: String,
    pub n: usize,
    pub n_ext: usize,
    pub qp_ns_per_iter: f64,
    pub bp_ns_per_iter: f64,
}

/// Per-iteration wall time of QP-ADMM and BP on a fixed noisy frame of
/// every code.
pub fn scaling_bench(
    codes: &[(String, ParityCheckMatrix)],
    opts: &BenchOptions,
) -> Result<Vec<BenchRow>, SimError> {
    if opts.qp_iterations == 0 || opts.bp_iterations == 0 || opts.repeats == 0 {
        return Err(SimError::Validation("bench counts must be positive".into()));
    }
    let mut rows = Vec::with_capacity(codes.len());
    for (label, h) in codes {
        let model = DecomposedModel::decompose(h);
        let channel = ChannelConfig::new(opts.ebno_db, h.design_rate(), opts.seed)?;
        let mut rng = frame_rng(opts.seed, 0, 0);
        let noise = standard_noise(h.n(), &mut rng);
        let gamma = llr(
            &modulate_with_noise(&vec![0; h.n()], channel.sigma(), &noise),
            &channel,
        );

        let dec = QpAdmmDecoder::new(&model, &gamma, opts.admm)?;
        let mut qp_best = f64::INFINITY;
        for _ in 0..opts.repeats {
            let mut st = AdmmState::zeros(&model);
            let start = Instant::now();
            for _ in 0..opts.qp_iterations {
                dec.step(&mut st)?;
            }
            let ns = start.elapsed().as_nanos() as f64 / opts.qp_iterations as f64;
            std::hint::black_box(&st);
            qp_best = qp_best.min(ns);
        }

        let bp = BpDecoder::new(h);
        let bp_params = BpParams {
            max_iters: opts.bp_iterations,
            early_stop: false,
        };
        let mut bp_best = f64::INFINITY;
        for _ in 0..opts.repeats {
            let start = Instant::now();
            let r = bp.decode(&gamma, &bp_params);
            let ns = start.elapsed().as_nanos() as f64 / r.iters as f64;
            std::hint::black_box(&r);
            bp_best = bp_best.min(ns);
        }

        rows.push(BenchRow {
            label: label.clone(),
            n: h.n(),
            n_ext: model.n_ext(),
            qp_ns_per_iter: qp_best,
            bp_ns_per_iter: bp_best,
        });
    }
    Ok(rows)
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
