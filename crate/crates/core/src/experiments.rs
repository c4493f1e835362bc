//! Experiment drivers: degree-sequence cases, replica seeding, aggregation
//! and CSV output with JSON sidecars.
//!
//! Every random stream is seeded by [`derive_seed`] from the base seed, a
//! stream label, the sequence index and the replica index, so results do
//! not depend on thread scheduling.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{burn_in_steps, ChainOptions, ChainState, ObserverSchedule, TriangleTracking};
use crate::construct::{
    ccmd, ccmdu, construct_with_retries, erased_configuration_model, havel_hakimi, Method, TieBreak,
};
use crate::degseq::{canonical_sequence, DegreeSequence, IidSampler, PowerLawParams};
use crate::error::{Error, Result};
use crate::graph::SimpleGraph;
use crate::stats::{
    empirical_mixing_time, loglog_fit, predicted_exponent, tv_distance, FitResult,
    TriangleHistogram,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    TimeEvolution,
    MixingDistribution,
    EcmVsUrg,
    ScalingFit,
    DeltaHistogram,
    CcmSuccess,
    Timing,
}

impl ExperimentKind {
    pub fn id(self) -> &'static str {
        match self {
            ExperimentKind::TimeEvolution => "time-evolution",
            ExperimentKind::MixingDistribution => "mixing-distribution",
            ExperimentKind::EcmVsUrg => "ecm-vs-urg",
            ExperimentKind::ScalingFit => "scaling-fit",
            ExperimentKind::DeltaHistogram => "delta-histogram",
            ExperimentKind::CcmSuccess => "ccm-success",
            ExperimentKind::Timing => "timing",
        }
    }
}

/// Where degree sequences come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceMode {
    /// One canonical sequence per `(n, tau)`.
    #[default]
    Canonical,
    /// `sequences` i.i.d. graphical draws per `(n, tau)`.
    Iid,
    /// A single sequence read from `sequence_file`.
    File,
    /// The sequences listed in `degrees`.
    Inline,
}

/// How approximately uniform samples are drawn.
///
/// Each of `chains` independent chains starts from Havel-Hakimi, burns in
/// for `burn_in_multiplier * n` steps and then yields a sample every
/// `spacing_multiplier * n` steps. Without `chains`, every sample has its
/// own chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UniformSampling {
    pub chains: Option<usize>,
    pub spacing_multiplier: f64,
}

impl Default for UniformSampling {
    fn default() -> Self {
        UniformSampling {
            chains: Some(16),
            spacing_multiplier: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub n_values: Vec<usize>,
    #[serde(default)]
    pub tau_values: Vec<f64>,
    #[serde(default)]
    pub sequence_mode: SequenceMode,
    /// Sequences per `(n, tau)` in i.i.d. mode.
    #[serde(default = "defaults::sequences")]
    pub sequences: usize,
    #[serde(default)]
    pub sequence_file: Option<PathBuf>,
    #[serde(default)]
    pub degrees: Vec<Vec<u32>>,
    #[serde(default = "defaults::replicas")]
    pub replicas: usize,
    #[serde(default = "defaults::checkpoints")]
    pub checkpoints: String,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "defaults::burn_in")]
    pub burn_in_multiplier: f64,
    #[serde(default)]
    pub uniform: UniformSampling,
    /// Measurement window after burn-in, in steps per vertex.
    #[serde(default = "defaults::window")]
    pub window_multiplier: f64,
    /// Construction attempts per sequence.
    #[serde(default = "defaults::attempts")]
    pub attempts: usize,
    #[serde(default = "defaults::threshold")]
    pub mixing_threshold: f64,
    #[serde(default)]
    pub tie_break: TieBreak,
}

mod defaults {
    use std::path::PathBuf;

    pub fn sequences() -> usize {
        1
    }
    pub fn replicas() -> usize {
        10_000
    }
    pub fn checkpoints() -> String {
        "0.1n:0.1n:20n".into()
    }
    pub fn output_dir() -> PathBuf {
        PathBuf::from("out")
    }
    pub fn burn_in() -> f64 {
        crate::chain::DEFAULT_BURN_IN_MULTIPLIER
    }
    pub fn window() -> f64 {
        100.0
    }
    pub fn attempts() -> usize {
        200
    }
    pub fn threshold() -> f64 {
        0.1
    }
}

impl ExperimentConfig {
    /// Configuration with every optional field at its default.
    pub fn new(experiment: ExperimentKind) -> Self {
        serde_json::from_value(serde_json::json!({ "experiment": experiment }))
            .expect("defaults deserialize")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        if let Some(n) = self.n_values.iter().find(|&&n| n < 2) {
            return bad(format!("n = {n}, need n >= 2"));
        }
        if let Some(t) = self.tau_values.iter().find(|&&t| !(t > 2.0)) {
            return bad(format!("tau = {t}, need tau > 2"));
        }
        match self.sequence_mode {
            SequenceMode::Canonical | SequenceMode::Iid => {
                if self.n_values.is_empty() || self.tau_values.is_empty() {
                    return bad("n_values and tau_values must be non-empty".into());
                }
                if self.sequences == 0 {
                    return bad("sequences must be at least 1".into());
                }
            }
            SequenceMode::File if self.sequence_file.is_none() => {
                return bad("sequence_mode file needs sequence_file".into());
            }
            SequenceMode::Inline if self.degrees.is_empty() => {
                return bad("sequence_mode inline needs degrees".into());
            }
            _ => {}
        }
        if !(self.burn_in_multiplier.is_finite() && self.burn_in_multiplier >= 0.0) {
            return bad(format!("burn_in_multiplier = {}", self.burn_in_multiplier));
        }
        if !(self.window_multiplier.is_finite() && self.window_multiplier > 0.0) {
            return bad(format!("window_multiplier = {}", self.window_multiplier));
        }
        if !(self.uniform.spacing_multiplier.is_finite() && self.uniform.spacing_multiplier >= 0.0)
        {
            return bad(format!(
                "spacing_multiplier = {}",
                self.uniform.spacing_multiplier
            ));
        }
        if self.uniform.chains == Some(0) {
            return bad("uniform.chains must be at least 1".into());
        }
        if self.attempts == 0 {
            return bad("attempts must be at least 1".into());
        }
        if !(self.mixing_threshold > 0.0 && self.mixing_threshold < 1.0) {
            return bad(format!("mixing_threshold = {}", self.mixing_threshold));
        }
        ObserverSchedule::parse(&self.checkpoints, 2)?;
        if self.experiment == ExperimentKind::ScalingFit {
            let mut ns = self.n_values.clone();
            ns.sort_unstable();
            ns.dedup();
            if ns.len() < 2 {
                return bad("scaling-fit needs at least two distinct n values".into());
            }
        }
        Ok(())
    }

    fn schedule(&self, n: usize) -> Result<ObserverSchedule> {
        ObserverSchedule::parse(&self.checkpoints, n)
    }

    fn rng(&self, stream: &str, sequence: u64, replica: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derive_seed(self.base_seed, stream, sequence, replica))
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for one random stream, a pure function of its arguments.
pub fn derive_seed(base: u64, stream: &str, sequence: u64, replica: u64) -> u64 {
    let label = stream.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    });
    let mut h = splitmix64(base);
    for word in [label, sequence, replica] {
        h = splitmix64(h ^ word);
    }
    h
}

/// One degree sequence of an experiment.
#[derive(Debug, Clone)]
pub struct SequenceCase {
    pub n: usize,
    pub tau: Option<f64>,
    pub index: u64,
    pub sequence: DegreeSequence,
}

/// A sequence that could not be generated or realised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub n: usize,
    pub tau: Option<f64>,
    pub sequence: u64,
    pub error: String,
}

/// Generates the configured degree sequences. Per-sequence problems are
/// returned as failures; only configuration errors abort.
pub fn resolve_sequences(cfg: &ExperimentConfig) -> Result<(Vec<SequenceCase>, Vec<Failure>)> {
    cfg.validate()?;
    let mut cases = Vec::new();
    let mut failures = Vec::new();
    let mut push = |n: usize, tau: Option<f64>, index: u64, r: Result<DegreeSequence>| match r
        .and_then(|s| s.ensure_graphical().map(|_| s))
    {
        Ok(sequence) => cases.push(SequenceCase {
            n,
            tau,
            index,
            sequence,
        }),
        Err(e) => failures.push(Failure {
            n,
            tau,
            sequence: index,
            error: e.to_string(),
        }),
    };
    match cfg.sequence_mode {
        SequenceMode::Canonical | SequenceMode::Iid => {
            let per_cell = match cfg.sequence_mode {
                SequenceMode::Canonical => 1,
                _ => cfg.sequences,
            };
            let mut index = 0u64;
            for &n in &cfg.n_values {
                for &tau in &cfg.tau_values {
                    let params = PowerLawParams::new(tau, n)?;
                    for _ in 0..per_cell {
                        let seq = if cfg.sequence_mode == SequenceMode::Canonical {
                            canonical_sequence(params)
                        } else {
                            IidSampler::new(params).sample(&mut cfg.rng("sequence", index, 0))
                        };
                        push(n, Some(tau), index, seq);
                        index += 1;
                    }
                }
            }
        }
        SequenceMode::File => {
            let path = cfg.sequence_file.as_ref().expect("validated");
            let seq = DegreeSequence::load(path)?;
            push(seq.n(), None, 0, Ok(seq));
        }
        SequenceMode::Inline => {
            for (i, d) in cfg.degrees.iter().enumerate() {
                push(d.len(), None, i as u64, DegreeSequence::new(d.clone()));
            }
        }
    }
    Ok((cases, failures))
}

fn start_graph(cfg: &ExperimentConfig, case: &SequenceCase) -> Result<SimpleGraph> {
    havel_hakimi(&case.sequence, cfg.tie_break)
}

fn chain_from(graph: SimpleGraph, tracking: TriangleTracking) -> ChainState {
    ChainState::with_options(
        graph,
        ChainOptions {
            tracking,
            ..ChainOptions::default()
        },
    )
    .expect("options are valid")
}

/// Advances a chain, treating graphs with fewer than two edges as frozen.
fn advance(state: &mut ChainState, steps: u64, rng: &mut ChaCha8Rng) -> Result<()> {
    if state.graph().edge_count() < 2 {
        return Ok(());
    }
    state.advance(steps, rng)
}

/// Triangle counts at each checkpoint of `schedule`, from `start`.
fn triangle_series(
    start: &SimpleGraph,
    schedule: &ObserverSchedule,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<u64>> {
    let mut state = chain_from(start.clone(), TriangleTracking::OnDemand);
    let mut out = Vec::with_capacity(schedule.checkpoints().len());
    for &c in schedule.checkpoints() {
        let now = state.t();
        advance(&mut state, c - now, rng)?;
        out.push(state.triangles());
    }
    Ok(out)
}

/// Triangle counts of `samples` approximately uniform graphs with the
/// case's degrees. `stream` separates these draws from other uses.
pub fn uniform_triangle_samples(
    cfg: &ExperimentConfig,
    case: &SequenceCase,
    samples: usize,
    stream: &str,
) -> Result<Vec<u64>> {
    let start = start_graph(cfg, case)?;
    let chains = cfg
        .uniform
        .chains
        .unwrap_or(samples)
        .clamp(1, samples.max(1));
    let burn_in = burn_in_steps(cfg.burn_in_multiplier, case.n);
    let spacing = burn_in_steps(cfg.uniform.spacing_multiplier, case.n);
    let per_chain: Vec<Vec<u64>> = (0..chains)
        .into_par_iter()
        .map(|c| -> Result<Vec<u64>> {
            let quota = samples / chains + usize::from(c < samples % chains);
            let mut rng = cfg.rng(stream, case.index, c as u64);
            let mut state = chain_from(start.clone(), TriangleTracking::OnDemand);
            advance(&mut state, burn_in, &mut rng)?;
            let mut out = Vec::with_capacity(quota);
            for k in 0..quota {
                if k > 0 {
                    advance(&mut state, spacing, &mut rng)?;
                }
                out.push(state.triangles());
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_chain.into_iter().flatten().collect())
}

fn histogram(values: &[u64]) -> TriangleHistogram {
    values.iter().copied().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub n: usize,
    pub tau: Option<f64>,
    pub sequence: u64,
    pub replica: u64,
    pub t: u64,
    pub triangles: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeEvolution {
    pub points: Vec<SeriesPoint>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingCase {
    pub n: usize,
    pub tau: Option<f64>,
    pub sequence: u64,
    pub histograms: Vec<(u64, TriangleHistogram)>,
    pub reference: TriangleHistogram,
    pub tv: Vec<(u64, f64)>,
    pub threshold: f64,
    pub mixing_time: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MixingDistribution {
    pub cases: Vec<MixingCase>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcmUrgCase {
    pub n: usize,
    pub tau: Option<f64>,
    pub sequence: u64,
    pub ecm: TriangleHistogram,
    pub urg: TriangleHistogram,
}

impl EcmUrgCase {
    pub fn ecm_mean(&self) -> f64 {
        self.ecm.mean().unwrap_or(f64::NAN)
    }

    pub fn urg_mean(&self) -> f64 {
        self.urg.mean().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EcmVsUrg {
    pub cases: Vec<EcmUrgCase>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Urg,
    Ecm,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Urg => "urg",
            Model::Ecm => "ecm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub tau: f64,
    pub n: usize,
    pub model: Model,
    pub mean_triangles: f64,
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFitRow {
    pub tau: f64,
    pub model: Model,
    pub fit: Option<FitResult>,
    pub predicted: f64,
    /// `n` values left out because their mean was zero.
    pub excluded: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub points: Vec<ScalingPoint>,
    pub fits: Vec<ScalingFitRow>,
    pub failures: Vec<Failure>,
}

impl ScalingFit {
    pub fn fit(&self, tau: f64, model: Model) -> Option<&FitResult> {
        self.fits
            .iter()
            .find(|r| r.tau == tau && r.model == model)
            .and_then(|r| r.fit.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaCase {
    pub n: usize,
    pub tau: Option<f64>,
    pub sequence: u64,
    pub histogram: BTreeMap<i64, u64>,
    pub triangles_start: u64,
    pub triangles_end: u64,
    /// Average triangle count over the window's steps.
    pub mean_triangles: f64,
    pub accepted: u64,
    pub rejected_shared_vertex: u64,
    pub rejected_existing_edge: u64,
}

impl DeltaCase {
    pub fn success_rate(&self) -> Option<f64> {
        let tried = self.accepted + self.rejected_existing_edge;
        (tried > 0).then(|| self.accepted as f64 / tried as f64)
    }

    /// Fraction of accepted moves changing the count by at least `k`.
    pub fn tail_probability(&self, k: i64) -> f64 {
        let total: u64 = self.histogram.values().sum();
        if total == 0 {
            return 0.0;
        }
        let tail: u64 = self
            .histogram
            .iter()
            .filter(|(d, _)| d.abs() >= k)
            .map(|(_, c)| c)
            .sum();
        tail as f64 / total as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DeltaHistograms {
    pub cases: Vec<DeltaCase>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcmSuccessRow {
    pub n: usize,
    pub tau: Option<f64>,
    pub sequence: u64,
    pub method: String,
    pub attempts: u64,
    pub successes: u64,
}

impl CcmSuccessRow {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.attempts as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CcmSuccess {
    pub rows: Vec<CcmSuccessRow>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub n: usize,
    pub tau: Option<f64>,
    pub sequence: u64,
    pub method: String,
    pub construction_seconds: f64,
    pub attempts: u64,
    pub start_triangles: Option<u64>,
    pub uniform_mean: f64,
    pub uniform_sd: f64,
    /// First checkpoint at which the count is within one standard deviation
    /// of the uniform mean.
    pub mixing_steps: Option<u64>,
    pub mixing_seconds: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub rows: Vec<TimingRow>,
    pub failures: Vec<Failure>,
}

/// Per-case runner: failures of one case are recorded, others continue.
fn for_cases<T: Send>(
    cfg: &ExperimentConfig,
    run: impl Fn(&SequenceCase) -> Result<T> + Sync,
) -> Result<(Vec<T>, Vec<Failure>)> {
    let (cases, mut failures) = resolve_sequences(cfg)?;
    let results: Vec<Result<T>> = cases.iter().map(&run).collect();
    let mut out = Vec::new();
    for (case, r) in cases.iter().zip(results) {
        match r {
            Ok(v) => out.push(v),
            Err(e) => failures.push(Failure {
                n: case.n,
                tau: case.tau,
                sequence: case.index,
                error: e.to_string(),
            }),
        }
    }
    Ok((out, failures))
}

/// Schedule with `t = 0` prepended.
fn schedule_from_zero(cfg: &ExperimentConfig, n: usize) -> Result<ObserverSchedule> {
    let s = cfg.schedule(n)?;
    if s.checkpoints().first() == Some(&0) {
        return Ok(s);
    }
    ObserverSchedule::new(
        std::iter::once(0)
            .chain(s.checkpoints().iter().copied())
            .collect(),
    )
}

/// Triangle counts over time for replicas started from Havel-Hakimi.
pub fn run_time_evolution(cfg: &ExperimentConfig) -> Result<TimeEvolution> {
    let stream = "time-evolution";
    let (per_case, failures) = for_cases(cfg, |case| {
        let start = start_graph(cfg, case)?;
        let schedule = schedule_from_zero(cfg, case.n)?;
        let series: Vec<Vec<u64>> = (0..cfg.replicas as u64)
            .into_par_iter()
            .map(|r| triangle_series(&start, &schedule, &mut cfg.rng(stream, case.index, r)))
            .collect::<Result<_>>()?;
        let mut points = Vec::new();
        for (r, values) in series.into_iter().enumerate() {
            for (&t, triangles) in schedule.checkpoints().iter().zip(values) {
                points.push(SeriesPoint {
                    n: case.n,
                    tau: case.tau,
                    sequence: case.index,
                    replica: r as u64,
                    t,
                    triangles,
                });
            }
        }
        Ok(points)
    })?;
    Ok(TimeEvolution {
        points: per_case.into_iter().flatten().collect(),
        failures,
    })
}

/// Per-checkpoint histograms across replicas, compared with a uniform
/// reference to find the empirical mixing time.
pub fn run_mixing_distribution(cfg: &ExperimentConfig) -> Result<MixingDistribution> {
    let stream = "mixing-distribution";
    let (cases, failures) = for_cases(cfg, |case| {
        let start = start_graph(cfg, case)?;
        let schedule = cfg.schedule(case.n)?;
        if schedule.checkpoints().is_empty() {
            return Err(Error::InvalidParameter("empty checkpoint schedule".into()));
        }
        let series: Vec<Vec<u64>> = (0..cfg.replicas as u64)
            .into_par_iter()
            .map(|r| triangle_series(&start, &schedule, &mut cfg.rng(stream, case.index, r)))
            .collect::<Result<_>>()?;
        let histograms: Vec<(u64, TriangleHistogram)> = schedule
            .checkpoints()
            .iter()
            .enumerate()
            .map(|(k, &t)| (t, series.iter().map(|s| s[k]).collect()))
            .collect();
        let reference = histogram(&uniform_triangle_samples(
            cfg,
            case,
            cfg.replicas,
            "mixing-distribution/reference",
        )?);
        let tv = histograms
            .iter()
            .map(|(t, h)| Ok((*t, tv_distance(h, &reference)?)))
            .collect::<Result<_>>()?;
        let mixing_time = empirical_mixing_time(&histograms, &reference, cfg.mixing_threshold)?;
        Ok(MixingCase {
            n: case.n,
            tau: case.tau,
            sequence: case.index,
            histograms,
            reference,
            tv,
            threshold: cfg.mixing_threshold,
            mixing_time,
        })
    })?;
    Ok(MixingDistribution { cases, failures })
}

/// Triangle counts of erased configuration model samples and of uniform
/// samples, `replicas` of each.
pub fn run_ecm_vs_urg(cfg: &ExperimentConfig) -> Result<EcmVsUrg> {
    let (cases, failures) = for_cases(cfg, |case| ecm_urg_case(cfg, case, "ecm-vs-urg"))?;
    Ok(EcmVsUrg { cases, failures })
}

fn ecm_urg_case(cfg: &ExperimentConfig, case: &SequenceCase, stream: &str) -> Result<EcmUrgCase> {
    let ecm_stream = format!("{stream}/ecm");
    let ecm: Vec<u64> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = cfg.rng(&ecm_stream, case.index, r);
            Ok(erased_configuration_model(&case.sequence, &mut rng)?.count_triangles())
        })
        .collect::<Result<_>>()?;
    let urg = uniform_triangle_samples(cfg, case, cfg.replicas, &format!("{stream}/urg"))?;
    Ok(EcmUrgCase {
        n: case.n,
        tau: case.tau,
        sequence: case.index,
        ecm: histogram(&ecm),
        urg: histogram(&urg),
    })
}

/// Mean triangle counts against `n` for each `tau`, fitted on log-log
/// scale for both models.
pub fn run_scaling_fit(cfg: &ExperimentConfig) -> Result<ScalingFit> {
    let (cases, failures) = for_cases(cfg, |case| ecm_urg_case(cfg, case, "scaling-fit"))?;
    let mut pooled: BTreeMap<(u64, usize, Model), TriangleHistogram> = BTreeMap::new();
    for c in &cases {
        let tau = c
            .tau
            .ok_or_else(|| Error::InvalidParameter("scaling-fit needs tau values".into()))?;
        for (model, h) in [(Model::Urg, &c.urg), (Model::Ecm, &c.ecm)] {
            pooled
                .entry((tau.to_bits(), c.n, model))
                .or_default()
                .merge(h);
        }
    }
    let points: Vec<ScalingPoint> = pooled
        .iter()
        .map(|(&(tau, n, model), h)| ScalingPoint {
            tau: f64::from_bits(tau),
            n,
            model,
            mean_triangles: h.mean().unwrap_or(0.0),
            samples: h.total(),
        })
        .collect();
    let mut fits = Vec::new();
    for &tau in &cfg.tau_values {
        for model in [Model::Urg, Model::Ecm] {
            let mut excluded = Vec::new();
            let mut xy = Vec::new();
            for p in points.iter().filter(|p| p.tau == tau && p.model == model) {
                if p.mean_triangles > 0.0 {
                    xy.push((p.n as f64, p.mean_triangles));
                } else {
                    log::warn!(
                        "tau {tau}, {}: zero mean triangles at n = {}, left out of the fit",
                        model.name(),
                        p.n
                    );
                    excluded.push(p.n);
                }
            }
            let fit = if xy.len() >= 2 {
                Some(loglog_fit(&xy)?)
            } else {
                None
            };
            fits.push(ScalingFitRow {
                tau,
                model,
                fit,
                predicted: predicted_exponent(tau),
                excluded,
            });
        }
    }
    Ok(ScalingFit {
        points,
        fits,
        failures,
    })
}

/// Triangle change of every accepted move in a window after burn-in,
/// together with the window's acceptance counters.
pub fn run_delta_histogram(cfg: &ExperimentConfig) -> Result<DeltaHistograms> {
    let stream = "delta-histogram";
    let (cases, failures) = for_cases(cfg, |case| {
        let start = start_graph(cfg, case)?;
        let burn_in = burn_in_steps(cfg.burn_in_multiplier, case.n);
        let window = burn_in_steps(cfg.window_multiplier, case.n);
        let runs: Vec<DeltaCase> = (0..cfg.replicas as u64)
            .into_par_iter()
            .map(|r| -> Result<DeltaCase> {
                let mut rng = cfg.rng(stream, case.index, r);
                let mut state = chain_from(start.clone(), TriangleTracking::OnDemand);
                advance(&mut state, burn_in, &mut rng)?;
                let mut state = chain_from(state.into_graph(), TriangleTracking::Incremental);
                let triangles_start = state.triangles();
                let mut sum = 0u128;
                if state.graph().edge_count() >= 2 {
                    for _ in 0..window {
                        state.step(&mut rng)?;
                        sum += u128::from(state.triangles());
                    }
                } else {
                    sum = u128::from(triangles_start) * u128::from(window);
                }
                let triangles_end = state.triangles();
                let stats = state.stats();
                Ok(DeltaCase {
                    n: case.n,
                    tau: case.tau,
                    sequence: case.index,
                    histogram: stats.delta_histogram.clone(),
                    triangles_start,
                    triangles_end,
                    mean_triangles: if window > 0 {
                        sum as f64 / window as f64
                    } else {
                        triangles_start as f64
                    },
                    accepted: stats.accepted,
                    rejected_shared_vertex: stats.rejected_shared_vertex,
                    rejected_existing_edge: stats.rejected_existing_edge,
                })
            })
            .collect::<Result<_>>()?;
        Ok(merge_delta_runs(runs))
    })?;
    Ok(DeltaHistograms { cases, failures })
}

fn merge_delta_runs(runs: Vec<DeltaCase>) -> DeltaCase {
    let k = runs.len() as f64;
    let mut it = runs.into_iter();
    let mut acc = it.next().expect("replicas >= 1");
    let mut mean_sum = acc.mean_triangles;
    for r in it {
        for (d, c) in r.histogram {
            *acc.histogram.entry(d).or_insert(0) += c;
        }
        acc.triangles_start += r.triangles_start;
        acc.triangles_end += r.triangles_end;
        acc.accepted += r.accepted;
        acc.rejected_shared_vertex += r.rejected_shared_vertex;
        acc.rejected_existing_edge += r.rejected_existing_edge;
        mean_sum += r.mean_triangles;
    }
    acc.mean_triangles = mean_sum / k;
    acc
}

/// Success counts of CCMd and CCMdu over `attempts` tries per sequence.
pub fn run_ccm_success(cfg: &ExperimentConfig) -> Result<CcmSuccess> {
    let (cases, mut failures) = resolve_sequences(cfg)?;
    let per_case: Vec<Result<Vec<CcmSuccessRow>>> = cases
        .par_iter()
        .map(|case| {
            let mut rows = Vec::new();
            for (name, method) in [("ccmd", Method::Ccmd), ("ccmdu", Method::Ccmdu)] {
                let stream = format!("ccm-success/{name}");
                let mut successes = 0u64;
                for a in 0..cfg.attempts as u64 {
                    let mut rng = cfg.rng(&stream, case.index, a);
                    let r = match method {
                        Method::Ccmd => ccmd(&case.sequence, &mut rng)?,
                        _ => ccmdu(&case.sequence, &mut rng)?,
                    };
                    successes += u64::from(r.is_success());
                }
                rows.push(CcmSuccessRow {
                    n: case.n,
                    tau: case.tau,
                    sequence: case.index,
                    method: name.into(),
                    attempts: cfg.attempts as u64,
                    successes,
                });
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for (case, r) in cases.iter().zip(per_case) {
        match r {
            Ok(v) => rows.extend(v),
            Err(e) => failures.push(Failure {
                n: case.n,
                tau: case.tau,
                sequence: case.index,
                error: e.to_string(),
            }),
        }
    }
    Ok(CcmSuccess { rows, failures })
}

/// Construction time of each initial graph and the time its chain takes to
/// bring the triangle count near the uniform mean.
pub fn run_timing(cfg: &ExperimentConfig) -> Result<Timing> {
    let (per_case, failures) = for_cases(cfg, |case| {
        let reference = histogram(&uniform_triangle_samples(
            cfg,
            case,
            cfg.replicas,
            "timing/reference",
        )?);
        let mean = reference.mean().unwrap_or(0.0);
        let sd = reference.variance().unwrap_or(0.0).sqrt();
        let schedule = cfg.schedule(case.n)?;
        let methods = [
            Method::HavelHakimi(TieBreak::Stable),
            Method::HavelHakimi(TieBreak::Alternating),
            Method::Ccmd,
            Method::Ccmdu,
        ];
        let mut rows = Vec::new();
        for method in methods {
            let mut rng = cfg.rng(&format!("timing/{}", method.name()), case.index, 0);
            let built = construct_with_retries(method, &case.sequence, cfg.attempts, &mut rng)?;
            let mut row = TimingRow {
                n: case.n,
                tau: case.tau,
                sequence: case.index,
                method: method.name().into(),
                construction_seconds: built.elapsed.as_secs_f64(),
                attempts: built.attempts_used as u64,
                start_triangles: None,
                uniform_mean: mean,
                uniform_sd: sd,
                mixing_steps: None,
                mixing_seconds: None,
            };
            if let Some(g) = built.into_graph() {
                let mut state = chain_from(g, TriangleTracking::OnDemand);
                row.start_triangles = Some(state.triangles());
                let clock = Instant::now();
                let near = |x: u64| (x as f64 - mean).abs() <= sd;
                if near(state.triangles()) {
                    row.mixing_steps = Some(0);
                } else {
                    for &c in schedule.checkpoints() {
                        let now = state.t();
                        advance(&mut state, c.saturating_sub(now), &mut rng)?;
                        if near(state.triangles()) {
                            row.mixing_steps = Some(c);
                            break;
                        }
                    }
                }
                if row.mixing_steps.is_some() {
                    row.mixing_seconds = Some(clock.elapsed().as_secs_f64());
                }
            }
            rows.push(row);
        }
        Ok(rows)
    })?;
    Ok(Timing {
        rows: per_case.into_iter().flatten().collect(),
        failures,
    })
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub failures: Vec<Failure>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    file: &'a str,
    experiment: &'a str,
    version: &'a str,
    config: &'a ExperimentConfig,
}

struct Output<'a> {
    cfg: &'a ExperimentConfig,
    files: Vec<PathBuf>,
}

impl Output<'_> {
    fn csv(
        &mut self,
        name: &str,
        header: &str,
        rows: impl IntoIterator<Item = String>,
    ) -> Result<()> {
        let path = self.cfg.output_dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "{header}")?;
        for row in rows {
            writeln!(w, "{row}")?;
        }
        w.flush()?;
        let sidecar = Sidecar {
            file: name,
            experiment: self.cfg.experiment.id(),
            version: env!("CARGO_PKG_VERSION"),
            config: self.cfg,
        };
        let mut side = BufWriter::new(File::create(
            self.cfg.output_dir.join(format!("{name}.json")),
        )?);
        serde_json::to_writer_pretty(&mut side, &sidecar)?;
        writeln!(side)?;
        side.flush()?;
        self.files.push(path);
        Ok(())
    }
}

fn tau_str(tau: Option<f64>) -> String {
    tau.map(|t| t.to_string()).unwrap_or_default()
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Runs the configured experiment and writes its CSV files, each with a
/// `<file>.json` sidecar holding the resolved configuration.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let id = cfg.experiment.id();
    let mut out = Output {
        cfg,
        files: Vec::new(),
    };
    let failures = match cfg.experiment {
        ExperimentKind::TimeEvolution => {
            let r = run_time_evolution(cfg)?;
            out.csv(
                &format!("{id}.csv"),
                "n,tau,sequence,replica,t,triangles",
                r.points.iter().map(|p| {
                    format!(
                        "{},{},{},{},{},{}",
                        p.n,
                        tau_str(p.tau),
                        p.sequence,
                        p.replica,
                        p.t,
                        p.triangles
                    )
                }),
            )?;
            r.failures
        }
        ExperimentKind::MixingDistribution => {
            let r = run_mixing_distribution(cfg)?;
            let mut hist_rows = Vec::new();
            let mut tv_rows = Vec::new();
            for c in &r.cases {
                for (t, h) in &c.histograms {
                    for (v, k) in h.iter() {
                        hist_rows.push(format!(
                            "{},{},{},{t},{v},{k}",
                            c.n,
                            tau_str(c.tau),
                            c.sequence
                        ));
                    }
                }
                for (v, k) in c.reference.iter() {
                    hist_rows.push(format!(
                        "{},{},{},reference,{v},{k}",
                        c.n,
                        tau_str(c.tau),
                        c.sequence
                    ));
                }
                for (t, tv) in &c.tv {
                    tv_rows.push(format!(
                        "{},{},{},{t},{tv}",
                        c.n,
                        tau_str(c.tau),
                        c.sequence
                    ));
                }
            }
            out.csv(
                &format!("{id}_histograms.csv"),
                "n,tau,sequence,t,triangles,count",
                hist_rows,
            )?;
            out.csv(&format!("{id}_tv.csv"), "n,tau,sequence,t,tv", tv_rows)?;
            out.csv(
                &format!("{id}.csv"),
                "n,tau,sequence,threshold,mixing_time",
                r.cases.iter().map(|c| {
                    format!(
                        "{},{},{},{},{}",
                        c.n,
                        tau_str(c.tau),
                        c.sequence,
                        c.threshold,
                        opt(c.mixing_time)
                    )
                }),
            )?;
            r.failures
        }
        ExperimentKind::EcmVsUrg => {
            let r = run_ecm_vs_urg(cfg)?;
            let mut hist_rows = Vec::new();
            for c in &r.cases {
                for (model, h) in [("ecm", &c.ecm), ("urg", &c.urg)] {
                    for (v, k) in h.iter() {
                        hist_rows.push(format!(
                            "{},{},{},{model},{v},{k}",
                            c.n,
                            tau_str(c.tau),
                            c.sequence
                        ));
                    }
                }
            }
            out.csv(
                &format!("{id}_histograms.csv"),
                "n,tau,sequence,model,triangles,count",
                hist_rows,
            )?;
            out.csv(
                &format!("{id}.csv"),
                "n,tau,sequence,ecm_mean,urg_mean",
                r.cases.iter().map(|c| {
                    format!(
                        "{},{},{},{},{}",
                        c.n,
                        tau_str(c.tau),
                        c.sequence,
                        c.ecm_mean(),
                        c.urg_mean()
                    )
                }),
            )?;
            r.failures
        }
        ExperimentKind::ScalingFit => {
            let r = run_scaling_fit(cfg)?;
            out.csv(
                &format!("{id}_means.csv"),
                "tau,n,model,mean_triangles,samples",
                r.points.iter().map(|p| {
                    format!(
                        "{},{},{},{},{}",
                        p.tau,
                        p.n,
                        p.model.name(),
                        p.mean_triangles,
                        p.samples
                    )
                }),
            )?;
            out.csv(
                &format!("{id}.csv"),
                "tau,model,a,b,rss,stderr_a,predicted,excluded_n",
                r.fits.iter().map(|f| {
                    let excluded: Vec<String> = f.excluded.iter().map(|n| n.to_string()).collect();
                    match &f.fit {
                        Some(fit) => format!(
                            "{},{},{},{},{},{},{},{}",
                            f.tau,
                            f.model.name(),
                            fit.a,
                            fit.b,
                            fit.rss,
                            fit.stderr_a,
                            f.predicted,
                            excluded.join(" ")
                        ),
                        None => format!(
                            "{},{},,,,,{},{}",
                            f.tau,
                            f.model.name(),
                            f.predicted,
                            excluded.join(" ")
                        ),
                    }
                }),
            )?;
            r.failures
        }
        ExperimentKind::DeltaHistogram => {
            let r = run_delta_histogram(cfg)?;
            let mut hist_rows = Vec::new();
            for c in &r.cases {
                for (d, k) in &c.histogram {
                    hist_rows.push(format!("{},{},{},{d},{k}", c.n, tau_str(c.tau), c.sequence));
                }
            }
            out.csv(
                &format!("{id}.csv"),
                "n,tau,sequence,delta,count",
                hist_rows,
            )?;
            out.csv(
                &format!("{id}_moves.csv"),
                "n,tau,sequence,triangles_start,triangles_end,mean_triangles,accepted,rejected_shared_vertex,rejected_existing_edge,success_rate",
                r.cases.iter().map(|c| {
                    format!(
                        "{},{},{},{},{},{},{},{},{},{}",
                        c.n,
                        tau_str(c.tau),
                        c.sequence,
                        c.triangles_start,
                        c.triangles_end,
                        c.mean_triangles,
                        c.accepted,
                        c.rejected_shared_vertex,
                        c.rejected_existing_edge,
                        opt(c.success_rate())
                    )
                }),
            )?;
            r.failures
        }
        ExperimentKind::CcmSuccess => {
            let r = run_ccm_success(cfg)?;
            out.csv(
                &format!("{id}.csv"),
                "n,tau,sequence,method,attempts,successes,rate",
                r.rows.iter().map(|row| {
                    format!(
                        "{},{},{},{},{},{},{}",
                        row.n,
                        tau_str(row.tau),
                        row.sequence,
                        row.method,
                        row.attempts,
                        row.successes,
                        row.rate()
                    )
                }),
            )?;
            r.failures
        }
        ExperimentKind::Timing => {
            let r = run_timing(cfg)?;
            out.csv(
                &format!("{id}.csv"),
                "n,tau,sequence,method,construction_seconds,attempts,start_triangles,uniform_mean,uniform_sd,mixing_steps,mixing_seconds",
                r.rows.iter().map(|row| {
                    format!(
                        "{},{},{},{},{},{},{},{},{},{},{}",
                        row.n,
                        tau_str(row.tau),
                        row.sequence,
                        row.method,
                        row.construction_seconds,
                        row.attempts,
                        opt(row.start_triangles),
                        row.uniform_mean,
                        row.uniform_sd,
                        opt(row.mixing_steps),
                        opt(row.mixing_seconds)
                    )
                }),
            )?;
            r.failures
        }
    };
    if !failures.is_empty() {
        out.csv(
            &format!("{id}_failures.csv"),
            "n,tau,sequence,error",
            failures.iter().map(|f| {
                format!(
                    "{},{},{},\"{}\"",
                    f.n,
                    tau_str(f.tau),
                    f.sequence,
                    f.error.replace('"', "'")
                )
            }),
        )?;
    }
    Ok(RunSummary {
        files: out.files,
        failures,
    })
}
