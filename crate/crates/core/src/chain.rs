//! The switch chain over simple graphs with a fixed degree sequence.
//!
//! Every call to [`ChainState::step`] is one unit of time, whether the
//! proposed switch is applied or rejected.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::construct::{havel_hakimi, TieBreak};
use crate::degseq::DegreeSequence;
use crate::error::{Error, Result};
use crate::graph::{SimpleGraph, Vertex};

/// Default burn-in, in proposals per vertex, for [`sample_uniform`].
pub const DEFAULT_BURN_IN_MULTIPLIER: f64 = 2000.0;

/// Why a proposal left the graph unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rejection {
    /// The two drawn edges have an endpoint in common.
    SharedVertex,
    /// A proposed edge is already present.
    ExistingEdge,
}

/// Result of a single proposal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    /// The switch was applied. `delta` is the change in triangles when the
    /// chain tracks them per step.
    Accepted {
        delta: Option<i64>,
    },
    Rejected(Rejection),
}

impl StepOutcome {
    pub fn is_accepted(self) -> bool {
        matches!(self, StepOutcome::Accepted { .. })
    }
}

/// When the triangle count is brought up to date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TriangleTracking {
    /// Updated after every accepted move; deltas are histogrammed.
    #[default]
    Incremental,
    /// Recounted from scratch only when read.
    OnDemand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChainOptions {
    pub tracking: TriangleTracking,
    /// Keep one `(triangles before, accepted)` pair per proposal.
    /// Requires incremental tracking.
    pub record_success_samples: bool,
}

/// Counters for a chain run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveStats {
    pub accepted: u64,
    pub rejected_shared_vertex: u64,
    pub rejected_existing_edge: u64,
    /// Triangle change of each accepted move. Empty without incremental
    /// tracking.
    pub delta_histogram: BTreeMap<i64, u64>,
    pub success_samples: Option<Vec<(u64, bool)>>,
}

impl MoveStats {
    pub fn proposals(&self) -> u64 {
        self.accepted + self.rejected_shared_vertex + self.rejected_existing_edge
    }

    /// Accepted fraction among proposals whose edges were vertex-disjoint.
    pub fn success_rate(&self) -> Option<f64> {
        let tried = self.accepted + self.rejected_existing_edge;
        (tried > 0).then(|| self.accepted as f64 / tried as f64)
    }

    /// Accepted fraction among all proposals.
    pub fn acceptance_rate(&self) -> Option<f64> {
        let p = self.proposals();
        (p > 0).then(|| self.accepted as f64 / p as f64)
    }

    /// `Σ delta · count` over the histogram.
    pub fn net_delta(&self) -> i64 {
        self.delta_histogram
            .iter()
            .map(|(&d, &c)| d * c as i64)
            .sum()
    }

    /// Clears counters and the histogram, keeping whether success samples
    /// are recorded.
    pub fn reset(&mut self) {
        let samples = self.success_samples.as_ref().map(|_| Vec::new());
        *self = MoveStats {
            success_samples: samples,
            ..MoveStats::default()
        };
    }
}

/// Step indices at which [`ChainState::run`] records observables.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ObserverSchedule {
    checkpoints: Vec<u64>,
    fingerprints: bool,
}

impl ObserverSchedule {
    pub fn new(checkpoints: Vec<u64>) -> Result<Self> {
        if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "checkpoints must be strictly increasing".into(),
            ));
        }
        Ok(ObserverSchedule {
            checkpoints,
            fingerprints: false,
        })
    }

    /// Parses `start:step:end` or a comma-separated list. Each term is a
    /// number, optionally suffixed with `n` to scale by the vertex count;
    /// terms are rounded to whole steps and duplicates dropped.
    ///
    /// `0.1n:0.1n:20n` with `n = 100` gives `10, 20, ..., 2000`.
    pub fn parse(spec: &str, n: usize) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidParameter(format!("checkpoint spec {spec:?}: {msg}"));
        let term = |s: &str| -> Result<f64> {
            let s = s.trim();
            let (num, scale) = match s.strip_suffix('n') {
                Some(num) => (num.trim(), n as f64),
                None => (s, 1.0),
            };
            let x: f64 = if num.is_empty() && scale != 1.0 {
                1.0
            } else {
                num.parse().map_err(|_| bad("malformed term"))?
            };
            if !x.is_finite() || x < 0.0 {
                return Err(bad("terms must be finite and non-negative"));
            }
            Ok(x * scale)
        };

        let parts: Vec<&str> = spec.split(':').collect();
        let raw: Vec<f64> = match parts.as_slice() {
            [start, step, end] => {
                let (start, step, end) = (term(start)?, term(step)?, term(end)?);
                if step <= 0.0 {
                    return Err(bad("step must be positive"));
                }
                let count = ((end - start) / step + 1e-9).floor();
                if count < 0.0 {
                    return Err(bad("end precedes start"));
                }
                (0..=count as u64)
                    .map(|k| start + k as f64 * step)
                    .collect()
            }
            [list] => list
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(term)
                .collect::<Result<_>>()?,
            _ => return Err(bad("expected start:step:end or a list")),
        };
        let mut checkpoints: Vec<u64> = raw.iter().map(|x| x.round() as u64).collect();
        if checkpoints.windows(2).any(|w| w[0] > w[1]) {
            return Err(bad("terms must be non-decreasing"));
        }
        checkpoints.dedup();
        Ok(ObserverSchedule {
            checkpoints,
            fingerprints: false,
        })
    }

    /// Also record the edge-set fingerprint (graphs with at most 16 vertices).
    pub fn with_fingerprints(mut self) -> Self {
        self.fingerprints = true;
        self
    }

    pub fn checkpoints(&self) -> &[u64] {
        &self.checkpoints
    }

    pub fn fingerprints(&self) -> bool {
        self.fingerprints
    }

    pub fn last(&self) -> Option<u64> {
        self.checkpoints.last().copied()
    }
}

/// Observables recorded at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recording {
    pub t: u64,
    pub triangles: u64,
    pub fingerprint: Option<u128>,
}

/// A running switch chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    graph: SimpleGraph,
    t: u64,
    triangles: u64,
    stale: bool,
    tracking: TriangleTracking,
    stats: MoveStats,
    bit_pool: u64,
    bits_left: u32,
}

/// Uniform value below `range` from 32 random bits, or `None` when the
/// draw must be rejected to stay unbiased.
#[inline]
fn below(x: u32, range: u32) -> Option<u32> {
    let m = u64::from(x) * u64::from(range);
    let low = m as u32;
    if low < range && low < range.wrapping_neg() % range {
        return None;
    }
    Some((m >> 32) as u32)
}

impl ChainState {
    /// Starts a chain with incremental triangle tracking.
    pub fn new(graph: SimpleGraph) -> Self {
        Self::with_options(graph, ChainOptions::default()).expect("default options are valid")
    }

    pub fn with_options(graph: SimpleGraph, options: ChainOptions) -> Result<Self> {
        if options.record_success_samples && options.tracking != TriangleTracking::Incremental {
            return Err(Error::InvalidParameter(
                "success samples need incremental triangle tracking".into(),
            ));
        }
        let triangles = graph.count_triangles();
        Ok(ChainState {
            graph,
            t: 0,
            triangles,
            stale: false,
            tracking: options.tracking,
            bit_pool: 0,
            bits_left: 0,
            stats: MoveStats {
                success_samples: options.record_success_samples.then(Vec::new),
                ..MoveStats::default()
            },
        })
    }

    pub fn graph(&self) -> &SimpleGraph {
        &self.graph
    }

    pub fn into_graph(self) -> SimpleGraph {
        self.graph
    }

    /// Proposals made so far, rejected ones included.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn stats(&self) -> &MoveStats {
        &self.stats
    }

    pub fn stats_mut(&mut self) -> &mut MoveStats {
        &mut self.stats
    }

    pub fn tracking(&self) -> TriangleTracking {
        self.tracking
    }

    /// Current triangle count, recounting first if it is out of date.
    pub fn triangles(&mut self) -> u64 {
        if self.stale {
            self.triangles = self.graph.count_triangles();
            self.stale = false;
        }
        self.triangles
    }

    /// One proposal of the switch chain.
    ///
    /// Draws an ordered pair of distinct edges and orients each uniformly,
    /// giving `(u1,v1), (u2,v2)`, and proposes `(u1,v2), (u2,v1)` in their
    /// place.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<StepOutcome> {
        let m = self.graph.edge_count();
        if m < 2 || m > u32::MAX as usize {
            return Err(Error::Contract(format!(
                "the switch chain needs between 2 and 2^32 - 1 edges, graph has {m}"
            )));
        }
        let (i, j) = loop {
            let r = rng.next_u64();
            if let (Some(i), Some(j)) = (
                below(r as u32, m as u32),
                below((r >> 32) as u32, m as u32 - 1),
            ) {
                let (i, j) = (i as usize, j as usize);
                break (i, if j >= i { j + 1 } else { j });
            }
        };
        if self.bits_left == 0 {
            self.bit_pool = rng.next_u64();
            self.bits_left = 32;
        }
        let bits = self.bit_pool & 3;
        self.bit_pool >>= 2;
        self.bits_left -= 1;
        Ok(self.propose(i, j, bits & 1 == 1, bits & 2 == 2))
    }

    /// Proposal on slots `i != j`, each edge taken in stored orientation
    /// unless flipped.
    #[inline]
    pub(crate) fn propose(
        &mut self,
        i: usize,
        j: usize,
        flip_i: bool,
        flip_j: bool,
    ) -> StepOutcome {
        let (mut u1, mut v1) = self.graph.slot_endpoints(i);
        if flip_i {
            std::mem::swap(&mut u1, &mut v1);
        }
        let (mut u2, mut v2) = self.graph.slot_endpoints(j);
        if flip_j {
            std::mem::swap(&mut u2, &mut v2);
        }
        self.t += 1;

        let outcome = if u1 == u2 || u1 == v2 || v1 == u2 || v1 == v2 {
            self.stats.rejected_shared_vertex += 1;
            StepOutcome::Rejected(Rejection::SharedVertex)
        } else if self.graph.has_edge(u1, v2) || self.graph.has_edge(u2, v1) {
            self.stats.rejected_existing_edge += 1;
            StepOutcome::Rejected(Rejection::ExistingEdge)
        } else {
            self.stats.accepted += 1;
            let delta = self.apply(i, j, u1, v1, u2, v2);
            StepOutcome::Accepted { delta }
        };
        if let Some(samples) = self.stats.success_samples.as_mut() {
            let before = match outcome {
                StepOutcome::Accepted { delta: Some(d) } => (self.triangles as i64 - d) as u64,
                _ => self.triangles,
            };
            samples.push((before, outcome.is_accepted()));
        }
        outcome
    }

    fn apply(
        &mut self,
        i: usize,
        j: usize,
        u1: Vertex,
        v1: Vertex,
        u2: Vertex,
        v2: Vertex,
    ) -> Option<i64> {
        let delta = match self.tracking {
            TriangleTracking::Incremental => {
                let d = self.graph.switch_delta(u1, v1, u2, v2);
                self.triangles = (self.triangles as i64 + d) as u64;
                *self.stats.delta_histogram.entry(d).or_insert(0) += 1;
                Some(d)
            }
            TriangleTracking::OnDemand => {
                self.stale = true;
                None
            }
        };
        self.graph.switch_slots(i, j, u1, v1, v2, u2);
        delta
    }

    /// Advances `steps` proposals without recording anything.
    pub fn advance<R: Rng + ?Sized>(&mut self, steps: u64, rng: &mut R) -> Result<()> {
        for _ in 0..steps {
            self.step(rng)?;
        }
        Ok(())
    }

    /// Advances exactly `steps` proposals, recording at every checkpoint
    /// `c` with `t_start <= c <= t_start + steps`, where `t` is the chain's
    /// absolute step count.
    pub fn run<R: Rng + ?Sized>(
        &mut self,
        steps: u64,
        schedule: &ObserverSchedule,
        rng: &mut R,
    ) -> Result<Vec<Recording>> {
        let end = self.t + steps;
        let mut out = Vec::new();
        for &c in schedule.checkpoints() {
            if c < self.t {
                continue;
            }
            if c > end {
                break;
            }
            self.advance(c - self.t, rng)?;
            out.push(self.record(schedule.fingerprints()));
        }
        self.advance(end - self.t, rng)?;
        Ok(out)
    }

    fn record(&mut self, fingerprint: bool) -> Recording {
        Recording {
            t: self.t,
            triangles: self.triangles(),
            fingerprint: if fingerprint {
                self.graph.edge_mask()
            } else {
                None
            },
        }
    }

    /// Checks the graph structure, the step-count identity and, when
    /// tracked, the triangle count against a fresh count.
    pub fn audit(&self) -> Result<()> {
        self.graph.audit()?;
        if self.t != self.stats.proposals() {
            return Err(Error::Contract(format!(
                "t = {} but {} proposals were counted",
                self.t,
                self.stats.proposals()
            )));
        }
        if !self.stale {
            let fresh = self.graph.count_triangles();
            if fresh != self.triangles {
                return Err(Error::Contract(format!(
                    "tracked {} triangles, recount gives {fresh}",
                    self.triangles
                )));
            }
        }
        Ok(())
    }
}

/// One proposal; see [`ChainState::step`].
pub fn propose_and_step<R: Rng + ?Sized>(
    state: &mut ChainState,
    rng: &mut R,
) -> Result<StepOutcome> {
    state.step(rng)
}

/// See [`ChainState::run`].
pub fn run<R: Rng + ?Sized>(
    state: &mut ChainState,
    steps: u64,
    schedule: &ObserverSchedule,
    rng: &mut R,
) -> Result<Vec<Recording>> {
    state.run(steps, schedule, rng)
}

/// Approximately uniform graph with the given degrees: a Havel-Hakimi
/// start followed by `burn_in_multiplier * n` proposals.
pub fn sample_uniform<R: Rng + ?Sized>(
    seq: &DegreeSequence,
    burn_in_multiplier: f64,
    rng: &mut R,
) -> Result<SimpleGraph> {
    if !(burn_in_multiplier.is_finite() && burn_in_multiplier >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "burn-in multiplier must be non-negative, got {burn_in_multiplier}"
        )));
    }
    let start = havel_hakimi(seq, TieBreak::default())?;
    if start.edge_count() < 2 {
        return Ok(start);
    }
    let mut state = ChainState::with_options(
        start,
        ChainOptions {
            tracking: TriangleTracking::OnDemand,
            ..ChainOptions::default()
        },
    )?;
    state.advance(burn_in_steps(burn_in_multiplier, seq.n()), rng)?;
    Ok(state.into_graph())
}

/// `multiplier * n`, rounded to whole steps.
pub fn burn_in_steps(multiplier: f64, n: usize) -> u64 {
    (multiplier * n as f64).round() as u64
}
