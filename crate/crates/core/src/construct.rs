//! Initial-graph constructors.
//!
//! * [`havel_hakimi`]: deterministic, always succeeds on graphical input.
//! * [`ccmd`] / [`ccmdu`]: constrained configuration models that forbid
//!   self-loops and multi-edges while pairing; both may fail.
//! * [`configuration_model`] / [`erased_configuration_model`]: the plain
//!   uniform pairing, and its erased (simplified) version.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::degseq::DegreeSequence;
use crate::error::{Error, Result};
use crate::graph::{erase, MultiGraph, SimpleGraph, Vertex};

/// How Havel-Hakimi orders vertices of equal residual degree.
///
/// Every round re-sorts the vertices by residual degree with a stable sort,
/// so ties keep the order they had in the previous round. The first round
/// starts from ascending vertex ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Ties keep the previous round's order.
    #[default]
    Stable,
    /// The previous round's order is reversed before every odd round,
    /// starting with the first.
    Alternating,
}

/// Vertices grouped by residual degree, each group in list order.
struct Buckets {
    levels: Vec<VecDeque<Vertex>>,
    nonempty: BTreeSet<usize>,
    reversed: bool,
}

impl Buckets {
    fn new(residual: &[usize], max: usize) -> Self {
        let mut levels = vec![VecDeque::new(); max + 1];
        let mut nonempty = BTreeSet::new();
        for (v, &d) in residual.iter().enumerate() {
            if d > 0 {
                levels[d].push_back(v as Vertex);
                nonempty.insert(d);
            }
        }
        Buckets {
            levels,
            nonempty,
            reversed: false,
        }
    }

    fn highest_at_most(&self, level: usize) -> Option<usize> {
        self.nonempty.range(1..=level).next_back().copied()
    }

    fn pop_front(&mut self, level: usize) -> Vertex {
        let q = &mut self.levels[level];
        let v = if self.reversed {
            q.pop_back()
        } else {
            q.pop_front()
        };
        if q.is_empty() {
            self.nonempty.remove(&level);
        }
        v.expect("non-empty bucket")
    }

    fn push_front(&mut self, level: usize, v: Vertex) {
        if self.reversed {
            self.levels[level].push_back(v);
        } else {
            self.levels[level].push_front(v);
        }
        self.nonempty.insert(level);
    }
}

/// Havel-Hakimi: repeatedly connect the vertex of largest residual degree
/// to the next-largest vertices, then re-sort.
///
/// The sorted list is kept as per-residual buckets, so a run costs
/// `O(L log n)` rather than a sort per round.
pub fn havel_hakimi(seq: &DegreeSequence, tie_break: TieBreak) -> Result<SimpleGraph> {
    seq.ensure_graphical()?;
    let n = seq.n();
    let max = seq.max_degree() as usize;
    let mut residual: Vec<usize> = seq.degrees().iter().map(|&d| d as usize).collect();
    let mut buckets = Buckets::new(&residual, max);

    let mut g = SimpleGraph::new(n);
    let mut round = 0usize;
    let mut targets: Vec<(Vertex, usize)> = Vec::with_capacity(max);
    while let Some(top) = buckets.highest_at_most(max) {
        round += 1;
        if tie_break == TieBreak::Alternating && round % 2 == 1 {
            buckets.reversed = !buckets.reversed;
        }
        let v = buckets.pop_front(top);
        let need = residual[v as usize];
        residual[v as usize] = 0;

        targets.clear();
        let mut cursor = top;
        while targets.len() < need {
            let Some(level) = buckets.highest_at_most(cursor) else {
                return Err(Error::NotGraphical {
                    degrees: seq.degrees().to_vec(),
                });
            };
            while targets.len() < need && !buckets.levels[level].is_empty() {
                targets.push((buckets.pop_front(level), level));
            }
            cursor = level - 1;
        }
        for &(w, level) in targets.iter().rev() {
            residual[w as usize] = level - 1;
            if level > 1 {
                buckets.push_front(level - 1, w);
            }
        }
        for &(w, _) in &targets {
            g.add_edge(v, w)?;
        }
    }
    Ok(g)
}

/// Per-vertex counts of unpaired half-edges with weighted sampling.
///
/// A Fenwick tree over the counts gives `O(log n)` draws of a uniform
/// half-edge. Draws restricted to an allowed set use rejection against the
/// whole pool and fall back to an explicit scan of the allowed vertices
/// once the forbidden set is large or rejections pile up.
#[derive(Debug, Clone)]
pub struct HalfEdgePool {
    remaining: Vec<u32>,
    tree: Vec<u64>,
    total: u64,
}

/// Rejection streak after which restricted sampling switches to a scan.
pub const MAX_REJECTIONS: usize = 64;

impl HalfEdgePool {
    pub fn new(degrees: &[u32]) -> Self {
        let n = degrees.len();
        let mut tree = vec![0u64; n + 1];
        for (i, &d) in degrees.iter().enumerate() {
            tree[i + 1] += u64::from(d);
            let parent = (i + 1) + ((i + 1) & (i + 1).wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i + 1];
            }
        }
        Self {
            remaining: degrees.to_vec(),
            tree,
            total: degrees.iter().map(|&d| u64::from(d)).sum(),
        }
    }

    pub fn n(&self) -> usize {
        self.remaining.len()
    }

    #[inline]
    pub fn remaining(&self, v: Vertex) -> u32 {
        self.remaining[v as usize]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Removes one half-edge of `v`.
    pub fn take(&mut self, v: Vertex) {
        let r = &mut self.remaining[v as usize];
        assert!(*r > 0, "vertex {v} has no half-edges left");
        *r -= 1;
        self.total -= 1;
        let mut i = v as usize + 1;
        while i < self.tree.len() {
            self.tree[i] -= 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Vertex owning half-edge number `target` (0-based, in vertex order).
    fn locate(&self, mut target: u64) -> Vertex {
        let n = self.remaining.len();
        let mut pos = 0usize;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos as Vertex
    }

    /// Uniform half-edge over the whole pool; returns its vertex.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Vertex> {
        if self.total == 0 {
            return None;
        }
        Some(self.locate(rng.random_range(0..self.total)))
    }

    /// Uniform half-edge among vertices outside the forbidden set. The caller
    /// supplies membership, the set's size and its half-edge mass.
    pub fn sample_allowed<R: Rng + ?Sized>(
        &self,
        forbidden: impl Fn(Vertex) -> bool,
        forbidden_len: usize,
        forbidden_mass: u64,
        rng: &mut R,
    ) -> Option<Vertex> {
        let allowed_mass = self.total - forbidden_mass;
        if allowed_mass == 0 {
            return None;
        }
        if 2 * forbidden_len < self.n() {
            for _ in 0..MAX_REJECTIONS {
                let w = self.locate(rng.random_range(0..self.total));
                if !forbidden(w) {
                    return Some(w);
                }
            }
        }
        let mut target = rng.random_range(0..allowed_mass);
        for (w, &r) in self.remaining.iter().enumerate() {
            let w = w as Vertex;
            if r == 0 || forbidden(w) {
                continue;
            }
            if target < u64::from(r) {
                return Some(w);
            }
            target -= u64::from(r);
        }
        unreachable!("allowed mass {allowed_mass} inconsistent with pool");
    }
}

/// Vertices keyed by remaining half-edges; the top is the largest count,
/// lowest id on ties. Entries go stale when a count changes and are
/// discarded lazily.
struct MaxRemaining {
    heap: BinaryHeap<(u32, Reverse<Vertex>)>,
}

impl MaxRemaining {
    fn new(pool: &HalfEdgePool) -> Self {
        let heap = (0..pool.n() as Vertex)
            .filter(|&v| pool.remaining(v) > 0)
            .map(|v| (pool.remaining(v), Reverse(v)))
            .collect();
        Self { heap }
    }

    fn push(&mut self, pool: &HalfEdgePool, v: Vertex) {
        let r = pool.remaining(v);
        if r > 0 {
            self.heap.push((r, Reverse(v)));
        }
    }

    fn top(&mut self, pool: &HalfEdgePool) -> Option<Vertex> {
        while let Some(&(r, Reverse(v))) = self.heap.peek() {
            if pool.remaining(v) == r {
                return Some(v);
            }
            self.heap.pop();
        }
        None
    }
}

/// Outcome of one constrained construction.
#[derive(Debug, Clone)]
pub enum Outcome {
    Success(SimpleGraph),
    Fail,
}

#[derive(Debug, Clone)]
pub struct ConstructionResult {
    pub outcome: Outcome,
    pub attempts_used: usize,
    pub elapsed: Duration,
}

impl ConstructionResult {
    pub fn is_success(&self) -> bool {
        matches!(self.outcome, Outcome::Success(_))
    }

    pub fn graph(&self) -> Option<&SimpleGraph> {
        match &self.outcome {
            Outcome::Success(g) => Some(g),
            Outcome::Fail => None,
        }
    }

    pub fn into_graph(self) -> Option<SimpleGraph> {
        match self.outcome {
            Outcome::Success(g) => Some(g),
            Outcome::Fail => None,
        }
    }
}

fn timed(f: impl FnOnce() -> Option<SimpleGraph>) -> ConstructionResult {
    let start = Instant::now();
    let graph = f();
    ConstructionResult {
        outcome: graph.map_or(Outcome::Fail, Outcome::Success),
        attempts_used: 1,
        elapsed: start.elapsed(),
    }
}

/// Constrained configuration model, exhausting one vertex per round.
///
/// Each round takes the vertex `v` with the most remaining half-edges, sets
/// `W = {v}`, and pairs every half-edge of `v` with a uniform half-edge
/// outside `W`, adding each partner to `W`. The run fails if `v` cannot be
/// exhausted.
pub fn ccmd<R: Rng + ?Sized>(seq: &DegreeSequence, rng: &mut R) -> Result<ConstructionResult> {
    seq.ensure_graphical()?;
    Ok(timed(|| ccmd_once(seq, rng)))
}

fn ccmd_once<R: Rng + ?Sized>(seq: &DegreeSequence, rng: &mut R) -> Option<SimpleGraph> {
    let n = seq.n();
    let mut pool = HalfEdgePool::new(seq.degrees());
    let mut order = MaxRemaining::new(&pool);
    let mut g = SimpleGraph::new(n);
    // `stamp[w] == round` marks membership of W in the current round.
    let mut stamp = vec![0u32; n];
    let mut round = 0u32;
    let mut members: Vec<Vertex> = Vec::new();

    while pool.total() > 0 {
        let v = order.top(&pool)?;
        round += 1;
        stamp[v as usize] = round;
        members.clear();
        members.push(v);
        while pool.remaining(v) > 0 {
            let mass: u64 = members.iter().map(|&w| u64::from(pool.remaining(w))).sum();
            let w =
                match pool.sample_allowed(|w| stamp[w as usize] == round, members.len(), mass, rng)
                {
                    Some(w) => w,
                    None => break,
                };
            pool.take(v);
            pool.take(w);
            order.push(&pool, w);
            g.add_edge(v, w).ok()?;
            stamp[w as usize] = round;
            members.push(w);
        }
        if pool.remaining(v) > 0 {
            return None;
        }
    }
    Some(g)
}

/// Updated constrained configuration model: one pairing per selection.
///
/// Each step takes the vertex `v_i` with the most remaining half-edges and
/// pairs one of its half-edges with a uniform half-edge outside `W_i`, then
/// re-selects. Forbidden sets are updated symmetrically (`w` joins `W_i`
/// and `v_i` joins `W_w`), so `W_i` is always `v_i` plus its current
/// neighbours and is read straight off the partial graph.
pub fn ccmdu<R: Rng + ?Sized>(seq: &DegreeSequence, rng: &mut R) -> Result<ConstructionResult> {
    seq.ensure_graphical()?;
    Ok(timed(|| ccmdu_once(seq, rng)))
}

fn ccmdu_once<R: Rng + ?Sized>(seq: &DegreeSequence, rng: &mut R) -> Option<SimpleGraph> {
    let mut pool = HalfEdgePool::new(seq.degrees());
    let mut order = MaxRemaining::new(&pool);
    let mut g = SimpleGraph::new(seq.n());

    while pool.total() > 0 {
        let v = order.top(&pool)?;
        let mass = u64::from(pool.remaining(v))
            + g.neighbors(v)
                .map(|w| u64::from(pool.remaining(w)))
                .sum::<u64>();
        let forbidden = |w: Vertex| w == v || g.has_edge(v, w);
        let w = pool.sample_allowed(forbidden, g.degree(v) + 1, mass, rng)?;
        pool.take(v);
        pool.take(w);
        order.push(&pool, v);
        order.push(&pool, w);
        g.add_edge(v, w).ok()?;
    }
    Some(g)
}

/// Uniform perfect matching of all half-edges.
pub fn configuration_model<R: Rng + ?Sized>(
    seq: &DegreeSequence,
    rng: &mut R,
) -> Result<MultiGraph> {
    if !seq.is_even() {
        return Err(Error::OddDegreeSum { total: seq.total() });
    }
    let mut stubs: Vec<Vertex> = Vec::with_capacity(seq.total() as usize);
    for (v, &d) in seq.degrees().iter().enumerate() {
        stubs.extend(std::iter::repeat_n(v as Vertex, d as usize));
    }
    stubs.shuffle(rng);
    let mut mg = MultiGraph::new(seq.n());
    for pair in stubs.chunks_exact(2) {
        mg.push(pair[0], pair[1]);
    }
    Ok(mg)
}

/// Configuration model with self-loops dropped and multi-edges collapsed.
/// Degrees are at most the prescribed ones.
pub fn erased_configuration_model<R: Rng + ?Sized>(
    seq: &DegreeSequence,
    rng: &mut R,
) -> Result<SimpleGraph> {
    configuration_model(seq, rng).map(|mg| erase(&mg))
}

/// Initial-graph construction method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    HavelHakimi(TieBreak),
    Ccmd,
    Ccmdu,
    Ecm,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::HavelHakimi(TieBreak::Stable) => "hh-stable",
            Method::HavelHakimi(TieBreak::Alternating) => "hh-alternating",
            Method::Ccmd => "ccmd",
            Method::Ccmdu => "ccmdu",
            Method::Ecm => "ecm",
        }
    }
}

/// Runs a construction, retrying fail-prone methods up to `max_attempts`
/// times. `attempts_used` counts every try; `elapsed` covers all of them.
pub fn construct_with_retries<R: Rng + ?Sized>(
    method: Method,
    seq: &DegreeSequence,
    max_attempts: usize,
    rng: &mut R,
) -> Result<ConstructionResult> {
    if max_attempts == 0 {
        return Err(Error::InvalidParameter("max_attempts must be >= 1".into()));
    }
    let start = Instant::now();
    let mut attempts = 0;
    let outcome = loop {
        attempts += 1;
        let once = match method {
            Method::HavelHakimi(tb) => Outcome::Success(havel_hakimi(seq, tb)?),
            Method::Ccmd => ccmd(seq, rng)?.outcome,
            Method::Ccmdu => ccmdu(seq, rng)?.outcome,
            Method::Ecm => Outcome::Success(erased_configuration_model(seq, rng)?),
        };
        if matches!(once, Outcome::Success(_)) || attempts >= max_attempts {
            break once;
        }
    };
    Ok(ConstructionResult {
        outcome,
        attempts_used: attempts,
        elapsed: start.elapsed(),
    })
}
