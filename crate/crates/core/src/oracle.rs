//! Exhaustive computations on small instances.
//!
//! Graphs with a prescribed degree sequence are enumerated by backtracking
//! over the pair slots in row-major order: vertex `i` chooses exactly its
//! residual degree among the later vertices, and after each row the
//! residual degrees of the remaining vertices must still pass Erdős–Gallai.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::degseq::{is_graphical, DegreeSequence};
use crate::error::{Error, Result};
use crate::graph::{pair_index, SimpleGraph, Vertex};

/// Default vertex cap for enumeration.
pub const DEFAULT_CAP: usize = 10;
/// Hard cap: edge sets are stored as 128-bit masks.
pub const MAX_CAP: usize = 16;

/// All labelled simple graphs with one degree sequence, plus exact triangle statistics.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationResult {
    pub n: usize,
    /// Canonical edge sets: `(i, j)` with `i < j`, sorted.
    pub graphs: Vec<Vec<(Vertex, Vertex)>>,
    /// Number of graphs per triangle count.
    pub triangle_distribution: BTreeMap<u64, u64>,
    /// `None` when the sequence has no realisation.
    pub max_triangles: Option<u64>,
}

impl EnumerationResult {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Edge masks in the layout of [`SimpleGraph::edge_mask`], one per graph.
    pub fn masks(&self) -> Vec<u128> {
        self.graphs
            .iter()
            .map(|edges| {
                edges.iter().fold(0u128, |m, &(i, j)| {
                    m | 1u128 << pair_index(self.n, i as usize, j as usize)
                })
            })
            .collect()
    }
}

/// Triangle statistics without the graphs themselves.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangleProfile {
    pub graphs: u64,
    pub triangle_distribution: BTreeMap<u64, u64>,
    pub max_triangles: Option<u64>,
}

/// Backtracking enumerator with a vertex cap.
#[derive(Debug, Clone, Copy)]
pub struct Enumerator {
    cap: usize,
}

impl Default for Enumerator {
    fn default() -> Self {
        Self { cap: DEFAULT_CAP }
    }
}

impl Enumerator {
    /// Caps above [`MAX_CAP`] are clamped.
    pub fn with_cap(cap: usize) -> Self {
        Self {
            cap: cap.min(MAX_CAP),
        }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    fn check(&self, n: usize) -> Result<()> {
        if n > self.cap {
            Err(Error::OverCap { n, cap: self.cap })
        } else {
            Ok(())
        }
    }

    /// Calls `visit(mask, triangles)` for every labelled simple graph in
    /// which vertex `i` has degree `degrees[i]`. Zero degrees are allowed.
    /// Visiting order is deterministic.
    pub fn for_each_graph(&self, degrees: &[u32], mut visit: impl FnMut(u128, u64)) -> Result<()> {
        let n = degrees.len();
        self.check(n)?;
        if !is_graphical(degrees) {
            return Ok(());
        }
        let mut search = Search {
            n,
            residual: degrees.to_vec(),
            adj: vec![0u16; n],
            mask: 0,
            triangles: 0,
            scratch: Vec::with_capacity(n),
        };
        search.row(0, &mut visit);
        Ok(())
    }

    pub fn enumerate(&self, seq: &DegreeSequence) -> Result<EnumerationResult> {
        let n = seq.n();
        let mut result = EnumerationResult {
            n,
            ..Default::default()
        };
        self.for_each_graph(seq.degrees(), |mask, tri| {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if mask >> pair_index(n, i, j) & 1 == 1 {
                        edges.push((i as Vertex, j as Vertex));
                    }
                }
            }
            result.graphs.push(edges);
            *result.triangle_distribution.entry(tri).or_insert(0) += 1;
            result.max_triangles = Some(result.max_triangles.map_or(tri, |m| m.max(tri)));
        })?;
        Ok(result)
    }

    pub fn triangle_profile(&self, degrees: &[u32]) -> Result<TriangleProfile> {
        let mut p = TriangleProfile::default();
        self.for_each_graph(degrees, |_, tri| {
            p.graphs += 1;
            *p.triangle_distribution.entry(tri).or_insert(0) += 1;
            p.max_triangles = Some(p.max_triangles.map_or(tri, |m| m.max(tri)));
        })?;
        Ok(p)
    }
}

struct Search {
    n: usize,
    residual: Vec<u32>,
    adj: Vec<u16>,
    mask: u128,
    triangles: u64,
    scratch: Vec<u32>,
}

impl Search {
    /// Fills row `i`: vertex `i` takes its remaining degree from vertices `> i`.
    fn row(&mut self, i: usize, visit: &mut impl FnMut(u128, u64)) {
        if i == self.n {
            visit(self.mask, self.triangles);
            return;
        }
        let need = self.residual[i];
        self.choose(i, i + 1, need, visit);
    }

    fn choose(&mut self, i: usize, from: usize, need: u32, visit: &mut impl FnMut(u128, u64)) {
        if need == 0 {
            self.residual[i] = 0;
            if self.suffix_graphical(i + 1) {
                self.row(i + 1, visit);
            }
            return;
        }
        let available = (from..self.n).filter(|&j| self.residual[j] > 0).count();
        if (available as u32) < need {
            return;
        }
        for j in from..self.n {
            if self.residual[j] == 0 {
                continue;
            }
            let closed = u64::from((self.adj[i] & self.adj[j]).count_ones());
            self.link(i, j, closed);
            self.choose(i, j + 1, need - 1, visit);
            self.unlink(i, j, closed);
        }
        self.residual[i] = need;
    }

    fn link(&mut self, i: usize, j: usize, closed: u64) {
        self.adj[i] |= 1 << j;
        self.adj[j] |= 1 << i;
        self.residual[j] -= 1;
        self.mask |= 1u128 << pair_index(self.n, i, j);
        self.triangles += closed;
    }

    fn unlink(&mut self, i: usize, j: usize, closed: u64) {
        self.adj[i] &= !(1 << j);
        self.adj[j] &= !(1 << i);
        self.residual[j] += 1;
        self.mask &= !(1u128 << pair_index(self.n, i, j));
        self.triangles -= closed;
    }

    fn suffix_graphical(&mut self, start: usize) -> bool {
        self.scratch.clear();
        self.scratch.extend_from_slice(&self.residual[start..]);
        is_graphical(&self.scratch)
    }
}

/// All realisations of `seq`, with the default cap.
pub fn enumerate_graphs(seq: &DegreeSequence) -> Result<EnumerationResult> {
    Enumerator::default().enumerate(seq)
}

/// Largest triangle count over all realisations of `seq`.
pub fn max_triangles(seq: &DegreeSequence) -> Result<u64> {
    Enumerator::default()
        .triangle_profile(seq.degrees())?
        .max_triangles
        .ok_or_else(|| Error::NotGraphical {
            degrees: seq.degrees().to_vec(),
        })
}

/// Non-increasing graphical sequences of length `n` with entries in
/// `floor..n`, in increasing lexicographic order.
fn graphical_sequences(n: usize, floor: u32) -> Result<Vec<Vec<u32>>> {
    if n > DEFAULT_CAP {
        return Err(Error::OverCap {
            n,
            cap: DEFAULT_CAP,
        });
    }
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
        return Ok(out);
    }
    let top = n as u32 - 1;
    if top < floor {
        return Ok(out);
    }
    let mut cur = Vec::with_capacity(n);
    fn rec(n: usize, floor: u32, top: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            if is_graphical(cur) {
                out.push(cur.clone());
            }
            return;
        }
        let hi = cur.last().copied().unwrap_or(top);
        for d in floor..=hi {
            cur.push(d);
            rec(n, floor, top, cur, out);
            cur.pop();
        }
    }
    rec(n, floor, top, &mut cur, &mut out);
    Ok(out)
}

/// Every graphical sequence of `n` positive degrees, non-increasing, in
/// increasing lexicographic order. `n <= 10`.
pub fn all_graphical_sequences(n: usize) -> Result<Vec<DegreeSequence>> {
    graphical_sequences(n, 1)?
        .into_iter()
        .map(DegreeSequence::new)
        .collect()
}

/// Every non-increasing graphical sequence of length `n` with entries in
/// `0..n`, zero degrees (isolated vertices) included. For `n = 8` there are
/// 1213 of them; with positive degrees only there are 871.
pub fn all_graphical_sequences_with_isolated(n: usize) -> Result<Vec<Vec<u32>>> {
    graphical_sequences(n, 0)
}

/// Builds the graph for an enumerated edge set.
pub fn to_graph(n: usize, edges: &[(Vertex, Vertex)]) -> Result<SimpleGraph> {
    SimpleGraph::from_edges(n, edges.iter().copied())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(d: &[u32]) -> DegreeSequence {
        DegreeSequence::new(d.to_vec()).unwrap()
    }

    #[test]
    fn triangle_example() {
        let r = enumerate_graphs(&seq(&[2, 2, 2])).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.triangle_distribution, BTreeMap::from([(1, 1)]));
        assert_eq!(r.max_triangles, Some(1));
    }

    #[test]
    fn two_regular_on_six() {
        let r = enumerate_graphs(&seq(&[2; 6])).unwrap();
        assert_eq!(r.len(), 70);
        assert_eq!(r.triangle_distribution, BTreeMap::from([(0, 60), (2, 10)]));
        let mut masks = r.masks();
        masks.sort_unstable();
        masks.dedup();
        assert_eq!(masks.len(), 70);
        for edges in &r.graphs {
            let g = to_graph(6, edges).unwrap();
            assert_eq!(g.degrees(), vec![2; 6]);
        }
    }

    #[test]
    fn max_triangle_examples() {
        assert_eq!(max_triangles(&seq(&[2, 2, 2])).unwrap(), 1);
        assert_eq!(max_triangles(&seq(&[3, 3, 3, 3])).unwrap(), 4);
        assert_eq!(max_triangles(&seq(&[4, 4, 3, 3, 3, 2, 1])).unwrap(), 5);
        assert!(matches!(
            max_triangles(&seq(&[1, 1, 1])),
            Err(Error::NotGraphical { .. })
        ));
    }

    #[test]
    fn cap_is_enforced() {
        let err = enumerate_graphs(&seq(&[1; 12])).unwrap_err();
        assert!(matches!(err, Error::OverCap { n: 12, cap: 10 }));
        assert!(all_graphical_sequences(11).is_err());
        assert!(Enumerator::with_cap(12).enumerate(&seq(&[1; 12])).is_ok());
    }

    #[test]
    fn sequence_listing() {
        let two: Vec<Vec<u32>> = all_graphical_sequences(2)
            .unwrap()
            .iter()
            .map(|s| s.degrees().to_vec())
            .collect();
        assert_eq!(two, vec![vec![1, 1]]);
        let three: Vec<Vec<u32>> = all_graphical_sequences(3)
            .unwrap()
            .iter()
            .map(|s| s.degrees().to_vec())
            .collect();
        assert_eq!(three, vec![vec![2, 1, 1], vec![2, 2, 2]]);
    }

    #[test]
    fn sequence_counts_for_eight_vertices() {
        assert_eq!(all_graphical_sequences(8).unwrap().len(), 871);
        assert_eq!(
            all_graphical_sequences_with_isolated(8).unwrap().len(),
            1213
        );
    }

    #[test]
    fn enumeration_agrees_with_graphicality() {
        // Every non-increasing positive sequence with n <= 7.
        for n in 1..=7usize {
            let top = n as u32 - 1;
            let mut stack: Vec<Vec<u32>> = vec![vec![]];
            while let Some(cur) = stack.pop() {
                if cur.len() == n {
                    if top == 0 {
                        continue;
                    }
                    let s = seq(&cur);
                    let profile = Enumerator::default().triangle_profile(s.degrees()).unwrap();
                    assert_eq!(profile.graphs > 0, s.is_graphical(), "{cur:?}");
                    continue;
                }
                let hi = cur.last().copied().unwrap_or(top);
                for d in 1..=hi {
                    let mut next = cur.clone();
                    next.push(d);
                    stack.push(next);
                }
            }
        }
    }

    #[test]
    fn enumeration_is_deterministic_and_exact() {
        let s = seq(&[3, 3, 2, 2, 2, 1, 1]);
        let a = enumerate_graphs(&s).unwrap();
        let b = enumerate_graphs(&s).unwrap();
        assert_eq!(a, b);
        let total: u64 = a.triangle_distribution.values().sum();
        assert_eq!(total as usize, a.len());
        for edges in &a.graphs {
            let g = to_graph(7, edges).unwrap();
            assert_eq!(g.degrees(), s.degrees());
        }
    }

    /// Cross-check the backtracking against a scan of all 2^15 graphs on 6 vertices.
    #[test]
    fn matches_brute_force_on_six_vertices() {
        let n = 6;
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let mut by_degrees: BTreeMap<Vec<u32>, BTreeMap<u64, u64>> = BTreeMap::new();
        for mask in 0u32..(1 << pairs.len()) {
            let mut deg = vec![0u32; n];
            let mut adj = vec![0u32; n];
            for (k, &(i, j)) in pairs.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    deg[i] += 1;
                    deg[j] += 1;
                    adj[i] |= 1 << j;
                    adj[j] |= 1 << i;
                }
            }
            let tri: u64 = pairs
                .iter()
                .map(|&(i, j)| {
                    if adj[i] >> j & 1 == 1 {
                        u64::from((adj[i] & adj[j]).count_ones())
                    } else {
                        0
                    }
                })
                .sum::<u64>()
                / 3;
            *by_degrees.entry(deg).or_default().entry(tri).or_insert(0) += 1;
        }
        for (deg, dist) in by_degrees {
            let p = Enumerator::default().triangle_profile(&deg).unwrap();
            assert_eq!(p.triangle_distribution, dist, "{deg:?}");
        }
    }
}
