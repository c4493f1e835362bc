//! Simple graphs and configuration-model multigraphs.
//!
//! [`SimpleGraph`] keeps three views of one edge set in sync: an indexable
//! edge list (uniform edge sampling in O(1)), per-vertex neighbour lists
//! (degree and neighbour iteration), and a hash set holding the edges whose
//! endpoints both have degree above [`HEAVY_DEGREE`]. Membership tests scan
//! the shorter neighbour list unless both endpoints are heavy. Every
//! neighbour entry knows its edge slot and every edge slot knows its two
//! neighbour positions, so removals and switches never search.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use rustc_hash::FxHashSet;

use crate::error::{Error, Result};

pub type Vertex = u32;

/// Degree above which a vertex's edges to other such vertices are hashed.
pub const HEAVY_DEGREE: usize = 24;

/// Undirected edge. Equality and hashing ignore orientation.
#[derive(Debug, Clone, Copy, Eq)]
pub struct Edge {
    pub u: Vertex,
    pub v: Vertex,
}

impl Edge {
    pub fn new(u: Vertex, v: Vertex) -> Self {
        Self { u, v }
    }

    /// Endpoints with the smaller id first.
    pub fn ordered(self) -> (Vertex, Vertex) {
        if self.u <= self.v {
            (self.u, self.v)
        } else {
            (self.v, self.u)
        }
    }

    pub fn is_loop(self) -> bool {
        self.u == self.v
    }

    pub fn touches(self, w: Vertex) -> bool {
        self.u == w || self.v == w
    }
}

impl PartialEq for Edge {
    fn eq(&self, other: &Self) -> bool {
        self.ordered() == other.ordered()
    }
}

impl Hash for Edge {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.ordered().hash(state);
    }
}

impl From<(Vertex, Vertex)> for Edge {
    fn from((u, v): (Vertex, Vertex)) -> Self {
        Edge::new(u, v)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

#[inline]
fn key(a: Vertex, b: Vertex) -> u64 {
    if a < b {
        (u64::from(a) << 32) | u64::from(b)
    } else {
        (u64::from(b) << 32) | u64::from(a)
    }
}

#[derive(Debug, Clone, Copy)]
struct Neighbor {
    vertex: Vertex,
    slot: u32,
}

/// One edge-list slot: endpoints plus their positions in each other's
/// neighbour lists (`pos_a` indexes `adj[a]`, `pos_b` indexes `adj[b]`).
#[derive(Debug, Clone, Copy)]
struct EdgeRecord {
    a: Vertex,
    b: Vertex,
    pos_a: u32,
    pos_b: u32,
}

impl EdgeRecord {
    #[inline]
    fn pos_of(&self, w: Vertex) -> u32 {
        if w == self.a {
            self.pos_a
        } else {
            self.pos_b
        }
    }

    #[inline]
    fn set_pos(&mut self, w: Vertex, pos: u32) {
        if w == self.a {
            self.pos_a = pos;
        } else {
            self.pos_b = pos;
        }
    }
}

/// Mutable simple graph on vertices `0..n`.
#[derive(Debug, Clone, Default)]
pub struct SimpleGraph {
    adj: Vec<Vec<Neighbor>>,
    edges: Vec<EdgeRecord>,
    heavy: FxHashSet<u64>,
}

impl SimpleGraph {
    pub fn new(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
            edges: Vec::new(),
            heavy: FxHashSet::default(),
        }
    }

    /// Builds a graph from an edge iterator, rejecting loops, duplicates and
    /// out-of-range endpoints.
    pub fn from_edges<I, E>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = E>,
        E: Into<Edge>,
    {
        let mut g = Self::new(n);
        for e in edges {
            let e = e.into();
            g.add_edge(e.u, e.v)?;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v as usize].len()
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.adj.iter().map(|a| a.len() as u32).collect()
    }

    #[inline]
    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        if u == v {
            return false;
        }
        let (du, dv) = (self.degree(u), self.degree(v));
        if du > HEAVY_DEGREE && dv > HEAVY_DEGREE {
            return self.heavy.contains(&key(u, v));
        }
        let (scan, other) = if du <= dv { (u, v) } else { (v, u) };
        self.adj[scan as usize].iter().any(|nb| nb.vertex == other)
    }

    pub fn neighbors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        self.adj[v as usize].iter().map(|nb| nb.vertex)
    }

    /// Edge stored in list slot `slot`, smaller endpoint first.
    #[inline]
    pub fn edge_at(&self, slot: usize) -> Edge {
        let r = &self.edges[slot];
        Edge::new(r.a.min(r.b), r.a.max(r.b))
    }

    /// Edges in list order, smaller endpoint first.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.edges.len()).map(move |i| self.edge_at(i))
    }

    /// Edges sorted lexicographically, smaller endpoint first.
    pub fn sorted_edges(&self) -> Vec<(Vertex, Vertex)> {
        let mut out: Vec<_> = self.edges().map(Edge::ordered).collect();
        out.sort_unstable();
        out
    }

    fn check_vertex(&self, v: Vertex) -> Result<()> {
        if (v as usize) < self.n() {
            Ok(())
        } else {
            Err(Error::Contract(format!(
                "vertex {v} out of range for n = {}",
                self.n()
            )))
        }
    }

    pub fn add_edge(&mut self, u: Vertex, v: Vertex) -> Result<()> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return Err(Error::Contract(format!("self-loop at vertex {u}")));
        }
        if self.has_edge(u, v) {
            return Err(Error::Contract(format!("duplicate edge ({u}, {v})")));
        }
        let slot = self.edges.len() as u32;
        let pos_a = self.adj[u as usize].len() as u32;
        let pos_b = self.adj[v as usize].len() as u32;
        self.adj[u as usize].push(Neighbor { vertex: v, slot });
        self.adj[v as usize].push(Neighbor { vertex: u, slot });
        self.edges.push(EdgeRecord {
            a: u,
            b: v,
            pos_a,
            pos_b,
        });
        for w in [u, v] {
            if self.degree(w) == HEAVY_DEGREE + 1 {
                self.set_heavy_edges(w, true);
            }
        }
        if self.is_heavy(u) && self.is_heavy(v) {
            self.heavy.insert(key(u, v));
        }
        Ok(())
    }

    #[inline]
    fn is_heavy(&self, v: Vertex) -> bool {
        self.degree(v) > HEAVY_DEGREE
    }

    /// Adds or removes every edge from `w` to a heavy neighbour.
    fn set_heavy_edges(&mut self, w: Vertex, present: bool) {
        for i in 0..self.adj[w as usize].len() {
            let x = self.adj[w as usize][i].vertex;
            if self.is_heavy(x) {
                if present {
                    self.heavy.insert(key(w, x));
                } else {
                    self.heavy.remove(&key(w, x));
                }
            }
        }
    }

    /// Removes an edge. The last edge-list slot and the last entries of the
    /// two neighbour lists are moved into the vacated positions.
    pub fn remove_edge(&mut self, u: Vertex, v: Vertex) -> Result<()> {
        let slot = self
            .slot_of(Edge::new(u, v))
            .ok_or_else(|| Error::Contract(format!("edge ({u}, {v}) not present")))?
            as u32;
        self.heavy.remove(&key(u, v));
        for w in [u, v] {
            if self.degree(w) == HEAVY_DEGREE + 1 {
                self.set_heavy_edges(w, false);
            }
        }
        let rec = self.edges[slot as usize];
        self.detach(rec.a, rec.pos_a);
        self.detach(rec.b, rec.pos_b);

        let last = self.edges.len() as u32 - 1;
        self.edges.swap_remove(slot as usize);
        if slot != last {
            let moved = self.edges[slot as usize];
            self.adj[moved.a as usize][moved.pos_a as usize].slot = slot;
            self.adj[moved.b as usize][moved.pos_b as usize].slot = slot;
        }
        Ok(())
    }

    /// Swap-removes position `pos` of `adj[w]` and repairs the moved entry's record.
    fn detach(&mut self, w: Vertex, pos: u32) {
        let list = &mut self.adj[w as usize];
        list.swap_remove(pos as usize);
        if let Some(moved) = list.get(pos as usize).copied() {
            self.edges[moved.slot as usize].set_pos(w, pos);
        }
    }

    /// Uniformly random edge-list slot.
    #[inline]
    pub fn sample_slot<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        if self.edges.is_empty() {
            return Err(Error::Contract(
                "cannot sample an edge from an empty graph".into(),
            ));
        }
        Ok(rng.random_range(0..self.edges.len()))
    }

    /// Uniformly random edge.
    pub fn sample_edge<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Edge> {
        self.sample_slot(rng).map(|s| self.edge_at(s))
    }

    /// Number of common neighbours of `u` and `v`.
    #[inline]
    pub fn common_neighbors(&self, u: Vertex, v: Vertex) -> usize {
        let (small, other) = if self.degree(u) <= self.degree(v) {
            (u, v)
        } else {
            (v, u)
        };
        self.adj[small as usize]
            .iter()
            .filter(|nb| self.has_edge(nb.vertex, other))
            .count()
    }

    /// Endpoints of the edge in `slot`, in stored orientation.
    #[inline]
    pub(crate) fn slot_endpoints(&self, slot: usize) -> (Vertex, Vertex) {
        let r = &self.edges[slot];
        (r.a, r.b)
    }

    /// Replaces edges `{a,b}` (slot `i`) and `{x,y}` (slot `j`) by `{a,x}`
    /// and `{b,y}`, reusing both slots and all four neighbour positions.
    /// The caller guarantees legality.
    #[inline]
    pub(crate) fn switch_slots(
        &mut self,
        i: usize,
        j: usize,
        a: Vertex,
        b: Vertex,
        x: Vertex,
        y: Vertex,
    ) {
        let ri = self.edges[i];
        let rj = self.edges[j];
        let pos_a = ri.pos_of(a);
        let pos_b = ri.pos_of(b);
        let pos_x = rj.pos_of(x);
        let pos_y = rj.pos_of(y);

        let heavy = [
            self.is_heavy(a),
            self.is_heavy(b),
            self.is_heavy(x),
            self.is_heavy(y),
        ];
        if heavy[0] && heavy[1] {
            self.heavy.remove(&key(a, b));
        }
        if heavy[2] && heavy[3] {
            self.heavy.remove(&key(x, y));
        }

        self.adj[a as usize][pos_a as usize] = Neighbor {
            vertex: x,
            slot: i as u32,
        };
        self.adj[x as usize][pos_x as usize] = Neighbor {
            vertex: a,
            slot: i as u32,
        };
        self.adj[b as usize][pos_b as usize] = Neighbor {
            vertex: y,
            slot: j as u32,
        };
        self.adj[y as usize][pos_y as usize] = Neighbor {
            vertex: b,
            slot: j as u32,
        };
        self.edges[i] = EdgeRecord {
            a,
            b: x,
            pos_a,
            pos_b: pos_x,
        };
        self.edges[j] = EdgeRecord {
            a: b,
            b: y,
            pos_a: pos_b,
            pos_b: pos_y,
        };

        if heavy[0] && heavy[2] {
            self.heavy.insert(key(a, x));
        }
        if heavy[1] && heavy[3] {
            self.heavy.insert(key(b, y));
        }
    }

    fn slot_of(&self, e: Edge) -> Option<usize> {
        if e.is_loop() {
            return None;
        }
        let (u, v) = (e.u, e.v);
        if (u as usize) >= self.n() || (v as usize) >= self.n() {
            return None;
        }
        let (scan, other) = if self.degree(u) <= self.degree(v) {
            (u, v)
        } else {
            (v, u)
        };
        self.adj[scan as usize]
            .iter()
            .find(|nb| nb.vertex == other)
            .map(|nb| nb.slot as usize)
    }

    /// Validates a switch and returns `(u1, v1, u2, v2)` such that the
    /// switch removes `{u1,v1}, {u2,v2}` and adds `{u1,v2}, {u2,v1}`.
    fn resolve_switch(
        &self,
        removed: [Edge; 2],
        added: [Edge; 2],
    ) -> Result<(Vertex, Vertex, Vertex, Vertex)> {
        for e in removed.iter().chain(added.iter()) {
            self.check_vertex(e.u)?;
            self.check_vertex(e.v)?;
        }
        let [e1, e2] = removed;
        let four = [e1.u, e1.v, e2.u, e2.v];
        let distinct = (0..4).all(|i| (i + 1..4).all(|j| four[i] != four[j]));
        if !distinct {
            return Err(Error::Contract(format!(
                "removed edges {e1} and {e2} must have four distinct endpoints"
            )));
        }
        for e in removed {
            if !self.has_edge(e.u, e.v) {
                return Err(Error::Contract(format!("removed edge {e} not present")));
            }
        }
        let (u1, v1) = (e1.u, e1.v);
        let (u2, v2) = if added.contains(&Edge::new(u1, e2.v)) {
            (e2.u, e2.v)
        } else {
            (e2.v, e2.u)
        };
        let expected = [Edge::new(u1, v2), Edge::new(u2, v1)];
        let same = (added[0] == expected[0] && added[1] == expected[1])
            || (added[0] == expected[1] && added[1] == expected[0]);
        if !same {
            return Err(Error::Contract(format!(
                "added edges {} and {} are not a switch of {e1} and {e2}",
                added[0], added[1]
            )));
        }
        for e in expected {
            if self.has_edge(e.u, e.v) {
                return Err(Error::Contract(format!("added edge {e} already present")));
            }
        }
        Ok((u1, v1, u2, v2))
    }

    /// Applies a switch after checking that it is legal. Degrees are unchanged.
    pub fn apply_switch(&mut self, removed: [Edge; 2], added: [Edge; 2]) -> Result<()> {
        let (u1, v1, u2, v2) = self.resolve_switch(removed, added)?;
        let i = self.slot_of(Edge::new(u1, v1)).expect("checked");
        let j = self.slot_of(Edge::new(u2, v2)).expect("checked");
        self.switch_slots(i, j, u1, v1, v2, u2);
        Ok(())
    }

    /// Change in the triangle count that the switch would cause, computed
    /// from common-neighbour counts around the four affected edges.
    pub fn triangle_delta(&self, removed: [Edge; 2], added: [Edge; 2]) -> Result<i64> {
        let (u1, v1, u2, v2) = self.resolve_switch(removed, added)?;
        Ok(self.switch_delta(u1, v1, u2, v2))
    }

    /// Triangle change for removing `{u1,v1}, {u2,v2}` and adding
    /// `{u1,v2}, {u2,v1}`; the four vertices are distinct.
    ///
    /// Removing or adding an edge `{p,q}` destroys or creates exactly
    /// `cn(p,q)` triangles in the graph at that moment. Performing the four
    /// edits in order, the only common-neighbour counts that differ from
    /// their value in the current graph are those of the added edges, each
    /// of which loses `v1` or `u2` (resp. `u1` or `v2`) as a common neighbour
    /// when `{v1,v2}` (resp. `{u1,u2}`) is an edge.
    #[inline]
    pub(crate) fn switch_delta(&self, u1: Vertex, v1: Vertex, u2: Vertex, v2: Vertex) -> i64 {
        let gained = self.common_neighbors(u1, v2) + self.common_neighbors(u2, v1);
        let lost = self.common_neighbors(u1, v1) + self.common_neighbors(u2, v2);
        let cross = 2 * (usize::from(self.has_edge(u1, u2)) + usize::from(self.has_edge(v1, v2)));
        gained as i64 - lost as i64 - cross as i64
    }

    /// Exact triangle count by degree-ordered neighbour intersection: each
    /// edge is directed from lower to higher `(degree, id)` rank, and each
    /// triangle is found once from its lowest-ranked vertex.
    pub fn count_triangles(&self) -> u64 {
        let n = self.n();
        let rank_lt = |a: usize, b: usize| (self.adj[a].len(), a) < (self.adj[b].len(), b);
        let mut offsets = Vec::with_capacity(n + 1);
        let mut out: Vec<Vertex> = Vec::with_capacity(self.edges.len());
        offsets.push(0usize);
        for v in 0..n {
            out.extend(
                self.adj[v]
                    .iter()
                    .map(|nb| nb.vertex)
                    .filter(|&w| rank_lt(v, w as usize)),
            );
            offsets.push(out.len());
        }
        let mut mark = vec![false; n];
        let mut count = 0u64;
        for v in 0..n {
            let mine = &out[offsets[v]..offsets[v + 1]];
            for &w in mine {
                mark[w as usize] = true;
            }
            for &w in mine {
                let w = w as usize;
                count += out[offsets[w]..offsets[w + 1]]
                    .iter()
                    .filter(|&&x| mark[x as usize])
                    .count() as u64;
            }
            for &w in mine {
                mark[w as usize] = false;
            }
        }
        count
    }

    /// Edge set as a bitmask over the row-major pairs `(i, j)`, `i < j`.
    /// Available for `n <= 16`.
    pub fn edge_mask(&self) -> Option<u128> {
        let n = self.n();
        if n > 16 {
            return None;
        }
        Some(
            self.edges()
                .map(|e| {
                    let (a, b) = e.ordered();
                    1u128 << pair_index(n, a as usize, b as usize)
                })
                .fold(0, |acc, bit| acc | bit),
        )
    }

    /// Checks that the three internal views describe the same simple graph.
    pub fn audit(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Contract(format!("audit: {msg}")));
        let mut half_edges = 0usize;
        let mut heavy_edges = 0usize;
        for (slot, r) in self.edges.iter().enumerate() {
            if r.a == r.b {
                return fail(format!("self-loop in slot {slot}"));
            }
            if self.is_heavy(r.a) && self.is_heavy(r.b) {
                heavy_edges += 1;
                if !self.heavy.contains(&key(r.a, r.b)) {
                    return fail(format!("heavy edge in slot {slot} is not hashed"));
                }
            }
            let na = self.adj[r.a as usize].get(r.pos_a as usize);
            let nb = self.adj[r.b as usize].get(r.pos_b as usize);
            match (na, nb) {
                (Some(na), Some(nb))
                    if na.vertex == r.b
                        && nb.vertex == r.a
                        && na.slot == slot as u32
                        && nb.slot == slot as u32 => {}
                _ => return fail(format!("neighbour positions broken for slot {slot}")),
            }
        }
        for (v, list) in self.adj.iter().enumerate() {
            half_edges += list.len();
            for nb in list {
                let r = self.edges.get(nb.slot as usize);
                match r {
                    Some(r)
                        if (r.a as usize == v && r.b == nb.vertex)
                            || (r.b as usize == v && r.a == nb.vertex) => {}
                    _ => return fail(format!("neighbour entry of {v} points at a wrong slot")),
                }
            }
        }
        if heavy_edges != self.heavy.len() {
            return fail(format!(
                "{} hashed edges, {heavy_edges} heavy edges",
                self.heavy.len()
            ));
        }
        if half_edges != 2 * self.edges.len() {
            return fail("neighbour lists and edge list disagree in size".into());
        }
        Ok(())
    }

    /// Writes the edge-list text format: `u v` per line, `u < v`, sorted.
    pub fn write_edge_list<W: Write>(&self, mut writer: W) -> Result<()> {
        for (a, b) in self.sorted_edges() {
            writeln!(writer, "{a} {b}")?;
        }
        Ok(())
    }

    /// Reads the edge-list format. Lines starting with `#` are skipped.
    /// Without an explicit `n`, the vertex count is one past the largest id.
    pub fn read_edge_list<R: BufRead>(reader: R, n: Option<usize>) -> Result<Self> {
        let mut pairs = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: idx + 1,
                message,
            };
            let mut it = t.split_whitespace();
            let mut next = || -> Result<Vertex> {
                it.next()
                    .ok_or_else(|| parse_err("expected two vertex ids".into()))?
                    .parse::<Vertex>()
                    .map_err(|e| parse_err(e.to_string()))
            };
            let u = next()?;
            let v = next()?;
            if it.next().is_some() {
                return Err(parse_err("trailing tokens".into()));
            }
            pairs.push((u, v));
        }
        let inferred = pairs
            .iter()
            .map(|&(u, v)| u.max(v) as usize + 1)
            .max()
            .unwrap_or(0);
        let n = match n {
            Some(n) if n < inferred => {
                return Err(Error::Contract(format!(
                    "edge list references vertex {} but n = {n}",
                    inferred - 1
                )))
            }
            Some(n) => n,
            None => inferred,
        };
        Self::from_edges(n, pairs)
    }

    pub fn load_edge_list(path: impl AsRef<Path>, n: Option<usize>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_edge_list(std::io::BufReader::new(file), n)
    }

    pub fn save_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_edge_list(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

impl PartialEq for SimpleGraph {
    /// Same vertex count and same edge set, regardless of storage order.
    fn eq(&self, other: &Self) -> bool {
        self.n() == other.n()
            && self.edge_count() == other.edge_count()
            && self.edges().all(|e| other.has_edge(e.u, e.v))
    }
}

impl Eq for SimpleGraph {}

/// Row-major index of the pair `(i, j)`, `i < j`, among all pairs of `0..n`.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Configuration-model output: a multiset of vertex pairs, self-pairs allowed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MultiGraph {
    n: usize,
    edges: Vec<(Vertex, Vertex)>,
}

impl MultiGraph {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            edges: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn push(&mut self, u: Vertex, v: Vertex) {
        debug_assert!((u as usize) < self.n && (v as usize) < self.n);
        self.edges.push((u, v));
    }

    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    /// Degrees with each self-loop counted twice.
    pub fn degrees(&self) -> Vec<u32> {
        let mut d = vec![0u32; self.n];
        for &(u, v) in &self.edges {
            d[u as usize] += 1;
            d[v as usize] += 1;
        }
        d
    }

    pub fn self_loops(&self) -> usize {
        self.edges.iter().filter(|(u, v)| u == v).count()
    }

    /// True when there are no self-loops and no repeated pairs.
    pub fn is_simple(&self) -> bool {
        if self.self_loops() > 0 {
            return false;
        }
        let mut keys: Vec<u64> = self.edges.iter().map(|&(u, v)| key(u, v)).collect();
        keys.sort_unstable();
        keys.windows(2).all(|w| w[0] != w[1])
    }
}

/// Drops self-loops and collapses repeated pairs.
pub fn erase(mg: &MultiGraph) -> SimpleGraph {
    let mut g = SimpleGraph::new(mg.n());
    for &(u, v) in mg.edges() {
        if u != v && !g.has_edge(u, v) {
            g.add_edge(u, v).expect("endpoints in range");
        }
    }
    g
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng as Pcg64;

    pub(crate) fn complete(n: usize) -> SimpleGraph {
        let mut g = SimpleGraph::new(n);
        for i in 0..n as u32 {
            for j in i + 1..n as u32 {
                g.add_edge(i, j).unwrap();
            }
        }
        g
    }

    pub(crate) fn cycle(n: usize) -> SimpleGraph {
        SimpleGraph::from_edges(n, (0..n as u32).map(|i| (i, (i + 1) % n as u32))).unwrap()
    }

    pub(crate) fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> SimpleGraph {
        let mut g = SimpleGraph::new(n);
        for i in 0..n as u32 {
            for j in i + 1..n as u32 {
                if rng.random::<f64>() < p {
                    g.add_edge(i, j).unwrap();
                }
            }
        }
        g
    }

    pub(crate) fn naive_triangles(g: &SimpleGraph) -> u64 {
        let n = g.n() as u32;
        let mut c = 0;
        for a in 0..n {
            for b in a + 1..n {
                if !g.has_edge(a, b) {
                    continue;
                }
                for x in b + 1..n {
                    if g.has_edge(a, x) && g.has_edge(b, x) {
                        c += 1;
                    }
                }
            }
        }
        c
    }

    fn e(u: Vertex, v: Vertex) -> Edge {
        Edge::new(u, v)
    }

    #[test]
    fn triangle_examples() {
        assert_eq!(complete(4).count_triangles(), 4);
        assert_eq!(cycle(6).count_triangles(), 0);
        assert_eq!(complete(5).count_triangles(), 10);
        assert_eq!(SimpleGraph::new(0).count_triangles(), 0);
    }

    #[test]
    fn triangles_match_naive_on_random_graphs() {
        let mut rng = Pcg64::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(0..=60);
            let p = rng.random::<f64>();
            let g = random_graph(n, p, &mut rng);
            assert_eq!(g.count_triangles(), naive_triangles(&g));
        }
    }

    #[test]
    fn edge_equality_ignores_orientation() {
        assert_eq!(e(1, 2), e(2, 1));
        let mut set = std::collections::HashSet::new();
        set.insert(e(1, 2));
        assert!(set.contains(&e(2, 1)));
    }

    #[test]
    fn add_edge_rejects_loops_and_duplicates() {
        let mut g = SimpleGraph::new(3);
        g.add_edge(0, 1).unwrap();
        assert!(g.add_edge(1, 0).is_err());
        assert!(g.add_edge(2, 2).is_err());
        assert!(g.add_edge(0, 3).is_err());
    }

    #[test]
    fn sample_edge_single_and_empty() {
        let mut rng = Pcg64::seed_from_u64(1);
        assert!(SimpleGraph::new(3).sample_edge(&mut rng).is_err());
        let g = SimpleGraph::from_edges(2, [(0, 1)]).unwrap();
        for _ in 0..100 {
            assert_eq!(g.sample_edge(&mut rng).unwrap(), e(0, 1));
        }
    }

    #[test]
    fn sample_edge_uniform_on_path() {
        let mut rng = Pcg64::seed_from_u64(2);
        let g = SimpleGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let draws = 300_000usize;
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            let (a, _) = g.sample_edge(&mut rng).unwrap().ordered();
            counts[a as usize] += 1;
        }
        let p = 1.0 / 3.0;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!(
                (c as f64 - draws as f64 * p).abs() < 3.0 * sigma,
                "{counts:?}"
            );
        }
    }

    #[test]
    fn removed_edge_never_sampled() {
        let mut rng = Pcg64::seed_from_u64(5);
        let mut g = SimpleGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        g.remove_edge(2, 1).unwrap();
        g.audit().unwrap();
        for _ in 0..1000 {
            assert_ne!(g.sample_edge(&mut rng).unwrap(), e(1, 2));
        }
        assert!(g.remove_edge(1, 2).is_err());
    }

    #[test]
    fn switch_on_path() {
        // a=0, b=1, c=2, d=3
        let mut g = SimpleGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let before = {
            let mut d = g.degrees();
            d.sort();
            d
        };
        let removed = [e(0, 1), e(2, 3)];
        let added = [e(0, 2), e(1, 3)];
        assert_eq!(g.triangle_delta(removed, added).unwrap(), 0);
        g.apply_switch(removed, added).unwrap();
        g.audit().unwrap();
        assert_eq!(g.sorted_edges(), vec![(0, 2), (1, 2), (1, 3)]);
        let mut after = g.degrees();
        after.sort();
        assert_eq!(before, after);
        assert_eq!(g.degrees(), vec![1, 2, 2, 1]);
    }

    #[test]
    fn switch_then_inverse_restores() {
        let mut g = SimpleGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let orig = g.clone();
        g.apply_switch([e(0, 1), e(2, 3)], [e(0, 2), e(1, 3)])
            .unwrap();
        g.apply_switch([e(0, 2), e(1, 3)], [e(0, 1), e(2, 3)])
            .unwrap();
        assert_eq!(g, orig);
        g.audit().unwrap();
    }

    #[test]
    fn illegal_switches_are_contract_errors() {
        let mut g = SimpleGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        // Shares vertex 1.
        assert!(matches!(
            g.apply_switch([e(0, 1), e(1, 2)], [e(0, 2), e(1, 1)]),
            Err(Error::Contract(_))
        ));
        // Added edge (1, 2) already exists.
        assert!(g
            .apply_switch([e(0, 1), e(2, 3)], [e(0, 3), e(2, 1)])
            .is_err());
        // Not a re-pairing of the removed endpoints.
        assert!(g
            .apply_switch([e(0, 1), e(2, 3)], [e(0, 2), e(3, 0)])
            .is_err());
        // Missing removed edge.
        assert!(g
            .triangle_delta([e(0, 3), e(1, 2)], [e(0, 2), e(1, 3)])
            .is_err());
        g.audit().unwrap();
    }

    #[test]
    fn erase_examples() {
        let mut mg = MultiGraph::new(1);
        mg.push(0, 0);
        let g = erase(&mg);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.n(), 1);

        let mut mg = MultiGraph::new(2);
        mg.push(0, 1);
        mg.push(1, 0);
        assert!(!mg.is_simple());
        assert_eq!(erase(&mg).sorted_edges(), vec![(0, 1)]);

        let mut mg = MultiGraph::new(3);
        mg.push(0, 1);
        mg.push(1, 2);
        assert!(mg.is_simple());
        let g = erase(&mg);
        assert_eq!(g.degrees(), mg.degrees());
    }

    #[test]
    fn edge_list_roundtrip_and_format() {
        let g = SimpleGraph::from_edges(5, [(3, 1), (0, 4), (1, 0)]).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "0 1\n0 4\n1 3\n");
        let text = format!("# comment\n{}", String::from_utf8(buf).unwrap());
        let back = SimpleGraph::read_edge_list(text.as_bytes(), Some(5)).unwrap();
        assert_eq!(back, g);
        assert!(SimpleGraph::read_edge_list("0 1\n0\n".as_bytes(), None).is_err());
        assert!(SimpleGraph::read_edge_list("0 7\n".as_bytes(), Some(3)).is_err());
    }

    #[test]
    fn pair_index_is_row_major() {
        let n = 6;
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                assert_eq!(pair_index(n, i, j), k);
                k += 1;
            }
        }
    }

    /// All legal switches of the graph, as (removed, added) pairs.
    pub(crate) fn legal_switches(g: &SimpleGraph) -> Vec<([Edge; 2], [Edge; 2])> {
        let edges: Vec<Edge> = g.edges().collect();
        let mut out = Vec::new();
        for i in 0..edges.len() {
            for j in i + 1..edges.len() {
                let (a, b) = edges[i].ordered();
                let (c, d) = edges[j].ordered();
                for added in [[e(a, c), e(b, d)], [e(a, d), e(b, c)]] {
                    let removed = [edges[i], edges[j]];
                    if g.triangle_delta(removed, added).is_ok() {
                        out.push((removed, added));
                    }
                }
            }
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn switch_delta_matches_recount(seed in any::<u64>(), n in 4usize..30, p in 0.1f64..0.7) {
            let mut rng = Pcg64::seed_from_u64(seed);
            let g = random_graph(n, p, &mut rng);
            let base = g.count_triangles() as i64;
            for (removed, added) in legal_switches(&g).into_iter().take(50) {
                let delta = g.triangle_delta(removed, added).unwrap();
                let mut h = g.clone();
                h.apply_switch(removed, added).unwrap();
                h.audit().unwrap();
                prop_assert_eq!(h.degrees(), g.degrees());
                prop_assert_eq!(h.count_triangles() as i64 - base, delta);
                // Antisymmetry.
                prop_assert_eq!(h.triangle_delta(added, removed).unwrap(), -delta);
            }
        }

        #[test]
        fn removals_keep_views_consistent(seed in any::<u64>(), n in 2usize..25) {
            let mut rng = Pcg64::seed_from_u64(seed);
            let mut g = random_graph(n, 0.5, &mut rng);
            while g.edge_count() > 0 {
                let edge = g.sample_edge(&mut rng).unwrap();
                g.remove_edge(edge.v, edge.u).unwrap();
                g.audit().unwrap();
                prop_assert!(!g.has_edge(edge.u, edge.v));
            }
        }

        #[test]
        fn dense_edits_match_a_set_model(seed in any::<u64>(), n in 26usize..60, ops in 50usize..400) {
            let mut rng = Pcg64::seed_from_u64(seed);
            let mut g = random_graph(n, 0.7, &mut rng);
            let mut model: std::collections::BTreeSet<(Vertex, Vertex)> = g.sorted_edges().into_iter().collect();
            for _ in 0..ops {
                let u = rng.random_range(0..n as Vertex);
                let v = rng.random_range(0..n as Vertex);
                if u == v {
                    continue;
                }
                let pair = (u.min(v), u.max(v));
                if rng.random_bool(0.5) {
                    prop_assert_eq!(g.add_edge(u, v).is_ok(), model.insert(pair));
                } else {
                    prop_assert_eq!(g.remove_edge(u, v).is_ok(), model.remove(&pair));
                }
                if g.edge_count() < 2 {
                    continue;
                }
                let (e1, e2) = (g.sample_edge(&mut rng).unwrap(), g.sample_edge(&mut rng).unwrap());
                let removed = [e1, e2];
                let added = [e(e1.u, e2.v), e(e2.u, e1.v)];
                if g.apply_switch(removed, added).is_ok() {
                    for r in removed {
                        model.remove(&r.ordered());
                    }
                    for a in added {
                        model.insert(a.ordered());
                    }
                }
            }
            g.audit().unwrap();
            prop_assert_eq!(g.sorted_edges(), model.iter().copied().collect::<Vec<_>>());
            for a in 0..n as Vertex {
                for b in 0..n as Vertex {
                    prop_assert_eq!(g.has_edge(a, b), model.contains(&(a.min(b), a.max(b))));
                }
            }
        }

        #[test]
        fn erase_never_increases_degrees(pairs in proptest::collection::vec((0u32..8, 0u32..8), 0..30)) {
            let mut mg = MultiGraph::new(8);
            for (u, v) in pairs {
                mg.push(u, v);
            }
            let g = erase(&mg);
            g.audit().unwrap();
            let (dm, dg) = (mg.degrees(), g.degrees());
            prop_assert!(dm.iter().zip(&dg).all(|(a, b)| b <= a));
            prop_assert_eq!(dm == dg, mg.is_simple());
        }
    }
}
