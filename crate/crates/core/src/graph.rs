//! Simple undirected graphs, seeded random edge orderings, and basic
//! structural queries.
//!
//! Vertices are `0..n`. An unordered pair `{u, v}` with `u < v` has the pair
//! index `u*n - u*(u+1)/2 + (v - u - 1)`, which enumerates the pairs of `K_n`
//! row by row: `{0,1}, {0,2}, .., {0,n-1}, {1,2}, ..`.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use fixedbitset::FixedBitSet;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsu::DisjointSets;
use crate::error::{Error, Result};

/// Largest vertex count for which a full edge ordering is materialized.
pub const MAX_PERMUTATION_VERTICES: usize = 5000;

/// Graphs up to this size keep edge membership in a dense bitset over pair
/// indices; larger ones fall back to a hash set.
const DENSE_MEMBERSHIP_LIMIT: usize = 8192;

/// An unordered vertex pair, stored with `u < v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
}

impl Edge {
    /// Normalizes the endpoint order. Panics on a self-loop.
    pub fn new(a: usize, b: usize) -> Self {
        assert_ne!(a, b, "self-loop {a}-{a} is not an edge");
        if a < b {
            Edge { u: a, v: b }
        } else {
            Edge { u: b, v: a }
        }
    }

    pub fn contains(&self, x: usize) -> bool {
        self.u == x || self.v == x
    }

    /// The endpoint other than `x`. `x` must be an endpoint.
    pub fn other(&self, x: usize) -> usize {
        if self.u == x {
            self.v
        } else {
            debug_assert_eq!(self.v, x);
            self.u
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.u, self.v)
    }
}

/// Number of unordered pairs on `n` vertices.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Pair index of `{u, v}` on `n` vertices (see module docs).
pub fn pair_index(n: usize, e: Edge) -> usize {
    let Edge { u, v } = e;
    debug_assert!(u < v && v < n);
    u * n - u * (u + 1) / 2 + (v - u - 1)
}

/// Inverse of [`pair_index`].
pub fn pair_from_index(n: usize, idx: usize) -> Edge {
    debug_assert!(idx < pair_count(n));
    // Row u starts at u*n - u*(u+1)/2; binary search for the last row start <= idx.
    let row_start = |u: usize| u * n - u * (u + 1) / 2;
    let (mut lo, mut hi) = (0usize, n - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if row_start(mid) <= idx {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Edge {
        u: lo,
        v: idx - row_start(lo) + lo + 1,
    }
}

#[derive(Clone, Debug)]
enum Membership {
    Dense(FixedBitSet),
    Sparse(HashSet<u64>),
}

/// Mutable simple graph: per-vertex neighbour lists in insertion order plus an
/// edge-membership index.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<usize>>,
    members: Membership,
    m: usize,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.m == other.m && self.sorted_edges() == other.sorted_edges()
    }
}

impl Eq for Graph {}

impl Graph {
    pub fn new_empty(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("graph needs at least one vertex".into()));
        }
        let members = if n <= DENSE_MEMBERSHIP_LIMIT {
            Membership::Dense(FixedBitSet::with_capacity(pair_count(n)))
        } else {
            Membership::Sparse(HashSet::new())
        };
        Ok(Graph {
            n,
            adj: vec![Vec::new(); n],
            members,
            m: 0,
        })
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Graph::new_empty(n)?;
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Graph::new_empty(n)?;
        for u in 0..n {
            for v in u + 1..n {
                g.insert(Edge { u, v });
            }
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    fn key(&self, e: Edge) -> usize {
        pair_index(self.n, e)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        if a == b || a >= self.n || b >= self.n {
            return false;
        }
        let k = self.key(Edge::new(a, b));
        match &self.members {
            Membership::Dense(bits) => bits.contains(k),
            Membership::Sparse(set) => set.contains(&(k as u64)),
        }
    }

    pub fn check_pair(&self, a: usize, b: usize) -> Result<Edge> {
        if a == b {
            return Err(Error::ContractViolation(format!("self-loop at vertex {a}")));
        }
        if a >= self.n || b >= self.n {
            return Err(Error::ContractViolation(format!(
                "vertex out of range in pair {{{a},{b}}} (n = {})",
                self.n
            )));
        }
        Ok(Edge::new(a, b))
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<()> {
        let e = self.check_pair(a, b)?;
        if self.has_edge(a, b) {
            return Err(Error::ContractViolation(format!("duplicate edge {e}")));
        }
        self.insert(e);
        Ok(())
    }

    /// Inserts a pair that is known to be valid and absent.
    pub(crate) fn insert(&mut self, e: Edge) {
        let k = self.key(e);
        match &mut self.members {
            Membership::Dense(bits) => bits.insert(k),
            Membership::Sparse(set) => {
                set.insert(k as u64);
            }
        }
        self.adj[e.u].push(e.v);
        self.adj[e.v].push(e.u);
        self.m += 1;
    }

    /// Edges with `u < v`, grouped by their smaller endpoint.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, nb)| {
            nb.iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| Edge { u, v })
        })
    }

    pub fn sorted_edges(&self) -> Vec<Edge> {
        let mut es: Vec<Edge> = self.edges().collect();
        es.sort_unstable();
        es
    }

    pub fn isolated_vertices(&self) -> Vec<usize> {
        (0..self.n).filter(|&v| self.adj[v].is_empty()).collect()
    }

    pub fn isolated_count(&self) -> usize {
        self.adj.iter().filter(|nb| nb.is_empty()).count()
    }

    /// Connected components, each sorted, ordered by smallest vertex.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            queue.push_back(s);
            let mut comp = Vec::new();
            while let Some(x) = queue.pop_front() {
                comp.push(x);
                for &y in &self.adj[x] {
                    if !seen[y] {
                        seen[y] = true;
                        queue.push_back(y);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Sum of squared component sizes, and the same sum without the isolated
    /// vertices.
    pub fn susceptibility(&self) -> (u64, u64) {
        let s: u64 = self
            .connected_components()
            .iter()
            .map(|c| (c.len() as u64).pow(2))
            .sum();
        (s, s - self.isolated_count() as u64)
    }

    pub fn is_acyclic(&self) -> bool {
        let mut d = DisjointSets::new(self.n);
        for e in self.edges() {
            if d.same(e.u, e.v) {
                return false;
            }
            d.union(e.u, e.v);
        }
        true
    }

    /// Subgraph induced by `keep` (in the given order); vertex `i` of the
    /// result is `keep[i]`.
    pub fn induced(&self, keep: &[usize]) -> Result<Graph> {
        let mut index = vec![usize::MAX; self.n];
        for (i, &v) in keep.iter().enumerate() {
            index[v] = i;
        }
        let mut h = Graph::new_empty(keep.len())?;
        for (i, &v) in keep.iter().enumerate() {
            for &w in &self.adj[v] {
                let j = index[w];
                if j != usize::MAX && i < j {
                    h.insert(Edge::new(i, j));
                }
            }
        }
        Ok(h)
    }

    /// Copy of the graph with vertex `v` removed and vertices above it
    /// shifted down by one.
    pub fn without_vertex(&self, v: usize) -> Result<Graph> {
        let keep: Vec<usize> = (0..self.n).filter(|&x| x != v).collect();
        self.induced(&keep)
    }

    /// Parses the edge-list format: a header line `n m`, then `m` lines `u v`.
    pub fn parse_edge_list(text: &str, origin: &Path) -> Result<Graph> {
        parse_edge_list_lines(text.lines().map(|l| Ok(l.to_owned())), origin)
    }

    pub fn read_edge_list(path: &Path) -> Result<Graph> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let lines = BufReader::new(file)
            .lines()
            .map(|l| l.map_err(|e| Error::io(path, e)));
        parse_edge_list_lines(lines, path)
    }

    pub fn write_edge_list<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = BufWriter::new(out);
        writeln!(out, "{} {}", self.n, self.m)?;
        for e in self.sorted_edges() {
            writeln!(out, "{} {}", e.u, e.v)?;
        }
        out.flush()
    }

    pub fn save_edge_list(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_edge_list(file).map_err(|e| Error::io(path, e))
    }
}

fn parse_edge_list_lines(mut lines: impl Iterator<Item = Result<String>>, origin: &Path) -> Result<Graph> {
    let bad = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let parse_two = |line_no: usize, s: &str| -> Result<(usize, usize)> {
        let mut it = s.split_whitespace();
        let a = it
            .next()
            .ok_or_else(|| bad(line_no, "expected two integers".into()))?;
        let b = it
            .next()
            .ok_or_else(|| bad(line_no, "expected two integers".into()))?;
        if it.next().is_some() {
            return Err(bad(line_no, "trailing tokens".into()));
        }
        let a = a
            .parse()
            .map_err(|_| bad(line_no, format!("not an integer: {a:?}")))?;
        let b = b
            .parse()
            .map_err(|_| bad(line_no, format!("not an integer: {b:?}")))?;
        Ok((a, b))
    };
    let header = lines
        .next()
        .ok_or_else(|| bad(1, "missing header line".into()))??;
    let (n, m) = parse_two(1, &header)?;
    let mut g = Graph::new_empty(n).map_err(|e| bad(1, e.to_string()))?;
    let mut seen = 0;
    for (i, line) in lines.enumerate() {
        let line = line?;
        let line_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let (u, v) = parse_two(line_no, &line)?;
        if u >= v {
            return Err(bad(line_no, format!("endpoints must satisfy u < v, got {u} {v}")));
        }
        g.add_edge(u, v).map_err(|e| bad(line_no, e.to_string()))?;
        seen += 1;
    }
    if seen != m {
        return Err(bad(1, format!("header declares {m} edges, found {seen}")));
    }
    Ok(g)
}

/// A seeded uniformly random ordering of all pairs of `K_n`.
#[derive(Clone, Debug)]
pub struct EdgePermutation {
    n: usize,
    seed: u64,
    order: Vec<u32>,
}

impl EdgePermutation {
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "edge ordering needs n >= 2, got {n}"
            )));
        }
        if n > MAX_PERMUTATION_VERTICES {
            return Err(Error::SizeCap(format!(
                "n = {n} exceeds the materialized-ordering cap {MAX_PERMUTATION_VERTICES}"
            )));
        }
        let mut order: Vec<u32> = (0..pair_count(n) as u32).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        Ok(EdgePermutation { n, seed, order })
    }

    /// An explicit ordering, used by the exhaustive oracle and tests.
    pub fn from_edges(n: usize, edges: &[Edge]) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "edge ordering needs n >= 2, got {n}"
            )));
        }
        let total = pair_count(n);
        if edges.len() != total {
            return Err(Error::InvalidParameter(format!(
                "ordering has {} pairs, K_{n} has {total}",
                edges.len()
            )));
        }
        let mut seen = FixedBitSet::with_capacity(total);
        let mut order = Vec::with_capacity(total);
        for &e in edges {
            if e.u >= e.v || e.v >= n {
                return Err(Error::InvalidParameter(format!("invalid pair {e}")));
            }
            let k = pair_index(n, e);
            if seen.put(k) {
                return Err(Error::InvalidParameter(format!("pair {e} repeated")));
            }
            order.push(k as u32);
        }
        Ok(EdgePermutation { n, seed: 0, order })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn pair_indices(&self) -> &[u32] {
        &self.order
    }

    /// The pair offered at step `t` (1-based).
    pub fn at(&self, t: usize) -> Edge {
        pair_from_index(self.n, self.order[t - 1] as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = Edge> + '_ {
        let n = self.n;
        self.order.iter().map(move |&k| pair_from_index(n, k as usize))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph_basics() {
        assert!(matches!(Graph::new_empty(0), Err(Error::InvalidParameter(_))));
        let g = Graph::new_empty(1).unwrap();
        assert_eq!((g.n(), g.m()), (1, 0));
        let mut g = Graph::new_empty(5).unwrap();
        assert_eq!(g.isolated_vertices().len(), 5);
        assert!((0..5).all(|v| g.degree(v) == 0));
        g.add_edge(0, 1).unwrap();
        assert_eq!(g.m(), 1);
        assert_eq!((g.degree(0), g.degree(1)), (1, 1));
    }

    #[test]
    fn add_edge_contract() {
        let mut g = Graph::new_empty(3).unwrap();
        g.add_edge(0, 1).unwrap();
        assert_eq!(g.m(), 1);
        assert!(matches!(g.add_edge(0, 1), Err(Error::ContractViolation(_))));
        assert!(matches!(g.add_edge(1, 0), Err(Error::ContractViolation(_))));
        assert!(matches!(g.add_edge(2, 2), Err(Error::ContractViolation(_))));
        assert!(matches!(g.add_edge(0, 3), Err(Error::ContractViolation(_))));
        assert_eq!(g.m(), 1);
    }

    #[test]
    fn pair_indexing_is_row_major() {
        for n in 2..40 {
            let mut idx = 0;
            for u in 0..n {
                for v in u + 1..n {
                    let e = Edge { u, v };
                    assert_eq!(pair_index(n, e), idx);
                    assert_eq!(pair_from_index(n, idx), e);
                    idx += 1;
                }
            }
            assert_eq!(idx, pair_count(n));
        }
    }

    #[test]
    fn isolated_vertices_examples() {
        assert_eq!(Graph::new_empty(4).unwrap().isolated_vertices(), vec![0, 1, 2, 3]);
        let tri = Graph::from_edges(4, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(tri.isolated_vertices(), vec![3]);
        assert!(Graph::complete(4).unwrap().isolated_vertices().is_empty());
    }

    #[test]
    fn components_examples() {
        let g = Graph::new_empty(3).unwrap();
        assert_eq!(g.connected_components(), vec![vec![0], vec![1], vec![2]]);
        let p = Graph::from_edges(4, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(p.connected_components(), vec![vec![0, 1, 2], vec![3]]);
        let k5 = Graph::complete(5).unwrap();
        assert_eq!(k5.connected_components(), vec![vec![0, 1, 2, 3, 4]]);
    }

    #[test]
    fn susceptibility_examples() {
        // components of sizes 3, 2, 1, 1
        let g = Graph::from_edges(7, [(0, 1), (1, 2), (3, 4)]).unwrap();
        assert_eq!(g.susceptibility(), (15, 13));
        assert_eq!(Graph::new_empty(10).unwrap().susceptibility(), (10, 0));
        assert_eq!(Graph::complete(4).unwrap().susceptibility(), (16, 16));
    }

    #[test]
    fn permutation_small_cases() {
        assert!(matches!(
            EdgePermutation::random(1, 0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            EdgePermutation::random(MAX_PERMUTATION_VERTICES + 1, 0),
            Err(Error::SizeCap(_))
        ));
        let p = EdgePermutation::random(3, 42).unwrap();
        let mut es: Vec<Edge> = p.iter().collect();
        es.sort();
        assert_eq!(es, vec![Edge::new(0, 1), Edge::new(0, 2), Edge::new(1, 2)]);
        let p = EdgePermutation::random(4, 7).unwrap();
        let es: HashSet<Edge> = p.iter().collect();
        assert_eq!((p.len(), es.len()), (6, 6));
    }

    #[test]
    fn permutation_is_deterministic() {
        let a = EdgePermutation::random(30, 99).unwrap();
        let b = EdgePermutation::random(30, 99).unwrap();
        let c = EdgePermutation::random(30, 100).unwrap();
        assert_eq!(a.pair_indices(), b.pair_indices());
        assert_ne!(a.pair_indices(), c.pair_indices());
    }

    #[test]
    fn edge_list_roundtrip_and_errors() {
        let g = Graph::from_edges(5, [(0, 1), (0, 2), (3, 4)]).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "5 3\n0 1\n0 2\n3 4\n");
        assert_eq!(Graph::parse_edge_list(&text, Path::new("x")).unwrap(), g);

        let p = Path::new("bad.txt");
        assert!(Graph::parse_edge_list("3 1\n1 0\n", p).is_err());
        assert!(Graph::parse_edge_list("3 2\n0 1\n", p).is_err());
        assert!(Graph::parse_edge_list("3 1\n0 x\n", p).is_err());
        assert!(Graph::parse_edge_list("3 2\n0 1\n0 1\n", p).is_err());
        assert!(Graph::parse_edge_list("", p).is_err());
    }
}
