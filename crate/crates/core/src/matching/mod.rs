//! Maximum matchings in general graphs and the augmenting-path acceptance
//! test that drives the process.

mod blossom;
mod forest;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};

pub use blossom::{augment_from, max_matching};
pub use forest::{AlternatingForest, Label, OfferOutcome};

/// Largest vertex count accepted by [`nu_brute_force`].
pub const BRUTE_FORCE_MAX_VERTICES: usize = 12;

/// A set of vertex-disjoint edges, stored as a mate map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    mate: Vec<Option<usize>>,
    size: usize,
}

impl Matching {
    pub fn empty(n: usize) -> Self {
        Matching {
            mate: vec![None; n],
            size: 0,
        }
    }

    pub fn from_edges(n: usize, edges: &[Edge]) -> Result<Self> {
        let mut m = Matching::empty(n);
        for &e in edges {
            if e.v >= n {
                return Err(Error::ContractViolation(format!("matched pair {e} out of range")));
            }
            if m.mate[e.u].is_some() || m.mate[e.v].is_some() {
                return Err(Error::ContractViolation(format!(
                    "matched edge {e} shares a vertex with another matched edge"
                )));
            }
            m.pair(e.u, e.v);
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.mate.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn mate(&self, v: usize) -> Option<usize> {
        self.mate[v]
    }

    pub fn is_matched(&self, v: usize) -> bool {
        self.mate[v].is_some()
    }

    pub fn matched_vertices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&v| self.is_matched(v)).collect()
    }

    pub fn exposed_vertices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&v| !self.is_matched(v)).collect()
    }

    /// Matched edges in increasing order.
    pub fn edges(&self) -> Vec<Edge> {
        self.mate
            .iter()
            .enumerate()
            .filter_map(|(u, m)| m.filter(|&v| v > u).map(|v| Edge { u, v }))
            .collect()
    }

    pub(crate) fn mates(&self) -> &[Option<usize>] {
        &self.mate
    }

    /// Pairs two currently exposed vertices.
    pub(crate) fn pair(&mut self, a: usize, b: usize) {
        debug_assert!(self.mate[a].is_none() && self.mate[b].is_none());
        self.mate[a] = Some(b);
        self.mate[b] = Some(a);
        self.size += 1;
    }

    /// Flips the matching along an alternating path whose end vertices are
    /// both exposed.
    pub(crate) fn flip_path(&mut self, path: &[usize]) {
        debug_assert!(path.len().is_multiple_of(2));
        debug_assert!(self.mate[path[0]].is_none() && self.mate[path[path.len() - 1]].is_none());
        for pair in path.chunks(2) {
            self.mate[pair[0]] = Some(pair[1]);
            self.mate[pair[1]] = Some(pair[0]);
        }
        self.size += 1;
    }

    /// Checks the type invariants against a host graph.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        if self.n() != g.n() {
            return Err(Error::ContractViolation(format!(
                "matching is over {} vertices, graph has {}",
                self.n(),
                g.n()
            )));
        }
        let mut matched = 0;
        for (v, m) in self.mate.iter().enumerate() {
            if let Some(w) = *m {
                if self.mate[w] != Some(v) {
                    return Err(Error::ContractViolation(format!(
                        "mate map is not symmetric at {v}"
                    )));
                }
                if !g.has_edge(v, w) {
                    return Err(Error::ContractViolation(format!(
                        "matched pair {{{v},{w}}} is not an edge of the graph"
                    )));
                }
                matched += 1;
            }
        }
        if matched != 2 * self.size {
            return Err(Error::ContractViolation(format!(
                "size {} disagrees with {matched} matched vertices",
                self.size
            )));
        }
        Ok(())
    }
}

/// Matching number by exhaustive search over vertex subsets, for graphs with
/// at most [`BRUTE_FORCE_MAX_VERTICES`] vertices.
pub fn nu_brute_force(g: &Graph) -> Result<usize> {
    let n = g.n();
    if n > BRUTE_FORCE_MAX_VERTICES {
        return Err(Error::SizeCap(format!(
            "brute-force matching number supports n <= {BRUTE_FORCE_MAX_VERTICES}, got {n}"
        )));
    }
    let nbr: Vec<u32> = (0..n)
        .map(|v| g.neighbours(v).iter().fold(0u32, |acc, &w| acc | (1 << w)))
        .collect();
    let mut memo = vec![u8::MAX; 1 << n];
    Ok(nu_subset(&nbr, (1u32 << n) - 1, &mut memo) as usize)
}

/// Largest matching inside the vertex set `set`: the lowest vertex is either
/// left out or matched to one of its neighbours in `set`.
fn nu_subset(nbr: &[u32], set: u32, memo: &mut [u8]) -> u8 {
    if set.count_ones() < 2 {
        return 0;
    }
    if memo[set as usize] != u8::MAX {
        return memo[set as usize];
    }
    let v = set.trailing_zeros() as usize;
    let rest = set & !(1 << v);
    let mut best = nu_subset(nbr, rest, memo);
    let mut cand = nbr[v] & rest;
    while cand != 0 {
        let w = cand.trailing_zeros();
        cand &= cand - 1;
        best = best.max(1 + nu_subset(nbr, rest & !(1 << w), memo));
    }
    memo[set as usize] = best;
    best
}

/// Whether `g + e` contains a `k`-matching, given a maximum matching `m` of
/// `g`. Neither `g` nor `m` is modified.
///
/// When `m` has exactly `k - 1` edges this is an augmenting-path search in
/// `g + e`. If the search finds that `m` was not maximum after all, then `g`
/// itself already has a `k`-matching and the answer is `true`; use
/// [`creates_k_matching_verified`] to turn that situation into an error.
pub fn creates_k_matching(g: &Graph, m: &Matching, e: Edge, k: usize) -> Result<bool> {
    let e = check_query(g, m, e, k)?;
    if m.size() + 2 <= k {
        return Ok(false);
    }
    if m.size() >= k {
        return Ok(true);
    }
    match AlternatingForest::build(g, m) {
        Ok(mut forest) => Ok(forest.would_augment(g, e)),
        Err(_) => Ok(true),
    }
}

/// [`creates_k_matching`] with the maximality of `m` re-derived first.
pub fn creates_k_matching_verified(g: &Graph, m: &Matching, e: Edge, k: usize) -> Result<bool> {
    check_query(g, m, e, k)?;
    let nu = max_matching(g).size();
    if nu != m.size() {
        return Err(Error::ContractViolation(format!(
            "matching of size {} is not maximum (matching number {nu})",
            m.size()
        )));
    }
    creates_k_matching(g, m, e, k)
}

fn check_query(g: &Graph, m: &Matching, e: Edge, k: usize) -> Result<Edge> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    m.validate(g)?;
    let e = g.check_pair(e.u, e.v)?;
    if g.has_edge(e.u, e.v) {
        return Err(Error::ContractViolation(format!("{e} is already an edge")));
    }
    Ok(e)
}

/// Whether every non-edge of `g` would create a `k`-matching. A graph that
/// already contains a `k`-matching is not saturated; `K_n` is vacuously
/// saturated.
pub fn is_saturated(g: &Graph, k: usize) -> Result<bool> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let n = g.n();
    if g.m() == crate::graph::pair_count(n) {
        return Ok(true);
    }
    let m = max_matching(g);
    if m.size() != k - 1 {
        return Ok(false);
    }
    let mut forest = AlternatingForest::build(g, &m)?;
    for u in 0..n {
        for v in u + 1..n {
            if !g.has_edge(u, v) && !forest.would_augment(g, Edge { u, v }) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Compares [`max_matching`] with [`nu_brute_force`] on every labelled
/// graph with `n` vertices (n <= 7). Returns (graphs checked, mismatches).
pub fn cross_check_all_graphs(n: usize) -> Result<(u64, u64)> {
    if n == 0 || n > 7 {
        return Err(Error::SizeCap(format!(
            "all-graph cross-check supports 1 <= n <= 7, got {n}"
        )));
    }
    let pairs = crate::graph::pair_count(n);
    let mut mismatches = 0;
    for mask in 0u64..1 << pairs {
        let edges = (0..pairs)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| crate::graph::pair_from_index(n, i))
            .map(|e| (e.u, e.v));
        let g = Graph::from_edges(n, edges)?;
        let m = max_matching(&g);
        if m.validate(&g).is_err() || m.size() != nu_brute_force(&g)? {
            mismatches += 1;
        }
    }
    Ok((1 << pairs, mismatches))
}

#[cfg(test)]
pub(crate) mod test_graphs {
    use crate::graph::Graph;

    pub fn cycle(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    pub fn path(n: usize) -> Graph {
        Graph::from_edges(n, (0..n - 1).map(|i| (i, i + 1))).unwrap()
    }

    pub fn star(leaves: usize) -> Graph {
        Graph::from_edges(leaves + 1, (1..=leaves).map(|i| (0, i))).unwrap()
    }

    pub fn petersen() -> Graph {
        let mut es = Vec::new();
        for i in 0..5 {
            es.push((i, (i + 1) % 5));
            es.push((i, i + 5));
            es.push((i + 5, (i + 2) % 5 + 5));
        }
        Graph::from_edges(10, es).unwrap()
    }

    /// Graph on `n` vertices whose edge set is the bit pattern `mask` over
    /// pair indices.
    pub fn from_mask(n: usize, mask: u64) -> Graph {
        let mut g = Graph::new_empty(n).unwrap();
        let mut idx = 0;
        for u in 0..n {
            for v in u + 1..n {
                if mask >> idx & 1 == 1 {
                    g.add_edge(u, v).unwrap();
                }
                idx += 1;
            }
        }
        g
    }
}
