//! Structural classifiers and counters evaluated on process outcomes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{pair_count, Graph};
use crate::matching::{max_matching, AlternatingForest, Label};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    #[serde(rename = "G_star")]
    GStar,
    #[serde(rename = "G_clique")]
    GClique,
    #[serde(rename = "other")]
    Other,
}

impl ClassLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::GStar => "G_star",
            ClassLabel::GClique => "G_clique",
            ClassLabel::Other => "other",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub label: ClassLabel,
    /// The degree-(n-1) set for `G_star`, the clique for `G_clique`.
    pub witness: Vec<usize>,
}

/// max{C(2k-1,2), C(k-1,2) + (k-1)(n-k+1)}, never more than C(n,2).
pub fn erdos_gallai_bound(n: usize, k: usize) -> Result<u64> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let all = pair_count(n) as u64;
    if k > n / 2 + 1 {
        return Ok(all);
    }
    let c2 = |x: u64| x * x.saturating_sub(1) / 2;
    let (n, k) = (n as u64, k as u64);
    let clique = c2(2 * k - 1);
    let star = c2(k - 1) + (k - 1) * (n + 1 - k);
    Ok(clique.max(star).min(all))
}

/// Recognizes the two extremal shapes by degree and component structure.
pub fn classify_extremal(g: &Graph, k: usize) -> Classification {
    let n = g.n();
    let other = Classification {
        label: ClassLabel::Other,
        witness: Vec::new(),
    };
    if k == 0 {
        return other;
    }
    let s: Vec<usize> = (0..n).filter(|&v| g.degree(v) + 1 == n).collect();
    if s.len() + 1 == k {
        let mut in_s = vec![false; n];
        for &v in &s {
            in_s[v] = true;
        }
        let rest_independent = g.edges().all(|e| in_s[e.u] || in_s[e.v]);
        if rest_independent {
            return Classification {
                label: ClassLabel::GStar,
                witness: s,
            };
        }
    }
    let c = 2 * k - 1;
    if c <= n {
        let comps = g.connected_components();
        let mut big = comps.iter().filter(|p| p.len() > 1);
        let clique = match (big.next(), big.next()) {
            (None, _) if c == 1 => comps.first().cloned(),
            (Some(p), None) if p.len() == c && p.iter().all(|&v| g.degree(v) == c - 1) => Some(p.clone()),
            _ => None,
        };
        if let Some(w) = clique {
            return Classification {
                label: ClassLabel::GClique,
                witness: w,
            };
        }
    }
    other
}

/// A (k-1)-clique on vertices 0..k-1 joined to every other vertex.
pub fn g_star(n: usize, k: usize) -> Result<Graph> {
    check_construction(n, k)?;
    let mut g = Graph::new_empty(n)?;
    for u in 0..k - 1 {
        for v in u + 1..n {
            g.add_edge(u, v)?;
        }
    }
    Ok(g)
}

/// A (2k-1)-clique on vertices 0..2k-1, the rest isolated.
pub fn g_clique(n: usize, k: usize) -> Result<Graph> {
    check_construction(n, k)?;
    if 2 * k - 1 > n {
        return Err(Error::InvalidParameter(format!(
            "a {}-clique does not fit on {n} vertices",
            2 * k - 1
        )));
    }
    let mut g = Graph::new_empty(n)?;
    for u in 0..2 * k - 1 {
        for v in u + 1..2 * k - 1 {
            g.add_edge(u, v)?;
        }
    }
    Ok(g)
}

fn check_construction(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= k <= n, got n={n} k={k}"
        )));
    }
    Ok(())
}

/// Paths x-y-z whose ends both have degree 1, counted by unordered {x,z}.
pub fn count_cherries(g: &Graph) -> u64 {
    (0..g.n())
        .map(|y| {
            let c = g.neighbours(y).iter().filter(|&&x| g.degree(x) == 1).count() as u64;
            c * c.saturating_sub(1) / 2
        })
        .sum()
}

/// Triangles whose three vertices all have degree exactly 2.
pub fn count_isolated_triangles(g: &Graph) -> u64 {
    let mut count = 0;
    for v in 0..g.n() {
        if g.degree(v) != 2 {
            continue;
        }
        let (a, b) = (g.neighbours(v)[0], g.neighbours(v)[1]);
        if v < a && v < b && g.degree(a) == 2 && g.degree(b) == 2 && g.has_edge(a, b) {
            count += 1;
        }
    }
    count
}

/// Components that are exactly a path on three vertices.
pub fn count_isolated_two_paths(g: &Graph) -> u64 {
    (0..g.n())
        .filter(|&y| g.degree(y) == 2 && g.neighbours(y).iter().all(|&x| g.degree(x) == 1))
        .count() as u64
}

/// Vertices with a degree-1 neighbour, or with a degree-2 neighbour `w`
/// lying within distance 2 of some vertex `u != w` of degree at most 2.
pub fn dangerous_vertices(g: &Graph) -> Vec<usize> {
    let n = g.n();
    // near[w]: w has degree 2 and a low-degree vertex within distance 2.
    let mut near = vec![false; n];
    for w in 0..n {
        if g.degree(w) != 2 {
            continue;
        }
        near[w] = g
            .neighbours(w)
            .iter()
            .any(|&x| g.degree(x) <= 2 || g.neighbours(x).iter().any(|&u| u != w && g.degree(u) <= 2));
    }
    (0..n)
        .filter(|&v| g.neighbours(v).iter().any(|&w| g.degree(w) == 1 || near[w]))
        .collect()
}

/// For odd-order `g`: whether deleting any non-dangerous vertex leaves a
/// graph with a perfect matching.
pub fn is_matching_resilient(g: &Graph) -> Result<bool> {
    let n = g.n();
    if n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "matching-resilience needs an odd vertex count, got {n}"
        )));
    }
    let mut dangerous = vec![false; n];
    for v in dangerous_vertices(g) {
        dangerous[v] = true;
    }
    let m = max_matching(g);
    if 2 * m.size() + 1 < n {
        // Deleting a vertex cannot raise the matching number.
        return Ok(dangerous.iter().all(|&d| d));
    }
    // Here nu(g - v) = nu(g) exactly when some maximum matching misses v,
    // i.e. when v is even in the alternating forest.
    let forest = AlternatingForest::build(g, &m)?;
    Ok((0..n).all(|v| dangerous[v] || forest.label(v) == Label::Even))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingPrediction {
    pub f: usize,
    pub h: f64,
    pub t_minus: u64,
    pub t_plus: u64,
}

/// Window floor((ln n - ln(f+1) -+ h) n/2) .. ceil(...), clamped to 0..=C(n,2).
pub fn hitting_prediction(n: usize, f: usize, h: f64) -> Result<HittingPrediction> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidParameter(format!("h must be positive, got {h}")));
    }
    let centre = (n as f64).ln() - ((f + 1) as f64).ln();
    let half = n as f64 / 2.0;
    let cap = pair_count(n) as f64;
    let t_minus = ((centre - h) * half).floor().clamp(0.0, cap) as u64;
    let t_plus = ((centre + h) * half).ceil().clamp(0.0, cap) as u64;
    Ok(HittingPrediction {
        f,
        h,
        t_minus,
        t_plus,
    })
}

pub fn count_degree_n_minus_1(g: &Graph) -> u64 {
    (0..g.n()).filter(|&v| g.degree(v) + 1 == g.n()).count() as u64
}

/// (isolated vertices) x (vertices of degree at least 2).
pub fn count_iso_deg2_pairs(g: &Graph) -> u64 {
    let iso = (0..g.n()).filter(|&v| g.degree(v) == 0).count() as u64;
    let deg2 = (0..g.n()).filter(|&v| g.degree(v) >= 2).count() as u64;
    iso * deg2
}

/// Direct transcriptions of the definitions, used to cross-check the fast
/// counters.
pub mod reference {
    use std::collections::VecDeque;

    use crate::graph::Graph;
    use crate::matching::max_matching;

    pub fn all_pairs_distances(g: &Graph) -> Vec<Vec<usize>> {
        let n = g.n();
        let mut out = vec![vec![usize::MAX; n]; n];
        for (s, dist) in out.iter_mut().enumerate() {
            dist[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                for &w in g.neighbours(v) {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        q.push_back(w);
                    }
                }
            }
        }
        out
    }

    pub fn dangerous_vertices(g: &Graph) -> Vec<usize> {
        let n = g.n();
        let d = all_pairs_distances(g);
        (0..n)
            .filter(|&v| {
                (0..n).any(|w| {
                    g.has_edge(v, w)
                        && (g.degree(w) == 1
                            || (g.degree(w) == 2
                                && (0..n).any(|u| u != w && g.degree(u) <= 2 && d[w][u] <= 2)))
                })
            })
            .collect()
    }

    pub fn count_cherries(g: &Graph) -> u64 {
        let n = g.n();
        let mut c = 0;
        for x in 0..n {
            for z in x + 1..n {
                if g.degree(x) == 1
                    && g.degree(z) == 1
                    && (0..n).any(|y| g.has_edge(x, y) && g.has_edge(y, z))
                {
                    c += 1;
                }
            }
        }
        c
    }

    pub fn count_isolated_triangles(g: &Graph) -> u64 {
        let n = g.n();
        let mut c = 0;
        for a in 0..n {
            for b in a + 1..n {
                for d in b + 1..n {
                    if g.has_edge(a, b)
                        && g.has_edge(b, d)
                        && g.has_edge(a, d)
                        && [a, b, d].iter().all(|&v| g.degree(v) == 2)
                    {
                        c += 1;
                    }
                }
            }
        }
        c
    }

    pub fn count_isolated_two_paths(g: &Graph) -> u64 {
        g.connected_components()
            .iter()
            .filter(|comp| {
                comp.len() == 3 && {
                    let edges: usize = comp.iter().map(|&v| g.degree(v)).sum::<usize>() / 2;
                    edges == 2
                }
            })
            .count() as u64
    }

    pub fn is_matching_resilient(g: &Graph) -> bool {
        let dangerous = dangerous_vertices(g);
        (0..g.n()).filter(|v| !dangerous.contains(v)).all(|v| {
            let h = g.without_vertex(v).expect("vertex in range");
            2 * max_matching(&h).size() == h.n()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::nu_brute_force;
    use crate::matching::test_graphs::*;

    fn tri_plus(isolated: usize) -> Graph {
        Graph::from_edges(3 + isolated, [(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn eg_bound_examples() {
        assert_eq!(erdos_gallai_bound(9, 1).unwrap(), 0);
        assert!(erdos_gallai_bound(9, 0).is_err());
        // Exhaustive maxima of edge counts among graphs with nu <= 1.
        for (n, expect) in [(5, 4), (7, 6)] {
            let mut best = 0;
            for mask in 0u64..(1 << pair_count(n)) {
                let g = from_mask(n, mask);
                if g.m() > best && max_matching(&g).size() <= 1 {
                    best = g.m();
                }
            }
            assert_eq!(best as u64, expect);
            assert_eq!(erdos_gallai_bound(n, 2).unwrap(), expect);
        }
        assert_eq!(erdos_gallai_bound(5, 4).unwrap(), 10);
    }

    #[test]
    fn exhaustive_eg_bound_on_six_vertices() {
        for k in 1..=4 {
            let mut best = 0;
            for mask in 0u64..(1 << 15) {
                let g = from_mask(6, mask);
                if g.m() > best && nu_brute_force(&g).unwrap() < k {
                    best = g.m();
                }
            }
            assert_eq!(best as u64, erdos_gallai_bound(6, k).unwrap(), "k={k}");
        }
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_extremal(&star(4), 2).label, ClassLabel::GStar);
        assert_eq!(classify_extremal(&tri_plus(1), 2).label, ClassLabel::GClique);
        assert_eq!(classify_extremal(&path(4), 2).label, ClassLabel::Other);
        let empty = Graph::new_empty(4).unwrap();
        assert_eq!(classify_extremal(&empty, 1).label, ClassLabel::GStar);
        // K_5 is literally a (2k-1)-clique for k = 3, but matches neither
        // shape for k = 4.
        let k5 = Graph::complete(5).unwrap();
        assert_eq!(classify_extremal(&k5, 3).label, ClassLabel::GClique);
        assert_eq!(classify_extremal(&k5, 4).label, ClassLabel::Other);
    }

    #[test]
    fn constructions_are_extremal() {
        for n in 4..=60 {
            for k in 2..=n / 2 {
                let s = g_star(n, k).unwrap();
                let c = g_clique(n, k).unwrap();
                assert_eq!(classify_extremal(&s, k).label, ClassLabel::GStar);
                assert_eq!(classify_extremal(&c, k).label, ClassLabel::GClique);
                assert_eq!(max_matching(&s).size(), k - 1);
                assert_eq!(max_matching(&c).size(), k - 1);
                let bound = erdos_gallai_bound(n, k).unwrap();
                assert_eq!((s.m() as u64).max(c.m() as u64), bound);
            }
        }
    }

    #[test]
    fn counter_examples() {
        assert_eq!(count_cherries(&path(3)), 1);
        assert_eq!(count_cherries(&star(3)), 3);
        assert_eq!(count_cherries(&cycle(4)), 0);

        assert_eq!(count_isolated_triangles(&tri_plus(2)), 1);
        assert_eq!(count_isolated_triangles(&Graph::complete(4).unwrap()), 0);
        let two = Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        assert_eq!(count_isolated_triangles(&two), 2);

        let p3 = Graph::from_edges(5, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(count_isolated_two_paths(&p3), 1);
        assert_eq!(count_isolated_two_paths(&path(4)), 0);
        let two = Graph::from_edges(6, [(0, 1), (1, 2), (3, 4), (4, 5)]).unwrap();
        assert_eq!(count_isolated_two_paths(&two), 2);

        assert_eq!(count_degree_n_minus_1(&Graph::complete(4).unwrap()), 4);
        assert_eq!(count_degree_n_minus_1(&star(3)), 1);
        assert_eq!(count_degree_n_minus_1(&g_star(6, 3).unwrap()), 2);

        assert_eq!(count_iso_deg2_pairs(&tri_plus(2)), 6);
        assert_eq!(count_iso_deg2_pairs(&Graph::new_empty(4).unwrap()), 0);
        let k4 = Graph::from_edges(5, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(count_iso_deg2_pairs(&k4), 4);
    }

    #[test]
    fn dangerous_examples() {
        assert_eq!(dangerous_vertices(&path(3)), vec![0, 1, 2]);
        assert!(dangerous_vertices(&Graph::complete(5).unwrap()).is_empty());
        assert_eq!(dangerous_vertices(&star(3)), vec![0]);
        // Every vertex of C_5 has a degree-2 neighbour next to another
        // degree-2 vertex.
        assert_eq!(dangerous_vertices(&cycle(5)), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn resilience_examples() {
        // In C_5 every vertex has two degree-2 neighbours near other
        // degree-2 vertices, so all are dangerous; the check is vacuous but
        // every deletion leaves P_4 anyway.
        assert!(is_matching_resilient(&cycle(5)).unwrap());
        assert!(reference::is_matching_resilient(&cycle(5)));
        for v in 0..5 {
            let h = cycle(5).without_vertex(v).unwrap();
            assert_eq!(max_matching(&h).size(), 2);
        }
        assert!(is_matching_resilient(&Graph::complete(5).unwrap()).unwrap());
        assert!(is_matching_resilient(&path(3)).unwrap());
        assert!(matches!(
            is_matching_resilient(&path(4)),
            Err(Error::InvalidParameter(_))
        ));
        // Star K_{1,4}: leaves are not dangerous and deleting one leaves no
        // perfect matching.
        assert!(!is_matching_resilient(&star(4)).unwrap());
        assert!(!reference::is_matching_resilient(&star(4)));
    }

    #[test]
    fn hitting_prediction_examples() {
        let p = hitting_prediction(1000, 4, 2.0).unwrap();
        let expect = ((1000f64.ln() - 5f64.ln() - 2.0) * 500.0).floor() as u64;
        assert_eq!(p.t_minus, expect);
        assert_eq!(p.t_minus, 1649);
        assert_eq!(p.t_plus, ((1000f64.ln() - 5f64.ln() + 2.0) * 500.0).ceil() as u64);
        let p = hitting_prediction(10, 0, 50.0).unwrap();
        assert_eq!(p.t_minus, 0);
        assert_eq!(p.t_plus, 45);
        for f in 0..20 {
            for h in [0.01, 0.5, 3.0, 40.0] {
                let p = hitting_prediction(300, f, h).unwrap();
                assert!(p.t_minus <= p.t_plus);
            }
        }
        assert!(hitting_prediction(10, 0, 0.0).is_err());
    }
}
