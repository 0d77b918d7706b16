//! Exact outcome distribution of the process for tiny n.
//!
//! Orderings sharing a prefix reach the same (graph, offered pairs) state, so
//! instead of walking all C(n,2)! orderings one at a time we push ordering
//! counts forward through those states. The totals are the same as for
//! literal enumeration.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{classify_extremal, ClassLabel};
use crate::error::{Error, Result};
use crate::graph::{pair_count, pair_from_index, pair_index, Edge, Graph};
use crate::matching::nu_brute_force;

pub const MAX_EXHAUSTIVE_N: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeClass {
    /// Smallest relabelling of the final graph, as edges.
    pub representative: Vec<Edge>,
    pub edge_count: usize,
    pub label: ClassLabel,
    pub orderings: u64,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveDistribution {
    pub n: usize,
    pub k: usize,
    /// C(n,2)!
    pub total_orderings: u64,
    pub classes: Vec<OutcomeClass>,
}

impl ExhaustiveDistribution {
    pub fn probability_of(&self, label: ClassLabel) -> f64 {
        self.classes
            .iter()
            .filter(|c| c.label == label)
            .map(|c| c.probability)
            .sum()
    }
}

/// All orderings of `0..n`, lexicographic.
pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                go(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

fn mask_graph(n: usize, mask: u32) -> Graph {
    let edges = (0..pair_count(n)).filter(|i| mask >> i & 1 == 1).map(|i| {
        let e = pair_from_index(n, i);
        (e.u, e.v)
    });
    Graph::from_edges(n, edges).expect("pairs are valid")
}

pub fn process_exhaustive(n: usize, k: usize) -> Result<ExhaustiveDistribution> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 vertices, got {n}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    if n > MAX_EXHAUSTIVE_N {
        return Err(Error::SizeCap(format!(
            "exhaustive enumeration is limited to n <= {MAX_EXHAUSTIVE_N}, got {n}"
        )));
    }
    let pairs = pair_count(n);
    let full = (1u32 << pairs) - 1;
    let mut free_cache: HashMap<u32, bool> = HashMap::new();
    let mut k_free = |mask: u32| -> bool {
        *free_cache
            .entry(mask)
            .or_insert_with(|| nu_brute_force(&mask_graph(n, mask)).expect("n is tiny") < k)
    };

    let mut layer: HashMap<(u32, u32), u64> = HashMap::from([((0, 0), 1)]);
    for _ in 0..pairs {
        let mut next: HashMap<(u32, u32), u64> = HashMap::new();
        for (&(g, offered), &count) in &layer {
            for i in 0..pairs {
                if offered >> i & 1 == 1 {
                    continue;
                }
                let with = g | 1 << i;
                let g2 = if k_free(with) { with } else { g };
                *next.entry((g2, offered | 1 << i)).or_default() += count;
            }
        }
        layer = next;
    }

    // Canonical form: the smallest mask over all vertex relabellings.
    let relabel: Vec<Vec<usize>> = permutations(n)
        .into_iter()
        .map(|p| {
            (0..pairs)
                .map(|i| {
                    let e = pair_from_index(n, i);
                    pair_index(n, Edge::new(p[e.u], p[e.v]))
                })
                .collect()
        })
        .collect();
    let canonical = |mask: u32| {
        relabel
            .iter()
            .map(|map| {
                (0..pairs)
                    .filter(|i| mask >> i & 1 == 1)
                    .fold(0u32, |acc, i| acc | 1 << map[i])
            })
            .min()
            .expect("at least one permutation")
    };
    let mut by_class: BTreeMap<u32, u64> = BTreeMap::new();
    for ((g, offered), count) in layer {
        debug_assert_eq!(offered, full);
        *by_class.entry(canonical(g)).or_default() += count;
    }
    let total: u64 = (1..=pairs as u64).product();
    let classes = by_class
        .into_iter()
        .map(|(mask, orderings)| {
            let g = mask_graph(n, mask);
            OutcomeClass {
                representative: g.sorted_edges(),
                edge_count: g.m(),
                label: classify_extremal(&g, k).label,
                orderings,
                probability: orderings as f64 / total as f64,
            }
        })
        .collect();
    Ok(ExhaustiveDistribution {
        n,
        k,
        total_orderings: total,
        classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgePermutation;
    use crate::process::{run_ordering, RunOptions};

    #[test]
    fn trivial_cases() {
        let d = process_exhaustive(3, 1).unwrap();
        assert_eq!(d.total_orderings, 6);
        assert_eq!(d.classes.len(), 1);
        assert_eq!(d.classes[0].edge_count, 0);
        assert_eq!(d.classes[0].orderings, 6);

        let d = process_exhaustive(3, 2).unwrap();
        assert_eq!(d.classes.len(), 1);
        assert_eq!(d.classes[0].edge_count, 3);
        assert_eq!(d.classes[0].probability, 1.0);

        let d = process_exhaustive(5, 3).unwrap();
        assert_eq!(d.classes.len(), 1);
        assert_eq!(d.classes[0].edge_count, 10);

        assert!(matches!(process_exhaustive(6, 2), Err(Error::SizeCap(_))));
        assert!(matches!(
            process_exhaustive(4, 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn four_vertices_matches_literal_enumeration() {
        let d = process_exhaustive(4, 2).unwrap();
        assert_eq!(d.total_orderings, 720);
        assert_eq!(d.classes.len(), 2);
        assert!(d.classes.iter().all(|c| c.edge_count == 3));
        let star = d.probability_of(ClassLabel::GStar);
        let clique = d.probability_of(ClassLabel::GClique);
        assert!((star + clique - 1.0).abs() < 1e-12);

        let pairs: Vec<Edge> = (0..6).map(|i| pair_from_index(4, i)).collect();
        let mut counts: BTreeMap<&'static str, u64> = BTreeMap::new();
        for p in permutations(6) {
            let order: Vec<Edge> = p.iter().map(|&i| pairs[i]).collect();
            let perm = EdgePermutation::from_edges(4, &order).unwrap();
            let run = run_ordering(&perm, 2, &RunOptions::default()).unwrap();
            assert!(run.record.violations.is_empty());
            *counts.entry(run.record.classification.as_str()).or_default() += 1;
        }
        for c in &d.classes {
            assert_eq!(counts[c.label.as_str()], c.orderings);
        }
    }
}
