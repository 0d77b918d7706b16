//! Single-source Edmonds blossom search with explicit path recovery.

use std::collections::VecDeque;

use super::Matching;
use crate::graph::Graph;

const NONE: usize = usize::MAX;

/// Scratch space for one search, reused across roots.
struct Search {
    parent: Vec<usize>,
    base: Vec<usize>,
    used: Vec<bool>,
    in_blossom: Vec<bool>,
    on_path: Vec<bool>,
    queue: VecDeque<usize>,
}

impl Search {
    fn new(n: usize) -> Self {
        Search {
            parent: vec![NONE; n],
            base: (0..n).collect(),
            used: vec![false; n],
            in_blossom: vec![false; n],
            on_path: vec![false; n],
            queue: VecDeque::new(),
        }
    }

    fn lca(&mut self, mate: &[usize], mut a: usize, mut b: usize) -> usize {
        self.on_path.fill(false);
        loop {
            a = self.base[a];
            self.on_path[a] = true;
            if mate[a] == NONE {
                break;
            }
            a = self.parent[mate[a]];
        }
        loop {
            b = self.base[b];
            if self.on_path[b] {
                return b;
            }
            b = self.parent[mate[b]];
        }
    }

    fn mark_path(&mut self, mate: &[usize], mut v: usize, b: usize, mut child: usize) {
        while self.base[v] != b {
            self.in_blossom[self.base[v]] = true;
            self.in_blossom[self.base[mate[v]]] = true;
            self.parent[v] = child;
            child = mate[v];
            v = self.parent[mate[v]];
        }
    }

    /// Grows an alternating tree from `root`; returns the exposed vertex at
    /// the far end of an augmenting path, if any.
    fn find_path(&mut self, g: &Graph, mate: &[usize], root: usize) -> Option<usize> {
        let n = g.n();
        self.used.fill(false);
        self.parent.fill(NONE);
        for (i, b) in self.base.iter_mut().enumerate() {
            *b = i;
        }
        self.queue.clear();
        self.used[root] = true;
        self.queue.push_back(root);
        while let Some(v) = self.queue.pop_front() {
            for &to in g.neighbours(v) {
                if self.base[v] == self.base[to] || mate[v] == to {
                    continue;
                }
                let to_is_even = to == root || (mate[to] != NONE && self.parent[mate[to]] != NONE);
                if to_is_even {
                    let cur = self.lca(mate, v, to);
                    self.in_blossom.fill(false);
                    self.mark_path(mate, v, cur, to);
                    self.mark_path(mate, to, cur, v);
                    for i in 0..n {
                        if self.in_blossom[self.base[i]] {
                            self.base[i] = cur;
                            if !self.used[i] {
                                self.used[i] = true;
                                self.queue.push_back(i);
                            }
                        }
                    }
                } else if self.parent[to] == NONE {
                    self.parent[to] = v;
                    if mate[to] == NONE {
                        return Some(to);
                    }
                    let next = mate[to];
                    self.used[next] = true;
                    self.queue.push_back(next);
                }
            }
        }
        None
    }

    /// Alternating path from the found endpoint back to the root, as a vertex
    /// sequence starting and ending at exposed vertices.
    fn path_to_root(&self, mate: &[usize], end: usize) -> Vec<usize> {
        let mut path = Vec::new();
        let mut v = end;
        while v != NONE {
            let pv = self.parent[v];
            let next = mate[pv];
            path.push(v);
            path.push(pv);
            v = next;
        }
        path
    }
}

fn mate_vec(m: &Matching) -> Vec<usize> {
    m.mates().iter().map(|x| x.unwrap_or(NONE)).collect()
}

/// Maximum matching of a general graph: a greedy start followed by one
/// blossom search from every exposed vertex.
pub fn max_matching(g: &Graph) -> Matching {
    let n = g.n();
    let mut m = Matching::empty(n);
    for v in 0..n {
        if m.is_matched(v) {
            continue;
        }
        if let Some(&w) = g.neighbours(v).iter().find(|&&w| !m.is_matched(w)) {
            m.pair(v, w);
        }
    }
    let mut search = Search::new(n);
    let mut mate = mate_vec(&m);
    for root in 0..n {
        if mate[root] != NONE {
            continue;
        }
        if let Some(end) = search.find_path(g, &mate, root) {
            let path = search.path_to_root(&mate, end);
            m.flip_path(&path);
            for pair in path.chunks(2) {
                mate[pair[0]] = pair[1];
                mate[pair[1]] = pair[0];
            }
        }
    }
    m
}

/// Augments `m` along one augmenting path starting at the exposed vertex
/// `root`, if such a path exists in `g`.
pub fn augment_from(g: &Graph, m: &mut Matching, root: usize) -> bool {
    if m.is_matched(root) {
        return false;
    }
    let mate = mate_vec(m);
    let mut search = Search::new(g.n());
    match search.find_path(g, &mate, root) {
        Some(end) => {
            let path = search.path_to_root(&mate, end);
            m.flip_path(&path);
            true
        }
        None => false,
    }
}
