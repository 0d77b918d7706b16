//! Maximum independent set by branch and bound.

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::graph::Graph;

/// Search nodes explored before giving up on exactness. A node budget
/// rather than a wall-clock cap keeps results reproducible across machines.
pub const DEFAULT_NODE_BUDGET: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Independence {
    pub value: usize,
    /// False when the budget ran out; `value` is then a lower bound.
    pub exact: bool,
}

struct Solver {
    nbr: Vec<FixedBitSet>,
    best: usize,
    nodes: u64,
    budget: u64,
    aborted: bool,
}

impl Solver {
    fn degree(&self, v: usize, alive: &FixedBitSet) -> usize {
        self.nbr[v].intersection(alive).count()
    }

    /// Greedy maximal matching size inside `alive`; alpha <= |alive| - nu.
    fn greedy_matching(&self, alive: &FixedBitSet) -> usize {
        let mut free = alive.clone();
        let mut size = 0;
        for v in alive.ones() {
            if !free.contains(v) {
                continue;
            }
            if let Some(w) = self.nbr[v].intersection(&free).next() {
                free.set(v, false);
                free.set(w, false);
                size += 1;
            }
        }
        size
    }

    fn search(&mut self, mut alive: FixedBitSet, mut size: usize) {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.aborted = true;
            return;
        }
        // Vertices of degree at most 1 belong to some maximum independent set.
        loop {
            let pick = alive.ones().find(|&v| self.degree(v, &alive) <= 1);
            match pick {
                Some(v) => {
                    size += 1;
                    alive.set(v, false);
                    alive.difference_with(&self.nbr[v]);
                }
                None => break,
            }
        }
        let left = alive.count_ones(..);
        if left == 0 {
            self.best = self.best.max(size);
            return;
        }
        if size + left - self.greedy_matching(&alive) <= self.best {
            return;
        }
        let v = alive
            .ones()
            .max_by_key(|&v| (self.degree(v, &alive), std::cmp::Reverse(v)))
            .expect("alive is nonempty");
        let mut with = alive.clone();
        with.set(v, false);
        with.difference_with(&self.nbr[v]);
        self.search(with, size + 1);
        if self.aborted {
            return;
        }
        alive.set(v, false);
        self.search(alive, size);
    }
}

/// Repeatedly takes a minimum-degree vertex and deletes its neighbourhood.
pub fn greedy_independent_set(g: &Graph) -> Vec<usize> {
    let n = g.n();
    let mut alive = vec![true; n];
    let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut out = Vec::new();
    loop {
        let pick = (0..n).filter(|&v| alive[v]).min_by_key(|&v| (deg[v], v));
        let Some(v) = pick else { break };
        out.push(v);
        let mut removed = vec![v];
        alive[v] = false;
        for &w in g.neighbours(v) {
            if alive[w] {
                alive[w] = false;
                removed.push(w);
            }
        }
        for &r in &removed {
            for &x in g.neighbours(r) {
                if alive[x] {
                    deg[x] -= 1;
                }
            }
        }
    }
    out
}

/// Independence number, exact unless `node_budget` search nodes were not
/// enough, in which case the best independent set found is reported.
pub fn independence_number(g: &Graph, node_budget: u64) -> Independence {
    let n = g.n();
    let nbr = (0..n)
        .map(|v| {
            let mut b = FixedBitSet::with_capacity(n);
            for &w in g.neighbours(v) {
                b.insert(w);
            }
            b
        })
        .collect();
    let mut solver = Solver {
        nbr,
        best: greedy_independent_set(g).len(),
        nodes: 0,
        budget: node_budget,
        aborted: false,
    };
    let mut all = FixedBitSet::with_capacity(n);
    all.insert_range(..);
    solver.search(all, 0);
    Independence {
        value: solver.best,
        exact: !solver.aborted,
    }
}

/// Subset enumeration, for small graphs only.
pub fn independence_brute_force(g: &Graph) -> usize {
    let n = g.n();
    assert!(n <= 24, "subset enumeration is limited to 24 vertices");
    let nbr: Vec<u32> = (0..n)
        .map(|v| g.neighbours(v).iter().fold(0, |a, &w| a | (1 << w)))
        .collect();
    let mut best = 0;
    for set in 0u32..(1 << n) {
        let size = set.count_ones();
        if size as usize <= best {
            continue;
        }
        let mut rest = set;
        let mut ok = true;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if nbr[v] & set != 0 {
                ok = false;
                break;
            }
        }
        if ok {
            best = size as usize;
        }
    }
    best
}
