//! Alternating forest grown simultaneously from every exposed vertex, kept
//! up to date as edges are added to the host graph.
//!
//! With a maximum matching fixed, the forest answers "does `g + e` have an
//! augmenting path?" for each offered pair. Most offers are decided from the
//! endpoint labels alone; the rest resume the search, recording every write
//! so a search that ends in an augmenting path can be rolled back.

use std::collections::VecDeque;

use super::Matching;
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};

const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Label {
    Unreached,
    Even,
    Odd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OfferOutcome {
    /// `g + e` has an augmenting path; the forest is unchanged.
    Augments,
    /// No augmenting path; the forest now accounts for `e`.
    NoAugment,
}

#[derive(Clone, Copy, Debug)]
enum Undo {
    Label(usize, Label),
    Root(usize, usize),
    Parent(usize, usize),
    UfParent(usize, usize),
    UfSize(usize, usize),
    BaseOf(usize, usize),
}

#[derive(Clone, Debug)]
pub struct AlternatingForest {
    mate: Vec<usize>,
    label: Vec<Label>,
    root: Vec<usize>,
    /// For odd vertices: the even vertex that labelled them.
    parent: Vec<usize>,
    uf_parent: Vec<usize>,
    uf_size: Vec<usize>,
    /// Blossom base, indexed by union-find representative.
    base_of: Vec<usize>,
    undo: Vec<Undo>,
    logging: bool,
    mark: Vec<u32>,
    stamp: u32,
    queue: VecDeque<usize>,
}

impl AlternatingForest {
    /// Runs the search to completion. Fails if it finds an augmenting path,
    /// i.e. when `m` is not a maximum matching of `g`.
    pub fn build(g: &Graph, m: &Matching) -> Result<Self> {
        m.validate(g)?;
        let n = g.n();
        let mut f = AlternatingForest {
            mate: m.mates().iter().map(|x| x.unwrap_or(NONE)).collect(),
            label: vec![Label::Unreached; n],
            root: vec![NONE; n],
            parent: vec![NONE; n],
            uf_parent: (0..n).collect(),
            uf_size: vec![1; n],
            base_of: (0..n).collect(),
            undo: Vec::new(),
            logging: false,
            mark: vec![0; n],
            stamp: 0,
            queue: VecDeque::new(),
        };
        for v in 0..n {
            if f.mate[v] == NONE {
                f.label[v] = Label::Even;
                f.root[v] = v;
                f.queue.push_back(v);
            }
        }
        if f.drain(g, None) {
            return Err(Error::ContractViolation(format!(
                "matching of size {} is not maximum",
                m.size()
            )));
        }
        Ok(f)
    }

    pub fn label(&self, v: usize) -> Label {
        self.label[v]
    }

    /// The exposed vertex whose tree contains `v`, if `v` is labelled.
    pub fn root(&self, v: usize) -> Option<usize> {
        match self.label[v] {
            Label::Unreached => None,
            _ => Some(self.root[v]),
        }
    }

    pub fn even_vertices(&self) -> Vec<usize> {
        (0..self.label.len())
            .filter(|&v| self.label[v] == Label::Even)
            .collect()
    }

    /// Whether `g + e` has an augmenting path. The forest is left as it was.
    pub fn would_augment(&mut self, g: &Graph, e: Edge) -> bool {
        self.begin();
        let aug = self.process(g, e);
        self.rollback();
        aug
    }

    /// Offers `e`. Unless it augments, the forest is extended to cover it and
    /// the caller is expected to add `e` to `g` before the next offer.
    pub fn offer(&mut self, g: &Graph, e: Edge) -> OfferOutcome {
        self.begin();
        if self.process(g, e) {
            self.rollback();
            OfferOutcome::Augments
        } else {
            self.logging = false;
            self.undo.clear();
            OfferOutcome::NoAugment
        }
    }

    fn begin(&mut self) {
        self.undo.clear();
        self.logging = true;
        self.queue.clear();
    }

    fn rollback(&mut self) {
        while let Some(u) = self.undo.pop() {
            match u {
                Undo::Label(v, x) => self.label[v] = x,
                Undo::Root(v, x) => self.root[v] = x,
                Undo::Parent(v, x) => self.parent[v] = x,
                Undo::UfParent(v, x) => self.uf_parent[v] = x,
                Undo::UfSize(v, x) => self.uf_size[v] = x,
                Undo::BaseOf(v, x) => self.base_of[v] = x,
            }
        }
        self.logging = false;
        self.queue.clear();
    }

    fn process(&mut self, g: &Graph, e: Edge) -> bool {
        if self.label[e.u] != Label::Even && self.label[e.v] != Label::Even {
            return false;
        }
        let (x, y) = if self.label[e.u] == Label::Even {
            (e.u, e.v)
        } else {
            (e.v, e.u)
        };
        self.scan(x, y) || self.drain(g, Some(e))
    }

    /// Processes every queued even vertex; true on an augmenting path.
    fn drain(&mut self, g: &Graph, extra: Option<Edge>) -> bool {
        while let Some(v) = self.queue.pop_front() {
            for &w in g.neighbours(v) {
                if self.scan(v, w) {
                    return true;
                }
            }
            if let Some(e) = extra {
                if e.contains(v) && self.scan(v, e.other(v)) {
                    return true;
                }
            }
        }
        false
    }

    /// Handles the edge from even vertex `v` to `w`.
    fn scan(&mut self, v: usize, w: usize) -> bool {
        match self.label[w] {
            Label::Odd => false,
            Label::Unreached => {
                // Every exposed vertex is a root, so `w` is matched.
                let z = self.mate[w];
                let r = self.root[v];
                self.set_label(w, Label::Odd);
                self.set_root(w, r);
                self.set_parent(w, v);
                self.set_label(z, Label::Even);
                self.set_root(z, r);
                self.queue.push_back(z);
                false
            }
            Label::Even => {
                if self.root[v] != self.root[w] {
                    return true;
                }
                let (bv, bw) = (self.base(v), self.base(w));
                if bv != bw {
                    let lca = self.lca(bv, bw);
                    self.contract(v, lca);
                    self.contract(w, lca);
                }
                false
            }
        }
    }

    fn find(&self, mut x: usize) -> usize {
        while self.uf_parent[x] != x {
            x = self.uf_parent[x];
        }
        x
    }

    fn base(&self, v: usize) -> usize {
        self.base_of[self.find(v)]
    }

    /// Tree parent of a blossom base: the even vertex above its odd mate.
    fn up(&self, b: usize) -> Option<usize> {
        let m = self.mate[b];
        if m == NONE {
            None
        } else {
            Some(self.base(self.parent[m]))
        }
    }

    fn lca(&mut self, a: usize, b: usize) -> usize {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.mark.fill(0);
            self.stamp = 1;
        }
        let mut a = Some(a);
        while let Some(x) = a {
            self.mark[x] = self.stamp;
            a = self.up(x);
        }
        let mut b = b;
        loop {
            if self.mark[b] == self.stamp {
                return b;
            }
            b = self.up(b).expect("vertices in one tree share an ancestor");
        }
    }

    /// Folds the tree path from `v`'s blossom up to `lca` into one blossom.
    fn contract(&mut self, v: usize, lca: usize) {
        let mut b = self.base(v);
        while b != lca {
            let m = self.mate[b];
            let next = self.base(self.parent[m]);
            self.set_label(m, Label::Even);
            self.queue.push_back(m);
            self.union_into(b, lca);
            self.union_into(m, lca);
            b = next;
        }
    }

    fn union_into(&mut self, x: usize, lca: usize) {
        let (mut rx, mut rl) = (self.find(x), self.find(lca));
        if rx == rl {
            return;
        }
        if self.uf_size[rx] > self.uf_size[rl] {
            std::mem::swap(&mut rx, &mut rl);
        }
        self.log(Undo::UfParent(rx, self.uf_parent[rx]));
        self.uf_parent[rx] = rl;
        self.log(Undo::UfSize(rl, self.uf_size[rl]));
        self.uf_size[rl] += self.uf_size[rx];
        self.log(Undo::BaseOf(rl, self.base_of[rl]));
        self.base_of[rl] = lca;
    }

    fn log(&mut self, u: Undo) {
        if self.logging {
            self.undo.push(u);
        }
    }

    fn set_label(&mut self, v: usize, x: Label) {
        self.log(Undo::Label(v, self.label[v]));
        self.label[v] = x;
    }

    fn set_root(&mut self, v: usize, x: usize) {
        self.log(Undo::Root(v, self.root[v]));
        self.root[v] = x;
    }

    fn set_parent(&mut self, v: usize, x: usize) {
        self.log(Undo::Parent(v, self.parent[v]));
        self.parent[v] = x;
    }
}
