//! Charge and root bookkeeping after the matching number reaches k-1.
//!
//! Once the maximum matching M is frozen, its vertices form A and the rest
//! form B. Every B vertex starts negatively charged and is its own root; an
//! edge from a negative vertex to an uncharged a in A charges a positively
//! and its mate negatively, both inheriting the root. The tracker replays a
//! recorded run and checks the structural claims this bookkeeping supports.
//! It never influences the process itself.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dsu::DisjointSets;
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};
use crate::matching::{max_matching, Matching};
use crate::process::{Run, Trace};

const NONE: usize = usize::MAX;
/// Hitting time of an event that never happens.
pub const NEVER: u64 = u64::MAX;

#[derive(Clone, Debug)]
pub struct ChargeState {
    in_a: Vec<bool>,
    mate: Vec<usize>,
    charge: Vec<i8>,
    root: Vec<usize>,
    /// Tree parent in T^b: the negative vertex that charged a positive
    /// vertex, or the positive mate of a negative A-vertex.
    parent: Vec<usize>,
    charged_at: Vec<u64>,
    /// Order in which vertices were charged; B vertices come first.
    seq: Vec<usize>,
    next_seq: usize,
    adj: Vec<Vec<(usize, u64)>>,
    heap: BinaryHeap<Reverse<(u64, usize, usize)>>,
    m: usize,
}

/// Starts from the initial conditions and propagates over `g_tau`, whose
/// edges are listed with their offer times in `offers`.
pub fn init_charges(
    g_tau: &Graph,
    m: &Matching,
    k: usize,
    offers: &[(Edge, u64)],
    tau: u64,
) -> Result<ChargeState> {
    m.validate(g_tau)?;
    if k == 0 || m.size() + 1 != k {
        return Err(Error::ContractViolation(format!(
            "charges need a matching of size k-1 = {}, got {}",
            k.saturating_sub(1),
            m.size()
        )));
    }
    if max_matching(g_tau).size() != m.size() {
        return Err(Error::ContractViolation("matching is not maximum".into()));
    }
    if offers.len() != g_tau.m() || offers.iter().any(|(e, _)| !g_tau.has_edge(e.u, e.v)) {
        return Err(Error::ContractViolation(
            "offer list does not match the graph's edges".into(),
        ));
    }
    let n = g_tau.n();
    let mut s = ChargeState {
        in_a: (0..n).map(|v| m.is_matched(v)).collect(),
        mate: (0..n).map(|v| m.mate(v).unwrap_or(NONE)).collect(),
        charge: vec![0; n],
        root: vec![NONE; n],
        parent: vec![NONE; n],
        charged_at: vec![NEVER; n],
        seq: vec![NONE; n],
        next_seq: 0,
        adj: vec![Vec::new(); n],
        heap: BinaryHeap::new(),
        m: 0,
    };
    for &(e, t) in offers {
        s.adj[e.u].push((e.v, t));
        s.adj[e.v].push((e.u, t));
        s.m += 1;
    }
    for b in 0..n {
        if !s.in_a[b] {
            s.charge[b] = -1;
            s.root[b] = b;
            s.seq[b] = s.next_seq;
            s.next_seq += 1;
            s.push_from(b);
        }
    }
    s.propagate(tau);
    Ok(s)
}

impl ChargeState {
    pub fn n(&self) -> usize {
        self.in_a.len()
    }

    pub fn in_a(&self, v: usize) -> bool {
        self.in_a[v]
    }

    pub fn charge(&self, v: usize) -> i8 {
        self.charge[v]
    }

    pub fn root(&self, v: usize) -> Option<usize> {
        (self.root[v] != NONE).then_some(self.root[v])
    }

    pub fn tree_parent(&self, v: usize) -> Option<usize> {
        (self.parent[v] != NONE).then_some(self.parent[v])
    }

    pub fn charged_at(&self, v: usize) -> Option<u64> {
        (self.charged_at[v] != NEVER).then_some(self.charged_at[v])
    }

    pub fn mate(&self, v: usize) -> Option<usize> {
        (self.mate[v] != NONE).then_some(self.mate[v])
    }

    fn uncharged_a(&self, v: usize) -> bool {
        self.in_a[v] && self.charge[v] == 0
    }

    fn push_from(&mut self, v: usize) {
        for &(w, t) in &self.adj[v] {
            if self.uncharged_a(w) {
                self.heap.push(Reverse((t, v, w)));
            }
        }
    }

    /// Records an accepted edge offered at time `t`; call [`Self::propagate`]
    /// afterwards.
    pub fn add_edge(&mut self, e: Edge, t: u64) {
        self.adj[e.u].push((e.v, t));
        self.adj[e.v].push((e.u, t));
        self.m += 1;
        for (x, y) in [(e.u, e.v), (e.v, e.u)] {
            if self.charge[x] < 0 && self.uncharged_a(y) {
                self.heap.push(Reverse((t, x, y)));
            }
        }
    }

    /// Charges along qualifying edges, earliest offer first, until none is
    /// left. Returns the newly charged positive vertices.
    pub fn propagate(&mut self, now: u64) -> Vec<usize> {
        let mut fresh = Vec::new();
        while let Some(Reverse((_, v, a))) = self.heap.pop() {
            if !self.uncharged_a(a) {
                continue;
            }
            let b = self.root[v];
            let z = self.mate[a];
            for (x, c, p) in [(a, 1, v), (z, -1, a)] {
                self.charge[x] = c;
                self.root[x] = b;
                self.parent[x] = p;
                self.charged_at[x] = now;
                self.seq[x] = self.next_seq;
                self.next_seq += 1;
            }
            fresh.push(a);
            self.push_from(z);
        }
        fresh
    }

    /// One line per vertex, "v charge root", root -1 when absent.
    pub fn dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for v in 0..self.n() {
            let r = self.root(v).map_or(-1, |r| r as i64);
            writeln!(out, "{v} {} {r}", self.charge[v])?;
        }
        Ok(())
    }

    /// Components of the subgraph induced by uncharged vertices; `comp[v]`
    /// is NONE for charged vertices.
    fn uncharged_components(&self) -> Vec<usize> {
        let n = self.n();
        let mut comp = vec![NONE; n];
        let mut next = 0;
        let mut q = VecDeque::new();
        for s in 0..n {
            if !self.uncharged_a(s) || comp[s] != NONE {
                continue;
            }
            comp[s] = next;
            q.push_back(s);
            while let Some(v) = q.pop_front() {
                for &(w, _) in &self.adj[v] {
                    if self.uncharged_a(w) && comp[w] == NONE {
                        comp[w] = next;
                        q.push_back(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Tree and matched-pair invariants; returns a description of each
    /// failure.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut bad = Vec::new();
        for v in 0..self.n() {
            if !self.in_a[v] {
                if self.charge[v] != -1 || self.root[v] != v {
                    bad.push(format!("B vertex {v} lost its charge or root"));
                }
                continue;
            }
            let z = self.mate[v];
            if self.charge[v] + self.charge[z] != 0 || self.root[v] != self.root[z] {
                bad.push(format!("matched pair {{{v},{z}}} has inconsistent charges"));
            }
            if self.charge[v] == 0 {
                continue;
            }
            let p = self.parent[v];
            let ok = p != NONE
                && self.charge[p] == -self.charge[v]
                && self.root[p] == self.root[v]
                && self.seq[p] < self.seq[v]
                && (self.charge[v] < 0 || !self.in_a[p] || self.mate[p] != v);
            let ok = ok && (self.charge[v] > 0 || p == z);
            if !ok {
                bad.push(format!("charging tree broken at {v}"));
            }
        }
        bad
    }
}

/// Applies the coupled-process rule to `e`: an edge inside A joins `gprime`
/// unless both endpoints have already been offered an edge to B. Edges
/// touching B only update `seen_b`.
pub fn coupled_step(gprime: &mut Graph, in_a: &[bool], e: Edge, seen_b: &mut [bool]) -> bool {
    let (u, v) = (e.u, e.v);
    if in_a[u] && in_a[v] {
        let add = !(seen_b[u] && seen_b[v]);
        if add && !gprime.has_edge(u, v) {
            gprime.add_edge(u, v).expect("valid pair");
        }
        return add;
    }
    for x in [u, v] {
        if in_a[x] && !in_a[e.other(x)] {
            seen_b[x] = true;
        }
    }
    false
}

/// Partitions of A at one moment. `c`, `c_sub` and `c_prime` cover the
/// charged vertices of A, `d` the uncharged ones, and `f`, `d_bar`,
/// `f_prime` all of A. Parts are sorted and listed by smallest element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentView {
    pub c: Vec<Vec<usize>>,
    pub d: Vec<Vec<usize>>,
    pub f: Vec<Vec<usize>>,
    pub c_sub: Vec<Vec<usize>>,
    pub c_prime: Vec<Vec<usize>>,
    pub d_bar: Vec<Vec<usize>>,
    pub f_prime: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexHitting {
    pub vertex: usize,
    pub tau_f: Option<u64>,
    pub tau_b: Option<u64>,
    /// Like `tau_b`, but the root is read after step t, so the edge that
    /// charges a from b does not count as an edge to B outside its root.
    pub tau_b_post: Option<u64>,
    pub tau_c: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargeReport {
    pub tau: u64,
    pub acyclic_at_tau: bool,
    /// tau_v^F > tau_{m_v}^B for every v in A.
    pub root_separation_hypothesis: bool,
    /// The same with `tau_b_post` in place of `tau_b`.
    pub root_separation_hypothesis_post: bool,
    pub c_prime_refines_f_prime: bool,
    pub d_bar_refines_f_prime: bool,
    /// Vertices of A charged strictly after first seeing a foreign B edge.
    pub charged_after_b_edge: u64,
    pub s_c: u64,
    pub s_c_prime: u64,
    pub s_d_bar: u64,
    pub s_f_prime: u64,
    pub hitting: Vec<VertexHitting>,
    pub violations: Vec<String>,
}

/// Replays the post-tau part of a run on top of the charge state.
pub struct ChargeTracker {
    state: ChargeState,
    c_prime: DisjointSets,
    c_sub: DisjointSets,
    d_bar: DisjointSets,
    f_prime: DisjointSets,
    seen_b: Vec<bool>,
    d_comp: Vec<usize>,
    d_dirty: bool,
    tau_f: Vec<u64>,
    tau_b: Vec<u64>,
    tau_b_post: Vec<u64>,
    violations: Vec<String>,
}

impl ChargeTracker {
    /// `e_tau` is the pair offered at step tau, if any.
    pub fn new(state: ChargeState, e_tau: Option<Edge>) -> Self {
        let n = state.n();
        let mut t = ChargeTracker {
            c_prime: DisjointSets::new(n),
            c_sub: DisjointSets::new(n),
            d_bar: DisjointSets::new(n),
            f_prime: DisjointSets::new(n),
            seen_b: vec![false; n],
            d_comp: Vec::new(),
            d_dirty: true,
            tau_f: vec![NEVER; n],
            tau_b: vec![NEVER; n],
            tau_b_post: vec![NEVER; n],
            violations: Vec::new(),
            state,
        };
        // C(tau) by root, the tree sub-components, and D(tau).
        let mut first_with_root = vec![NONE; n];
        for a in 0..n {
            if !t.state.in_a[a] || t.state.charge[a] == 0 {
                continue;
            }
            let r = t.state.root[a];
            if first_with_root[r] == NONE {
                first_with_root[r] = a;
            }
            t.c_prime.union(a, first_with_root[r]);
            t.f_prime.union(a, first_with_root[r]);
            t.join_subcomponent(a);
        }
        let comp = t.state.uncharged_components();
        let mut first_in_comp = vec![NONE; n];
        for a in 0..n {
            if comp[a] != NONE {
                let c = comp[a];
                if first_in_comp[c] == NONE {
                    first_in_comp[c] = a;
                }
                t.d_bar.union(a, first_in_comp[c]);
                t.f_prime.union(a, first_in_comp[c]);
            }
        }
        if let Some(e) = e_tau {
            t.note_b_edge(e);
        }
        t
    }

    pub fn state(&self) -> &ChargeState {
        &self.state
    }

    fn join_subcomponent(&mut self, a: usize) {
        let p = self.state.parent[a];
        if p != NONE && self.state.in_a[p] {
            self.c_sub.union(a, p);
            self.c_prime.union(a, p);
        }
    }

    fn note_b_edge(&mut self, e: Edge) {
        let in_a = &self.state.in_a;
        for x in [e.u, e.v] {
            if in_a[x] && !in_a[e.other(x)] {
                self.seen_b[x] = true;
            }
        }
    }

    fn same_d(&mut self, a: usize, b: usize) -> bool {
        if self.d_dirty {
            self.d_comp = self.state.uncharged_components();
            self.d_dirty = false;
        }
        self.d_comp[a] != NONE && self.d_comp[a] == self.d_comp[b]
    }

    /// Processes step `t` (after tau): offered pair `e`, accepted or not.
    pub fn observe(&mut self, t: u64, e: Edge, accepted: bool) {
        for a in [e.u, e.v] {
            if !self.state.in_a[a] {
                continue;
            }
            let x = e.other(a);
            let r = self.state.root[a];
            if self.tau_b[a] == NEVER && !self.state.in_a[x] && x != r {
                self.tau_b[a] = t;
            }
            if self.tau_f[a] == NEVER {
                let hit = if self.state.charge[a] != 0 {
                    x == r || (self.state.in_a[x] && self.state.root[x] == r)
                } else {
                    self.state.uncharged_a(x) && self.same_d(a, x)
                };
                if hit {
                    self.tau_f[a] = t;
                }
            }
        }
        let (u, v) = (e.u, e.v);
        if self.state.in_a[u] && self.state.in_a[v] {
            if !(self.seen_b[u] && self.seen_b[v]) {
                self.f_prime.union(u, v);
            }
        } else {
            self.note_b_edge(e);
        }
        if accepted {
            self.accept(t, e);
        }
        for a in [u, v] {
            let x = e.other(a);
            let s = &self.state;
            if s.in_a[a] && !s.in_a[x] && x != s.root[a] && self.tau_b_post[a] == NEVER {
                self.tau_b_post[a] = t;
            }
        }
    }

    fn accept(&mut self, t: u64, e: Edge) {
        let (u, v) = (e.u, e.v);
        let s = &self.state;
        if s.charge[u] < 0 && s.charge[v] < 0 && s.root[u] != s.root[v] {
            self.violations.push(format!(
                "step {t}: accepted {e} between negative vertices with roots {} and {}",
                s.root[u], s.root[v]
            ));
        }
        let both_uncharged_before = s.uncharged_a(u) && s.uncharged_a(v);
        self.state.add_edge(e, t);
        let fresh = self.state.propagate(t);
        for &a in &fresh {
            let z = self.state.mate[a];
            self.join_subcomponent(a);
            self.c_sub.union(a, z);
            self.c_prime.union(a, z);
        }
        if self.state.uncharged_a(u) && self.state.uncharged_a(v) {
            self.d_bar.union(u, v);
        }
        if !fresh.is_empty() || both_uncharged_before {
            self.d_dirty = true;
        }
    }

    pub fn view(&mut self) -> ComponentView {
        let s = &self.state;
        let n = s.n();
        let a_vertices: Vec<usize> = (0..n).filter(|&v| s.in_a[v]).collect();
        let charged: Vec<usize> = a_vertices.iter().copied().filter(|&v| s.charge[v] != 0).collect();
        let mut by_root = DisjointSets::new(n);
        let mut first = vec![NONE; n];
        for &a in &charged {
            let r = s.root[a];
            if first[r] == NONE {
                first[r] = a;
            }
            by_root.union(a, first[r]);
        }
        let comp = s.uncharged_components();
        let mut d_sets = DisjointSets::new(n);
        let mut first_c = vec![NONE; n];
        for &a in &a_vertices {
            if comp[a] != NONE {
                if first_c[comp[a]] == NONE {
                    first_c[comp[a]] = a;
                }
                d_sets.union(a, first_c[comp[a]]);
            }
        }
        let uncharged: Vec<usize> = a_vertices.iter().copied().filter(|&v| s.charge[v] == 0).collect();
        let c = restrict(&mut by_root, &charged);
        let d = restrict(&mut d_sets, &uncharged);
        let mut f: Vec<Vec<usize>> = c.iter().chain(d.iter()).cloned().collect();
        f.sort();
        ComponentView {
            c,
            d,
            f,
            c_sub: restrict(&mut self.c_sub, &charged),
            c_prime: restrict(&mut self.c_prime, &charged),
            d_bar: restrict(&mut self.d_bar, &a_vertices),
            f_prime: restrict(&mut self.f_prime, &a_vertices),
        }
    }

    pub fn hitting_times(&self) -> Vec<VertexHitting> {
        let opt = |t: u64| (t != NEVER).then_some(t);
        (0..self.state.n())
            .filter(|&v| self.state.in_a[v])
            .map(|v| VertexHitting {
                vertex: v,
                tau_f: opt(self.tau_f[v]),
                tau_b: opt(self.tau_b[v]),
                tau_b_post: opt(self.tau_b_post[v]),
                tau_c: opt(self.state.charged_at[v]),
            })
            .collect()
    }

    /// End-of-run checks against the final graph.
    pub fn finish(mut self, tau: u64, acyclic_at_tau: bool, g_final: &Graph) -> ChargeReport {
        let s = &self.state;
        let mut violations = std::mem::take(&mut self.violations);
        if s.m != g_final.m() {
            violations.push("tracker and process disagree on the edge count".into());
        }
        for e in g_final.edges() {
            if s.charge[e.u] < 0 && s.charge[e.v] < 0 && s.root[e.u] != s.root[e.v] {
                violations.push(format!(
                    "final edge {e} joins negative vertices of different roots"
                ));
            }
        }
        violations.extend(s.check_invariants());
        let n = s.n();
        let a_vertices: Vec<usize> = (0..n).filter(|&v| s.in_a[v]).collect();
        let root_separation_hypothesis = a_vertices.iter().all(|&v| self.tau_f[v] > self.tau_b[s.mate[v]]);
        let root_separation_hypothesis_post = a_vertices
            .iter()
            .all(|&v| self.tau_f[v] > self.tau_b_post[s.mate[v]]);
        let charged_after_b_edge = a_vertices
            .iter()
            .filter(|&&v| s.charged_at[v] > self.tau_b[v])
            .count() as u64;
        let c_prime_ok = refines(&mut self.c_prime, &mut self.f_prime, &a_vertices);
        let d_bar_ok = refines(&mut self.d_bar, &mut self.f_prime, &a_vertices);
        if !c_prime_ok {
            violations.push("C'(N) does not refine F'(N)".into());
        }
        if !d_bar_ok {
            violations.push("D-bar(N) does not refine F'(N)".into());
        }
        let view = self.view();
        ChargeReport {
            tau,
            acyclic_at_tau,
            root_separation_hypothesis,
            root_separation_hypothesis_post,
            c_prime_refines_f_prime: c_prime_ok,
            d_bar_refines_f_prime: d_bar_ok,
            charged_after_b_edge,
            s_c: square_sum(&view.c),
            s_c_prime: square_sum(&view.c_prime),
            s_d_bar: square_sum(&view.d_bar),
            s_f_prime: square_sum(&view.f_prime),
            hitting: self.hitting_times(),
            violations,
        }
    }
}

fn restrict(sets: &mut DisjointSets, keep: &[usize]) -> Vec<Vec<usize>> {
    let mut slot = vec![NONE; sets.len()];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for &v in keep {
        let r = sets.find(v);
        if slot[r] == NONE {
            slot[r] = out.len();
            out.push(Vec::new());
        }
        out[slot[r]].push(v);
    }
    out
}

/// Whether every part of `fine` (restricted to `keep`) sits inside a part of
/// `coarse`.
fn refines(fine: &mut DisjointSets, coarse: &mut DisjointSets, keep: &[usize]) -> bool {
    let mut rep = vec![NONE; fine.len()];
    for &v in keep {
        let r = fine.find(v);
        if rep[r] == NONE {
            rep[r] = v;
        } else if !coarse.same(v, rep[r]) {
            return false;
        }
    }
    true
}

fn square_sum(parts: &[Vec<usize>]) -> u64 {
    parts.iter().map(|p| (p.len() * p.len()) as u64).sum()
}

/// Replays `trace` from step `tau` on, starting from the state at `tau`.
pub fn analyze(
    g_tau: &Graph,
    m_tau: &Matching,
    k: usize,
    tau: usize,
    trace: &Trace,
    g_final: &Graph,
) -> Result<ChargeReport> {
    let offers: Vec<(Edge, u64)> = trace.steps[..tau]
        .iter()
        .enumerate()
        .filter(|(_, s)| s.accepted)
        .map(|(i, s)| (s.edge, i as u64 + 1))
        .collect();
    let state = init_charges(g_tau, m_tau, k, &offers, tau as u64)?;
    let e_tau = tau.checked_sub(1).map(|i| trace.steps[i].edge);
    let mut tracker = ChargeTracker::new(state, e_tau);
    for (i, s) in trace.steps.iter().enumerate().skip(tau) {
        tracker.observe(i as u64 + 1, s.edge, s.accepted);
    }
    Ok(tracker.finish(tau as u64, g_tau.is_acyclic(), g_final))
}

/// Per-vertex hitting times of a finished run; needs the step trace.
pub fn vertex_hitting_times(run: &Run) -> Result<Vec<VertexHitting>> {
    if let Some(report) = &run.charges {
        return Ok(report.hitting.clone());
    }
    let trace = run
        .trace
        .as_ref()
        .ok_or_else(|| Error::Mode("hitting times need a run recorded in trace mode".into()))?;
    let (Some(tau), Some(m_tau)) = (run.record.tau_nu, run.matching_at_tau.as_ref()) else {
        return Ok(Vec::new());
    };
    let tau = tau as usize;
    let mut g_tau = Graph::new_empty(trace.n)?;
    for s in &trace.steps[..tau] {
        if s.accepted {
            g_tau.add_edge(s.edge.u, s.edge.v)?;
        }
    }
    Ok(analyze(&g_tau, m_tau, trace.k, tau, trace, &run.graph)?.hitting)
}
