//! The random greedy k-matching-free process.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::charges::{self, ChargeReport};
use crate::diagnostics::{self, ClassLabel};
use crate::error::{Error, Result};
use crate::graph::{pair_count, Edge, EdgePermutation, Graph};
use crate::independence::{independence_number, DEFAULT_NODE_BUDGET};
use crate::matching::{
    augment_from, is_saturated, max_matching, AlternatingForest, Label, Matching, OfferOutcome,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Counters and hitting times only.
    #[default]
    Summary,
    /// Also keep every offered pair and its decision.
    Trace,
    /// Trace plus the charge-tracker replay.
    Charges,
}

impl Mode {
    pub fn keeps_trace(self) -> bool {
        self != Mode::Summary
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "summary" => Ok(Mode::Summary),
            "trace" => Ok(Mode::Trace),
            "charges" => Ok(Mode::Charges),
            _ => Err(Error::InvalidParameter(format!(
                "unknown mode {s:?} (expected summary, trace or charges)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub mode: Mode,
    /// Branch-and-bound node budget for the final independence number.
    pub independence_budget: u64,
    /// Re-derive every accept/reject decision from scratch (slow).
    pub verify_steps: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            mode: Mode::Summary,
            independence_budget: DEFAULT_NODE_BUDGET,
            verify_steps: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub edge: Edge,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    /// Step `t` (1-based) is `steps[t - 1]`.
    pub steps: Vec<TraceStep>,
}

impl Trace {
    /// Header "n k seed", then one "t u v accepted" line per step.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {} {}", self.n, self.k, self.seed)?;
        for (i, s) in self.steps.iter().enumerate() {
            writeln!(
                out,
                "{} {} {} {}",
                i + 1,
                s.edge.u,
                s.edge.v,
                u8::from(s.accepted)
            )?;
        }
        out.flush()
    }
}

/// Diagnostic counters attached to a trial. Fields measured at a hitting
/// time are absent when that hitting time never occurred.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub isolated_vertices: u64,
    pub degree_n_minus_1: u64,
    pub independence: u64,
    pub independence_exact: bool,
    pub isolated_triangles_at_tau: Option<u64>,
    pub susceptibility_at_tau: Option<u64>,
    pub susceptibility_tilde_at_tau: Option<u64>,
    pub isolated_two_paths_at_tau: Option<u64>,
    pub acyclic_at_tau: Option<bool>,
    pub cherries_at_tau_iso: Option<u64>,
    pub dangerous_at_tau_iso: Option<u64>,
    pub iso_deg2_pairs_at_tau_iso: Option<u64>,
    pub resilient_at_tau_iso: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    /// Step at which the matching number reached k-1.
    pub tau_nu: Option<u64>,
    /// Step at which exactly n-2k+1 vertices were isolated (needs n >= 2k).
    pub tau_iso: Option<u64>,
    pub accepted_count: u64,
    pub final_edge_count: u64,
    pub classification: ClassLabel,
    pub complete: bool,
    pub diagnostics: Diagnostics,
    /// Whether every v in A had its component hit after its partner saw B;
    /// only with charge instrumentation.
    pub root_separation_hypothesis: Option<bool>,
    pub violations: Vec<String>,
}

/// Everything a finished run produced.
#[derive(Clone, Debug)]
pub struct Run {
    pub record: TrialRecord,
    pub graph: Graph,
    pub trace: Option<Trace>,
    pub matching_at_tau: Option<Matching>,
    pub charges: Option<ChargeReport>,
}

/// A process in flight.
#[derive(Clone, Debug)]
pub struct ProcessState {
    k: usize,
    g: Graph,
    t: usize,
    matching: Matching,
    forest: AlternatingForest,
    tau_nu: Option<usize>,
    tau_iso: Option<usize>,
    accepted_count: usize,
    isolated: usize,
    eg_bound: u64,
    steps: Option<Vec<TraceStep>>,
    g_at_tau: Option<Graph>,
    m_at_tau: Option<Matching>,
    g_at_tau_iso: Option<Graph>,
    verify: bool,
    violations: Vec<String>,
}

impl ProcessState {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter(
                "k must be positive: every graph contains a 0-matching".into(),
            ));
        }
        let g = Graph::new_empty(n)?;
        let matching = Matching::empty(n);
        let forest = AlternatingForest::build(&g, &matching)?;
        let mut s = ProcessState {
            k,
            eg_bound: diagnostics::erdos_gallai_bound(n, k)?,
            g,
            t: 0,
            matching,
            forest,
            tau_nu: None,
            tau_iso: None,
            accepted_count: 0,
            isolated: n,
            steps: None,
            g_at_tau: None,
            m_at_tau: None,
            g_at_tau_iso: None,
            verify: false,
            violations: Vec::new(),
        };
        s.update_hitting_times();
        Ok(s)
    }

    /// Keep every step for export and replay.
    pub fn with_trace(mut self) -> Self {
        self.steps.get_or_insert_with(Vec::new);
        self
    }

    /// Cross-check every decision against a fresh maximum matching.
    pub fn with_verification(mut self) -> Self {
        self.verify = true;
        self
    }

    pub fn graph(&self) -> &Graph {
        &self.g
    }

    pub fn matching(&self) -> &Matching {
        &self.matching
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn tau_nu(&self) -> Option<usize> {
        self.tau_nu
    }

    pub fn tau_iso(&self) -> Option<usize> {
        self.tau_iso
    }

    pub fn violations(&self) -> &[String] {
        &self.violations
    }

    /// Offers the pair `e`; returns whether it was accepted.
    pub fn step(&mut self, e: Edge) -> Result<bool> {
        let e = self.g.check_pair(e.u, e.v)?;
        if self.g.has_edge(e.u, e.v) {
            return Err(Error::ContractViolation(format!(
                "{e} was already offered and accepted"
            )));
        }
        let expected = self.verify.then(|| {
            let mut h = self.g.clone();
            h.insert(e);
            max_matching(&h).size() < self.k
        });
        self.t += 1;
        let frozen = self.matching.size() + 1 >= self.k;
        let accepted = match self.forest.offer(&self.g, e) {
            OfferOutcome::NoAugment => {
                self.insert(e);
                true
            }
            OfferOutcome::Augments if frozen => false,
            OfferOutcome::Augments => {
                self.insert(e);
                self.augment(e);
                true
            }
        };
        if let Some(exp) = expected {
            if exp != accepted {
                self.violations.push(format!(
                    "step {}: decision for {e} disagrees with a fresh maximum matching",
                    self.t
                ));
            }
        }
        if !accepted && self.tau_nu.is_none() {
            self.violations
                .push(format!("step {}: rejected {e} before tau", self.t));
        }
        if let Some(steps) = self.steps.as_mut() {
            steps.push(TraceStep { edge: e, accepted });
        }
        self.update_hitting_times();
        Ok(accepted)
    }

    fn insert(&mut self, e: Edge) {
        for x in [e.u, e.v] {
            if self.g.degree(x) == 0 {
                self.isolated -= 1;
            }
        }
        self.g.insert(e);
        self.accepted_count += 1;
        if self.g.m() as u64 > self.eg_bound {
            self.violations.push(format!(
                "step {}: {} edges exceed the Erdos-Gallai bound {}",
                self.t,
                self.g.m(),
                self.eg_bound
            ));
        }
    }

    /// `e` has just been added and opened an augmenting path through it.
    fn augment(&mut self, e: Edge) {
        let m = &mut self.matching;
        if !m.is_matched(e.u) && !m.is_matched(e.v) {
            m.pair(e.u, e.v);
        } else {
            // The path found by the forest starts at the root of the tree
            // that contains an even endpoint of e.
            let start = [e.u, e.v]
                .into_iter()
                .find(|&x| self.forest.label(x) == Label::Even)
                .and_then(|x| self.forest.root(x));
            let done = start.is_some_and(|r| augment_from(&self.g, m, r))
                || m.exposed_vertices()
                    .into_iter()
                    .any(|r| augment_from(&self.g, m, r));
            if !done {
                self.violations
                    .push(format!("step {}: no augmenting path found through {e}", self.t));
            }
        }
        match AlternatingForest::build(&self.g, &self.matching) {
            Ok(f) => self.forest = f,
            Err(_) => {
                self.violations
                    .push(format!("step {}: matching not maximum after augmenting", self.t));
                self.matching = max_matching(&self.g);
                self.forest = AlternatingForest::build(&self.g, &self.matching)
                    .expect("a maximum matching admits no augmenting path");
            }
        }
    }

    fn update_hitting_times(&mut self) {
        if self.tau_nu.is_none() && self.matching.size() + 1 >= self.k {
            self.tau_nu = Some(self.t);
            self.g_at_tau = Some(self.g.clone());
            self.m_at_tau = Some(self.matching.clone());
        }
        let n = self.g.n();
        if self.tau_iso.is_none() && n >= 2 * self.k && self.isolated == n - 2 * self.k + 1 {
            self.tau_iso = Some(self.t);
            self.g_at_tau_iso = Some(self.g.clone());
        }
    }

    /// Runs the end-of-process checks and assembles the record.
    pub fn finish(mut self, seed: u64, opts: &RunOptions) -> Result<Run> {
        let n = self.g.n();
        let k = self.k;
        if self.t != pair_count(n) {
            return Err(Error::ContractViolation(format!(
                "process stopped after {} of {} steps",
                self.t,
                pair_count(n)
            )));
        }
        if !is_saturated(&self.g, k)? {
            self.violations.push("final graph is not saturated".into());
        }
        if k <= n / 2 {
            let nu = max_matching(&self.g).size();
            if nu != k - 1 {
                self.violations
                    .push(format!("final matching number {nu}, expected {}", k - 1));
            }
        }
        let class = diagnostics::classify_extremal(&self.g, k).label;
        let mut diag = Diagnostics {
            isolated_vertices: self.isolated as u64,
            degree_n_minus_1: diagnostics::count_degree_n_minus_1(&self.g),
            ..Diagnostics::default()
        };
        let ind = independence_number(&self.g, opts.independence_budget);
        diag.independence = ind.value as u64;
        diag.independence_exact = ind.exact;
        if let Some(gt) = &self.g_at_tau {
            let (s, st) = gt.susceptibility();
            diag.isolated_triangles_at_tau = Some(diagnostics::count_isolated_triangles(gt));
            diag.susceptibility_at_tau = Some(s);
            diag.susceptibility_tilde_at_tau = Some(st);
            diag.isolated_two_paths_at_tau = Some(diagnostics::count_isolated_two_paths(gt));
            diag.acyclic_at_tau = Some(gt.is_acyclic());
        }
        if let Some(gi) = &self.g_at_tau_iso {
            diag.cherries_at_tau_iso = Some(diagnostics::count_cherries(gi));
            diag.dangerous_at_tau_iso = Some(diagnostics::dangerous_vertices(gi).len() as u64);
            diag.iso_deg2_pairs_at_tau_iso = Some(diagnostics::count_iso_deg2_pairs(gi));
            let active: Vec<usize> = (0..n).filter(|&v| gi.degree(v) > 0).collect();
            if active.len() % 2 == 1 {
                let core = gi.induced(&active)?;
                diag.resilient_at_tau_iso = Some(diagnostics::is_matching_resilient(&core)?);
            }
        }
        if diag.isolated_triangles_at_tau.unwrap_or(0) > 0 && class == ClassLabel::GStar {
            self.violations
                .push("isolated triangle at tau but the final graph is G_star".into());
        }
        // With d universal vertices and f = k - d, the other n-k+f vertices
        // carry no f-matching, forcing an independent set above n-k-f.
        let d = diag.degree_n_minus_1 as i64;
        if ind.exact && k <= n / 2 && d < k as i64 {
            let f = k as i64 - d;
            if (ind.value as i64) <= n as i64 - k as i64 - f {
                self.violations.push(format!(
                    "independence number {} not above n-k-f = {}",
                    ind.value,
                    n as i64 - k as i64 - f
                ));
            }
        }

        let trace = self.steps.take().map(|steps| Trace { n, k, seed, steps });
        let mut root_separation_hypothesis = None;
        let charges = match (opts.mode, &trace, &self.g_at_tau, &self.m_at_tau) {
            (Mode::Charges, Some(tr), Some(gt), Some(mt)) => {
                let report = charges::analyze(gt, mt, k, self.tau_nu.unwrap_or(0), tr, &self.g)?;
                root_separation_hypothesis = Some(report.root_separation_hypothesis);
                // The literal hypothesis lets the edge that charges m_v from
                // b count as an edge to B outside the root, and then {v, b}
                // can close a triangle; the post-step form closes that gap.
                if report.root_separation_hypothesis_post
                    && report.acyclic_at_tau
                    && class != ClassLabel::GStar
                {
                    self.violations.push(format!(
                        "hitting-time hypothesis held with G(tau) acyclic, but the outcome is {class}"
                    ));
                }
                self.violations.extend(report.violations.iter().cloned());
                Some(report)
            }
            _ => None,
        };

        let record = TrialRecord {
            n,
            k,
            seed,
            tau_nu: self.tau_nu.map(|t| t as u64),
            tau_iso: self.tau_iso.map(|t| t as u64),
            accepted_count: self.accepted_count as u64,
            final_edge_count: self.g.m() as u64,
            classification: class,
            complete: self.g.m() == pair_count(n),
            diagnostics: diag,
            root_separation_hypothesis,
            violations: self.violations,
        };
        Ok(Run {
            record,
            graph: self.g,
            trace,
            matching_at_tau: self.m_at_tau,
            charges,
        })
    }
}

/// Runs the process on a fixed ordering of all pairs.
pub fn run_ordering(perm: &EdgePermutation, k: usize, opts: &RunOptions) -> Result<Run> {
    let mut state = ProcessState::new(perm.n(), k)?;
    if opts.mode.keeps_trace() {
        state = state.with_trace();
    }
    if opts.verify_steps {
        state = state.with_verification();
    }
    for e in perm.iter() {
        state.step(e)?;
    }
    state.finish(perm.seed(), opts)
}

pub fn run_process_with(n: usize, k: usize, seed: u64, opts: &RunOptions) -> Result<Run> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let perm = EdgePermutation::random(n, seed)?;
    run_ordering(&perm, k, opts)
}

/// Single seeded trial with default options.
pub fn run_process(n: usize, k: usize, seed: u64) -> Result<TrialRecord> {
    Ok(run_process_with(n, k, seed, &RunOptions::default())?.record)
}
