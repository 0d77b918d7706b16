//! Seeded batches of trials, aggregation and report files.
//!
//! Per-trial seeds come from [`trial_seed`], so any trial of a batch can be
//! rerun on its own with `run --seed`. Trials may run on any number of
//! threads; results are collected by trial index, so reports do not depend
//! on the schedule.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{hitting_prediction, ClassLabel};
use crate::error::{Error, Result};
use crate::graph::MAX_PERMUTATION_VERTICES;
use crate::independence::DEFAULT_NODE_BUDGET;
use crate::process::{run_process_with, Mode, RunOptions, TrialRecord};

/// Environment variable naming the directory for reports when no output
/// path is given.
pub const OUTPUT_DIR_ENV: &str = "KMFREE_OUTPUT_DIR";

const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finaliser applied to `base + (index + 1) * SEED_STRIDE`.
/// The stride is odd and the finaliser is a bijection, so the seeds of one
/// batch are pairwise distinct.
pub fn trial_seed(base_seed: u64, index: u64) -> u64 {
    let mut z = base_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(SEED_STRIDE));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// How k is chosen from n.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum KSchedule {
    Fixed(usize),
    /// floor(sqrt n)
    Sqrt,
    /// floor(c n)
    Linear(f64),
    /// k = (n - f) / 2, i.e. deficiency f = n - 2k.
    Clique(usize),
}

impl KSchedule {
    pub fn resolve(&self, n: usize) -> Result<usize> {
        let k = match *self {
            KSchedule::Fixed(k) => k,
            KSchedule::Sqrt => (n as f64).sqrt().floor() as usize,
            KSchedule::Linear(c) => (c * n as f64).floor() as usize,
            KSchedule::Clique(f) => {
                if f > n || !(n - f).is_multiple_of(2) {
                    return Err(Error::InvalidParameter(format!(
                        "clique:{f} needs n - f even and nonnegative (n = {n})"
                    )));
                }
                (n - f) / 2
            }
        };
        if k == 0 {
            return Err(Error::InvalidParameter(format!(
                "k schedule {self} gives k = 0 at n = {n}"
            )));
        }
        Ok(k)
    }
}

impl fmt::Display for KSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KSchedule::Fixed(k) => write!(f, "{k}"),
            KSchedule::Sqrt => f.write_str("sqrt"),
            KSchedule::Linear(c) => write!(f, "linear:{c}"),
            KSchedule::Clique(d) => write!(f, "clique:{d}"),
        }
    }
}

impl FromStr for KSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad k schedule {s:?}"));
        let s = s.trim();
        if s == "sqrt" {
            return Ok(KSchedule::Sqrt);
        }
        if let Some(c) = s.strip_prefix("linear:") {
            let c: f64 = c.parse().map_err(|_| bad())?;
            if !(c.is_finite() && c > 0.0) {
                return Err(bad());
            }
            return Ok(KSchedule::Linear(c));
        }
        if let Some(f) = s.strip_prefix("clique:") {
            return Ok(KSchedule::Clique(f.parse().map_err(|_| bad())?));
        }
        s.parse().map(KSchedule::Fixed).map_err(|_| bad())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::InvalidParameter(format!(
                "unknown format {s:?} (csv or json)"
            ))),
        }
    }
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: KSchedule,
    pub trials: u64,
    pub base_seed: u64,
    pub mode: Mode,
    /// Half-width parameter of the isolated-vertex hitting window.
    pub h: f64,
    pub independence_budget: u64,
    /// Worker threads; None lets rayon decide.
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 100,
            k: KSchedule::Sqrt,
            trials: 10,
            base_seed: 0,
            mode: Mode::Summary,
            h: 3.0,
            independence_budget: DEFAULT_NODE_BUDGET,
            threads: None,
            output: None,
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<usize> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.n < 2 || self.n > MAX_PERMUTATION_VERTICES {
            return Err(Error::InvalidParameter(format!(
                "n must be in 2..={MAX_PERMUTATION_VERTICES}, got {}",
                self.n
            )));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "h must be positive, got {}",
                self.h
            )));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidParameter("threads must be positive".into()));
        }
        self.k.resolve(self.n)
    }

    fn run_options(&self) -> RunOptions {
        RunOptions {
            mode: self.mode,
            independence_budget: self.independence_budget,
            verify_steps: false,
        }
    }

    /// Where the report goes: the explicit path, else a file in
    /// `$KMFREE_OUTPUT_DIR`, else nowhere (the caller prints it).
    pub fn output_path(&self) -> Option<PathBuf> {
        if let Some(p) = &self.output {
            return Some(p.clone());
        }
        let dir = std::env::var_os(OUTPUT_DIR_ENV)?;
        let k = self
            .k
            .resolve(self.n)
            .map_or_else(|_| self.k.to_string(), |k| k.to_string());
        Some(Path::new(&dir).join(format!(
            "kmfree_n{}_k{}_seed{}.{}",
            self.n,
            k,
            self.base_seed,
            self.format.extension()
        )))
    }
}

/// Parses a flat `key = value` file. `n` may list several sizes separated by
/// commas, giving one configuration each. Blank lines and `#` comments are
/// ignored.
pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<ExperimentConfig>> {
    let mut cfg = ExperimentConfig::default();
    let mut sizes = vec![cfg.n];
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let bad = |msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line: line_no,
            msg,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key = value, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let num = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| bad(format!("{key}: not an integer: {v:?}")))
        };
        match key {
            "n" => {
                sizes = value
                    .split(',')
                    .map(|s| num(s.trim()).map(|x| x as usize))
                    .collect::<Result<_>>()?;
            }
            "k" => cfg.k = value.parse().map_err(|e: Error| bad(e.to_string()))?,
            "trials" => cfg.trials = num(value)?,
            "base_seed" | "seed" => cfg.base_seed = num(value)?,
            "mode" => cfg.mode = value.parse().map_err(|e: Error| bad(e.to_string()))?,
            "h" => {
                cfg.h = value
                    .parse()
                    .map_err(|_| bad(format!("h: not a number: {value:?}")))?
            }
            "independence_budget" => cfg.independence_budget = num(value)?,
            "threads" => cfg.threads = Some(num(value)? as usize),
            "output" => cfg.output = Some(PathBuf::from(value)),
            "format" => cfg.format = value.parse().map_err(|e: Error| bad(e.to_string()))?,
            _ => return Err(bad(format!("unknown key {key:?}"))),
        }
    }
    Ok(sizes
        .into_iter()
        .map(|n| ExperimentConfig { n, ..cfg.clone() })
        .collect())
}

pub fn load_config(path: &Path) -> Result<Vec<ExperimentConfig>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

/// Runs every trial of `cfg`, in trial order.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    let k = cfg.validate()?;
    let opts = cfg.run_options();
    let work = || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| Ok(run_process_with(cfg.n, k, trial_seed(cfg.base_seed, i), &opts)?.record))
            .collect::<Result<Vec<_>>>()
    };
    match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot start {t} threads: {e}")))?
            .install(work),
        None => work(),
    }
}

/// One row of a report. Optional statistics are empty when no trial
/// defined them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub n: usize,
    pub k: usize,
    pub k_schedule: String,
    pub mode: Mode,
    pub base_seed: u64,
    pub trials: u64,
    pub frac_g_star: f64,
    pub frac_g_clique: f64,
    pub frac_other: f64,
    pub mean_tau_nu: Option<f64>,
    pub sd_tau_nu: Option<f64>,
    pub mean_tau_iso: Option<f64>,
    pub sd_tau_iso: Option<f64>,
    pub mean_final_edges: f64,
    pub sd_final_edges: f64,
    pub mean_isolated: f64,
    pub sd_isolated: f64,
    pub mean_deg_n_minus_1: f64,
    pub sd_deg_n_minus_1: f64,
    pub mean_independence: f64,
    pub sd_independence: f64,
    pub frac_independence_exact: f64,
    pub frac_tau_nu_le_2k: f64,
    pub h: f64,
    pub t_minus: Option<u64>,
    pub t_plus: Option<u64>,
    pub frac_tau_iso_in_window: Option<f64>,
    pub frac_root_separation: Option<f64>,
    pub violations: u64,
    pub status: String,
}

/// Column names, in order; JSON uses the same keys.
pub const REPORT_HEADER: [&str; 30] = [
    "n",
    "k",
    "k_schedule",
    "mode",
    "base_seed",
    "trials",
    "frac_g_star",
    "frac_g_clique",
    "frac_other",
    "mean_tau_nu",
    "sd_tau_nu",
    "mean_tau_iso",
    "sd_tau_iso",
    "mean_final_edges",
    "sd_final_edges",
    "mean_isolated",
    "sd_isolated",
    "mean_deg_n_minus_1",
    "sd_deg_n_minus_1",
    "mean_independence",
    "sd_independence",
    "frac_independence_exact",
    "frac_tau_nu_le_2k",
    "h",
    "t_minus",
    "t_plus",
    "frac_tau_iso_in_window",
    "frac_root_separation",
    "violations",
    "status",
];

/// Sample mean and standard deviation (n - 1 denominator).
fn mean_sd(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Some((m, sd))
}

fn fraction(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

pub fn aggregate(cfg: &ExperimentConfig, records: &[TrialRecord]) -> Result<AggregateReport> {
    let k = cfg.validate()?;
    let n = cfg.n;
    let total = records.len();
    let count = |c: ClassLabel| records.iter().filter(|r| r.classification == c).count();
    let col =
        |f: &dyn Fn(&TrialRecord) -> Option<f64>| -> Vec<f64> { records.iter().filter_map(f).collect() };
    let tau_nu = mean_sd(&col(&|r| r.tau_nu.map(|t| t as f64)));
    let tau_iso = mean_sd(&col(&|r| r.tau_iso.map(|t| t as f64)));
    let whole = |f: &dyn Fn(&TrialRecord) -> f64| mean_sd(&col(&|r| Some(f(r)))).unwrap_or((0.0, 0.0));
    let edges = whole(&|r| r.final_edge_count as f64);
    let iso = whole(&|r| r.diagnostics.isolated_vertices as f64);
    let deg = whole(&|r| r.diagnostics.degree_n_minus_1 as f64);
    let ind = whole(&|r| r.diagnostics.independence as f64);
    let window = if n >= 2 * k {
        Some(hitting_prediction(n, n - 2 * k, cfg.h)?)
    } else {
        None
    };
    let in_window = window.map(|w| {
        let hits = records
            .iter()
            .filter(|r| r.tau_iso.is_some_and(|t| w.t_minus <= t && t <= w.t_plus))
            .count();
        fraction(hits, total)
    });
    let separated: Vec<bool> = records
        .iter()
        .filter_map(|r| r.root_separation_hypothesis)
        .collect();
    let violations: u64 = records.iter().map(|r| r.violations.len() as u64).sum();
    Ok(AggregateReport {
        n,
        k,
        k_schedule: cfg.k.to_string(),
        mode: cfg.mode,
        base_seed: cfg.base_seed,
        trials: total as u64,
        frac_g_star: fraction(count(ClassLabel::GStar), total),
        frac_g_clique: fraction(count(ClassLabel::GClique), total),
        frac_other: fraction(count(ClassLabel::Other), total),
        mean_tau_nu: tau_nu.map(|x| x.0),
        sd_tau_nu: tau_nu.map(|x| x.1),
        mean_tau_iso: tau_iso.map(|x| x.0),
        sd_tau_iso: tau_iso.map(|x| x.1),
        mean_final_edges: edges.0,
        sd_final_edges: edges.1,
        mean_isolated: iso.0,
        sd_isolated: iso.1,
        mean_deg_n_minus_1: deg.0,
        sd_deg_n_minus_1: deg.1,
        mean_independence: ind.0,
        sd_independence: ind.1,
        frac_independence_exact: fraction(
            records
                .iter()
                .filter(|r| r.diagnostics.independence_exact)
                .count(),
            total,
        ),
        frac_tau_nu_le_2k: fraction(
            records
                .iter()
                .filter(|r| r.tau_nu.is_some_and(|t| t <= 2 * k as u64))
                .count(),
            total,
        ),
        h: cfg.h,
        t_minus: window.map(|w| w.t_minus),
        t_plus: window.map(|w| w.t_plus),
        frac_tau_iso_in_window: in_window,
        frac_root_separation: (!separated.is_empty())
            .then(|| fraction(separated.iter().filter(|&&b| b).count(), separated.len())),
        violations,
        status: if violations == 0 { "pass" } else { "fail" }.into(),
    })
}

/// Runs, aggregates and, when an output path is configured, writes the
/// one-row report.
pub fn run_batch(cfg: &ExperimentConfig) -> Result<AggregateReport> {
    cfg.validate()?;
    let records = run_trials(cfg)?;
    let report = aggregate(cfg, &records)?;
    if let Some(path) = cfg.output_path() {
        write_report(std::slice::from_ref(&report), cfg.format, &path)?;
    }
    Ok(report)
}

/// Like C's `%g` with 6 significant digits.
pub fn format_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa.to_string()), exp.abs())
    } else {
        trim(format!("{x:.*}", (5 - exp) as usize))
    }
}

fn csv_row(r: &AggregateReport) -> Vec<String> {
    let g = |x: f64| format_g6(x);
    let og = |x: Option<f64>| x.map(format_g6).unwrap_or_default();
    let ou = |x: Option<u64>| x.map(|v| v.to_string()).unwrap_or_default();
    let mode = match r.mode {
        Mode::Summary => "summary",
        Mode::Trace => "trace",
        Mode::Charges => "charges",
    };
    vec![
        r.n.to_string(),
        r.k.to_string(),
        r.k_schedule.clone(),
        mode.into(),
        r.base_seed.to_string(),
        r.trials.to_string(),
        g(r.frac_g_star),
        g(r.frac_g_clique),
        g(r.frac_other),
        og(r.mean_tau_nu),
        og(r.sd_tau_nu),
        og(r.mean_tau_iso),
        og(r.sd_tau_iso),
        g(r.mean_final_edges),
        g(r.sd_final_edges),
        g(r.mean_isolated),
        g(r.sd_isolated),
        g(r.mean_deg_n_minus_1),
        g(r.sd_deg_n_minus_1),
        g(r.mean_independence),
        g(r.sd_independence),
        g(r.frac_independence_exact),
        g(r.frac_tau_nu_le_2k),
        g(r.h),
        ou(r.t_minus),
        ou(r.t_plus),
        og(r.frac_tau_iso_in_window),
        og(r.frac_root_separation),
        r.violations.to_string(),
        r.status.clone(),
    ]
}

pub fn render_report(reports: &[AggregateReport], format: OutputFormat) -> Result<String> {
    let io = |e: std::io::Error| Error::io("<report>", e);
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let to_io = |e: csv::Error| io(std::io::Error::other(e));
            w.write_record(REPORT_HEADER).map_err(to_io)?;
            for r in reports {
                w.write_record(csv_row(r)).map_err(to_io)?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| io(std::io::Error::other(e.to_string())))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(reports).map_err(|e| io(std::io::Error::other(e)))?;
            s.push('\n');
            Ok(s)
        }
    }
}

pub fn write_report(reports: &[AggregateReport], format: OutputFormat, path: &Path) -> Result<()> {
    let text = render_report(reports, format)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_json_report(path: &Path) -> Result<Vec<AggregateReport>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        msg: e.to_string(),
    })
}
