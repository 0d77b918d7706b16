use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use kmfree::diagnostics::{self, erdos_gallai_bound};
use kmfree::error::Error;
use kmfree::exhaustive::process_exhaustive;
use kmfree::graph::Graph;
use kmfree::harness::{
    aggregate, load_config, render_report, run_trials, write_report, ExperimentConfig, KSchedule,
    OutputFormat,
};
use kmfree::independence::{independence_number, DEFAULT_NODE_BUDGET};
use kmfree::matching::cross_check_all_graphs;
use kmfree::process::{run_process_with, Mode, RunOptions, TrialRecord};

#[derive(Parser)]
#[command(name = "kmfree", version, about = "Random greedy k-matching-free process")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trial and print its record.
    Run(RunArgs),
    /// Run seeded batches and write an aggregate report.
    Batch(BatchArgs),
    /// Classify a graph read from an edge-list file.
    Classify {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
        independence_budget: u64,
    },
    /// Exact outcome distribution for tiny n, plus a matching cross-check.
    Oracle {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Also compare the blossom matching with brute force on every
        /// labelled graph with this many vertices (at most 7).
        #[arg(long)]
        matching: Option<usize>,
    },
    /// Print the Erdos-Gallai edge bound.
    EgBound {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: KSchedule,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "summary")]
    mode: Mode,
    /// Print the step trace after the record.
    #[arg(long)]
    trace: bool,
    /// Write the step trace to a file instead.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    independence_budget: u64,
}

#[derive(Args)]
struct BatchArgs {
    /// Flat key = value file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// One size or a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long)]
    k: Option<KSchedule>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    mode: Option<Mode>,
    /// Shorthand for --mode charges.
    #[arg(long)]
    charges: bool,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    independence_budget: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    format: Option<OutputFormat>,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn print_record(out: &mut impl Write, r: &TrialRecord) -> io::Result<()> {
    let opt = |x: Option<u64>| x.map_or("none".to_string(), |v| v.to_string());
    writeln!(out, "n: {}", r.n)?;
    writeln!(out, "k: {}", r.k)?;
    writeln!(out, "seed: {}", r.seed)?;
    writeln!(out, "tau_nu: {}", opt(r.tau_nu))?;
    writeln!(out, "tau_iso: {}", opt(r.tau_iso))?;
    writeln!(out, "accepted: {}", r.accepted_count)?;
    writeln!(out, "edges: {}", r.final_edge_count)?;
    let d = &r.diagnostics;
    writeln!(out, "isolated: {}", d.isolated_vertices)?;
    writeln!(out, "degree_n_minus_1: {}", d.degree_n_minus_1)?;
    writeln!(
        out,
        "independence: {}{}",
        d.independence,
        if d.independence_exact {
            ""
        } else {
            " (lower bound)"
        }
    )?;
    if let Some(h) = r.root_separation_hypothesis {
        writeln!(out, "root_separation_hypothesis: {h}")?;
    }
    writeln!(out, "violations: {}", r.violations.len())?;
    for v in &r.violations {
        writeln!(out, "  {v}")?;
    }
    let shape = if r.complete { " (complete graph)" } else { "" };
    writeln!(out, "classification: {}{shape}", r.classification)
}

fn cmd_run(a: RunArgs) -> anyhow::Result<()> {
    let k = a.k.resolve(a.n)?;
    let mut mode = a.mode;
    if (a.trace || a.trace_out.is_some()) && mode == Mode::Summary {
        mode = Mode::Trace;
    }
    let opts = RunOptions {
        mode,
        independence_budget: a.independence_budget,
        verify_steps: false,
    };
    let run = run_process_with(a.n, k, a.seed, &opts)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if a.json {
        serde_json::to_writer_pretty(&mut out, &run.record)?;
        writeln!(out)?;
    } else {
        print_record(&mut out, &run.record)?;
    }
    if let Some(trace) = &run.trace {
        if let Some(path) = &a.trace_out {
            let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            trace
                .write(io::BufWriter::new(f))
                .with_context(|| format!("writing {}", path.display()))?;
        } else if a.trace {
            writeln!(out)?;
            trace.write(&mut out)?;
        }
    }
    Ok(())
}

fn batch_configs(a: &BatchArgs) -> kmfree::Result<Vec<ExperimentConfig>> {
    let mut cfgs = match &a.config {
        Some(p) => load_config(p)?,
        None => vec![ExperimentConfig::default()],
    };
    if !a.n.is_empty() {
        let base = cfgs[0].clone();
        cfgs =
            a.n.iter()
                .map(|&n| ExperimentConfig { n, ..base.clone() })
                .collect();
    }
    for c in &mut cfgs {
        if let Some(k) = a.k {
            c.k = k;
        }
        if let Some(t) = a.trials {
            c.trials = t;
        }
        if let Some(s) = a.base_seed {
            c.base_seed = s;
        }
        if let Some(m) = a.mode {
            c.mode = m;
        }
        if a.charges {
            c.mode = Mode::Charges;
        }
        if let Some(h) = a.h {
            c.h = h;
        }
        if let Some(b) = a.independence_budget {
            c.independence_budget = b;
        }
        if a.threads.is_some() {
            c.threads = a.threads;
        }
        if let Some(f) = a.format {
            c.format = f;
        }
        if a.output.is_some() {
            c.output = a.output.clone();
        }
        c.validate()?;
    }
    Ok(cfgs)
}

fn cmd_batch(a: BatchArgs) -> anyhow::Result<()> {
    let cfgs = batch_configs(&a)?;
    let mut reports = Vec::new();
    for c in &cfgs {
        let records = run_trials(c)?;
        for r in &records {
            for v in &r.violations {
                eprintln!("violation (n={}, k={}, seed={}): {v}", r.n, r.k, r.seed);
            }
        }
        reports.push(aggregate(c, &records)?);
    }
    let format = cfgs[0].format;
    match cfgs[0].output_path() {
        Some(path) => write_report(&reports, format, &path)?,
        None => print!("{}", render_report(&reports, format)?),
    }
    let failing = reports.iter().filter(|r| r.status != "pass").count();
    if failing > 0 {
        anyhow::bail!("{failing} configuration(s) recorded invariant violations");
    }
    Ok(())
}

fn cmd_classify(k: usize, input: PathBuf, budget: u64) -> anyhow::Result<()> {
    let g = Graph::read_edge_list(&input)?;
    let c = diagnostics::classify_extremal(&g, k);
    println!("{}", c.label);
    println!("witness: {:?}", c.witness);
    println!("n: {}", g.n());
    println!("edges: {}", g.m());
    println!("isolated: {}", g.isolated_count());
    println!("degree_n_minus_1: {}", diagnostics::count_degree_n_minus_1(&g));
    println!("cherries: {}", diagnostics::count_cherries(&g));
    println!(
        "isolated_triangles: {}",
        diagnostics::count_isolated_triangles(&g)
    );
    println!(
        "isolated_two_paths: {}",
        diagnostics::count_isolated_two_paths(&g)
    );
    println!("dangerous: {}", diagnostics::dangerous_vertices(&g).len());
    let ind = independence_number(&g, budget);
    println!(
        "independence: {}{}",
        ind.value,
        if ind.exact { "" } else { " (lower bound)" }
    );
    Ok(())
}

fn cmd_oracle(n: usize, k: usize, matching: Option<usize>) -> anyhow::Result<()> {
    let d = process_exhaustive(n, k)?;
    println!("orderings: {}", d.total_orderings);
    for c in &d.classes {
        let edges: Vec<String> = c.representative.iter().map(|e| e.to_string()).collect();
        println!(
            "{} edges={} orderings={} probability={:.6} [{}]",
            c.label,
            c.edge_count,
            c.orderings,
            c.probability,
            edges.join(" ")
        );
    }
    if let Some(m) = matching {
        let (checked, mismatches) = cross_check_all_graphs(m)?;
        println!("matching: {checked} graphs on {m} vertices, {mismatches} mismatches");
        if mismatches > 0 {
            anyhow::bail!("maximum matching disagrees with brute force");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Command::Run(a) => cmd_run(a),
        Command::Batch(a) => cmd_batch(a),
        Command::Classify {
            k,
            input,
            independence_budget,
        } => cmd_classify(k, input, independence_budget),
        Command::Oracle { n, k, matching } => cmd_oracle(n, k, matching),
        Command::EgBound { n, k } => erdos_gallai_bound(n, k)
            .map(|b| println!("{b}"))
            .map_err(Into::into),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kmfree: {e:#}");
            // Bad input is a usage error, like an unknown flag.
            let usage = matches!(
                e.downcast_ref::<Error>(),
                Some(Error::Parse { .. } | Error::InvalidParameter(_))
            );
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
