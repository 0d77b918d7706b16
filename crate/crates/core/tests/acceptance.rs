//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the binary exits non-zero if any of them fails.

use std::io::Write;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kmfree::charges::{init_charges, ChargeTracker};
use kmfree::diagnostics::{self, erdos_gallai_bound, reference, ClassLabel};
use kmfree::exhaustive::process_exhaustive;
use kmfree::graph::Graph;
use kmfree::harness::{aggregate, run_trials, trial_seed, AggregateReport, ExperimentConfig, KSchedule};
use kmfree::independence::{independence_brute_force, independence_number};
use kmfree::matching::{cross_check_all_graphs, is_saturated, max_matching, nu_brute_force};
use kmfree::process::{run_process, run_process_with, Mode, Run, RunOptions, TrialRecord};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn batch(
    n: usize,
    k: KSchedule,
    trials: u64,
    mode: Mode,
    budget: u64,
) -> (Vec<TrialRecord>, AggregateReport) {
    let cfg = ExperimentConfig {
        n,
        k,
        trials,
        base_seed: 1,
        mode,
        independence_budget: budget,
        ..ExperimentConfig::default()
    };
    let records = run_trials(&cfg).expect("valid configuration");
    let report = aggregate(&cfg, &records).expect("valid configuration");
    (records, report)
}

fn no_violations(records: &[TrialRecord]) -> Result<(), String> {
    match records.iter().find(|r| !r.violations.is_empty()) {
        None => Ok(()),
        Some(r) => Err(format!(
            "invariant violation (n={}, k={}, seed={}): {}",
            r.n, r.k, r.seed, r.violations[0]
        )),
    }
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut g = Graph::new_empty(n).unwrap();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                g.add_edge(a, b).unwrap();
            }
        }
    }
    g
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (checked, mismatches) = cross_check_all_graphs(6).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    check(
        checked == 32_768 && mismatches == 0 && secs < 60.0,
        format!("{checked} graphs, {mismatches} mismatches, {secs:.2}s (limit 60s)"),
    )
}

fn criterion_2() -> Outcome {
    let exact = process_exhaustive(4, 2).map_err(|e| e.to_string())?;
    let labels: Vec<ClassLabel> = exact.classes.iter().map(|c| c.label).collect();
    if exact.total_orderings != 720
        || !labels
            .iter()
            .all(|&l| l == ClassLabel::GStar || l == ClassLabel::GClique)
    {
        return Err(format!("unexpected exact distribution {:?}", exact.classes));
    }
    let trials = 10_000u64;
    let mut star = 0u64;
    let mut clique = 0u64;
    for i in 0..trials {
        let r = run_process(4, 2, trial_seed(1, i)).map_err(|e| e.to_string())?;
        no_violations(std::slice::from_ref(&r))?;
        match r.classification {
            ClassLabel::GStar => star += 1,
            ClassLabel::GClique => clique += 1,
            ClassLabel::Other => return Err(format!("seed {} gave a graph outside both classes", r.seed)),
        }
    }
    let mut detail = Vec::new();
    let mut ok = true;
    for (label, hits) in [(ClassLabel::GStar, star), (ClassLabel::GClique, clique)] {
        let p = exact.probability_of(label);
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        let freq = hits as f64 / trials as f64;
        ok &= (freq - p).abs() <= 3.0 * se;
        detail.push(format!(
            "{label}: exact {p:.4}, observed {freq:.4} (3se {:.4})",
            3.0 * se
        ));
    }

    let empty = process_exhaustive(3, 1).map_err(|e| e.to_string())?;
    let ok_empty =
        empty.classes.len() == 1 && empty.classes[0].edge_count == 0 && empty.classes[0].orderings == 6;
    let tri = process_exhaustive(3, 2).map_err(|e| e.to_string())?;
    let ok_tri = tri.classes.len() == 1 && tri.classes[0].edge_count == 3 && tri.classes[0].orderings == 6;
    detail.push(format!(
        "(3,1) all empty: {ok_empty}, (3,2) all triangle: {ok_tri}"
    ));
    check(ok && ok_empty && ok_tri, detail.join("; "))
}

/// Replays a trace and checks every invariant from outside the process.
fn audit_run(run: &Run) -> Result<(), String> {
    let r = &run.record;
    let (n, k) = (r.n, r.k);
    let trace = run.trace.as_ref().ok_or("run has no trace")?;
    let bound = erdos_gallai_bound(n, k).map_err(|e| e.to_string())?;
    let tau = r.tau_nu.map(|t| t as usize);
    let mut g = Graph::new_empty(n).unwrap();
    let mut g_tau = None;
    let mut offers_before_tau = Vec::new();
    for (i, s) in trace.steps.iter().enumerate() {
        let t = i + 1;
        if tau.is_none_or(|tau| t <= tau) && !s.accepted {
            return Err(format!("step {t}: rejected before tau"));
        }
        if s.accepted {
            g.add_edge(s.edge.u, s.edge.v).unwrap();
            if tau.is_none_or(|tau| t <= tau) {
                offers_before_tau.push((s.edge, t as u64));
            }
        }
        if g.m() as u64 > bound {
            return Err(format!("step {t}: {} edges above the bound {bound}", g.m()));
        }
        if Some(t) == tau {
            g_tau = Some(g.clone());
        }
    }
    if !is_saturated(&g, k).map_err(|e| e.to_string())? {
        return Err("final graph not saturated".into());
    }
    if k <= n / 2 {
        let nu = if n <= 12 {
            nu_brute_force(&g).unwrap()
        } else {
            max_matching(&g).size()
        };
        if nu != k - 1 {
            return Err(format!("final matching number {nu}, expected {}", k - 1));
        }
    }

    // C(t-1) refines C(t): replay the charge tracker and compare consecutive
    // charge partitions.
    let (Some(tau), Some(g_tau), Some(m_tau)) = (tau, g_tau, run.matching_at_tau.as_ref()) else {
        return Ok(());
    };
    let state = init_charges(&g_tau, m_tau, k, &offers_before_tau, tau as u64).map_err(|e| e.to_string())?;
    let e_tau = tau.checked_sub(1).map(|i| trace.steps[i].edge);
    let mut tracker = ChargeTracker::new(state, e_tau);
    let mut prev = tracker.view().c;
    for (i, s) in trace.steps.iter().enumerate().skip(tau) {
        tracker.observe(i as u64 + 1, s.edge, s.accepted);
        let cur = tracker.view().c;
        let mut block = vec![usize::MAX; n];
        for (j, b) in cur.iter().enumerate() {
            for &v in b {
                block[v] = j;
            }
        }
        for b in &prev {
            let j = block[b[0]];
            if j == usize::MAX || b.iter().any(|&v| block[v] != j) {
                return Err(format!("step {}: C(t-1) does not refine C(t)", i + 1));
            }
        }
        prev = cur;
    }
    Ok(())
}

fn criterion_3() -> Outcome {
    let mut runs = 0;
    let mut sizes: Vec<(usize, usize)> = Vec::new();
    for n in [4, 5, 6, 7, 8, 9, 10, 11, 12, 15, 20, 30] {
        for k in 1..=n {
            sizes.push((n, k));
        }
    }
    for n in [60, 100] {
        for k in [
            2,
            5,
            (n as f64).sqrt() as usize,
            n / 4,
            n / 2 - 1,
            n / 2,
            n / 2 + 3,
        ] {
            sizes.push((n, k));
        }
    }
    for &(n, k) in &sizes {
        let small = n <= 12;
        let opts = RunOptions {
            mode: Mode::Charges,
            independence_budget: 5_000,
            verify_steps: small,
        };
        for i in 0..if small { 6 } else { 3 } {
            let run = run_process_with(n, k, trial_seed(3, i), &opts).map_err(|e| e.to_string())?;
            no_violations(std::slice::from_ref(&run.record))?;
            audit_run(&run).map_err(|e| format!("n={n} k={k} seed={}: {e}", run.record.seed))?;
            runs += 1;
        }
    }
    // Larger instances: the always-on checks only.
    let mut big = 0;
    for (n, k) in [(200, 14), (400, 20), (300, 100), (300, 149), (301, 200)] {
        let (records, _) = batch(n, KSchedule::Fixed(k), 5, Mode::Charges, 2_000);
        no_violations(&records)?;
        big += records.len();
    }
    Ok(format!(
        "{runs} audited runs, {big} larger instrumented runs, 0 violations"
    ))
}

fn criterion_4() -> Outcome {
    let mut fracs = Vec::new();
    for n in [200, 400, 800] {
        let (records, rep) = batch(n, KSchedule::Sqrt, 100, Mode::Charges, 2_000);
        no_violations(&records)?;
        fracs.push((n, rep.frac_g_star));
    }
    let each = fracs.iter().all(|&(_, f)| f >= 0.90);
    let trend = fracs.windows(2).all(|w| w[1].1 >= w[0].1 - 0.05);
    let shown: Vec<String> = fracs.iter().map(|(n, f)| format!("n={n}: {f:.2}")).collect();
    check(
        each && trend,
        format!(
            "G_star fraction {} (need >= 0.90, non-decreasing within 0.05)",
            shown.join(", ")
        ),
    )
}

fn criterion_5() -> Outcome {
    let (pos_records, pos) = batch(1000, KSchedule::Clique(2), 50, Mode::Summary, 2_000);
    no_violations(&pos_records)?;
    let (neg_records, neg) = batch(1000, KSchedule::Clique(60), 50, Mode::Summary, 2_000);
    no_violations(&neg_records)?;
    check(
        pos.frac_g_clique >= 0.90 && neg.frac_g_clique <= 0.10,
        format!(
            "f=2 (k={}): G_clique {:.2} (need >= 0.90); f=60 (k={}): G_clique {:.2} (need <= 0.10)",
            pos.k, pos.frac_g_clique, neg.k, neg.frac_g_clique
        ),
    )
}

fn criterion_6() -> Outcome {
    let (a_records, a) = batch(1000, KSchedule::Fixed(30), 100, Mode::Summary, 2_000);
    no_violations(&a_records)?;
    let (b_records, b) = batch(1000, KSchedule::Clique(4), 100, Mode::Summary, 2_000);
    no_violations(&b_records)?;
    let window = b.frac_tau_iso_in_window.unwrap_or(0.0);
    check(
        a.frac_tau_nu_le_2k >= 0.95 && window >= 0.90,
        format!(
            "k=30: tau_nu <= 2k in {:.2} (need >= 0.95); f=4, h=3: tau_iso in [{}, {}] in {window:.2} (need >= 0.90)",
            a.frac_tau_nu_le_2k,
            b.t_minus.unwrap_or(0),
            b.t_plus.unwrap_or(0)
        ),
    )
}

fn criterion_7() -> Outcome {
    let (n, k) = (1000usize, 50usize);
    let (records, rep) = batch(n, KSchedule::Fixed(k), 50, Mode::Summary, 2_000);
    no_violations(&records)?;
    let deg_need = 0.8 * k as f64;
    let ind_need = n as f64 - 1.5 * k as f64;
    check(
        rep.mean_deg_n_minus_1 >= deg_need && rep.mean_independence >= ind_need,
        format!(
            "mean degree-(n-1) count {:.2} (need >= {deg_need}), mean independence {:.2} (need >= {ind_need})",
            rep.mean_deg_n_minus_1, rep.mean_independence
        ),
    )
}

fn criterion_8() -> Outcome {
    let (n, k) = (600usize, 240usize);
    let (records, rep) = batch(n, KSchedule::Fixed(k), 50, Mode::Summary, 2_000);
    no_violations(&records)?;
    let limit = 0.9 * (n - 2 * k) as f64;

    // Obstruction: an isolated triangle at tau rules out G_star.
    let mut instrumented = 0;
    let mut with_triangle = 0;
    let mut exceptions = 0;
    // Denser G(tau) (larger k/n) makes triangles at tau common enough to test.
    let configs = [
        (12, 4, 200),
        (16, 5, 200),
        (20, 6, 200),
        (30, 9, 200),
        (40, 10, 100),
        (60, 15, 100),
        (100, 10, 40),
        (200, 14, 40),
        (400, 20, 40),
    ];
    for (n, k, trials) in configs {
        let (recs, _) = batch(n, KSchedule::Fixed(k), trials, Mode::Charges, 2_000);
        no_violations(&recs)?;
        for r in &recs {
            instrumented += 1;
            if r.diagnostics.isolated_triangles_at_tau.unwrap_or(0) > 0 {
                with_triangle += 1;
                if r.classification == ClassLabel::GStar {
                    exceptions += 1;
                }
            }
        }
    }
    check(
        rep.mean_isolated <= limit && exceptions == 0,
        format!(
            "mean isolated {:.2} (need <= {limit}); {with_triangle} of {instrumented} instrumented runs had an isolated triangle at tau, {exceptions} ended G_star",
            rep.mean_isolated
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut mismatches = Vec::new();
    for i in 0..500 {
        let n = rng.random_range(1..=30);
        // Sparse graphs exercise the low-degree structure.
        let p = rng.random_range(0.0..(4.0 / n as f64).min(1.0));
        let g = random_graph(&mut rng, n, p);
        if diagnostics::dangerous_vertices(&g) != reference::dangerous_vertices(&g) {
            mismatches.push(format!("graph {i}: dangerous_vertices"));
        }
        if diagnostics::count_cherries(&g) != reference::count_cherries(&g) {
            mismatches.push(format!("graph {i}: count_cherries"));
        }
        if diagnostics::count_isolated_triangles(&g) != reference::count_isolated_triangles(&g) {
            mismatches.push(format!("graph {i}: count_isolated_triangles"));
        }
        if diagnostics::count_isolated_two_paths(&g) != reference::count_isolated_two_paths(&g) {
            mismatches.push(format!("graph {i}: count_isolated_two_paths"));
        }
    }
    let mut ind_bad = 0;
    for _ in 0..100 {
        let n = rng.random_range(1..=18);
        let p = rng.random_range(0.05..0.9);
        let g = random_graph(&mut rng, n, p);
        let ind = independence_number(&g, u64::MAX);
        if !ind.exact || ind.value != independence_brute_force(&g) {
            ind_bad += 1;
        }
    }
    check(
        mismatches.is_empty() && ind_bad == 0,
        format!(
            "500 graphs: {} counter mismatches{}; 100 graphs: {ind_bad} independence mismatches",
            mismatches.len(),
            mismatches
                .first()
                .map(|m| format!(" (first: {m})"))
                .unwrap_or_default()
        ),
    )
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("det.conf");
    std::fs::write(
        &config,
        "n = 60, 120\nk = sqrt\ntrials = 24\nbase_seed = 77\nmode = charges\nindependence_budget = 2000\n",
    )
    .map_err(|e| e.to_string())?;
    let run = |threads: &str| -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_kmfree"))
            .args(["batch", "--config"])
            .arg(&config)
            .args(["--threads", threads])
            .env_remove("KMFREE_OUTPUT_DIR")
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!(
                "batch exited with {}: {}",
                out.status,
                String::from_utf8_lossy(&out.stderr)
            ));
        }
        Ok(out.stdout)
    };
    let outputs = [run("1")?, run("8")?, run("1")?, run("8")?];
    let same = outputs.iter().all(|o| o == &outputs[0]);
    let lines = String::from_utf8_lossy(&outputs[0]).lines().count();
    check(
        same && lines == 3,
        format!(
            "4 invocations (threads 1, 8, 1, 8), {} bytes, identical: {same}",
            outputs[0].len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("matching oracle equivalence", criterion_1),
        ("exhaustive process agreement", criterion_2),
        ("invariant suite", criterion_3),
        ("k = sqrt(n) gives G_star", criterion_4),
        ("n - 2k small gives G_clique", criterion_5),
        ("hitting-time windows", criterion_6),
        ("universal vertices and independence", criterion_7),
        ("isolated vertices at k = 0.4n", criterion_8),
        ("diagnostics reference equivalence", criterion_9),
        ("batch determinism", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let stdout = std::io::stdout();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        let wanted = |p: &String| match p.parse::<usize>() {
            Ok(num) => num == i + 1,
            Err(_) => name.contains(p.as_str()),
        };
        if !filter.is_empty() && !filter.iter().any(wanted) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failed += outcome.is_err() as usize;
        let mut out = stdout.lock();
        writeln!(out, "{id} ({name}): {tag} - {detail} [{secs:.1}s]").unwrap();
        out.flush().unwrap();
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
