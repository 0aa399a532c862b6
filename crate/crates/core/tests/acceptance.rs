//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use itertools::Itertools;
use rayon::prelude::*;

use twoopt_core::analysis::{disjoint_pair_bound, type01_pair_bound};
use twoopt_core::engine::{run, PivotRule, Termination, UNBOUNDED_STEPS};
use twoopt_core::experiment::{loglog_slope, run_experiment, summarize, write_csv, ExperimentConfig, InitKind, ModelKind};
use twoopt_core::geometry::{Distances, Instance, Metric, Point, Tour};
use twoopt_core::random_models::{sample_phi_perturbed, sample_uniform};
use twoopt_core::{
    crossing_count, held_karp_opt, inequality_margins, insertion_tour, linked_pair_decomposition,
    opt_lower_bound, random_tour, state_graph_longest_path, tour_length, verify_script, FamilyKind,
    GadgetFamily, InsertionPolicy, PivotKind,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rules(seed: u64) -> [PivotRule; 3] {
    [
        PivotRule::FirstImprovement,
        PivotRule::BestImprovement,
        PivotRule::RandomImprovement { seed },
    ]
}

fn verify_family(family: GadgetFamily) -> Result<(usize, f64), String> {
    let b = family.build().map_err(|e| e.to_string())?;
    let report = verify_script(&b.instance, &b.tour, &b.script);
    ensure!(
        report.ok,
        "{:?} count {}: {} at step {:?}",
        family.kind,
        family.count,
        report.failure.unwrap_or_default(),
        report.first_failure
    );
    ensure!(
        report.steps_checked as u64 == family.expected_steps(),
        "{:?} count {}: {} steps instead of {}",
        family.kind,
        family.count,
        report.steps_checked,
        family.expected_steps()
    );
    Ok((report.steps_checked, report.min_margin))
}

fn c1_euclidean_gadgets() -> Outcome {
    ensure!(GadgetFamily::euclidean(1).unwrap().expected_steps() == 2, "g=1 should give 2 steps");
    ensure!(GadgetFamily::euclidean(3).unwrap().expected_steps() == 50, "g=3 should give 50 steps");
    let mut worst = f64::INFINITY;
    for g in 1..=15 {
        let (steps, margin) = verify_family(GadgetFamily::euclidean(g).unwrap())?;
        ensure!(steps as u64 == (1u64 << (g + 3)) - 14, "g={g}: {steps} steps");
        worst = worst.min(margin);
    }
    let clock = Instant::now();
    let (steps, margin) = verify_family(GadgetFamily::euclidean(16).unwrap())?;
    let secs = clock.elapsed().as_secs_f64();
    worst = worst.min(margin);
    ensure!(steps == 524_274, "g=16: {steps} steps");
    ensure!(secs < 30.0, "g=16 took {secs:.1} s");
    ensure!(worst >= 1e-9, "smallest improvement {worst:e} is below 1e-9");
    Ok(format!("g=1..16 verified, g=16: {steps} steps in {secs:.2} s, min improvement {worst:.3e}"))
}

fn c2_manhattan_gadgets() -> Outcome {
    ensure!(GadgetFamily::manhattan(1).unwrap().expected_steps() == 10, "n=1 should give 10 steps");
    let results: Vec<Result<(usize, f64), String>> = (1..=14usize)
        .into_par_iter()
        .map(|n| verify_family(GadgetFamily::manhattan(n).unwrap()))
        .collect();
    let mut worst = f64::INFINITY;
    for (k, r) in results.into_iter().enumerate() {
        let n = k + 1;
        let (steps, margin) = r?;
        ensure!(steps as u64 == (1u64 << (n + 4)) - 22, "n={n}: {steps} steps");
        ensure!(margin > 0.0, "n={n}: non-improving step");
        worst = worst.min(margin);
    }
    Ok(format!("n=1..14 verified (n=14: {} steps), min improvement {worst:.3e}", (1u64 << 18) - 22))
}

fn lp_metrics() -> Vec<Metric> {
    let mut v: Vec<Metric> = (3..=10).chain([16, 32, 64]).map(Metric::Lp).collect();
    v.push(Metric::Inf);
    v
}

fn c3_lp_gadgets() -> Outcome {
    let jobs: Vec<(Metric, usize)> = lp_metrics()
        .into_iter()
        .flat_map(|m| (1..=10).map(move |n| (m, n)))
        .collect();
    let failures: Vec<String> = jobs
        .par_iter()
        .filter_map(|&(m, n)| {
            verify_family(GadgetFamily::lp(n, m).unwrap())
                .err()
                .map(|e| format!("p={m}: {e}"))
        })
        .collect();
    ensure!(failures.is_empty(), "{}", failures.join("; "));
    let mut smallest = f64::INFINITY;
    for m in lp_metrics() {
        for margin in inequality_margins(FamilyKind::Lp, m).map_err(|e| e.to_string())? {
            ensure!(margin.value > 0.0, "p={m}: {} = {}", margin.name, margin.value);
            smallest = smallest.min(margin.value);
        }
    }
    Ok(format!(
        "{} (p, n) scripts verified, all inequality margins positive (smallest {smallest:.4})",
        jobs.len()
    ))
}

fn c4_margins() -> Outcome {
    let lookup = |kind, metric| -> Result<std::collections::HashMap<String, f64>, String> {
        Ok(inequality_margins(kind, metric)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|m| (m.name, m.value))
            .collect())
    };
    let close = |got: f64, want: f64| (got - want).abs() <= 1e-9;

    let man = lookup(FamilyKind::Manhattan, Metric::MANHATTAN)?;
    let p_to_r = [0.04, 0.4, 0.04, 0.16, 0.4, 0.04, 0.6];
    let r_to_p = [1.06, 1.032, 0.168, 1.14, 0.06, 0.4, 0.012];
    for (prefix, want) in [("p_to_r", p_to_r), ("r_to_p", r_to_p)] {
        for (k, w) in want.iter().enumerate() {
            let name = format!("{prefix}.{}", k + 1);
            ensure!(close(man[&name], *w), "Manhattan {name} = {} (want {w})", man[&name]);
        }
    }
    ensure!(close(man["reset_block_short"], 1.36), "reset block check = {}", man["reset_block_short"]);
    ensure!(close(man["propagation_flip"], 2.2), "propagation flip = {}", man["propagation_flip"]);

    let euc = lookup(FamilyKind::Euclidean, Metric::EUCLIDEAN)?;
    let floor = [0.03, 0.91, 0.06, 0.05, 0.43, 0.06, 0.53];
    for (k, f) in floor.iter().enumerate() {
        let name = format!("base.{}", k + 1);
        ensure!(euc[&name] > *f, "Euclidean {name} = {} (must exceed {f})", euc[&name]);
    }

    let inf = lookup(FamilyKind::Lp, Metric::Inf)?;
    ensure!(close(inf["reset_block_short"], 3.4), "L_inf reset block check = {}", inf["reset_block_short"]);
    Ok("Manhattan 7+7+2 values within 1e-9, Euclidean 7 strict lower bounds, L_inf 3.4".into())
}

fn c5_linked_pairs() -> Outcome {
    let sizes = [20usize, 50, 100, 200];
    let mut jobs = Vec::new();
    for seed in 0..21u64 {
        for &n in &sizes {
            for phi in [None, Some(4.0)] {
                for rule in 0..3 {
                    jobs.push((seed, n, phi, rule));
                }
            }
        }
    }
    let results: Vec<Result<(usize, usize), String>> = jobs
        .par_iter()
        .map(|&(seed, n, phi, rule)| {
            let inst = match phi {
                None => sample_uniform(n, 2, seed),
                Some(p) => sample_phi_perturbed(n, 2, p, seed, None),
            }
            .map_err(|e| e.to_string())?;
            let start = random_tour(&inst, seed + 1000).map_err(|e| e.to_string())?;
            let trace = run(&inst, &start, &rules(seed)[rule], UNBOUNDED_STEPS).map_err(|e| e.to_string())?;
            let t = trace.len();
            let all = linked_pair_decomposition(&trace, false);
            let excl = linked_pair_decomposition(&trace, true);
            let mut violations = 0;
            if (all.pairs_disjoint as i64) < disjoint_pair_bound(t, n) {
                violations += 1;
            }
            if (excl.pairs_type01_disjoint as i64) < type01_pair_bound(t, n) {
                violations += 1;
            }
            Ok((t, violations))
        })
        .collect();
    let mut traces = 0;
    let mut violations = 0;
    let mut total_steps = 0;
    for r in results {
        let (t, v) = r?;
        traces += 1;
        total_steps += t;
        violations += v;
    }
    ensure!(traces >= 500, "only {traces} traces");
    ensure!(violations == 0, "{violations} pair-bound violations over {traces} traces");
    Ok(format!("{traces} traces ({total_steps} steps), 0 violations of either pair bound"))
}

/// Shortest tour by trying every canonical tour.
fn brute_force_opt(inst: &Instance) -> f64 {
    let d = inst.distance_matrix();
    let n = inst.n();
    let mut best = f64::INFINITY;
    for perm in (1..n).permutations(n - 1) {
        if perm[0] > perm[n - 2] {
            continue;
        }
        let order: Vec<usize> = std::iter::once(0).chain(perm).collect();
        let mut len = 0.0;
        for i in 0..n {
            len += d.dist(order[i], order[(i + 1) % n]);
        }
        best = best.min(len);
    }
    best
}

fn c6_oracles() -> Outcome {
    let results: Vec<Result<(), String>> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let n = 5 + (seed as usize % 8);
            let inst = sample_uniform(n, 2, 500 + seed).map_err(|e| e.to_string())?;
            let (opt, tour) = held_karp_opt(&inst).map_err(|e| e.to_string())?;
            let brute = brute_force_opt(&inst);
            ensure!(opt == brute, "seed {seed}, n={n}: Held-Karp {opt} vs enumeration {brute}");
            ensure!(tour_length(&tour, &inst).unwrap() == opt, "seed {seed}: returned tour misses the optimum");
            let lb = opt_lower_bound(&inst, 1.0).map_err(|e| e.to_string())?;
            ensure!(lb <= opt, "seed {seed}: lower bound {lb} exceeds {opt}");
            let mut tours = vec![random_tour(&inst, seed).unwrap()];
            for p in [InsertionPolicy::Nearest, InsertionPolicy::Cheapest, InsertionPolicy::RandomOrder] {
                tours.push(insertion_tour(&inst, p, Some(seed)).unwrap());
            }
            let starts = tours.clone();
            for start in &starts {
                for rule in rules(seed) {
                    tours.push(run(&inst, start, &rule, UNBOUNDED_STEPS).unwrap().final_tour);
                }
            }
            for t in &tours {
                let len = tour_length(t, &inst).unwrap();
                ensure!(len >= opt - 1e-9, "seed {seed}: tour of length {len} beats the optimum {opt}");
            }
            Ok(())
        })
        .collect();
    for r in results {
        r?;
    }
    Ok("100 instances (n=5..12): Held-Karp equals enumeration exactly, bound <= OPT, 16 tours each >= OPT".into())
}

fn c7_crossings() -> Outcome {
    let results: Vec<Result<usize, String>> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let inst = sample_uniform(30, 2, 7000 + seed).map_err(|e| e.to_string())?;
            let start = random_tour(&inst, seed).unwrap();
            let mut local_optima = 0;
            for rule in rules(seed) {
                let trace = run(&inst, &start, &rule, UNBOUNDED_STEPS).map_err(|e| e.to_string())?;
                ensure!(trace.terminated == Termination::LocalOpt, "seed {seed}: run did not converge");
                let c = crossing_count(&trace.final_tour, &inst).map_err(|e| e.to_string())?;
                ensure!(c == 0, "seed {seed}: local optimum with {c} crossings");
                local_optima += 1;
            }
            Ok(local_optima)
        })
        .collect();
    let mut total = 0;
    for r in results {
        total += r?;
    }
    Ok(format!("{total} local optima on 100 instances (n=30), none with a crossing"))
}

fn c8_trends() -> Outcome {
    let mut cfg = ExperimentConfig::new(ModelKind::Uniform, vec![100, 200, 400, 800], (0..20).collect());
    cfg.pivot = PivotKind::FirstImprovement;
    cfg.init = InitKind::Random;
    cfg.opt_max_n = 0;
    let rows = run_experiment(&cfg).map_err(|e| e.to_string())?;
    ensure!(rows.len() == 80, "{} rows", rows.len());
    ensure!(rows.iter().all(|r| r.error.is_none() && !r.truncated), "a row failed or was truncated");
    let sums = summarize(&cfg, &rows);
    let pts: Vec<(f64, f64)> = sums.iter().map(|s| (s.n as f64, s.mean_steps)).collect();
    let slope = loglog_slope(&pts).ok_or("slope undefined")?;
    ensure!((0.8..=3.0).contains(&slope), "slope {slope:.3} outside [0.8, 3.0]");

    let mut cfg = ExperimentConfig::new(ModelKind::Uniform, vec![10], (0..100).collect());
    cfg.starts = 50;
    let rows = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let mut ratio_sum = 0.0;
    for r in &rows {
        ensure!(r.error.is_none(), "seed {}: {:?}", r.seed, r.error);
        let (ratio, opt, lb) = (r.ratio.unwrap(), r.opt_length.unwrap(), r.opt_lower_bound.unwrap());
        ensure!(ratio >= 1.0 - 1e-12, "seed {}: ratio {ratio}", r.seed);
        ensure!(lb <= opt, "seed {}: lower bound {lb} exceeds {opt}", r.seed);
        ratio_sum += ratio;
    }
    let means: Vec<String> = sums.iter().map(|s| format!("{:.0}", s.mean_steps)).collect();
    Ok(format!(
        "mean steps {} for n=100..800, slope {slope:.3}; worst-of-50 ratio mean {:.4} over 100 seeds",
        means.join("/"),
        ratio_sum / rows.len() as f64
    ))
}

fn c9_state_graph() -> Outcome {
    let square = Instance::new(
        "square",
        Metric::EUCLIDEAN,
        vec![Point::xy(0.0, 0.0), Point::xy(1.0, 0.0), Point::xy(1.0, 1.0), Point::xy(0.0, 1.0)],
    )
    .unwrap();
    let sq = state_graph_longest_path(&square).map_err(|e| e.to_string())?;
    ensure!(sq.steps == 1, "square: longest path {}", sq.steps);

    let results: Vec<Result<(usize, usize), String>> = (0..50u64)
        .into_par_iter()
        .map(|seed| {
            let n = 5 + (seed as usize % 4);
            let inst = sample_uniform(n, 2, 9000 + seed).map_err(|e| e.to_string())?;
            let lp = state_graph_longest_path(&inst).map_err(|e| e.to_string())?;
            let mut longest_run = 0;
            for perm in (1..n).permutations(n - 1).filter(|p| p[0] < p[n - 2]) {
                let start = Tour::new(std::iter::once(0).chain(perm).collect()).unwrap();
                for rule in rules(seed) {
                    let t = run(&inst, &start, &rule, UNBOUNDED_STEPS).unwrap().len();
                    ensure!(t <= lp.steps, "seed {seed}: run of {t} steps exceeds longest path {}", lp.steps);
                    longest_run = longest_run.max(t);
                }
            }
            Ok((lp.steps, longest_run))
        })
        .collect();
    let mut max_path = 0;
    for r in results {
        max_path = max_path.max(r?.0);
    }
    Ok(format!("square -> 1; 50 instances (n=5..8) dominate every run, longest path up to {max_path}"))
}

fn c10_determinism() -> Outcome {
    let mut cfg = ExperimentConfig::new(ModelKind::Phi, vec![15, 40], vec![11, 12, 13]);
    cfg.phi = vec![1.0, 8.0];
    cfg.pivot = PivotKind::RandomImprovement;
    cfg.starts = 2;
    let render = || -> Result<Vec<u8>, String> {
        let rows = run_experiment(&cfg).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).map_err(|e| e.to_string())?;
        Ok(buf)
    };
    let (a, b) = (render()?, render()?);
    ensure!(a == b, "CSV differs between runs");
    Ok(format!("two runs produced identical CSV ({} bytes, 12 rows)", a.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 Euclidean gadget exactness", c1_euclidean_gadgets),
        ("2 Manhattan gadget exactness", c2_manhattan_gadgets),
        ("3 L_p gadget exactness", c3_lp_gadgets),
        ("4 margin reproduction", c4_margins),
        ("5 linked-pair bounds", c5_linked_pairs),
        ("6 oracle coherence", c6_oracles),
        ("7 local-optimum geometry", c7_crossings),
        ("8 desk-scale trends", c8_trends),
        ("9 state-graph oracle", c9_state_graph),
        ("10 determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let clock = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = clock.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {name}: PASS ({secs:.1} s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {name}: FAIL ({secs:.1} s) {detail}");
            }
        }
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
