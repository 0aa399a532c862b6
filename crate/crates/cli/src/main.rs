use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use twoopt_core::analysis::{held_karp_opt, opt_lower_bound, state_graph_longest_path};
use twoopt_core::engine::{default_step_limit, run_with, PivotKind, PivotRule, RunOptions};
use twoopt_core::experiment::{
    run_experiment, write_csv, write_jsonl, write_summary_footer, ExperimentConfig, InitKind,
};
use twoopt_core::gadgets::{verify_script, FamilyKind, GadgetFamily};
use twoopt_core::geometry::{tour_length, Instance, Metric, Tour};
use twoopt_core::heuristics::{insertion_tour, random_tour, InsertionPolicy};
use twoopt_core::io as files;
use twoopt_core::random_models::{
    sample_phi_perturbed, sample_smoothed_gaussian, sample_uniform, SmoothingParams,
};
use twoopt_core::Error;

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_CAPACITY: u8 = 3;

#[derive(Parser)]
#[command(name = "twoopt-lab", version, about = "2-Opt local search laboratory")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output path (file or file prefix, depending on the command).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance, a start tour and (for gadgets) a script.
    Gen {
        #[command(subcommand)]
        what: GenCommand,
    },
    /// Run 2-Opt and write the step trace.
    Run(RunArgs),
    /// Replay a gadget script and check every step.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        tour: PathBuf,
        #[arg(long)]
        script: PathBuf,
    },
    /// Run an experiment described by a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
    /// Exact optimum by Held-Karp (n <= 18).
    Opt {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Grid-cell lower bound on the optimal tour length.
    Bound {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        phi: f64,
    },
    /// Longest improving path in the state graph (n <= 10).
    LongestPath {
        #[arg(long)]
        instance: PathBuf,
    },
}

#[derive(Subcommand)]
enum GenCommand {
    /// A member of a lower-bound gadget family.
    Gadget {
        #[arg(long)]
        family: String,
        /// Number of gadgets (Euclidean family).
        #[arg(long)]
        gadgets: Option<usize>,
        /// Number of propagation/reset pairs (Manhattan and L_p families).
        #[arg(long)]
        pairs: Option<usize>,
        /// Metric of the L_p family: an integer p >= 3 or `inf`.
        #[arg(long, default_value = "3")]
        p: String,
        /// Perturb every coordinate by at most 1e-7 using --seed.
        #[arg(long)]
        jitter: bool,
    },
    /// A random instance with a start tour.
    Random {
        #[arg(long, default_value = "uniform")]
        model: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        phi: f64,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        truncated: bool,
        #[arg(long, default_value = "2")]
        p: String,
        #[arg(long, default_value = "random")]
        init: String,
        /// Also write the instance in TSPLIB format.
        #[arg(long)]
        tsplib: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Start tour; without it one is built with --init.
    #[arg(long)]
    tour: Option<PathBuf>,
    #[arg(long, default_value = "random")]
    init: String,
    #[arg(long, default_value = "first")]
    pivot: String,
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long)]
    step_limit: Option<u64>,
    /// Density bound used for the default step limit.
    #[arg(long)]
    phi: Option<f64>,
}

enum Failure {
    Verification(String),
    Usage(String),
    Capacity(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Capacity { .. } => Failure::Capacity(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn output(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn init_tour(inst: &Instance, init: &str, seed: u64) -> Result<Tour, Failure> {
    let kind: InitKind = init.parse()?;
    Ok(match kind {
        InitKind::Random => random_tour(inst, seed)?,
        InitKind::Nearest => insertion_tour(inst, InsertionPolicy::Nearest, None)?,
        InitKind::Cheapest => insertion_tour(inst, InsertionPolicy::Cheapest, None)?,
        InitKind::RandomOrder => insertion_tour(inst, InsertionPolicy::RandomOrder, Some(seed))?,
    })
}

/// Prints `fields` as `key: value` lines, or as one JSON object for jsonl.
fn report(format: Format, fields: &[(&str, serde_json::Value)]) {
    match format {
        Format::Jsonl => {
            let map: serde_json::Map<String, serde_json::Value> = fields
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect();
            println!("{}", serde_json::Value::Object(map));
        }
        Format::Csv => {
            for (k, v) in fields {
                match v {
                    serde_json::Value::String(s) => println!("{k}: {s}"),
                    other => println!("{k}: {other}"),
                }
            }
        }
    }
}

fn cmd_gen(cli: &Cli, what: &GenCommand) -> CmdResult {
    let prefix = cli.out.clone().unwrap_or_else(|| PathBuf::from("instance"));
    let mut meta = BTreeMap::new();
    match what {
        GenCommand::Gadget {
            family,
            gadgets,
            pairs,
            p,
            jitter,
        } => {
            let kind: FamilyKind = family.parse()?;
            let count = match (kind, gadgets, pairs) {
                (FamilyKind::Euclidean, Some(g), _) => *g,
                (FamilyKind::Euclidean, None, _) => return Err(usage("the Euclidean family needs --gadgets")),
                (_, _, Some(n)) => *n,
                (_, _, None) => return Err(usage("the Manhattan and L_p families need --pairs")),
            };
            let metric: Metric = p.parse()?;
            let fam = GadgetFamily::new(kind, count, metric)?;
            let build = if *jitter {
                fam.build_jittered(cli.seed)?
            } else {
                fam.build()?
            };
            meta.insert("model".into(), format!("gadget-{kind}"));
            meta.insert("count".into(), count.to_string());
            if *jitter {
                meta.insert("jitter_seed".into(), cli.seed.to_string());
            }
            files::save_instance(&with_ext(&prefix, "inst"), &build.instance, &meta)?;
            files::save_tour(&with_ext(&prefix, "tour"), &build.tour)?;
            files::save_script(&with_ext(&prefix, "script"), &build.script)?;
            report(
                cli.format,
                &[
                    ("instance", json!(with_ext(&prefix, "inst"))),
                    ("points", json!(build.instance.n())),
                    ("metric", json!(build.instance.metric().to_string())),
                    ("script_moves", json!(build.script.len())),
                    ("expected_steps", json!(build.script.expected_count)),
                ],
            );
        }
        GenCommand::Random {
            model,
            n,
            d,
            phi,
            sigma,
            alpha,
            truncated,
            p,
            init,
            tsplib,
        } => {
            let metric: Metric = p.parse()?;
            let inst = match model.to_ascii_lowercase().as_str() {
                "uniform" => sample_uniform(*n, *d, cli.seed)?,
                "phi" => sample_phi_perturbed(*n, *d, *phi, cli.seed, None)?,
                "gaussian" => {
                    let sigma = sigma.ok_or_else(|| usage("the Gaussian model needs --sigma"))?;
                    let params = SmoothingParams::new(sigma, *alpha, *truncated)?;
                    let base = sample_uniform(*n, *d, cli.seed)?;
                    sample_smoothed_gaussian(base.points(), &params, cli.seed.wrapping_add(1))?
                }
                other => return Err(usage(format!("unknown model '{other}'"))),
            }
            .with_metric(metric);
            meta.insert("model".into(), model.to_ascii_lowercase());
            meta.insert("seed".into(), cli.seed.to_string());
            if model.eq_ignore_ascii_case("phi") {
                meta.insert("phi".into(), phi.to_string());
            }
            let tour = init_tour(&inst, init, cli.seed)?;
            files::save_instance(&with_ext(&prefix, "inst"), &inst, &meta)?;
            files::save_tour(&with_ext(&prefix, "tour"), &tour)?;
            if *tsplib {
                files::save_tsplib(&with_ext(&prefix, "tsp"), &inst)?;
            }
            report(
                cli.format,
                &[
                    ("instance", json!(with_ext(&prefix, "inst"))),
                    ("points", json!(inst.n())),
                    ("dimension", json!(inst.dim())),
                    ("tour_length", json!(tour_length(&tour, &inst)?)),
                ],
            );
        }
    }
    Ok(())
}

fn cmd_run(cli: &Cli, args: &RunArgs) -> CmdResult {
    let file = files::load_instance(&args.instance)?;
    let inst = file.instance;
    let start = match &args.tour {
        Some(p) => files::load_tour(p)?,
        None => init_tour(&inst, &args.init, cli.seed)?,
    };
    let kind: PivotKind = args.pivot.parse()?;
    let script = match &args.script {
        Some(p) => Some(Arc::new(files::load_script(p)?)),
        None => None,
    };
    let rule = PivotRule::from_kind(kind, Some(cli.seed), script)?;
    let phi = args.phi.or_else(|| file.meta.get("phi").and_then(|v| v.parse().ok()));
    let opts = RunOptions {
        step_limit: args
            .step_limit
            .unwrap_or_else(|| default_step_limit(inst.n(), phi)),
        ..RunOptions::default()
    };
    let trace = run_with(&inst, &start, &rule, &opts)?;
    let mut w = output(&cli.out)?;
    match cli.format {
        Format::Csv => files::write_trace_csv(&mut w, &trace)?,
        Format::Jsonl => files::write_trace_jsonl(&mut w, &trace)?,
    }
    w.flush()?;
    eprintln!(
        "steps: {} terminated: {} initial_length: {} final_length: {}",
        trace.len(),
        trace.terminated,
        trace.initial_length,
        trace.final_length()
    );
    Ok(())
}

fn cmd_verify(cli: &Cli, instance: &Path, tour: &Path, script: &Path) -> CmdResult {
    let inst = files::load_instance(instance)?.instance;
    let tour = files::load_tour(tour)?;
    let script = files::load_script(script)?;
    let r = verify_script(&inst, &tour, &script);
    report(
        cli.format,
        &[
            ("ok", json!(r.ok)),
            ("steps_checked", json!(r.steps_checked)),
            ("expected_count", json!(r.expected_count)),
            ("min_margin", json!(r.min_margin)),
            ("max_margin", json!(r.max_margin)),
            ("checkpoints_checked", json!(r.checkpoints_checked)),
            ("first_failure", json!(r.first_failure)),
            ("failure", json!(r.failure)),
        ],
    );
    if r.ok {
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "verification failed at step {}",
            r.first_failure.unwrap_or(0)
        )))
    }
}

fn cmd_experiment(cli: &Cli, config: &Path) -> CmdResult {
    let text = std::fs::read_to_string(config)?;
    let cfg = ExperimentConfig::from_json(&text)?;
    let rows = run_experiment(&cfg)?;
    let mut targets: Vec<Option<PathBuf>> = match &cli.out {
        Some(p) => vec![Some(p.clone())],
        None => cfg.outputs.iter().cloned().map(Some).collect(),
    };
    if targets.is_empty() {
        targets.push(None);
    }
    for target in &targets {
        let mut w = output(target)?;
        match cli.format {
            Format::Csv => {
                write_csv(&mut w, &rows)?;
                write_summary_footer(&mut w, &cfg, &rows)?;
            }
            Format::Jsonl => write_jsonl(&mut w, &rows)?,
        }
        w.flush()?;
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    eprintln!("rows: {} failed: {failed}", rows.len());
    Ok(())
}

fn cmd_opt(cli: &Cli, instance: &Path) -> CmdResult {
    let inst = files::load_instance(instance)?.instance;
    let (len, tour) = held_karp_opt(&inst)?;
    if let Some(out) = &cli.out {
        files::save_tour(out, &tour)?;
    }
    report(
        cli.format,
        &[
            ("n", json!(inst.n())),
            ("opt_length", json!(len)),
            ("tour", json!(tour.order())),
        ],
    );
    Ok(())
}

fn cmd_bound(cli: &Cli, instance: &Path, phi: f64) -> CmdResult {
    let inst = files::load_instance(instance)?.instance;
    let lb = opt_lower_bound(&inst, phi)?;
    report(
        cli.format,
        &[("n", json!(inst.n())), ("phi", json!(phi)), ("opt_lower_bound", json!(lb))],
    );
    Ok(())
}

fn cmd_longest_path(cli: &Cli, instance: &Path) -> CmdResult {
    let inst = files::load_instance(instance)?.instance;
    let lp = state_graph_longest_path(&inst)?;
    let path: Vec<&[usize]> = lp.path.iter().map(Tour::order).collect();
    report(
        cli.format,
        &[
            ("n", json!(inst.n())),
            ("tours", json!(lp.tours)),
            ("arcs", json!(lp.arcs)),
            ("longest_path", json!(lp.steps)),
            ("witness", json!(path)),
        ],
    );
    Ok(())
}

fn dispatch(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Gen { what } => cmd_gen(cli, what),
        Command::Run(args) => cmd_run(cli, args),
        Command::Verify {
            instance,
            tour,
            script,
        } => cmd_verify(cli, instance, tour, script),
        Command::Experiment { config } => cmd_experiment(cli, config),
        Command::Opt { instance } => cmd_opt(cli, instance),
        Command::Bound { instance, phi } => cmd_bound(cli, instance, *phi),
        Command::LongestPath { instance } => cmd_longest_path(cli, instance),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VERIFY)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Capacity(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CAPACITY)
        }
    }
}
