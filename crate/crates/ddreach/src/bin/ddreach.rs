//! Command-line front end: generate models, run reachability algorithms on
//! .tsys files, cross-check algorithms against each other (and the explicit
//! oracle), and emit scaling curves as CSV.
//!
//! Exit codes: 0 success, 1 disagreement or other runtime failure, 2 timeout,
//! 3 parse error, 4 dimension or usage error.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ddreach::{
    explicit_oracle, gen_counter, gen_philosophers, parse_tsys, tsys_dims, wrap_bad_case,
    write_tsys, Algorithm, Error, Result, RunOptions, RunStats, Store, StoreConfig,
    TransitionSystem, CSV_HEADER,
};

#[derive(Parser)]
#[command(name = "ddreach", version, about = "Decision-diagram reachability workbench")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a built-in model and write it in the .tsys format.
    Gen(GenArgs),
    /// Run one algorithm on a model file and report run statistics.
    Run(RunArgs),
    /// Run several algorithms on the same files and require agreement.
    Compare(CompareArgs),
    /// Sweep one model family over sizes and emit a scaling curve.
    Scaling(ScalingArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    /// Dining philosophers with k seats (3k binary variables).
    Philosophers,
    /// Binary counter over n bits.
    Counter,
    /// Counter wrapped in the parity guard that defeats subproblem reuse.
    BadcaseCounter,
}

#[derive(Args)]
struct GenArgs {
    /// Which model family to generate.
    #[arg(value_enum)]
    model: ModelKind,
    /// Bits for counter and badcase-counter.
    #[arg(long)]
    n: Option<u32>,
    /// Seats for philosophers.
    #[arg(long)]
    k: Option<u32>,
    /// Output path; stdout when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Model file in the .tsys format.
    file: PathBuf,
    /// Algorithm: bfs, reach-bdd, reach-bdd-par, reach-mdd or saturation.
    #[arg(long)]
    alg: String,
    /// Worker threads for reach-bdd-par.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Time budget in seconds (fractions allowed, must be positive).
    #[arg(long, default_value_t = 600.0)]
    timeout: f64,
    /// Append the run's CSV row to this file (header written when new).
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Dump the reachable-set diagram to this file.
    #[arg(long = "dump-dd")]
    dump_dd: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Model files in the .tsys format.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Comma-separated algorithm list.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "bfs,reach-bdd,reach-bdd-par,reach-mdd,saturation"
    )]
    algs: Vec<String>,
    /// Worker threads for reach-bdd-par.
    #[arg(long, default_value_t = 2)]
    workers: usize,
    /// Time budget in seconds per run.
    #[arg(long, default_value_t = 600.0)]
    timeout: f64,
    /// Also check against the explicit-state oracle (small models only).
    #[arg(long)]
    oracle: bool,
    /// Append every run's CSV row to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ScalingArgs {
    /// Model family to sweep.
    #[arg(long, value_enum)]
    model: ModelKind,
    /// Comma-separated sizes (bits for counters, seats for philosophers).
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<u32>,
    /// Algorithm to benchmark.
    #[arg(long)]
    alg: String,
    /// Worker threads for reach-bdd-par.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Repetitions per size; the fastest run is reported.
    #[arg(long, default_value_t = 1)]
    reps: u32,
    /// Time budget in seconds per run.
    #[arg(long, default_value_t = 600.0)]
    timeout: f64,
    /// Append the curve to this file instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// One planned benchmark invocation. Plans are validated as a whole before
/// any store is built: timeouts must be positive and repetitions at least 1.
struct BenchEntry {
    model: ModelKind,
    size: u32,
    alg: Algorithm,
    workers: usize,
    reps: u32,
    timeout: Duration,
}

struct BenchPlan {
    entries: Vec<BenchEntry>,
}

impl BenchPlan {
    fn validate(&self) -> Result<()> {
        for entry in &self.entries {
            if entry.reps < 1 {
                return Err(Error::Model("repetitions must be at least 1".into()));
            }
            if entry.timeout.is_zero() {
                return Err(Error::Model("timeout must be positive".into()));
            }
        }
        Ok(())
    }
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let rendered = err.render();
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{rendered}");
                return 0;
            }
            eprint!("{rendered}");
            return 4;
        }
    };
    let outcome = match &cli.cmd {
        Cmd::Gen(args) => cmd_gen(args),
        Cmd::Run(args) => cmd_run(args),
        Cmd::Compare(args) => cmd_compare(args),
        Cmd::Scaling(args) => cmd_scaling(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Timeout => 2,
        Error::Parse { .. } => 3,
        Error::Config(_)
        | Error::LevelOutOfRange { .. }
        | Error::ChildLevel { .. }
        | Error::Arity { .. }
        | Error::DomainValue { .. }
        | Error::Dimension { .. }
        | Error::BinaryOnly { .. }
        | Error::Support { .. }
        | Error::EmptyPartials
        | Error::UnsortedPartials
        | Error::MissingMonolithic
        | Error::NoDescription
        | Error::TooLarge { .. }
        | Error::Model(_) => 4,
        _ => 1,
    }
}

fn usage(msg: &str) -> Error {
    Error::Model(msg.into())
}

fn run_options(workers: usize, timeout_secs: f64) -> Result<RunOptions> {
    if !timeout_secs.is_finite() || timeout_secs <= 0.0 {
        return Err(usage("timeout must be positive"));
    }
    Ok(RunOptions {
        workers,
        timeout: Some(Duration::from_secs_f64(timeout_secs)),
    })
}

fn build_model(kind: ModelKind, size: u32) -> Result<(Store, TransitionSystem)> {
    match kind {
        ModelKind::Counter => {
            let store = Store::new(StoreConfig::new(size, 2))?;
            let sys = gen_counter(&store, size)?;
            Ok((store, sys))
        }
        ModelKind::Philosophers => {
            let store = Store::new(StoreConfig::new(
                size.checked_mul(3).ok_or_else(|| usage("k is too large"))?,
                2,
            ))?;
            let sys = gen_philosophers(&store, size)?;
            Ok((store, sys))
        }
        ModelKind::BadcaseCounter => {
            let store = Store::new(StoreConfig::new(
                size.checked_add(1).ok_or_else(|| usage("n is too large"))?,
                2,
            ))?;
            let counter = gen_counter(&store, size)?;
            let sys = wrap_bad_case(&store, &counter)?;
            Ok((store, sys))
        }
    }
}

fn load_system(path: &Path) -> Result<(Store, TransitionSystem)> {
    let text = fs::read_to_string(path)?;
    let (vars, domain) = tsys_dims(&text)?;
    let store = Store::new(StoreConfig::new(vars, domain))?;
    let mut sys = parse_tsys(&store, &text)?;
    if let Some(stem) = path.file_stem() {
        sys.name = stem.to_string_lossy().into_owned();
    }
    Ok((store, sys))
}

/// Appends rows to a CSV file, writing the header first when the file is
/// new or empty. Files only ever grow.
fn append_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut file = fs::OpenOptions::new().append(true).create(true).open(path)?;
    if file.metadata()?.len() == 0 {
        writeln!(file, "{header}")?;
    }
    for row in rows {
        writeln!(file, "{row}")?;
    }
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Result<i32> {
    let size = match args.model {
        ModelKind::Counter | ModelKind::BadcaseCounter => {
            if args.k.is_some() {
                return Err(usage("counter families take --n, not --k"));
            }
            args.n.ok_or_else(|| usage("counter families need --n"))?
        }
        ModelKind::Philosophers => {
            if args.n.is_some() {
                return Err(usage("philosophers takes --k, not --n"));
            }
            args.k.ok_or_else(|| usage("philosophers needs --k"))?
        }
    };
    let (_store, sys) = build_model(args.model, size)?;
    let text = write_tsys(&sys)?;
    match &args.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn cmd_run(args: &RunArgs) -> Result<i32> {
    let alg: Algorithm = args.alg.parse()?;
    let opts = run_options(args.workers, args.timeout)?;
    let (store, sys) = load_system(&args.file)?;
    let (set, stats) = ddreach::run(&store, &sys, alg, &opts)?;
    println!("{CSV_HEADER}");
    println!("{}", stats.csv_row());
    if let Some(csv) = &args.stats {
        append_csv(csv, CSV_HEADER, &[stats.csv_row()])?;
    }
    if let Some(path) = &args.dump_dd {
        let mut file = fs::File::create(path)?;
        store.write_dd(set.root, sys.vars, &mut file)?;
    }
    Ok(0)
}

fn cmd_compare(args: &CompareArgs) -> Result<i32> {
    if args.algs.is_empty() {
        return Err(usage("need at least one algorithm"));
    }
    let algs = args
        .algs
        .iter()
        .map(|s| s.parse::<Algorithm>())
        .collect::<Result<Vec<_>>>()?;
    let opts = run_options(args.workers, args.timeout)?;
    let mut rows = Vec::new();
    let mut disagreements = 0u32;
    println!(
        "{:<24} {:<14} {:>16} {:>12} {:>12}",
        "model", "alg", "states", "iterations", "wall_ms"
    );
    for file in &args.files {
        let (store, sys) = load_system(file)?;
        let mut counts: Vec<(String, String)> = Vec::new();
        for &alg in &algs {
            let (_, stats) = ddreach::run(&store, &sys, alg, &opts)?;
            println!(
                "{:<24} {:<14} {:>16} {:>12} {:>12.3}",
                stats.model,
                stats.alg,
                stats.final_sat_count,
                stats.top_loop_iterations,
                stats.wall_time_ms
            );
            counts.push((stats.alg.clone(), stats.final_sat_count.clone()));
            rows.push(stats.csv_row());
        }
        if args.oracle {
            let states = explicit_oracle(&store, &sys)?;
            println!(
                "{:<24} {:<14} {:>16} {:>12} {:>12}",
                sys.name,
                "oracle",
                states.len(),
                "-",
                "-"
            );
            counts.push(("oracle".into(), states.len().to_string()));
        }
        let reference = counts[0].1.clone();
        if counts.iter().any(|(_, c)| *c != reference) {
            disagreements += 1;
            eprintln!("disagreement on {}: {counts:?}", sys.name);
        }
    }
    if let Some(csv) = &args.csv {
        append_csv(csv, CSV_HEADER, &rows)?;
    }
    if disagreements > 0 {
        eprintln!("{disagreements} model(s) with disagreeing state counts");
        Ok(1)
    } else {
        println!("all methods agree");
        Ok(0)
    }
}

fn cmd_scaling(args: &ScalingArgs) -> Result<i32> {
    let alg: Algorithm = args.alg.parse()?;
    if args.sizes.is_empty() {
        return Err(usage("need at least one size"));
    }
    let plan = BenchPlan {
        entries: args
            .sizes
            .iter()
            .map(|&size| BenchEntry {
                model: args.model,
                size,
                alg,
                workers: args.workers,
                reps: args.reps,
                timeout: Duration::from_secs_f64(args.timeout.max(0.0)),
            })
            .collect(),
    };
    plan.validate()?;
    let header = "size,reach_calls,iterations,wall_time_ms";
    let mut rows = Vec::new();
    for entry in &plan.entries {
        let opts = RunOptions {
            workers: entry.workers,
            timeout: Some(entry.timeout),
        };
        let mut best: Option<RunStats> = None;
        for _ in 0..entry.reps {
            // Fresh store per repetition so caches never carry over.
            let (store, sys) = build_model(entry.model, entry.size)?;
            let (_, stats) = ddreach::run(&store, &sys, entry.alg, &opts)?;
            if best
                .as_ref()
                .is_none_or(|b| stats.wall_time_ms < b.wall_time_ms)
            {
                best = Some(stats);
            }
        }
        let stats = best.expect("reps >= 1");
        rows.push(format!(
            "{},{},{},{:.3}",
            entry.size, stats.reach_calls, stats.top_loop_iterations, stats.wall_time_ms
        ));
    }
    match &args.csv {
        Some(path) => append_csv(path, header, &rows)?,
        None => {
            println!("{header}");
            for row in &rows {
                println!("{row}");
            }
        }
    }
    Ok(0)
}
