use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use gamesearch::arena::{
    load_config, read_records, run_tournament, ArenaError, MatchRecord, RunOptions, TournamentConfig,
};
use gamesearch::engine::{parse_spec_list, AlgorithmSpec};
use gamesearch::stats::{emit_report, star_row, summarize, BootstrapSettings, ReportFormat, ReportRow, Statistic};
use gamesearch::verify::{run_suite, suites};

const EXIT_USAGE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_VERIFY: u8 = 3;
const EXIT_PROTOCOL: u8 = 4;

#[derive(Parser)]
#[command(name = "gamesearch", version, about = "Game-tree search workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a tournament and print its summary table.
    Run(RunArgs),
    /// Run one tournament per parameter value, plus a per-game best row.
    Tune(TuneArgs),
    /// Run the oracle and property suites.
    Verify {
        /// Only run these suites (by number).
        #[arg(long, value_delimiter = ',')]
        suite: Vec<u8>,
    },
    /// Summarize an existing record log.
    Report {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value = "md")]
        format: String,
        #[arg(long, default_value_t = 10_000)]
        bootstrap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Bootstrap the pooled mean instead of the mean of per-game means.
        #[arg(long)]
        pooled: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "GAMESEARCH_WORKERS")]
    workers: Option<usize>,
    /// Seconds per move.
    #[arg(long)]
    time_per_move: Option<f64>,
    #[arg(long)]
    node_budget: Option<u64>,
    /// Record log path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Play only the matches missing from the record log.
    #[arg(long)]
    resume: bool,
    /// Candidate list, e.g. `ubfm_s,kbest:k=3`.
    #[arg(long)]
    algorithms: Option<String>,
    #[arg(long, default_value = "md")]
    format: String,
    /// Bootstrap the pooled mean instead of the mean of per-game means.
    #[arg(long)]
    pooled: bool,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Algorithm to tune; defaults to the first configured candidate.
    #[arg(long)]
    algorithm: Option<String>,
    /// Parameter values, e.g. `1.41,1,0.3`.
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<String>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Failure {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<ArenaError> for Failure {
    fn from(e: ArenaError) -> Self {
        Failure::new(EXIT_CONFIG, e.to_string())
    }
}

fn format_arg(s: &str) -> Result<ReportFormat, Failure> {
    s.parse().map_err(|e: gamesearch::stats::StatsError| Failure::new(EXIT_USAGE, e.to_string()))
}

fn load(args: &RunArgs) -> Result<TournamentConfig, Failure> {
    let mut cfg = load_config(&args.config)
        .map_err(|e| Failure::new(EXIT_CONFIG, format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(w) = args.workers {
        if w == 0 {
            return Err(Failure::new(EXIT_USAGE, "--workers must be at least 1"));
        }
        cfg.workers = w;
    }
    if let Some(t) = args.time_per_move {
        if !(t.is_finite() && t > 0.0) {
            return Err(Failure::new(EXIT_USAGE, "--time-per-move must be positive"));
        }
        cfg.budget.time = Some(Duration::from_secs_f64(t));
    }
    if let Some(n) = args.node_budget {
        if n == 0 {
            return Err(Failure::new(EXIT_USAGE, "--node-budget must be positive"));
        }
        cfg.budget.max_nodes = Some(n);
    }
    if let Some(out) = &args.out {
        cfg.records = out.clone();
    }
    if let Some(list) = &args.algorithms {
        cfg.candidates = parse_spec_list(list).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
        if cfg.candidates.is_empty() {
            return Err(Failure::new(EXIT_USAGE, "--algorithms lists no algorithm"));
        }
    }
    Ok(cfg)
}

fn bootstrap(cfg: &TournamentConfig, pooled: bool) -> BootstrapSettings {
    BootstrapSettings {
        replicates: cfg.bootstrap,
        seed: cfg.seed,
        statistic: if pooled { Statistic::Pooled } else { Statistic::MeanOfMeans },
        ..Default::default()
    }
}

fn rows(records: &[MatchRecord], boot: &BootstrapSettings) -> Result<Vec<ReportRow>, Failure> {
    summarize(records, boot).map_err(|e| Failure::new(EXIT_CONFIG, e.to_string()))
}

fn violation_failure(count: usize, cfg: &TournamentConfig) -> Failure {
    Failure::new(
        EXIT_PROTOCOL,
        format!("{count} protocol violations logged to {}", cfg.violations.display()),
    )
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let format = format_arg(&args.format)?;
    let cfg = load(&args)?;
    let out = run_tournament(&cfg, &RunOptions { resume: args.resume })?;
    eprintln!(
        "played {} matches, skipped {}, {} records in {}",
        out.played,
        out.skipped,
        out.records.len(),
        cfg.records.display()
    );
    print!("{}", emit_report(&rows(&out.records, &bootstrap(&cfg, args.pooled))?, format));
    if !out.violations.is_empty() {
        return Err(violation_failure(out.violations.len(), &cfg));
    }
    Ok(())
}

fn cmd_tune(args: TuneArgs) -> Result<(), Failure> {
    let format = format_arg(&args.run.format)?;
    let mut cfg = load(&args.run)?;
    if args.grid.iter().all(|g| g.trim().is_empty()) {
        return Err(Failure::new(EXIT_USAGE, "--grid needs at least one value"));
    }
    let base: AlgorithmSpec = match &args.algorithm {
        Some(a) => a.parse().or_else(|_| format!("{a}:1").parse()),
        None => Ok(cfg.candidates[0]),
    }
    .map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    let specs = args
        .grid
        .iter()
        .filter(|g| !g.trim().is_empty())
        .map(|v| base.with_param(v.trim()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    let boot = bootstrap(&cfg, args.run.pooled);
    let mut table = Vec::new();
    let mut violations = 0;
    for (n, spec) in specs.iter().enumerate() {
        cfg.candidates = vec![*spec];
        let resume = args.run.resume || n > 0;
        let out = run_tournament(&cfg, &RunOptions { resume })?;
        violations += out.violations.len();
        let own: Vec<MatchRecord> = out
            .records
            .into_iter()
            .filter(|r| r.candidate() == spec.to_string())
            .collect();
        table.extend(rows(&own, &boot)?);
    }
    table.push(star_row(&format!("{}:*", base.id()), &table));
    print!("{}", emit_report(&table, format));
    if violations > 0 {
        return Err(violation_failure(violations, &cfg));
    }
    Ok(())
}

fn cmd_verify(only: &[u8]) -> Result<(), Failure> {
    let selected: Vec<_> = suites()
        .into_iter()
        .filter(|s| only.is_empty() || only.contains(&s.id))
        .collect();
    if selected.is_empty() {
        return Err(Failure::new(EXIT_USAGE, "no suite matches --suite"));
    }
    let mut failed = 0;
    for s in &selected {
        let r = run_suite(s);
        println!("{}", r.line());
        failed += usize::from(!(r.passed && r.within_limit()));
    }
    if failed > 0 {
        return Err(Failure::new(EXIT_VERIFY, format!("{failed} suites failed")));
    }
    Ok(())
}

fn cmd_report(records: PathBuf, format: &str, replicates: usize, seed: u64, pooled: bool) -> Result<(), Failure> {
    let format = format_arg(format)?;
    if replicates == 0 {
        return Err(Failure::new(EXIT_USAGE, "--bootstrap must be at least 1"));
    }
    let recs = read_records(&records).map_err(|e| Failure::new(EXIT_CONFIG, format!("{}: {e}", records.display())))?;
    let boot = BootstrapSettings {
        replicates,
        seed,
        statistic: if pooled { Statistic::Pooled } else { Statistic::MeanOfMeans },
        ..Default::default()
    };
    print!("{}", emit_report(&rows(&recs, &boot)?, format));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Tune(args) => cmd_tune(args),
        Command::Verify { suite } => cmd_verify(&suite),
        Command::Report {
            records,
            format,
            bootstrap,
            seed,
            pooled,
        } => cmd_report(records, &format, bootstrap, seed, pooled),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
