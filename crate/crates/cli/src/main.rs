//! `nonlocal`: generate strings, play games, estimate complexities, run the
//! exact oracles and the experiment harnesses.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error, 3 estimator
//! or oracle failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use nonlocal_core::complexity::ComplexityError;
use nonlocal_core::experiments::{ExperimentError, SeedSet};
use nonlocal_core::games::GamesError;
use nonlocal_core::oracles::OracleError;
use nonlocal_core::strings::StringsError;

use config::{
    CommandConfig, EstimateParams, ExpName, ExpParams, GameName, GenKind, GenParams, LocalityParams, NosigParams,
    OracleParams, PlayParams, RunConfig, StrategyKind,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Failure(_) => 3,
        }
    }
}

impl From<StringsError> for CliError {
    fn from(e: StringsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ComplexityError> for CliError {
    fn from(e: ComplexityError) -> Self {
        match e {
            ComplexityError::Strings(e) => e.into(),
            ComplexityError::ThresholdOrder { .. } => CliError::Data(e.to_string()),
            e => CliError::Failure(e.to_string()),
        }
    }
}

impl From<GamesError> for CliError {
    fn from(e: GamesError) -> Self {
        match e {
            GamesError::Complexity(e) => e.into(),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::BadDistribution(_) => CliError::Data(e.to_string()),
            OracleError::Games(e) => e.into(),
            e => CliError::Failure(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Strings(e) => e.into(),
            ExperimentError::Complexity(e) => e.into(),
            ExperimentError::Games(e) => e.into(),
            ExperimentError::Oracle(e) => e.into(),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "nonlocal", version, about = "Complexity analysis of non-local games")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON run configuration; flags given here override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write the effective configuration to PATH before running.
    #[arg(long, global = true, value_name = "PATH")]
    emit_config: Option<PathBuf>,
    /// Main output file (standard output when absent).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Estimator id: lz78, lz77, lz77:W, ctx_K or external:NAME.
    #[arg(long, global = true)]
    estimator: Option<String>,
    /// Register an external compressor as NAME=COMMAND (repeatable).
    #[arg(long = "external", global = true, value_name = "NAME=COMMAND", value_parser = parse_external)]
    external: Vec<(String, String)>,
    /// Base seed; the input, sampler and noise seeds are derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Rates at or below this classify as Zero.
    #[arg(long, global = true)]
    theta_zero: Option<f64>,
    /// Rates at or above this classify as Full.
    #[arg(long, global = true)]
    theta_full: Option<f64>,
    /// Largest per-round gap the no-signaling test tolerates.
    #[arg(long, global = true)]
    theta_ns: Option<f64>,
    /// Worker threads for the oracles.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// More log output on standard error (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn parse_external(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((name, cmd)) if !name.is_empty() && !cmd.is_empty() => Ok((name.to_string(), cmd.to_string())),
        _ => Err(format!("expected NAME=COMMAND, got `{s}`")),
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a `.syms` string.
    Gen(GenArgs),
    /// Play a strategy on inputs and write a quadruple with its manifest.
    Play(PlayArgs),
    /// Estimate plain, conditional or mutual-information complexities.
    Estimate(EstimateArgs),
    /// No-signaling test on a quadruple.
    Nosig(NosigArgs),
    /// Locality test on a quadruple against a witness string.
    Locality(LocalityArgs),
    /// Exact game values, local-polytope membership and marginal bounds.
    Oracle(OracleArgs),
    /// Run an experiment harness and write its report.
    Exp(ExpArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Option<GenKind>,
    /// Length in symbols.
    #[arg(long)]
    n: Option<usize>,
    /// Alphabet size for `random`.
    #[arg(long)]
    q: Option<u32>,
    /// Ring size for `promise`.
    #[arg(long)]
    m: Option<u32>,
    /// Second output for `promise` (the first goes to --out).
    #[arg(long, value_name = "PATH")]
    out_b: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlayArgs {
    #[arg(long, value_enum)]
    game: Option<GameName>,
    /// Ring size for the chained game.
    #[arg(long)]
    m: Option<u32>,
    /// Rounds when inputs are generated.
    #[arg(long)]
    n: Option<usize>,
    /// Alice's inputs; generated from the input seed when absent.
    #[arg(long, value_name = "PATH")]
    a: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    b: Option<PathBuf>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyKind>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Alice's table for `local`, comma separated.
    #[arg(long, value_delimiter = ',')]
    fa: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    fb: Option<Vec<u32>>,
    /// Directory receiving a.syms, b.syms, x.syms, y.syms and manifest.json.
    #[arg(long, value_name = "PATH")]
    dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long = "in", value_name = "PATH")]
    input: Option<PathBuf>,
    /// Conditioning string (repeatable).
    #[arg(long, value_name = "PATH")]
    given: Vec<PathBuf>,
    /// Also estimate I(in : PATH).
    #[arg(long, value_name = "PATH")]
    mi: Option<PathBuf>,
    /// Average both directions of the mutual information.
    #[arg(long)]
    symmetric: bool,
    /// Estimate I(in : B | C) with --cmi-b and --cmi-c.
    #[arg(long, value_name = "PATH", requires = "cmi_c")]
    cmi_b: Option<PathBuf>,
    #[arg(long, value_name = "PATH", requires = "cmi_b")]
    cmi_c: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NosigArgs {
    #[arg(long, value_name = "PATH")]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LocalityArgs {
    #[arg(long, value_name = "PATH")]
    manifest: Option<PathBuf>,
    /// Witness string; empty when absent.
    #[arg(long, value_name = "PATH")]
    lambda: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// Exact value of a game played `--reps` times in parallel.
    #[arg(long, value_enum, conflicts_with_all = ["fine", "marginals"])]
    game: Option<GameName>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    reps: Option<usize>,
    /// Local-polytope membership of a distribution table (JSON).
    #[arg(long, value_name = "PATH", conflicts_with = "marginals")]
    fine: Option<PathBuf>,
    /// Extremes of P(x=0 | a=0, b=0) for PR-satisfying distributions.
    #[arg(long)]
    marginals: bool,
    /// Require winning probability at least P (as p/q) instead of always.
    #[arg(long, value_name = "P", requires = "marginals")]
    relax: Option<String>,
    /// Drop the no-signaling constraints.
    #[arg(long, requires = "marginals")]
    no_ns: bool,
}

#[derive(Debug, Args)]
struct ExpArgs {
    #[arg(value_enum)]
    experiment: Option<ExpName>,
    /// Rounds.
    #[arg(long)]
    n: Option<usize>,
    /// Ring size for theorem3.
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyKind>,
    #[arg(long, value_delimiter = ',')]
    fa: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    fb: Option<Vec<u32>>,
    /// Also write the quantity rows as CSV.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

/// Starts from the config file (or defaults) and applies every flag given.
fn effective_config(cli: Cli) -> Result<RunConfig, CliError> {
    let g = cli.global;
    let base = match &g.config {
        Some(path) => Some(RunConfig::load(path)?),
        None => None,
    };
    let mut cfg = match base {
        Some(cfg) => {
            let wanted = subcommand_name(&cli.command);
            if cfg.command.name() != wanted {
                return Err(CliError::Usage(format!(
                    "config is for `{}`, not `{wanted}`",
                    cfg.command.name()
                )));
            }
            cfg
        }
        None => RunConfig::new(default_command(&cli.command)),
    };

    set_opt(&mut cfg.out, g.out);
    set(&mut cfg.estimator, g.estimator);
    for (name, cmd) in g.external {
        cfg.estimators.external.insert(name, cmd);
    }
    if let Some(s) = g.seed {
        cfg.seeds = SeedSet::from_u64(s);
    }
    set(&mut cfg.thresholds.zero, g.theta_zero);
    set(&mut cfg.thresholds.full, g.theta_full);
    set(&mut cfg.thresholds.ns, g.theta_ns);
    set(&mut cfg.jobs, g.jobs);

    match (cli.command, &mut cfg.command) {
        (Command::Gen(a), CommandConfig::Gen(p)) => {
            set_opt(&mut p.kind, a.kind);
            set(&mut p.n, a.n);
            set(&mut p.q, a.q);
            set(&mut p.m, a.m);
            set_opt(&mut p.out_b, a.out_b);
        }
        (Command::Play(a), CommandConfig::Play(p)) => {
            set(&mut p.game, a.game);
            set_opt(&mut p.m, a.m);
            set(&mut p.n, a.n);
            set_opt(&mut p.a, a.a);
            set_opt(&mut p.b, a.b);
            set(&mut p.strategy, a.strategy);
            set(&mut p.epsilon, a.epsilon);
            set(&mut p.fa, a.fa);
            set(&mut p.fb, a.fb);
            set_opt(&mut p.dir, a.dir);
        }
        (Command::Estimate(a), CommandConfig::Estimate(p)) => {
            set_opt(&mut p.input, a.input);
            if !a.given.is_empty() {
                p.given = a.given;
            }
            set_opt(&mut p.mi, a.mi);
            p.symmetric |= a.symmetric;
            set_opt(&mut p.cmi_b, a.cmi_b);
            set_opt(&mut p.cmi_c, a.cmi_c);
        }
        (Command::Nosig(a), CommandConfig::Nosig(p)) => set_opt(&mut p.manifest, a.manifest),
        (Command::Locality(a), CommandConfig::Locality(p)) => {
            set_opt(&mut p.manifest, a.manifest);
            set_opt(&mut p.lambda, a.lambda);
        }
        (Command::Oracle(a), CommandConfig::Oracle(p)) => {
            if a.game.is_some() || a.fine.is_some() || a.marginals {
                // A mode chosen on the command line replaces the configured one.
                *p = OracleParams { reps: p.reps, ..OracleParams::default() };
            }
            set_opt(&mut p.game, a.game);
            set_opt(&mut p.m, a.m);
            set(&mut p.reps, a.reps);
            set_opt(&mut p.fine, a.fine);
            p.marginals |= a.marginals;
            set_opt(&mut p.relax, a.relax);
            p.no_ns |= a.no_ns;
        }
        (Command::Exp(a), CommandConfig::Exp(p)) => {
            set_opt(&mut p.experiment, a.experiment);
            set(&mut p.n, a.n);
            set(&mut p.m, a.m);
            set_opt(&mut p.epsilon, a.epsilon);
            set(&mut p.strategy, a.strategy);
            set(&mut p.fa, a.fa);
            set(&mut p.fb, a.fb);
            set_opt(&mut p.csv, a.csv);
        }
        _ => unreachable!("subcommand and config kind checked above"),
    }
    Ok(cfg)
}

fn subcommand_name(c: &Command) -> &'static str {
    default_command(c).name()
}

fn default_command(c: &Command) -> CommandConfig {
    match c {
        Command::Gen(_) => CommandConfig::Gen(GenParams::default()),
        Command::Play(_) => CommandConfig::Play(PlayParams::default()),
        Command::Estimate(_) => CommandConfig::Estimate(EstimateParams::default()),
        Command::Nosig(_) => CommandConfig::Nosig(NosigParams::default()),
        Command::Locality(_) => CommandConfig::Locality(LocalityParams::default()),
        Command::Oracle(_) => CommandConfig::Oracle(OracleParams::default()),
        Command::Exp(_) => CommandConfig::Exp(ExpParams::default()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let emit = cli.global.emit_config.clone();
    let cfg = effective_config(cli)?;
    if let Some(path) = emit {
        std::fs::write(&path, cfg.to_json_pretty())?;
    }
    commands::execute(&cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.global.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).target(env_logger::Target::Stderr).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
