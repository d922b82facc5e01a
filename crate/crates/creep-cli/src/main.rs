//! `creep`: scenario runner for the creep simulation and quadrature engines.
//!
//! Exit codes: 0 agreement/success, 1 disagreement, 2 inconclusive,
//! 3 invalid configuration or usage, 4 unknown scenario, 5 quadrature
//! failure, 6 io error.

mod config;
mod report;
mod runner;

use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{find_golden, ScenarioConfig};
use runner::{Format, OutputSpec, RunError, RunProduct};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "creep",
    version,
    about = "Creep-probability experiments: Monte Carlo vs quadrature",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the Monte Carlo batch of a scenario, no verdict.
    Simulate(RunArgs),
    /// Evaluate the analytic route of a scenario, no sampling.
    Quadrature(RunArgs),
    /// Run both routes and judge their agreement.
    Compare(RunArgs),
    /// Run both mean-reversion routes and check they agree.
    Ou(RunArgs),
    /// Check the pathwise reversal identities of a scenario.
    TanakaCheck(RunArgs),
    /// Run every golden scenario with its natural check.
    Suite(SuiteArgs),
    /// List the golden scenarios.
    ListGolden,
}

#[derive(Args)]
struct RunArgs {
    /// Name of a golden scenario.
    #[arg(long, conflicts_with = "config")]
    scenario: Option<String>,
    /// Path to a scenario file with the same schema as the golden set.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the scenario's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scenario's path count.
    #[arg(long)]
    paths: Option<u64>,
    /// Override every jump-truncation floor in the scenario.
    #[arg(long)]
    eps: Option<f64>,
    /// Worker threads for path generation; 0 sizes to the machine.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Write report files here instead of printing the summary JSON.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// json writes the summary only; csv adds the per-path outcome dump.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Args)]
struct SuiteArgs {
    /// Worker threads for path generation; 0 sizes to the machine.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Write per-scenario reports and the roll-up here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// json writes summaries only; csv adds the per-path outcome dumps.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        }
    }
}

fn load(args: &RunArgs) -> Result<ScenarioConfig, RunError> {
    let mut cfg = match (&args.scenario, &args.config) {
        (Some(name), None) => {
            let entry = find_golden(name).ok_or_else(|| {
                RunError::UnknownScenario(format!(
                    "{name} (creep list-golden shows the catalog)"
                ))
            })?;
            ScenarioConfig::parse(entry.source).map_err(RunError::Config)?
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
            ScenarioConfig::parse(&text)
                .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?
        }
        (None, None) => {
            return Err(RunError::Config("pass --scenario NAME or --config FILE".into()))
        }
        (Some(_), Some(_)) => unreachable!("clap forbids the combination"),
    };
    if let Some(p) = args.paths {
        cfg.n_paths = p;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(e) = args.eps {
        if !(e > 0.0 && e.is_finite()) {
            return Err(RunError::Config(format!("eps must be positive, got {e}")));
        }
        cfg.set_eps(e);
    }
    let problems = cfg.validate();
    if !problems.is_empty() {
        return Err(RunError::Config(problems.join("; ")));
    }
    Ok(cfg)
}

fn output_spec(out_dir: &Option<PathBuf>, format: FormatArg) -> OutputSpec {
    OutputSpec {
        out_dir: out_dir.clone(),
        format: format.into(),
    }
}

/// Emit files (if requested), print either the full JSON or the one-line
/// headline, and hand back the scenario's exit code.
fn finish(product: RunProduct, out: &OutputSpec) -> Result<i32, RunError> {
    product.emit(out)?;
    if out.out_dir.is_some() {
        println!("{}", product.report.headline());
    } else {
        print!("{}", product.report.to_json());
    }
    Ok(product.report.exit_code)
}

fn run(cli: Cli) -> Result<i32, RunError> {
    match cli.cmd {
        Cmd::Simulate(args) => {
            let cfg = load(&args)?;
            let out = output_spec(&args.out_dir, args.format);
            finish(runner::run_simulate(&cfg, args.workers)?, &out)
        }
        Cmd::Quadrature(args) => {
            let cfg = load(&args)?;
            let out = output_spec(&args.out_dir, args.format);
            finish(runner::run_quadrature(&cfg)?, &out)
        }
        Cmd::Compare(args) => {
            let cfg = load(&args)?;
            let out = output_spec(&args.out_dir, args.format);
            finish(runner::run_compare(&cfg, args.workers)?, &out)
        }
        Cmd::Ou(args) => {
            let cfg = load(&args)?;
            let out = output_spec(&args.out_dir, args.format);
            finish(runner::run_ou(&cfg, args.workers)?, &out)
        }
        Cmd::TanakaCheck(args) => {
            let cfg = load(&args)?;
            let out = output_spec(&args.out_dir, args.format);
            finish(runner::run_tanaka(&cfg, args.workers)?, &out)
        }
        Cmd::Suite(args) => {
            let out = output_spec(&args.out_dir, args.format);
            let (suite, lines) = runner::run_suite(args.workers, &out)?;
            for line in lines {
                println!("{line}");
            }
            let ok = suite.rows.iter().filter(|r| r.ok).count();
            println!("suite: {ok}/{} ok", suite.rows.len());
            Ok(if suite.all_ok { 0 } else { 1 })
        }
        Cmd::ListGolden => {
            for (name, expected, n_paths, anchor) in runner::golden_catalog()? {
                println!("{name:<28} {n_paths:>7} paths  expected {expected:<40} {anchor}");
            }
            Ok(0)
        }
    }
}

fn main() {
    // Usage errors share the invalid-config exit code; --help/--version are
    // not errors.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            std::process::exit(e.exit_code());
        }
    }
}
