//! Command line: `run`, `compare` and `check`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration or usage error,
//! 3 numerical abort or broken scheduling contract.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{Mode, ScenarioKind};
use crate::harness::{compute_metrics, preflight_report, run};
use crate::output::{emit, format_percent, RunManifest};
use crate::{batch, Error};

#[derive(Debug, Parser)]
#[command(name = "platoon", version, about = "Self-triggered adaptive platoon control simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one scenario and write CSV, summary and resolved config.
    Run(CommonArgs),
    /// Run self-triggered and continuous modes and print the reduction table.
    Compare(CommonArgs),
    /// Validate the configuration and run the preflight checks only.
    Check(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Scenario file (TOML). Defaults to the shipped configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::SelfTriggered)]
    mode: ModeArg,
    #[arg(long, value_enum)]
    scenario: Option<ScenarioArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Horizon in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Integration step in seconds.
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    SelfTriggered,
    Continuous,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Linear,
    Queue,
}

impl CommonArgs {
    fn manifest(&self) -> RunManifest {
        RunManifest {
            config_path: self.config.clone(),
            output_directory: self.out.clone(),
            mode: match self.mode {
                ModeArg::SelfTriggered => Mode::SelfTriggered,
                ModeArg::Continuous => Mode::Continuous,
            },
            seed: self.seed,
            scenario: self.scenario.map(|s| match s {
                ScenarioArg::Linear => ScenarioKind::Linear,
                ScenarioArg::Queue => ScenarioKind::LinearQueue,
            }),
            duration: self.duration,
            dt: self.dt,
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => 1,
        Error::Config { .. } | Error::Parse { .. } | Error::Argument(_) | Error::EigenSolve { .. } => 2,
        Error::Numerical { .. } | Error::Contract(_) => 3,
    }
}

/// Entry point shared by the binary and the tests.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command) -> crate::Result<()> {
    match command {
        Command::Run(args) => {
            let manifest = args.manifest();
            let config = manifest.resolve_config()?;
            let record = run(&config)?;
            let metrics = compute_metrics(&record, &config)?;
            let written = emit(&record, &metrics, &config, &manifest)?;
            print!("{}", crate::output::event_table(&record));
            for p in written {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Compare(args) => {
            let mut manifest = args.manifest();
            manifest.mode = Mode::SelfTriggered;
            let triggered = manifest.resolve_config()?;
            let mut continuous = triggered.clone();
            continuous.scenario.mode = Mode::Continuous;
            let records = batch::run_many(&[triggered, continuous]);
            let mut records = records.into_iter();
            let st = records.next().expect("two runs")?;
            let ct = records.next().expect("two runs")?;
            println!(
                "{:<8}{:>16}{:>12}{:>16}",
                "Vehicle", "Self-Triggered", "Continuous", "Reduction (%)"
            );
            for (i, (a, b)) in st.vehicles.iter().zip(&ct.vehicles).enumerate() {
                let (e, c) = (a.event_count as u64, b.event_count as u64);
                println!(
                    "{:<8}{:>16}{:>12}{:>16}",
                    format!("AV{}", i + 1),
                    e,
                    c,
                    format_percent(c - e.min(c), c)
                );
            }
            Ok(())
        }
        Command::Check(args) => {
            let config = args.manifest().resolve_config()?;
            let report = preflight_report(&config);
            let mut failed = None;
            for c in &report {
                println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
                if !c.passed && failed.is_none() {
                    failed = Some(c.name.clone());
                }
            }
            match failed {
                Some(name) => Err(Error::Config {
                    field: "preflight".into(),
                    reason: format!("{name} failed"),
                }),
                None => {
                    crate::harness::preflight(&config)?;
                    Ok(())
                }
            }
        }
    }
}
