use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lvflow::io::{self, TraceFilter};
use lvflow::mltest::ml_test;
use lvflow::presets::{build, Mode, RunConfig};
use lvflow::verify::{run_checks, select, VerifyOptions, DEFAULT_ORACLE_DEPTH, DEFAULT_SAMPLES, DEFAULT_SEED};
use lvflow::{Error, Result};

#[derive(Parser)]
#[command(name = "lvflow", version, about = "Exact network-flow constructions on truncated binary trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a construction and write its bundle directory.
    Build(BuildArgs),
    /// Run invariant checks over a bundle.
    Verify(VerifyArgs),
    /// Re-serialize a bundle into another directory.
    Export {
        bundle: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print step records matching a filter, one per line.
    Trace {
        bundle: PathBuf,
        #[arg(long)]
        task: Option<u64>,
        #[arg(long)]
        subtask: Option<u64>,
        #[arg(long)]
        level: Option<usize>,
    },
    /// Build the test sets U_i from the edges and check their bounds.
    Mltest {
        bundle: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    networks: Option<usize>,
    #[arg(long, value_parser = ["sparse", "dense"])]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    bundle: PathBuf,
    #[arg(long, default_value = "all")]
    checks: String,
    #[arg(long, default_value_t = DEFAULT_ORACLE_DEPTH)]
    oracle_depth: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    /// Directory for report.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run_config(a: &BuildArgs) -> Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
        }
        None => {
            let preset = a.preset.as_deref().ok_or_else(|| Error::Config("--preset or --config is required".into()))?;
            let depth = a.depth.ok_or_else(|| Error::Config("--depth or --config is required".into()))?;
            RunConfig::new(preset, depth)
        }
    };
    if let Some(p) = &a.preset {
        cfg.preset = p.clone();
    }
    if let Some(d) = a.depth {
        cfg.depth = d;
    }
    if let Some(k) = a.networks {
        cfg.networks = k;
    }
    if let Some(m) = &a.mode {
        cfg.mode = if m == "dense" { Mode::Dense } else { Mode::Sparse };
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_json(v: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn write_report(dir: &Path, v: &impl Serialize) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    std::fs::write(dir.join(io::REPORT), s)?;
    Ok(())
}

/// Exit code 0 or 1 on success of the command itself.
fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Build(a) => {
            let cfg = run_config(&a)?;
            let b = build(&cfg)?;
            let summary = io::build_summary(&b);
            io::write_bundle(&a.out, &b, &summary)?;
            print_json(&summary)?;
            Ok(0)
        }
        Command::Verify(a) => {
            let (b, _) = io::read_bundle(&a.bundle)?;
            let seed = a.seed.unwrap_or(if b.config.seed != 0 { b.config.seed } else { DEFAULT_SEED });
            let opts = VerifyOptions {
                seed,
                samples: a.samples,
                oracle_depth: a.oracle_depth,
            };
            let report = run_checks(&b, &select(&a.checks)?, opts)?;
            if let Some(dir) = &a.out {
                write_report(dir, &report)?;
            }
            print_json(&report)?;
            for name in report.failing() {
                eprintln!("check failed: {name}");
            }
            Ok(if report.passed() { 0 } else { 1 })
        }
        Command::Export { bundle, out } => {
            let (b, report) = io::read_bundle(&bundle)?;
            io::write_bundle(&out, &b, &report)?;
            Ok(0)
        }
        Command::Trace {
            bundle,
            task,
            subtask,
            level,
        } => {
            let (b, _) = io::read_bundle(&bundle)?;
            let filter = TraceFilter { task, subtask, level };
            let mut stdout = std::io::stdout().lock();
            for r in io::trace(&b.provenance, &filter) {
                match writeln!(stdout, "{}", serde_json::to_string(r)?) {
                    Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => break,
                    other => other?,
                }
            }
            Ok(0)
        }
        Command::Mltest { bundle, out } => {
            let (b, _) = io::read_bundle(&bundle)?;
            let t = ml_test(&b)?;
            if let Some(dir) = &out {
                write_report(dir, &t)?;
            }
            print_json(&t)?;
            Ok(if t.holds() { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
