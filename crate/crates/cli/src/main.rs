use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qcs_cli::config::{Mode, ScenarioConfig};
use qcs_cli::validate::{has_errors, Diagnostic, Severity};
use qcs_cli::{run_scenario, validate_config, RunError};

#[derive(Parser)]
#[command(name = "qcs", version, about = "Entangled-pair clock synchronization simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run(RunArgs),
    /// Check a scenario file and print diagnostics as JSON lines.
    Validate { config: PathBuf },
    /// Run a baseline_sweep scenario.
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Output directory (overrides `output_dir` in the file).
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long)]
    quantum_seed: Option<u64>,
    #[arg(long)]
    channel_seed: Option<u64>,
}

fn print_diagnostics(diags: &[Diagnostic]) {
    for d in diags {
        println!("{}", serde_json::to_string(d).expect("diagnostics serialize"));
    }
}

fn load(path: &PathBuf) -> Result<ScenarioConfig, ExitCode> {
    ScenarioConfig::load(path).map_err(|e| {
        print_diagnostics(&[Diagnostic {
            field: path.display().to_string(),
            constraint: "readable TOML scenario".into(),
            observed: e.to_string(),
            severity: Severity::Error,
        }]);
        ExitCode::from(1)
    })
}

fn run(args: RunArgs, sweep_only: bool) -> ExitCode {
    let mut cfg = match load(&args.config) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Some(q) = args.quantum_seed {
        cfg.seeds.quantum = q;
    }
    if let Some(c) = args.channel_seed {
        cfg.seeds.channel = c;
    }
    let mut pre = Vec::new();
    if sweep_only && cfg.mode != Mode::BaselineSweep {
        pre.push(Diagnostic {
            field: "mode".into(),
            constraint: "baseline_sweep for the sweep subcommand".into(),
            observed: format!("{:?}", cfg.mode),
            severity: Severity::Error,
        });
    }
    let out = args.out.or_else(|| cfg.output_dir.clone());
    if out.is_none() {
        pre.push(Diagnostic {
            field: "output_dir".into(),
            constraint: "set in the file or with --out".into(),
            observed: "missing".into(),
            severity: Severity::Error,
        });
    }
    if !pre.is_empty() {
        print_diagnostics(&pre);
        return ExitCode::from(1);
    }
    let warnings: Vec<_> = validate_config(&cfg)
        .into_iter()
        .filter(|d| d.severity == Severity::Warning)
        .collect();
    for w in &warnings {
        eprintln!("warning: {} ({}), observed {}", w.field, w.constraint, w.observed);
    }
    match run_scenario(&cfg, out.as_deref().expect("checked above")) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(RunError::Invalid(diags)) => {
            print_diagnostics(&diags);
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run(args, false),
        Command::Sweep(args) => run(args, true),
        Command::Validate { config } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let diags = validate_config(&cfg);
            print_diagnostics(&diags);
            ExitCode::from(if has_errors(&diags) { 1 } else { 0 })
        }
    }
}
