//! Command line front end: config loading, scenario execution and output.

pub mod config;
pub mod output;
pub mod scenarios;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{ConfigIssue, Scenario};
use output::{stamped_json, Stamp};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "settomo", version, about = "Stimulated emission tomography toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Scenario config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "settomo_out")]
    pub out: PathBuf,
    /// Overrides `rng_seed` from the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample the joint spectral amplitude.
    Jsa(RunArgs),
    /// Schmidt decomposition of the kernel.
    Schmidt(RunArgs),
    /// Seeded signal spectrum against its approximations.
    Direct(RunArgs),
    /// Interferometric record over the delay grid.
    Interf(RunArgs),
    /// Invert a record back to the joint amplitude.
    Reconstruct(RunArgs),
    /// Timing-jitter sweep, analytic and Monte Carlo.
    NoiseSweep(RunArgs),
    /// Exact versus low-gain deviation over a range of gains.
    GainSweep(RunArgs),
    /// Mode model against the Gaussian-state oracle on random instances.
    OracleCheck(RunArgs),
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

impl Command {
    fn scenario(&self) -> Option<(Scenario, &RunArgs)> {
        Some(match self {
            Command::Jsa(a) => (Scenario::Jsa, a),
            Command::Schmidt(a) => (Scenario::Schmidt, a),
            Command::Direct(a) => (Scenario::Direct, a),
            Command::Interf(a) => (Scenario::Interf, a),
            Command::Reconstruct(a) => (Scenario::Reconstruct, a),
            Command::NoiseSweep(a) => (Scenario::NoiseSweep, a),
            Command::GainSweep(a) => (Scenario::GainSweep, a),
            Command::OracleCheck(a) => (Scenario::OracleCheck, a),
            Command::Validate { .. } => return None,
        })
    }
}

fn report_issues(err: &mut dyn Write, path: &Path, issues: &[ConfigIssue]) {
    let _ = writeln!(err, "config error: {} has {} problem(s)", path.display(), issues.len());
    for i in issues {
        let _ = writeln!(err, "  {}: {i}", path.display());
    }
}

fn read_config(path: &Path, err: &mut dyn Write) -> Option<(String, PathBuf)> {
    match std::fs::read_to_string(path) {
        Ok(text) => {
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            Some((text, base))
        }
        Err(e) => {
            let _ = writeln!(err, "config error: cannot read {}: {e}", path.display());
            None
        }
    }
}

/// Run a parsed command and return the process exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match cli.command.scenario() {
        Some((scenario, args)) => run_scenario(scenario, args, out, err),
        None => match &cli.command {
            Command::Validate { config } => validate(config, out, err),
            _ => unreachable!(),
        },
    }
}

fn validate(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some((text, base)) = read_config(path, err) else { return EXIT_CONFIG };
    match config::load(&text, &base, None, None) {
        Ok(inputs) => {
            let mut effective = inputs.config.clone();
            effective.coupling.gain = Some(inputs.coupling.gain);
            let _ = writeln!(out, "ok: {}", path.display());
            let _ = writeln!(out, "effective config (defaults filled in):");
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&effective).expect("config serializes"));
            EXIT_OK
        }
        Err(issues) => {
            report_issues(err, path, &issues);
            EXIT_CONFIG
        }
    }
}

fn run_scenario(scenario: Scenario, args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let started = Instant::now();
    let Some((text, base)) = read_config(&args.config, err) else { return EXIT_CONFIG };
    let inputs = match config::load(&text, &base, Some(scenario), args.seed) {
        Ok(i) => i,
        Err(issues) => {
            report_issues(err, &args.config, &issues);
            return EXIT_CONFIG;
        }
    };
    let stamp = Stamp::new(text.as_bytes(), args.seed);
    let result = match scenarios::run(&inputs, &stamp) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "numeric error: {}: {e}", e.name());
            return EXIT_NUMERIC;
        }
    };
    for w in &result.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    let written = match result.outputs.write_all(&args.out) {
        Ok(w) => w,
        Err(e) => {
            let _ = writeln!(err, "config error: cannot write to {}: {e}", args.out.display());
            return EXIT_CONFIG;
        }
    };
    // Wall time is kept apart so the other files stay byte-reproducible.
    let timing = serde_json::json!({"runtime_s": started.elapsed().as_secs_f64()});
    let timing_path = args.out.join("timing.json");
    if let Err(e) = std::fs::write(&timing_path, stamped_json(&stamp, &timing).expect("timing serializes")) {
        let _ = writeln!(err, "warning: cannot write {}: {e}", timing_path.display());
    }
    let _ = writeln!(out, "{scenario}: wrote {} file(s) to {}", written.len() + 1, args.out.display());
    for p in &written {
        let _ = writeln!(out, "  {}", p.display());
    }
    match result.failure {
        Some(msg) => {
            let _ = writeln!(err, "numeric error: {msg}");
            EXIT_NUMERIC
        }
        None => EXIT_OK,
    }
}
