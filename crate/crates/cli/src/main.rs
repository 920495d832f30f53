mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use cokdv_core::verify::Corruption;

use commands::{Context, Outcome, Suite, EXIT_CONFIG};
use config::RunConfig;
use output::{OutputDir, RunManifest};

#[derive(Parser)]
#[command(name = "cokdv", version, about = "Spectral solver and verification harness for the coupled KdV system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (must be absent or empty).
    #[arg(long, global = true, default_value = "cokdv-out")]
    out: PathBuf,
    /// Top-level seed; overrides the configured one.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the Galerkin system and write the trajectory.
    Simulate,
    /// Run the identity and residual checks.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, hide = true, value_parser = parse_corruption)]
        inject_corruption: Option<Corruption>,
    },
    /// Solve the integral equation by fixed-point iteration.
    Contract,
    /// Estimate operator bounds and their scaling in the cutoff.
    Bounds,
    /// Compare truncations against a reference run.
    Converge,
}

fn parse_corruption(s: &str) -> Result<Corruption, String> {
    Corruption::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown corruption {s}"))
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Verify { .. } => "verify",
            Command::Contract => "contract",
            Command::Bounds => "bounds",
            Command::Converge => "converge",
        }
    }
}

fn fail(command: &str, code: i32, msg: &str) -> ExitCode {
    eprintln!("cokdv {command}: {msg}");
    println!("status=fail command={command} exit={code}");
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_CONFIG as u8),
            };
        }
    };
    let name = cli.command.name();
    let start = Instant::now();

    if let Some(n) = cli.threads {
        if n == 0 {
            return fail(name, EXIT_CONFIG, "--threads must be >= 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(name, EXIT_CONFIG, &e.to_string());
        }
    }
    let config = match (&cli.config, &cli.command) {
        (Some(path), _) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => return fail(name, EXIT_CONFIG, &e.to_string()),
        },
        (None, Command::Verify { .. }) => RunConfig::default(),
        (None, _) => return fail(name, EXIT_CONFIG, "--config is required"),
    };
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    let ctx = Context {
        config,
        config_path: cli.config.clone(),
        seed,
        seed_override: cli.seed.is_some(),
        quiet: cli.quiet,
        corruption: match &cli.command {
            Command::Verify { inject_corruption, .. } => *inject_corruption,
            _ => None,
        },
    };
    let out = match OutputDir::create(&cli.out) {
        Ok(o) => o,
        Err(e) => return fail(name, EXIT_CONFIG, &e.to_string()),
    };
    let result = match &cli.command {
        Command::Simulate => commands::simulate(&ctx, &out),
        Command::Verify { suite, .. } => commands::verify(&ctx, &out, *suite),
        Command::Contract => commands::contract(&ctx, &out),
        Command::Bounds => commands::bounds(&ctx, &out),
        Command::Converge => commands::converge(&ctx, &out),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("cokdv {name}: {e}");
            let _ = out.write_json("error.json", &serde_json::json!({ "error": e.to_string() }));
            Outcome { exit: commands::exit_code(&e), summary: Vec::new() }
        }
    };
    let status = if outcome.exit == 0 { "ok" } else { "fail" };
    let manifest = RunManifest {
        command: name.to_string(),
        config_path: ctx.config_path.clone(),
        output_dir: cli.out.clone(),
        seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
        status: status.to_string(),
        exit_code: outcome.exit,
    };
    if let Err(e) = out.finish(&manifest) {
        return fail(name, EXIT_CONFIG, &format!("cannot finalize output: {e}"));
    }
    let mut line = format!("status={status} command={name} exit={} seed={seed} out={}", outcome.exit, cli.out.display());
    for (k, v) in &outcome.summary {
        line.push_str(&format!(" {k}={v}"));
    }
    println!("{line}");
    ExitCode::from(outcome.exit as u8)
}
