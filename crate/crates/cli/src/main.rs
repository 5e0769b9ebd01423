use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use gluelab::glued::GluedMetric;
use serde_json::json;

mod output;
mod run;
mod scenario;

use output::{fmt12, json_bytes, sha256_hex, write_all, Artifact};

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

#[derive(Parser)]
#[command(name = "gluelab", version, about = "Glued-sphere experiments and verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Multiplies the resolution knobs.
    #[arg(long, global = true, default_value_t = 1.0)]
    resolution_scale: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Runs a scenario file.
    Run { config: PathBuf },
    /// Runs a named suite of checks.
    Verify {
        /// One of axioms, oracle, density, modulus, extension, all, c1..c13.
        suite: String,
    },
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("config error: {msg}");
    ExitCode::from(EXIT_CONFIG)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    if !(cli.resolution_scale > 0.0 && cli.resolution_scale.is_finite()) {
        return config_error(format!("--resolution-scale must be positive, got {}", cli.resolution_scale));
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            return config_error("--threads must be at least 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            return config_error(e);
        }
    }
    match &cli.command {
        Command::Run { config } => run_scenario(&cli, config),
        Command::Verify { suite } => verify(&cli, suite),
    }
}

fn run_scenario(cli: &Cli, path: &PathBuf) -> ExitCode {
    let start = Instant::now();
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return config_error(format!("{}: {e}", path.display())),
    };
    let scenario: scenario::Scenario = match toml::from_str(&text) {
        Ok(s) => s,
        Err(e) => return config_error(format!("{}: {e}", path.display())),
    };
    let problems = scenario::validate(&scenario);
    if !problems.is_empty() {
        for p in &problems {
            eprintln!("config error: {p}");
        }
        return ExitCode::from(EXIT_CONFIG);
    }
    let homeo = match scenario.homeo.build() {
        Ok(h) => h,
        Err(e) => return config_error(format!("homeo: {e}")),
    };
    let metric = GluedMetric::new(homeo);
    let out = cli.out.clone().or(scenario.out.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
    let outcome = match run::run(&scenario, &metric, cli.resolution_scale) {
        Ok(o) => o,
        Err(f) => {
            eprintln!("numeric failure in {}: {}", f.operation, f.error);
            return ExitCode::from(if matches!(f.error, gluelab::Error::Config(_)) { EXIT_CONFIG } else { EXIT_NUMERIC });
        }
    };
    let mut artifacts = outcome.artifacts;
    let files: Vec<_> = artifacts.iter().map(|a| json!({ "name": a.name, "sha256": sha256_hex(&a.bytes) })).collect();
    let manifest = json!({
        "scenario": scenario.name,
        "config": path.display().to_string(),
        "config_sha256": sha256_hex(text.as_bytes()),
        "gluelab_version": gluelab::VERSION,
        "cli_version": env!("CARGO_PKG_VERSION"),
        "resolution_scale": fmt12(cli.resolution_scale),
        "threads": rayon::current_num_threads(),
        "files": files,
        "invariant_violation": outcome.violation,
        "wall_seconds": start.elapsed().as_secs_f64(),
    });
    artifacts.push(Artifact::new("manifest.json", json_bytes(&manifest)));
    if let Err(e) = write_all(&out, &artifacts) {
        eprintln!("cannot write {}: {e}", out.display());
        return ExitCode::from(EXIT_NUMERIC);
    }
    println!("wrote {} files to {}", artifacts.len(), out.display());
    match outcome.violation {
        Some(v) => {
            eprintln!("invariant failure: {v}");
            ExitCode::from(EXIT_INVARIANT)
        }
        None => ExitCode::SUCCESS,
    }
}

fn verify(cli: &Cli, suite: &str) -> ExitCode {
    let report = match gluelab::verify::run_suite(suite, cli.resolution_scale) {
        Ok(r) => r,
        Err(gluelab::Error::Config(e)) => return config_error(e),
        Err(e) => {
            eprintln!("numeric failure in verify {suite}: {e}");
            return ExitCode::from(EXIT_NUMERIC);
        }
    };
    for c in &report.checks {
        println!(
            "{} {} measured={} threshold={} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            fmt12(c.measured),
            fmt12(c.threshold),
            c.detail
        );
    }
    if let Some(dir) = &cli.out {
        let bytes = json_bytes(&serde_json::to_value(&report).expect("report serializes"));
        if let Err(e) = write_all(dir, &[Artifact::new(&format!("verify_{suite}.json"), bytes)]) {
            eprintln!("cannot write {}: {e}", dir.display());
            return ExitCode::from(EXIT_NUMERIC);
        }
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INVARIANT)
    }
}
