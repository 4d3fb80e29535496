//! Command-line front end: certification runs, end-volume verdicts, the
//! invariant self-check, and the family catalog.
//!
//! Exit codes: 0 success (certificate true / volume finite), 1 certificate
//! false, 2 configuration problem, 3 model construction problem, 4 numeric
//! range failure, 5 divergent volume, 6 inconclusive volume.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use endcurv::error::Error;
use endcurv::{certify, end_volume, parse_config, write_atomic, RunConfig, VolumeVerdict};

#[derive(Parser)]
#[command(
    name = "endcurv",
    version,
    about = "Certify curvature sign and end volume for warped metric families"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan the radial grid, extremize sectional curvature, write the report
    Certify(RunArgs),
    /// Decide whether the configured family's end has finite volume
    Volume(RunArgs),
    /// Run the built-in invariant suites and print per-suite counts
    Selfcheck {
        /// Seed for the randomized checks
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List the built-in families and their parameters
    Models,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration file (`key = value` lines, dotted keys)
    #[arg(long)]
    config: PathBuf,
    /// Override optimizer.seed from the config
    #[arg(long)]
    seed: Option<u64>,
    /// Cap worker threads; never changes the output bytes
    #[arg(long)]
    jobs: Option<usize>,
    /// Report destination, overriding output.report
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV side-table destination, overriding output.csv
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Io(_) => 2,
        Error::InvalidParams(_)
        | Error::InvalidTransition { .. }
        | Error::InfeasibleSmoothing { .. }
        | Error::ProviderAsymmetry { .. } => 3,
        Error::Range { .. }
        | Error::OutsideDomain { .. }
        | Error::DegeneratePlane
        | Error::DimensionTooLarge { .. } => 4,
    }
}

fn load_config(args: &RunArgs) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run_certify(args: &RunArgs) -> Result<u8, Error> {
    let cfg = load_config(args)?;
    let report_path = args
        .out
        .clone()
        .or_else(|| cfg.report_path.as_ref().map(PathBuf::from))
        .ok_or_else(|| {
            Error::Config("no report destination: set output.report or pass --out".into())
        })?;
    let csv_path = args.csv.clone().or_else(|| cfg.csv_path.as_ref().map(PathBuf::from));

    let report = certify(&cfg, args.jobs)?;
    write_atomic(&report_path, &report.to_json_bytes())?;
    if let Some(path) = &csv_path {
        write_atomic(path, &report.to_csv_bytes())?;
    }

    println!("family: {} (dimension {})", report.family, report.dim);
    println!("radii sampled: {}", report.radii.len());
    println!("K range: [{:.16e}, {:.16e}]", report.k_inf, report.k_sup);
    println!(
        "sign certificate: {}",
        if report.sign_certificate { "true (all sampled K < 0)" } else { "FALSE (K >= 0 found)" }
    );
    println!("II negative definite everywhere: {}", report.ii_all_negative_definite);
    if let Some(note) = &report.product_hypothesis {
        println!("product check: {note}");
    }
    let vol = &report.volume.negative_end;
    println!("end volume: {} ({})", vol.verdict, vol.detail);
    if let Some(form) = &report.volume.exponential_form {
        println!(
            "exponential form past r = {}: {}",
            form.probes[0] - 1.0,
            if form.passes { "confirmed" } else { "NOT confirmed" }
        );
    }
    println!("report: {}", report_path.display());
    if let Some(path) = &csv_path {
        println!("csv: {}", path.display());
    }
    Ok(if report.sign_certificate { 0 } else { 1 })
}

fn run_volume(args: &RunArgs) -> Result<u8, Error> {
    let cfg = load_config(args)?;
    let family = cfg.model.build()?;
    let verdict = end_volume(&family, cfg.volume_r_hi)?;
    match &verdict {
        VolumeVerdict::Finite { value, relative_error, tail_bound } => {
            println!("finite: volume {value:.16e} (relative error {relative_error:.3e})");
            println!("{tail_bound}");
            Ok(0)
        }
        VolumeVerdict::Divergent { reason } => {
            println!("divergent: {reason}");
            Ok(5)
        }
        VolumeVerdict::Inconclusive { reason } => {
            println!("inconclusive: {reason}");
            Ok(6)
        }
    }
}

fn run_selfcheck(seed: u64) -> u8 {
    let results = endcurv::selfcheck::run(seed);
    let mut failed = false;
    for suite in &results {
        if suite.failures == 0 {
            println!("ok   {} ({} checks)", suite.name, suite.checks);
        } else {
            failed = true;
            println!(
                "FAIL {} ({} of {} checks failed)",
                suite.name, suite.failures, suite.checks
            );
            if let Some(first) = &suite.first_failure {
                println!("     first failure: {first}");
            }
        }
    }
    let total: u32 = results.iter().map(|s| s.checks).sum();
    println!("{} suites, {total} checks", results.len());
    u8::from(failed)
}

fn run_models() {
    for family in endcurv::models::catalog() {
        println!("{}", family.name);
        println!("  {}", family.summary);
        for (key, default, doc) in family.params {
            println!("  model.{key} (default {default}): {doc}");
        }
        println!();
    }
    println!("products nest factor blocks under model.left. and model.right.");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Certify(args) => run_certify(args),
        Command::Volume(args) => run_volume(args),
        Command::Selfcheck { seed } => Ok(run_selfcheck(*seed)),
        Command::Models => {
            run_models();
            Ok(0)
        }
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
