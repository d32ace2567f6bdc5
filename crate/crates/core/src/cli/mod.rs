//! Command-line front end.

pub mod config;
pub mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{GeomError, Result};
use crate::jet::parse_expr;
use config::{parse_config, ScenarioConfig};
use run::{check_report_json, run_checks, select, sweep, sweep_report_json, sweep_table, table, write_report, Overrides};

#[derive(Debug, Parser)]
#[command(name = "warpgeom", version, about = "Numerical checks for warped product submanifolds of almost contact metric manifolds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for report.json.
    #[arg(long, global = true, default_value = "warpgeom-out")]
    pub out: PathBuf,
    /// Overrides the seed in the scenario file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long = "tol-identity", global = true)]
    pub tol_identity: Option<f64>,
    #[arg(long = "tol-ineq", global = true)]
    pub tol_ineq: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and build the scenario without running checks.
    Validate,
    /// Fit the constant type (alpha, beta) of the ambient.
    EstimateAb,
    /// Run every check.
    Analyze,
    /// Run the named checks (or `all`) and their prerequisites.
    Check {
        #[arg(required = true)]
        names: Vec<String>,
    },
    /// Rerun the scenario's checks over a list of parameter values.
    Sweep {
        /// theta, warping-scale or epsilon-perturbation.
        #[arg(long)]
        param: String,
        /// Comma-separated values; expressions such as `pi/6` are accepted.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
}

fn load(cli: &Cli) -> Result<(ScenarioConfig, Vec<u8>)> {
    let path = cli.config.as_ref().ok_or_else(|| GeomError::Validation("--config is required".into()))?;
    let bytes = std::fs::read(path).map_err(|e| GeomError::Parse(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config(path)?;
    Overrides { seed: cli.seed, samples: cli.samples, tol_identity: cli.tol_identity, tol_inequality: cli.tol_ineq }.apply(&mut cfg)?;
    Ok((cfg, bytes))
}

fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_expr(t, 0).and_then(|e| e.eval(&[])).map_err(|e| GeomError::Validation(format!("sweep value `{t}`: {e}"))))
        .collect()
}

fn execute(cli: &Cli) -> Result<i32> {
    let (cfg, bytes) = load(cli)?;
    match &cli.command {
        Command::Validate => {
            let scn = cfg.build()?;
            let first = scn.immersion.sample_box.lo.iter().zip(&scn.immersion.sample_box.hi).map(|(a, b)| 0.5 * (a + b)).collect();
            scn.immersion.sample(&scn.ambient.metric, &crate::jet::Point::new(first))?;
            println!(
                "{}: ambient {} (dim {}), submanifold dim {}, factors {}, splits {}, seed {}",
                cfg.name,
                scn.ambient.name,
                scn.ambient.dim(),
                scn.immersion.dim,
                if scn.warped.is_some() { "declared" } else { "none" },
                if scn.has_splits { "declared" } else { "none" },
                cfg.seed
            );
            Ok(0)
        }
        Command::Sweep { param, values } => {
            let values = parse_values(values)?;
            let names = select(&cfg.checks)?;
            let out = sweep(&cfg, param, &values, &names)?;
            let path = write_report(&cli.out, &sweep_report_json(&cfg, &bytes, param, &out))?;
            print!("{}", sweep_table(param, &out));
            println!("report: {}", path.display());
            Ok(out.exit_code)
        }
        cmd => {
            let (label, requested) = match cmd {
                Command::EstimateAb => ("estimate-ab", vec!["alpha_beta".to_string()]),
                Command::Analyze => ("analyze", vec!["all".to_string()]),
                Command::Check { names } => ("check", names.clone()),
                _ => unreachable!(),
            };
            let names = select(&requested)?;
            let scn = cfg.build()?;
            let outcomes = run_checks(&cfg, &scn, &names);
            let path = write_report(&cli.out, &check_report_json(label, &cfg, &bytes, &outcomes))?;
            print!("{}", table(&outcomes));
            println!("report: {}", path.display());
            Ok(run::exit_code(&outcomes))
        }
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
