//! `dephase`: batch front-end for the kinetic Kuramoto solver.
//!
//! Exit codes: 0 success (all explicit checks pass), 1 checks failed or
//! runtime error, 2 configuration error, 3 outer iteration not converging.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dephase_core::config::RunConfig;
use dephase_core::decay::DecayKind;
use dephase_core::run::{run_fit, run_simulate, run_solve, SolveFailure};
use dephase_core::verify::Suite;
use dephase_core::{Error, WeightSpec};

/// Overrides the configured output directory.
const OUT_ENV: &str = "DEPHASE_OUT_DIR";

#[derive(Parser)]
#[command(name = "dephase", version, about = "Kinetic Kuramoto solver with prescribed asymptotic data")]
struct Cli {
    /// Suppress progress messages on stderr.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the outer iteration and write CSV/JSON artifacts.
    Solve { config: PathBuf },
    /// Evolve a particle ensemble sampled from the constructed initial data.
    Simulate {
        config: PathBuf,
        /// Kinetic `order_parameter.csv` to compare against (default: solve first).
        #[arg(long)]
        kinetic: Option<PathBuf>,
    },
    /// Run the acceptance suite. Configs are matched to the exponential or
    /// polynomial runs by their weight; missing ones use the built-in defaults.
    Verify { configs: Vec<PathBuf> },
    /// Fit a decay model to one column of a CSV with a `t` column.
    Fit {
        csv: PathBuf,
        /// `exponential` or `polynomial`.
        #[arg(long, default_value = "exponential")]
        kind: String,
        /// Fit window `a,b`.
        #[arg(long, value_delimiter = ',', default_values_t = [2.0, 15.0])]
        window: Vec<f64>,
        #[arg(long, default_value = "R")]
        column: String,
        #[arg(long, default_value_t = 1e-12)]
        floor: f64,
    },
}

/// Exit code for an error that stopped a run.
fn code_for(e: &Error) -> ExitCode {
    match e {
        Error::Config(_)
        | Error::InvalidState(_)
        | Error::InvalidGrid(_)
        | Error::InvalidWeight(_)
        | Error::Quadrature(_) => ExitCode::from(2),
        Error::NotConverging { .. } => ExitCode::from(3),
        _ => ExitCode::from(1),
    }
}

fn load(path: &Path) -> Result<RunConfig, ExitCode> {
    let cfg = RunConfig::load(path).map_err(|e| {
        eprintln!("error: {}", e);
        ExitCode::from(2)
    })?;
    for w in cfg.validate().unwrap_or_default() {
        eprintln!("warning: {}", w);
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| cfg.output.dir.clone())
}

fn solve(path: &Path, quiet: bool) -> ExitCode {
    let cfg = match load(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let dir = out_dir(&cfg);
    match run_solve(&cfg, &dir) {
        Ok(out) => {
            if !quiet {
                let e = &out.solution.ledger.entries;
                eprintln!("converged after {} outer iterations; artifacts in {}", e.len(), dir.display());
                if let Some(fit) = out.summary["decay_fit"]["order_parameter"]["rate"].as_f64() {
                    eprintln!("fitted rate {:.6}", fit);
                }
            }
            if out.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("one or more explicit checks failed; see summary.json");
                ExitCode::from(1)
            }
        }
        Err(SolveFailure::Outer(f)) => {
            eprintln!("error: {}; ledger written to {}", f, dir.join("ledger.json").display());
            code_for(&f.error)
        }
        Err(SolveFailure::Other(e)) => {
            eprintln!("error: {}", e);
            code_for(&e)
        }
    }
}

fn simulate(path: &Path, kinetic: Option<&Path>, quiet: bool) -> ExitCode {
    let cfg = match load(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let dir = out_dir(&cfg);
    match run_simulate(&cfg, &dir, kinetic) {
        Ok(out) => {
            if !quiet {
                eprintln!(
                    "sup |R_N - R| = {:.4e}; |z_N(0) - z(0)| = {:.4e}; {} ω draws resampled; artifacts in {}",
                    out.sup_deviation,
                    out.initial_deviation,
                    out.resampled,
                    dir.display()
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e);
            code_for(&e)
        }
    }
}

fn verify(paths: &[PathBuf]) -> ExitCode {
    let mut exp = RunConfig::lorentzian_default();
    let mut poly = RunConfig::laplace_default();
    for p in paths {
        let cfg = match load(p) {
            Ok(c) => c,
            Err(code) => return code,
        };
        let checked = cfg.state().and_then(|st| cfg.grid().and_then(|g| g.check_quadrature(&st)));
        if let Err(e) = checked {
            eprintln!("error: {}: {}", p.display(), e);
            return code_for(&e);
        }
        match cfg.weight() {
            Ok(WeightSpec::Polynomial { .. }) => poly = cfg,
            _ => exp = cfg,
        }
    }
    let suite = Suite::new(exp, poly);
    let mut all = true;
    for i in 1..=10 {
        let c = suite.criterion(i);
        all &= c.pass;
        println!("{}", c);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn fit(csv: &Path, kind: &str, window: &[f64], column: &str, floor: f64) -> ExitCode {
    let Some(kind) = DecayKind::parse(kind) else {
        eprintln!("error: unknown decay kind {:?}", kind);
        return ExitCode::from(2);
    };
    if window.len() != 2 {
        eprintln!("error: --window takes two numbers");
        return ExitCode::from(2);
    }
    match run_fit(csv, column, kind, (window[0], window[1]), floor) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Solve { config } => solve(config, cli.quiet),
        Command::Simulate { config, kinetic } => simulate(config, kinetic.as_deref(), cli.quiet),
        Command::Verify { configs } => verify(configs),
        Command::Fit { csv, kind, window, column, floor } => fit(csv, kind, window, column, *floor),
    }
}
