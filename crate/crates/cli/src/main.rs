//! `fracdiff`: drivers for the operator, measure and process computations.
//!
//! Exit codes: 0 when every in-run assertion passes, 1 when one fails, 2 on
//! errors. Failures and errors also print a JSON record on stderr.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use report::{Report, Status};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Tower description (JSON). Defaults to the unramified n! tower over Q_2.
    #[arg(long, global = true)]
    pub tower: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub alpha: f64,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, global = true, default_value_t = fracdiff_core::verify::DEFAULT_SEED)]
    pub seed: u64,
    /// Overrides the command's default tolerance.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
}

#[derive(Parser, Debug)]
#[command(name = "fracdiff", version, about = "Fractional differentiation on towers of p-adic fields")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Distinct eigenvalues with generating pairs and multiplicities.
    Spectrum {
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = 16.0)]
        max_value: f64,
    },
    /// Apply D^α by the spectral, hypersingular and Levy routes.
    Apply {
        /// Function file (CSV `coset,real,imag` or JSON); random values when absent.
        #[arg(long)]
        function: Option<PathBuf>,
        #[arg(long)]
        level: Option<usize>,
        #[arg(long)]
        radius: Option<u32>,
    },
    /// Gaussian versus heat measure of the cylinders M_n.
    Theorem3 {
        #[arg(long = "big-n", default_value_t = 1)]
        big_n: u64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Levy measure shells, the Levy-Khinchin identity and optional integrals.
    Levy {
        #[arg(long, default_value_t = 1)]
        level: usize,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        /// λ = π^{-J}.
        #[arg(long = "lambda-exponent", default_value_t = 1, allow_hyphen_values = true)]
        lambda_exponent: i64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Function to integrate against Π(t, ·); must vanish on the zero coset.
        #[arg(long)]
        function: Option<PathBuf>,
        #[arg(long)]
        radius: Option<u32>,
    },
    /// Heat kernel by valuation, total mass and ball masses.
    Heat {
        #[arg(long, default_value_t = 1)]
        level: usize,
        #[arg(long = "big-n", default_value_t = 1)]
        big_n: u64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 12)]
        shells: u32,
    },
    /// Monte Carlo characteristic function of the truncated process.
    Simulate {
        #[arg(long, default_value_t = 1)]
        level: usize,
        #[arg(long = "lambda-exponent", default_value_t = 1, allow_hyphen_values = true)]
        lambda_exponent: i64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Jump cutoff; defaults to ‖λ‖^{-1} (1 when ‖λ‖ ≤ 1).
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        paths: u64,
    },
    /// Run the full acceptance suite.
    VerifyAll,
}

fn run(cli: &Cli) -> anyhow::Result<Report> {
    let c = &cli.common;
    match &cli.command {
        Command::Spectrum { horizon, max_value } => commands::spectrum_cmd(c, *horizon, *max_value),
        Command::Apply { function, level, radius } => commands::apply_cmd(c, function.as_deref(), *level, *radius),
        Command::Theorem3 { big_n, t, horizon } => commands::theorem3_cmd(c, *big_n, *t, *horizon),
        Command::Levy { level, delta, lambda_exponent, t, function, radius } => {
            commands::levy_cmd(c, *level, *delta, *lambda_exponent, *t, function.as_deref(), *radius)
        }
        Command::Heat { level, big_n, t, shells } => commands::heat_cmd(c, *level, *big_n, *t, *shells),
        Command::Simulate { level, lambda_exponent, t, delta, paths } => {
            commands::simulate_cmd(c, *level, *lambda_exponent, *t, *delta, *paths)
        }
        Command::VerifyAll => commands::verify_all_cmd(c),
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Spectrum { .. } => "spectrum",
        Command::Apply { .. } => "apply",
        Command::Theorem3 { .. } => "theorem3",
        Command::Levy { .. } => "levy",
        Command::Heat { .. } => "heat",
        Command::Simulate { .. } => "simulate",
        Command::VerifyAll => "verify-all",
    }
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    e.chain()
        .find_map(|c| c.downcast_ref::<fracdiff_core::Error>().map(fracdiff_core::Error::kind))
        .unwrap_or("usage")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = command_name(&cli.command);
    let outcome = run(&cli).and_then(|report| {
        let text = report.render(cli.common.format);
        match &cli.common.out {
            Some(path) => std::fs::write(path, &text).map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))?,
            None => print!("{text}"),
        }
        Ok(report)
    });
    match outcome {
        Ok(report) if report.status() == Status::Fail => {
            eprintln!("{}", json!({"status": "fail", "command": name, "failures": report.failures}));
            ExitCode::from(1)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({"status": "error", "command": name, "kind": error_kind(&e), "message": format!("{e:#}")}));
            ExitCode::from(2)
        }
    }
}
