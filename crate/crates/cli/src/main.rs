//! crtk: landscape complexity toolkit front end.
//!
//! Subcommands compute spectral-moment reports, Θ*_k(V, v) tables over a
//! level grid, critical volumes/levels, Monte Carlo convergence tables for
//! the mean critical-point counts, and small-dimension oracle/Monte-Carlo
//! comparison reports. Outputs are CSV or JSON, byte-identical for a fixed
//! seed regardless of the worker count (`CRTK_THREADS`).

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crtk_core::Error as CoreError;

#[derive(Debug, Parser)]
#[command(name = "crtk", version, about = "landscape k-complexity toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Covariance model as JSON, or @file to read it from a file, e.g.
    /// '{"model":"matern","nu":4,"ell":1}', '{"model":"bargmann_fock","a":5}',
    /// '{"model":"mixture","atoms":[[0.5,1.0],[0.5,3.0]]}',
    /// '{"model":"moments","lambda2":1.0,"lambda4":4.0}'.
    #[arg(long = "model-json", value_name = "JSON|@FILE")]
    model_json: String,
}

#[derive(Debug, Args)]
struct DomainArgs {
    /// Limiting volume exponent V.
    #[arg(long = "V", value_name = "F", allow_hyphen_values = true)]
    volume_exponent: Option<f64>,
    /// Ball radius R (V = log R).
    #[arg(long, value_name = "F", conflicts_with = "volume_exponent")]
    radius: Option<f64>,
    /// Cube side L, the set being [0, L/sqrt(d)]^d.
    #[arg(long, value_name = "F", conflicts_with_all = ["volume_exponent", "radius"])]
    side: Option<f64>,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Lower end of the scaled-level grid.
    #[arg(long = "v-min", allow_hyphen_values = true)]
    v_min: f64,
    /// Upper end of the scaled-level grid.
    #[arg(long = "v-max", allow_hyphen_values = true)]
    v_max: f64,
    /// Number of grid points (>= 2).
    #[arg(long, default_value_t = 201)]
    steps: usize,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = output::Format::Csv)]
    format: output::Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report lambda2, lambda4, excess, the edges E*, E**, and the critical
    /// volumes/scales V_c1, V_c2, R_c1, L_c1.
    Moments {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Emit `v,theta_k<k>,...` over a level grid.
    Theta {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        domain: DomainArgs,
        /// Comma-separated list of indices k.
        #[arg(long = "k", value_delimiter = ',', default_value = "0")]
        k_list: Vec<u32>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Critical volumes and levels as JSON: {V_c1, V_c2, regime, v_c?, v_c_k?}.
    Critical {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        domain: DomainArgs,
        /// Largest index for the per-index critical levels.
        #[arg(long = "k-max", default_value_t = 4)]
        k_max: u32,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monte Carlo convergence table `d,k,v,log_mean_over_d,se,theta,gap`.
    Mc {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        domain: DomainArgs,
        /// Comma-separated list of indices k.
        #[arg(long = "k", value_delimiter = ',', default_value = "0")]
        k_list: Vec<u32>,
        #[command(flatten)]
        grid: GridArgs,
        /// Comma-separated list of dimensions d.
        #[arg(long = "d", value_delimiter = ',', default_value = "50,100,200")]
        d_list: Vec<usize>,
        /// Monte Carlo samples per dimension.
        #[arg(long, default_value_t = 2000)]
        samples: u64,
        /// Reproducibility seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Small-dimension exact-vs-Monte-Carlo comparison report
    /// `d,k,estimator,u,log_exact,log_mc,se_log,z`.
    Oracle {
        #[command(flatten)]
        model: ModelArgs,
        /// Monte Carlo samples.
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Reproducibility seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Lower end of the raw-level grid.
        #[arg(long = "u-min", default_value_t = -2.0, allow_hyphen_values = true)]
        u_min: f64,
        /// Upper end of the raw-level grid.
        #[arg(long = "u-max", default_value_t = 2.0, allow_hyphen_values = true)]
        u_max: f64,
        /// Number of grid points.
        #[arg(long = "u-steps", default_value_t = 5)]
        u_steps: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Emit the three bundled reference panels: the Matérn nu=4, ell=1 field
    /// at V=3/4 and V=3, and the Bargmann-Fock a=5 field at V=0, with
    /// k in {0, 1, 100}.
    Figure {
        /// Directory for panel_a.csv, panel_b.csv, panel_c.csv.
        #[arg(long)]
        out: std::path::PathBuf,
        /// Grid points per panel.
        #[arg(long, default_value_t = 301)]
        steps: usize,
    },
}

/// Exit codes: 0 success, 2 invalid config, 3 numeric failure, 4 regime
/// refusal.
fn exit_code_for(err: &CoreError) -> u8 {
    match err {
        CoreError::InvalidModel(_)
        | CoreError::MomentsUndefined(_)
        | CoreError::NotSchoenberg { .. }
        | CoreError::NoFunctionalForm
        | CoreError::Domain(_)
        | CoreError::Mismatch(_) => 2,
        CoreError::OracleFailure(_) | CoreError::Decomposition(_) | CoreError::NoRoot(_) => 3,
        CoreError::RegimeRefusal(_) => 4,
    }
}

pub(crate) enum CliError {
    Config(String),
    Core(CoreError),
    Numeric(String),
    Io(std::io::Error),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("CRTK_THREADS") {
        match threads.trim().parse::<usize>() {
            Ok(n) if n >= 1 => {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .expect("worker pool is configured once, before first use");
            }
            _ => {
                eprintln!("error: CRTK_THREADS must be a positive integer, got {threads:?}");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
